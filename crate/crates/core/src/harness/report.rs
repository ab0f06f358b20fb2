use std::fmt::Write as _;

use serde::Serialize;

/// Reference per-sequence test times in milliseconds: MSRAction3D,
/// UTKinectAction3D, Florence3DAction.
pub const REFERENCE_TOTAL_MS: [(&str, f64); 3] = [("MSRAction3D", 9.982), ("UTKinect", 9.317), ("Florence", 8.886)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldReport {
    pub name: String,
    pub train: usize,
    pub test: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub protocol: String,
    /// Percentage of correctly classified test sequences over all folds.
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// Percentage per true class; `None` when the class has no test sequence.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub class_names: Option<Vec<String>>,
    pub folds: Vec<FoldReport>,
    pub mean_fold_accuracy: Option<f64>,
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl MetricsReport {
    /// Builds the report from `(true, predicted)` one-based label pairs.
    pub fn from_predictions(
        protocol: &str,
        class_count: usize,
        class_names: Option<Vec<String>>,
        predictions: &[(u32, u32)],
        folds: Vec<FoldReport>,
    ) -> Self {
        let mut confusion = vec![vec![0; class_count]; class_count];
        for &(truth, predicted) in predictions {
            confusion[truth as usize - 1][predicted as usize - 1] += 1;
        }
        let correct = (0..class_count).map(|c| confusion[c][c]).sum();
        let total = predictions.len();
        let per_class_accuracy = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| percent(row[c], n))
            })
            .collect();
        let mean_fold_accuracy =
            (folds.len() > 1).then(|| folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64);
        MetricsReport {
            protocol: protocol.to_string(),
            accuracy: percent(correct, total),
            correct,
            total,
            confusion,
            per_class_accuracy,
            class_names,
            folds,
            mean_fold_accuracy,
        }
    }

    fn class_label(&self, c: usize) -> String {
        match &self.class_names {
            Some(names) => format!("{} {}", c + 1, names[c]),
            None => (c + 1).to_string(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "protocol: {}", self.protocol);
        let _ = writeln!(s, "accuracy: {:.2}% ({}/{})", self.accuracy, self.correct, self.total);
        if let Some(mean) = self.mean_fold_accuracy {
            let _ = writeln!(s, "mean fold accuracy: {mean:.2}%");
        }
        if !self.folds.is_empty() {
            let _ = writeln!(s, "\nfold\ttrain\ttest\tcorrect\taccuracy\titerations");
            for f in &self.folds {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{:.2}%\t{}{}",
                    f.name,
                    f.train,
                    f.test,
                    f.correct,
                    f.accuracy,
                    f.iterations,
                    if f.converged { "" } else { " (max)" }
                );
            }
        }
        let _ = writeln!(s, "\nconfusion (rows true, columns predicted):");
        for (c, row) in self.confusion.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
            let _ = writeln!(s, "{:>3} |{}", c + 1, cells.join(""));
        }
        let _ = writeln!(s, "\nper-class accuracy:");
        for (c, acc) in self.per_class_accuracy.iter().enumerate() {
            match acc {
                Some(a) => {
                    let _ = writeln!(s, "  {}: {a:.2}%", self.class_label(c));
                }
                None => {
                    let _ = writeln!(s, "  {}: no test sequences", self.class_label(c));
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub sequences: usize,
    pub mean_frames: f64,
    pub extraction_ms: f64,
    pub aggregation_ms: f64,
    pub hashing_ms: f64,
    pub classification_ms: f64,
    pub total_ms: f64,
    pub reference_total_ms: Vec<(String, f64)>,
    /// `(frames, mean extraction ms)` points, when measured.
    pub extraction_scaling: Vec<(usize, f64)>,
    pub extraction_r2: Option<f64>,
}

impl TimingReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "sequences: {} (mean {:.1} frames)",
            self.sequences, self.mean_frames
        );
        let _ = writeln!(s, "phase\tmean ms per sequence");
        for (name, v) in [
            ("feature extraction", self.extraction_ms),
            ("feature aggregation", self.aggregation_ms),
            ("hash representation", self.hashing_ms),
            ("classification", self.classification_ms),
            ("total", self.total_ms),
        ] {
            let _ = writeln!(s, "{name}\t{v:.4}");
        }
        let refs: Vec<String> = self
            .reference_total_ms
            .iter()
            .map(|(n, v)| format!("{n} {v} ms"))
            .collect();
        let _ = writeln!(s, "reference totals: {}", refs.join(", "));
        if !self.extraction_scaling.is_empty() {
            let _ = writeln!(s, "\nframes\textraction ms");
            for (f, ms) in &self.extraction_scaling {
                let _ = writeln!(s, "{f}\t{ms:.4}");
            }
            if let Some(r2) = self.extraction_r2 {
                let _ = writeln!(s, "linear fit R^2: {r2:.4}");
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_invariants() {
        let preds = [(1, 1), (1, 2), (2, 2), (3, 3), (3, 3), (3, 1)];
        let r = MetricsReport::from_predictions("test", 4, None, &preds, Vec::new());
        assert_eq!(r.confusion[0], vec![1, 1, 0, 0]);
        assert_eq!(r.confusion[2], vec![1, 0, 2, 0]);
        let trace: usize = (0..4).map(|c| r.confusion[c][c]).sum();
        assert_eq!(r.correct, trace);
        assert_eq!(r.total, 6);
        assert!((r.accuracy - 400.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.per_class_accuracy[0], Some(50.0));
        assert_eq!(r.per_class_accuracy[3], None);
        for c in 0..3 {
            let n = preds.iter().filter(|p| p.0 == c as u32 + 1).count();
            assert_eq!(r.confusion[c].iter().sum::<usize>(), n);
        }
    }

    #[test]
    fn text_and_json() {
        let r = MetricsReport::from_predictions("x", 2, Some(vec!["a".into(), "b".into()]), &[(1, 1), (2, 1)], Vec::new());
        assert!(r.to_text().contains("50.00%"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["correct"], 1);
        assert_eq!(v["confusion"][1][0], 1);
    }
}

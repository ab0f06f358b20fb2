use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{TimingReport, REFERENCE_TOTAL_MS};
use crate::classifier::{predict_timed, PhaseTimes, TrainedModel};
use crate::error::{Error, Result};
use crate::skeleton::ActionSequence;
use crate::skeletonlet::sequence_features;
use crate::synthetic::{synthetic_sequence, Style};

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Mean per-sequence time of each test phase, each sequence predicted `repeats` times.
pub fn benchmark(model: &TrainedModel, sequences: &[&ActionSequence], repeats: usize) -> Result<TimingReport> {
    if sequences.is_empty() {
        return Err(Error::Data("benchmark needs at least one sequence".into()));
    }
    let repeats = repeats.max(1);
    let mut sum = PhaseTimes::default();
    for seq in sequences {
        for _ in 0..repeats {
            let (_, t) = predict_timed(seq, model)?;
            sum.extraction += t.extraction;
            sum.aggregation += t.aggregation;
            sum.hashing += t.hashing;
            sum.classification += t.classification;
        }
    }
    let n = (sequences.len() * repeats) as f64;
    let (e, a, h, c) = (
        ms(sum.extraction) / n,
        ms(sum.aggregation) / n,
        ms(sum.hashing) / n,
        ms(sum.classification) / n,
    );
    Ok(TimingReport {
        sequences: sequences.len(),
        mean_frames: sequences.iter().map(|s| s.len()).sum::<usize>() as f64 / sequences.len() as f64,
        extraction_ms: e,
        aggregation_ms: a,
        hashing_ms: h,
        classification_ms: c,
        total_ms: e + a + h + c,
        reference_total_ms: REFERENCE_TOTAL_MS.iter().map(|(n, v)| (n.to_string(), *v)).collect(),
        extraction_scaling: Vec::new(),
        extraction_r2: None,
    })
}

/// Median over `batches` of the mean extraction time of a synthetic
/// sequence of each frame count.
pub fn extraction_scaling(frame_counts: &[usize], tau: usize, batches: usize, per_batch: usize) -> Result<Vec<(usize, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    frame_counts
        .iter()
        .map(|&frames| {
            let seq = synthetic_sequence("scaling", 1, &Style::neutral(), frames, 0.01, &mut rng)?;
            let mut means = Vec::with_capacity(batches.max(1));
            for _ in 0..batches.max(1) {
                let start = Instant::now();
                for _ in 0..per_batch.max(1) {
                    std::hint::black_box(sequence_features(std::hint::black_box(&seq), tau)?);
                }
                means.push(ms(start.elapsed()) / per_batch.max(1) as f64);
            }
            means.sort_by(f64::total_cmp);
            Ok((frames, means[means.len() / 2]))
        })
        .collect()
}

/// Coefficient of determination of the least-squares line through `points`.
pub fn linear_r2(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return if syy == 0.0 { 1.0 } else { 0.0 };
    }
    sxy * sxy / (sxx * syy)
}

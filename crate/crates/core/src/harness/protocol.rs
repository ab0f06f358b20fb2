use rayon::prelude::*;

use super::config::{Protocol, RunConfig};
use super::report::{FoldReport, MetricsReport};
use crate::classifier::{predict, ModelParams, TrainedModel};
use crate::error::{Error, Result};
use crate::skeleton::{ActionSequence, Dataset};
use crate::training::train_model;

/// Indices into a dataset's sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub name: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn subject_of(seq: &ActionSequence) -> Result<u32> {
    seq.subject()
        .ok_or_else(|| Error::Config(format!("sequence {} has no subject; subject protocols need one", seq.id())))
}

pub fn cross_subject_split(ds: &Dataset, train_subjects: &[u32]) -> Result<Split> {
    let mut split = Split {
        name: "cross-subject".into(),
        train: Vec::new(),
        test: Vec::new(),
    };
    for (i, seq) in ds.sequences().iter().enumerate() {
        if train_subjects.contains(&subject_of(seq)?) {
            split.train.push(i);
        } else {
            split.test.push(i);
        }
    }
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::Config(format!(
            "cross-subject split with training subjects {train_subjects:?} leaves an empty side"
        )));
    }
    Ok(split)
}

/// The first `ceil(n/2)` sequences of each class, in dataset order, train.
pub fn class_half_split(ds: &Dataset) -> Result<Split> {
    let mut seen = vec![0usize; ds.class_count()];
    let totals = ds.sequences().iter().fold(vec![0usize; ds.class_count()], |mut acc, s| {
        acc[s.label().unwrap_or(1) as usize - 1] += 1;
        acc
    });
    let mut split = Split {
        name: "class-half".into(),
        train: Vec::new(),
        test: Vec::new(),
    };
    for (i, seq) in ds.sequences().iter().enumerate() {
        let c = seq.label().ok_or_else(|| Error::Data(format!("sequence {} has no label", seq.id())))? as usize - 1;
        if seen[c] < totals[c].div_ceil(2) {
            split.train.push(i);
        } else {
            split.test.push(i);
        }
        seen[c] += 1;
    }
    if split.test.is_empty() {
        return Err(Error::Config("class-half split needs at least two sequences in some class".into()));
    }
    Ok(split)
}

pub fn loso_splits(ds: &Dataset) -> Result<Vec<(u32, Split)>> {
    for seq in ds.sequences() {
        subject_of(seq)?;
    }
    let subjects = ds.subjects();
    if subjects.len() < 2 {
        return Err(Error::Config(format!(
            "leave-one-subject-out needs at least two subjects, found {}",
            subjects.len()
        )));
    }
    Ok(subjects
        .into_iter()
        .map(|s| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..ds.len()).partition(|&i| ds.sequences()[i].subject() == Some(s));
            (
                s,
                Split {
                    name: format!("subject {s}"),
                    train,
                    test,
                },
            )
        })
        .collect())
}

/// Seed of the fold that holds out `subject`.
pub fn fold_seed(base: u64, subject: u32) -> u64 {
    base ^ u64::from(subject).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub struct SplitOutcome {
    pub predictions: Vec<(u32, u32)>,
    pub fold: FoldReport,
    pub model: TrainedModel,
}

pub fn run_split(ds: &Dataset, split: &Split, params: &ModelParams) -> Result<SplitOutcome> {
    let train: Vec<&ActionSequence> = split.train.iter().map(|&i| &ds.sequences()[i]).collect();
    let outcome = train_model(&train, ds.class_count(), ds.class_names().map(<[String]>::to_vec), params)?;
    let predictions = split
        .test
        .iter()
        .map(|&i| {
            let seq = &ds.sequences()[i];
            let truth = seq.label().ok_or_else(|| Error::Data(format!("sequence {} has no label", seq.id())))?;
            Ok((truth, predict(seq, &outcome.model)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let correct = predictions.iter().filter(|(t, p)| t == p).count();
    let fold = FoldReport {
        name: split.name.clone(),
        train: split.train.len(),
        test: split.test.len(),
        correct,
        accuracy: 100.0 * correct as f64 / predictions.len().max(1) as f64,
        iterations: outcome.iterations,
        converged: outcome.converged,
    };
    Ok(SplitOutcome {
        predictions,
        fold,
        model: outcome.model,
    })
}

/// Trains and tests under the configured protocol.
pub fn evaluate(ds: &Dataset, config: &RunConfig) -> Result<MetricsReport> {
    config.validate()?;
    let names = ds.class_names().map(<[String]>::to_vec);
    let outcomes = match config.protocol {
        Protocol::CrossSubject => vec![run_split(ds, &cross_subject_split(ds, &config.train_subjects)?, &config.model)?],
        Protocol::ClassHalf => vec![run_split(ds, &class_half_split(ds)?, &config.model)?],
        Protocol::LeaveOneSubjectOut => loso_splits(ds)?
            .par_iter()
            .map(|(subject, split)| {
                let mut params = config.model.clone();
                params.sha.seed = fold_seed(params.sha.seed, *subject);
                run_split(ds, split, &params)
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let predictions: Vec<(u32, u32)> = outcomes.iter().flat_map(|o| o.predictions.iter().copied()).collect();
    let folds = outcomes.into_iter().map(|o| o.fold).collect();
    Ok(MetricsReport::from_predictions(
        config.protocol.name(),
        ds.class_count(),
        names,
        &predictions,
        folds,
    ))
}

/// Tests an already trained model on every sequence of `ds`.
pub fn evaluate_model(ds: &Dataset, model: &TrainedModel) -> Result<MetricsReport> {
    if ds.class_count() > model.class_count {
        return Err(Error::Model(format!(
            "dataset has {} classes, model knows {}",
            ds.class_count(),
            model.class_count
        )));
    }
    let predictions = ds
        .sequences()
        .par_iter()
        .map(|seq| {
            let truth = seq.label().ok_or_else(|| Error::Data(format!("sequence {} has no label", seq.id())))?;
            Ok((truth, predict(seq, model)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricsReport::from_predictions(
        "held-out model",
        model.class_count,
        model.class_names.clone(),
        &predictions,
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, SynthConfig};

    fn small() -> Dataset {
        generate(&SynthConfig {
            subjects: 4,
            episodes: 2,
            frames: 12,
            ..SynthConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn cross_subject_partitions_by_subject() {
        let ds = small();
        let split = cross_subject_split(&ds, &[1, 3]).unwrap();
        assert_eq!(split.train.len() + split.test.len(), ds.len());
        for &i in &split.train {
            assert!([1, 3].contains(&ds.sequences()[i].subject().unwrap()));
        }
        for &i in &split.test {
            assert!([2, 4].contains(&ds.sequences()[i].subject().unwrap()));
        }
        assert!(cross_subject_split(&ds, &[1, 2, 3, 4]).is_err());
    }

    #[test]
    fn class_half_takes_first_half_per_class() {
        let ds = small();
        let split = class_half_split(&ds).unwrap();
        assert_eq!(split.train.len(), 12);
        assert_eq!(split.test.len(), 12);
        for c in 1..=3 {
            let train = split.train.iter().filter(|&&i| ds.sequences()[i].label() == Some(c)).count();
            assert_eq!(train, 4);
        }
    }

    #[test]
    fn loso_covers_every_sequence_once() {
        let ds = small();
        let folds = loso_splits(&ds).unwrap();
        assert_eq!(folds.len(), 4);
        let mut tested: Vec<usize> = folds.iter().flat_map(|(_, s)| s.test.clone()).collect();
        tested.sort();
        assert_eq!(tested, (0..ds.len()).collect::<Vec<_>>());
        for (s, split) in &folds {
            assert!(split.train.iter().all(|&i| ds.sequences()[i].subject() != Some(*s)));
        }
    }

    #[test]
    fn single_subject_loso_is_config_error() {
        let ds = generate(&SynthConfig {
            subjects: 1,
            frames: 10,
            ..SynthConfig::default()
        })
        .unwrap();
        let err = loso_splits(&ds).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn fold_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (1..=10).map(|s| fold_seed(7, s)).collect();
        assert_eq!(seeds.len(), 10);
    }
}

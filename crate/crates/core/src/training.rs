//! Full training pipeline from labelled sequences to a [`TrainedModel`].

use rayon::prelude::*;

use crate::classifier::{ModelParams, TrainedModel};
use crate::codebook::{aggregate_training, build_codebooks, denoise, power_normalize};
use crate::error::{Error, Result};
use crate::sha::{train_sha, FeatureMatrix, IterationRecord};
use crate::skeleton::ActionSequence;
use crate::skeletonlet::{sequence_features, SequenceFeatureSet};

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: TrainedModel,
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    /// Training features swapped for their predecessor by denoising,
    /// counted over every (family, run) pair.
    pub replaced_features: usize,
}

pub fn extract_all(sequences: &[&ActionSequence], tau: usize) -> Result<Vec<SequenceFeatureSet>> {
    sequences.par_iter().map(|seq| sequence_features(seq, tau)).collect()
}

pub fn train_model(
    sequences: &[&ActionSequence],
    class_count: usize,
    class_names: Option<Vec<String>>,
    params: &ModelParams,
) -> Result<TrainingOutcome> {
    params.sha.validate()?;
    if sequences.is_empty() {
        return Err(Error::Data("no training sequences".into()));
    }
    let labels = sequences
        .iter()
        .map(|s| {
            s.label()
                .filter(|&l| l as usize <= class_count)
                .ok_or_else(|| Error::Data(format!("training sequence {} has no valid label", s.id())))
        })
        .collect::<Result<Vec<u32>>>()?;

    let features = extract_all(sequences, params.tau).map_err(|e| e.in_stage("feature extraction"))?;
    let (codebooks, assignment) = build_codebooks(&features, params.clusters, params.runs, params.sha.seed)
        .map_err(|e| e.in_stage("codebook construction"))?;
    let repaired =
        denoise(&features, &assignment, &codebooks, params.epsilon).map_err(|e| e.in_stage("denoising"))?;
    let descriptors: Vec<Vec<f64>> = aggregate_training(&features, &repaired, &codebooks)
        .map_err(|e| e.in_stage("feature aggregation"))?
        .iter()
        .map(|v| power_normalize(v).values)
        .collect();

    let y = FeatureMatrix::from_columns(&descriptors, labels.clone(), class_count)?;
    let state = train_sha(&y, &params.sha).map_err(|e| e.in_stage("hash learning"))?;
    let model = TrainedModel::new(
        codebooks,
        state.w,
        state.q,
        state.t,
        state.b,
        labels,
        params.clone(),
        class_count,
        class_names,
    )?;
    Ok(TrainingOutcome {
        model,
        trace: state.trace,
        iterations: state.iterations,
        converged: state.converged,
        replaced_features: repaired.replaced_count(),
    })
}


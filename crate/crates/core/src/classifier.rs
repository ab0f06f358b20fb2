//! Hamming-space nearest-neighbor classification of sequences.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::codebook::{aggregate, power_normalize, CodebookSet, LaksVector};
use crate::error::{Error, Result};
use crate::sha::{HashCodes, ShaParams};
use crate::skeleton::ActionSequence;
use crate::skeletonlet::sequence_features;

pub const FORMAT_VERSION: u32 = 1;

/// Everything besides the learned matrices that a model needs to replay
/// the feature pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub sha: ShaParams,
    pub clusters: usize,
    pub runs: usize,
    pub tau: usize,
    pub epsilon: usize,
}

/// A ±1 code packed into 64-bit words; bit set means +1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    words: Vec<u64>,
    len: usize,
}

impl BinaryCode {
    pub fn from_signs(signs: impl IntoIterator<Item = f64>) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for (i, s) in signs.into_iter().enumerate() {
            if i % 64 == 0 {
                words.push(0);
            }
            if s >= 0.0 {
                words[i / 64] |= 1 << (i % 64);
            }
            len = i + 1;
        }
        BinaryCode { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn signs(&self) -> Vec<i8> {
        (0..self.len)
            .map(|i| if self.words[i / 64] >> (i % 64) & 1 == 1 { 1 } else { -1 })
            .collect()
    }

    pub fn hamming(&self, other: &BinaryCode) -> u32 {
        debug_assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub codebooks: CodebookSet,
    pub w: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub b: HashCodes,
    pub train_labels: Vec<u32>,
    pub params: ModelParams,
    pub class_count: usize,
    pub class_names: Option<Vec<String>>,
    pub format_version: u32,
    // Wᵀ T, ℓ × D
    projection: DMatrix<f64>,
    train_codes: Vec<BinaryCode>,
}

impl TrainedModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        codebooks: CodebookSet,
        w: DMatrix<f64>,
        q: DMatrix<f64>,
        t: DMatrix<f64>,
        b: HashCodes,
        train_labels: Vec<u32>,
        params: ModelParams,
        class_count: usize,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let bits = b.bits();
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Model(what.to_string())) };
        check(b.len() == train_labels.len(), "code count differs from label count")?;
        check(!train_labels.is_empty(), "model has no training codes")?;
        check(t.ncols() == codebooks.descriptor_dim(), "dictionary width differs from descriptor dimension")?;
        check(w.nrows() == t.nrows(), "projection rows differ from atom count")?;
        check(w.ncols() == bits, "projection columns differ from code length")?;
        check(q.nrows() == bits && q.ncols() == class_count, "classifier shape mismatch")?;
        check(
            train_labels.iter().all(|&l| l >= 1 && l as usize <= class_count),
            "training label outside 1..=C",
        )?;
        check(
            codebooks.clusters() == params.clusters && codebooks.runs() == params.runs,
            "codebook shape differs from stored K/T",
        )?;
        check(
            class_names.as_ref().is_none_or(|n| n.len() == class_count),
            "class name count differs from class count",
        )?;
        let projection = w.transpose() * &t;
        let train_codes = (0..b.len())
            .map(|n| BinaryCode::from_signs(b.matrix().column(n).iter().copied()))
            .collect();
        Ok(TrainedModel {
            codebooks,
            w,
            q,
            t,
            b,
            train_labels,
            params,
            class_count,
            class_names,
            format_version: FORMAT_VERSION,
            projection,
            train_codes,
        })
    }

    pub fn code_len(&self) -> usize {
        self.b.bits()
    }

    pub fn descriptor_dim(&self) -> usize {
        self.codebooks.descriptor_dim()
    }

    pub fn train_codes(&self) -> &[BinaryCode] {
        &self.train_codes
    }

    pub fn class_name(&self, label: u32) -> Option<&str> {
        self.class_names.as_ref()?.get(label as usize - 1).map(String::as_str)
    }
}

/// `sgn(Wᵀ T y)` of a power-normalized descriptor, with `sgn(0) = +1`.
pub fn encode(y: &LaksVector, model: &TrainedModel) -> Result<BinaryCode> {
    if y.values.len() != model.descriptor_dim() {
        return Err(Error::Model(format!(
            "descriptor has {} values, model expects {}",
            y.values.len(),
            model.descriptor_dim()
        )));
    }
    let v = DVector::from_column_slice(&y.values);
    let projected = &model.projection * v;
    Ok(BinaryCode::from_signs(projected.iter().copied()))
}

/// Index of the closest training code; ties go to the lowest index.
pub fn nearest_code(code: &BinaryCode, model: &TrainedModel) -> Result<usize> {
    if model.train_codes.is_empty() {
        return Err(Error::Model("model has no training codes".into()));
    }
    if code.len() != model.code_len() {
        return Err(Error::Model(format!(
            "code has {} bits, model uses {}",
            code.len(),
            model.code_len()
        )));
    }
    let mut best = (u32::MAX, 0);
    for (i, train) in model.train_codes.iter().enumerate() {
        let d = code.hamming(train);
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best.1)
}

pub fn hamming_nn(code: &BinaryCode, model: &TrainedModel) -> Result<u32> {
    Ok(model.train_labels[nearest_code(code, model)?])
}

/// Wall-clock time spent in each test phase for one sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub extraction: Duration,
    pub aggregation: Duration,
    pub hashing: Duration,
    pub classification: Duration,
}

impl PhaseTimes {
    pub fn total(&self) -> Duration {
        self.extraction + self.aggregation + self.hashing + self.classification
    }
}

/// Power-normalized descriptor of a sequence under the model's codebooks.
pub fn describe(seq: &ActionSequence, model: &TrainedModel) -> Result<LaksVector> {
    let feats = sequence_features(seq, model.params.tau).map_err(|e| e.in_stage("feature extraction"))?;
    let y = aggregate(&feats, &model.codebooks).map_err(|e| e.in_stage("feature aggregation"))?;
    Ok(power_normalize(&y))
}

pub fn predict(seq: &ActionSequence, model: &TrainedModel) -> Result<u32> {
    predict_timed(seq, model).map(|(label, _)| label)
}

pub fn predict_timed(seq: &ActionSequence, model: &TrainedModel) -> Result<(u32, PhaseTimes)> {
    let start = Instant::now();
    let feats = sequence_features(seq, model.params.tau).map_err(|e| e.in_stage("feature extraction"))?;
    let extracted = Instant::now();
    let y = aggregate(&feats, &model.codebooks).map_err(|e| e.in_stage("feature aggregation"))?;
    let y = power_normalize(&y);
    let aggregated = Instant::now();
    let code = encode(&y, model).map_err(|e| e.in_stage("hash representation"))?;
    let hashed = Instant::now();
    let label = hamming_nn(&code, model).map_err(|e| e.in_stage("classification"))?;
    let classified = Instant::now();
    Ok((
        label,
        PhaseTimes {
            extraction: extracted - start,
            aggregation: aggregated - extracted,
            hashing: hashed - aggregated,
            classification: classified - hashed,
        },
    ))
}

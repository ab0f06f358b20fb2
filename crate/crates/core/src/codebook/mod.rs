//! Codebooks over offset-feature families, noisy-cluster repair, and
//! residual aggregation into a fixed-length sequence descriptor.

pub mod kmeans;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::skeletonlet::{SequenceFeatureSet, FAMILY_COUNT, FAMILY_DIMS, FEATURE_DIM_TOTAL};
use kmeans::{kmeans, nearest_center, KMeansConfig};

pub const DEFAULT_CLUSTERS: usize = 23;
pub const DEFAULT_RUNS: usize = 5;

/// `K` centers for every (family, run) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSet {
    clusters: usize,
    runs: usize,
    seed: u64,
    // indexed by family * runs + run, each `clusters * dim` values
    centers: Vec<Vec<f64>>,
}

impl CodebookSet {
    /// Assembles a codebook from explicit centers, `centers[family][run]`
    /// flattened as `clusters * FAMILY_DIMS[family]` values.
    pub fn from_centers(clusters: usize, runs: usize, seed: u64, centers: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if clusters == 0 || runs == 0 {
            return Err(Error::Config("codebooks need K >= 1 and T >= 1".into()));
        }
        if centers.len() != FAMILY_COUNT {
            return Err(Error::Model(format!("expected {FAMILY_COUNT} families of centers")));
        }
        let mut flat = Vec::with_capacity(FAMILY_COUNT * runs);
        for (family, per_run) in centers.into_iter().enumerate() {
            if per_run.len() != runs {
                return Err(Error::Model(format!("family {family}: expected {runs} runs")));
            }
            for c in per_run {
                if c.len() != clusters * FAMILY_DIMS[family] {
                    return Err(Error::Model(format!(
                        "family {family}: expected {} center values, got {}",
                        clusters * FAMILY_DIMS[family],
                        c.len()
                    )));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Model(format!("family {family}: non-finite center")));
                }
                flat.push(c);
            }
        }
        Ok(CodebookSet {
            clusters,
            runs,
            seed,
            centers: flat,
        })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Flat `clusters * dim` centers of one family and run.
    pub fn centers(&self, family: usize, run: usize) -> &[f64] {
        &self.centers[family * self.runs + run]
    }

    pub fn center(&self, family: usize, run: usize, cluster: usize) -> &[f64] {
        let dim = FAMILY_DIMS[family];
        &self.centers(family, run)[cluster * dim..(cluster + 1) * dim]
    }

    pub fn nearest(&self, family: usize, run: usize, feature: &[f64]) -> usize {
        nearest_center(self.centers(family, run), FAMILY_DIMS[family], feature).0
    }

    /// Length of every aggregated descriptor: 78 · K · T.
    pub fn descriptor_dim(&self) -> usize {
        FEATURE_DIM_TOTAL * self.clusters * self.runs
    }

    /// Offset of block (family, cluster, run) inside a descriptor. Families
    /// are outermost, then clusters, then runs.
    pub fn block_offset(&self, family: usize, cluster: usize, run: usize) -> usize {
        let family_base: usize = FAMILY_DIMS[..family].iter().sum::<usize>() * self.clusters * self.runs;
        family_base + (cluster * self.runs + run) * FAMILY_DIMS[family]
    }
}

/// Cluster label of every pooled training feature, per (family, run).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    runs: usize,
    // [family][sequence] -> first pooled index of that sequence's features
    offsets: Vec<Vec<usize>>,
    labels: Vec<Vec<usize>>,
    counts: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    pub fn labels(&self, family: usize, run: usize) -> &[usize] {
        &self.labels[family * self.runs + run]
    }

    /// Cluster cardinalities of one (family, run) clustering.
    pub fn counts(&self, family: usize, run: usize) -> &[usize] {
        &self.counts[family * self.runs + run]
    }

    /// Pooled index of feature `position` of training sequence `sequence`.
    pub fn pooled_index(&self, family: usize, sequence: usize, position: usize) -> usize {
        self.offsets[family][sequence] + position
    }

    pub fn label_of(&self, family: usize, run: usize, sequence: usize, position: usize) -> usize {
        self.labels(family, run)[self.pooled_index(family, sequence, position)]
    }

    fn check_consistent(&self, train: &[SequenceFeatureSet]) -> Result<()> {
        for family in 0..FAMILY_COUNT {
            let offsets = &self.offsets[family];
            if offsets.len() != train.len() + 1 {
                return Err(Error::Config(format!(
                    "assignment covers {} sequences, got {}",
                    offsets.len().saturating_sub(1),
                    train.len()
                )));
            }
            for (n, seq) in train.iter().enumerate() {
                if offsets[n + 1] - offsets[n] != seq.family(family).len() {
                    return Err(Error::Config(format!(
                        "assignment does not match features of sequence '{}'",
                        seq.sequence_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Runs `runs` seeded K-means clusterings on every pooled feature family.
/// Run `t` uses seed `seed + t`.
pub fn build_codebooks(
    train: &[SequenceFeatureSet],
    clusters: usize,
    runs: usize,
    seed: u64,
) -> Result<(CodebookSet, ClusterAssignment)> {
    if clusters == 0 || runs == 0 {
        return Err(Error::Config("codebooks need K >= 1 and T >= 1".into()));
    }
    let mut pooled: Vec<Vec<f64>> = Vec::with_capacity(FAMILY_COUNT);
    let mut offsets: Vec<Vec<usize>> = Vec::with_capacity(FAMILY_COUNT);
    for family in 0..FAMILY_COUNT {
        let mut data = Vec::new();
        let mut off = Vec::with_capacity(train.len() + 1);
        off.push(0);
        for seq in train {
            data.extend_from_slice(seq.family(family).as_flat());
            off.push(off.last().unwrap() + seq.family(family).len());
        }
        let n = *off.last().unwrap();
        if n == 0 {
            return Err(Error::Data(format!("feature family {} is empty", family + 1)));
        }
        if clusters > n {
            return Err(Error::Config(format!(
                "K = {clusters} exceeds the {n} pooled features of family {}",
                family + 1
            )));
        }
        pooled.push(data);
        offsets.push(off);
    }

    let config = KMeansConfig::new(clusters);
    let results = (0..FAMILY_COUNT * runs)
        .into_par_iter()
        .map(|idx| {
            let (family, run) = (idx / runs, idx % runs);
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(run as u64));
            kmeans(&pooled[family], FAMILY_DIMS[family], &config, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut centers = Vec::with_capacity(results.len());
    let mut labels = Vec::with_capacity(results.len());
    let mut counts = Vec::with_capacity(results.len());
    for r in results {
        centers.push(r.centers);
        labels.push(r.assignment);
        counts.push(r.counts);
    }
    Ok((
        CodebookSet {
            clusters,
            runs,
            seed,
            centers,
        },
        ClusterAssignment {
            runs,
            offsets,
            labels,
            counts,
        },
    ))
}

/// Training features after noisy-cluster repair, per (family, run).
#[derive(Debug, Clone, PartialEq)]
pub struct RepairedFeatures {
    runs: usize,
    offsets: Vec<Vec<usize>>,
    labels: Vec<Vec<usize>>,
    replaced: Vec<Vec<bool>>,
}

impl RepairedFeatures {
    /// Whether the feature was swapped for its previous-frame counterpart in
    /// the given clustering run.
    pub fn is_replaced(&self, family: usize, run: usize, sequence: usize, position: usize) -> bool {
        self.replaced[family * self.runs + run][self.offsets[family][sequence] + position]
    }

    pub fn label(&self, family: usize, run: usize, sequence: usize, position: usize) -> usize {
        self.labels[family * self.runs + run][self.offsets[family][sequence] + position]
    }

    /// The feature value used for aggregation, after repair.
    pub fn value<'a>(
        &self,
        train: &'a [SequenceFeatureSet],
        family: usize,
        run: usize,
        sequence: usize,
        position: usize,
    ) -> &'a [f64] {
        let src = if self.is_replaced(family, run, sequence, position) {
            position - 1
        } else {
            position
        };
        train[sequence].family(family).get(src)
    }

    pub fn replaced_count(&self) -> usize {
        self.replaced.iter().map(|r| r.iter().filter(|&&b| b).count()).sum()
    }
}

/// Replaces every feature that fell in a cluster with fewer than `epsilon`
/// members by the same-family feature of the previous frame, then assigns
/// the replacement to its nearest existing center.
///
/// Replacement is decided independently for each clustering run. The first
/// feature of a sequence has no predecessor and is kept. Replacements copy
/// the predecessor's original value (single pass).
pub fn denoise(
    train: &[SequenceFeatureSet],
    assignment: &ClusterAssignment,
    codebooks: &CodebookSet,
    epsilon: usize,
) -> Result<RepairedFeatures> {
    assignment.check_consistent(train)?;
    let runs = codebooks.runs();
    let mut labels = assignment.labels.clone();
    let mut replaced: Vec<Vec<bool>> = labels.iter().map(|l| vec![false; l.len()]).collect();
    for family in 0..FAMILY_COUNT {
        for run in 0..runs {
            let idx = family * runs + run;
            let counts = &assignment.counts[idx];
            if counts.iter().all(|&c| c >= epsilon) {
                continue;
            }
            for (n, seq) in train.iter().enumerate() {
                let base = assignment.offsets[family][n];
                let feats = seq.family(family);
                for pos in 1..feats.len() {
                    let original = assignment.labels[idx][base + pos];
                    if counts[original] < epsilon {
                        replaced[idx][base + pos] = true;
                        labels[idx][base + pos] = codebooks.nearest(family, run, feats.get(pos - 1));
                    }
                }
            }
        }
    }
    Ok(RepairedFeatures {
        runs,
        offsets: assignment.offsets.clone(),
        labels,
        replaced,
    })
}

/// Aggregated residual descriptor of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LaksVector {
    pub sequence_id: String,
    pub values: Vec<f64>,
}

fn accumulate(out: &mut [f64], codebooks: &CodebookSet, family: usize, run: usize, cluster: usize, feature: &[f64]) {
    let offset = codebooks.block_offset(family, cluster, run);
    let center = codebooks.center(family, run, cluster);
    for ((o, f), c) in out[offset..offset + feature.len()].iter_mut().zip(feature).zip(center) {
        *o += f - c;
    }
}

fn check_dims(seq: &SequenceFeatureSet) -> Result<()> {
    for (family, feats) in seq.families().iter().enumerate() {
        if feats.dim() != FAMILY_DIMS[family] {
            return Err(Error::Config(format!(
                "family {} has dimension {}, codebook expects {}",
                family + 1,
                feats.dim(),
                FAMILY_DIMS[family]
            )));
        }
    }
    if seq.families().len() != FAMILY_COUNT {
        return Err(Error::Config("feature set does not have nine families".into()));
    }
    Ok(())
}

/// Sums residuals against the nearest center of every run.
pub fn aggregate(seq: &SequenceFeatureSet, codebooks: &CodebookSet) -> Result<LaksVector> {
    check_dims(seq)?;
    let mut values = vec![0.0; codebooks.descriptor_dim()];
    for family in 0..FAMILY_COUNT {
        for feature in seq.family(family).iter() {
            for run in 0..codebooks.runs() {
                let k = codebooks.nearest(family, run, feature);
                accumulate(&mut values, codebooks, family, run, k, feature);
            }
        }
    }
    Ok(LaksVector {
        sequence_id: seq.sequence_id.clone(),
        values,
    })
}

/// Descriptors of the training sequences using their repaired features and
/// recorded cluster labels.
pub fn aggregate_training(
    train: &[SequenceFeatureSet],
    repaired: &RepairedFeatures,
    codebooks: &CodebookSet,
) -> Result<Vec<LaksVector>> {
    train
        .par_iter()
        .enumerate()
        .map(|(n, seq)| {
            check_dims(seq)?;
            let mut values = vec![0.0; codebooks.descriptor_dim()];
            for family in 0..FAMILY_COUNT {
                for pos in 0..seq.family(family).len() {
                    for run in 0..codebooks.runs() {
                        let k = repaired.label(family, run, n, pos);
                        let feature = repaired.value(train, family, run, n, pos);
                        accumulate(&mut values, codebooks, family, run, k, feature);
                    }
                }
            }
            Ok(LaksVector {
                sequence_id: seq.sequence_id.clone(),
                values,
            })
        })
        .collect()
}

/// Elementwise signed square root.
pub fn power_normalize(y: &LaksVector) -> LaksVector {
    LaksVector {
        sequence_id: y.sequence_id.clone(),
        values: y.values.iter().map(|&v| v.signum() * v.abs().sqrt()).collect(),
    }
}

//! Seeded Lloyd K-means with k-means++ initialization.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once the relative distortion decrease falls below this.
    pub rel_tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        KMeansConfig {
            k,
            max_iter: 100,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// `k * dim` values, center `c` at `c * dim..`.
    pub centers: Vec<f64>,
    pub assignment: Vec<usize>,
    pub counts: Vec<usize>,
    /// Distortion after every Lloyd iteration.
    pub distortion: Vec<f64>,
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest center and the squared distance to it. Ties go to
/// the lowest index.
#[inline]
pub fn nearest_center(centers: &[f64], dim: usize, point: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.chunks_exact(dim).enumerate() {
        let d = squared_distance(center, point);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init<R: Rng>(data: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let n = data.len() / dim;
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centers = Vec::with_capacity(k * dim);
    centers.extend_from_slice(point(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| squared_distance(point(i), &centers[..dim])).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            // rounding can leave `pick` on a zero-weight point
            if d2[pick] == 0.0 {
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = centers.len();
        centers.extend_from_slice(point(chosen));
        for (i, slot) in d2.iter_mut().enumerate() {
            let d = squared_distance(point(i), &centers[c..c + dim]);
            if d < *slot {
                *slot = d;
            }
        }
    }
    centers
}

/// Clusters the row-major `data` (`dim` columns) into `config.k` groups.
///
/// On return the centers are exactly the means of the recorded assignment
/// and no cluster is empty.
pub fn kmeans<R: Rng>(data: &[f64], dim: usize, config: &KMeansConfig, rng: &mut R) -> Result<KMeansResult> {
    let n = if dim == 0 { 0 } else { data.len() / dim };
    let k = config.k;
    if n == 0 {
        return Err(Error::Data("k-means on an empty point set".into()));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("k-means with K = {k} on {n} points")));
    }
    let point = |i: usize| &data[i * dim..(i + 1) * dim];

    let mut centers = plus_plus_init(data, dim, k, rng);
    let mut assignment = vec![0usize; n];
    let mut dist = vec![0f64; n];
    let mut counts = vec![0usize; k];
    let mut history: Vec<f64> = Vec::new();

    for _ in 0..config.max_iter.max(1) {
        counts.fill(0);
        for i in 0..n {
            let (c, d) = nearest_center(&centers, dim, point(i));
            assignment[i] = c;
            dist[i] = d;
            counts[c] += 1;
        }

        // Re-seed empty clusters with the point farthest from its center,
        // taken from a cluster that keeps at least one member.
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let donor = (0..n)
                .filter(|&i| counts[assignment[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                .expect("k <= n guarantees a cluster with two members");
            counts[assignment[donor]] -= 1;
            assignment[donor] = empty;
            counts[empty] = 1;
            dist[donor] = 0.0;
            centers[empty * dim..(empty + 1) * dim].copy_from_slice(point(donor));
        }

        centers.fill(0.0);
        for i in 0..n {
            let c = assignment[i];
            for (acc, v) in centers[c * dim..(c + 1) * dim].iter_mut().zip(point(i)) {
                *acc += v;
            }
        }
        for (c, &count) in counts.iter().enumerate() {
            let inv = 1.0 / count as f64;
            centers[c * dim..(c + 1) * dim].iter_mut().for_each(|v| *v *= inv);
        }

        let distortion: f64 = (0..n)
            .map(|i| squared_distance(point(i), &centers[assignment[i] * dim..(assignment[i] + 1) * dim]))
            .sum();
        let converged = match history.last() {
            Some(&prev) => prev - distortion <= config.rel_tol * prev,
            None => distortion == 0.0,
        };
        history.push(distortion);
        if converged {
            break;
        }
    }

    Ok(KMeansResult {
        centers,
        assignment,
        counts,
        distortion: history,
    })
}

//! Supervised learning of binary codes through an analysis projection.
//!
//! Jointly learns an analysis dictionary `T`, a projection `W`, a linear
//! classifier `Q` and binary training codes `B` by alternating exact block
//! updates of a relaxed objective. The group-sparsity constraint on `T Y_c`
//! is split off through per-class auxiliaries `T′_c` with Lagrange
//! multipliers `Λ_c` and an increasing penalty `μ`.

mod linalg;
pub mod subproblems;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use linalg::{ensure_finite, mean_gram_diagonal};
pub use subproblems::{
    dcc_objective, l21_norm, objective, row_shrink, solve_b_dcc, solve_q, solve_t, solve_tprime, solve_w,
};
use subproblems::{
    class_block, objective_with_projection, scatter_classes, solve_t_with_factor, solve_tprime_projected,
    solve_w_projected, t_right_factor,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ShaParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    /// Initial penalty μ₀.
    pub mu0: f64,
    /// Penalty growth factor per outer iteration.
    pub rho: f64,
    pub mu_max: f64,
    /// Hash code length ℓ.
    pub code_len: usize,
    /// Number of analysis atoms d.
    pub atoms: usize,
    pub max_iter: usize,
    /// Stop when fewer than this fraction of code bits flip in an iteration.
    pub tol: f64,
    /// Relative ridge; the absolute stabilizer is `ridge` times the mean
    /// diagonal of the Gram matrix being inverted.
    pub ridge: f64,
    pub dcc_sweeps: usize,
    pub seed: u64,
}

impl Default for ShaParams {
    fn default() -> Self {
        ShaParams {
            lambda1: 1.0,
            lambda2: 1.0,
            lambda3: 1e-3,
            mu0: 1.0,
            rho: 1.1,
            mu_max: 1e6,
            code_len: 32,
            atoms: 64,
            max_iter: 50,
            tol: 1e-3,
            ridge: 1e-6,
            dcc_sweeps: 20,
            seed: 0,
        }
    }
}

impl ShaParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("lambda3", self.lambda3)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.rho > 1.0) {
            return bad(format!("rho must exceed 1, got {}", self.rho));
        }
        if !(self.mu0 > 0.0 && self.mu_max >= self.mu0) {
            return bad(format!("need 0 < mu0 <= mu_max, got {} and {}", self.mu0, self.mu_max));
        }
        if self.code_len == 0 || self.atoms == 0 || self.max_iter == 0 || self.dcc_sweeps == 0 {
            return bad("code length, atom count, max_iter and dcc_sweeps must be at least 1".into());
        }
        if !(self.ridge >= 0.0) || !(self.tol >= 0.0) {
            return bad("ridge and tol must be non-negative".into());
        }
        Ok(())
    }
}

/// Power-normalized descriptors as columns, with their class partition.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    y: DMatrix<f64>,
    labels: Vec<u32>,
    class_count: usize,
    class_columns: Vec<Vec<usize>>,
}

impl FeatureMatrix {
    /// `y` is D × N; `labels[n]` is the one-based class of column `n`.
    pub fn new(y: DMatrix<f64>, labels: Vec<u32>, class_count: usize) -> Result<Self> {
        if y.ncols() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature columns but {} labels",
                y.ncols(),
                labels.len()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Data("no training samples".into()));
        }
        ensure_finite(&y, "feature matrix", "Y")?;
        let mut class_columns = vec![Vec::new(); class_count];
        for (n, &label) in labels.iter().enumerate() {
            if label == 0 || label as usize > class_count {
                return Err(Error::Data(format!("label {label} outside 1..={class_count}")));
            }
            class_columns[label as usize - 1].push(n);
        }
        Ok(FeatureMatrix {
            y,
            labels,
            class_count,
            class_columns,
        })
    }

    /// Stacks descriptor vectors as columns.
    pub fn from_columns(columns: &[Vec<f64>], labels: Vec<u32>, class_count: usize) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Data("descriptor columns differ in length".into()));
        }
        let y = DMatrix::from_iterator(rows, columns.len(), columns.iter().flatten().copied());
        FeatureMatrix::new(y, labels, class_count)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_columns(&self) -> &[Vec<usize>] {
        &self.class_columns
    }

    pub fn samples(&self) -> usize {
        self.y.ncols()
    }

    pub fn features(&self) -> usize {
        self.y.nrows()
    }

    /// Columns of one class, d × N_c.
    pub fn class_matrix(&self, class: usize) -> DMatrix<f64> {
        self.y.select_columns(&self.class_columns[class])
    }

    /// One-hot C × N label matrix.
    pub fn label_matrix(&self) -> DMatrix<f64> {
        label_matrix(&self.labels, self.class_count)
    }
}

pub fn label_matrix(labels: &[u32], class_count: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(class_count, labels.len());
    for (n, &label) in labels.iter().enumerate() {
        m[(label as usize - 1, n)] = 1.0;
    }
    m
}

/// A ±1 code matrix, one code per column.
#[derive(Debug, Clone, PartialEq)]
pub struct HashCodes(DMatrix<f64>);

impl HashCodes {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().all(|&v| v == 1.0 || v == -1.0) {
            Ok(HashCodes(m))
        } else {
            Err(Error::Data("hash codes must be +1 or -1".into()))
        }
    }

    /// Elementwise sign with `sgn(0) = +1`.
    pub fn sign_of(m: &DMatrix<f64>) -> Self {
        HashCodes(m.map(linalg::sign))
    }

    pub(crate) fn from_signs(m: DMatrix<f64>) -> Self {
        debug_assert!(m.iter().all(|&v| v == 1.0 || v == -1.0));
        HashCodes(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn bits(&self) -> usize {
        self.0.nrows()
    }

    pub fn len(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.0.ncols() == 0
    }

    /// Number of positions at which the two code matrices disagree.
    pub fn flipped(&self, other: &HashCodes) -> usize {
        self.0.iter().zip(other.0.iter()).filter(|(a, b)| a != b).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub flipped_fraction: f64,
    /// `‖T′ − T Y‖ / ‖T Y‖` over all classes, before the multiplier update.
    pub constraint_residual: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShaState {
    /// d × ℓ projection.
    pub w: DMatrix<f64>,
    /// ℓ × C classifier.
    pub q: DMatrix<f64>,
    /// d × D analysis dictionary.
    pub t: DMatrix<f64>,
    pub b: HashCodes,
    /// Per-class auxiliaries T′_c, d × N_c.
    pub aux: Vec<DMatrix<f64>>,
    /// Per-class multipliers Λ_c, d × N_c.
    pub multipliers: Vec<DMatrix<f64>>,
    pub mu: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

impl ShaState {
    /// Random start: Q, T, T′ uniform on (0, 1), B uniform on {−1, +1},
    /// multipliers zero, μ = μ₀.
    pub fn initial(y: &FeatureMatrix, params: &ShaParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let (d, bits) = (params.atoms, params.code_len);
        let mut uniform = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random::<f64>());
        let q = uniform(bits, y.class_count());
        let t = uniform(d, y.features());
        let aux: Vec<_> = y.class_columns().iter().map(|cols| uniform(d, cols.len())).collect();
        let b = DMatrix::from_fn(bits, y.samples(), |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
        let multipliers = y.class_columns().iter().map(|cols| DMatrix::zeros(d, cols.len())).collect();
        ShaState {
            w: DMatrix::zeros(d, bits),
            q,
            t,
            b: HashCodes::from_signs(b),
            aux,
            multipliers,
            mu: params.mu0,
            iterations: 0,
            converged: false,
            trace: Vec::new(),
        }
    }
}

/// Alternates the W, Q, B, T and T′ updates followed by the multiplier and
/// penalty updates until both the code flip fraction and the relative
/// constraint residual drop below `tol`, or `max_iter` iterations have run.
pub fn train_sha(y: &FeatureMatrix, params: &ShaParams) -> Result<ShaState> {
    params.validate()?;
    let labels = y.label_matrix();
    let mut state = ShaState::initial(y, params);

    let y_ridge = params.ridge * mean_gram_diagonal(y.matrix());
    let right = t_right_factor(y.matrix(), y_ridge)?;
    ensure_finite(&right, "T-subproblem", "(YYᵀ + rI)⁻¹")?;
    let total_bits = (params.code_len * y.samples()) as f64;

    for iteration in 1..=params.max_iter {
        let previous_b = state.b.clone();

        let ty = &state.t * y.matrix();
        let w_ridge = ridge_for(params.ridge, &ty);
        state.w = solve_w_projected(&ty, &state.b, w_ridge)?;

        state.q = solve_q(&state.b, &labels, params.lambda1)?;

        let o = &state.q * &labels + (state.w.transpose() * &ty) * params.lambda3;
        state.b = solve_b_dcc(&state.q, &o, &state.b, params.dcc_sweeps)?;

        let aux_full = scatter_classes(&state.aux, y, params.atoms);
        let mult_full = scatter_classes(&state.multipliers, y, params.atoms);
        state.t = solve_t_with_factor(
            &state.w,
            &state.b,
            &aux_full,
            &mult_full,
            &right,
            state.mu,
            params.lambda3,
        )?;

        let ty = &state.t * y.matrix();
        for (c, columns) in y.class_columns().iter().enumerate() {
            let ty_c = class_block(&ty, columns);
            state.aux[c] = solve_tprime_projected(&ty_c, &state.multipliers[c], state.mu, params.lambda2);
            ensure_finite(&state.aux[c], "T'-subproblem", "T'")?;
        }

        let value = objective_with_projection(&state, y, &labels, &ty, params);
        if !value.is_finite() {
            return Err(Error::numeric("objective", format!("non-finite value at iteration {iteration}")));
        }

        let mut gap = 0.0;
        for (c, columns) in y.class_columns().iter().enumerate() {
            let diff = &state.aux[c] - class_block(&ty, columns);
            gap += diff.norm_squared();
            state.multipliers[c] += diff * state.mu;
            ensure_finite(&state.multipliers[c], "multiplier update", "Λ")?;
        }
        let ty_norm = ty.norm();
        let constraint_residual = if ty_norm > 0.0 { gap.sqrt() / ty_norm } else { gap.sqrt() };
        let mu_used = state.mu;
        state.mu = (params.rho * state.mu).min(params.mu_max);

        let flipped_fraction = state.b.flipped(&previous_b) as f64 / total_bits;
        state.iterations = iteration;
        state.trace.push(IterationRecord {
            iteration,
            objective: value,
            flipped_fraction,
            constraint_residual,
            mu: mu_used,
        });
        if flipped_fraction < params.tol && constraint_residual < params.tol {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

fn ridge_for(relative: f64, m: &DMatrix<f64>) -> f64 {
    relative * mean_gram_diagonal(m)
}

/// Column-wise scatter of per-class blocks, exposed for diagnostics.
pub fn assemble_class_blocks(blocks: &[DMatrix<f64>], y: &FeatureMatrix, rows: usize) -> DMatrix<f64> {
    scatter_classes(blocks, y, rows)
}

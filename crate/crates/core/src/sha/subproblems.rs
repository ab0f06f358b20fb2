//! Closed-form and discrete block solvers of the relaxed hashing objective.
//!
//! Shapes: `Y` is D × N (one column per sample), `T` is d × D, `W` is
//! d × ℓ, `Q` is ℓ × C, `B` is ℓ × N, label matrix is C × N, and each
//! class auxiliary / multiplier block is d × N_c.

use nalgebra::DMatrix;

use super::linalg::{ensure_finite, sign, sym_solve};
use super::{FeatureMatrix, HashCodes, ShaParams, ShaState};
use crate::error::{Error, Result};

/// `W = (TY (TY)ᵀ + ridge·I)⁻¹ TY Bᵀ`, minimizer of ‖B − Wᵀ T Y‖².
pub fn solve_w(t: &DMatrix<f64>, y: &DMatrix<f64>, b: &HashCodes, ridge: f64) -> Result<DMatrix<f64>> {
    ensure_finite(t, "W-subproblem", "T")?;
    ensure_finite(y, "W-subproblem", "Y")?;
    solve_w_projected(&(t * y), b, ridge)
}

pub(crate) fn solve_w_projected(ty: &DMatrix<f64>, b: &HashCodes, ridge: f64) -> Result<DMatrix<f64>> {
    let d = ty.nrows();
    let mut gram = ty * ty.transpose();
    for i in 0..d {
        gram[(i, i)] += ridge;
    }
    let rhs = ty * b.matrix().transpose();
    let w = sym_solve(gram, &rhs, "W-subproblem")?;
    ensure_finite(&w, "W-subproblem", "W")?;
    Ok(w)
}

/// `Q = (B Bᵀ + λ₁ I)⁻¹ B Lᵀ`.
pub fn solve_q(b: &HashCodes, labels: &DMatrix<f64>, lambda1: f64) -> Result<DMatrix<f64>> {
    let bm = b.matrix();
    let mut gram = bm * bm.transpose();
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda1;
    }
    let q = sym_solve(gram, &(bm * labels.transpose()), "Q-subproblem")?;
    ensure_finite(&q, "Q-subproblem", "Q")?;
    Ok(q)
}

/// `‖Qᵀ B‖² − 2 tr(Bᵀ O)`, the code-dependent part of the B-subproblem.
pub fn dcc_objective(q: &DMatrix<f64>, b: &HashCodes, o: &DMatrix<f64>) -> f64 {
    (q.transpose() * b.matrix()).norm_squared() - 2.0 * b.matrix().dot(o)
}

/// Discrete cyclic coordinate descent over the rows of `B`.
///
/// Row `l` is set to `sgn(O_l − q_l Q₋ₗᵀ B₋ₗ)` with every other row fixed;
/// sweeps repeat until no row changes or `max_sweeps` is reached. Each row
/// update is an exact minimizer of its row, so the objective never rises.
pub fn solve_b_dcc(q: &DMatrix<f64>, o: &DMatrix<f64>, b_init: &HashCodes, max_sweeps: usize) -> Result<HashCodes> {
    ensure_finite(q, "B-subproblem", "Q")?;
    ensure_finite(o, "B-subproblem", "O")?;
    let mut b = b_init.matrix().clone();
    let (bits, n) = b.shape();
    if q.nrows() != bits || o.shape() != (bits, n) {
        return Err(Error::Config(format!(
            "B-subproblem shapes: Q {:?}, O {:?}, B {:?}",
            q.shape(),
            o.shape(),
            b.shape()
        )));
    }
    let gram = q * q.transpose();
    let mut row = vec![0.0; n];
    for _ in 0..max_sweeps.max(1) {
        let mut changed = false;
        for l in 0..bits {
            row.iter_mut().enumerate().for_each(|(col, r)| *r = o[(l, col)]);
            for m in (0..bits).filter(|&m| m != l) {
                let g = gram[(l, m)];
                if g != 0.0 {
                    for (col, r) in row.iter_mut().enumerate() {
                        *r -= g * b[(m, col)];
                    }
                }
            }
            for (col, &r) in row.iter().enumerate() {
                let s = sign(r);
                if b[(l, col)] != s {
                    b[(l, col)] = s;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(HashCodes::from_signs(b))
}

/// Projects a full d × N matrix onto the columns of one class.
pub(crate) fn class_block(full: &DMatrix<f64>, columns: &[usize]) -> DMatrix<f64> {
    full.select_columns(columns)
}

/// Places per-class d × N_c blocks back into a d × N matrix.
pub(crate) fn scatter_classes(blocks: &[DMatrix<f64>], y: &FeatureMatrix, rows: usize) -> DMatrix<f64> {
    let mut full = DMatrix::zeros(rows, y.samples());
    for (block, columns) in blocks.iter().zip(y.class_columns()) {
        for (j, &col) in columns.iter().enumerate() {
            full.set_column(col, &block.column(j));
        }
    }
    full
}

/// Precomputed right factor `Yᵀ (Y Yᵀ + ridge·I)⁻¹` (N × D) of the
/// T-subproblem. The smaller of the two Gram matrices is inverted:
/// `Yᵀ (YYᵀ + rI)⁻¹ = (YᵀY + rI)⁻¹ Yᵀ`.
pub(crate) fn t_right_factor(y: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let (features, samples) = y.shape();
    if features <= samples {
        let mut gram = y * y.transpose();
        for i in 0..features {
            gram[(i, i)] += ridge;
        }
        // (YYᵀ + rI) is symmetric, so Yᵀ (YYᵀ + rI)⁻¹ = ((YYᵀ + rI)⁻¹ Y)ᵀ
        Ok(sym_solve(gram, y, "T-subproblem")?.transpose())
    } else {
        let mut gram = y.transpose() * y;
        for i in 0..samples {
            gram[(i, i)] += ridge;
        }
        sym_solve(gram, &y.transpose(), "T-subproblem")
    }
}

pub(crate) fn solve_t_with_factor(
    w: &DMatrix<f64>,
    b: &HashCodes,
    aux_full: &DMatrix<f64>,
    mult_full: &DMatrix<f64>,
    right: &DMatrix<f64>,
    mu: f64,
    lambda3: f64,
) -> Result<DMatrix<f64>> {
    let d = w.nrows();
    let mut left = w * w.transpose() * (2.0 * lambda3);
    for i in 0..d {
        left[(i, i)] += mu;
    }
    let g = aux_full * mu + mult_full + w * b.matrix() * (2.0 * lambda3);
    let mixed = sym_solve(left, &g, "T-subproblem")?;
    let t = mixed * right;
    ensure_finite(&t, "T-subproblem", "T")?;
    Ok(t)
}

/// Closed-form T update:
/// `T = (μI + 2λ₃WWᵀ)⁻¹ (μ Σ_c (T′_c + Λ_c/μ) Y_cᵀ + 2λ₃ W B Yᵀ)(YYᵀ + ridge·I)⁻¹`.
#[allow(clippy::too_many_arguments)]
pub fn solve_t(
    w: &DMatrix<f64>,
    b: &HashCodes,
    y: &FeatureMatrix,
    aux: &[DMatrix<f64>],
    multipliers: &[DMatrix<f64>],
    mu: f64,
    lambda3: f64,
    ridge: f64,
) -> Result<DMatrix<f64>> {
    ensure_finite(y.matrix(), "T-subproblem", "Y")?;
    let d = w.nrows();
    let aux_full = scatter_classes(aux, y, d);
    let mult_full = scatter_classes(multipliers, y, d);
    let right = t_right_factor(y.matrix(), ridge)?;
    solve_t_with_factor(w, b, &aux_full, &mult_full, &right, mu, lambda3)
}

/// Row-wise group shrinkage: row `r` becomes `max(‖r‖ − threshold, 0)/‖r‖ · r`,
/// and exactly zero whenever `‖r‖ ≤ threshold`.
pub fn row_shrink(u: &DMatrix<f64>, threshold: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(u.nrows(), u.ncols());
    for i in 0..u.nrows() {
        let norm = u.row(i).norm();
        if norm > threshold && norm > 0.0 {
            let scale = (norm - threshold) / norm;
            out.set_row(i, &(u.row(i) * scale));
        }
    }
    out
}

pub(crate) fn solve_tprime_projected(ty_c: &DMatrix<f64>, mult_c: &DMatrix<f64>, mu: f64, lambda2: f64) -> DMatrix<f64> {
    let u = ty_c - mult_c / mu;
    row_shrink(&u, lambda2 / mu)
}

/// `T′_c = shrink(T Y_c − Λ_c/μ, λ₂/μ)`.
pub fn solve_tprime(
    t: &DMatrix<f64>,
    y_c: &DMatrix<f64>,
    mult_c: &DMatrix<f64>,
    mu: f64,
    lambda2: f64,
) -> Result<DMatrix<f64>> {
    if mu <= 0.0 {
        return Err(Error::Config(format!("penalty must be positive, got {mu}")));
    }
    let out = solve_tprime_projected(&(t * y_c), mult_c, mu, lambda2);
    ensure_finite(&out, "T'-subproblem", "T'")?;
    Ok(out)
}

/// ℓ2,1 norm: sum of the Euclidean norms of the rows.
pub fn l21_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).norm()).sum()
}

/// The relaxed augmented objective
/// `‖L − QᵀB‖² + λ₁‖Q‖² + λ₃‖B − WᵀTY‖² + Σ_c (λ₂‖T′_c‖₂,₁ + μ/2 ‖T′_c − TY_c + Λ_c/μ‖²)`.
pub fn objective(state: &ShaState, y: &FeatureMatrix, params: &ShaParams) -> f64 {
    let labels = y.label_matrix();
    let ty = &state.t * y.matrix();
    objective_with_projection(state, y, &labels, &ty, params)
}

pub(crate) fn objective_with_projection(
    state: &ShaState,
    y: &FeatureMatrix,
    labels: &DMatrix<f64>,
    ty: &DMatrix<f64>,
    params: &ShaParams,
) -> f64 {
    let b = state.b.matrix();
    let classification = (labels - state.q.transpose() * b).norm_squared();
    let regularizer = params.lambda1 * state.q.norm_squared();
    let coding = params.lambda3 * (b - state.w.transpose() * ty).norm_squared();
    let mu = state.mu;
    let mut sparse = 0.0;
    for (c, columns) in y.class_columns().iter().enumerate() {
        let ty_c = class_block(ty, columns);
        let aux = &state.aux[c];
        let resid = aux - ty_c + &state.multipliers[c] / mu;
        sparse += params.lambda2 * l21_norm(aux) + 0.5 * mu * resid.norm_squared();
    }
    classification + regularizer + coding + sparse
}

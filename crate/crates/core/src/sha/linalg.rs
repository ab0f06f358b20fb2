use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) fn ensure_finite(m: &DMatrix<f64>, stage: &str, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::numeric(stage, format!("{what} contains non-finite entries")))
    }
}

/// Solves `a x = b` for symmetric positive (semi)definite `a`, falling back to
/// LU when Cholesky fails.
pub(crate) fn sym_solve(a: DMatrix<f64>, b: &DMatrix<f64>, stage: &str) -> Result<DMatrix<f64>> {
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(b));
    }
    a.lu()
        .solve(b)
        .ok_or_else(|| Error::numeric(stage, "system matrix is singular; raise the ridge stabilizer"))
}

/// Mean of the diagonal of `m mᵀ`, i.e. ‖m‖² / rows.
pub(crate) fn mean_gram_diagonal(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        0.0
    } else {
        m.norm_squared() / m.nrows() as f64
    }
}

#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

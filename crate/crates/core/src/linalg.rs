//! Complex dense matrix aliases and the Hermitian inverse used by ZF filters
//! and the Wishart-based approximations.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Condition number above which a Hermitian matrix is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// `HᴴH`.
pub fn gram(h: &CMatrix) -> CMatrix {
    h.ad_mul(h)
}

/// 2-norm condition number of a Hermitian positive semi-definite matrix.
pub fn hermitian_condition(a: &CMatrix) -> f64 {
    let eig = a.clone().symmetric_eigenvalues();
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky, rejecting
/// matrices whose condition number exceeds [`CONDITION_LIMIT`].
pub fn hermitian_inverse(a: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let cond = hermitian_condition(a);
    if !(cond <= CONDITION_LIMIT) {
        return Err(Error::NumericalRank {
            cond,
            limit: CONDITION_LIMIT,
        });
    }
    a.clone().cholesky().map(|c| c.inverse()).ok_or(Error::NumericalRank {
        cond,
        limit: CONDITION_LIMIT,
    })
}

/// `Σ_m w_m |v_m|²`, the quadratic form `vᴴ diag(w) v`.
pub fn diag_quadratic_form(v: &CVector, weights: &DVector<f64>) -> f64 {
    v.iter().zip(weights.iter()).map(|(x, w)| w * x.norm_sqr()).sum()
}

/// Pairwise (cascade) summation; the result depends only on the order of the
/// input, never on how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}

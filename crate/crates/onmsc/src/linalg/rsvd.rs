//! Randomized eigendecomposition of a symmetric matrix.
//!
//! Single-pass sketch: multiply by a seeded Gaussian test matrix with `s`
//! oversampling columns, orthonormalize the sketch, project, and solve the
//! small dense problem. For the graph matrices this crate feeds in, the
//! spectrum of interest sits at the algebraic top, so the `k` largest
//! eigenvalues (not magnitudes) are kept.

use super::eigh::eigh;
use super::qr::{gaussian_matrix, householder_q};
use super::{sign_fix_columns, EigenPair};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::s;

use ndarray::Array2;

/// Approximate top-`k` eigenpairs of symmetric `r` using `k + s` random
/// probes. Identical seeds give bitwise-identical probe matrices, so the
/// whole computation is reproducible.
pub fn randomized_svd<S: Scalar>(
    r: &Array2<S>,
    k: usize,
    s: usize,
    seed: u64,
) -> Result<EigenPair<S>> {
    let (rows, cols) = r.dim();
    if rows != cols {
        return Err(Error::data(format!(
            "sketched matrix must be square, got {rows}x{cols}"
        )));
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("sketched matrix must be finite".to_string()));
    }
    if k == 0 {
        return Err(Error::config("sketch rank k must be at least 1".to_string()));
    }
    if k + s > rows {
        return Err(Error::config(format!(
            "sketch width k + s = {} exceeds matrix size {rows}",
            k + s
        )));
    }
    let omega = gaussian_matrix::<S>(rows, k + s, seed);
    let y = r.dot(&omega);
    let q = householder_q(&y)?;
    let mut b = q.t().dot(r).dot(&q);
    // symmetrize the projected matrix; it is symmetric up to rounding
    let bt = b.t().to_owned();
    b = (&b + &bt) / S::from_f64(2.0);
    let small = eigh(&b)?;
    let mut vectors = q.dot(&small.vectors.slice(s![.., ..k]));
    let values = small.values.slice(s![..k]).to_owned();
    sign_fix_columns(&mut vectors);
    Ok(EigenPair { vectors, values })
}

//! Dense spectral linear algebra.
//!
//! Everything here is self-contained: a Householder + implicit-QL symmetric
//! eigensolver, thin Householder QR, orthogonal Procrustes alignment, and a
//! randomized low-rank path (Gaussian range finder + Nystrom column
//! sampling) for large graphs where a full eigendecomposition is
//! unaffordable.
//!
//! Conventions shared by every routine:
//! * eigenvalues and singular values are reported in non-increasing order;
//!   bottom-`k` problems negate the matrix and reuse the top-`k` path;
//! * each returned eigen/singular vector is sign-fixed so its entry of
//!   largest magnitude is positive (first index wins ties), which makes
//!   seeded runs reproducible down to the bit.

mod eigh;
mod nystrom;
mod procrustes;
mod qr;
mod rsvd;

pub use eigh::eigh;
pub use nystrom::{nystrom_embedding, orthogonalize, NystromConfig, NystromEmbedding};
pub use procrustes::procrustes_align;
pub use qr::{householder_q, random_orthonormal};
pub use rsvd::randomized_svd;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};

/// Eigenvectors (columns) paired with their eigenvalues, values
/// non-increasing.
#[derive(Debug, Clone)]
pub struct EigenPair<S> {
    pub vectors: Array2<S>,
    pub values: Array1<S>,
}

/// Orthonormal `n x k` matrix with `n >= k >= 1`; the relaxed cluster
/// indicator both solvers work with.
#[derive(Debug, Clone)]
pub struct Partition<S> {
    values: Array2<S>,
}

impl<S: Scalar> Partition<S> {
    /// Validates column orthonormality before wrapping.
    pub fn new(values: Array2<S>) -> Result<Self> {
        let (n, k) = values.dim();
        if k == 0 || n < k {
            return Err(Error::data(format!(
                "partition must be n x k with n >= k >= 1, got {n}x{k}"
            )));
        }
        let dev = orthonormality_deviation(&values);
        if !(dev <= S::ORTHO_TOL) {
            return Err(Error::numerical(format!(
                "partition columns not orthonormal (deviation {dev})"
            )));
        }
        Ok(Partition { values })
    }

    /// For matrices orthonormal by construction; debug builds re-verify.
    pub(crate) fn from_parts(values: Array2<S>) -> Self {
        debug_assert!({
            let dev = orthonormality_deviation(&values);
            dev <= S::ORTHO_TOL
        });
        Partition { values }
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn into_values(self) -> Array2<S> {
        self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn k(&self) -> usize {
        self.values.ncols()
    }
}

/// Max absolute deviation of `VᵀV` from the identity.
pub fn orthonormality_deviation<S: Scalar>(v: &Array2<S>) -> S {
    let gram = v.t().dot(v);
    let k = gram.nrows();
    let mut dev = S::zero();
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { S::one() } else { S::zero() };
            dev = dev.max((gram[[i, j]] - target).abs());
        }
    }
    dev
}

/// Flip each column so its entry of largest magnitude is positive; the
/// first index wins ties. This pins down the sign freedom of
/// eigen/singular vectors.
pub fn sign_fix_columns<S: Scalar>(m: &mut Array2<S>) {
    let (rows, cols) = m.dim();
    for j in 0..cols {
        let mut best = 0;
        let mut best_abs = S::zero();
        for i in 0..rows {
            let a = m[[i, j]].abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if m[[best, j]] < S::zero() {
            for i in 0..rows {
                m[[i, j]] = -m[[i, j]];
            }
        }
    }
}

fn validate_square_symmetric<S: Scalar>(m: &Array2<S>, what: &str) -> Result<()> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::data(format!("{what} must be square, got {r}x{c}")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::data(format!("{what} entries must be finite")));
    }
    for i in 0..r {
        for j in (i + 1)..r {
            if (m[[i, j]] - m[[j, i]]).abs() > S::CHECK_TOL {
                return Err(Error::data(format!("{what} not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Top-`k` eigenpairs (largest eigenvalues) of a symmetric matrix.
pub fn top_k_eigenvectors<S: Scalar>(matrix: &Array2<S>, k: usize) -> Result<EigenPair<S>> {
    validate_square_symmetric(matrix, "matrix")?;
    let n = matrix.nrows();
    if k == 0 || k > n {
        return Err(Error::config(format!(
            "requested k = {k} eigenvectors of an {n}x{n} matrix"
        )));
    }
    let full = eigh(matrix)?;
    let vectors = full.vectors.slice(ndarray::s![.., ..k]).to_owned();
    let values = full.values.slice(ndarray::s![..k]).to_owned();
    Ok(EigenPair { vectors, values })
}

/// Bottom-`k` eigenvectors of a symmetric matrix (e.g. a Laplacian),
/// computed by negation so that one sorted code path serves both ends of
/// the spectrum. Returns the orthonormal embedding; eigenvalues are the
/// `k` smallest, in non-decreasing order.
pub fn bottom_k_eigenvectors<S: Scalar>(
    matrix: &Array2<S>,
    k: usize,
) -> Result<(Partition<S>, Array1<S>)> {
    let negated = matrix.mapv(|x| -x);
    let pair = top_k_eigenvectors(&negated, k)?;
    let values = pair.values.mapv(|x| -x);
    Ok((Partition::from_parts(pair.vectors), values))
}

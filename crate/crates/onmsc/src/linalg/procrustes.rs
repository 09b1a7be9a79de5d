//! Orthogonal Procrustes alignment.
//!
//! `procrustes_align(C)` returns the orthonormal matrix maximizing
//! `Tr(QᵀC)`; the maximum value is the nuclear norm of `C`. The factors
//! come from an eigendecomposition of `CᵀC` (the column count is small
//! everywhere this is used: it is the cluster count). Rank-deficient `C`
//! is allowed; missing left factors are completed deterministically.

use super::eigh::eigh;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};

/// Argmax of `Tr(QᵀC)` over n x k matrices with orthonormal columns.
pub fn procrustes_align<S: Scalar>(c: &Array2<S>) -> Result<Array2<S>> {
    let (n, k) = c.dim();
    if k == 0 || n < k {
        return Err(Error::config(format!(
            "alignment target must be n x k with n >= k >= 1, got {n}x{k}"
        )));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("alignment target must be finite".to_string()));
    }
    let gram = c.t().dot(c);
    let pair = eigh(&gram)?;
    let v = &pair.vectors;
    let sigma: Vec<S> = pair.values.iter().map(|&l| l.max(S::zero()).sqrt()).collect();
    let sigma_max = sigma[0];

    let mut u = Array2::<S>::zeros((n, k));
    for j in 0..k {
        if sigma[j] > S::RANK_TOL * sigma_max && sigma_max > S::zero() {
            let mut col: Array1<S> = c.dot(&v.column(j).to_owned());
            orthogonalize_against(&mut col, &u, j);
            let norm = col.dot(&col).sqrt();
            if norm > S::zero() {
                col.mapv_inplace(|x| x / norm);
                for i in 0..n {
                    u[[i, j]] = col[i];
                }
                continue;
            }
        }
        complete_column(&mut u, j);
    }
    Ok(u.dot(&v.t()))
}

/// Two modified Gram-Schmidt passes against the first `cols` columns of `u`.
fn orthogonalize_against<S: Scalar>(col: &mut Array1<S>, u: &Array2<S>, cols: usize) {
    for _ in 0..2 {
        for j in 0..cols {
            let uj = u.column(j);
            let dot = col.dot(&uj);
            for i in 0..col.len() {
                col[i] = col[i] - dot * uj[i];
            }
        }
    }
}

/// Fill column `j` of `u` with a unit vector orthogonal to columns `0..j`,
/// chosen as the coordinate direction with the largest residual (ties to
/// the lower index) so the completion is deterministic.
fn complete_column<S: Scalar>(u: &mut Array2<S>, j: usize) {
    let n = u.nrows();
    let mut best_t = 0;
    let mut best_res = S::neg_infinity();
    for t in 0..n {
        // residual norm² of e_t against span(u[..j]) is 1 - ||row t||²
        let mut row2 = S::zero();
        for c in 0..j {
            row2 = row2 + u[[t, c]] * u[[t, c]];
        }
        let res = S::one() - row2;
        if res > best_res {
            best_res = res;
            best_t = t;
        }
    }
    let mut col = Array1::<S>::zeros(n);
    col[best_t] = S::one();
    orthogonalize_against(&mut col, u, j);
    let norm = col.dot(&col).sqrt();
    for i in 0..n {
        u[[i, j]] = col[i] / norm;
    }
}

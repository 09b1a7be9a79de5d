//! Thin Householder QR; only the orthonormal factor is ever needed here.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;
use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

/// Orthonormal basis of the column space of `a` (m x p, m >= p) via
/// Householder reflections. Columns that are numerically dependent still
/// produce a valid orthonormal `Q` because the reflectors act on identity
/// columns when forming `Q`.
pub fn householder_q<S: Scalar>(a: &Array2<S>) -> Result<Array2<S>> {
    let (m, p) = a.dim();
    if m < p {
        return Err(Error::config(format!(
            "QR needs at least as many rows as columns, got {m}x{p}"
        )));
    }
    let mut r = a.clone();
    // reflectors[j] spans rows j..m
    let mut reflectors: Vec<Vec<S>> = Vec::with_capacity(p);
    for j in 0..p {
        let mut norm2 = S::zero();
        for i in j..m {
            norm2 = norm2 + r[[i, j]] * r[[i, j]];
        }
        let norm = norm2.sqrt();
        if norm == S::zero() {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if r[[j, j]] >= S::zero() { -norm } else { norm };
        let mut v: Vec<S> = (j..m).map(|i| r[[i, j]]).collect();
        v[0] = v[0] - alpha;
        let vnorm2: S = v.iter().map(|&x| x * x).sum();
        if vnorm2 == S::zero() {
            reflectors.push(Vec::new());
            continue;
        }
        let two = S::from_f64(2.0);
        // apply I - 2 v vᵀ / (vᵀv) to the remaining columns
        for col in j..p {
            let mut dot = S::zero();
            for (off, vi) in v.iter().enumerate() {
                dot = dot + *vi * r[[j + off, col]];
            }
            let coef = two * dot / vnorm2;
            for (off, vi) in v.iter().enumerate() {
                r[[j + off, col]] = r[[j + off, col]] - coef * *vi;
            }
        }
        reflectors.push(v);
    }
    // accumulate Q = H_0 ... H_{p-1} applied to the first p identity columns
    let mut q = Array2::zeros((m, p));
    for j in 0..p {
        q[[j, j]] = S::one();
    }
    let two = S::from_f64(2.0);
    for j in (0..p).rev() {
        let v = &reflectors[j];
        if v.is_empty() {
            continue;
        }
        let vnorm2: S = v.iter().map(|&x| x * x).sum();
        for col in 0..p {
            let mut dot = S::zero();
            for (off, vi) in v.iter().enumerate() {
                dot = dot + *vi * q[[j + off, col]];
            }
            let coef = two * dot / vnorm2;
            for (off, vi) in v.iter().enumerate() {
                q[[j + off, col]] = q[[j + off, col]] - coef * *vi;
            }
        }
    }
    Ok(q)
}

/// Standard-normal matrix with a fixed fill order, so a seed pins the
/// content exactly. Samples are drawn in f64 and converted, which keeps
/// the stream identical across scalar types.
pub(crate) fn gaussian_matrix<S: Scalar>(rows: usize, cols: usize, seed: u64) -> Array2<S> {
    let mut rng = rng_from_seed(seed);
    let mut m = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            let x: f64 = rng.sample(StandardNormal);
            m[[i, j]] = S::from_f64(x);
        }
    }
    m
}

/// Haar-ish random orthonormal n x k matrix: QR of a seeded Gaussian.
pub fn random_orthonormal<S: Scalar>(n: usize, k: usize, seed: u64) -> Result<Array2<S>> {
    if k == 0 || n < k {
        return Err(Error::config(format!(
            "orthonormal sample needs n >= k >= 1, got {n}x{k}"
        )));
    }
    householder_q(&gaussian_matrix(n, k, derive_seed(seed, 0x9a, 0x4f)))
}

//! Nystrom spectral embedding and its orthogonalization.
//!
//! The embedding samples `m` landmark columns of the normalized affinity
//! `G`, eigendecomposes the landmark block with the randomized sketch, and
//! extends to all samples: `U = E Ũ Λ⁺`, `H = sqrt(m/n) U`. The raw `H`
//! is *not* orthonormal; [`orthogonalize`] restores orthonormality while
//! preserving the implied low-rank reconstruction exactly, which is what
//! lets the solvers treat the result like any other partition.

use super::eigh::eigh;
use super::rsvd::randomized_svd;
use super::{sign_fix_columns, orthonormality_deviation, Partition};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use rand::Rng as _;

/// Landmark sampling and sketching parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NystromConfig {
    /// Landmark count `m`, with `k <= m <= n`.
    pub m: usize,
    /// Oversampling columns for the randomized sketch, at least 2.
    pub s: usize,
    pub seed: u64,
}

/// Raw Nystrom output: the scaled extension `H = sqrt(m/n) E Ũ Λ⁺` and the
/// landmark-block eigenvalues. `H` is not orthonormal; pass it through
/// [`orthogonalize`] before using it as a partition.
#[derive(Debug, Clone)]
pub struct NystromEmbedding<S> {
    pub h: Array2<S>,
    pub values: Array1<S>,
    pub n: usize,
    pub m: usize,
}

impl<S: Scalar> NystromEmbedding<S> {
    /// Implied approximation of the full matrix:
    /// `Ĝ = H (n/m Λ) Hᵀ`.
    pub fn reconstruct(&self) -> Array2<S> {
        let scale = S::from_usize(self.n) / S::from_usize(self.m);
        let n = self.h.nrows();
        let k = self.values.len();
        let mut out = Array2::zeros((n, n));
        for l in 0..k {
            let w = scale * self.values[l];
            for i in 0..n {
                let hi = self.h[[i, l]];
                if hi == S::zero() {
                    continue;
                }
                for j in 0..n {
                    out[[i, j]] = out[[i, j]] + w * hi * self.h[[j, l]];
                }
            }
        }
        out
    }
}

/// First `m` entries of a seeded Fisher-Yates shuffle of `0..n`: a uniform
/// sample without replacement.
fn sample_landmarks(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(derive_seed(seed, 0x5e, 0));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx
}

fn validate_nystrom<S: Scalar>(
    g: &Array2<S>,
    k: usize,
    cfg: &NystromConfig,
) -> Result<()> {
    let (r, c) = g.dim();
    if r != c {
        return Err(Error::data(format!("matrix must be square, got {r}x{c}")));
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("matrix entries must be finite".to_string()));
    }
    if cfg.m > r {
        return Err(Error::config(format!(
            "landmark count m = {} exceeds n = {r}",
            cfg.m
        )));
    }
    if k == 0 || k > cfg.m {
        return Err(Error::config(format!(
            "embedding rank k = {k} must satisfy 1 <= k <= m = {}",
            cfg.m
        )));
    }
    if cfg.s < 2 {
        return Err(Error::config(format!(
            "oversampling s = {} must be at least 2",
            cfg.s
        )));
    }
    Ok(())
}

/// Nystrom embedding of a symmetric matrix `G` (typically the normalized
/// affinity `D^{-1/2} A D^{-1/2}`).
pub fn nystrom_embedding<S: Scalar>(
    g: &Array2<S>,
    k: usize,
    cfg: &NystromConfig,
) -> Result<NystromEmbedding<S>> {
    validate_nystrom(g, k, cfg)?;
    let n = g.nrows();
    let landmarks = sample_landmarks(n, cfg.m, cfg.seed);
    let mut e = Array2::zeros((n, cfg.m));
    for (t, &col) in landmarks.iter().enumerate() {
        for i in 0..n {
            e[[i, t]] = g[[i, col]];
        }
    }
    let mut r = Array2::zeros((cfg.m, cfg.m));
    for (t, &row) in landmarks.iter().enumerate() {
        for (u, &col) in landmarks.iter().enumerate() {
            r[[t, u]] = g[[row, col]];
        }
    }
    nystrom_extend(&e, &r, k, cfg, n)
}

/// Core extension step shared by [`nystrom_embedding`] and callers that
/// assemble `E` and `R` without materializing `G` (large-`n` pipelines).
pub(crate) fn nystrom_extend<S: Scalar>(
    e: &Array2<S>,
    r: &Array2<S>,
    k: usize,
    cfg: &NystromConfig,
    n: usize,
) -> Result<NystromEmbedding<S>> {
    // a sketch wider than the block would be exact anyway; decompose directly
    let small = if k + cfg.s <= cfg.m {
        randomized_svd(r, k, cfg.s, derive_seed(cfg.seed, 0x5e, 1))?
    } else {
        super::top_k_eigenvectors(r, k)?
    };
    let sigma_max = small
        .values
        .iter()
        .fold(S::zero(), |acc, &v| acc.max(v.abs()));
    if !(sigma_max > S::zero()) {
        return Err(Error::numerical(
            "landmark block spectrum is entirely degenerate".to_string(),
        ));
    }
    let threshold = S::RANK_TOL * sigma_max;
    let mut usable = 0usize;
    let pinv: Vec<S> = small
        .values
        .iter()
        .map(|&v| {
            if v.abs() > threshold {
                usable += 1;
                v.recip()
            } else {
                S::zero()
            }
        })
        .collect();
    if usable == 0 {
        return Err(Error::numerical(
            "landmark block spectrum is entirely degenerate".to_string(),
        ));
    }
    // H = sqrt(m/n) * E Ũ Λ⁺
    let scale = (S::from_usize(cfg.m) / S::from_usize(n)).sqrt();
    let mut basis = small.vectors;
    for (j, &p) in pinv.iter().enumerate() {
        for i in 0..cfg.m {
            basis[[i, j]] = basis[[i, j]] * p;
        }
    }
    let mut h = e.dot(&basis);
    h.mapv_inplace(|x| x * scale);
    Ok(NystromEmbedding {
        h,
        values: small.values,
        n,
        m: cfg.m,
    })
}

/// Orthogonalize a raw embedding while preserving its implied low-rank
/// form. With `T = HᵀH = V Σ Vᵀ` and `K = Σ^{1/2} Vᵀ Λ V Σ^{1/2} = Ṽ Λ̃ Ṽᵀ`,
/// the output is `H̃ = H V Σ^{-1/2} Ṽ`, which satisfies `H̃ᵀH̃ = I` and
/// `H̃ Λ̃ H̃ᵀ = H Λ Hᵀ`.
pub fn orthogonalize<S: Scalar>(
    h: &Array2<S>,
    values: &Array1<S>,
) -> Result<(Partition<S>, Array1<S>)> {
    let (n, k) = h.dim();
    if k == 0 || n < k {
        return Err(Error::data(format!(
            "embedding must be n x k with n >= k >= 1, got {n}x{k}"
        )));
    }
    if values.len() != k {
        return Err(Error::data(format!(
            "expected {k} eigenvalues, got {}",
            values.len()
        )));
    }
    let t = h.t().dot(h);
    let tp = eigh(&t)?;
    let sig_max = tp.values[0];
    let sig_min = tp.values[k - 1];
    if !(sig_max > S::zero()) || sig_min <= S::RANK_TOL * sig_max {
        return Err(Error::numerical(format!(
            "embedding is rank-deficient (Gram spectrum [{sig_min}, {sig_max}])"
        )));
    }
    let sqrt_sig: Vec<S> = tp.values.iter().map(|&x| x.sqrt()).collect();
    // K = Σ^{1/2} Vᵀ Λ V Σ^{1/2}
    let v = &tp.vectors;
    let mut inner = Array2::zeros((k, k));
    for a in 0..k {
        for b in 0..k {
            let mut acc = S::zero();
            for l in 0..k {
                acc = acc + v[[l, a]] * values[l] * v[[l, b]];
            }
            inner[[a, b]] = sqrt_sig[a] * acc * sqrt_sig[b];
        }
    }
    let it = inner.t().to_owned();
    inner = (&inner + &it) / S::from_f64(2.0);
    let kp = eigh(&inner)?;
    // H̃ = H V Σ^{-1/2} Ṽ
    let mut v_scaled = v.clone();
    for j in 0..k {
        let inv = sqrt_sig[j].recip();
        for i in 0..k {
            v_scaled[[i, j]] = v_scaled[[i, j]] * inv;
        }
    }
    let mut h_tilde = h.dot(&v_scaled).dot(&kp.vectors);
    sign_fix_columns(&mut h_tilde);
    let dev = orthonormality_deviation(&h_tilde);
    if !(dev <= S::ORTHO_TOL) {
        return Err(Error::numerical(format!(
            "orthogonalization lost orthonormality (deviation {dev}); Gram matrix too ill-conditioned"
        )));
    }
    Ok((Partition::from_parts(h_tilde), kp.values))
}

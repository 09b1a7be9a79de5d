//! Dense symmetric eigendecomposition.
//!
//! Classic two-stage scheme: Householder reduction to tridiagonal form with
//! accumulation of the transform, then the implicit-shift QL iteration on
//! the tridiagonal matrix. O(n^3), numerically orthogonal eigenvectors,
//! no external dependencies. Output is sorted non-increasing and
//! sign-fixed (see the module docs).

use super::{sign_fix_columns, EigenPair};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};

const MAX_QL_SWEEPS: usize = 64;

/// Full eigendecomposition of a symmetric matrix. The upper triangle is
/// mirrored onto the lower one before factoring, so inputs that are
/// symmetric only up to rounding are handled gracefully.
pub fn eigh<S: Scalar>(matrix: &Array2<S>) -> Result<EigenPair<S>> {
    let (r, c) = matrix.dim();
    if r != c {
        return Err(Error::data(format!(
            "eigendecomposition needs a square matrix, got {r}x{c}"
        )));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("eigendecomposition input must be finite".to_string()));
    }
    let n = r;
    let half = S::from_f64(0.5);
    let mut z = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            z[[i, j]] = (matrix[[i, j]] + matrix[[j, i]]) * half;
        }
    }
    let mut d = vec![S::zero(); n];
    let mut e = vec![S::zero(); n];
    tridiagonalize(&mut z, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, &mut z)?;

    // sort non-increasing, reorder the vectors to match
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).expect("finite eigenvalues"));
    let values = Array1::from_iter(order.iter().map(|&i| d[i]));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[[row, dst]] = z[[row, src]];
        }
    }
    sign_fix_columns(&mut vectors);
    Ok(EigenPair { vectors, values })
}

/// Householder reduction of `a` to tridiagonal form. On return `a` holds
/// the accumulated orthogonal transform, `d` the diagonal, and `e[1..]`
/// the subdiagonal.
fn tridiagonalize<S: Scalar>(a: &mut Array2<S>, d: &mut [S], e: &mut [S]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = S::zero();
        if l > 0 {
            let mut scale = S::zero();
            for k in 0..=l {
                scale = scale + a[[i, k]].abs();
            }
            if scale == S::zero() {
                e[i] = a[[i, l]];
            } else {
                for k in 0..=l {
                    a[[i, k]] = a[[i, k]] / scale;
                    h = h + a[[i, k]] * a[[i, k]];
                }
                let f = a[[i, l]];
                let g = if f >= S::zero() { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h = h - f * g;
                a[[i, l]] = f - g;
                let mut f_acc = S::zero();
                for j in 0..=l {
                    a[[j, i]] = a[[i, j]] / h;
                    let mut g_acc = S::zero();
                    for k in 0..=j {
                        g_acc = g_acc + a[[j, k]] * a[[i, k]];
                    }
                    for k in (j + 1)..=l {
                        g_acc = g_acc + a[[k, j]] * a[[i, k]];
                    }
                    e[j] = g_acc / h;
                    f_acc = f_acc + e[j] * a[[i, j]];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[[i, j]];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[[j, k]] = a[[j, k]] - (f * e[k] + g * a[[i, k]]);
                    }
                }
            }
        } else {
            e[i] = a[[i, l]];
        }
        d[i] = h;
    }
    d[0] = S::zero();
    e[0] = S::zero();
    for i in 0..n {
        if d[i] != S::zero() {
            for j in 0..i {
                let mut g = S::zero();
                for k in 0..i {
                    g = g + a[[i, k]] * a[[k, j]];
                }
                for k in 0..i {
                    a[[k, j]] = a[[k, j]] - g * a[[k, i]];
                }
            }
        }
        d[i] = a[[i, i]];
        a[[i, i]] = S::one();
        for j in 0..i {
            a[[j, i]] = S::zero();
            a[[i, j]] = S::zero();
        }
    }
}

/// QL iteration with implicit shifts on a tridiagonal matrix, rotating the
/// accumulated transform `z` along. `d` holds the diagonal in, eigenvalues
/// out; `e` the subdiagonal (destroyed).
fn ql_implicit<S: Scalar>(d: &mut [S], e: &mut [S], z: &mut Array2<S>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let two = S::from_f64(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = S::zero();
    for l in 0..n {
        let mut iter = 0usize;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= S::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::numerical(format!(
                    "eigenvalue {l} did not converge in {MAX_QL_SWEEPS} QL sweeps"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(S::one());
            let sign_r = if g >= S::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = S::one();
            let mut c = S::one();
            let mut p = S::zero();
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == S::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = S::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[[k, i + 1]];
                    z[[k, i + 1]] = s * z[[k, i]] + c * f;
                    z[[k, i]] = c * z[[k, i]] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = S::zero();
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng as _;

    /// Cyclic Jacobi eigensolver: slow, simple, and entirely independent of
    /// the production path above. Test oracle only.
    fn jacobi_eigh(matrix: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
        let n = matrix.nrows();
        let mut a = matrix.clone();
        let mut v = Array2::<f64>::eye(n);
        for _sweep in 0..100 {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[[i, j]] * a[[i, j]];
                }
            }
            if off.sqrt() < 1e-14 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[[p, q]].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[[k, p]];
                        let akq = a[[k, q]];
                        a[[k, p]] = c * akp - s * akq;
                        a[[k, q]] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[[p, k]];
                        let aqk = a[[q, k]];
                        a[[p, k]] = c * apk - s * aqk;
                        a[[q, k]] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[[k, p]];
                        let vkq = v[[k, q]];
                        v[[k, p]] = c * vkp - s * vkq;
                        v[[k, q]] = s * vkp + c * vkq;
                    }
                }
            }
        }
        ((0..n).map(|i| a[[i, i]]).collect(), v)
    }

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let x = rng.gen_range(-1.0..1.0);
                m[[i, j]] = x;
                m[[j, i]] = x;
            }
        }
        m
    }

    fn assert_residuals(matrix: &Array2<f64>, pair: &EigenPair<f64>, tol: f64) {
        let n = matrix.nrows();
        let av = matrix.dot(&pair.vectors);
        for j in 0..n {
            for i in 0..n {
                let expect = pair.values[j] * pair.vectors[[i, j]];
                assert!(
                    (av[[i, j]] - expect).abs() <= tol,
                    "residual {} at ({i}, {j})",
                    (av[[i, j]] - expect).abs()
                );
            }
        }
        let dev = super::super::orthonormality_deviation(&pair.vectors);
        assert!(dev <= tol, "orthonormality deviation {dev}");
    }

    #[test]
    fn identity_and_diagonal() {
        let pair = eigh(&Array2::<f64>::eye(5)).unwrap();
        for v in pair.values.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        let d = array![[2.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 5.0]];
        let pair = eigh(&d).unwrap();
        assert_abs_diff_eq!(pair.values[0], 5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pair.values[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pair.values[2], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pair.vectors[[2, 0]], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn two_by_two_analytic() {
        // eigenvalues of [[a, b], [b, a]] are a ± b
        let m: Array2<f64> = array![[1.0, 0.25], [0.25, 1.0]];
        let pair = eigh(&m).unwrap();
        assert_abs_diff_eq!(pair.values[0], 1.25, epsilon = 1e-14);
        assert_abs_diff_eq!(pair.values[1], 0.75, epsilon = 1e-14);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(pair.vectors[[0, 0]].abs(), s, epsilon = 1e-12);
    }

    #[test]
    fn ring_graph_spectrum_is_analytic() {
        // normalized Laplacian of the n-cycle has eigenvalues 1 - cos(2 pi j / n)
        let n = 16;
        let mut l = Array2::<f64>::eye(n);
        for i in 0..n {
            l[[i, (i + 1) % n]] = -0.5;
            l[[(i + 1) % n, i]] = -0.5;
        }
        let pair = eigh(&l).unwrap();
        let mut expect: Vec<f64> = (0..n)
            .map(|j| 1.0 - (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
            .collect();
        expect.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (got, want) in pair.values.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(*got, *want, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_matrix_is_fine() {
        let pair = eigh(&Array2::<f64>::zeros((4, 4))).unwrap();
        for v in pair.values.iter() {
            assert_eq!(*v, 0.0);
        }
        assert_abs_diff_eq!(
            super::super::orthonormality_deviation(&pair.vectors),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn matches_jacobi_oracle_on_random_matrices() {
        for seed in 0..10 {
            let m = random_symmetric(20, seed);
            let pair = eigh(&m).unwrap();
            let (mut jvals, _) = jacobi_eigh(&m);
            jvals.sort_by(|a, b| b.partial_cmp(a).unwrap());
            for (got, want) in pair.values.iter().zip(jvals.iter()) {
                assert_abs_diff_eq!(*got, *want, epsilon = 1e-9);
            }
            assert_residuals(&m, &pair, 1e-9);
        }
    }

    #[test]
    fn handles_clustered_eigenvalues() {
        let mut m = Array2::<f64>::eye(30);
        let bump = random_symmetric(30, 99).mapv(|x| x * 1e-10);
        m = &m + &bump;
        let pair = eigh(&m).unwrap();
        assert_residuals(&m, &pair, 1e-9);
        for v in pair.values.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let rect = Array2::<f64>::zeros((2, 3));
        assert!(eigh(&rect).is_err());
        let nan = array![[f64::NAN, 0.0], [0.0, 1.0]];
        assert!(eigh(&nan).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let m = array![[2.0f32, 1.0], [1.0, 2.0]];
        let pair = eigh(&m).unwrap();
        assert!((pair.values[0] - 3.0).abs() < 1e-5);
        assert!((pair.values[1] - 1.0).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn residuals_and_orthonormality_hold(seed in 0u64..500, n in 2usize..24) {
            let m = random_symmetric(n, seed);
            let pair = eigh(&m).unwrap();
            let scale = 1.0 + pair.values[0].abs().max(pair.values[n - 1].abs());
            assert_residuals(&m, &pair, 1e-11 * scale * n as f64);
            for w in pair.values.windows(2) {
                prop_assert!(w[0] >= w[1]);
            }
        }
    }
}

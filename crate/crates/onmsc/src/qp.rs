//! Simplex-constrained quadratic programming.
//!
//! Both solvers learn view weights by minimizing `μᵀMμ - fᵀμ` over the
//! probability simplex. The solver is a monotone accelerated projected
//! gradient method with backtracking line search; the projection is the
//! exact sorted-threshold Euclidean projection. `M` is symmetrized and
//! eigenvalue-clamped at zero before solving, so slightly indefinite
//! inputs (rounding noise on a Gram matrix) do not break convexity.
//!
//! The problem is internally rescaled by `c = max(1, max|M_ij|)`, which
//! leaves the minimizer unchanged; the stopping tolerance applies to the
//! rescaled fixed-point residual so it means the same thing for graphs of
//! any size.

use crate::error::{Error, Result};
use crate::linalg::eigh;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use thiserror::Error as ThisError;

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights<S> {
    values: Array1<S>,
}

impl<S: Scalar> SimplexWeights<S> {
    pub fn new(values: Array1<S>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::data("weight vector must be non-empty".to_string()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("weights must be finite".to_string()));
        }
        let sum = values.sum();
        if (sum - S::one()).abs() > S::CHECK_TOL {
            return Err(Error::data(format!("weights must sum to 1, got {sum}")));
        }
        if values.iter().any(|&x| x < -S::CHECK_TOL || x > S::one() + S::CHECK_TOL) {
            return Err(Error::data("weights must lie in [0, 1]".to_string()));
        }
        Ok(SimplexWeights { values })
    }

    pub fn uniform(len: usize) -> Self {
        assert!(len > 0, "weight vector must be non-empty");
        let w = S::from_usize(len).recip();
        SimplexWeights {
            values: Array1::from_elem(len, w),
        }
    }

    /// All mass on one coordinate.
    pub fn vertex(len: usize, index: usize) -> Self {
        assert!(index < len, "vertex index out of range");
        let mut values = Array1::from_elem(len, S::zero());
        values[index] = S::one();
        SimplexWeights { values }
    }

    pub(crate) fn from_parts(values: Array1<S>) -> Self {
        debug_assert!((values.sum() - S::one()).abs() <= S::CHECK_TOL);
        debug_assert!(values.iter().all(|&x| x >= S::zero()));
        SimplexWeights { values }
    }

    pub fn values(&self) -> &Array1<S> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Euclidean projection onto the probability simplex (sorted-threshold
/// closed form). Inputs must be finite.
pub fn project_to_simplex<S: Scalar>(v: &Array1<S>) -> SimplexWeights<S> {
    assert!(!v.is_empty(), "cannot project an empty vector");
    assert!(v.iter().all(|x| x.is_finite()), "projection input must be finite");
    let mut sorted: Vec<S> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = S::zero();
    let mut tau = sorted[0] - S::one();
    for (j, &u) in sorted.iter().enumerate() {
        cumsum = cumsum + u;
        let j1 = S::from_usize(j + 1);
        let candidate = (cumsum - S::one()) / j1;
        if u - candidate > S::zero() {
            tau = candidate;
        } else {
            break;
        }
    }
    let values = v.mapv(|x| (x - tau).max(S::zero()).min(S::one()));
    SimplexWeights::from_parts(values)
}

/// Symmetrize and clamp negative eigenvalues at zero.
pub fn psd_repair<S: Scalar>(m: &Array2<S>) -> Result<Array2<S>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::data(format!("matrix must be square, got {r}x{c}")));
    }
    let mt = m.t().to_owned();
    let sym = (m + &mt) / S::from_f64(2.0);
    let pair = eigh(&sym)?;
    let n = r;
    let mut out = Array2::zeros((n, n));
    for l in 0..n {
        let lam = pair.values[l].max(S::zero());
        if lam == S::zero() {
            continue;
        }
        for i in 0..n {
            let w = lam * pair.vectors[[i, l]];
            for j in 0..n {
                out[[i, j]] = out[[i, j]] + w * pair.vectors[[j, l]];
            }
        }
    }
    Ok(out)
}

/// Solver parameters. `epsilon` bounds the rescaled fixed-point residual
/// `‖μ - Π(μ - ∇)‖₂` at the returned point.
#[derive(Debug, Clone, Copy)]
pub struct QpConfig<S> {
    pub epsilon: S,
    pub max_iterations: usize,
}

impl<S: Scalar> Default for QpConfig<S> {
    fn default() -> Self {
        QpConfig {
            epsilon: S::from_f64(1e-8),
            max_iterations: 10_000,
        }
    }
}

/// Result of a QP solve.
#[derive(Debug, Clone)]
pub struct QpSolution<S> {
    pub weights: SimplexWeights<S>,
    /// Objective `μᵀMμ - fᵀμ` at the returned weights, with the repaired `M`.
    pub objective: S,
    pub iterations: usize,
    /// Rescaled fixed-point residual at the returned weights.
    pub residual: S,
    /// Objective after each iteration (original scale); non-increasing.
    pub trace: Vec<S>,
}

#[derive(Debug, ThisError)]
pub enum QpError<S: Scalar> {
    #[error(transparent)]
    Invalid(Error),
    #[error("simplex QP stalled at residual {} after {} iterations", .0.residual, .0.iterations)]
    DidNotConverge(Box<QpSolution<S>>),
}

impl<S: Scalar> From<QpError<S>> for Error {
    fn from(e: QpError<S>) -> Error {
        match e {
            QpError::Invalid(err) => err,
            QpError::DidNotConverge(best) => Error::Numerical(format!(
                "simplex QP stalled at residual {} after {} iterations",
                best.residual, best.iterations
            )),
        }
    }
}

pub type QpResult<S> = std::result::Result<QpSolution<S>, QpError<S>>;

/// Exact KKT solve on the support a short gradient step would keep.
/// First-order steps identify the active set quickly but crawl toward
/// the optimum when the quadratic is nearly singular (highly correlated
/// views); pinning the support and solving the equality-constrained
/// system finishes the job in one shot. Returns a feasible candidate
/// that does not increase the objective, or None when the guess fails.
fn kkt_polish<S: Scalar>(
    mh: &Array2<S>,
    fh: &Array1<S>,
    x: &Array1<S>,
    fx: S,
    lip: S,
) -> Option<(Array1<S>, S)> {
    let v = fh.len();
    let two = S::from_f64(2.0);
    let mut g = mh.dot(x);
    g.mapv_inplace(|t| t * two);
    let g = &g - fh;
    let probe = project_to_simplex(&(x - &g.mapv(|t| t / lip)));
    let free: Vec<usize> = (0..v).filter(|&i| probe.values()[i] > S::zero()).collect();
    let s = free.len();
    // stationarity with the simplex multiplier: [2M_FF -1; -1' 0][x; nu] = [f_F; -1]
    let mut a = Array2::<S>::zeros((s + 1, s + 1));
    let mut rhs = Array1::<S>::zeros(s + 1);
    for (p, &i) in free.iter().enumerate() {
        for (q, &j) in free.iter().enumerate() {
            a[[p, q]] = two * mh[[i, j]];
        }
        a[[p, s]] = -S::one();
        a[[s, p]] = -S::one();
        rhs[p] = fh[i];
    }
    rhs[s] = -S::one();
    let pair = eigh(&a).ok()?;
    let cutoff = pair
        .values
        .iter()
        .fold(S::zero(), |m, &l| m.max(l.abs()))
        * S::RANK_TOL;
    let mut u = Array1::<S>::zeros(s + 1);
    for j in 0..s + 1 {
        let lam = pair.values[j];
        if lam.abs() <= cutoff {
            continue;
        }
        let col = pair.vectors.column(j);
        let coef = col.dot(&rhs) / lam;
        for i in 0..s + 1 {
            u[i] = u[i] + coef * col[i];
        }
    }
    let mut cand = Array1::<S>::zeros(v);
    for (p, &i) in free.iter().enumerate() {
        if u[p] < -S::CHECK_TOL {
            return None;
        }
        cand[i] = u[p].max(S::zero());
    }
    let cand = project_to_simplex(&cand).values().clone();
    let fc = cand.dot(&mh.dot(&cand)) - fh.dot(&cand);
    // near the optimum the f64 objective cannot discriminate; allow an
    // ulp-scale wobble so the exact candidate is not rejected on rounding
    let slack = (S::one() + fx.abs()) * S::epsilon() * S::from_f64(8.0);
    (fc <= fx + slack).then_some((cand, fc.min(fx)))
}

/// Minimize `μᵀMμ - fᵀμ` over the probability simplex, starting from
/// uniform weights. Monotone accelerated projected gradient: the momentum
/// step is discarded whenever it would increase the objective, so the
/// per-iteration objective trace never rises.
pub fn solve_simplex_qp<S: Scalar>(
    m: &Array2<S>,
    f: &Array1<S>,
    cfg: &QpConfig<S>,
) -> QpResult<S> {
    let v = f.len();
    if v == 0 {
        return Err(QpError::Invalid(Error::data(
            "weight dimension must be at least 1".to_string(),
        )));
    }
    if m.dim() != (v, v) {
        return Err(QpError::Invalid(Error::data(format!(
            "quadratic term must be {v}x{v}, got {}x{}",
            m.nrows(),
            m.ncols()
        ))));
    }
    if m.iter().any(|x| !x.is_finite()) || f.iter().any(|x| !x.is_finite()) {
        return Err(QpError::Invalid(Error::data(
            "QP inputs must be finite".to_string(),
        )));
    }
    if !(cfg.epsilon >= S::zero()) {
        return Err(QpError::Invalid(Error::config(
            "epsilon must be nonnegative".to_string(),
        )));
    }
    let m_psd = psd_repair(m).map_err(QpError::Invalid)?;

    // rescale so the tolerance is size-independent; the argmin is unchanged
    let scale = m_psd
        .iter()
        .chain(f.iter())
        .fold(S::one(), |acc, &x| acc.max(x.abs()));
    let mh = m_psd.mapv(|x| x / scale);
    let fh = f.mapv(|x| x / scale);

    let two = S::from_f64(2.0);
    let obj = |x: &Array1<S>| x.dot(&mh.dot(x)) - fh.dot(x);
    let grad = |x: &Array1<S>| {
        let mut g = mh.dot(x);
        g.mapv_inplace(|t| t * two);
        &g - &fh
    };
    let residual_at = |x: &Array1<S>, g: &Array1<S>| {
        let stepped = project_to_simplex(&(x - g));
        let d = stepped.values() - x;
        d.dot(&d).sqrt()
    };

    let mut x = SimplexWeights::<S>::uniform(v).values().clone();
    let mut y = x.clone();
    let mut t_k = S::one();
    let mut fx = obj(&x);
    // Frobenius bound dominates 2*lambda_max, so 1/lip steps always descend
    let mut lip = S::from_f64(1.0).max(two * mh.iter().map(|&t| t * t).sum::<S>().sqrt());
    let mut trace: Vec<S> = Vec::new();
    let mut iterations = 0usize;

    let finish = |x: Array1<S>, fx: S, iterations: usize, residual: S, trace: Vec<S>| QpSolution {
        weights: SimplexWeights::from_parts(x),
        objective: fx * scale,
        iterations,
        residual,
        trace,
    };

    let mut next_polish = 64usize;
    loop {
        let g = grad(&x);
        let r = residual_at(&x, &g);
        if r <= cfg.epsilon {
            return Ok(finish(x, fx, iterations, r, trace));
        }
        if iterations >= cfg.max_iterations {
            // last chance before giving up
            if let Some((cand, fc)) = kkt_polish(&mh, &fh, &x, fx, lip) {
                let gc = grad(&cand);
                let rc = residual_at(&cand, &gc);
                if rc <= cfg.epsilon {
                    trace.push(fc * scale);
                    return Ok(finish(cand, fc, iterations, rc, trace));
                }
            }
            return Err(QpError::DidNotConverge(Box::new(finish(
                x, fx, iterations, r, trace,
            ))));
        }
        iterations += 1;
        if iterations == next_polish {
            next_polish += 64;
            if let Some((cand, fc)) = kkt_polish(&mh, &fh, &x, fx, lip) {
                x = cand;
                fx = fc;
                y = x.clone();
                t_k = S::one();
                trace.push(fx * scale);
                continue;
            }
        }

        // backtracking proximal step from the momentum point
        let gy = grad(&y);
        let fy = obj(&y);
        let z = loop {
            let cand = project_to_simplex(&(&y - &gy.mapv(|t| t / lip)))
                .values()
                .clone();
            let d = &cand - &y;
            let quad = fy + gy.dot(&d) + lip / two * d.dot(&d);
            let fc = obj(&cand);
            if fc <= quad + S::epsilon() * (S::one() + quad.abs()) {
                break cand;
            }
            lip = lip * two;
        };
        let fz = obj(&z);

        if fz <= fx {
            let t_next = (S::one() + (S::one() + S::from_f64(4.0) * t_k * t_k).sqrt()) / two;
            let mut y_next = z.clone();
            for i in 0..v {
                y_next[i] = y_next[i] + (t_k - S::one()) / t_next * (z[i] - x[i]);
            }
            x = z;
            fx = fz;
            y = y_next;
            t_k = t_next;
        } else {
            // momentum overshot: plain descent step from x, restart momentum
            let w = project_to_simplex(&(&x - &g.mapv(|t| t / lip)))
                .values()
                .clone();
            let fw = obj(&w);
            if fw < fx {
                x = w;
                fx = fw;
            }
            y = x.clone();
            t_k = S::one();
        }
        trace.push(fx * scale);
    }
}

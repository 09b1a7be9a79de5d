//! Early fusion: learn one consensus graph across views and orders.
//!
//! The solver fits a low-rank consensus Laplacian `L* = I - PΛPᵀ` to the
//! weighted per-view Laplacians at every order, while an embedding `H`
//! chases the bottom eigenspace of `L*` and a correlation penalty pushes
//! the view weights away from redundant views:
//!
//! ```text
//! min  Σ_o ‖L* - Σ_p μ_p L_p^(o)‖²  +  tr(Hᵀ L* H)  +  α μᵀMμ
//! ```
//!
//! over orthonormal `P` (n×k), diagonal `Λ` with entries in [0, 1],
//! orthonormal `H`, and simplex weights `μ`. Each block update is the
//! exact minimizer of its subproblem, so the objective never increases:
//!
//! * `H`: bottom-k eigenvectors of `L*`, which are the columns of `P`.
//! * `(P, Λ)`: with `C = HHᵀ + 2 Σ_o (I - L_μ^(o))`, the objective in
//!   `F = PΛPᵀ` is `O‖F‖² - tr(FC)` up to constants; the top-k
//!   eigenvectors of `C` with `λ_i = clamp(c_i / 2O, 0, 1)` minimize it.
//! * `μ`: a simplex QP with quadratic term `Z + αM` and linear term `2z`,
//!   `Z_pq = Σ_o tr(L_p^(o) L_q^(o))`, `z_p = Σ_o tr(L* L_p^(o))`.

use crate::error::{Error, Result};
use crate::graph::{affinity_orders, normalized_laplacian, AffinityMatrix, LaplacianMatrix};
use crate::linalg::{bottom_k_eigenvectors, top_k_eigenvectors, Partition};
use crate::qp::{solve_simplex_qp, QpConfig, SimplexWeights};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};

#[derive(Debug, Clone)]
pub struct EfConfig<S> {
    /// Number of clusters (embedding width).
    pub k: usize,
    /// Weight of the view-correlation penalty.
    pub alpha: S,
    pub max_iterations: usize,
    /// Relative objective change below which iteration stops.
    pub tolerance: S,
    pub qp: QpConfig<S>,
}

impl<S: Scalar> EfConfig<S> {
    pub fn new(k: usize) -> Self {
        EfConfig {
            k,
            alpha: S::one(),
            max_iterations: 100,
            tolerance: S::from_f64(1e-4),
            qp: QpConfig::default(),
        }
    }
}

/// Precomputed per-view quantities shared by every iteration.
#[derive(Debug, Clone)]
pub struct EfProblem<S> {
    laplacians: Vec<Vec<LaplacianMatrix<S>>>,
    /// `Z_pq = Σ_o tr(L_p^(o) L_q^(o))`.
    z: Array2<S>,
    /// View correlation `M_pq = Σ_o ⟨A_p^(o), A_q^(o)⟩ / (‖A_p^(o)‖‖A_q^(o)‖)`.
    corr: Array2<S>,
    n: usize,
    order: usize,
}

/// Correlation between two symmetric matrices: normalized Frobenius inner
/// product, 1 when proportional, 0 when orthogonal.
fn matrix_correlation<S: Scalar>(a: &Array2<S>, b: &Array2<S>) -> S {
    let mut dot = S::zero();
    let mut na = S::zero();
    let mut nb = S::zero();
    for (&x, &y) in a.iter().zip(b.iter()) {
        dot = dot + x * y;
        na = na + x * x;
        nb = nb + y * y;
    }
    let denom = na.sqrt() * nb.sqrt();
    if denom > S::zero() {
        dot / denom
    } else {
        S::zero()
    }
}

/// Pairwise view correlation summed over orders. Diagonal entries equal
/// the number of orders; the matrix is a sum of Gram matrices, so PSD.
pub fn correlation_matrix_affinity<S: Scalar>(
    per_view_orders: &[Vec<AffinityMatrix<S>>],
) -> Array2<S> {
    let v = per_view_orders.len();
    let mut m = Array2::zeros((v, v));
    for p in 0..v {
        for q in p..v {
            let mut acc = S::zero();
            for (ap, aq) in per_view_orders[p].iter().zip(per_view_orders[q].iter()) {
                acc = acc + matrix_correlation(ap.values(), aq.values());
            }
            m[[p, q]] = acc;
            m[[q, p]] = acc;
        }
    }
    m
}

impl<S: Scalar> EfProblem<S> {
    /// Expand first-order affinities to all orders `1..=order` and cache
    /// the Laplacians and the trace products the μ-step needs.
    pub fn new(affinities: &[AffinityMatrix<S>], order: usize) -> Result<Self> {
        if affinities.is_empty() {
            return Err(Error::data("need at least one view".to_string()));
        }
        if order == 0 {
            return Err(Error::config("order must be at least 1".to_string()));
        }
        let n = affinities[0].n();
        for a in affinities {
            if a.n() != n {
                return Err(Error::data(format!(
                    "views disagree on sample count: {} vs {n}",
                    a.n()
                )));
            }
        }
        let per_view: Vec<Vec<AffinityMatrix<S>>> = affinities
            .iter()
            .map(|a| affinity_orders(a, order))
            .collect::<Result<_>>()?;
        let corr = correlation_matrix_affinity(&per_view);
        let laplacians: Vec<Vec<LaplacianMatrix<S>>> = per_view
            .iter()
            .map(|orders| orders.iter().map(normalized_laplacian).collect())
            .collect();
        let v = laplacians.len();
        let mut z = Array2::zeros((v, v));
        for p in 0..v {
            for q in p..v {
                let mut acc = S::zero();
                for o in 0..order {
                    acc = acc
                        + laplacians[p][o]
                            .values
                            .iter()
                            .zip(laplacians[q][o].values.iter())
                            .map(|(&x, &y)| x * y)
                            .sum::<S>();
                }
                z[[p, q]] = acc;
                z[[q, p]] = acc;
            }
        }
        Ok(EfProblem {
            laplacians,
            z,
            corr,
            n,
            order,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn views(&self) -> usize {
        self.laplacians.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn trace_products(&self) -> &Array2<S> {
        &self.z
    }

    pub fn correlation(&self) -> &Array2<S> {
        &self.corr
    }

    /// Weighted Laplacian `Σ_p μ_p L_p^(o)` for one order (`o` is 1-based).
    fn weighted_laplacian(&self, mu: &SimplexWeights<S>, o: usize) -> Array2<S> {
        let mut acc = Array2::zeros((self.n, self.n));
        for (p, lap) in self.laplacians.iter().enumerate() {
            let w = mu.values()[p];
            if w == S::zero() {
                continue;
            }
            acc.zip_mut_with(&lap[o - 1].values, |out, &l| *out = *out + w * l);
        }
        acc
    }
}

/// Mutable block variables of the alternation.
#[derive(Debug, Clone)]
pub struct EfState<S> {
    pub p: Array2<S>,
    pub lambda: Array1<S>,
    pub h: Array2<S>,
    pub mu: SimplexWeights<S>,
}

#[derive(Debug, Clone)]
pub struct EfOutcome<S> {
    /// Final embedding, rows are spectral coordinates of the samples.
    pub partition: Partition<S>,
    pub weights: SimplexWeights<S>,
    /// Consensus spectrum, entries in [0, 1].
    pub lambda: Array1<S>,
    /// Objective after the initial state and after every block update.
    pub trace: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
}

/// Consensus Laplacian `I - PΛPᵀ`.
fn consensus_laplacian<S: Scalar>(p: &Array2<S>, lambda: &Array1<S>) -> Array2<S> {
    let n = p.nrows();
    let k = p.ncols();
    let mut l = Array2::eye(n);
    for c in 0..k {
        let lam = lambda[c];
        if lam == S::zero() {
            continue;
        }
        for i in 0..n {
            let w = lam * p[[i, c]];
            for j in 0..n {
                l[[i, j]] = l[[i, j]] - w * p[[j, c]];
            }
        }
    }
    l
}

/// Full objective at a state.
pub fn ef_objective<S: Scalar>(problem: &EfProblem<S>, state: &EfState<S>, alpha: S) -> S {
    let lstar = consensus_laplacian(&state.p, &state.lambda);
    let mut total = S::zero();
    for o in 1..=problem.order {
        let lmu = problem.weighted_laplacian(&state.mu, o);
        let mut dist = S::zero();
        for (&a, &b) in lstar.iter().zip(lmu.iter()) {
            let d = a - b;
            dist = dist + d * d;
        }
        total = total + dist;
    }
    let lh = lstar.dot(&state.h);
    for (&a, &b) in state.h.iter().zip(lh.iter()) {
        total = total + a * b;
    }
    let mu = state.mu.values();
    total + alpha * mu.dot(&problem.corr.dot(mu))
}

/// Initial state: uniform weights; `(P, Λ)` from the bottom-k eigenpairs
/// of the Laplacian averaged over views and orders, with eigenvalues
/// mapped to the affinity side as `λ = clamp(1 - value, 0, 1)`.
fn initial_state<S: Scalar>(problem: &EfProblem<S>, k: usize) -> Result<EfState<S>> {
    let v = problem.views();
    let mu = SimplexWeights::uniform(v);
    let mut avg = Array2::zeros((problem.n, problem.n));
    for laps in &problem.laplacians {
        for lap in laps {
            avg.zip_mut_with(&lap.values, |out, &l| *out = *out + l);
        }
    }
    let count = S::from_usize(v * problem.order);
    avg.mapv_inplace(|x| x / count);
    let (partition, values) = bottom_k_eigenvectors(&avg, k)?;
    let lambda = values.mapv(|x| (S::one() - x).max(S::zero()).min(S::one()));
    let p = partition.into_values();
    Ok(EfState {
        h: p.clone(),
        p,
        lambda,
        mu,
    })
}

/// `(P, Λ)` update: top-k eigenpairs of `C = HHᵀ + 2 Σ_o (I - L_μ^(o))`.
fn update_p_lambda<S: Scalar>(
    problem: &EfProblem<S>,
    state: &mut EfState<S>,
    k: usize,
) -> Result<()> {
    let n = problem.n;
    let two = S::from_f64(2.0);
    let mut c = state.h.dot(&state.h.t());
    let shift = two * S::from_usize(problem.order);
    for i in 0..n {
        c[[i, i]] = c[[i, i]] + shift;
    }
    for o in 1..=problem.order {
        let lmu = problem.weighted_laplacian(&state.mu, o);
        c.zip_mut_with(&lmu, |out, &l| *out = *out - two * l);
    }
    let pair = top_k_eigenvectors(&c, k)?;
    let denom = two * S::from_usize(problem.order);
    state.lambda = pair.values.mapv(|r| (r / denom).max(S::zero()).min(S::one()));
    state.p = pair.vectors;
    Ok(())
}

/// μ update: simplex QP on `μᵀ(Z + αM)μ - 2zᵀμ`. Keeps the previous
/// weights when the numerical solve fails to improve on them.
fn update_mu<S: Scalar>(
    problem: &EfProblem<S>,
    state: &mut EfState<S>,
    alpha: S,
    qp: &QpConfig<S>,
) -> Result<()> {
    let v = problem.views();
    let lstar = consensus_laplacian(&state.p, &state.lambda);
    let mut zvec = Array1::zeros(v);
    for (p, laps) in problem.laplacians.iter().enumerate() {
        let mut acc = S::zero();
        for lap in laps {
            acc = acc
                + lstar
                    .iter()
                    .zip(lap.values.iter())
                    .map(|(&x, &y)| x * y)
                    .sum::<S>();
        }
        zvec[p] = acc;
    }
    let quad = &problem.z + &problem.corr.mapv(|x| alpha * x);
    let linear = zvec.mapv(|x| x * S::from_f64(2.0));
    let candidate = solve_simplex_qp(&quad, &linear, qp).map_err(Error::from)?;
    let raw_obj = |w: &Array1<S>| w.dot(&quad.dot(w)) - linear.dot(w);
    let old = raw_obj(state.mu.values());
    let new = raw_obj(candidate.weights.values());
    if new <= old {
        state.mu = candidate.weights;
    }
    Ok(())
}

/// Run the alternation from the spectral initialization.
pub fn solve_ef<S: Scalar>(problem: &EfProblem<S>, cfg: &EfConfig<S>) -> Result<EfOutcome<S>> {
    if cfg.k == 0 || cfg.k > problem.n {
        return Err(Error::config(format!(
            "k = {} must lie in [1, {}]",
            cfg.k, problem.n
        )));
    }
    if !cfg.alpha.is_finite() || cfg.alpha < S::zero() {
        return Err(Error::config("alpha must be finite and nonnegative".to_string()));
    }
    let mut state = initial_state(problem, cfg.k)?;
    let mut trace = vec![ef_objective(problem, &state, cfg.alpha)];
    let mut iterations = 0;
    let mut converged = false;
    let mut previous = trace[0];
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        // H chases the bottom eigenspace of L*, which is exactly P
        state.h = state.p.clone();
        trace.push(ef_objective(problem, &state, cfg.alpha));
        update_p_lambda(problem, &mut state, cfg.k)?;
        trace.push(ef_objective(problem, &state, cfg.alpha));
        update_mu(problem, &mut state, cfg.alpha, &cfg.qp)?;
        let current = ef_objective(problem, &state, cfg.alpha);
        trace.push(current);
        let denom = current.abs().max(S::epsilon());
        if (previous - current).abs() / denom < cfg.tolerance {
            converged = true;
            break;
        }
        previous = current;
    }
    // the final H equals the final P by the analytic H-step
    state.h = state.p.clone();
    let partition = Partition::new(state.h)?;
    Ok(EfOutcome {
        partition,
        weights: state.mu,
        lambda: state.lambda,
        trace,
        iterations,
        converged,
    })
}

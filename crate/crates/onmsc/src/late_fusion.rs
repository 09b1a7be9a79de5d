//! Late fusion: align per-view spectral partitions into one consensus.
//!
//! Each view is first reduced to base partitions `H_p^(o)` (bottom-k
//! eigenvectors of the view's order-`o` normalized Laplacian, or their
//! Nystrom approximation). The solver then maximizes
//!
//! ```text
//! max  tr(H*ᵀ Σ_o Σ_p μ_p H_p^(o) W_p^(o))  +  λ₁ tr(H*ᵀ F)  -  λ₂ μᵀMμ
//! ```
//!
//! over the orthonormal consensus `H*`, per-view orthogonal rotations
//! `W_p^(o)` (k×k), and simplex weights `μ`. `F` is the partition of the
//! view-averaged first-order graph and acts as an anchor; `M` correlates
//! the base partitions so redundant views share their weight. One
//! iteration updates the blocks in the order `W → μ → H*`; every step
//! either solves its subproblem exactly or is discarded when it does not
//! improve, so the objective never decreases.

use crate::error::{Error, Result};
use crate::graph::{next_order_affinity, normalized_affinity, AffinityMatrix};
use crate::linalg::{
    bottom_k_eigenvectors, nystrom_embedding, orthogonalize, procrustes_align, NystromConfig,
    Partition,
};
use crate::qp::{solve_simplex_qp, QpConfig, SimplexWeights};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// Which linear term the μ-step QP uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum QpVariant {
    /// Alignment rewards scaled by `1/λ₂`; the exact μ-subproblem.
    #[default]
    Derived,
    /// Alignment rewards scaled by `λ₁/λ₂` instead.
    LambdaRatio,
}

/// How base partitions are computed from each graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingBackend {
    /// Dense eigensolve of the full Laplacian.
    Exact,
    /// Landmark Nystrom sketch, then orthogonalization.
    Nystrom { m: usize, oversample: usize },
}

#[derive(Debug, Clone)]
pub struct LfConfig<S> {
    /// Number of clusters (partition width).
    pub k: usize,
    /// Highest affinity order used per view.
    pub order: usize,
    /// Anchor strength toward the view-averaged partition.
    pub lambda1: S,
    /// View-correlation penalty; 0 selects the single best-aligned view.
    pub lambda2: S,
    pub variant: QpVariant,
    pub backend: EmbeddingBackend,
    pub max_iterations: usize,
    /// Relative objective change below which iteration stops.
    pub tolerance: S,
    pub qp: QpConfig<S>,
    pub seed: u64,
}

impl<S: Scalar> LfConfig<S> {
    pub fn new(k: usize) -> Self {
        LfConfig {
            k,
            order: 2,
            lambda1: S::one(),
            lambda2: S::one(),
            variant: QpVariant::Derived,
            backend: EmbeddingBackend::Exact,
            max_iterations: 100,
            tolerance: S::from_f64(1e-4),
            qp: QpConfig::default(),
            seed: 0,
        }
    }
}

/// Partition of a graph given by its normalized affinity `G`: the top-k
/// eigenspace of `G`, which is the bottom-k eigenspace of `L = I - G`.
fn embedding_from_normalized<S: Scalar>(
    g: &Array2<S>,
    k: usize,
    backend: &EmbeddingBackend,
    seed: u64,
) -> Result<Partition<S>> {
    match backend {
        EmbeddingBackend::Exact => {
            let n = g.nrows();
            let mut lap = g.mapv(|x| -x);
            for i in 0..n {
                lap[[i, i]] = lap[[i, i]] + S::one();
            }
            let (partition, _) = bottom_k_eigenvectors(&lap, k)?;
            Ok(partition)
        }
        EmbeddingBackend::Nystrom { m, oversample } => {
            let cfg = NystromConfig {
                m: *m,
                s: *oversample,
                seed,
            };
            let emb = nystrom_embedding(g, k, &cfg)?;
            let (partition, _) = orthogonalize(&emb.h, &emb.values)?;
            Ok(partition)
        }
    }
}

/// Spectral partition of a single affinity matrix.
pub fn spectral_embedding<S: Scalar>(
    affinity: &AffinityMatrix<S>,
    k: usize,
    backend: &EmbeddingBackend,
    seed: u64,
) -> Result<Partition<S>> {
    embedding_from_normalized(&normalized_affinity(affinity), k, backend, seed)
}

/// Partition of the view-averaged graph: the spectral embedding of the
/// mean of the normalized affinities. This is both a baseline method in
/// its own right and the anchor partition the late-fusion objective uses.
pub fn average_partition<S: Scalar>(
    affinities: &[AffinityMatrix<S>],
    k: usize,
    backend: &EmbeddingBackend,
    seed: u64,
) -> Result<Partition<S>> {
    if affinities.is_empty() {
        return Err(Error::data("need at least one view".to_string()));
    }
    let n = affinities[0].n();
    let mut gbar = Array2::zeros((n, n));
    for a in affinities {
        if a.n() != n {
            return Err(Error::data(format!(
                "views disagree on sample count: {} vs {n}",
                a.n()
            )));
        }
        gbar.zip_mut_with(&normalized_affinity(a), |s, &x| *s = *s + x);
    }
    let inv = S::from_usize(affinities.len()).recip();
    gbar.mapv_inplace(|x| x * inv);
    embedding_from_normalized(&gbar, k, backend, seed)
}

/// Pairwise partition correlation summed over orders:
/// `M_pq = Σ_o ⟨H_p^(o), H_q^(o)⟩ / (‖H_p^(o)‖‖H_q^(o)‖)`. A sum of Gram
/// matrices of unit-norm vectors, so PSD with diagonal equal to the order
/// count.
pub fn correlation_matrix_partitions<S: Scalar>(
    per_view_orders: &[Vec<Partition<S>>],
) -> Array2<S> {
    let v = per_view_orders.len();
    let mut m = Array2::zeros((v, v));
    for p in 0..v {
        for q in p..v {
            let mut acc = S::zero();
            for (hp, hq) in per_view_orders[p].iter().zip(per_view_orders[q].iter()) {
                let mut dot = S::zero();
                let mut np = S::zero();
                let mut nq = S::zero();
                for (&a, &b) in hp.values().iter().zip(hq.values().iter()) {
                    dot = dot + a * b;
                    np = np + a * a;
                    nq = nq + b * b;
                }
                let denom = np.sqrt() * nq.sqrt();
                if denom > S::zero() {
                    acc = acc + dot / denom;
                }
            }
            m[[p, q]] = acc;
            m[[q, p]] = acc;
        }
    }
    m
}

/// Base partitions plus the quantities the alternation reuses.
#[derive(Debug, Clone)]
pub struct LfProblem<S> {
    /// `partitions[p][o-1]` is the order-`o` partition of view `p`.
    partitions: Vec<Vec<Partition<S>>>,
    /// Anchor partition from the view-averaged first-order graph.
    prior: Partition<S>,
    corr: Array2<S>,
    n: usize,
    k: usize,
    order: usize,
}

impl<S: Scalar> LfProblem<S> {
    /// Assemble a problem from precomputed partitions. Useful for testing
    /// the alternation in isolation; `from_affinities` is the usual path.
    pub fn from_partitions(
        partitions: Vec<Vec<Partition<S>>>,
        prior: Partition<S>,
    ) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::data("need at least one view".to_string()));
        }
        let order = partitions[0].len();
        if order == 0 {
            return Err(Error::data("need at least one order per view".to_string()));
        }
        let n = prior.n();
        let k = prior.k();
        for (p, orders) in partitions.iter().enumerate() {
            if orders.len() != order {
                return Err(Error::data(format!(
                    "view {p} has {} orders, expected {order}",
                    orders.len()
                )));
            }
            for h in orders {
                if h.n() != n || h.k() != k {
                    return Err(Error::data(format!(
                        "view {p} partition is {}x{}, expected {n}x{k}",
                        h.n(),
                        h.k()
                    )));
                }
            }
        }
        let corr = correlation_matrix_partitions(&partitions);
        Ok(LfProblem {
            partitions,
            prior,
            corr,
            n,
            k,
            order,
        })
    }

    /// Build base partitions for every view and order from first-order
    /// affinities.
    pub fn from_affinities(affinities: &[AffinityMatrix<S>], cfg: &LfConfig<S>) -> Result<Self> {
        let mut builder = LfProblemBuilder::new(cfg);
        for a in affinities {
            builder.add_view(a.clone())?;
        }
        builder.finish()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn views(&self) -> usize {
        self.partitions.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn correlation(&self) -> &Array2<S> {
        &self.corr
    }

    pub fn prior(&self) -> &Partition<S> {
        &self.prior
    }

    pub fn partition(&self, view: usize, order: usize) -> &Partition<S> {
        &self.partitions[view][order - 1]
    }
}

/// Streaming problem construction: each view's affinity is consumed and
/// dropped before the next is added, so only one dense graph is alive at
/// a time on large inputs.
pub struct LfProblemBuilder<S> {
    k: usize,
    order: usize,
    backend: EmbeddingBackend,
    seed: u64,
    partitions: Vec<Vec<Partition<S>>>,
    /// Running sum of first-order normalized affinities.
    gsum: Option<Array2<S>>,
}

impl<S: Scalar> LfProblemBuilder<S> {
    pub fn new(cfg: &LfConfig<S>) -> Self {
        LfProblemBuilder {
            k: cfg.k,
            order: cfg.order,
            backend: cfg.backend,
            seed: cfg.seed,
            partitions: Vec::new(),
            gsum: None,
        }
    }

    pub fn add_view(&mut self, affinity: AffinityMatrix<S>) -> Result<()> {
        if self.order == 0 {
            return Err(Error::config("order must be at least 1".to_string()));
        }
        if let Some(g) = &self.gsum {
            if g.nrows() != affinity.n() {
                return Err(Error::data(format!(
                    "views disagree on sample count: {} vs {}",
                    affinity.n(),
                    g.nrows()
                )));
            }
        }
        let view_index = self.partitions.len();
        let mut per_order = Vec::with_capacity(self.order);
        let mut current: Option<AffinityMatrix<S>> = None;
        for o in 1..=self.order {
            if o > 1 {
                let prev = current.as_ref().unwrap_or(&affinity);
                current = Some(next_order_affinity(prev, &affinity));
            }
            let ao = current.as_ref().unwrap_or(&affinity);
            let g = normalized_affinity(ao);
            if o == 1 {
                match &mut self.gsum {
                    Some(acc) => acc.zip_mut_with(&g, |s, &x| *s = *s + x),
                    None => self.gsum = Some(g.clone()),
                }
            }
            let seed = derive_seed(self.seed, view_index as u64, o as u64);
            per_order.push(embedding_from_normalized(&g, self.k, &self.backend, seed)?);
        }
        self.partitions.push(per_order);
        Ok(())
    }

    pub fn finish(self) -> Result<LfProblem<S>> {
        let v = self.partitions.len();
        if v == 0 {
            return Err(Error::data("need at least one view".to_string()));
        }
        let mut gbar = self.gsum.expect("gsum set once a view was added");
        let inv = S::from_usize(v).recip();
        gbar.mapv_inplace(|x| x * inv);
        let prior = embedding_from_normalized(
            &gbar,
            self.k,
            &self.backend,
            derive_seed(self.seed, u64::MAX, 0),
        )?;
        LfProblem::from_partitions(self.partitions, prior)
    }
}

/// Mutable block variables of the alternation.
#[derive(Debug, Clone)]
pub struct LfState<S> {
    pub hstar: Array2<S>,
    pub mu: SimplexWeights<S>,
    /// `w[p][o-1]` rotates view p's order-o partition toward the consensus.
    pub w: Vec<Vec<Array2<S>>>,
}

#[derive(Debug, Clone)]
pub struct LfOutcome<S> {
    /// Final consensus partition.
    pub partition: Partition<S>,
    pub weights: SimplexWeights<S>,
    pub rotations: Vec<Vec<Array2<S>>>,
    /// Objective after the initial state and after every block update.
    pub trace: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
}

/// Weighted rotated sum `Σ_o Σ_p μ_p H_p^(o) W_p^(o)`.
fn aligned_sum<S: Scalar>(problem: &LfProblem<S>, state: &LfState<S>) -> Array2<S> {
    let mut acc = Array2::zeros((problem.n, problem.k));
    for (p, orders) in problem.partitions.iter().enumerate() {
        let weight = state.mu.values()[p];
        if weight == S::zero() {
            continue;
        }
        for (o, h) in orders.iter().enumerate() {
            let rotated = h.values().dot(&state.w[p][o]);
            acc.zip_mut_with(&rotated, |a, &r| *a = *a + weight * r);
        }
    }
    acc
}

/// Full objective at a state (maximized by the solver).
pub fn lf_objective<S: Scalar>(
    problem: &LfProblem<S>,
    state: &LfState<S>,
    lambda1: S,
    lambda2: S,
) -> S {
    let s = aligned_sum(problem, state);
    let mut align = S::zero();
    for (&h, &x) in state.hstar.iter().zip(s.iter()) {
        align = align + h * x;
    }
    let mut anchor = S::zero();
    for (&h, &f) in state.hstar.iter().zip(problem.prior.values().iter()) {
        anchor = anchor + h * f;
    }
    let mu = state.mu.values();
    align + lambda1 * anchor - lambda2 * mu.dot(&problem.corr.dot(mu))
}

/// Upper bound on the objective over the feasible set:
/// `(1 + O²v² + 2λ₁) k / 2`. Every iterate of [`solve_lf`] stays below it.
pub fn objective_upper_bound<S: Scalar>(order: usize, views: usize, k: usize, lambda1: S) -> S {
    let ov = S::from_usize(order * views);
    (S::one() + ov * ov + S::from_f64(2.0) * lambda1) * S::from_usize(k) / S::from_f64(2.0)
}

/// Alignment reward per view: `f_p = Σ_o ⟨H_p^(o) W_p^(o), H*⟩`.
fn view_rewards<S: Scalar>(problem: &LfProblem<S>, state: &LfState<S>) -> Array1<S> {
    let v = problem.views();
    let mut f = Array1::zeros(v);
    for (p, orders) in problem.partitions.iter().enumerate() {
        let mut acc = S::zero();
        for (o, h) in orders.iter().enumerate() {
            // ⟨H W, H*⟩ computed in k×k space as ⟨Hᵀ H*, W⟩
            let gram = h.values().t().dot(&state.hstar);
            for (&g, &w) in gram.iter().zip(state.w[p][o].iter()) {
                acc = acc + g * w;
            }
        }
        f[p] = acc;
    }
    f
}

fn update_rotations<S: Scalar>(problem: &LfProblem<S>, state: &mut LfState<S>) -> Result<()> {
    for (p, orders) in problem.partitions.iter().enumerate() {
        let weight = state.mu.values()[p];
        // a zero-weight view contributes nothing; its stale rotation is
        // kept rather than replaced by an arbitrary one
        if weight == S::zero() {
            continue;
        }
        for (o, h) in orders.iter().enumerate() {
            let gram = h.values().t().dot(&state.hstar).mapv(|x| x * weight);
            state.w[p][o] = procrustes_align(&gram)?;
        }
    }
    Ok(())
}

fn update_weights<S: Scalar>(
    problem: &LfProblem<S>,
    state: &mut LfState<S>,
    cfg: &LfConfig<S>,
) -> Result<()> {
    let rewards = view_rewards(problem, state);
    let mu_part = |mu: &Array1<S>| {
        rewards.dot(mu) - cfg.lambda2 * mu.dot(&problem.corr.dot(mu))
    };
    let candidate = if cfg.lambda2 == S::zero() {
        // the quadratic term vanishes; the maximizer is a vertex
        let mut best = 0usize;
        for p in 1..rewards.len() {
            if rewards[p] > rewards[best] {
                best = p;
            }
        }
        SimplexWeights::vertex(rewards.len(), best)
    } else {
        let coeff = match cfg.variant {
            QpVariant::Derived => cfg.lambda2.recip(),
            QpVariant::LambdaRatio => cfg.lambda1 / cfg.lambda2,
        };
        let f = rewards.mapv(|r| r * coeff);
        solve_simplex_qp(&problem.corr, &f, &cfg.qp)
            .map_err(Error::from)?
            .weights
    };
    // the QP solves a scaled surrogate; only accept improvements
    if mu_part(candidate.values()) >= mu_part(state.mu.values()) {
        state.mu = candidate;
    }
    Ok(())
}

fn update_consensus<S: Scalar>(
    problem: &LfProblem<S>,
    state: &mut LfState<S>,
    lambda1: S,
) -> Result<()> {
    let mut c = aligned_sum(problem, state);
    c.zip_mut_with(problem.prior.values(), |a, &f| *a = *a + lambda1 * f);
    state.hstar = procrustes_align(&c)?;
    Ok(())
}

/// Run the alternation: `W → μ → H*` per iteration from `H* = 0`,
/// uniform weights, and identity rotations.
pub fn solve_lf<S: Scalar>(problem: &LfProblem<S>, cfg: &LfConfig<S>) -> Result<LfOutcome<S>> {
    if cfg.k != problem.k {
        return Err(Error::config(format!(
            "config k = {} does not match problem k = {}",
            cfg.k, problem.k
        )));
    }
    for (name, value) in [("lambda1", cfg.lambda1), ("lambda2", cfg.lambda2)] {
        if !value.is_finite() || value < S::zero() {
            return Err(Error::config(format!(
                "{name} must be finite and nonnegative, got {value}"
            )));
        }
    }
    let v = problem.views();
    let mut state = LfState {
        hstar: Array2::zeros((problem.n, problem.k)),
        mu: SimplexWeights::uniform(v),
        w: vec![vec![Array2::eye(problem.k); problem.order]; v],
    };
    let mut trace = vec![lf_objective(problem, &state, cfg.lambda1, cfg.lambda2)];
    let mut previous = trace[0];
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        update_rotations(problem, &mut state)?;
        trace.push(lf_objective(problem, &state, cfg.lambda1, cfg.lambda2));
        update_weights(problem, &mut state, cfg)?;
        trace.push(lf_objective(problem, &state, cfg.lambda1, cfg.lambda2));
        update_consensus(problem, &mut state, cfg.lambda1)?;
        let current = lf_objective(problem, &state, cfg.lambda1, cfg.lambda2);
        trace.push(current);
        let denom = current.abs().max(S::epsilon());
        if (current - previous).abs() / denom < cfg.tolerance {
            converged = true;
            break;
        }
        previous = current;
    }
    let partition = Partition::new(state.hstar)?;
    Ok(LfOutcome {
        partition,
        weights: state.mu,
        rotations: state.w,
        trace,
        iterations,
        converged,
    })
}

//! One test per advertised guarantee of the toolkit. Each prints a
//! single verdict line (visible under `--nocapture`, or on failure), so
//! a full run reads as a scorecard. Runtime budgets are part of the
//! contract and checked alongside the numerical claims.

use std::collections::HashMap;
use std::time::Instant;

use ndarray::{Array1, Array2};
use onmsc::early_fusion::{solve_ef, EfConfig, EfProblem};
use onmsc::eval::{accuracy, kmeans, nmi, purity, KmeansConfig};
use onmsc::graph::{knn_affinity_from_features, AffinityMatrix, Bandwidth};
use onmsc::late_fusion::{
    average_partition, objective_upper_bound, solve_lf, EmbeddingBackend, LfConfig, LfProblem,
    LfProblemBuilder,
};
use onmsc::linalg::{
    eigh, nystrom_embedding, orthogonalize, orthonormality_deviation, procrustes_align,
    random_orthonormal, NystromConfig, Partition,
};
use onmsc::qp::{solve_simplex_qp, QpConfig};
use onmsc::rng::{derive_seed, rng_from_seed};
use onmsc::synth::{synth_views, SynthConfig, SynthDataset};
use rand::Rng;

fn verdict(name: &str, budget_secs: Option<f64>, started: Instant, mut failures: Vec<String>) {
    let elapsed = started.elapsed().as_secs_f64();
    if let Some(budget) = budget_secs {
        if elapsed > budget {
            failures.push(format!("runtime {elapsed:.1}s over the {budget:.0}s budget"));
        }
    }
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("acceptance {name}: {status} ({elapsed:.2}s)");
    if !failures.is_empty() {
        panic!("{name}: {}", failures.join(" | "));
    }
}

fn frob_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn frob_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn frob_norm_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Sum of singular values of `c`, via the eigenvalues of `cᵀc`.
fn nuclear_norm(c: &Array2<f64>) -> f64 {
    let gram = c.t().dot(c);
    let pair = eigh(&gram).unwrap();
    pair.values.iter().map(|&l| l.max(0.0).sqrt()).sum()
}

fn view_affinities(data: &SynthDataset<f64>, neighbors: usize) -> Vec<AffinityMatrix<f64>> {
    data.views
        .iter()
        .map(|v| knn_affinity_from_features(v, &Bandwidth::Median, neighbors).unwrap())
        .collect()
}

fn cluster_accuracy(part: &Partition<f64>, truth: &[usize], k: usize, seed: u64) -> f64 {
    let mut cfg = KmeansConfig::new(k, seed);
    cfg.restarts = 50;
    let fit = kmeans(part.values(), &cfg).unwrap();
    accuracy(&fit.labels, truth).unwrap()
}

/// The closed-form alignment step must attain the nuclear norm of its
/// target exactly, and no sampled orthonormal rival may beat it.
#[test]
fn a01_alignment_attains_the_nuclear_norm() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = rng_from_seed(0xa1);
    for case in 0..200u64 {
        let n = rng.gen_range(1..=50usize);
        let k = rng.gen_range(1..=n.min(8));
        let c: Array2<f64> = Array2::from_shape_fn((n, k), |_| rng.gen_range(-2.0..2.0));
        let q = procrustes_align(&c).unwrap();
        let attained = frob_inner(&q, &c);
        let nuclear = nuclear_norm(&c);
        if (attained - nuclear).abs() > 1e-8 {
            failures.push(format!(
                "case {case} ({n}x{k}): alignment scores {attained}, nuclear norm is {nuclear}"
            ));
        }
        for sample in 0..10_000u64 {
            let rival: Array2<f64> =
                random_orthonormal(n, k, derive_seed(0xa1, case, sample)).unwrap();
            let value = frob_inner(&rival, &c);
            if value > attained + 1e-8 {
                failures.push(format!(
                    "case {case}: sampled rival scores {value}, above {attained}"
                ));
                break;
            }
        }
    }
    verdict("01 alignment optimality", Some(30.0), started, failures);
}

/// Every consensus objective value stays under the closed-form cap
/// `(1 + O²v² + 2λ₁)k / 2`, for random problems across sizes, view
/// counts, orders, and penalty weights.
#[test]
fn a02_objective_never_crosses_its_cap() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = rng_from_seed(0xa2);
    for case in 0..100u64 {
        let k = rng.gen_range(2..=6usize);
        let n = rng.gen_range(4 * k..=200);
        let views = rng.gen_range(1..=5usize);
        let order = rng.gen_range(1..=3usize);
        let lambda1 = rng.gen_range(0.0..4.0);
        // every tenth case exercises the vertex path at zero spread penalty
        let lambda2 = if case % 10 == 0 {
            0.0
        } else {
            rng.gen_range(1e-3..4.0)
        };
        let parts: Vec<Vec<Partition<f64>>> = (0..views)
            .map(|p| {
                (0..order)
                    .map(|t| {
                        let m = random_orthonormal(n, k, derive_seed(0xa2, case, (p * 8 + t) as u64))
                            .unwrap();
                        Partition::new(m).unwrap()
                    })
                    .collect()
            })
            .collect();
        let prior =
            Partition::new(random_orthonormal(n, k, derive_seed(0xa2, case, 999)).unwrap())
                .unwrap();
        let problem = LfProblem::from_partitions(parts, prior).unwrap();
        let mut cfg = LfConfig::new(k);
        cfg.order = order;
        cfg.lambda1 = lambda1;
        cfg.lambda2 = lambda2;
        cfg.max_iterations = 40;
        cfg.tolerance = 0.0;
        let out = solve_lf(&problem, &cfg).unwrap();
        let ov = (order * views) as f64;
        let cap = 0.5 * (1.0 + ov * ov + 2.0 * lambda1) * k as f64;
        let helper_cap = objective_upper_bound::<f64>(order, views, k, lambda1);
        if (helper_cap - cap).abs() > 1e-12 * (1.0 + cap) {
            failures.push(format!(
                "case {case}: cap helper gives {helper_cap}, direct formula {cap}"
            ));
        }
        if let Some((i, &t)) = out.trace.iter().enumerate().find(|(_, &t)| t > cap + 1e-6) {
            failures.push(format!(
                "case {case} (n={n} v={views} order={order}): trace[{i}] = {t} above cap {cap}"
            ));
        }
    }
    verdict("02 objective cap", Some(120.0), started, failures);
}

/// Fused-graph traces never rise, consensus traces never fall, and the
/// consensus solver's median iteration count stays small on easy data.
#[test]
fn a03_traces_are_monotone_and_convergence_is_quick() {
    let started = Instant::now();
    let mut failures = Vec::new();

    for s in 0..20u64 {
        let mut sc = SynthConfig::new(120, 3, 3);
        sc.seed = derive_seed(0xa3, s, 0);
        let data = synth_views::<f64>(&sc).unwrap();
        let affs = view_affinities(&data, 20);
        let problem = EfProblem::new(&affs, 2).unwrap();
        let out = solve_ef(&problem, &EfConfig::new(3)).unwrap();
        if let Some(w) = out.trace.windows(2).find(|w| w[1] > w[0] + 1e-8) {
            failures.push(format!(
                "seed {s}: fused objective rose from {} to {}",
                w[0], w[1]
            ));
        }
    }

    let mut iteration_counts = Vec::new();
    for s in 0..20u64 {
        let mut sc = SynthConfig::new(300, 3, 3);
        sc.seed = derive_seed(0xa3, s, 1);
        let data = synth_views::<f64>(&sc).unwrap();
        let affs = view_affinities(&data, 50);
        let mut cfg = LfConfig::new(3);
        cfg.seed = derive_seed(0xa3, s, 2);
        let problem = LfProblem::from_affinities(&affs, &cfg).unwrap();
        let out = solve_lf(&problem, &cfg).unwrap();
        if let Some(w) = out.trace.windows(2).find(|w| w[1] < w[0] - 1e-8) {
            failures.push(format!(
                "seed {s}: consensus objective fell from {} to {}",
                w[0], w[1]
            ));
        }
        if !out.converged {
            failures.push(format!(
                "seed {s}: still moving after {} iterations",
                out.iterations
            ));
        }
        iteration_counts.push(out.iterations);
    }
    iteration_counts.sort_unstable();
    let median = iteration_counts[iteration_counts.len() / 2];
    if median > 30 {
        failures.push(format!("median iteration count {median}, expected at most 30"));
    }

    verdict("03 monotone solvers", Some(120.0), started, failures);
}

/// Re-orthogonalizing a raw embedding returns orthonormal columns and
/// leaves the weighted outer product unchanged.
#[test]
fn a04_orthogonalization_preserves_the_product() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = rng_from_seed(0xa4);
    for case in 0..100 {
        let k = rng.gen_range(1..=8usize);
        let n = rng.gen_range((2 * k).max(4)..=80);
        let h: Array2<f64> = Array2::from_shape_fn((n, k), |_| rng.gen_range(-2.0..2.0));
        let values: Array1<f64> = Array1::from_shape_fn(k, |_| rng.gen_range(0.1..3.0));
        let (tilde, tilde_values) = orthogonalize(&h, &values).unwrap();
        let dev = orthonormality_deviation(tilde.values());
        if dev > 1e-8 {
            failures.push(format!(
                "case {case}: columns deviate from orthonormal by {dev}"
            ));
        }
        let before = weighted_outer(&h, &values);
        let after = weighted_outer(tilde.values(), &tilde_values);
        let diff = max_abs_diff(&before, &after);
        if diff > 1e-8 {
            failures.push(format!("case {case}: outer product moved by {diff}"));
        }
    }
    verdict("04 orthogonalization identities", Some(10.0), started, failures);
}

fn weighted_outer(h: &Array2<f64>, values: &Array1<f64>) -> Array2<f64> {
    let scaled = h * values;
    scaled.dot(&h.t())
}

/// The landmark sketch reconstructs an exactly rank-k matrix to working
/// precision when every point is a landmark, and its median error on a
/// smooth kernel shrinks as the landmark budget grows.
#[test]
fn a05_landmark_sketch_error_shrinks_with_budget() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let n = 400;
    let k = 5;

    for seed in 0..10u64 {
        let mut rng = rng_from_seed(derive_seed(0xa5, seed, 0));
        let b: Array2<f64> = Array2::from_shape_fn((n, k), |_| rng.gen_range(-1.0..1.0));
        let g = b.dot(&b.t());
        let cfg = NystromConfig {
            m: n,
            s: 10,
            seed: derive_seed(0xa5, seed, 1),
        };
        let emb = nystrom_embedding(&g, k, &cfg).unwrap();
        let rel = frob_norm_diff(&g, &emb.reconstruct()) / frob_norm(&g);
        if rel > 1e-6 {
            failures.push(format!(
                "seed {seed}: relative error {rel:.2e} on an exactly rank-{k} matrix"
            ));
        }
    }

    let grid = [k, 2 * k, 4 * k, n / 2, n];
    let mut medians = Vec::new();
    for &m in &grid {
        let mut errs: Vec<f64> = (0..10u64)
            .map(|seed| {
                let g = gaussian_kernel(n, derive_seed(0xa5, seed, 2));
                let cfg = NystromConfig {
                    m,
                    s: 10,
                    seed: derive_seed(0xa5, seed, 3),
                };
                let emb = nystrom_embedding(&g, k, &cfg).unwrap();
                frob_norm_diff(&g, &emb.reconstruct())
            })
            .collect();
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians.push(errs[errs.len() / 2]);
    }
    for (step, w) in medians.windows(2).enumerate() {
        if w[1] > w[0] * (1.0 + 1e-9) {
            failures.push(format!(
                "median error rose from {} to {} between landmark budgets {} and {}",
                w[0],
                w[1],
                grid[step],
                grid[step + 1]
            ));
        }
    }

    verdict("05 landmark fidelity", Some(60.0), started, failures);
}

/// Kernel matrix of uniform points in the unit cube of R³; full rank
/// with a smoothly decaying spectrum.
fn gaussian_kernel(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|_| [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ])
        .collect();
    Array2::from_shape_fn((n, n), |(i, j)| {
        let d2: f64 = (0..3).map(|d| (pts[i][d] - pts[j][d]).powi(2)).sum();
        (-d2).exp()
    })
}

/// On well-separated blobs the consensus solver clusters essentially
/// perfectly, never trails the plain view-averaged baseline, and pushes
/// a pure-noise view below uniform weight.
#[test]
fn a06_consensus_clusters_blobs_and_discounts_noise_views() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut quality_hits = 0;
    let mut weight_hits = 0;
    for s in 0..20u64 {
        let mut sc = SynthConfig::new(300, 3, 3);
        sc.seed = derive_seed(0xa6, s, 0);
        let data = synth_views::<f64>(&sc).unwrap();
        let affs = view_affinities(&data, 50);
        let mut cfg = LfConfig::new(3);
        cfg.seed = derive_seed(0xa6, s, 1);
        let problem = LfProblem::from_affinities(&affs, &cfg).unwrap();
        let out = solve_lf(&problem, &cfg).unwrap();
        let acc = cluster_accuracy(&out.partition, &data.labels, 3, derive_seed(0xa6, s, 2));
        let anchor = average_partition(&affs, 3, &EmbeddingBackend::Exact, derive_seed(0xa6, s, 3))
            .unwrap();
        let acc_avg = cluster_accuracy(&anchor, &data.labels, 3, derive_seed(0xa6, s, 4));
        if acc >= 0.95 && acc >= acc_avg - 0.01 {
            quality_hits += 1;
        }

        let mut nc = SynthConfig::new(300, 3, 3);
        nc.corrupt = 1;
        nc.seed = derive_seed(0xa6, s, 5);
        let noisy = synth_views::<f64>(&nc).unwrap();
        let naffs = view_affinities(&noisy, 50);
        let mut ncfg = LfConfig::new(3);
        ncfg.seed = derive_seed(0xa6, s, 6);
        let nproblem = LfProblem::from_affinities(&naffs, &ncfg).unwrap();
        let nout = solve_lf(&nproblem, &ncfg).unwrap();
        // the corrupted view sits last
        if nout.weights.values()[2] < 1.0 / 3.0 {
            weight_hits += 1;
        }
    }
    if quality_hits < 18 {
        failures.push(format!(
            "accuracy held up on only {quality_hits}/20 seeds"
        ));
    }
    if weight_hits < 18 {
        failures.push(format!(
            "the noise view was discounted on only {weight_hits}/20 seeds"
        ));
    }
    verdict("06 clustering quality", None, started, failures);
}

/// With one corrupted view, order-2 chains plus the weight-spread
/// penalty must not lose accuracy against the order-1, zero-penalty
/// configuration they extend.
#[test]
fn a07_chains_and_weight_spread_help_under_corruption() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut full_mean = 0.0;
    let mut plain_mean = 0.0;
    for s in 0..20u64 {
        let mut sc = SynthConfig::new(300, 3, 3);
        sc.corrupt = 1;
        sc.seed = derive_seed(0xa7, s, 0);
        let data = synth_views::<f64>(&sc).unwrap();
        let affs = view_affinities(&data, 50);

        let mut full = LfConfig::new(3);
        full.seed = derive_seed(0xa7, s, 1);
        let fp = LfProblem::from_affinities(&affs, &full).unwrap();
        let fout = solve_lf(&fp, &full).unwrap();
        full_mean += cluster_accuracy(&fout.partition, &data.labels, 3, derive_seed(0xa7, s, 2));

        let mut plain = LfConfig::new(3);
        plain.order = 1;
        plain.lambda2 = 0.0;
        plain.seed = derive_seed(0xa7, s, 3);
        let pp = LfProblem::from_affinities(&affs, &plain).unwrap();
        let pout = solve_lf(&pp, &plain).unwrap();
        plain_mean += cluster_accuracy(&pout.partition, &data.labels, 3, derive_seed(0xa7, s, 4));
    }
    full_mean /= 20.0;
    plain_mean /= 20.0;
    if full_mean < plain_mean - 0.01 {
        failures.push(format!(
            "mean accuracy {full_mean:.3} with chains and spread, {plain_mean:.3} without"
        ));
    }
    verdict("07 ablation direction", None, started, failures);
}

/// With the landmark backend and a fixed iteration count, per-iteration
/// solve time fits a power law in n with exponent at most 1.3.
#[test]
fn a08_per_iteration_cost_scales_near_linearly() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let sizes = [1000usize, 2000, 4000, 8000];
    let mut points = Vec::new();
    for &n in &sizes {
        let mut sc = SynthConfig::new(n, 10, 2);
        sc.separation = 8.0;
        sc.seed = derive_seed(0xa8, n as u64, 0);
        let data = synth_views::<f64>(&sc).unwrap();

        let mut cfg = LfConfig::new(10);
        cfg.order = 1;
        cfg.backend = EmbeddingBackend::Nystrom {
            m: 200,
            oversample: 10,
        };
        cfg.seed = derive_seed(0xa8, n as u64, 1);
        cfg.max_iterations = 8;
        cfg.tolerance = 0.0;

        // one dense affinity alive at a time; the finished problem only
        // holds n x k partitions
        let mut builder = LfProblemBuilder::new(&cfg);
        for view in &data.views {
            let aff = knn_affinity_from_features(view, &Bandwidth::Median, 15).unwrap();
            builder.add_view(aff).unwrap();
        }
        drop(data);
        let problem = builder.finish().unwrap();

        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t0 = Instant::now();
            let out = solve_lf(&problem, &cfg).unwrap();
            best = best.min(t0.elapsed().as_secs_f64() / out.iterations.max(1) as f64);
        }
        points.push(((n as f64).ln(), best.ln()));
    }
    let exponent = fitted_slope(&points);
    if exponent > 1.3 {
        failures.push(format!("per-iteration time grows like n^{exponent:.2}"));
    }
    verdict("08 near-linear iterations", Some(300.0), started, failures);
}

fn fitted_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    num / den
}

/// The simplex weight solver lands on the same minimum as an exhaustive
/// grid with step 1e-3, for random quadratics over two and three views.
#[test]
fn a09_weight_solver_matches_a_dense_grid() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = rng_from_seed(0xa9);
    for case in 0..100usize {
        let v = 2 + case % 2;
        let a: Array2<f64> = Array2::from_shape_fn((v, v), |_| rng.gen_range(-1.0..1.0));
        let m = a.t().dot(&a);
        let f: Array1<f64> = Array1::from_shape_fn(v, |_| rng.gen_range(-2.0..2.0));
        let sol = solve_simplex_qp(&m, &f, &QpConfig::default()).unwrap();
        let solver_value = quad_value(&m, &f, sol.weights.values());
        let grid_value = grid_minimum(&m, &f);
        if (solver_value - grid_value).abs() > 1e-4 {
            failures.push(format!(
                "case {case} (v={v}): solver reaches {solver_value:.8}, grid finds {grid_value:.8}"
            ));
        }
    }
    verdict("09 weight solver vs grid", Some(60.0), started, failures);
}

fn quad_value(m: &Array2<f64>, f: &Array1<f64>, w: &Array1<f64>) -> f64 {
    w.dot(&m.dot(w)) - f.dot(w)
}

fn grid_minimum(m: &Array2<f64>, f: &Array1<f64>) -> f64 {
    let steps = 1000usize;
    let mut best = f64::INFINITY;
    match f.len() {
        2 => {
            let m01 = m[[0, 1]] + m[[1, 0]];
            for i in 0..=steps {
                let w0 = i as f64 / steps as f64;
                let w1 = 1.0 - w0;
                let val =
                    m[[0, 0]] * w0 * w0 + m01 * w0 * w1 + m[[1, 1]] * w1 * w1 - f[0] * w0 - f[1] * w1;
                best = best.min(val);
            }
        }
        3 => {
            let (m00, m11, m22) = (m[[0, 0]], m[[1, 1]], m[[2, 2]]);
            let m01 = m[[0, 1]] + m[[1, 0]];
            let m02 = m[[0, 2]] + m[[2, 0]];
            let m12 = m[[1, 2]] + m[[2, 1]];
            for i in 0..=steps {
                let w0 = i as f64 / steps as f64;
                for j in 0..=(steps - i) {
                    let w1 = j as f64 / steps as f64;
                    let w2 = 1.0 - w0 - w1;
                    let val = m00 * w0 * w0
                        + m11 * w1 * w1
                        + m22 * w2 * w2
                        + m01 * w0 * w1
                        + m02 * w0 * w2
                        + m12 * w1 * w2
                        - f[0] * w0
                        - f[1] * w1
                        - f[2] * w2;
                    if val < best {
                        best = val;
                    }
                }
            }
        }
        v => unreachable!("grid oracle only covers 2 or 3 weights, got {v}"),
    }
    best
}

/// Accuracy agrees with brute-force enumeration of label bijections;
/// mutual information and purity agree with direct recomputation.
#[test]
fn a10_scores_match_brute_force_oracles() {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut rng = rng_from_seed(0xaa);
    for case in 0..200 {
        let k = rng.gen_range(1..=4usize);
        let n = rng.gen_range(1..=10usize);
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();

        let acc = accuracy(&pred, &truth).unwrap();
        let acc_ref = permutation_accuracy(&pred, &truth, k);
        if (acc - acc_ref).abs() > 1e-10 {
            failures.push(format!(
                "case {case}: accuracy {acc} vs enumerated {acc_ref}"
            ));
        }
        let score = nmi(&pred, &truth).unwrap();
        let score_ref = direct_nmi(&pred, &truth);
        if (score - score_ref).abs() > 1e-10 {
            failures.push(format!("case {case}: nmi {score} vs direct {score_ref}"));
        }
        let p = purity(&pred, &truth).unwrap();
        let p_ref = direct_purity(&pred, &truth);
        if (p - p_ref).abs() > 1e-10 {
            failures.push(format!("case {case}: purity {p} vs direct {p_ref}"));
        }
    }
    verdict("10 score oracles", None, started, failures);
}

/// Best match rate over every relabeling of the predictions; feasible
/// because k stays at most 4.
fn permutation_accuracy(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0usize;
    permute(&mut perm, 0, &mut |p| {
        let matches = pred.iter().zip(truth).filter(|&(&a, &b)| p[a] == b).count();
        best = best.max(matches);
    });
    best as f64 / pred.len() as f64
}

fn permute(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute(items, at + 1, visit);
        items.swap(at, i);
    }
}

fn direct_nmi(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pc: HashMap<usize, f64> = HashMap::new();
    let mut tc: HashMap<usize, f64> = HashMap::new();
    for (&a, &b) in pred.iter().zip(truth) {
        *joint.entry((a, b)).or_insert(0.0) += 1.0;
        *pc.entry(a).or_insert(0.0) += 1.0;
        *tc.entry(b).or_insert(0.0) += 1.0;
    }
    let entropy = |counts: &HashMap<usize, f64>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let q = c / n;
                -q * q.ln()
            })
            .sum()
    };
    let hp = entropy(&pc);
    let ht = entropy(&tc);
    if hp == 0.0 && ht == 0.0 {
        return 1.0;
    }
    if hp == 0.0 || ht == 0.0 {
        return 0.0;
    }
    let mut info = 0.0;
    for (&(a, b), &c) in &joint {
        info += c / n * ((c * n) / (pc[&a] * tc[&b])).ln();
    }
    (info / (hp * ht).sqrt()).clamp(0.0, 1.0)
}

fn direct_purity(pred: &[usize], truth: &[usize]) -> f64 {
    let mut groups: HashMap<usize, HashMap<usize, usize>> = HashMap::new();
    for (&a, &b) in pred.iter().zip(truth) {
        *groups.entry(a).or_default().entry(b).or_insert(0) += 1;
    }
    let hits: usize = groups
        .values()
        .map(|g| *g.values().max().unwrap())
        .sum();
    hits as f64 / pred.len() as f64
}

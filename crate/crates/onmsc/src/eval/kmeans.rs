//! Restarted Lloyd k-means with k-means++ seeding.
//!
//! Every restart draws from its own derived RNG stream and the best
//! restart is chosen by `(distortion, restart index)`, so results do not
//! depend on how the restarts were scheduled across threads.

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;
use ndarray::{Array2, ArrayView1};
use rand::Rng as _;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy)]
pub struct KmeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl KmeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KmeansConfig {
            k,
            restarts: 50,
            max_iterations: 100,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KmeansResult<S> {
    pub labels: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub distortion: S,
    /// Which restart won.
    pub restart: usize,
    pub iterations: usize,
}

fn sq_dist<S: Scalar>(a: ArrayView1<S>, b: ArrayView1<S>) -> S {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum()
}

/// k-means++ seeding: first center uniform, later centers sampled with
/// probability proportional to squared distance from the chosen set.
fn plusplus_init<S: Scalar>(data: &Array2<S>, k: usize, seed: u64) -> Array2<S> {
    let n = data.nrows();
    let d = data.ncols();
    let mut rng = rng_from_seed(seed);
    let mut centers = Array2::zeros((k, d));
    let first = rng.gen_range(0..n);
    centers.row_mut(0).assign(&data.row(first));
    let mut dist2: Vec<S> = (0..n)
        .map(|i| sq_dist(data.row(i), centers.row(0)))
        .collect();
    for c in 1..k {
        let total: S = dist2.iter().copied().sum();
        let pick = if total > S::zero() {
            let mut target = S::from_f64(rng.gen_range(0.0..1.0)) * total;
            let mut chosen = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target = target - w;
            }
            chosen
        } else {
            // all remaining distances are zero (duplicate points)
            rng.gen_range(0..n)
        };
        centers.row_mut(c).assign(&data.row(pick));
        for i in 0..n {
            let nd = sq_dist(data.row(i), centers.row(c));
            if nd < dist2[i] {
                dist2[i] = nd;
            }
        }
    }
    centers
}

fn assign<S: Scalar>(data: &Array2<S>, centers: &Array2<S>, labels: &mut [usize]) {
    let k = centers.nrows();
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = S::infinity();
        let mut arg = 0;
        for c in 0..k {
            let d = sq_dist(data.row(i), centers.row(c));
            if d < best {
                best = d;
                arg = c;
            }
        }
        *label = arg;
    }
}

fn lloyd<S: Scalar>(data: &Array2<S>, k: usize, max_iterations: usize, seed: u64) -> (Vec<usize>, S, usize) {
    let n = data.nrows();
    let d = data.ncols();
    let mut centers = plusplus_init(data, k, seed);
    let mut labels = vec![0usize; n];
    assign(data, &centers, &mut labels);
    let mut iterations = 0;
    for _ in 0..max_iterations {
        iterations += 1;
        // recompute centroids
        let mut counts = vec![0usize; k];
        centers.fill(S::zero());
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            let row = data.row(i);
            for j in 0..d {
                centers[[l, j]] = centers[[l, j]] + row[j];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = S::from_usize(counts[c]).recip();
                for j in 0..d {
                    centers[[c, j]] = centers[[c, j]] * inv;
                }
            }
        }
        // an empty cluster steals the point farthest from its centroid;
        // relabeling the stolen point keeps a second empty cluster from
        // grabbing the same one
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(data.row(a), centers.row(labels[a]));
                        let db = sq_dist(data.row(b), centers.row(labels[b]));
                        da.partial_cmp(&db)
                            .expect("finite distances")
                            .then(b.cmp(&a))
                    })
                    .expect("non-empty data");
                centers.row_mut(c).assign(&data.row(far));
                labels[far] = c;
            }
        }
        let mut next = labels.clone();
        assign(data, &centers, &mut next);
        if next == labels {
            break;
        }
        labels = next;
    }
    let distortion = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(data.row(i), centers.row(l)))
        .sum();
    (labels, distortion, iterations)
}

/// Cluster rows of `data` into `cfg.k` groups. Runs `cfg.restarts`
/// independent k-means++ starts in parallel and keeps the lowest
/// distortion, breaking ties by restart index.
pub fn kmeans<S: Scalar>(data: &Array2<S>, cfg: &KmeansConfig) -> Result<KmeansResult<S>> {
    let n = data.nrows();
    if cfg.k == 0 {
        return Err(Error::config("k must be at least 1".to_string()));
    }
    if n < cfg.k {
        return Err(Error::data(format!(
            "need at least k={} rows to form k clusters, got {n}",
            cfg.k
        )));
    }
    if cfg.restarts == 0 {
        return Err(Error::config("restarts must be at least 1".to_string()));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::data("k-means input must be finite".to_string()));
    }
    let runs: Vec<(Vec<usize>, S, usize)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| lloyd(data, cfg.k, cfg.max_iterations, derive_seed(cfg.seed, 0x6b, r as u64)))
        .collect();
    let (restart, best) = runs
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.1.partial_cmp(&b.1)
                .expect("finite distortion")
                .then(ia.cmp(ib))
        })
        .expect("at least one restart");
    Ok(KmeansResult {
        labels: best.0.clone(),
        distortion: best.1,
        restart,
        iterations: best.2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn three_blobs(seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = rng_from_seed(seed);
        let centers = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let mut data = Array2::zeros((30, 2));
        let mut truth = vec![0usize; 30];
        for i in 0..30 {
            let c = i % 3;
            truth[i] = c;
            data[[i, 0]] = centers[c][0] + rng.gen_range(-0.5..0.5);
            data[[i, 1]] = centers[c][1] + rng.gen_range(-0.5..0.5);
        }
        (data, truth)
    }

    /// Global optimum by enumerating every assignment of n points to k
    /// labels and scoring against the implied centroids.
    fn brute_force_distortion(data: &Array2<f64>, k: usize) -> f64 {
        let n = data.nrows();
        let d = data.ncols();
        let mut best = f64::INFINITY;
        let total = k.pow(n as u32);
        let mut labels = vec![0usize; n];
        for code in 0..total {
            let mut c = code;
            for l in labels.iter_mut() {
                *l = c % k;
                c /= k;
            }
            let mut sums = vec![vec![0.0; d]; k];
            let mut counts = vec![0usize; k];
            for (i, &l) in labels.iter().enumerate() {
                counts[l] += 1;
                for j in 0..d {
                    sums[l][j] += data[[i, j]];
                }
            }
            let mut cost = 0.0;
            for (i, &l) in labels.iter().enumerate() {
                let cnt = counts[l] as f64;
                for j in 0..d {
                    let diff = data[[i, j]] - sums[l][j] / cnt;
                    cost += diff * diff;
                }
            }
            if cost < best {
                best = cost;
            }
        }
        best
    }

    #[test]
    fn separated_blobs_are_recovered_exactly() {
        let (data, truth) = three_blobs(3);
        let out = kmeans(&data, &KmeansConfig::new(3, 42)).unwrap();
        let acc = crate::eval::accuracy(&out.labels, &truth).unwrap();
        assert_abs_diff_eq!(acc, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn restarts_find_the_global_optimum_on_tiny_data() {
        for seed in [1u64, 7, 19] {
            let mut rng = rng_from_seed(seed);
            let data = Array2::from_shape_fn((12, 2), |_| rng.gen_range(-1.0..1.0));
            let out = kmeans(&data, &KmeansConfig::new(3, 11)).unwrap();
            let opt = brute_force_distortion(&data, 3);
            assert!(
                out.distortion <= opt * (1.0 + 1e-9) + 1e-12,
                "seed {seed}: got {} vs optimum {opt}",
                out.distortion
            );
        }
    }

    #[test]
    fn identical_points_terminate_with_zero_distortion() {
        let data = Array2::<f64>::zeros((6, 2));
        let out = kmeans(&data, &KmeansConfig::new(2, 5)).unwrap();
        assert_abs_diff_eq!(out.distortion, 0.0, epsilon = 1e-15);
        assert_eq!(out.labels.len(), 6);
    }

    #[test]
    fn same_seed_reproduces_the_same_labels() {
        let (data, _) = three_blobs(9);
        let a = kmeans(&data, &KmeansConfig::new(3, 123)).unwrap();
        let b = kmeans(&data, &KmeansConfig::new(3, 123)).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.restart, b.restart);
        assert_abs_diff_eq!(a.distortion, b.distortion, epsilon = 0.0);
    }

    #[test]
    fn k_equals_n_assigns_every_point_its_own_cluster() {
        let data = array![[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
        let out = kmeans(&data, &KmeansConfig::new(3, 2)).unwrap();
        let mut sorted = out.labels.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
        assert_abs_diff_eq!(out.distortion, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let data = Array2::<f64>::zeros((3, 2));
        assert!(kmeans(&data, &KmeansConfig::new(0, 1)).is_err());
        assert!(kmeans(&data, &KmeansConfig::new(4, 1)).is_err());
        let mut cfg = KmeansConfig::new(2, 1);
        cfg.restarts = 0;
        assert!(kmeans(&data, &cfg).is_err());
        let nan = Array2::from_elem((3, 2), f64::NAN);
        assert!(kmeans(&nan, &KmeansConfig::new(2, 1)).is_err());
    }
}

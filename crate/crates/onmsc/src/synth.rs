//! Synthetic multi-view Gaussian blob datasets.
//!
//! Classes sit at scaled simplex-vertex centers so every pair of centers
//! is exactly `separation * noise` apart; each view sees the centers
//! through its own random rotation plus fresh Gaussian noise, and
//! optionally some views are replaced with pure noise to model corrupted
//! measurements. Sample order is shuffled so class blocks do not line up
//! with row index.

use crate::error::{Error, Result};
use crate::graph::FeatureView;
use crate::linalg::random_orthonormal;
use crate::rng::{derive_seed, rng_from_seed};
use crate::scalar::Scalar;
use ndarray::Array2;
use rand::seq::SliceRandom as _;
use rand_distr::{Distribution as _, StandardNormal};

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub n: usize,
    pub k: usize,
    /// Total number of views, including corrupted ones.
    pub views: usize,
    /// How many of the views (the last ones) carry no class signal.
    pub corrupt: usize,
    /// Ambient dimension; must be at least `k` so the simplex fits.
    pub dim: usize,
    /// Per-coordinate noise standard deviation.
    pub noise: f64,
    /// Distance between class centers, in units of `noise`.
    pub separation: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n: usize, k: usize, views: usize) -> Self {
        SynthConfig {
            n,
            k,
            views,
            corrupt: 0,
            dim: k.max(2),
            noise: 1.0,
            separation: 6.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset<S> {
    pub views: Vec<FeatureView<S>>,
    pub labels: Vec<usize>,
}

/// Generate a dataset. All randomness flows from `cfg.seed` through
/// per-view derived streams, so the result is reproducible and adding a
/// view does not perturb the existing ones.
pub fn synth_views<S: Scalar>(cfg: &SynthConfig) -> Result<SynthDataset<S>> {
    if cfg.k == 0 || cfg.n < cfg.k {
        return Err(Error::config(format!(
            "need n >= k >= 1, got n = {}, k = {}",
            cfg.n, cfg.k
        )));
    }
    if cfg.views == 0 {
        return Err(Error::config("need at least one view".to_string()));
    }
    if cfg.corrupt > cfg.views {
        return Err(Error::config(format!(
            "corrupt = {} exceeds view count {}",
            cfg.corrupt, cfg.views
        )));
    }
    if cfg.dim < cfg.k {
        return Err(Error::config(format!(
            "dim = {} must be at least k = {} to place the centers",
            cfg.dim, cfg.k
        )));
    }
    if !(cfg.noise > 0.0 && cfg.noise.is_finite()) {
        return Err(Error::config("noise must be positive and finite".to_string()));
    }
    if !(cfg.separation >= 0.0 && cfg.separation.is_finite()) {
        return Err(Error::config(
            "separation must be nonnegative and finite".to_string(),
        ));
    }

    // balanced labels in shuffled sample order, shared by every view
    let mut order: Vec<usize> = (0..cfg.n).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(cfg.seed, 0, 0)));
    let labels: Vec<usize> = order.iter().map(|&i| i % cfg.k).collect();

    // unit-simplex vertices e_j scaled so pairwise distance (c * sqrt(2))
    // equals separation * noise
    let center_scale = cfg.separation * cfg.noise / 2.0_f64.sqrt();
    let clean_views = cfg.views - cfg.corrupt;

    let mut views = Vec::with_capacity(cfg.views);
    for v in 0..cfg.views {
        let mut noise_rng = rng_from_seed(derive_seed(cfg.seed, 1, v as u64));
        let mut data = Array2::zeros((cfg.n, cfg.dim));
        if v < clean_views {
            // rotated center for class j is center_scale * column j of R
            let rot: Array2<f64> =
                random_orthonormal(cfg.dim, cfg.dim, derive_seed(cfg.seed, 2, v as u64))?;
            for i in 0..cfg.n {
                let class = labels[i];
                for d in 0..cfg.dim {
                    let g: f64 = StandardNormal.sample(&mut noise_rng);
                    let value = center_scale * rot[[d, class]] + cfg.noise * g;
                    data[[i, d]] = S::from_f64(value);
                }
            }
        } else {
            // corrupted view: same noise floor, zero class signal
            for i in 0..cfg.n {
                for d in 0..cfg.dim {
                    let g: f64 = StandardNormal.sample(&mut noise_rng);
                    data[[i, d]] = S::from_f64(cfg.noise * g);
                }
            }
        }
        views.push(FeatureView::new(data, v)?);
    }
    Ok(SynthDataset { views, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{accuracy, kmeans, KmeansConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn labels_are_balanced_and_shuffled() {
        let mut cfg = SynthConfig::new(90, 3, 1);
        cfg.seed = 4;
        let ds: SynthDataset<f64> = synth_views(&cfg).unwrap();
        let mut counts = [0usize; 3];
        for &l in &ds.labels {
            counts[l] += 1;
        }
        assert_eq!(counts, [30, 30, 30]);
        // shuffled: the first 30 samples are not all one class
        let head: std::collections::BTreeSet<usize> =
            ds.labels.iter().take(30).copied().collect();
        assert!(head.len() > 1);
    }

    #[test]
    fn same_seed_is_bitwise_reproducible() {
        let mut cfg = SynthConfig::new(40, 2, 3);
        cfg.corrupt = 1;
        cfg.seed = 9;
        let a: SynthDataset<f64> = synth_views(&cfg).unwrap();
        let b: SynthDataset<f64> = synth_views(&cfg).unwrap();
        assert_eq!(a.labels, b.labels);
        for (x, y) in a.views.iter().zip(b.views.iter()) {
            assert_eq!(x.data, y.data);
        }
    }

    #[test]
    fn class_centers_sit_at_the_requested_separation() {
        let mut cfg = SynthConfig::new(600, 3, 1);
        cfg.separation = 8.0;
        cfg.noise = 0.5;
        cfg.seed = 11;
        let ds: SynthDataset<f64> = synth_views(&cfg).unwrap();
        let data = &ds.views[0].data;
        let mut means = Array2::<f64>::zeros((3, cfg.dim));
        let mut counts = [0usize; 3];
        for i in 0..cfg.n {
            counts[ds.labels[i]] += 1;
            for d in 0..cfg.dim {
                means[[ds.labels[i], d]] += data[[i, d]];
            }
        }
        for c in 0..3 {
            for d in 0..cfg.dim {
                means[[c, d]] /= counts[c] as f64;
            }
        }
        for a in 0..3 {
            for b in (a + 1)..3 {
                let dist: f64 = (0..cfg.dim)
                    .map(|d| (means[[a, d]] - means[[b, d]]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert_abs_diff_eq!(dist, 8.0 * 0.5, epsilon = 0.2);
            }
        }
    }

    #[test]
    fn separated_views_cluster_cleanly() {
        let mut cfg = SynthConfig::new(60, 3, 2);
        cfg.separation = 10.0;
        cfg.seed = 2;
        let ds: SynthDataset<f64> = synth_views(&cfg).unwrap();
        for view in &ds.views {
            let km = kmeans(&view.data, &KmeansConfig::new(3, 5)).unwrap();
            assert_abs_diff_eq!(accuracy(&km.labels, &ds.labels).unwrap(), 1.0);
        }
    }

    #[test]
    fn corrupted_views_share_no_geometry_with_clean_ones() {
        let mut cfg = SynthConfig::new(40, 2, 2);
        cfg.corrupt = 1;
        cfg.separation = 10.0;
        cfg.seed = 3;
        let ds: SynthDataset<f64> = synth_views(&cfg).unwrap();
        // clean view separates classes; corrupted view's class means overlap
        let spread = |view: &FeatureView<f64>| -> f64 {
            let mut m0 = vec![0.0; cfg.dim];
            let mut m1 = vec![0.0; cfg.dim];
            let (mut c0, mut c1) = (0.0, 0.0);
            for i in 0..cfg.n {
                for d in 0..cfg.dim {
                    if ds.labels[i] == 0 {
                        m0[d] += view.data[[i, d]];
                    } else {
                        m1[d] += view.data[[i, d]];
                    }
                }
                if ds.labels[i] == 0 {
                    c0 += 1.0;
                } else {
                    c1 += 1.0;
                }
            }
            (0..cfg.dim)
                .map(|d| (m0[d] / c0 - m1[d] / c1).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        assert!(spread(&ds.views[0]) > 5.0 * spread(&ds.views[1]));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(synth_views::<f64>(&SynthConfig::new(2, 3, 1)).is_err());
        assert!(synth_views::<f64>(&SynthConfig::new(10, 0, 1)).is_err());
        assert!(synth_views::<f64>(&SynthConfig::new(10, 2, 0)).is_err());
        let mut cfg = SynthConfig::new(10, 2, 1);
        cfg.corrupt = 2;
        assert!(synth_views::<f64>(&cfg).is_err());
        cfg.corrupt = 0;
        cfg.dim = 1;
        assert!(synth_views::<f64>(&cfg).is_err());
        cfg.dim = 2;
        cfg.noise = 0.0;
        assert!(synth_views::<f64>(&cfg).is_err());
        cfg.noise = 1.0;
        cfg.separation = f64::INFINITY;
        assert!(synth_views::<f64>(&cfg).is_err());
    }
}

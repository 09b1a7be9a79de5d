//! Grid-search experiment harness.
//!
//! A JSON experiment config names a dataset and a method, and the harness
//! sweeps the method's hyperparameter grid, scoring every cell against
//! ground-truth labels. Graphs are built once per neighbor count and
//! shared by all cells of that group; cells within a group run in
//! parallel. Every random choice flows from the config seed through
//! derived per-cell streams, so reports are deterministic up to the
//! timing columns.
//!
//! Methods:
//! * `onmsc-ef`: consensus-graph solver, grid over `alpha`.
//! * `onmsc-lf`: partition-alignment solver, grid over `lambda1, lambda2`.
//! * `amvsc`: spectral clustering of the view-averaged graph.
//! * `sbsc`: spectral clustering of each single view (one cell per view).

use crate::dataset::{load_dataset, Dataset, ViewData};
use crate::early_fusion::{solve_ef, EfConfig, EfProblem};
use crate::error::{Error, Result};
use crate::eval::{accuracy, kmeans, nmi, purity, KmeansConfig};
use crate::graph::{knn_affinity_from_features, AffinityMatrix, Bandwidth};
use crate::late_fusion::{
    average_partition, solve_lf, spectral_embedding, EmbeddingBackend, LfConfig, LfProblem,
    QpVariant,
};
use crate::linalg::Partition;
use crate::report::{config_hash, CellParams, CellResult, Metrics, Report};
use crate::rng::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    OnmscEf,
    OnmscLf,
    Amvsc,
    Sbsc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::OnmscEf => "onmsc-ef",
            Method::OnmscLf => "onmsc-lf",
            Method::Amvsc => "amvsc",
            Method::Sbsc => "sbsc",
        }
    }
}

fn default_lambda_grid() -> Vec<f64> {
    (-15i32..=15).step_by(3).map(|e| 2f64.powi(e)).collect()
}

fn default_neighbor_fractions() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

/// Hyperparameter grid. Neighbor fractions are multiples of the average
/// class size `n/k` and are mapped to concrete neighbor counts per
/// dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub alpha: Vec<f64>,
    pub neighbor_fractions: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lambda1: default_lambda_grid(),
            lambda2: default_lambda_grid(),
            alpha: default_lambda_grid(),
            neighbor_fractions: default_neighbor_fractions(),
        }
    }
}

fn default_order() -> usize {
    2
}

fn default_backend() -> EmbeddingBackend {
    EmbeddingBackend::Exact
}

fn default_restarts() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Path to the dataset manifest, relative to the config file.
    pub dataset: String,
    pub method: Method,
    /// Cluster count; defaults to the number of distinct labels.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_backend")]
    pub backend: EmbeddingBackend,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: usize,
    #[serde(default)]
    pub qp_variant: QpVariant,
    #[serde(default)]
    pub seed: u64,
    /// Rayon worker threads; default lets rayon decide.
    #[serde(default)]
    pub workers: Option<usize>,
}

/// Parse an experiment config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

fn validate(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.order == 0 {
        return Err(Error::config("order must be at least 1".to_string()));
    }
    if cfg.kmeans_restarts == 0 {
        return Err(Error::config("kmeans_restarts must be at least 1".to_string()));
    }
    if let Some(0) = cfg.workers {
        return Err(Error::config("workers must be at least 1".to_string()));
    }
    let grids: [(&str, &[f64]); 3] = [
        ("lambda1", &cfg.grid.lambda1),
        ("lambda2", &cfg.grid.lambda2),
        ("alpha", &cfg.grid.alpha),
    ];
    for (name, grid) in grids {
        if grid.is_empty() {
            return Err(Error::config(format!("grid.{name} must be non-empty")));
        }
        if grid.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::config(format!(
                "grid.{name} values must be finite and nonnegative"
            )));
        }
    }
    if cfg.grid.neighbor_fractions.is_empty() {
        return Err(Error::config(
            "grid.neighbor_fractions must be non-empty".to_string(),
        ));
    }
    if cfg
        .grid
        .neighbor_fractions
        .iter()
        .any(|f| !f.is_finite() || *f <= 0.0)
    {
        return Err(Error::config(
            "grid.neighbor_fractions must be positive and finite".to_string(),
        ));
    }
    Ok(())
}

/// One grid cell's coordinates, method-dependent fields unused left None.
#[derive(Debug, Clone)]
struct Cell {
    idx: usize,
    neighbors: usize,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    alpha: Option<f64>,
    view: Option<usize>,
}

fn build_cells(cfg: &ExperimentConfig, neighbor_counts: &[usize], views: usize) -> Vec<Cell> {
    let mut cells = Vec::new();
    let mut idx = 0;
    let mut push = |neighbors, lambda1, lambda2, alpha, view, cells: &mut Vec<Cell>| {
        cells.push(Cell {
            idx,
            neighbors,
            lambda1,
            lambda2,
            alpha,
            view,
        });
        idx += 1;
    };
    for &nn in neighbor_counts {
        match cfg.method {
            Method::OnmscEf => {
                for &alpha in &cfg.grid.alpha {
                    push(nn, None, None, Some(alpha), None, &mut cells);
                }
            }
            Method::OnmscLf => {
                for &l1 in &cfg.grid.lambda1 {
                    for &l2 in &cfg.grid.lambda2 {
                        push(nn, Some(l1), Some(l2), None, None, &mut cells);
                    }
                }
            }
            Method::Amvsc => push(nn, None, None, None, None, &mut cells),
            Method::Sbsc => {
                for view in 0..views {
                    push(nn, None, None, None, Some(view), &mut cells);
                }
            }
        }
    }
    cells
}

/// Neighbor counts from fractions of the average class size, deduplicated
/// and clamped into `[1, n-1]`.
fn neighbor_counts_from_fractions(fractions: &[f64], n: usize, k: usize) -> Vec<usize> {
    let class_size = n as f64 / k as f64;
    let set: BTreeSet<usize> = fractions
        .iter()
        .map(|f| {
            let raw = (f * class_size).round() as usize;
            raw.clamp(1, n.saturating_sub(1).max(1))
        })
        .collect();
    set.into_iter().collect()
}

/// Graphs for one neighbor count: feature views get a fresh KNN graph,
/// precomputed affinity views pass through unchanged.
fn build_affinities(
    dataset: &Dataset<f64>,
    neighbors: usize,
) -> Result<Vec<AffinityMatrix<f64>>> {
    dataset
        .views
        .iter()
        .map(|view| match view {
            ViewData::Features(f) => {
                knn_affinity_from_features(f, &Bandwidth::Median, neighbors)
            }
            ViewData::Affinity(a) => Ok(a.clone()),
        })
        .collect()
}

enum MethodPrep {
    Ef(EfProblem<f64>),
    Lf(LfProblem<f64>),
    Amvsc(Partition<f64>),
    Sbsc(Vec<AffinityMatrix<f64>>),
}

fn prepare_method(
    cfg: &ExperimentConfig,
    affinities: Vec<AffinityMatrix<f64>>,
    k: usize,
    neighbors: usize,
) -> Result<MethodPrep> {
    match cfg.method {
        Method::OnmscEf => Ok(MethodPrep::Ef(EfProblem::new(&affinities, cfg.order)?)),
        Method::OnmscLf => {
            let mut lf = LfConfig::new(k);
            lf.order = cfg.order;
            lf.backend = cfg.backend;
            lf.seed = derive_seed(cfg.seed, 0x0b, neighbors as u64);
            Ok(MethodPrep::Lf(LfProblem::from_affinities(&affinities, &lf)?))
        }
        Method::Amvsc => Ok(MethodPrep::Amvsc(average_partition(
            &affinities,
            k,
            &cfg.backend,
            derive_seed(cfg.seed, 0xa5, neighbors as u64),
        )?)),
        Method::Sbsc => Ok(MethodPrep::Sbsc(affinities)),
    }
}

fn score(
    partition: &Partition<f64>,
    labels: &[usize],
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<Metrics> {
    let mut km = KmeansConfig::new(k, seed);
    km.restarts = restarts;
    let clustering = kmeans(partition.values(), &km)?;
    Ok(Metrics {
        acc: accuracy(&clustering.labels, labels)?,
        nmi: nmi(&clustering.labels, labels)?,
        purity: purity(&clustering.labels, labels)?,
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    cell: &Cell,
    prep: &MethodPrep,
    labels: &[usize],
    k: usize,
) -> CellResult {
    let started = Instant::now();
    let kmeans_seed = derive_seed(cfg.seed, 0x6e, cell.idx as u64);
    let outcome: Result<(Metrics, usize, bool, Vec<f64>)> = (|| {
        match prep {
            MethodPrep::Ef(problem) => {
                let mut ef = EfConfig::new(k);
                ef.alpha = cell.alpha.expect("ef cell has alpha");
                let solved = solve_ef(problem, &ef)?;
                let metrics = score(&solved.partition, labels, k, cfg.kmeans_restarts, kmeans_seed)?;
                Ok((metrics, solved.iterations, solved.converged, solved.trace))
            }
            MethodPrep::Lf(problem) => {
                let mut lf = LfConfig::new(k);
                lf.order = cfg.order;
                lf.backend = cfg.backend;
                lf.variant = cfg.qp_variant;
                lf.lambda1 = cell.lambda1.expect("lf cell has lambda1");
                lf.lambda2 = cell.lambda2.expect("lf cell has lambda2");
                let solved = solve_lf(problem, &lf)?;
                let metrics = score(&solved.partition, labels, k, cfg.kmeans_restarts, kmeans_seed)?;
                Ok((metrics, solved.iterations, solved.converged, solved.trace))
            }
            MethodPrep::Amvsc(partition) => {
                let metrics = score(partition, labels, k, cfg.kmeans_restarts, kmeans_seed)?;
                Ok((metrics, 0, true, Vec::new()))
            }
            MethodPrep::Sbsc(affinities) => {
                let view = cell.view.expect("sbsc cell has a view");
                let partition = spectral_embedding(
                    &affinities[view],
                    k,
                    &cfg.backend,
                    derive_seed(cfg.seed, 0x5b, cell.idx as u64),
                )?;
                let metrics = score(&partition, labels, k, cfg.kmeans_restarts, kmeans_seed)?;
                Ok((metrics, 0, true, Vec::new()))
            }
        }
    })();
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let params = CellParams {
        lambda1: cell.lambda1,
        lambda2: cell.lambda2,
        alpha: cell.alpha,
        neighbors: cell.neighbors,
        view: cell.view,
    };
    match outcome {
        Ok((metrics, iterations, converged, trace)) => CellResult {
            cell: cell.idx,
            params,
            metrics: Some(metrics),
            error: None,
            iterations,
            converged,
            wall_ms,
            trace,
        },
        Err(e) => CellResult {
            cell: cell.idx,
            params,
            metrics: None,
            error: Some(e.to_string()),
            iterations: 0,
            converged: false,
            wall_ms,
            trace: Vec::new(),
        },
    }
}

fn failed_cell(cell: &Cell, error: &Error) -> CellResult {
    CellResult {
        cell: cell.idx,
        params: CellParams {
            lambda1: cell.lambda1,
            lambda2: cell.lambda2,
            alpha: cell.alpha,
            neighbors: cell.neighbors,
            view: cell.view,
        },
        metrics: None,
        error: Some(error.to_string()),
        iterations: 0,
        converged: false,
        wall_ms: 0.0,
        trace: Vec::new(),
    }
}

fn resolve_dataset_path(config_dir: &Path, dataset: &str) -> PathBuf {
    let p = Path::new(dataset);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_dir.join(p)
    }
}

/// Run the full grid. `config_dir` anchors the relative dataset path
/// (usually the directory of the config file).
pub fn run_experiment(cfg: &ExperimentConfig, config_dir: &Path) -> Result<Report> {
    validate(cfg)?;
    let started = Instant::now();
    let manifest = resolve_dataset_path(config_dir, &cfg.dataset);
    let dataset: Dataset<f64> = load_dataset(&manifest)?;
    let labels = dataset
        .labels
        .clone()
        .ok_or_else(|| Error::config("scoring requires a dataset with ground-truth labels"))?;
    let n = dataset.n_samples();
    let k = match cfg.k {
        Some(k) => k,
        None => dataset.n_classes().expect("labels are present"),
    };
    if k == 0 || k > n {
        return Err(Error::config(format!("k = {k} must lie in [1, {n}]")));
    }
    let canonical = serde_json::to_string(cfg)
        .map_err(|e| Error::config(format!("config serialization: {e}")))?;
    let hash = config_hash(&canonical);

    let has_features = dataset
        .views
        .iter()
        .any(|v| matches!(v, ViewData::Features(_)));
    // precomputed affinities ignore the neighbor grid entirely
    let neighbor_counts = if has_features {
        neighbor_counts_from_fractions(&cfg.grid.neighbor_fractions, n, k)
    } else {
        vec![0]
    };
    let cells = build_cells(cfg, &neighbor_counts, dataset.views.len());

    let sweep = || -> Vec<CellResult> {
        let mut results = Vec::with_capacity(cells.len());
        for &nn in &neighbor_counts {
            let group: Vec<&Cell> = cells.iter().filter(|c| c.neighbors == nn).collect();
            let prep = build_affinities(&dataset, nn)
                .and_then(|affs| prepare_method(cfg, affs, k, nn));
            match prep {
                Ok(prep) => {
                    let mut batch: Vec<CellResult> = group
                        .par_iter()
                        .map(|cell| run_cell(cfg, cell, &prep, &labels, k))
                        .collect();
                    results.append(&mut batch);
                }
                Err(e) => results.extend(group.iter().map(|c| failed_cell(c, &e))),
            }
        }
        results
    };
    let results = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::config(format!("worker pool: {e}")))?
            .install(sweep),
        None => sweep(),
    };

    let best = results
        .iter()
        .filter(|c| c.metrics.is_some())
        .max_by(|a, b| {
            let (x, y) = (a.metrics.unwrap().acc, b.metrics.unwrap().acc);
            x.partial_cmp(&y)
                .expect("finite accuracy")
                .then(b.cell.cmp(&a.cell))
        })
        .map(|c| c.cell);
    let failures = results.iter().filter(|c| c.error.is_some()).count();
    if best.is_none() {
        let first = results
            .iter()
            .find_map(|c| c.error.clone())
            .unwrap_or_else(|| "empty grid".to_string());
        return Err(Error::numerical(format!(
            "every grid cell failed; first error: {first}"
        )));
    }
    Ok(Report {
        dataset: dataset.name,
        n,
        k,
        method: cfg.method.name().to_string(),
        config_hash: hash,
        cells: results,
        best,
        failures,
        wall_ms_total: started.elapsed().as_secs_f64() * 1e3,
        peak_memory_bytes: crate::mem::peak_bytes() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::save_dataset;
    use crate::synth::{synth_views, SynthConfig};

    fn small_dataset(dir: &Path, corrupt: usize) -> PathBuf {
        let mut sc = SynthConfig::new(24, 2, 2 + corrupt);
        sc.corrupt = corrupt;
        sc.separation = 9.0;
        sc.seed = 5;
        let ds = synth_views::<f64>(&sc).unwrap();
        let views: Vec<ViewData<f64>> = ds.views.into_iter().map(ViewData::Features).collect();
        save_dataset(dir, "blobs", &views, Some(&ds.labels)).unwrap()
    }

    fn tiny_config(method: Method) -> ExperimentConfig {
        ExperimentConfig {
            dataset: "manifest.json".to_string(),
            method,
            k: None,
            order: 2,
            grid: GridSpec {
                lambda1: vec![1.0],
                lambda2: vec![0.5],
                alpha: vec![1.0],
                neighbor_fractions: vec![0.5],
            },
            backend: EmbeddingBackend::Exact,
            kmeans_restarts: 10,
            qp_variant: QpVariant::Derived,
            seed: 1,
            workers: None,
        }
    }

    #[test]
    fn every_method_produces_a_scored_report() {
        let dir = tempfile::tempdir().unwrap();
        small_dataset(dir.path(), 0);
        for method in [Method::OnmscLf, Method::OnmscEf, Method::Amvsc, Method::Sbsc] {
            let cfg = tiny_config(method);
            let report = run_experiment(&cfg, dir.path()).unwrap();
            assert_eq!(report.failures, 0, "{method:?}");
            let best = report.best_cell().expect("has a best cell");
            let acc = best.metrics.unwrap().acc;
            assert!(acc >= 0.95, "{method:?} reached only {acc}");
            let expected_cells = match method {
                Method::Sbsc => 2,
                _ => 1,
            };
            assert_eq!(report.cells.len(), expected_cells, "{method:?}");
        }
    }

    #[test]
    fn reports_are_deterministic_up_to_timing() {
        let dir = tempfile::tempdir().unwrap();
        small_dataset(dir.path(), 1);
        let mut cfg = tiny_config(Method::OnmscLf);
        cfg.grid.lambda2 = vec![0.5, 2.0];
        let strip = |mut r: Report| {
            r.wall_ms_total = 0.0;
            r.peak_memory_bytes = 0;
            for c in &mut r.cells {
                c.wall_ms = 0.0;
            }
            serde_json::to_string(&r).unwrap()
        };
        let a = strip(run_experiment(&cfg, dir.path()).unwrap());
        let b = strip(run_experiment(&cfg, dir.path()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let dir = tempfile::tempdir().unwrap();
        small_dataset(dir.path(), 0);
        let mut cfg = tiny_config(Method::OnmscLf);
        cfg.grid.lambda1 = vec![0.25, 4.0];
        let base = run_experiment(&cfg, dir.path()).unwrap();
        cfg.workers = Some(2);
        let threaded = run_experiment(&cfg, dir.path()).unwrap();
        assert_eq!(base.best, threaded.best);
        let (a, b) = (
            base.best_cell().unwrap().metrics.unwrap(),
            threaded.best_cell().unwrap().metrics.unwrap(),
        );
        assert_eq!(a.acc, b.acc);
        assert_eq!(a.nmi, b.nmi);
    }

    #[test]
    fn missing_labels_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut sc = SynthConfig::new(12, 2, 1);
        sc.seed = 3;
        let ds = synth_views::<f64>(&sc).unwrap();
        let views: Vec<ViewData<f64>> = ds.views.into_iter().map(ViewData::Features).collect();
        save_dataset(dir.path(), "unlabeled", &views, None).unwrap();
        let cfg = tiny_config(Method::Amvsc);
        let err = run_experiment(&cfg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn precomputed_affinity_views_skip_the_neighbor_grid() {
        let dir = tempfile::tempdir().unwrap();
        let mut sc = SynthConfig::new(20, 2, 1);
        sc.separation = 9.0;
        sc.seed = 7;
        let ds = synth_views::<f64>(&sc).unwrap();
        let affinity = knn_affinity_from_features(&ds.views[0], &Bandwidth::Median, 4).unwrap();
        save_dataset(
            dir.path(),
            "pre",
            &[ViewData::Affinity(affinity)],
            Some(&ds.labels),
        )
        .unwrap();
        let mut cfg = tiny_config(Method::Amvsc);
        cfg.grid.neighbor_fractions = vec![0.2, 0.4, 0.9];
        let report = run_experiment(&cfg, dir.path()).unwrap();
        // one group at the sentinel neighbor count, not three
        assert_eq!(report.cells.len(), 1);
        assert_eq!(report.cells[0].params.neighbors, 0);
    }

    #[test]
    fn config_defaults_fill_in_and_unknown_fields_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"dataset": "d/manifest.json", "method": "onmsc-lf"}"#).unwrap();
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.order, 2);
        assert_eq!(cfg.grid.lambda1.len(), 11);
        assert_eq!(cfg.kmeans_restarts, 50);
        assert!(matches!(cfg.backend, EmbeddingBackend::Exact));
        std::fs::write(&path, r#"{"dataset": "d", "method": "onmsc-lf", "typo": 1}"#).unwrap();
        assert!(matches!(load_config(&path), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_grids_are_config_errors() {
        let mut cfg = tiny_config(Method::OnmscLf);
        cfg.grid.lambda1 = vec![];
        assert!(matches!(
            run_experiment(&cfg, Path::new(".")),
            Err(Error::Config(_))
        ));
        cfg.grid.lambda1 = vec![-1.0];
        assert!(matches!(
            run_experiment(&cfg, Path::new(".")),
            Err(Error::Config(_))
        ));
        cfg.grid.lambda1 = vec![1.0];
        cfg.grid.neighbor_fractions = vec![0.0];
        assert!(matches!(
            run_experiment(&cfg, Path::new(".")),
            Err(Error::Config(_))
        ));
        cfg.grid.neighbor_fractions = vec![0.5];
        cfg.order = 0;
        assert!(matches!(
            run_experiment(&cfg, Path::new(".")),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn neighbor_fraction_mapping_dedupes_and_clamps() {
        let counts = neighbor_counts_from_fractions(&[0.1, 0.12, 1.0, 50.0], 30, 3);
        assert_eq!(counts, vec![1, 10, 29]);
    }
}

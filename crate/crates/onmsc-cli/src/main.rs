//! `onmsc` binary: experiment sweeps, single-view embeddings, label
//! scoring, and synthetic dataset generation.
//!
//! Exit codes: 0 success, 2 bad configuration, 3 bad data or I/O,
//! 4 numerical failure.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use onmsc::dataset::{read_labels, read_matrix_csv, save_dataset, write_matrix_csv, ViewData};
use onmsc::error::{Error, Result};
use onmsc::eval::{accuracy, nmi, purity};
use onmsc::experiment::{load_config, run_experiment};
use onmsc::graph::{high_order_affinity, knn_affinity_from_features, Bandwidth, FeatureView};
use onmsc::late_fusion::{spectral_embedding, EmbeddingBackend};
use onmsc::mem::TrackingAllocator;
use onmsc::synth::{synth_views, SynthConfig};

// Every report carries a peak-resident estimate, so the binary counts
// its allocations globally.
#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

#[derive(Parser)]
#[command(name = "onmsc", version, about = "Multi-view spectral clustering toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a grid-search experiment described by a JSON config.
    Run(RunArgs),
    /// Embed a single view and write the spectral coordinates as CSV.
    Embed(EmbedArgs),
    /// Score predicted labels against ground truth, printing JSON.
    Eval(EvalArgs),
    /// Generate a synthetic multi-view dataset directory.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file; dataset paths resolve relative to it.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json, report.csv, and the best-cell trace.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for grid cells; overrides the config.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct EmbedArgs {
    /// Feature matrix CSV, one sample per row.
    #[arg(long)]
    view: PathBuf,
    /// Affinity chain order.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Embedding width (number of clusters).
    #[arg(long)]
    k: usize,
    /// Landmark sketch "m,s" in place of the dense eigensolver.
    #[arg(long, value_parser = parse_nystrom)]
    nystrom: Option<(usize, usize)>,
    /// Graph neighbor count; defaults to a tenth of n/k.
    #[arg(long)]
    neighbors: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV for the n x k embedding.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted labels, one integer per line.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth labels, one integer per line.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Samples.
    #[arg(long)]
    n: usize,
    /// Clusters.
    #[arg(long)]
    k: usize,
    /// Total views, including corrupted ones.
    #[arg(long)]
    views: usize,
    /// Noise scale within each cluster.
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    /// Cluster center separation, in units of the noise scale.
    #[arg(long, default_value_t = 6.0)]
    separation: f64,
    /// Trailing views replaced by pure noise.
    #[arg(long, default_value_t = 0)]
    corrupt: usize,
    /// Feature dimension per view; defaults to max(k, 2).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for the dataset (manifest plus CSV matrices).
    #[arg(long)]
    out: PathBuf,
}

/// Print one line, treating a closed stdout (downstream `head`, etc.) as
/// a request to stop rather than a panic.
fn emit(line: std::fmt::Arguments) {
    let mut out = std::io::stdout();
    if writeln!(out, "{line}").is_err() {
        std::process::exit(0);
    }
}

macro_rules! say {
    ($($arg:tt)*) => { emit(format_args!($($arg)*)) };
}

fn parse_nystrom(s: &str) -> std::result::Result<(usize, usize), String> {
    let (m, over) = s
        .split_once(',')
        .ok_or_else(|| format!("expected \"m,s\", got {s:?}"))?;
    let m = m.trim().parse::<usize>().map_err(|e| format!("bad m: {e}"))?;
    let over = over.trim().parse::<usize>().map_err(|e| format!("bad s: {e}"))?;
    Ok((m, over))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    let config_dir = args
        .config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let report = run_experiment(&cfg, &config_dir)?;
    std::fs::create_dir_all(&args.out)?;
    let paths = report.write(&args.out)?;

    match report.best_cell() {
        Some(best) => {
            let m = best.metrics.expect("best cell is a scored cell");
            say!(
                "{} on {}: best cell {} acc {:.4} nmi {:.4} purity {:.4} ({} cells, {} failed)",
                report.method,
                report.dataset,
                best.cell,
                m.acc,
                m.nmi,
                m.purity,
                report.cells.len(),
                report.failures,
            );
        }
        None => say!(
            "{} on {}: no successful cells ({} failed)",
            report.method, report.dataset, report.failures
        ),
    }
    say!("wrote {}", paths.json.display());
    say!("wrote {}", paths.csv.display());
    if let Some(trace) = paths.trace {
        say!("wrote {}", trace.display());
    }
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let data = read_matrix_csv::<f64>(&args.view)?;
    if args.k == 0 {
        return Err(Error::config("k must be at least 1".to_string()));
    }
    let n = data.nrows();
    let neighbors = args.neighbors.unwrap_or_else(|| {
        let s = n as f64 / args.k as f64;
        ((0.1 * s).round() as usize).max(1)
    });
    let view = FeatureView::new(data, 0)?;
    let base = knn_affinity_from_features(&view, &Bandwidth::Median, neighbors)?;
    let chained = high_order_affinity(&base, args.order)?;
    let backend = match args.nystrom {
        Some((m, oversample)) => EmbeddingBackend::Nystrom { m, oversample },
        None => EmbeddingBackend::Exact,
    };
    let partition = spectral_embedding(&chained, args.k, &backend, args.seed)?;
    write_matrix_csv(&args.out, partition.values())?;
    say!(
        "embedded {} samples into {} columns (order {}, {} neighbors); wrote {}",
        n,
        args.k,
        args.order,
        neighbors,
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let pred = read_labels(&args.pred)?;
    let truth = read_labels(&args.truth)?;
    let scores = serde_json::json!({
        "acc": accuracy(&pred, &truth)?,
        "nmi": nmi(&pred, &truth)?,
        "purity": purity(&pred, &truth)?,
    });
    say!("{scores}");
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(args.n, args.k, args.views);
    cfg.noise = args.noise;
    cfg.separation = args.separation;
    cfg.corrupt = args.corrupt;
    cfg.seed = args.seed;
    if let Some(dim) = args.dim {
        cfg.dim = dim;
    }
    let data = synth_views::<f64>(&cfg)?;
    let views: Vec<ViewData<f64>> = data.views.into_iter().map(ViewData::Features).collect();
    let manifest = save_dataset(&args.out, "synth", &views, Some(&data.labels))?;
    say!("wrote {}", manifest.display());
    Ok(())
}

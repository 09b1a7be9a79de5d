//! Dataset manifests and CSV matrix I/O.
//!
//! A dataset is a directory with a `manifest.json` naming its views:
//!
//! ```json
//! {
//!   "name": "blobs",
//!   "n": 300,
//!   "views": [
//!     { "kind": "features", "file": "view0.csv" },
//!     { "kind": "affinity", "file": "view1.csv" }
//!   ],
//!   "labels": "labels.csv"
//! }
//! ```
//!
//! View files are plain CSV matrices (one sample per row); feature views
//! are n×d, affinity views are n×n symmetric nonnegative. The labels file
//! holds one integer per line. Paths are resolved relative to the
//! manifest. Values are written with Rust's shortest round-trip float
//! formatting, so a save/load cycle is bitwise exact.

use crate::error::{Error, Result};
use crate::graph::{AffinityMatrix, FeatureView};
use crate::scalar::Scalar;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewKind {
    Features,
    Affinity,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewSpec {
    pub kind: ViewKind,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub n: usize,
    pub views: Vec<ViewSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
}

/// One loaded view, either raw features or a precomputed affinity.
#[derive(Debug, Clone)]
pub enum ViewData<S> {
    Features(FeatureView<S>),
    Affinity(AffinityMatrix<S>),
}

impl<S: Scalar> ViewData<S> {
    pub fn n_samples(&self) -> usize {
        match self {
            ViewData::Features(f) => f.n_samples(),
            ViewData::Affinity(a) => a.n(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset<S> {
    pub name: String,
    pub views: Vec<ViewData<S>>,
    pub labels: Option<Vec<usize>>,
}

impl<S: Scalar> Dataset<S> {
    pub fn n_samples(&self) -> usize {
        self.views.first().map_or(0, |v| v.n_samples())
    }

    /// Number of distinct label values, if labels are present.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let set: std::collections::BTreeSet<usize> = l.iter().copied().collect();
            set.len()
        })
    }
}

/// Parse a CSV numeric matrix. Every row must have the same number of
/// fields.
pub fn read_matrix_csv<S: Scalar>(path: &Path) -> Result<Array2<S>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<S>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<S> = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map(S::from_f64).map_err(|_| {
                    Error::data(format!(
                        "{}:{}: cannot parse {field:?} as a number",
                        path.display(),
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::data(format!(
                    "{}:{}: row has {} fields, expected {}",
                    path.display(),
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data(format!("{}: empty matrix", path.display())));
    }
    let d = rows[0].len();
    let flat: Vec<S> = rows.into_iter().flatten().collect();
    let n = flat.len() / d;
    Array2::from_shape_vec((n, d), flat)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

pub fn write_matrix_csv<S: Scalar>(path: &Path, matrix: &Array2<S>) -> Result<()> {
    let mut out = Vec::with_capacity(matrix.len() * 8);
    for row in matrix.rows() {
        let mut first = true;
        for x in row {
            if !first {
                out.push(b',');
            }
            write!(out, "{x}")?;
            first = false;
        }
        out.push(b'\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path)?;
    let mut labels = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        labels.push(trimmed.parse::<usize>().map_err(|_| {
            Error::data(format!(
                "{}:{}: cannot parse {trimmed:?} as a label",
                path.display(),
                lineno + 1
            ))
        })?);
    }
    if labels.is_empty() {
        return Err(Error::data(format!("{}: no labels", path.display())));
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 4);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a dataset from its manifest. View shapes are validated against
/// the declared sample count; affinity views go through full symmetry and
/// nonnegativity validation.
pub fn load_dataset<S: Scalar>(manifest_path: &Path) -> Result<Dataset<S>> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("{}: {e}", manifest_path.display())))?;
    if manifest.views.is_empty() {
        return Err(Error::data(format!(
            "{}: manifest lists no views",
            manifest_path.display()
        )));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut views = Vec::with_capacity(manifest.views.len());
    for (i, spec) in manifest.views.iter().enumerate() {
        let path = base.join(&spec.file);
        let matrix = read_matrix_csv::<S>(&path)?;
        if matrix.nrows() != manifest.n {
            return Err(Error::data(format!(
                "{}: view {i} has {} rows, manifest declares n = {}",
                path.display(),
                matrix.nrows(),
                manifest.n
            )));
        }
        let view = match spec.kind {
            ViewKind::Features => ViewData::Features(FeatureView::new(matrix, i)?),
            ViewKind::Affinity => ViewData::Affinity(AffinityMatrix::new(matrix, 1, i)?),
        };
        views.push(view);
    }
    let labels = match &manifest.labels {
        Some(file) => {
            let labels = read_labels(&base.join(file))?;
            if labels.len() != manifest.n {
                return Err(Error::data(format!(
                    "{file}: {} labels, manifest declares n = {}",
                    labels.len(),
                    manifest.n
                )));
            }
            Some(labels)
        }
        None => None,
    };
    Ok(Dataset {
        name: manifest.name,
        views,
        labels,
    })
}

/// Write views and labels as CSVs plus a manifest into `dir`; returns the
/// manifest path.
pub fn save_dataset<S: Scalar>(
    dir: &Path,
    name: &str,
    views: &[ViewData<S>],
    labels: Option<&[usize]>,
) -> Result<PathBuf> {
    if views.is_empty() {
        return Err(Error::data("cannot save a dataset with no views".to_string()));
    }
    let n = views[0].n_samples();
    for v in views {
        if v.n_samples() != n {
            return Err(Error::data(
                "views disagree on sample count".to_string(),
            ));
        }
    }
    fs::create_dir_all(dir)?;
    let mut specs = Vec::with_capacity(views.len());
    for (i, view) in views.iter().enumerate() {
        let file = format!("view{i}.csv");
        let (kind, matrix) = match view {
            ViewData::Features(f) => (ViewKind::Features, &f.data),
            ViewData::Affinity(a) => (ViewKind::Affinity, a.values()),
        };
        write_matrix_csv(&dir.join(&file), matrix)?;
        specs.push(ViewSpec { kind, file });
    }
    let labels_file = match labels {
        Some(l) => {
            if l.len() != n {
                return Err(Error::data(format!(
                    "{} labels for {n} samples",
                    l.len()
                )));
            }
            write_labels(&dir.join("labels.csv"), l)?;
            Some("labels.csv".to_string())
        }
        None => None,
    };
    let manifest = Manifest {
        name: name.to_string(),
        n,
        views: specs,
        labels: labels_file,
    };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::data(format!("manifest serialization: {e}")))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

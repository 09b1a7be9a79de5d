//! Graph construction: Gaussian kernels, mutual/union KNN affinities,
//! degree vectors, normalized Laplacians, and high-order affinities.
//!
//! Per-view graphs are the raw material for both solvers. A view enters
//! either as a feature matrix (kernel + KNN sparsification) or as a
//! precomputed affinity used verbatim. The order-`o` affinity chains the
//! order-1 graph `o − 1` times, so two samples are strongly connected at
//! order 2 when they share many neighbors even if they are not neighbors
//! themselves.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use ndarray::{Array1, Array2, Axis};

/// One view's feature matrix: `n` samples by `d` features.
#[derive(Debug, Clone)]
pub struct FeatureView<S> {
    pub data: Array2<S>,
    pub view_id: usize,
}

impl<S: Scalar> FeatureView<S> {
    pub fn new(data: Array2<S>, view_id: usize) -> Result<Self> {
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::data(format!(
                "view {view_id}: features must be finite"
            )));
        }
        Ok(FeatureView { data, view_id })
    }

    pub fn n_samples(&self) -> usize {
        self.data.nrows()
    }
}

/// Symmetric nonnegative affinity matrix, tagged with the graph order it
/// represents and the view it came from.
#[derive(Debug, Clone)]
pub struct AffinityMatrix<S> {
    values: Array2<S>,
    pub order: usize,
    pub view_id: usize,
}

impl<S: Scalar> AffinityMatrix<S> {
    /// Validates squareness, finiteness, symmetry, and nonnegativity, then
    /// normalizes the storage to exact symmetry with entries clamped at 0.
    pub fn new(values: Array2<S>, order: usize, view_id: usize) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(Error::data(format!("affinity must be square, got {r}x{c}")));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("affinity entries must be finite".to_string()));
        }
        for i in 0..r {
            for j in (i + 1)..r {
                if (values[[i, j]] - values[[j, i]]).abs() > S::CHECK_TOL {
                    return Err(Error::data(format!(
                        "affinity not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if values.iter().any(|&x| x < -S::CHECK_TOL) {
            return Err(Error::data("affinity entries must be nonnegative".to_string()));
        }
        let mut values = values;
        for i in 0..r {
            for j in (i + 1)..r {
                let m = (values[[i, j]] + values[[j, i]]) / S::from_f64(2.0);
                let m = m.max(S::zero());
                values[[i, j]] = m;
                values[[j, i]] = m;
            }
            values[[i, i]] = values[[i, i]].max(S::zero());
        }
        Ok(AffinityMatrix { values, order, view_id })
    }

    /// Construction for matrices that are symmetric and nonnegative by
    /// construction; only debug builds re-verify.
    pub(crate) fn from_parts(values: Array2<S>, order: usize, view_id: usize) -> Self {
        debug_assert!(values.is_square());
        debug_assert!(values.iter().all(|x| x.is_finite() && *x >= S::zero()));
        AffinityMatrix { values, order, view_id }
    }

    pub fn values(&self) -> &Array2<S> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn frobenius_norm(&self) -> S {
        self.values.iter().map(|&x| x * x).sum::<S>().sqrt()
    }
}

/// Normalized Laplacian `L = I - D^{-1/2} A D^{-1/2}`, tagged like the
/// affinity it came from.
#[derive(Debug, Clone)]
pub struct LaplacianMatrix<S> {
    pub values: Array2<S>,
    pub order: usize,
    pub view_id: usize,
}

impl<S: Scalar> LaplacianMatrix<S> {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }
}

/// Degree vector of an affinity matrix (row sums).
pub type DegreeVector<S> = Array1<S>;

/// Bandwidth choice for the Gaussian kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth<S> {
    /// Median of the nonzero pairwise distances. Falls back to 1 when every
    /// pairwise distance is zero.
    Median,
    Fixed(S),
}

impl<S> Default for Bandwidth<S> {
    fn default() -> Self {
        Bandwidth::Median
    }
}

/// Per-view graph construction parameters.
#[derive(Debug, Clone)]
pub struct GraphConfig<S> {
    /// Neighbor count `N` for the KNN graph; must satisfy `1 <= N < n`.
    pub n_neighbors: usize,
    pub bandwidth: Bandwidth<S>,
    /// Highest affinity order `O >= 1` the solvers consume.
    pub order: usize,
}

fn squared_distance<S: Scalar>(a: ndarray::ArrayView1<S>, b: ndarray::ArrayView1<S>) -> S {
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        let d = *x - *y;
        acc = acc + d * d;
    }
    acc
}

/// Bandwidth from the median heuristic: the (upper) median of the nonzero
/// pairwise Euclidean distances.
pub fn median_heuristic_bandwidth<S: Scalar>(data: &Array2<S>) -> S {
    let n = data.nrows();
    let mut dists: Vec<S> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2 = squared_distance(data.row(i), data.row(j));
            if d2 > S::zero() {
                dists.push(d2.sqrt());
            }
        }
    }
    if dists.is_empty() {
        return S::one();
    }
    let mid = dists.len() / 2;
    dists.select_nth_unstable_by(mid, |a, b| a.partial_cmp(b).expect("finite distances"));
    dists[mid]
}

fn resolve_bandwidth<S: Scalar>(view: &FeatureView<S>, bandwidth: &Bandwidth<S>) -> Result<S> {
    let bw = match bandwidth {
        Bandwidth::Median => median_heuristic_bandwidth(&view.data),
        Bandwidth::Fixed(b) => *b,
    };
    if !(bw > S::zero()) || !bw.is_finite() {
        return Err(Error::config(format!(
            "kernel bandwidth must be positive and finite, got {bw}"
        )));
    }
    Ok(bw)
}

/// Dense Gaussian kernel `exp(-||x_i - x_j||^2 / (2 bandwidth^2))`.
pub fn pairwise_kernel<S: Scalar>(
    view: &FeatureView<S>,
    bandwidth: &Bandwidth<S>,
) -> Result<Array2<S>> {
    if view.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::data(format!(
            "view {}: features must be finite",
            view.view_id
        )));
    }
    let bw = resolve_bandwidth(view, bandwidth)?;
    let n = view.n_samples();
    let denom = S::from_f64(2.0) * bw * bw;
    let mut kernel = Array2::zeros((n, n));
    for i in 0..n {
        kernel[[i, i]] = S::one();
        for j in (i + 1)..n {
            let v = (-squared_distance(view.data.row(i), view.data.row(j)) / denom).exp();
            kernel[[i, j]] = v;
            kernel[[j, i]] = v;
        }
    }
    Ok(kernel)
}

/// Indices of the `n_neighbors` largest off-diagonal entries of `row`,
/// ties broken toward the lower index.
fn top_neighbors<S: Scalar>(row: &[S], this: usize, n_neighbors: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).filter(|&j| j != this).collect();
    let mid = n_neighbors - 1;
    order.select_nth_unstable_by(mid, |&a, &b| {
        row[b]
            .partial_cmp(&row[a])
            .expect("finite kernel values")
            .then(a.cmp(&b))
    });
    order.truncate(n_neighbors);
    order
}

/// KNN affinity under the union rule: `A_ij = kernel_ij` when at least one
/// of `i`, `j` is among the other's `N` nearest neighbors (largest kernel
/// values), zero otherwise. The diagonal stays zero.
pub fn build_knn_affinity<S: Scalar>(
    kernel: &Array2<S>,
    n_neighbors: usize,
    view_id: usize,
) -> Result<AffinityMatrix<S>> {
    let (r, c) = kernel.dim();
    if r != c {
        return Err(Error::data(format!("kernel must be square, got {r}x{c}")));
    }
    for i in 0..r {
        for j in (i + 1)..r {
            if (kernel[[i, j]] - kernel[[j, i]]).abs() > S::CHECK_TOL {
                return Err(Error::data(format!("kernel not symmetric at ({i}, {j})")));
            }
        }
    }
    if n_neighbors == 0 || n_neighbors >= r {
        return Err(Error::config(format!(
            "neighbor count must satisfy 1 <= N < n, got N = {n_neighbors} with n = {r}"
        )));
    }
    let rows: Vec<&[S]> = (0..r)
        .map(|i| kernel.row(i).to_slice().expect("kernel is standard layout"))
        .collect();
    let neighbor_sets: Vec<Vec<usize>> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| top_neighbors(row, i, n_neighbors))
        .collect();
    let mut values = Array2::zeros((r, r));
    for (i, nbrs) in neighbor_sets.iter().enumerate() {
        for &j in nbrs {
            let w = kernel[[i, j]].max(S::zero());
            values[[i, j]] = w;
            values[[j, i]] = w;
        }
    }
    Ok(AffinityMatrix::from_parts(values, 1, view_id))
}

/// Fused kernel + KNN construction that never materializes the full kernel
/// matrix; result is identical to
/// `build_knn_affinity(&pairwise_kernel(view, bandwidth)?, n, view.view_id)`.
pub fn knn_affinity_from_features<S: Scalar>(
    view: &FeatureView<S>,
    bandwidth: &Bandwidth<S>,
    n_neighbors: usize,
) -> Result<AffinityMatrix<S>> {
    let n = view.n_samples();
    if n_neighbors == 0 || n_neighbors >= n {
        return Err(Error::config(format!(
            "neighbor count must satisfy 1 <= N < n, got N = {n_neighbors} with n = {n}"
        )));
    }
    if view.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::data(format!(
            "view {}: features must be finite",
            view.view_id
        )));
    }
    let bw = resolve_bandwidth(view, bandwidth)?;
    let denom = S::from_f64(2.0) * bw * bw;
    let mut row = vec![S::zero(); n];
    let mut neighbor_sets: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = if i == j {
                S::one()
            } else {
                (-squared_distance(view.data.row(i), view.data.row(j)) / denom).exp()
            };
        }
        neighbor_sets.push(top_neighbors(&row, i, n_neighbors));
    }
    let mut values = Array2::zeros((n, n));
    for (i, nbrs) in neighbor_sets.iter().enumerate() {
        for &j in nbrs {
            let w = (-squared_distance(view.data.row(i), view.data.row(j)) / denom).exp();
            values[[i, j]] = w;
            values[[j, i]] = w;
        }
    }
    Ok(AffinityMatrix::from_parts(values, 1, view.view_id))
}

/// Row sums of the affinity.
pub fn degree_vector<S: Scalar>(affinity: &AffinityMatrix<S>) -> DegreeVector<S> {
    affinity.values().sum_axis(Axis(1))
}

fn inv_sqrt_degrees<S: Scalar>(degrees: &DegreeVector<S>) -> Array1<S> {
    degrees.mapv(|d| if d > S::zero() { d.sqrt().recip() } else { S::zero() })
}

/// Normalized affinity `G = D^{-1/2} A D^{-1/2}`. Zero-degree rows map to
/// zero rows, matching the Laplacian convention below.
pub fn normalized_affinity<S: Scalar>(affinity: &AffinityMatrix<S>) -> Array2<S> {
    let inv = inv_sqrt_degrees(&degree_vector(affinity));
    let n = affinity.n();
    let mut g = affinity.values().clone();
    for i in 0..n {
        for j in 0..n {
            g[[i, j]] = g[[i, j]] * inv[i] * inv[j];
        }
    }
    g
}

/// Normalized Laplacian `L = I - D^{-1/2} A D^{-1/2}`. An isolated sample
/// (zero degree) contributes the row `e_i`, keeping the spectrum in [0, 2].
pub fn normalized_laplacian<S: Scalar>(affinity: &AffinityMatrix<S>) -> LaplacianMatrix<S> {
    let mut values = normalized_affinity(affinity);
    values.mapv_inplace(|x| -x);
    for i in 0..affinity.n() {
        values[[i, i]] = values[[i, i]] + S::one();
    }
    LaplacianMatrix {
        values,
        order: affinity.order,
        view_id: affinity.view_id,
    }
}

/// Order-`order` affinity by chaining the order-1 graph: entry (i, j) of the
/// order-2 matrix is the inner product of columns i and j of `A`, and each
/// further order multiplies by `A` once more. Orders above 2 re-symmetrize
/// to wash out accumulated rounding.
pub fn high_order_affinity<S: Scalar>(
    affinity: &AffinityMatrix<S>,
    order: usize,
) -> Result<AffinityMatrix<S>> {
    Ok(affinity_orders(affinity, order)?.pop().expect("order >= 1"))
}

/// All orders `1..=max_order`, sharing the chain products.
pub fn affinity_orders<S: Scalar>(
    affinity: &AffinityMatrix<S>,
    max_order: usize,
) -> Result<Vec<AffinityMatrix<S>>> {
    if max_order == 0 {
        return Err(Error::config("affinity order must be at least 1".to_string()));
    }
    let mut out = Vec::with_capacity(max_order);
    out.push(affinity.clone());
    for _ in 2..=max_order {
        let next = next_order_affinity(out.last().expect("nonempty"), affinity);
        out.push(next);
    }
    Ok(out)
}

/// One step of the order chain: multiply the current matrix by the base
/// affinity. Shared by [`affinity_orders`] and streaming callers that keep
/// only the latest order alive.
pub(crate) fn next_order_affinity<S: Scalar>(
    prev: &AffinityMatrix<S>,
    base: &AffinityMatrix<S>,
) -> AffinityMatrix<S> {
    let o = prev.order + 1;
    let mut next = prev.values().dot(base.values());
    if o > 2 {
        let t = next.t().to_owned();
        next = (&next + &t) / S::from_f64(2.0);
    }
    next.mapv_inplace(|x| x.max(S::zero()));
    AffinityMatrix::from_parts(next, o, base.view_id)
}

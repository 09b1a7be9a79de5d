//! External clustering metrics.
//!
//! Labels on either side may be arbitrary integers; each side is
//! compacted to `0..k` by sorted value before any counting, so metric
//! values are invariant under relabeling.

use crate::error::{Error, Result};
use ndarray::Array2;
use std::collections::BTreeMap;

fn compact(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    for &l in labels {
        let next = map.len();
        map.entry(l).or_insert(next);
    }
    labels.iter().map(|l| map[l]).collect()
}

fn check_pair(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::data("label vectors must be non-empty".to_string()));
    }
    if pred.len() != truth.len() {
        return Err(Error::data(format!(
            "label vectors differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// Joint count table, `counts[[i, j]]` = points with predicted label i and
/// true label j, padded square so rows can be matched one-to-one.
fn contingency(pred: &[usize], truth: &[usize]) -> Array2<usize> {
    let p = compact(pred);
    let t = compact(truth);
    let kp = p.iter().max().map_or(0, |&m| m + 1);
    let kt = t.iter().max().map_or(0, |&m| m + 1);
    let k = kp.max(kt);
    let mut counts = Array2::zeros((k, k));
    for (&a, &b) in p.iter().zip(t.iter()) {
        counts[[a, b]] += 1;
    }
    counts
}

/// Minimum-cost perfect matching on a square cost matrix; returns the
/// column assigned to each row. Shortest-augmenting-path method with row
/// and column potentials, exact in integer arithmetic.
pub fn hungarian(cost: &Array2<i64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "cost matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    const INF: i64 = i64::MAX / 4;
    // 1-based arrays; p[j] = row matched to column j, 0 = unmatched
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Clustering accuracy: the best one-to-one matching between predicted
/// and true labels, as a fraction of points.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_pair(pred, truth)?;
    let counts = contingency(pred, truth);
    let cost = counts.mapv(|c| -(c as i64));
    let assignment = hungarian(&cost);
    let matched: usize = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| counts[[i, j]])
        .sum();
    Ok(matched as f64 / pred.len() as f64)
}

/// Normalized mutual information, `I(P;T) / sqrt(H(P) H(T))`. Two
/// constant labelings agree perfectly (1.0); a constant labeling carries
/// no information about a non-constant one (0.0).
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_pair(pred, truth)?;
    let counts = contingency(pred, truth);
    let n = pred.len() as f64;
    let k = counts.nrows();
    let row: Vec<f64> = (0..k).map(|i| counts.row(i).sum() as f64).collect();
    let col: Vec<f64> = (0..k).map(|j| counts.column(j).sum() as f64).collect();
    let entropy = |marginal: &[f64]| -> f64 {
        marginal
            .iter()
            .filter(|&&c| c > 0.0)
            .map(|&c| {
                let q = c / n;
                -q * q.ln()
            })
            .sum()
    };
    let hp = entropy(&row);
    let ht = entropy(&col);
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    if hp == 0.0 || ht == 0.0 {
        return Ok(0.0);
    }
    let mut info = 0.0;
    for i in 0..k {
        for j in 0..k {
            let c = counts[[i, j]] as f64;
            if c > 0.0 {
                info += c / n * ((c * n) / (row[i] * col[j])).ln();
            }
        }
    }
    Ok((info / (hp * ht).sqrt()).clamp(0.0, 1.0))
}

/// Fraction of points whose predicted cluster's majority true label is
/// their own.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_pair(pred, truth)?;
    let counts = contingency(pred, truth);
    let majority: usize = (0..counts.nrows())
        .map(|i| counts.row(i).iter().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / pred.len() as f64)
}

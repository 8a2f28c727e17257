//! Histogram approximation of a sorted adjacency matrix and assembly of
//! the pooled coordinate regression dataset.
//!
//! Given a sorted adjacency Â and a window width h, the pooled histogram is
//! the k×k matrix (k = ⌊n/h⌋) of block means
//!   Ĥ(i,j) = (1/h²) Σ_{s₁=1..h} Σ_{s₂=1..h} Â((i−1)h + s₁, (j−1)h + s₂),
//! discarding the trailing n − kh rows and columns. Each upper-triangle
//! entry (diagonal included) becomes one regression point whose input is
//! the bin coordinate and whose target is the block mean; graphs are
//! weighted by their share of the pooled node total.

use crate::error::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Mapping from a 1-based bin index to a coordinate in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CoordConvention {
    /// Bin centers: (i − ½)/k (the default; keeps regression targets and
    /// block centers aligned).
    #[default]
    BinCenter,
    /// Right bin edges: i/k.
    RightEdge,
}

impl CoordConvention {
    /// Coordinate of 1-based bin `i` out of `k`.
    pub fn coord(self, i: usize, k: usize) -> f64 {
        match self {
            CoordConvention::BinCenter => (i as f64 - 0.5) / k as f64,
            CoordConvention::RightEdge => i as f64 / k as f64,
        }
    }
}

/// Default window width: ln(n) rounded half-up, never below 1.
pub fn default_window(n: usize) -> usize {
    let r = (n as f64).ln().round();
    (r.max(1.0)) as usize
}

/// A pooled histogram with its provenance.
#[derive(Debug, Clone)]
pub struct Histogram {
    /// k×k block means, k = ⌊n/h⌋.
    pub values: Array2<f64>,
    /// Size n of the source adjacency.
    pub source_size: usize,
    /// Window width h.
    pub window: usize,
}

impl Histogram {
    pub fn k(&self) -> usize {
        self.values.nrows()
    }
}

/// Pools an n×n matrix into ⌊n/h⌋² block means. Summation is row-major
/// within each block; this fixed order is part of the contract so that
/// independent reimplementations agree bit-for-bit.
pub fn pool_histogram(adj: &Array2<f64>, h: usize) -> Result<Histogram> {
    let n = adj.nrows();
    if adj.ncols() != n {
        return Err(Error::invalid(format!(
            "pooling expects a square matrix, got {}×{}",
            n,
            adj.ncols()
        )));
    }
    if h == 0 {
        return Err(Error::invalid("window width must be ≥ 1"));
    }
    let k = n / h;
    if k == 0 {
        return Err(Error::invalid(format!(
            "window width {h} exceeds matrix size {n}"
        )));
    }
    let mut out = Array2::zeros((k, k));
    for bi in 0..k {
        for bj in 0..k {
            let mut acc = 0.0;
            for s1 in 0..h {
                for s2 in 0..h {
                    acc += adj[[bi * h + s1, bj * h + s2]];
                }
            }
            // Direct division, not multiplication by a reciprocal: one
            // rounding, matching any naive reimplementation bit-for-bit.
            out[[bi, bj]] = acc / (h * h) as f64;
        }
    }
    Ok(Histogram {
        values: out,
        source_size: n,
        window: h,
    })
}

/// One pooled regression observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionPoint {
    /// Index of the source graph within the dataset.
    pub graph_index: usize,
    pub x: f64,
    pub y: f64,
    /// Block-mean edge frequency.
    pub target: f64,
    /// Graph weight n_t / Σ n_u, shared by all points of one graph.
    pub weight: f64,
}

/// The pooled regression dataset across all observed graphs.
#[derive(Debug, Clone, Default)]
pub struct CoordinateDataset {
    pub points: Vec<RegressionPoint>,
}

impl CoordinateDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// CSV with header `graph_index,x,y,target,weight`, one point per line
    /// in dataset order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("graph_index,x,y,target,weight\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.graph_index, p.x, p.y, p.target, p.weight
            );
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Turns pooled histograms into one weighted dataset: for each histogram t
/// and each bin pair 1 ≤ i ≤ j ≤ k_t (upper triangle, diagonal included,
/// row-major order, histograms in input order) one point at the bin
/// coordinates with the block mean as target. Weights are proportional to
/// source node counts and sum to 1.
pub fn build_coordinate_dataset(
    histograms: &[Histogram],
    convention: CoordConvention,
) -> Result<CoordinateDataset> {
    if histograms.is_empty() {
        return Err(Error::invalid("coordinate dataset needs at least one histogram"));
    }
    let total_nodes: usize = histograms.iter().map(|h| h.source_size).sum();
    let mut points = Vec::new();
    for (t, hist) in histograms.iter().enumerate() {
        let k = hist.k();
        let weight = hist.source_size as f64 / total_nodes as f64;
        for i in 1..=k {
            for j in i..=k {
                points.push(RegressionPoint {
                    graph_index: t,
                    x: convention.coord(i, k),
                    y: convention.coord(j, k),
                    target: hist.values[[i - 1, j - 1]],
                    weight,
                });
            }
        }
    }
    Ok(CoordinateDataset { points })
}

//! Taubin smoothing of per-point signals over a weighted K-nearest-neighbor
//! graph.
//!
//! Each iteration applies a shrinking pass with `lambda` and an inflating
//! pass with `mu`, both using the normalized weighted average of neighbor
//! differences. Weights are `exp(-(|p_i - p_j|^2 + s |n_i - n_j|^2) / (r
//! sigma_i^2))`, with `sigma_i` the distance from `p_i` to its nearest
//! neighbor.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaubinParams {
    pub k: usize,
    pub iterations: usize,
    pub lambda: f64,
    pub mu: f64,
    pub s: f64,
    pub r: f64,
}

impl Default for TaubinParams {
    fn default() -> Self {
        TaubinParams {
            k: 32,
            iterations: 5,
            lambda: 0.451,
            mu: -0.472,
            s: 0.1,
            r: 8.0,
        }
    }
}

/// Weighted directed KNN graph; row `i` lists `(j, w_ij)`.
#[derive(Debug, Clone)]
pub struct KnnGraph {
    pub neighbors: Vec<Vec<(u32, f64)>>,
}

/// The `k` nearest other points of every point, nearest first, ties by
/// index.
pub fn knn(points: &[Vec3], k: usize) -> Vec<Vec<(u32, f64)>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut d: Vec<(f64, u32)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| ((p - q).norm_squared(), j as u32))
                .collect();
            let k = k.min(d.len());
            if k < d.len() {
                d.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                d.truncate(k);
            }
            d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            d.into_iter().map(|(d2, j)| (j, d2.sqrt())).collect()
        })
        .collect()
}

pub fn knn_graph(points: &[Vec3], normals: &[Vec3], params: &TaubinParams) -> Result<KnnGraph> {
    if points.len() != normals.len() {
        return Err(Error::InvalidArgument(
            "points and normals differ in length".into(),
        ));
    }
    if points.len() < params.k + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} points",
            params.k + 1
        )));
    }
    let nn = knn(points, params.k);
    let neighbors = nn
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let sigma = row[0].1;
            if sigma == 0.0 {
                return Err(Error::InvalidArgument(format!("duplicate point {i}")));
            }
            Ok(row
                .into_iter()
                .map(|(j, d)| {
                    let dn = (normals[i] - normals[j as usize]).norm_squared();
                    (
                        j,
                        (-(d * d + params.s * dn) / (params.r * sigma * sigma)).exp(),
                    )
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KnnGraph { neighbors })
}

/// One pass `z_i + f * sum_j w_ij (z_j - z_i) / sum_j w_ij` over rows of
/// `z` (one row per point).
fn pass(graph: &KnnGraph, z: &DMatrix<f64>, f: f64) -> DMatrix<f64> {
    let cols = z.ncols();
    let rows: Vec<Vec<f64>> = graph
        .neighbors
        .par_iter()
        .enumerate()
        .map(|(i, nb)| {
            let wsum: f64 = nb.iter().map(|&(_, w)| w).sum();
            (0..cols)
                .map(|c| {
                    let zi = z[(i, c)];
                    let lap: f64 = nb
                        .iter()
                        .map(|&(j, w)| w * (z[(j as usize, c)] - zi))
                        .sum::<f64>()
                        / wsum;
                    zi + f * lap
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(z.nrows(), cols, |r, c| rows[r][c])
}

pub fn taubin_smooth(
    graph: &KnnGraph,
    signal: &DMatrix<f64>,
    params: &TaubinParams,
) -> DMatrix<f64> {
    let mut z = signal.clone();
    for _ in 0..params.iterations {
        z = pass(graph, &z, params.lambda);
        z = pass(graph, &z, params.mu);
    }
    z
}

/// Smooths `signal` (one row per point) over the KNN graph of `points`.
pub fn regularize_point_signal(
    points: &[Vec3],
    normals: &[Vec3],
    signal: &DMatrix<f64>,
    params: &TaubinParams,
) -> Result<DMatrix<f64>> {
    if signal.nrows() != points.len() {
        return Err(Error::InvalidArgument(
            "signal rows must match points".into(),
        ));
    }
    let graph = knn_graph(points, normals, params)?;
    Ok(taubin_smooth(&graph, signal, params))
}

/// `sum_i sum_j w_ij |z_j - z_i|^2` over the graph.
pub fn dirichlet_energy(graph: &KnnGraph, z: &DMatrix<f64>) -> f64 {
    graph
        .neighbors
        .iter()
        .enumerate()
        .map(|(i, nb)| {
            nb.iter()
                .map(|&(j, w)| w * (z.row(j as usize) - z.row(i)).norm_squared())
                .sum::<f64>()
        })
        .sum()
}

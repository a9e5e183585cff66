//! Chart distance fields.
//!
//! Each chart is split into four subcharts around its center. A point in a
//! subchart gets coordinates `(px, py)` in `[0,1]^2`, zero at the chart
//! center and one at the chart corner; the chart distance field is
//! `1 - max(px, py)` and its dual is `min(px, py)`.

mod coords;
mod eval;
mod split;

pub use coords::{coords_on, subchart_coords, Half, QuadCoords, TriMap};
pub use eval::{
    bake_fields, bake_points, bake_sites, cdf_dcdf, densify, parametrization, BakeSites, FieldKind,
    FieldSample, FieldValue, Fields, LOCUS_EPS, MAX_BAKE_DISTANCE,
};
pub use split::{bilinear, ChartFrame, ChartSplit, DualChart, Quadrant, SubQuad, QUADRANT_CORNER};

use crate::mesh::PolyMesh;

/// Number of components of `{f : value[f] > threshold}`, faces being
/// adjacent when they share a vertex.
pub fn superlevel_components(mesh: &PolyMesh, value: &[f64], threshold: f64) -> usize {
    let on: Vec<bool> = value.iter().map(|&v| v > threshold).collect();
    let mut seen = vec![false; mesh.n_faces()];
    let mut count = 0;
    for f0 in 0..mesh.n_faces() {
        if !on[f0] || seen[f0] {
            continue;
        }
        count += 1;
        seen[f0] = true;
        let mut stack = vec![f0 as u32];
        while let Some(f) = stack.pop() {
            for &v in mesh.face_vertices(f) {
                for g in mesh.vertex_faces(v) {
                    let g = g as usize;
                    if on[g] && !seen[g] {
                        seen[g] = true;
                        stack.push(g as u32);
                    }
                }
            }
        }
    }
    count
}

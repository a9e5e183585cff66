//! Self-intersection count, rotation index and the area-weighted loop
//! simplicity scores.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{Vec2, Vec3};
use crate::mesh::complex::BaseComplex;
use crate::mesh::loops::{all_edge_loops, all_face_loops, EdgeLoop, FaceLoop};
use crate::mesh::PolyMesh;

/// Slack on `Ind <= 1` so that a discretized convex loop is simple.
pub const INDEX_TOLERANCE: f64 = 1e-6;

/// How turning angles are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurningMode {
    /// `|sum of signed turning| / 2 pi`: the winding of the projected curve.
    #[default]
    Signed,
    /// `sum of |turning| / 2 pi`: penalizes every change of direction.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopMeasure {
    pub self_intersections: usize,
    pub rotation_index: f64,
    pub is_simple: bool,
}

impl LoopMeasure {
    pub fn new(self_intersections: usize, rotation_index: f64) -> Self {
        LoopMeasure {
            self_intersections,
            rotation_index,
            is_simple: self_intersections == 0 && rotation_index <= 1.0 + INDEX_TOLERANCE,
        }
    }
}

/// Occurrences minus distinct ids.
pub fn repeat_count(ids: &[u32]) -> usize {
    let mut s = ids.to_vec();
    s.sort_unstable();
    s.dedup();
    ids.len() - s.len()
}

pub fn face_loop_self_intersections(l: &FaceLoop) -> usize {
    repeat_count(&l.faces)
}

/// Closed loops store their closure vertex once, so it never counts.
pub fn edge_loop_self_intersections(l: &EdgeLoop) -> usize {
    repeat_count(&l.vertices)
}

/// Projects points onto their least-squares plane. `None` when the points
/// lie within `1e-9` (relative to their spread) of a line.
pub fn project_best_fit_plane(points: &[Vec3]) -> Option<Vec<Vec2>> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let c = points.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let u: Vec3 = eig.eigenvectors.column(order[0]).into();
    let v: Vec3 = eig.eigenvectors.column(order[1]).into();
    let spread = points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
    let off_line = points
        .iter()
        .map(|p| {
            let d = p - c;
            (d - u * d.dot(&u)).norm()
        })
        .fold(0.0, f64::max);
    if spread == 0.0 || off_line <= 1e-9 * spread {
        return None;
    }
    Some(
        points
            .iter()
            .map(|p| Vec2::new((p - c).dot(&u), (p - c).dot(&v)))
            .collect(),
    )
}

/// Total turning of a polyline in its best-fit plane over `2 pi`. Closed
/// polylines include the wrap-around corners; open ends contribute nothing.
/// Consecutive duplicate nodes are skipped.
pub fn rotation_index(points: &[Vec3], closed: bool, mode: TurningMode) -> f64 {
    let Some(mut pts) = project_best_fit_plane(points) else {
        return 0.0;
    };
    pts.dedup_by(|a, b| (*a - *b).norm() == 0.0);
    if closed && pts.len() > 1 && (pts[0] - pts[pts.len() - 1]).norm() == 0.0 {
        pts.pop();
    }
    let k = pts.len();
    if k < 3 {
        return 0.0;
    }
    let turn = |a: &Vec2, b: &Vec2, c: &Vec2| {
        let d1 = b - a;
        let d2 = c - b;
        (d1.x * d2.y - d1.y * d2.x).atan2(d1.dot(&d2))
    };
    let corners: Vec<f64> = if closed {
        (0..k)
            .map(|i| turn(&pts[(i + k - 1) % k], &pts[i], &pts[(i + 1) % k]))
            .collect()
    } else {
        (1..k - 1)
            .map(|i| turn(&pts[i - 1], &pts[i], &pts[i + 1]))
            .collect()
    };
    let total = match mode {
        TurningMode::Signed => corners.iter().sum::<f64>().abs(),
        TurningMode::Absolute => corners.iter().map(|t| t.abs()).sum(),
    };
    total / std::f64::consts::TAU
}

pub fn measure_face_loop(mesh: &PolyMesh, l: &FaceLoop, mode: TurningMode) -> LoopMeasure {
    let pts: Vec<Vec3> = l.faces.iter().map(|&f| mesh.face_center(f)).collect();
    LoopMeasure::new(
        face_loop_self_intersections(l),
        rotation_index(&pts, l.closed, mode),
    )
}

pub fn measure_edge_loop(mesh: &PolyMesh, l: &EdgeLoop, mode: TurningMode) -> LoopMeasure {
    let pts: Vec<Vec3> = l.vertices.iter().map(|&v| mesh.position(v)).collect();
    LoopMeasure::new(
        edge_loop_self_intersections(l),
        rotation_index(&pts, l.closed, mode),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct SimplicityReport {
    #[serde(rename = "S_fl")]
    pub s_fl: f64,
    #[serde(rename = "S_el")]
    pub s_el: f64,
    #[serde(rename = "S_l")]
    pub s_l: f64,
    #[serde(rename = "N_c")]
    pub n_c: usize,
    #[serde(rename = "N_I")]
    pub n_i: usize,
    /// False when non-quad faces were skipped.
    pub pure_quad: bool,
    pub face_loops: Vec<LoopMeasure>,
    pub edge_loops: Vec<LoopMeasure>,
}

/// Ratio of simple-loop weight to total weight, each loop contributing the
/// sum of its members' weights (repeats included). `1` when there are no
/// loops.
fn weighted_ratio(weights: &[f64], measures: &[LoopMeasure]) -> f64 {
    let mut simple = 0.0;
    let mut total = 0.0;
    for (w, m) in weights.iter().zip(measures) {
        total += w;
        if m.is_simple {
            simple += w;
        }
    }
    if total > 0.0 {
        (simple / total).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

/// Face-loop and edge-loop simplicity. Face-loops only cross quads; edges
/// are weighted by the total area of their adjacent faces.
pub fn loop_simplicity(
    mesh: &PolyMesh,
    complex: &BaseComplex,
    mode: TurningMode,
) -> SimplicityReport {
    let pure_quad = mesh.is_pure_quad();
    if !pure_quad {
        log::warn!("non-quad faces present; face-loops cover the quad subset only");
    }
    let area: Vec<f64> = (0..mesh.n_faces() as u32)
        .map(|f| mesh.face_area(f))
        .collect();
    let face_loops = all_face_loops(mesh);
    let edge_loops = all_edge_loops(mesh);
    let fl: Vec<LoopMeasure> = face_loops
        .par_iter()
        .map(|l| measure_face_loop(mesh, l, mode))
        .collect();
    let el: Vec<LoopMeasure> = edge_loops
        .par_iter()
        .map(|l| measure_edge_loop(mesh, l, mode))
        .collect();
    let fw: Vec<f64> = face_loops
        .iter()
        .map(|l| l.faces.iter().map(|&f| area[f as usize]).sum())
        .collect();
    let ew: Vec<f64> = edge_loops
        .iter()
        .map(|l| {
            l.edges
                .iter()
                .map(|&e| {
                    mesh.edge_face_list(e)
                        .map(|f| area[f as usize])
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();
    let s_fl = weighted_ratio(&fw, &fl);
    let s_el = weighted_ratio(&ew, &el);
    let n_i = (0..mesh.n_vertices() as u32)
        .filter(|&v| mesh.valence(v) > 0 && !mesh.is_boundary_vertex(v) && mesh.valence(v) != 4)
        .count();
    SimplicityReport {
        s_fl,
        s_el,
        s_l: s_fl.min(s_el),
        n_c: complex.n_charts(),
        n_i,
        pure_quad,
        face_loops: fl,
        edge_loops: el,
    }
}

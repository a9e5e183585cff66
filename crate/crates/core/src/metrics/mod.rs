//! Loop simplicity and mesh quality metrics.

mod quality;
mod simplicity;

pub use quality::{
    hausdorff, quad_scaled_jacobian, scaled_jacobian, Hausdorff, JacobianStats,
    DEFAULT_HAUSDORFF_SAMPLES,
};
pub use simplicity::{
    edge_loop_self_intersections, face_loop_self_intersections, loop_simplicity, measure_edge_loop,
    measure_face_loop, project_best_fit_plane, repeat_count, rotation_index, LoopMeasure,
    SimplicityReport, TurningMode, INDEX_TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::mesh::complex::{build_base_complex, ComplexOptions};
use crate::mesh::PolyMesh;
use crate::Result;

/// Flat summary of one mesh. `d_h` is present only when a reference
/// surface was given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "S_l")]
    pub s_l: f64,
    #[serde(rename = "S_fl")]
    pub s_fl: f64,
    #[serde(rename = "S_el")]
    pub s_el: f64,
    #[serde(rename = "N_c")]
    pub n_c: usize,
    #[serde(rename = "N_I")]
    pub n_i: usize,
    pub d_h: Option<f64>,
    #[serde(rename = "SJ_min")]
    pub sj_min: f64,
    #[serde(rename = "SJ_mean")]
    pub sj_mean: f64,
}

#[derive(Debug, Clone)]
pub struct MetricsOptions {
    pub complex: ComplexOptions,
    pub turning: TurningMode,
    pub hausdorff_samples: usize,
    pub seed: u64,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            complex: ComplexOptions::default(),
            turning: TurningMode::default(),
            hausdorff_samples: DEFAULT_HAUSDORFF_SAMPLES,
            seed: 0,
        }
    }
}

/// Builds the base complex and computes every metric of a quad mesh.
pub fn compute_metrics(
    mesh: &PolyMesh,
    reference: Option<&PolyMesh>,
    opts: &MetricsOptions,
) -> Result<MetricsReport> {
    mesh.require_quads()?;
    let bc = build_base_complex(mesh, &opts.complex)?;
    let s = loop_simplicity(mesh, &bc, opts.turning);
    let sj = scaled_jacobian(mesh)?;
    let d_h = reference.map(|r| hausdorff(r, mesh, opts.hausdorff_samples, opts.seed).symmetric);
    Ok(MetricsReport {
        s_l: s.s_l,
        s_fl: s.s_fl,
        s_el: s.s_el,
        n_c: s.n_c,
        n_i: s.n_i,
        d_h,
        sj_min: sj.min,
        sj_mean: sj.mean,
    })
}

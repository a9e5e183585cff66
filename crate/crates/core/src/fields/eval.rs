//! Field values, gradients and offsets at surface points, baking onto
//! other meshes, and densification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coords::{Half, TriMap};
use super::split::{ChartSplit, Quadrant, SubQuad};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::PolyMesh;

/// Distance from the non-differentiable loci below which gradients are
/// reported as zero.
pub const LOCUS_EPS: f64 = 1e-7;

/// Queries farther than this fraction of the bounding-box diagonal from the
/// quad surface are rejected by [`bake_fields`].
pub const MAX_BAKE_DISTANCE: f64 = 0.05;

/// Plain fields or their densified versions with factor `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FieldKind {
    #[default]
    Plain,
    Densified(u32),
}

impl FieldKind {
    pub fn densified(n: u32) -> Result<FieldKind> {
        if n < 1 {
            return Err(Error::InvalidArgument(
                "densification factor must be at least 1".into(),
            ));
        }
        Ok(FieldKind::Densified(n))
    }
}

/// One baked record. Offsets point from `pos` to the chart and dual-chart
/// centers of the subchart containing the nearest surface point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub pos: [f64; 3],
    pub normal: [f64; 3],
    pub cdf: f64,
    pub dcdf: f64,
    pub gcdf: [f64; 3],
    pub gdcdf: [f64; 3],
    pub off_c: [f64; 3],
    pub off_dc: [f64; 3],
}

impl FieldSample {
    pub fn position(&self) -> Vec3 {
        Vec3::from(self.pos)
    }
    pub fn chart_center(&self) -> Vec3 {
        Vec3::from(self.pos) + Vec3::from(self.off_c)
    }
    pub fn dual_center(&self) -> Vec3 {
        Vec3::from(self.pos) + Vec3::from(self.off_dc)
    }
}

/// Full evaluation result at one surface point.
#[derive(Debug, Clone, Copy)]
pub struct FieldValue {
    pub point: Vec3,
    pub normal: Vec3,
    pub subquad: u32,
    pub chart: u32,
    pub quadrant: Quadrant,
    pub px: f64,
    pub py: f64,
    pub cdf: f64,
    pub dcdf: f64,
    pub gcdf: Vec3,
    pub gdcdf: Vec3,
    /// Gradients were zeroed at a non-differentiable locus.
    pub singular: bool,
    pub chart_center: Vec3,
    pub dual_center: Vec3,
}

/// Plain fields from subchart coordinates: `1 - max` and `min`.
pub fn cdf_dcdf(px: f64, py: f64) -> (f64, f64) {
    (1.0 - px.max(py), px.min(py))
}

fn cell_center(n: f64, u: f64) -> f64 {
    ((n * u).floor().min(n - 1.0).max(0.0) + 0.5) / n
}

/// Densified fields with factor `n` at parametrization `(u, v)`. The
/// formulas are symmetric in `u` and `v`, so either branch of the
/// parametrization gives the same values.
pub fn densify(n: u32, u: f64, v: f64) -> (f64, f64) {
    let nf = n as f64;
    let du = (u - ((nf * u).floor() + 0.5) / nf).abs();
    let dv = (v - ((nf * v).floor() + 0.5) / nf).abs();
    let cdf = 1.0 - 2.0 * nf * du.max(dv);
    let eu = (nf * u - (nf * u + 0.5).floor()).abs();
    let ev = (nf * v - (nf * v + 0.5).floor()).abs();
    let dcdf = 1.0 - 2.0 * eu.max(ev);
    (cdf.clamp(0.0, 1.0), dcdf.clamp(0.0, 1.0))
}

/// Parametrization recovered from plain fields on one branch.
pub fn parametrization(cdf: f64, dcdf: f64, first_branch: bool) -> (f64, f64) {
    if first_branch {
        (dcdf, 1.0 - cdf)
    } else {
        (1.0 - cdf, dcdf)
    }
}

fn unit_or_zero(g: Vec3) -> Vec3 {
    let n = g.norm();
    if n > 0.0 {
        g / n
    } else {
        Vec3::zeros()
    }
}

/// Field evaluator over a chart split.
pub struct Fields<'a> {
    pub split: &'a ChartSplit,
    pub kind: FieldKind,
}

impl<'a> Fields<'a> {
    pub fn new(split: &'a ChartSplit, kind: FieldKind) -> Self {
        Fields { split, kind }
    }

    /// Evaluates at a point already known to lie on triangle `half` of
    /// sub-quad `k` with barycentric coordinates `bary`.
    pub fn eval_on(&self, k: u32, half: Half, point: Vec3, bary: [f64; 3]) -> FieldValue {
        let sq: &SubQuad = &self.split.subquads[k as usize];
        let map = TriMap::new(&sq.corners, half);
        let (tx, ty) = map.map_or((0.0, 0.0), |m| m.eval(&point));
        let px = (sq.a.0 + tx * (sq.a.1 - sq.a.0)).clamp(0.0, 1.0);
        let py = (sq.b.0 + ty * (sq.b.1 - sq.b.0)).clamp(0.0, 1.0);
        let (gx, gy) = map.map_or((Vec3::zeros(), Vec3::zeros()), |m| {
            (m.tx.1 * (sq.a.1 - sq.a.0), m.ty.1 * (sq.b.1 - sq.b.0))
        });
        let normal = map.map_or(Vec3::zeros(), |m| m.normal);
        let frame = &self.split.charts[sq.chart as usize];
        let on_edge = bary.iter().any(|&b| b < LOCUS_EPS);
        let (cdf, dcdf, gcdf, gdcdf, locus, chart_center, dual_center) = match self.kind {
            FieldKind::Plain => {
                let (c, d) = cdf_dcdf(px, py);
                let x_active = px > py;
                let gc = if x_active { -gx } else { -gy };
                let gd = if x_active { gy } else { gx };
                let locus = (px - py).abs() < LOCUS_EPS;
                (
                    c,
                    d,
                    gc,
                    gd,
                    locus,
                    frame.center,
                    self.split.dual_of(sq.chart, sq.quadrant).center,
                )
            }
            FieldKind::Densified(n) => {
                let nf = n as f64;
                let (c, d) = densify(n, px, py);
                let (cx, cy) = (cell_center(nf, px), cell_center(nf, py));
                let (nx, ny) = ((nf * px).round() / nf, (nf * py).round() / nf);
                let (dx, dy) = (px - cx, py - cy);
                let (ex, ey) = (px - nx, py - ny);
                let x_active = dx.abs() > dy.abs();
                let gc = if x_active {
                    -gx * dx.signum()
                } else {
                    -gy * dy.signum()
                };
                let dx_active = ex.abs() > ey.abs();
                let gd = if dx_active {
                    -gx * ex.signum()
                } else {
                    -gy * ey.signum()
                };
                let cell_edge = |u: f64| {
                    let f = (nf * u).fract();
                    f.min(1.0 - f) < LOCUS_EPS || (f - 0.5).abs() < LOCUS_EPS
                };
                let locus = (dx.abs() - dy.abs()).abs() < LOCUS_EPS
                    || (ex.abs() - ey.abs()).abs() < LOCUS_EPS
                    || cell_edge(px)
                    || cell_edge(py);
                let (mx, my) = frame.metric_of(sq.quadrant, cx, cy);
                let (dxm, dym) = frame.metric_of(sq.quadrant, nx, ny);
                (
                    c,
                    d,
                    gc,
                    gd,
                    locus,
                    frame.point_at(mx, my),
                    frame.point_at(dxm, dym),
                )
            }
        };
        let singular = on_edge || locus || map.is_none();
        let (gcdf, gdcdf) = if singular {
            (Vec3::zeros(), Vec3::zeros())
        } else {
            (unit_or_zero(gcdf), unit_or_zero(gdcdf))
        };
        FieldValue {
            point,
            normal,
            subquad: k,
            chart: sq.chart,
            quadrant: sq.quadrant,
            px,
            py,
            cdf,
            dcdf,
            gcdf,
            gdcdf,
            singular,
            chart_center,
            dual_center,
        }
    }

    /// Evaluates at the point of the scaffold nearest to `p`, together with
    /// the distance to it.
    pub fn eval(&self, p: &Vec3) -> (FieldValue, f64) {
        let near = self.split.bvh.nearest(p).expect("empty scaffold");
        let half = if near.tri.is_multiple_of(2) {
            Half::First
        } else {
            Half::Second
        };
        let v = self.eval_on((near.tri / 2) as u32, half, near.point, near.bary);
        (v, near.dist())
    }

    pub fn eval_cdf(&self, p: &Vec3) -> f64 {
        self.eval(p).0.cdf
    }

    pub fn eval_dcdf(&self, p: &Vec3) -> f64 {
        self.eval(p).0.dcdf
    }

    /// Unit tangential gradients of both fields; zero at non-differentiable
    /// loci.
    pub fn gradients(&self, p: &Vec3) -> (Vec3, Vec3, bool) {
        let v = self.eval(p).0;
        (v.gcdf, v.gdcdf, v.singular)
    }

    pub fn sample(&self, p: &Vec3) -> (FieldSample, f64) {
        let (v, d) = self.eval(p);
        (to_sample(p, &v), d)
    }
}

fn to_sample(p: &Vec3, v: &FieldValue) -> FieldSample {
    let arr = |x: Vec3| [x.x, x.y, x.z];
    FieldSample {
        pos: arr(*p),
        normal: arr(v.normal),
        cdf: v.cdf,
        dcdf: v.dcdf,
        gcdf: arr(v.gcdf),
        gdcdf: arr(v.gdcdf),
        off_c: arr(v.chart_center - p),
        off_dc: arr(v.dual_center - p),
    }
}

/// Where to place query points on the target mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BakeSites {
    FaceCenters,
    Vertices,
}

pub fn bake_sites(target: &PolyMesh, sites: BakeSites) -> Vec<Vec3> {
    match sites {
        BakeSites::FaceCenters => (0..target.n_faces() as u32)
            .map(|f| target.face_center(f))
            .collect(),
        BakeSites::Vertices => target.positions().to_vec(),
    }
}

/// Evaluates the fields at every point, in input order. Fails listing the
/// offending indices when a point is farther than
/// [`MAX_BAKE_DISTANCE`] of the quad mesh diagonal from its surface.
pub fn bake_points(fields: &Fields<'_>, points: &[Vec3]) -> Result<Vec<FieldSample>> {
    let max_dist = MAX_BAKE_DISTANCE * fields.split.diagonal;
    let out: Vec<(FieldSample, f64)> = points.par_iter().map(|p| fields.sample(p)).collect();
    let far: Vec<usize> = out
        .iter()
        .enumerate()
        .filter(|(_, (_, d))| *d > max_dist)
        .map(|(i, _)| i)
        .collect();
    if !far.is_empty() {
        return Err(Error::TooFar {
            indices: far,
            max_dist,
        });
    }
    Ok(out.into_iter().map(|(s, _)| s).collect())
}

pub fn bake_fields(
    fields: &Fields<'_>,
    target: &PolyMesh,
    sites: BakeSites,
) -> Result<Vec<FieldSample>> {
    bake_points(fields, &bake_sites(target, sites))
}

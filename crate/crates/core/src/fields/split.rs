//! Chart splitting under the ring-length metric.
//!
//! With every edge carrying the mean length of its edge-ring, chart `i`
//! becomes a `W x H` rectangle whose grid lines sit at cumulative column
//! and row widths. The flow lines `X = W/2` and `Y = H/2` cut it into four
//! subcharts. Cells crossed by a flow line are split into sub-quads whose
//! new corners are interpolated bilinearly inside the cell, so the input
//! mesh is never modified.

use serde::Serialize;

use crate::geom::{Bvh, Vec3};
use crate::mesh::complex::{BaseComplex, Chart};
use crate::mesh::loops::assign_ring_lengths;
use crate::mesh::PolyMesh;

/// Quadrant of a chart: bit 0 set when `X >= W/2`, bit 1 when `Y >= H/2`.
pub type Quadrant = u8;

/// Index into `Chart::corners` of the corner inside each quadrant.
pub const QUADRANT_CORNER: [usize; 4] = [0, 1, 3, 2];

#[derive(Debug, Clone, Serialize)]
pub struct ChartFrame {
    pub m: usize,
    pub n: usize,
    /// Cumulative column widths, `m + 1` entries from 0 to `W`.
    pub xs: Vec<f64>,
    /// Cumulative row heights, `n + 1` entries from 0 to `H`.
    pub ys: Vec<f64>,
    pub center: Vec3,
    pub corners: [u32; 4],
    /// Cell corners `q00 q10 q11 q01` in grid orientation, row-major.
    #[serde(skip)]
    pub cells: Vec<[Vec3; 4]>,
}

impl ChartFrame {
    pub fn width(&self) -> f64 {
        self.xs[self.m]
    }
    pub fn height(&self) -> f64 {
        self.ys[self.n]
    }

    fn locate(cuts: &[f64], x: f64) -> (usize, f64) {
        let k = cuts.len() - 1;
        let i = cuts[1..k].partition_point(|&c| c <= x);
        let w = cuts[i + 1] - cuts[i];
        (
            i,
            if w > 0.0 {
                ((x - cuts[i]) / w).clamp(0.0, 1.0)
            } else {
                0.0
            },
        )
    }

    /// Surface point at metric coordinates `(x, y)`, bilinear inside its
    /// cell.
    pub fn point_at(&self, x: f64, y: f64) -> Vec3 {
        let (i, t) = Self::locate(&self.xs, x);
        let (j, s) = Self::locate(&self.ys, y);
        bilinear(&self.cells[j * self.m + i], t, s)
    }

    /// Metric position of subchart coordinates `(px, py)` in a quadrant.
    pub fn metric_of(&self, q: Quadrant, px: f64, py: f64) -> (f64, f64) {
        let (hw, hh) = (self.width() / 2.0, self.height() / 2.0);
        let sx = if q & 1 == 1 { 1.0 } else { -1.0 };
        let sy = if q & 2 == 2 { 1.0 } else { -1.0 };
        (hw + sx * px * hw, hh + sy * py * hh)
    }
}

pub fn bilinear(q: &[Vec3; 4], t: f64, s: f64) -> Vec3 {
    q[0] * ((1.0 - t) * (1.0 - s))
        + q[1] * (t * (1.0 - s))
        + q[2] * (t * s)
        + q[3] * ((1.0 - t) * s)
}

/// One quad of the split scaffold, lying in a single subchart.
#[derive(Debug, Clone, Serialize)]
pub struct SubQuad {
    pub chart: u32,
    pub quadrant: Quadrant,
    /// Source face of the input mesh.
    pub face: u32,
    pub corners: [Vec3; 4],
    /// Subchart coordinates: x runs `a.0 -> a.1` from `q00` to `q10`, y
    /// runs `b.0 -> b.1` from `q00` to `q01`.
    pub a: (f64, f64),
    pub b: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct DualChart {
    /// Chart corner vertex at the dual center.
    pub vertex: u32,
    pub center: Vec3,
    /// Member subcharts as `(chart, quadrant)`.
    pub members: Vec<(u32, Quadrant)>,
}

#[derive(Debug, Clone)]
pub struct ChartSplit {
    pub charts: Vec<ChartFrame>,
    pub subquads: Vec<SubQuad>,
    pub duals: Vec<DualChart>,
    /// Dual chart index of each `(chart, quadrant)`, at `4 * chart + q`.
    pub subchart_dual: Vec<u32>,
    /// Ring length assigned to every edge.
    pub lengths: Vec<f64>,
    /// Scaffold triangles; triangle `2k` is the first half of sub-quad `k`,
    /// `2k + 1` the second.
    pub bvh: Bvh,
    pub diagonal: f64,
}

/// Relative tolerance below which a flow line is considered to run along a
/// grid line instead of through a cell.
const SNAP: f64 = 1e-9;

fn splits(lo: f64, hi: f64, mid: f64, total: f64) -> Vec<f64> {
    if mid - lo > SNAP * total && hi - mid > SNAP * total {
        vec![lo, mid, hi]
    } else {
        vec![lo, hi]
    }
}

fn cell_corners(mesh: &PolyMesh, chart: &Chart, i: usize, j: usize) -> [Vec3; 4] {
    let h = chart.bottom_he(i, j);
    let n = mesh.next(h);
    [
        mesh.position(mesh.origin(h)),
        mesh.position(mesh.dest(h)),
        mesh.position(mesh.dest(n)),
        mesh.position(mesh.origin(mesh.prev(h))),
    ]
}

impl ChartSplit {
    pub fn new(mesh: &PolyMesh, complex: &BaseComplex) -> ChartSplit {
        Self::with_lengths(mesh, complex, assign_ring_lengths(mesh))
    }

    pub fn with_lengths(mesh: &PolyMesh, complex: &BaseComplex, lengths: Vec<f64>) -> ChartSplit {
        let mut charts = Vec::with_capacity(complex.n_charts());
        let mut subquads = Vec::new();
        for (ci, ch) in complex.charts.iter().enumerate() {
            assert!(ch.m > 0 && ch.n > 0, "empty chart");
            let mut xs = vec![0.0];
            for i in 0..ch.m {
                let e = mesh.edge_of(ch.bottom_he(i, 0));
                xs.push(xs[i] + lengths[e as usize]);
            }
            let mut ys = vec![0.0];
            for j in 0..ch.n {
                let e = mesh.edge_of(mesh.next(ch.bottom_he(0, j)));
                ys.push(ys[j] + lengths[e as usize]);
            }
            let cells: Vec<[Vec3; 4]> = (0..ch.n)
                .flat_map(|j| (0..ch.m).map(move |i| (i, j)))
                .map(|(i, j)| cell_corners(mesh, ch, i, j))
                .collect();
            let mut frame = ChartFrame {
                m: ch.m,
                n: ch.n,
                xs,
                ys,
                center: Vec3::zeros(),
                corners: ch.corners,
                cells,
            };
            let (w, h) = (frame.width(), frame.height());
            let (xc, yc) = (w / 2.0, h / 2.0);
            frame.center = frame.point_at(xc, yc);
            for j in 0..ch.n {
                for i in 0..ch.m {
                    let (x0, x1) = (frame.xs[i], frame.xs[i + 1]);
                    let (y0, y1) = (frame.ys[j], frame.ys[j + 1]);
                    let sx = splits(x0, x1, xc, w);
                    let sy = splits(y0, y1, yc, h);
                    let cell = &frame.cells[j * ch.m + i];
                    for yy in sy.windows(2) {
                        for xx in sx.windows(2) {
                            let t = [(xx[0] - x0) / (x1 - x0), (xx[1] - x0) / (x1 - x0)];
                            let s = [(yy[0] - y0) / (y1 - y0), (yy[1] - y0) / (y1 - y0)];
                            let corners = [
                                bilinear(cell, t[0], s[0]),
                                bilinear(cell, t[1], s[0]),
                                bilinear(cell, t[1], s[1]),
                                bilinear(cell, t[0], s[1]),
                            ];
                            let mx = 0.5 * (xx[0] + xx[1]);
                            let my = 0.5 * (yy[0] + yy[1]);
                            let quadrant = (mx >= xc) as u8 | (((my >= yc) as u8) << 1);
                            subquads.push(SubQuad {
                                chart: ci as u32,
                                quadrant,
                                face: ch.cell(i, j),
                                corners,
                                a: ((xx[0] - xc).abs() / xc, (xx[1] - xc).abs() / xc),
                                b: ((yy[0] - yc).abs() / yc, (yy[1] - yc).abs() / yc),
                            });
                        }
                    }
                }
            }
            charts.push(frame);
        }
        let mut by_vertex: std::collections::BTreeMap<u32, Vec<(u32, Quadrant)>> =
            Default::default();
        for (ci, ch) in complex.charts.iter().enumerate() {
            for q in 0..4u8 {
                by_vertex
                    .entry(ch.corners[QUADRANT_CORNER[q as usize]])
                    .or_default()
                    .push((ci as u32, q));
            }
        }
        let mut subchart_dual = vec![0; 4 * charts.len()];
        let duals: Vec<DualChart> = by_vertex
            .into_iter()
            .enumerate()
            .map(|(d, (vertex, members))| {
                for &(c, q) in &members {
                    subchart_dual[4 * c as usize + q as usize] = d as u32;
                }
                DualChart {
                    vertex,
                    center: mesh.position(vertex),
                    members,
                }
            })
            .collect();
        let tris: Vec<[Vec3; 3]> = subquads
            .iter()
            .flat_map(|s| {
                let q = s.corners;
                [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
            })
            .collect();
        ChartSplit {
            charts,
            subquads,
            duals,
            subchart_dual,
            lengths,
            bvh: Bvh::new(tris),
            diagonal: mesh.bbox_diagonal(),
        }
    }

    pub fn dual_of(&self, chart: u32, q: Quadrant) -> &DualChart {
        &self.duals[self.subchart_dual[4 * chart as usize + q as usize] as usize]
    }

    /// Scaffold columns and rows of a subchart.
    pub fn subchart_dims(&self, chart: u32, q: Quadrant) -> (usize, usize) {
        let mut xs: Vec<u64> = Vec::new();
        let mut ys: Vec<u64> = Vec::new();
        for s in self
            .subquads
            .iter()
            .filter(|s| s.chart == chart && s.quadrant == q)
        {
            xs.push(s.a.0.min(s.a.1).to_bits());
            ys.push(s.b.0.min(s.b.1).to_bits());
        }
        xs.sort_unstable();
        xs.dedup();
        ys.sort_unstable();
        ys.dedup();
        (xs.len(), ys.len())
    }

    /// Source faces covered by a subchart, sorted.
    pub fn subchart_faces(&self, chart: u32, q: Quadrant) -> Vec<u32> {
        let mut f: Vec<u32> = self
            .subquads
            .iter()
            .filter(|s| s.chart == chart && s.quadrant == q)
            .map(|s| s.face)
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::geom::triangle_area;
    use crate::mesh::complex::{build_base_complex, ComplexOptions};

    fn split(m: &PolyMesh) -> (BaseComplex, ChartSplit) {
        let bc = build_base_complex(m, &ComplexOptions::default()).unwrap();
        let s = ChartSplit::new(m, &bc);
        (bc, s)
    }

    #[test]
    fn even_chart_centers_on_grid_vertex() {
        let m = corpus::grid_patch(4, 4);
        let (_, s) = split(&m);
        assert_eq!(s.charts.len(), 1);
        assert!((s.charts[0].center - Vec3::new(2.0, 2.0, 0.0)).norm() < 1e-12);
        for q in 0..4 {
            assert_eq!(s.subchart_dims(0, q), (2, 2));
            assert_eq!(s.subchart_faces(0, q).len(), 4);
        }
        assert_eq!(s.subquads.len(), 16);
        assert_eq!(s.duals.len(), 4);
    }

    #[test]
    fn odd_chart_splits_middle_cells() {
        let m = corpus::grid_patch(3, 3);
        let (_, s) = split(&m);
        assert!((s.charts[0].center - Vec3::new(1.5, 1.5, 0.0)).norm() < 1e-12);
        // 4 corner cells, 4 edge cells in halves, middle cell in quarters
        assert_eq!(s.subquads.len(), 4 + 8 + 4);
        for q in 0..4 {
            assert_eq!(s.subchart_dims(0, q), (2, 2));
        }
        let area: f64 = s
            .subquads
            .iter()
            .map(|x| {
                let c = x.corners;
                triangle_area(&c[0], &c[1], &c[2]) + triangle_area(&c[0], &c[2], &c[3])
            })
            .sum();
        assert!((area - m.total_area()).abs() < 1e-12);
    }

    #[test]
    fn cube_centers_and_duals() {
        let m = corpus::cube(2);
        let (bc, s) = split(&m);
        assert_eq!(s.charts.len(), 6);
        let mut centers: Vec<[i64; 3]> = s
            .charts
            .iter()
            .map(|c| [0, 1, 2].map(|k| (c.center[k] * 2.0).round() as i64))
            .collect();
        centers.sort();
        let want = vec![
            [0, 1, 1],
            [1, 0, 1],
            [1, 1, 0],
            [1, 1, 2],
            [1, 2, 1],
            [2, 1, 1],
        ];
        assert_eq!(centers, want);
        assert_eq!(s.duals.len(), 8);
        for d in &s.duals {
            assert_eq!(m.valence(d.vertex), 3);
            assert_eq!(d.members.len(), 3);
            for &(c, q) in &d.members {
                assert_eq!(
                    bc.charts[c as usize].corners[QUADRANT_CORNER[q as usize]],
                    d.vertex
                );
            }
        }
    }

    #[test]
    fn subcharts_partition_faces() {
        for (name, m) in corpus::desk_corpus() {
            let (bc, s) = split(&m);
            let mut count = vec![0usize; m.n_faces()];
            for c in 0..bc.n_charts() as u32 {
                for q in 0..4 {
                    for f in s.subchart_faces(c, q) {
                        count[f as usize] += 1;
                    }
                }
            }
            // a face lies in one subchart unless a flow line crosses it
            assert!(count.iter().all(|&k| (1..=4).contains(&k)), "{name}");
            let area: f64 = s
                .subquads
                .iter()
                .map(|x| {
                    let c = x.corners;
                    triangle_area(&c[0], &c[1], &c[2]) + triangle_area(&c[0], &c[2], &c[3])
                })
                .sum();
            assert!(area > 0.0, "{name}");
        }
    }
}

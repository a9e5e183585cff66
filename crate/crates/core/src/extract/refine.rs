//! Refinement of a polygonal layout into a dense quad mesh.
//!
//! Sides are resampled by arclength into `2^L` segments. Quad faces are
//! filled with Coons patches; other faces are split into one quad per side
//! through their centroid and side midpoints first. Free vertices are
//! projected onto the reference surface and smoothed with Winslow sweeps;
//! a move that lowers the smallest scaled Jacobian around its vertex is
//! rejected.

use serde::{Deserialize, Serialize};

use crate::geom::{Bvh, Vec3};
use crate::mesh::{PolyMesh, QuadMesh, TriMesh};
use crate::metrics::quad_scaled_jacobian;
use crate::{Error, Result};

use super::layout::LayoutMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineOptions {
    pub max_subdiv: u32,
    pub max_faces: usize,
    /// Smoothing sweeps; zero disables smoothing.
    pub sweeps: usize,
    /// Sweeps stop once no vertex moves more than this fraction of the
    /// bounding-box diagonal.
    pub tolerance: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_subdiv: 3,
            max_faces: 20000,
            sweeps: 20,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Refined {
    pub mesh: QuadMesh,
    pub levels: u32,
    /// Vertices kept in place: corners, feature and boundary sides.
    pub fixed: Vec<bool>,
}

/// Points at equal arclength along a polyline, both ends included.
pub fn resample(path: &[Vec3], segments: usize) -> Vec<Vec3> {
    let cum: Vec<f64> = std::iter::once(0.0)
        .chain(path.windows(2).scan(0.0, |acc, w| {
            *acc += (w[1] - w[0]).norm();
            Some(*acc)
        }))
        .collect();
    let total = *cum.last().unwrap();
    (0..=segments)
        .map(|i| {
            if i == segments {
                return *path.last().unwrap();
            }
            let t = total * i as f64 / segments as f64;
            let k = cum.partition_point(|&c| c <= t).clamp(1, path.len() - 1);
            let span = cum[k] - cum[k - 1];
            let s = if span > 0.0 {
                (t - cum[k - 1]) / span
            } else {
                0.0
            };
            path[k - 1] + (path[k] - path[k - 1]) * s
        })
        .collect()
}

/// Faces produced at `level` subdivisions.
pub fn refined_face_count(layout: &LayoutMesh, level: u32) -> usize {
    let n = 1usize << level;
    layout
        .faces
        .iter()
        .map(|c| {
            if c.len() == 4 {
                n * n
            } else {
                c.len() * (n / 2).max(1).pow(2)
            }
        })
        .sum()
}

/// Fewest subdivisions for which the output has no repeated edges.
fn min_level(layout: &LayoutMesh) -> u32 {
    if layout.sides.iter().any(|s| s.ends[0] == s.ends[1]) {
        return 2;
    }
    let mut pairs: Vec<(u32, u32)> = layout
        .sides
        .iter()
        .map(|s| (s.ends[0].min(s.ends[1]), s.ends[0].max(s.ends[1])))
        .collect();
    pairs.sort_unstable();
    let repeated = pairs.windows(2).any(|w| w[0] == w[1]);
    let self_glued = layout.sides.iter().any(|s| s.faces[0] == s.faces[1]);
    if layout.n_non_quads() > 0 || repeated || self_glued {
        1
    } else {
        0
    }
}

type Curve = Vec<(u32, Vec3)>;

struct Builder {
    pos: Vec<Vec3>,
    fixed: Vec<bool>,
    quads: Vec<[u32; 4]>,
}

impl Builder {
    fn add(&mut self, p: Vec3, fixed: bool) -> u32 {
        self.pos.push(p);
        self.fixed.push(fixed);
        (self.pos.len() - 1) as u32
    }

    fn line(&mut self, a: (u32, Vec3), b: (u32, Vec3), m: usize) -> Curve {
        let mut c = vec![a];
        for i in 1..m {
            let t = i as f64 / m as f64;
            let p = a.1 + (b.1 - a.1) * t;
            c.push((self.add(p, false), p));
        }
        c.push(b);
        c
    }

    /// Coons patch bounded by `bottom` (0,0)->(m,0), `right` (m,0)->(m,m),
    /// `top` (m,m)->(0,m) and `left` (0,m)->(0,0).
    fn coons(&mut self, bottom: &Curve, right: &Curve, top: &Curve, left: &Curve) {
        let m = bottom.len() - 1;
        let mut grid = vec![0u32; (m + 1) * (m + 1)];
        let (p00, p10, p11, p01) = (bottom[0].1, bottom[m].1, top[0].1, top[m].1);
        for j in 0..=m {
            for i in 0..=m {
                grid[j * (m + 1) + i] = if j == 0 {
                    bottom[i].0
                } else if i == m {
                    right[j].0
                } else if j == m {
                    top[m - i].0
                } else if i == 0 {
                    left[m - j].0
                } else {
                    let (u, v) = (i as f64 / m as f64, j as f64 / m as f64);
                    let p = bottom[i].1 * (1.0 - v)
                        + top[m - i].1 * v
                        + left[m - j].1 * (1.0 - u)
                        + right[j].1 * u
                        - (p00 * ((1.0 - u) * (1.0 - v))
                            + p10 * (u * (1.0 - v))
                            + p11 * (u * v)
                            + p01 * ((1.0 - u) * v));
                    self.add(p, false)
                };
            }
        }
        let id = |i: usize, j: usize| grid[j * (m + 1) + i];
        for j in 0..m {
            for i in 0..m {
                self.quads
                    .push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
}

/// Subdivides, fills, projects and smooths `layout` into a pure quad mesh.
///
/// Uses the deepest subdivision level not exceeding `max_subdiv` whose face
/// count stays within `max_faces`.
pub fn refine(layout: &LayoutMesh, reference: &TriMesh, opts: &RefineOptions) -> Result<Refined> {
    layout.validate()?;
    let lo = min_level(layout);
    let level = (lo..=opts.max_subdiv.max(lo))
        .rev()
        .find(|&l| refined_face_count(layout, l) <= opts.max_faces)
        .ok_or_else(|| Error::Layout(format!("refined layout exceeds {} faces", opts.max_faces)))?;
    let n = 1usize << level;
    let mut b = Builder {
        pos: layout.corner_pos.clone(),
        fixed: vec![true; layout.n_corners()],
        quads: Vec::new(),
    };

    let sides: Vec<Curve> = layout
        .sides
        .iter()
        .map(|s| {
            let pts = resample(&s.path, n);
            let keep = s.feature || s.is_boundary();
            let mut c = vec![(s.ends[0], layout.corner_pos[s.ends[0] as usize])];
            for p in &pts[1..n] {
                c.push((b.add(*p, keep), *p));
            }
            c.push((s.ends[1], layout.corner_pos[s.ends[1] as usize]));
            c
        })
        .collect();
    let oriented = |(s, rev): (u32, bool)| -> Curve {
        let mut c = sides[s as usize].clone();
        if rev {
            c.reverse();
        }
        c
    };

    for cycle in &layout.faces {
        let curves: Vec<Curve> = cycle.iter().map(|&os| oriented(os)).collect();
        if cycle.len() == 4 {
            b.coons(&curves[0], &curves[1], &curves[2], &curves[3]);
            continue;
        }
        let m = n / 2;
        let centroid = curves.iter().map(|c| c[0].1).sum::<Vec3>() / curves.len() as f64;
        let center = (b.add(centroid, false), centroid);
        let spokes: Vec<Curve> = curves.iter().map(|c| b.line(c[m], center, m)).collect();
        let k = curves.len();
        for i in 0..k {
            let prev = (i + k - 1) % k;
            let bottom: Curve = curves[i][..=m].to_vec();
            let top: Curve = spokes[prev].iter().rev().copied().collect();
            let left: Curve = curves[prev][m..].to_vec();
            b.coons(&bottom, &spokes[i], &top, &left);
        }
    }

    let mut mesh = PolyMesh::from_quads(b.pos, &b.quads)?;
    let fixed = b.fixed;
    let bvh = Bvh::from_indexed(reference.positions(), &reference.triangulate().0);
    let project = |p: &Vec3| bvh.nearest(p).map_or(*p, |q| q.point);
    for v in 0..mesh.n_vertices() as u32 {
        if !fixed[v as usize] {
            let p = project(&mesh.position(v));
            mesh.set_position(v, p);
        }
    }
    let diag = mesh.bbox_diagonal();
    for _ in 0..opts.sweeps {
        let mut moved = 0.0f64;
        for v in 0..mesh.n_vertices() as u32 {
            if fixed[v as usize] {
                continue;
            }
            let Some(target) = winslow(&mesh, v).or_else(|| laplacian(&mesh, v)) else {
                continue;
            };
            let p = project(&target);
            let old = mesh.position(v);
            let before = local_quality(&mesh, v);
            mesh.set_position(v, p);
            if local_quality(&mesh, v) < before {
                mesh.set_position(v, old);
                continue;
            }
            moved = moved.max((p - old).norm());
        }
        if moved <= opts.tolerance * diag {
            break;
        }
    }
    Ok(Refined {
        mesh,
        levels: level,
        fixed,
    })
}

/// Smallest scaled Jacobian of the quads around `v`.
fn local_quality(mesh: &QuadMesh, v: u32) -> f64 {
    mesh.vertex_faces(v)
        .map(|f| {
            let q = mesh.face_vertices(f);
            quad_scaled_jacobian(&[0, 1, 2, 3].map(|i| mesh.position(q[i]))).unwrap_or(-1.0)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Winslow update at an interior valence-4 vertex from its 3x3 stencil.
fn winslow(mesh: &QuadMesh, v: u32) -> Option<Vec3> {
    let out = mesh.outgoing(v);
    if out.len() != 4 {
        return None;
    }
    // walk the four outgoing half-edges in rotation order
    let mut h = out[0];
    let mut ring = Vec::with_capacity(8);
    for _ in 0..4 {
        if mesh.face_degree(mesh.face_of(h)) != 4 {
            return None;
        }
        ring.push(mesh.position(mesh.dest(h)));
        ring.push(mesh.position(mesh.dest(mesh.next(h))));
        h = mesh.twin(mesh.prev(h))?;
    }
    if h != out[0] {
        return None;
    }
    let [e, ne, n, nw, w, sw, s, se] = [0, 1, 2, 3, 4, 5, 6, 7].map(|i| ring[i]);
    let xu = (e - w) * 0.5;
    let xv = (n - s) * 0.5;
    let alpha = xv.norm_squared();
    let gamma = xu.norm_squared();
    let beta = xu.dot(&xv);
    let denom = 2.0 * (alpha + gamma);
    if denom <= 0.0 {
        return None;
    }
    Some(((e + w) * alpha + (n + s) * gamma - (ne - nw - se + sw) * (beta * 0.5)) / denom)
}

fn laplacian(mesh: &QuadMesh, v: u32) -> Option<Vec3> {
    let nb = mesh.vertex_edges(v);
    if nb.is_empty() {
        return None;
    }
    Some(
        nb.iter()
            .map(|&e| mesh.position(mesh.other_vertex(e, v)))
            .sum::<Vec3>()
            / nb.len() as f64,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::extract::layout_of_complex;
    use crate::mesh::complex::{build_base_complex, ComplexOptions};
    use crate::metrics::{hausdorff, scaled_jacobian};

    fn complex_layout(m: &QuadMesh) -> LayoutMesh {
        let bc = build_base_complex(m, &ComplexOptions::default()).unwrap();
        layout_of_complex(m, &bc).unwrap()
    }

    #[test]
    fn resample_is_uniform() {
        let path = vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 3.0, 0.0),
        ];
        let r = resample(&path, 4);
        assert_eq!(r.len(), 5);
        assert!((r[1] - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((r[2] - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
        assert_eq!(r[4], path[2]);
    }

    #[test]
    fn cube_two_levels() {
        let cube = corpus::cube(1);
        let l = complex_layout(&cube);
        let opts = RefineOptions {
            max_subdiv: 2,
            ..Default::default()
        };
        let r = refine(&l, &cube, &opts).unwrap();
        assert_eq!(r.levels, 2);
        assert_eq!(r.mesh.n_faces(), 96);
        assert!(r.mesh.is_pure_quad());
        let d = hausdorff(&r.mesh, &cube, 2000, 1);
        assert!(d.symmetric < 1e-6, "{}", d.symmetric);
    }

    #[test]
    fn pentagon_becomes_quads() {
        let p = |x: f64, y: f64| Vec3::new(x, y, 0.0);
        let corners = vec![
            p(0.0, 0.0),
            p(2.0, 0.0),
            p(2.5, 1.0),
            p(1.0, 2.0),
            p(-0.5, 1.0),
            p(0.0, -1.0),
            p(2.0, -1.0),
        ];
        let l = LayoutMesh::from_polygons(corners, &[vec![0, 1, 2, 3, 4], vec![0, 5, 6, 1]], &[])
            .unwrap();
        let reference = corpus::triangulate_random(&corpus::grid_patch(1, 1), 0)
            .with_positions(vec![p(-5.0, -5.0), p(5.0, -5.0), p(-5.0, 5.0), p(5.0, 5.0)]);
        let opts = RefineOptions {
            max_subdiv: 1,
            ..Default::default()
        };
        let r = refine(&l, &reference, &opts).unwrap();
        assert_eq!(r.levels, 1);
        assert!(r.mesh.is_pure_quad());
        assert_eq!(r.mesh.n_faces(), 5 + 4);
        assert_eq!(r.mesh.n_faces(), refined_face_count(&l, 1));
    }

    #[test]
    fn smoothing_does_not_degrade_the_sphere() {
        let coarse = corpus::cube_sphere(2);
        let reference = corpus::triangulate_random(&corpus::cube_sphere(16), 0);
        let l = complex_layout(&coarse);
        let raw = refine(
            &l,
            &reference,
            &RefineOptions {
                sweeps: 0,
                ..Default::default()
            },
        )
        .unwrap();
        let smooth = refine(&l, &reference, &RefineOptions::default()).unwrap();
        let (a, b) = (
            scaled_jacobian(&raw.mesh).unwrap().min,
            scaled_jacobian(&smooth.mesh).unwrap().min,
        );
        assert!(b >= a, "{b} < {a}");
        assert!(smooth.mesh.n_faces() <= 20000);
    }

    #[test]
    fn face_cap_limits_the_level() {
        let l = complex_layout(&corpus::cube(1));
        let opts = RefineOptions {
            max_faces: 100,
            ..Default::default()
        };
        let r = refine(&l, &corpus::cube(1), &opts).unwrap();
        assert_eq!(r.levels, 2);
        let opts = RefineOptions {
            max_faces: 5,
            ..Default::default()
        };
        assert!(refine(&l, &corpus::cube(1), &opts).is_err());
    }

    #[test]
    fn self_glued_cylinder_refines() {
        let c = corpus::cylinder(16, 6);
        let l = complex_layout(&c);
        let r = refine(
            &l,
            &c,
            &RefineOptions {
                max_subdiv: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.mesh.is_pure_quad());
        assert_eq!(r.mesh.boundary_loops().len(), 2);
        assert_eq!(r.mesh.euler_characteristic(), 0);
    }
}

#![allow(dead_code)]

use nalgebra::{Rotation3, Unit};
use proptest::prelude::*;
use quadkit::corpus;
use quadkit::geom::Vec3;
use quadkit::mesh::PolyMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A named small quad mesh from the parametric generators.
pub fn quad_mesh() -> impl Strategy<Value = (String, PolyMesh)> {
    prop_oneof![
        (1usize..7, 1usize..7)
            .prop_map(|(m, n)| (format!("grid {m}x{n}"), corpus::grid_patch(m, n))),
        (1usize..4).prop_map(|k| (format!("cube {k}"), corpus::cube(k))),
        (3usize..10, 1usize..5)
            .prop_map(|(u, v)| (format!("cylinder {u}x{v}"), corpus::cylinder(u, v))),
        (4usize..12, 3usize..8).prop_map(|(u, v)| (format!("torus {u}x{v}"), corpus::torus(u, v))),
        (1usize..3).prop_map(|k| (format!("l-bracket {k}"), corpus::l_bracket(k))),
        (1usize..4).prop_map(|k| (format!("cube-sphere {k}"), corpus::cube_sphere(k))),
        (1i32..4, 1i32..3, 1i32..3)
            .prop_map(|(a, b, c)| (format!("box {a}x{b}x{c}"), corpus::boxed(a, b, c))),
    ]
}

/// Quad meshes including ones with non-simple loops.
pub fn any_loops_mesh() -> impl Strategy<Value = (String, PolyMesh)> {
    prop_oneof![
        3 => quad_mesh(),
        1 => (5usize..9, 10usize..40).prop_map(|(n, len)| (format!("helix {n} {len}"), corpus::helix_strip(n, len, 0.3))),
        1 => (3usize..6, 4usize..8).prop_map(|(w, len)| (format!("crossing {w}"), corpus::crossing_strip(w, w, 1, 1, len))),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct Similarity {
    pub rot: Rotation3<f64>,
    pub scale: f64,
    pub shift: Vec3,
}

impl Similarity {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rot * p * self.scale + self.shift
    }
    pub fn mesh(&self, m: &PolyMesh) -> PolyMesh {
        m.with_positions(m.positions().iter().map(|p| self.apply(p)).collect())
    }
}

pub fn similarity() -> impl Strategy<Value = Similarity> {
    (
        (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
        0.0f64..std::f64::consts::TAU,
        0.2f64..5.0,
        (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0),
    )
        .prop_map(|((ax, ay, az), angle, scale, (x, y, z))| Similarity {
            rot: Rotation3::from_axis_angle(&Unit::new_normalize(Vec3::new(ax, ay, az)), angle),
            scale,
            shift: Vec3::new(x, y, z),
        })
}

/// Moves every vertex by up to `amp` times the mean edge length.
pub fn jitter(m: &PolyMesh, amp: f64, seed: u64) -> PolyMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = m.mean_edge_length() * amp;
    m.with_positions(
        m.positions()
            .iter()
            .map(|p| {
                p + Vec3::new(
                    rng.gen_range(-h..=h),
                    rng.gen_range(-h..=h),
                    rng.gen_range(-h..=h),
                )
            })
            .collect(),
    )
}

/// A random point inside face `f` (bilinear for quads, barycentric
/// otherwise) from two parameters in `[0, 1]`.
pub fn point_in_face(m: &PolyMesh, f: u32, s: f64, t: f64) -> Vec3 {
    let v: Vec<Vec3> = m.face_vertices(f).iter().map(|&v| m.position(v)).collect();
    if v.len() == 4 {
        quadkit::fields::bilinear(&[v[0], v[1], v[2], v[3]], s, t)
    } else {
        let (s, t) = if s + t > 1.0 {
            (1.0 - s, 1.0 - t)
        } else {
            (s, t)
        };
        v[0] + (v[1] - v[0]) * s + (v[2] - v[0]) * t
    }
}

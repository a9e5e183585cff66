mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use quadkit::corpus;
use quadkit::fields::{cdf_dcdf, parametrization, ChartSplit, FieldKind, Fields};
use quadkit::geom::Vec3;
use quadkit::mesh::complex::{build_base_complex, ComplexOptions};
use quadkit::mesh::PolyMesh;

use common::{point_in_face, quad_mesh, similarity};

fn split(m: &PolyMesh) -> ChartSplit {
    let bc = build_base_complex(m, &ComplexOptions::default()).unwrap();
    ChartSplit::new(m, &bc)
}

/// `n x n` grid scaled onto `[-1, 1]^2`.
fn square(n: usize) -> PolyMesh {
    let g = corpus::grid_patch(n, n);
    let s = 2.0 / n as f64;
    g.with_positions(
        g.positions()
            .iter()
            .map(|p| Vec3::new(p.x * s - 1.0, p.y * s - 1.0, 0.0))
            .collect(),
    )
}

fn kind() -> impl Strategy<Value = FieldKind> {
    prop_oneof![
        Just(FieldKind::Plain),
        (1u32..3).prop_map(FieldKind::Densified)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flipped_linf_on_the_square(n in 1usize..7, pts in prop::collection::vec((-1.0f64..=1.0, -1.0f64..=1.0), 1..200)) {
        let m = square(n);
        let sp = split(&m);
        let f = Fields::new(&sp, FieldKind::Plain);
        for (x, y) in pts {
            let want = 1.0 - x.abs().max(y.abs());
            let got = f.eval_cdf(&Vec3::new(x, y, 0.0));
            prop_assert!((got - want).abs() < 1e-9, "({}, {}): {} vs {}", x, y, got, want);
        }
    }

    #[test]
    fn values_stay_in_range((name, mesh) in quad_mesh(), k in kind(), samples in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..=1.0, 0.0f64..=1.0), 1..40)) {
        let sp = split(&mesh);
        let f = Fields::new(&sp, k);
        for (i, s, t) in samples {
            let p = point_in_face(&mesh, i.index(mesh.n_faces()) as u32, s, t);
            let (v, _) = f.eval(&p);
            prop_assert!((0.0..=1.0).contains(&v.cdf) && (0.0..=1.0).contains(&v.dcdf), "{}: {:?}", name, (v.cdf, v.dcdf));
        }
    }

    #[test]
    fn chart_boundaries_are_zero((name, mesh) in quad_mesh(), picks in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..=1.0), 1..20)) {
        let bc = build_base_complex(&mesh, &ComplexOptions::default()).unwrap();
        let sp = ChartSplit::new(&mesh, &bc);
        let f = Fields::new(&sp, FieldKind::Plain);
        let cut: Vec<u32> = (0..mesh.n_edges() as u32).filter(|&e| bc.cut[e as usize]).collect();
        prop_assume!(!cut.is_empty());
        for (i, t) in picks {
            let e = cut[i.index(cut.len())];
            let (a, b) = mesh.edge_vertices(e);
            let p = mesh.position(a) * (1.0 - t) + mesh.position(b) * t;
            let c = f.eval_cdf(&p);
            prop_assert!(c < 1e-6, "{}: cdf {} on edge {}", name, c, e);
        }
    }

    #[test]
    fn continuous_across_edges((name, mesh) in quad_mesh(), k in kind(), picks in prop::collection::vec((any::<prop::sample::Index>(), 0.05f64..0.95), 1..20)) {
        let sp = split(&mesh);
        let f = Fields::new(&sp, k);
        let interior: Vec<u32> = (0..mesh.n_edges() as u32).filter(|&e| !mesh.is_boundary_edge(e)).collect();
        prop_assume!(!interior.is_empty());
        for (i, t) in picks {
            let e = interior[i.index(interior.len())];
            let (a, b) = mesh.edge_vertices(e);
            let p = mesh.position(a) * (1.0 - t) + mesh.position(b) * t;
            let (f0, f1) = mesh.edge_faces(e);
            let step = 1e-6 * mesh.edge_length(e);
            // each densification level halves the subchart, doubling the slope
            let tol = match k { FieldKind::Densified(n) => 1e-5 * 2f64.powi(n as i32 + 1), _ => 1e-5 };
            let toward = |g: u32| p + (mesh.face_center(g) - p).normalize() * step;
            let (c0, c1) = (f.eval(&toward(f0)).0, f.eval(&toward(f1.unwrap())).0);
            prop_assert!((c0.cdf - c1.cdf).abs() < tol, "{}: cdf jump {} at edge {}", name, (c0.cdf - c1.cdf).abs(), e);
            prop_assert!((c0.dcdf - c1.dcdf).abs() < tol, "{}: dcdf jump {} at edge {}", name, (c0.dcdf - c1.dcdf).abs(), e);
        }
    }

    #[test]
    fn either_branch_recovers_coordinates(px in 0.0f64..=1.0, py in 0.0f64..=1.0) {
        let (c, d) = cdf_dcdf(px, py);
        for first in [true, false] {
            let (u, v) = parametrization(c, d, first);
            let same = (u - px).abs() < 1e-12 && (v - py).abs() < 1e-12;
            let swapped = (u - py).abs() < 1e-12 && (v - px).abs() < 1e-12;
            prop_assert!(same || swapped);
        }
        if (px - py).abs() < 1e-15 {
            prop_assert!((c + d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rigid_motion_moves_the_fields((name, mesh) in quad_mesh(), t in similarity(), k in kind(), samples in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..=1.0, 0.0f64..=1.0), 1..20)) {
        let t = common::Similarity { scale: 1.0, ..t };
        let moved = t.mesh(&mesh);
        let (s0, s1) = (split(&mesh), split(&moved));
        let (f0, f1) = (Fields::new(&s0, k), Fields::new(&s1, k));
        for (i, s, u) in samples {
            let p = point_in_face(&mesh, i.index(mesh.n_faces()) as u32, s, u);
            let (a, b) = (f0.eval(&p).0, f1.eval(&t.apply(&p)).0);
            prop_assert!((a.cdf - b.cdf).abs() < 1e-9 && (a.dcdf - b.dcdf).abs() < 1e-9, "{}: {:?} vs {:?}", name, (a.cdf, a.dcdf), (b.cdf, b.dcdf));
        }
    }

    #[test]
    fn subquads_tile_each_face(n in 1usize..6, m in 1usize..6, planar_cube in any::<bool>()) {
        let mesh = if planar_cube { corpus::cube(n) } else { corpus::grid_patch(n, m) };
        let sp = split(&mesh);
        let mut area: HashMap<u32, f64> = HashMap::new();
        let mut owner: HashMap<u32, Vec<(u32, u8)>> = HashMap::new();
        for s in &sp.subquads {
            let q = s.corners;
            let a = 0.5 * ((q[1] - q[0]).cross(&(q[2] - q[0])).norm() + (q[2] - q[0]).cross(&(q[3] - q[0])).norm());
            *area.entry(s.face).or_default() += a;
            owner.entry(s.face).or_default().push((s.chart, s.quadrant));
        }
        prop_assert_eq!(area.len(), mesh.n_faces());
        for (f, a) in area {
            prop_assert!((a - mesh.face_area(f)).abs() < 1e-9 * mesh.face_area(f).max(1.0), "face {}: {} vs {}", f, a, mesh.face_area(f));
            let charts: std::collections::BTreeSet<u32> = owner[&f].iter().map(|o| o.0).collect();
            prop_assert_eq!(charts.len(), 1, "face {} spans charts", f);
        }
    }
}

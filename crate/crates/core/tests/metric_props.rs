mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use quadkit::corpus;
use quadkit::geom::Vec3;
use quadkit::mesh::complex::{build_base_complex, ComplexOptions};
use quadkit::mesh::loops::{all_edge_loops, all_face_loops};
use quadkit::mesh::PolyMesh;
use quadkit::metrics::{loop_simplicity, rotation_index, SimplicityReport, TurningMode};

use common::{any_loops_mesh, similarity};

fn simplicity(m: &PolyMesh) -> SimplicityReport {
    let bc = build_base_complex(m, &ComplexOptions::default()).unwrap();
    loop_simplicity(m, &bc, TurningMode::Signed)
}

/// Disjoint union with a grid patch placed far away.
fn with_grid(m: &PolyMesh, w: usize, h: usize) -> PolyMesh {
    let g = corpus::grid_patch(w, h);
    let far = m.bbox().max + Vec3::new(100.0, 0.0, 0.0);
    let mut pos = m.positions().to_vec();
    let off = pos.len() as u32;
    pos.extend(g.positions().iter().map(|p| p + far));
    let mut faces = m.face_lists();
    faces.extend(
        g.faces()
            .map(|f| f.iter().map(|v| v + off).collect::<Vec<u32>>()),
    );
    PolyMesh::new(pos, faces).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn simplicity_ignores_rigid_motion_and_scale((name, mesh) in any_loops_mesh(), t in similarity()) {
        let a = simplicity(&mesh);
        let b = simplicity(&t.mesh(&mesh));
        prop_assert!((a.s_fl - b.s_fl).abs() < 1e-9, "{}: {} vs {}", name, a.s_fl, b.s_fl);
        prop_assert!((a.s_el - b.s_el).abs() < 1e-9, "{}: {} vs {}", name, a.s_el, b.s_el);
        prop_assert!((a.s_l - b.s_l).abs() < 1e-9, "{}", name);
    }

    #[test]
    fn loops_and_rings_partition_the_edges((name, mesh) in any_loops_mesh()) {
        for (kind, lists) in [
            ("edge-loop", all_edge_loops(&mesh).into_iter().map(|l| l.edges).collect::<Vec<_>>()),
            ("edge-ring", all_face_loops(&mesh).into_iter().map(|l| l.edges).collect::<Vec<_>>()),
        ] {
            let mut owner: HashMap<u32, usize> = HashMap::new();
            for (i, edges) in lists.iter().enumerate() {
                for &e in edges {
                    let o = *owner.entry(e).or_insert(i);
                    prop_assert_eq!(o, i, "{}: edge {} in two {}s", name, e, kind);
                }
            }
            prop_assert_eq!(owner.len(), mesh.n_edges(), "{}: {} cover", name, kind);
        }
    }

    #[test]
    fn rotation_index_ignores_direction(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, -0.5f64..0.5), 3..40),
        closed in any::<bool>(),
        absolute in any::<bool>(),
    ) {
        let p: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let r: Vec<Vec3> = p.iter().rev().copied().collect();
        let mode = if absolute { TurningMode::Absolute } else { TurningMode::Signed };
        let (a, b) = (rotation_index(&p, closed, mode), rotation_index(&r, closed, mode));
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }

    #[test]
    fn a_simple_grid_only_dilutes((name, mesh) in any_loops_mesh(), w in 1usize..6, h in 1usize..6) {
        let a = simplicity(&mesh);
        let b = simplicity(&with_grid(&mesh, w, h));
        prop_assert!(b.s_fl >= a.s_fl - 1e-12, "{}: {} -> {}", name, a.s_fl, b.s_fl);
        prop_assert!(b.s_el >= a.s_el - 1e-12, "{}: {} -> {}", name, a.s_el, b.s_el);
    }
}

use super::PolyMesh;
use crate::geom::angle_between;

pub const DEFAULT_SHARP_ANGLE: f64 = 130.0;

/// Dihedral angle of an interior edge in degrees: 180 for a flat pair,
/// 90 for a cube edge. Convex and concave creases are not distinguished.
/// Boundary edges return `None`.
pub fn dihedral_angle(mesh: &PolyMesh, e: u32) -> Option<f64> {
    let (f, g) = mesh.edge_faces(e);
    let g = g?;
    let a = angle_between(&mesh.face_normal(f), &mesh.face_normal(g));
    Some(180.0 - a.to_degrees())
}

/// Edges whose dihedral angle is below `threshold` degrees, plus all
/// boundary edges.
pub fn detect_sharp_edges(mesh: &PolyMesh, threshold: f64) -> Vec<bool> {
    (0..mesh.n_edges() as u32)
        .map(|e| match dihedral_angle(mesh, e) {
            None => true,
            Some(d) => d < threshold,
        })
        .collect()
}

/// Returns a copy whose feature tags are the union of existing tags and the
/// detected sharp edges.
pub fn tag_sharp(mesh: &PolyMesh, threshold: f64) -> PolyMesh {
    let mut m = mesh.clone();
    for (t, s) in m
        .edge_feature
        .iter_mut()
        .zip(detect_sharp_edges(mesh, threshold))
    {
        *t |= s;
    }
    m.tag_feature_vertices();
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn cube_edges_are_sharp() {
        let m = corpus::unit_cube_quads();
        assert!(detect_sharp_edges(&m, 130.0).iter().all(|&s| s));
    }

    #[test]
    fn flat_grid_interior_not_sharp() {
        let m = corpus::grid_patch(4, 3);
        let s = detect_sharp_edges(&m, 130.0);
        for e in 0..m.n_edges() as u32 {
            assert_eq!(s[e as usize], m.is_boundary_edge(e));
        }
    }

    #[test]
    fn icosphere_has_no_sharp_edges() {
        let m = corpus::icosphere(2);
        let min = (0..m.n_edges() as u32)
            .filter_map(|e| dihedral_angle(&m, e))
            .fold(f64::INFINITY, f64::min);
        // level-2 icosphere: smallest dihedral is about 160 degrees
        assert!(min > 138.0, "{min}");
        assert!(detect_sharp_edges(&m, 130.0).iter().all(|&s| !s));
    }
}

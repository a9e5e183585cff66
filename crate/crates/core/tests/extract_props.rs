use std::sync::OnceLock;

use nalgebra::DMatrix;
use proptest::prelude::*;
use quadkit::corpus;
use quadkit::extract::isotropic_remesh;
use quadkit::extract::{
    cluster_faces, collapse_to_quads, knn_graph, refine, refined_face_count, taubin_smooth,
    ClusterOptions, LayoutMesh, RefineOptions, TaubinParams,
};
use quadkit::fields::{bake_fields, BakeSites, ChartSplit, FieldKind, FieldSample, Fields};
use quadkit::geom::Vec3;
use quadkit::mesh::complex::{build_base_complex, ComplexOptions};
use quadkit::mesh::{PolyMesh, TriMesh};

fn bake(quads: &PolyMesh) -> (TriMesh, Vec<FieldSample>) {
    let bc = build_base_complex(quads, &ComplexOptions::default()).unwrap();
    let split = ChartSplit::new(quads, &bc);
    let fields = Fields::new(&split, FieldKind::Plain);
    let target = quads.mean_edge_length() / 8.0;
    let tri = isotropic_remesh(&corpus::triangulate_random(quads, 1), target, true).unwrap();
    let samples = bake_fields(&fields, &tri, BakeSites::FaceCenters).unwrap();
    (tri, samples)
}

fn baked() -> &'static [(TriMesh, Vec<FieldSample>)] {
    static CACHE: OnceLock<Vec<(TriMesh, Vec<FieldSample>)>> = OnceLock::new();
    CACHE.get_or_init(|| {
        [
            corpus::cube(2),
            corpus::cube_sphere(2),
            corpus::l_bracket(1),
        ]
        .iter()
        .map(bake)
        .collect()
    })
}

/// Unit grid of `w x h` cells whose chosen cells are merged with their right
/// neighbour into hexagons.
fn grid_polygons(w: usize, h: usize, merge: &[bool]) -> (Vec<Vec3>, Vec<Vec<u32>>) {
    let id = |i: usize, j: usize| (j * (w + 1) + i) as u32;
    let corners = (0..=h)
        .flat_map(|j| (0..=w).map(move |i| Vec3::new(i as f64, j as f64, 0.0)))
        .collect();
    let mut polys = Vec::new();
    for j in 0..h {
        let mut i = 0;
        while i < w {
            if i + 1 < w && merge[(j * w + i) % merge.len()] {
                polys.push(vec![
                    id(i, j),
                    id(i + 1, j),
                    id(i + 2, j),
                    id(i + 2, j + 1),
                    id(i + 1, j + 1),
                    id(i, j + 1),
                ]);
                i += 2;
            } else {
                polys.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                i += 1;
            }
        }
    }
    (corners, polys)
}

/// `(I + f (D^-1 W - I))` applied to `z`, densely.
fn dense_pass(w: &DMatrix<f64>, z: &DMatrix<f64>, f: f64) -> DMatrix<f64> {
    let n = w.nrows();
    let mut op = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        let s: f64 = w.row(i).sum();
        for j in 0..n {
            op[(i, j)] += f * (w[(i, j)] / s - if i == j { 1.0 } else { 0.0 });
        }
    }
    op * z
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn clusters_partition_every_face(which in 0usize..3, picks in prop::collection::vec(any::<prop::sample::Index>(), 1..12)) {
        let (tri, samples) = &baked()[which];
        let mut seeds: Vec<u32> = picks.iter().map(|i| i.index(tri.n_faces()) as u32).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let part = cluster_faces(tri, samples, &seeds, &ClusterOptions::default()).unwrap();
        let k = part.n_clusters();
        prop_assert!(k >= 1 && k <= seeds.len());
        prop_assert_eq!(part.face_cluster.len(), tri.n_faces());
        let mut size = vec![0usize; k];
        for &c in &part.face_cluster {
            prop_assert!((c as usize) < k);
            size[c as usize] += 1;
        }
        prop_assert!(size.iter().all(|&s| s > 0), "empty cluster: {:?}", size);
        for (c, &s) in part.seeds.iter().enumerate() {
            prop_assert_eq!(part.face_cluster[s as usize], c as u32);
        }
    }

    #[test]
    fn collapse_keeps_features_and_face_count(
        w in 1usize..7,
        h in 1usize..6,
        merge in prop::collection::vec(any::<bool>(), 1..40),
        feat in prop::collection::vec(any::<bool>(), 1..60),
    ) {
        let (corners, polys) = grid_polygons(w, h, &merge);
        // only corners with even parity, so no side joins two features
        let feature: Vec<bool> = (0..corners.len())
            .map(|c| (c % (w + 1) + c / (w + 1)) % 2 == 0 && feat[c % feat.len()])
            .collect();
        let layout = LayoutMesh::from_polygons(corners.clone(), &polys, &feature).unwrap();
        let out = collapse_to_quads(&layout);
        prop_assert!(out.validate().is_ok());
        prop_assert!(out.n_faces() <= layout.n_faces());
        prop_assert!(out.n_non_quads() <= layout.n_non_quads());
        for p in &out.corner_pos {
            prop_assert!(corners.contains(p), "moved corner {:?}", p);
        }
        for (c, _) in feature.iter().enumerate().filter(|x| *x.1) {
            prop_assert!(out.corner_pos.contains(&corners[c]), "feature corner {} lost", c);
        }
    }

    #[test]
    fn refinement_is_pure_quad_within_budget(w in 1usize..6, h in 1usize..6, max_faces in 1usize..3000, max_subdiv in 0u32..5) {
        let (corners, polys) = grid_polygons(w, h, &[false]);
        let layout = LayoutMesh::from_polygons(corners, &polys, &[false]).unwrap();
        let reference = corpus::triangulate_random(&corpus::grid_patch(w, h), 1);
        let opts = RefineOptions { max_faces, max_subdiv, ..RefineOptions::default() };
        match refine(&layout, &reference, &opts) {
            Ok(r) => {
                prop_assert!(r.mesh.faces().all(|f| f.len() == 4));
                prop_assert!(r.mesh.n_faces() <= max_faces);
                prop_assert!(r.levels <= max_subdiv);
                prop_assert_eq!(r.mesh.n_faces(), refined_face_count(&layout, r.levels));
            }
            Err(_) => prop_assert!(refined_face_count(&layout, 0) > max_faces),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn taubin_matches_the_dense_operator(
        pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 20..300),
        k in 1usize..16,
        iterations in 0usize..6,
        cols in 1usize..4,
    ) {
        let points: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
        let normals: Vec<Vec3> = points.iter().map(|p| p.normalize()).collect();
        let params = TaubinParams { k, iterations, ..TaubinParams::default() };
        let graph = knn_graph(&points, &normals, &params).unwrap();
        let n = points.len();
        let mut w = DMatrix::<f64>::zeros(n, n);
        for (i, row) in graph.neighbors.iter().enumerate() {
            prop_assert_eq!(row.len(), k);
            for &(j, wij) in row {
                prop_assert!(wij > 0.0 && wij <= 1.0);
                w[(i, j as usize)] = wij;
            }
        }
        let z0 = DMatrix::from_fn(n, cols, |r, c| points[r][c] + c as f64);
        let mut want = z0.clone();
        for _ in 0..iterations {
            want = dense_pass(&w, &want, params.lambda);
            want = dense_pass(&w, &want, params.mu);
        }
        let got = taubin_smooth(&graph, &z0, &params);
        prop_assert!((got - want).amax() < 1e-10);
    }
}

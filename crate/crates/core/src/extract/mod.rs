//! Layout extraction from chart distance fields.

pub mod cluster;
pub mod layout;
pub mod refine;
pub mod remesh;
pub mod roundtrip;
pub mod taubin;

pub use cluster::{cluster_faces, detect_seeds, seed_radius, ClusterOptions, ClusterPartition};
pub use layout::{
    collapse_to_quads, extract_layout, layout_of_complex, LayoutMesh, LayoutOptions, LayoutSide,
};
pub use refine::{refine, refined_face_count, resample, RefineOptions, Refined};
pub use remesh::isotropic_remesh;
pub use roundtrip::{
    roundtrip, same_graph, subchart_adjacency, RoundTrip, RoundTripOptions, RoundTripReport,
};
pub use taubin::{
    dirichlet_energy, knn_graph, regularize_point_signal, taubin_smooth, KnnGraph, TaubinParams,
};

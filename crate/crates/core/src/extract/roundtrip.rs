//! Bake-then-extract round trip.
//!
//! The fields of a quad mesh are baked on an isotropic remesh of its
//! surface, then seeds, clusters and a layout are recovered from the baked
//! samples alone and compared with the mesh's own base complex. Layouts
//! that cannot be represented (closed or degenerate clusters) are retried
//! on the densified fields, whose subcharts are compared instead.

use std::collections::{BTreeSet, HashMap};

use petgraph::algo::is_isomorphic;
use petgraph::graph::UnGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fields::{
    bake_fields, BakeSites, ChartSplit, FieldKind, FieldSample, Fields, QUADRANT_CORNER,
};
use crate::mesh::complex::{build_base_complex, BaseComplex, ComplexOptions};
use crate::mesh::{QuadMesh, TriMesh};
use crate::metrics::{loop_simplicity, TurningMode};
use crate::{Error, Result};

use super::cluster::{cluster_faces, detect_seeds, seed_radius, ClusterOptions, ClusterPartition};
use super::layout::{collapse_to_quads, extract_layout, LayoutMesh, LayoutOptions};
use super::refine::{refine, RefineOptions, Refined};
use super::remesh::isotropic_remesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoundTripOptions {
    /// Remesh edge length as a fraction of the bounding-box diagonal.
    pub target_edge: f64,
    /// Amplitude of uniform noise added to the baked distance field.
    pub noise: f64,
    pub seed: u64,
    /// Retry on densified fields when the plain layout is degenerate.
    pub densify_fallback: bool,
    /// Seed detection radius; scaled with the face count when unset.
    pub seed_radius: Option<usize>,
    pub cluster: ClusterOptions,
    pub layout: LayoutOptions,
    pub refine: RefineOptions,
    pub turning: TurningMode,
}

impl Default for RoundTripOptions {
    fn default() -> Self {
        RoundTripOptions {
            target_edge: 0.02,
            noise: 0.0,
            seed: 0,
            densify_fallback: true,
            seed_radius: None,
            cluster: ClusterOptions::default(),
            layout: LayoutOptions::default(),
            refine: RefineOptions::default(),
            turning: TurningMode::Signed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    #[serde(rename = "N_c_in")]
    pub n_c_in: usize,
    #[serde(rename = "N_c_out")]
    pub n_c_out: usize,
    pub adjacency_isomorphic: bool,
    #[serde(rename = "S_l_in")]
    pub s_l_in: f64,
    #[serde(rename = "S_l_out")]
    pub s_l_out: f64,
    pub layout_faces: usize,
    pub densified: bool,
    pub remesh_faces: usize,
    pub seeds: usize,
    pub clusters: usize,
    pub merges: usize,
    pub non_quad_faces: usize,
    pub subdivision_levels: u32,
    pub refined_faces: usize,
    pub warnings: Vec<String>,
}

impl RoundTripReport {
    /// Chart count and adjacency both recovered.
    pub fn success(&self) -> bool {
        self.n_c_in == self.n_c_out && self.adjacency_isomorphic
    }
}

#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub report: RoundTripReport,
    pub remeshed: TriMesh,
    pub samples: Vec<FieldSample>,
    pub partition: ClusterPartition,
    pub layout: LayoutMesh,
    pub refined: Refined,
}

/// Adjacency of the four subcharts of every chart, node `4 * chart + q`.
/// Quadrants of one chart form a cycle; across a shared chart side the
/// halves meet in reverse order.
pub fn subchart_adjacency(bc: &BaseComplex) -> Vec<(u32, u32)> {
    let quadrant_at =
        |corner: usize| QUADRANT_CORNER.iter().position(|&c| c == corner).unwrap() as u32;
    let mut pairs = BTreeSet::new();
    let mut add = |a: u32, b: u32| {
        pairs.insert((a.min(b), a.max(b)));
    };
    let mut sides: HashMap<&[u32], (u32, usize)> = HashMap::new();
    for (c, chart) in bc.charts.iter().enumerate() {
        let c = c as u32;
        for s in 0..4 {
            add(4 * c + quadrant_at(s), 4 * c + quadrant_at((s + 1) % 4));
            sides.insert(&chart.sides[s], (c, s));
        }
    }
    for (c, chart) in bc.charts.iter().enumerate() {
        let c = c as u32;
        for s in 0..4 {
            let rev: Vec<u32> = chart.sides[s].iter().rev().copied().collect();
            let Some(&(d, t)) = sides.get(rev.as_slice()) else {
                continue;
            };
            if (d, t) == (c, s) {
                continue;
            }
            add(4 * c + quadrant_at(s), 4 * d + quadrant_at((t + 1) % 4));
            add(4 * c + quadrant_at((s + 1) % 4), 4 * d + quadrant_at(t));
        }
    }
    pairs.into_iter().collect()
}

/// Isomorphism of two graphs on `n` nodes given as edge lists (self-loops
/// allowed).
pub fn same_graph(n: usize, a: &[(u32, u32)], b: &[(u32, u32)]) -> bool {
    let build = |edges: &[(u32, u32)]| {
        let mut g: UnGraph<(), ()> = UnGraph::default();
        for _ in 0..n {
            g.add_node(());
        }
        for &(x, y) in edges {
            g.add_edge(x.into(), y.into(), ());
        }
        g
    };
    a.len() == b.len() && is_isomorphic(&build(a), &build(b))
}

fn add_noise(samples: &mut [FieldSample], amplitude: f64, seed: u64) {
    if amplitude <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in samples {
        s.cdf = (s.cdf + rng.gen_range(-amplitude..=amplitude)).clamp(0.0, 1.0);
    }
}

struct Attempt {
    samples: Vec<FieldSample>,
    partition: ClusterPartition,
    layout: LayoutMesh,
    seeds: usize,
}

fn attempt(
    split: &ChartSplit,
    tri: &TriMesh,
    kind: FieldKind,
    opts: &RoundTripOptions,
) -> Result<Attempt> {
    let fields = Fields::new(split, kind);
    let mut samples = bake_fields(&fields, tri, BakeSites::FaceCenters)?;
    add_noise(&mut samples, opts.noise, opts.seed);
    let cdf: Vec<f64> = samples.iter().map(|s| s.cdf).collect();
    let r = opts
        .seed_radius
        .unwrap_or_else(|| seed_radius(tri.n_faces()));
    let seeds = detect_seeds(&cdf, tri, r);
    let partition = cluster_faces(tri, &samples, &seeds, &opts.cluster)?;
    let layout = extract_layout(tri, &partition, &opts.layout)?;
    Ok(Attempt {
        samples,
        partition,
        layout,
        seeds: seeds.len(),
    })
}

/// Runs bake, seed detection, clustering, layout extraction and refinement
/// on `quads` and compares the result with its base complex.
pub fn roundtrip(quads: &QuadMesh, opts: &RoundTripOptions) -> Result<RoundTrip> {
    quads.require_quads()?;
    let bc = build_base_complex(quads, &ComplexOptions::default())?;
    let s_l_in = loop_simplicity(quads, &bc, opts.turning).s_l;
    let split = ChartSplit::new(quads, &bc);
    let tri = isotropic_remesh(quads, opts.target_edge, true)?;

    let mut warnings = Vec::new();
    let (att, densified) = match attempt(&split, &tri, FieldKind::Plain, opts) {
        Ok(a) => (a, false),
        Err(e @ (Error::Layout(_) | Error::NoSeeds)) if opts.densify_fallback => {
            warnings.push(format!("plain layout failed ({e}); densified fields used"));
            (attempt(&split, &tri, FieldKind::densified(1)?, opts)?, true)
        }
        Err(e) => return Err(e),
    };
    warnings.extend(att.layout.warnings.iter().cloned());

    let (truth_nodes, truth_adj) = if densified {
        (4 * bc.n_charts(), subchart_adjacency(&bc))
    } else {
        (bc.n_charts(), bc.adjacency.clone())
    };
    let adjacency_isomorphic = att.layout.n_faces() == truth_nodes
        && same_graph(truth_nodes, &truth_adj, &att.layout.adjacency());

    let collapsed = collapse_to_quads(&att.layout);
    let refined = refine(&collapsed, &tri, &opts.refine)?;
    let out_bc = build_base_complex(&refined.mesh, &ComplexOptions::default())?;
    let s_l_out = loop_simplicity(&refined.mesh, &out_bc, opts.turning).s_l;
    // a densified layout has four faces per chart; count the charts of the
    // refined surface instead
    let n_c_out = if densified {
        out_bc.n_charts()
    } else {
        att.layout.n_faces()
    };

    let report = RoundTripReport {
        n_c_in: bc.n_charts(),
        n_c_out,
        adjacency_isomorphic,
        s_l_in,
        s_l_out,
        layout_faces: att.layout.n_faces(),
        densified,
        remesh_faces: tri.n_faces(),
        seeds: att.seeds,
        clusters: att.partition.n_clusters(),
        merges: att.partition.merges,
        non_quad_faces: collapsed.n_non_quads(),
        subdivision_levels: refined.levels,
        refined_faces: refined.mesh.n_faces(),
        warnings,
    };
    Ok(RoundTrip {
        report,
        remeshed: tri,
        samples: att.samples,
        partition: att.partition,
        layout: att.layout,
        refined,
    })
}

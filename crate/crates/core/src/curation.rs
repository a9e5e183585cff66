//! Corpus curation: component splitting, welding, PCA normalization,
//! duplicate removal and the layout quality gates.
//!
//! Gates run on normalized meshes, where the chart area and side thresholds
//! are meaningful. A verdict keeps a mesh only if every gate passes; the
//! first failing gate is reported as the reason.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Matrix3, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{sample_triangles, Aabb, Bvh, Vec3};
use crate::mesh::complex::{build_base_complex, BaseComplex, ComplexOptions};
use crate::mesh::io::{build_mesh, LoadOptions, RawMesh};
use crate::mesh::loops::assign_ring_lengths;
use crate::mesh::{PolyMesh, QuadMesh};
use crate::metrics::{loop_simplicity, SimplicityReport, TurningMode};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationOptions {
    pub min_simplicity: f64,
    /// Largest allowed quad non-planarity relative to the quad's mean edge.
    pub max_nonplanarity: f64,
    pub max_charts: usize,
    pub min_chart_area: f64,
    pub min_chart_side: f64,
    pub max_boundaries: usize,
    /// Open meshes need at least one interior irregular vertex.
    pub require_singularity: bool,
    /// Weld vertices closer than this (normalized units) before curation;
    /// zero disables welding.
    pub weld: f64,
    pub dedup_samples: usize,
    pub dedup_chamfer: f64,
    pub seed: u64,
    pub turning: TurningMode,
}

impl Default for CurationOptions {
    fn default() -> Self {
        CurationOptions {
            min_simplicity: 0.618,
            max_nonplanarity: 0.5,
            max_charts: 1024,
            min_chart_area: 1.0 / 1024.0,
            min_chart_side: (1.0f64 / 1024.0).sqrt(),
            max_boundaries: 8,
            require_singularity: true,
            weld: 0.0,
            dedup_samples: 2048,
            dedup_chamfer: 1e-3,
            seed: 0,
            turning: TurningMode::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Simplicity,
    Planarity,
    ChartCount,
    ChartArea,
    ChartSide,
    Boundaries,
    TrivialLayout,
}

impl Criterion {
    pub const ALL: [Criterion; 7] = [
        Criterion::Simplicity,
        Criterion::Planarity,
        Criterion::ChartCount,
        Criterion::ChartArea,
        Criterion::ChartSide,
        Criterion::Boundaries,
        Criterion::TrivialLayout,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Simplicity => "simplicity",
            Criterion::Planarity => "planarity",
            Criterion::ChartCount => "chart-count",
            Criterion::ChartArea => "chart-area",
            Criterion::ChartSide => "chart-side",
            Criterion::Boundaries => "boundaries",
            Criterion::TrivialLayout => "trivial-layout",
        }
    }
}

/// Values the gates are evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    #[serde(rename = "S_l")]
    pub s_l: f64,
    #[serde(rename = "N_c")]
    pub n_c: usize,
    pub min_chart_area: f64,
    pub min_chart_side: f64,
    pub max_nonplanarity: f64,
    pub boundaries: usize,
    pub interior_singularities: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub criterion: Criterion,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationVerdict {
    pub keep: bool,
    /// First failing gate.
    pub reason: Option<Criterion>,
    pub gates: Vec<Gate>,
    pub measured: Measured,
}

impl CurationVerdict {
    pub fn failed(&self) -> Vec<Criterion> {
        self.gates
            .iter()
            .filter(|g| !g.pass)
            .map(|g| g.criterion)
            .collect()
    }
}

/// Distance of the fourth vertex to the plane of the first three over the
/// quad's mean edge length. Collinear first vertices fall back to the
/// polygon normal.
pub fn quad_nonplanarity(q: &[Vec3; 4]) -> f64 {
    let mean = (0..4).map(|k| (q[(k + 1) % 4] - q[k]).norm()).sum::<f64>() / 4.0;
    if mean == 0.0 {
        return 0.0;
    }
    let mut n = (q[1] - q[0]).cross(&(q[2] - q[0]));
    if n.norm() <= 1e-12 * mean * mean {
        n = crate::geom::polygon_area_vector(q);
    }
    let l = n.norm();
    if l == 0.0 {
        return 0.0;
    }
    (q[3] - q[0]).dot(&n).abs() / l / mean
}

pub fn max_nonplanarity(mesh: &PolyMesh) -> f64 {
    (0..mesh.n_faces() as u32)
        .filter(|&f| mesh.face_degree(f) == 4)
        .map(|f| {
            let v = mesh.face_vertices(f);
            quad_nonplanarity(&[0, 1, 2, 3].map(|k| mesh.position(v[k])))
        })
        .fold(0.0, f64::max)
}

/// Per chart, total face area and the ring-length sum of each side.
pub fn chart_sizes(mesh: &PolyMesh, bc: &BaseComplex) -> Vec<(f64, [f64; 4])> {
    let rings = assign_ring_lengths(mesh);
    bc.charts
        .iter()
        .map(|c| {
            let area = c.faces.iter().map(|&f| mesh.face_area(f)).sum();
            let sides = [0, 1, 2, 3].map(|s| {
                c.sides[s]
                    .windows(2)
                    .map(|w| {
                        mesh.find_edge(w[0], w[1])
                            .map_or(0.0, |e| rings[e as usize])
                    })
                    .sum()
            });
            (area, sides)
        })
        .collect()
}

pub fn measure(mesh: &QuadMesh, bc: &BaseComplex, report: &SimplicityReport) -> Measured {
    let sizes = chart_sizes(mesh, bc);
    Measured {
        s_l: report.s_l,
        n_c: bc.n_charts(),
        min_chart_area: sizes.iter().map(|s| s.0).fold(f64::INFINITY, f64::min),
        min_chart_side: sizes.iter().flat_map(|s| s.1).fold(f64::INFINITY, f64::min),
        max_nonplanarity: max_nonplanarity(mesh),
        boundaries: mesh.boundary_loops().len(),
        interior_singularities: report.n_i,
    }
}

/// Applies the seven gates in order.
pub fn verdict(m: &Measured, opts: &CurationOptions) -> CurationVerdict {
    let open = m.boundaries > 0;
    let gate = |criterion, pass, value, threshold| Gate {
        criterion,
        pass,
        value,
        threshold,
    };
    let gates = vec![
        gate(
            Criterion::Simplicity,
            m.s_l >= opts.min_simplicity,
            m.s_l,
            opts.min_simplicity,
        ),
        gate(
            Criterion::Planarity,
            m.max_nonplanarity <= opts.max_nonplanarity,
            m.max_nonplanarity,
            opts.max_nonplanarity,
        ),
        gate(
            Criterion::ChartCount,
            m.n_c <= opts.max_charts,
            m.n_c as f64,
            opts.max_charts as f64,
        ),
        gate(
            Criterion::ChartArea,
            m.min_chart_area >= opts.min_chart_area,
            m.min_chart_area,
            opts.min_chart_area,
        ),
        gate(
            Criterion::ChartSide,
            m.min_chart_side >= opts.min_chart_side,
            m.min_chart_side,
            opts.min_chart_side,
        ),
        gate(
            Criterion::Boundaries,
            m.boundaries <= opts.max_boundaries,
            m.boundaries as f64,
            opts.max_boundaries as f64,
        ),
        gate(
            Criterion::TrivialLayout,
            !(opts.require_singularity && open) || m.interior_singularities >= 1,
            m.interior_singularities as f64,
            1.0,
        ),
    ];
    let reason = gates.iter().find(|g| !g.pass).map(|g| g.criterion);
    CurationVerdict {
        keep: reason.is_none(),
        reason,
        gates,
        measured: m.clone(),
    }
}

pub fn filter(
    mesh: &QuadMesh,
    bc: &BaseComplex,
    report: &SimplicityReport,
    opts: &CurationOptions,
) -> CurationVerdict {
    verdict(&measure(mesh, bc, report), opts)
}

/// Builds the complex and simplicity report, then filters.
pub fn evaluate(mesh: &QuadMesh, opts: &CurationOptions) -> Result<CurationVerdict> {
    mesh.require_quads()?;
    let bc = build_base_complex(mesh, &ComplexOptions::default())?;
    let report = loop_simplicity(mesh, &bc, opts.turning);
    Ok(filter(mesh, &bc, &report, opts))
}

/// Connected components by shared edges, each reindexed compactly. Feature
/// tags are carried over.
pub fn split_components(mesh: &PolyMesh) -> Result<Vec<PolyMesh>> {
    let nf = mesh.n_faces();
    let mut comp = vec![u32::MAX; nf];
    let mut groups: Vec<Vec<u32>> = Vec::new();
    for start in 0..nf as u32 {
        if comp[start as usize] != u32::MAX {
            continue;
        }
        let id = groups.len() as u32;
        let mut faces = vec![start];
        comp[start as usize] = id;
        let mut k = 0;
        while k < faces.len() {
            let f = faces[k];
            k += 1;
            for h in mesh.face_halfedges(f) {
                if let Some(t) = mesh.twin(h) {
                    let g = mesh.face_of(t);
                    if comp[g as usize] == u32::MAX {
                        comp[g as usize] = id;
                        faces.push(g);
                    }
                }
            }
        }
        faces.sort_unstable();
        groups.push(faces);
    }
    groups
        .into_iter()
        .map(|faces| {
            let mut map = HashMap::new();
            let mut pos = Vec::new();
            let lists: Vec<Vec<u32>> = faces
                .iter()
                .map(|&f| {
                    mesh.face_vertices(f)
                        .iter()
                        .map(|&v| {
                            *map.entry(v).or_insert_with(|| {
                                pos.push(mesh.position(v));
                                (pos.len() - 1) as u32
                            })
                        })
                        .collect()
                })
                .collect();
            let mut out = PolyMesh::new(pos, lists)?;
            for e in 0..mesh.n_edges() as u32 {
                if !mesh.edge_feature[e as usize] {
                    continue;
                }
                let (a, b) = mesh.edge_vertices(e);
                if let (Some(&a), Some(&b)) = (map.get(&a), map.get(&b)) {
                    if let Some(e2) = out.find_edge(a, b) {
                        out.edge_feature[e2 as usize] = true;
                    }
                }
            }
            Ok(out)
        })
        .collect()
}

/// Merges vertices closer than `tol` (single linkage) and rebuilds the
/// mesh, dropping faces that collapse.
pub fn weld(mesh: &PolyMesh, tol: f64) -> Result<PolyMesh> {
    if tol <= 0.0 {
        return Ok(mesh.clone());
    }
    let pos = mesh.positions();
    let cell = |p: &Vec3| {
        [
            (p.x / tol).floor() as i64,
            (p.y / tol).floor() as i64,
            (p.z / tol).floor() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    for (i, p) in pos.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i as u32);
    }
    let mut parent: Vec<u32> = (0..pos.len() as u32).collect();
    fn find(p: &mut [u32], mut x: u32) -> u32 {
        while p[x as usize] != x {
            p[x as usize] = p[p[x as usize] as usize];
            x = p[x as usize];
        }
        x
    }
    for (i, p) in pos.iter().enumerate() {
        let c = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(list) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                        continue;
                    };
                    for &j in list {
                        if (j as usize) > i && (pos[j as usize] - p).norm() < tol {
                            let (a, b) = (find(&mut parent, i as u32), find(&mut parent, j));
                            // the lower id represents the group
                            parent[a.max(b) as usize] = a.min(b);
                        }
                    }
                }
            }
        }
    }
    let mut compact = vec![u32::MAX; pos.len()];
    let mut positions = Vec::new();
    for v in 0..pos.len() as u32 {
        let r = find(&mut parent, v) as usize;
        if compact[r] == u32::MAX {
            compact[r] = positions.len() as u32;
            positions.push(pos[r]);
        }
        compact[v as usize] = compact[r];
    }
    let raw = RawMesh {
        positions,
        faces: mesh
            .faces()
            .map(|f| f.iter().map(|&v| compact[v as usize]).collect())
            .collect(),
        lines: Vec::new(),
    };
    Ok(build_mesh(raw, LoadOptions::default())?.mesh)
}

fn vertex_weights(mesh: &PolyMesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.n_vertices()];
    for f in 0..mesh.n_faces() as u32 {
        let vs = mesh.face_vertices(f);
        let a = mesh.face_area(f) / vs.len() as f64;
        for &v in vs {
            w[v as usize] += a;
        }
    }
    w
}

/// PCA alignment with the area-weighted vertex covariance (largest axis to
/// x), axis signs chosen so every coordinate has non-negative skewness,
/// then a uniform scale into `[-1, 1]^3` centered on the bounding box. A
/// reflection also reverses face orientation so normals keep their side.
pub fn normalize(mesh: &PolyMesh) -> Result<PolyMesh> {
    let pos = mesh.positions();
    let mut w = vertex_weights(mesh);
    let mut total: f64 = w.iter().sum();
    if total <= 0.0 {
        w = vec![1.0; pos.len()];
        total = pos.len() as f64;
    }
    let mean = pos.iter().zip(&w).map(|(p, &wi)| p * wi).sum::<Vec3>() / total;
    let mut cov = Matrix3::zeros();
    for (p, &wi) in pos.iter().zip(&w) {
        let d = p - mean;
        cov += d * d.transpose() * wi;
    }
    cov /= total;
    if cov.trace() <= 0.0 {
        return Err(Error::InvalidArgument("all vertices coincide".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut axes = order.map(|k| eig.eigenvectors.column(k).into_owned());
    for axis in &mut axes {
        let skew: f64 = pos
            .iter()
            .zip(&w)
            .map(|(p, &wi)| wi * (p - mean).dot(axis).powi(3))
            .sum();
        // tie-break symmetric shapes by the heavier side of the axis
        let first = pos
            .iter()
            .zip(&w)
            .map(|(p, &wi)| wi * (p - mean).dot(axis))
            .sum::<f64>();
        let tol = 1e-12 * cov.trace().powf(1.5) * total;
        if skew < -tol || (skew.abs() <= tol && first < 0.0) {
            *axis = -*axis;
        }
    }
    let rot = Matrix3::from_rows(&[
        axes[0].transpose(),
        axes[1].transpose(),
        axes[2].transpose(),
    ]);
    let local: Vec<Vec3> = pos.iter().map(|p| rot * (p - mean)).collect();
    let bb = Aabb::from_points(local.iter());
    let ext = bb.extent().max();
    if ext <= 0.0 {
        return Err(Error::InvalidArgument("all vertices coincide".into()));
    }
    let c = bb.center();
    let s = 2.0 / ext;
    let out: Vec<Vec3> = local.iter().map(|p| (p - c) * s).collect();
    let faces: Vec<Vec<u32>> = if rot.determinant() < 0.0 {
        // keep the first corner so fan triangulations of non-planar faces match
        mesh.faces()
            .map(|f| {
                std::iter::once(f[0])
                    .chain(f[1..].iter().rev().copied())
                    .collect()
            })
            .collect()
    } else {
        mesh.face_lists()
    };
    let mut m = PolyMesh::new(out, faces)?;
    m.vertex_feature = mesh.vertex_feature.clone();
    for e in 0..mesh.n_edges() as u32 {
        if mesh.edge_feature[e as usize] {
            let (a, b) = mesh.edge_vertices(e);
            if let Some(e2) = m.find_edge(a, b) {
                m.edge_feature[e2 as usize] = true;
            }
        }
    }
    Ok(m)
}

/// Connectivity summary compared before geometry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Fingerprint {
    pub valences: Vec<(usize, usize)>,
    pub faces: usize,
    pub n_i: usize,
    /// Chart dimensions `(min, max)`, sorted.
    pub charts: Vec<(usize, usize)>,
}

pub fn fingerprint(mesh: &PolyMesh, bc: Option<&BaseComplex>) -> Fingerprint {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..mesh.n_vertices() as u32 {
        *hist.entry(mesh.valence(v)).or_default() += 1;
    }
    let n_i = (0..mesh.n_vertices() as u32)
        .filter(|&v| mesh.valence(v) > 0 && !mesh.is_boundary_vertex(v) && mesh.valence(v) != 4)
        .count();
    let mut charts: Vec<(usize, usize)> = bc.map_or_else(Vec::new, |bc| {
        bc.charts
            .iter()
            .map(|c| (c.m.min(c.n), c.m.max(c.n)))
            .collect()
    });
    charts.sort_unstable();
    Fingerprint {
        valences: hist.into_iter().collect(),
        faces: mesh.n_faces(),
        n_i,
        charts,
    }
}

/// Surface samples and a nearest-point structure for chamfer queries.
pub struct ShapeSamples {
    points: Vec<Vec3>,
    bvh: Bvh,
}

impl ShapeSamples {
    pub fn new(mesh: &PolyMesh, count: usize, seed: u64) -> Self {
        let (soup, _) = mesh.triangle_soup();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = sample_triangles(&soup, count, &mut rng)
            .into_iter()
            .map(|s| s.point)
            .collect();
        ShapeSamples {
            points,
            bvh: Bvh::new(soup),
        }
    }

    fn mean_distance_to(&self, other: &ShapeSamples) -> f64 {
        if self.points.is_empty() {
            return 0.0;
        }
        let sum: f64 = self
            .points
            .iter()
            .map(|p| other.bvh.nearest(p).map_or(f64::INFINITY, |n| n.dist()))
            .sum();
        sum / self.points.len() as f64
    }
}

/// Symmetric chamfer distance: the average of the two mean
/// sample-to-surface distances.
pub fn chamfer(a: &ShapeSamples, b: &ShapeSamples) -> f64 {
    0.5 * (a.mean_distance_to(b) + b.mean_distance_to(a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Duplicate<K> {
    pub id: K,
    pub of: K,
    pub chamfer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dedup<K> {
    /// Representatives in ascending id order.
    pub unique: Vec<K>,
    pub duplicates: Vec<Duplicate<K>>,
}

/// Removes meshes that match a lower-id mesh in fingerprint and chamfer
/// distance. Meshes should be normalized first. The result depends only on
/// the ids, not on input order.
pub fn dedup<K: Ord + Clone + Sync>(meshes: &[(K, &PolyMesh)], opts: &CurationOptions) -> Dedup<K> {
    let mut items: Vec<&(K, &PolyMesh)> = meshes.iter().collect();
    items.sort_by(|a, b| a.0.cmp(&b.0));
    let prints: Vec<Fingerprint> = items
        .par_iter()
        .map(|(_, m)| {
            let bc = build_base_complex(m, &ComplexOptions::default()).ok();
            fingerprint(m, bc.as_ref())
        })
        .collect();
    let mut buckets: BTreeMap<&Fingerprint, Vec<usize>> = BTreeMap::new();
    for (i, p) in prints.iter().enumerate() {
        buckets.entry(p).or_default().push(i);
    }
    let needs_samples: Vec<bool> = {
        let mut v = vec![false; items.len()];
        for b in buckets.values().filter(|b| b.len() > 1) {
            for &i in b {
                v[i] = true;
            }
        }
        v
    };
    let samples: Vec<Option<ShapeSamples>> = items
        .par_iter()
        .zip(&needs_samples)
        .map(|((_, m), &need)| need.then(|| ShapeSamples::new(m, opts.dedup_samples, opts.seed)))
        .collect();

    let mut dup_of: Vec<Option<(usize, f64)>> = vec![None; items.len()];
    for bucket in buckets.values() {
        let mut reps: Vec<usize> = Vec::new();
        for &i in bucket {
            let found = reps.iter().find_map(|&r| {
                let d = chamfer(samples[i].as_ref().unwrap(), samples[r].as_ref().unwrap());
                (d < opts.dedup_chamfer).then_some((r, d))
            });
            match found {
                Some(hit) => dup_of[i] = Some(hit),
                None => reps.push(i),
            }
        }
    }
    let mut out = Dedup {
        unique: Vec::new(),
        duplicates: Vec::new(),
    };
    for (i, item) in items.iter().enumerate() {
        match dup_of[i] {
            None => out.unique.push(item.0.clone()),
            Some((r, d)) => out.duplicates.push(Duplicate {
                id: item.0.clone(),
                of: items[r].0.clone(),
                chamfer: d,
            }),
        }
    }
    out
}

/// One manifest line.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestRecord {
    pub path: String,
    pub keep: bool,
    pub reason: Option<String>,
    pub duplicate_of: Option<String>,
    pub verdict: Option<CurationVerdict>,
    pub error: Option<String>,
}

/// Runs weld, component split, normalization, dedup and the gates over
/// named meshes. Component `k` of mesh `name` is reported as `name#k`.
pub fn curate(inputs: &[(String, PolyMesh)], opts: &CurationOptions) -> Vec<ManifestRecord> {
    let parts: Vec<(String, Result<PolyMesh>)> = inputs
        .par_iter()
        .flat_map_iter(|(name, mesh)| {
            let comps = weld(mesh, opts.weld).and_then(|m| split_components(&m));
            match comps {
                Err(e) => vec![(name.clone(), Err(e))],
                Ok(cs) if cs.len() == 1 => vec![(name.clone(), Ok(cs.into_iter().next().unwrap()))],
                Ok(cs) => cs
                    .into_iter()
                    .enumerate()
                    .map(|(k, c)| (format!("{name}#{k}"), Ok(c)))
                    .collect(),
            }
        })
        .map(|(id, m)| {
            let m = m.and_then(|m| {
                m.require_quads()?;
                normalize(&m)
            });
            (id, m)
        })
        .collect();

    let verdicts: Vec<Result<CurationVerdict>> = parts
        .par_iter()
        .map(|(_, m)| {
            m.as_ref()
                .map_err(clone_err)
                .and_then(|m| evaluate(m, opts))
        })
        .collect();
    let ok: Vec<(String, &PolyMesh)> = parts
        .iter()
        .zip(&verdicts)
        .filter_map(|((id, m), v)| match (m, v) {
            (Ok(m), Ok(_)) => Some((id.clone(), m)),
            _ => None,
        })
        .collect();
    let dd = dedup(&ok, opts);
    let dup: HashMap<&String, &String> = dd.duplicates.iter().map(|d| (&d.id, &d.of)).collect();

    let mut records: Vec<ManifestRecord> = parts
        .iter()
        .zip(verdicts)
        .map(|((id, _), v)| match v {
            Err(e) => ManifestRecord {
                path: id.clone(),
                keep: false,
                reason: Some(match e {
                    Error::NotQuad { .. } => "not-quad".into(),
                    _ => "invalid".into(),
                }),
                duplicate_of: None,
                verdict: None,
                error: Some(e.to_string()),
            },
            Ok(v) => {
                let of = dup.get(id).map(|s| (*s).clone());
                let reason = match (&of, v.reason) {
                    (Some(_), _) => Some("duplicate".to_string()),
                    (None, r) => r.map(|c| c.name().to_string()),
                };
                ManifestRecord {
                    path: id.clone(),
                    keep: v.keep && of.is_none(),
                    reason,
                    duplicate_of: of,
                    verdict: Some(v),
                    error: None,
                }
            }
        })
        .collect();
    records.sort_by(|a, b| a.path.cmp(&b.path));
    records
}

fn clone_err(e: &Error) -> Error {
    match e {
        Error::NotQuad { face, degree } => Error::NotQuad {
            face: *face,
            degree: *degree,
        },
        other => Error::InvalidMesh(other.to_string()),
    }
}

/// Histogram as CSV rows `lo,hi,count` over `bins` equal bins of `[lo, hi]`;
/// the last bin is closed.
pub fn histogram_csv(values: &[f64], lo: f64, hi: f64, bins: usize) -> String {
    let mut counts = vec![0usize; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        if v < lo || v > hi || !v.is_finite() {
            continue;
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let mut s = String::from("lo,hi,count\n");
    for (k, c) in counts.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{}\n",
            lo + k as f64 * width,
            lo + (k + 1) as f64 * width,
            c
        ));
    }
    s
}

/// Chart-count histogram over power-of-two bins `[2^k, 2^(k+1))`.
pub fn chart_histogram_csv(counts: &[usize]) -> String {
    let top = counts.iter().copied().max().unwrap_or(1).max(1);
    let bins = (usize::BITS - top.leading_zeros()) as usize;
    let mut hist = vec![0usize; bins];
    for &c in counts.iter().filter(|&&c| c > 0) {
        hist[(usize::BITS - c.leading_zeros() - 1) as usize] += 1;
    }
    let mut s = String::from("lo,hi,count\n");
    for (k, c) in hist.iter().enumerate() {
        s.push_str(&format!(
            "{},{},{}\n",
            1usize << k,
            (1usize << (k + 1)) - 1,
            c
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use nalgebra::Rotation3;

    fn rotated(mesh: &PolyMesh, axis: Vec3, angle: f64, shift: Vec3) -> PolyMesh {
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        mesh.with_positions(
            mesh.positions()
                .iter()
                .map(|p| r * p * 1.7 + shift)
                .collect(),
        )
    }

    /// Vertex sets equal after some per-axis sign flip.
    fn same_up_to_flips(a: &PolyMesh, b: &PolyMesh, tol: f64) -> bool {
        (0..8).any(|mask| {
            let s = Vec3::new(
                if mask & 1 != 0 { -1.0 } else { 1.0 },
                if mask & 2 != 0 { -1.0 } else { 1.0 },
                if mask & 4 != 0 { -1.0 } else { 1.0 },
            );
            a.positions()
                .iter()
                .zip(b.positions())
                .all(|(p, q)| (p.component_mul(&s) - q).norm() < tol)
        })
    }

    #[test]
    fn box_fits_unit_cube() {
        let m = normalize(&corpus::boxed(2, 1, 1)).unwrap();
        let bb = m.bbox();
        assert!((bb.min.x + 1.0).abs() < 1e-12 && (bb.max.x - 1.0).abs() < 1e-12);
        assert!(bb.max.y <= 1.0 + 1e-12 && bb.max.z <= 1.0 + 1e-12);
        assert!((bb.extent().y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_and_renormalization_are_absorbed() {
        let base = corpus::l_bracket(2);
        let n0 = normalize(&base).unwrap();
        let r = rotated(
            &base,
            Vec3::new(0.3, -1.0, 0.7),
            1.1,
            Vec3::new(3.0, -2.0, 5.0),
        );
        let n1 = normalize(&r).unwrap();
        assert!(same_up_to_flips(&n0, &n1, 1e-9));
        let n2 = normalize(&n0).unwrap();
        assert!(same_up_to_flips(&n0, &n2, 1e-9));
        // orientation is kept: the signed volume stays positive
        let vol = |m: &PolyMesh| -> f64 {
            let (t, _) = m.triangulate();
            t.iter()
                .map(|t| {
                    let [a, b, c] = t.map(|v| m.position(v));
                    a.dot(&b.cross(&c))
                })
                .sum()
        };
        assert!(vol(&base) * vol(&n1) > 0.0);
    }

    #[test]
    fn coincident_vertices_fail() {
        let m = corpus::grid_patch(2, 2);
        let flat = m.with_positions(vec![Vec3::new(1.0, 1.0, 1.0); m.n_vertices()]);
        assert!(normalize(&flat).is_err());
    }

    #[test]
    fn nonplanarity_of_a_folded_quad() {
        let q = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
        ];
        assert_eq!(quad_nonplanarity(&q), 0.0);
        let mut f = q;
        f[3].z = 0.6;
        // both edges at the lifted corner lengthen
        let mean = (2.0 + 2.0 * (1.0f64 + 0.36).sqrt()) / 4.0;
        assert!((quad_nonplanarity(&f) - 0.6 / mean).abs() < 1e-12);
    }

    #[test]
    fn cube_is_kept() {
        let m = normalize(&corpus::cube(2)).unwrap();
        let v = evaluate(&m, &CurationOptions::default()).unwrap();
        assert!(v.keep, "{v:?}");
        assert_eq!(v.measured.n_c, 6);
        assert_eq!(v.measured.s_l, 1.0);
        assert_eq!(v.measured.boundaries, 0);
        // every chart is a full face of side 2
        assert!((v.measured.min_chart_area - 4.0).abs() < 1e-9);
        assert!((v.measured.min_chart_side - 2.0).abs() < 1e-9);
    }

    #[test]
    fn open_grid_is_trivial() {
        let m = normalize(&corpus::grid_patch(6, 4)).unwrap();
        let v = evaluate(&m, &CurationOptions::default()).unwrap();
        assert_eq!(v.reason, Some(Criterion::TrivialLayout));
        assert_eq!(v.failed(), vec![Criterion::TrivialLayout]);
    }

    fn measured() -> Measured {
        Measured {
            s_l: 1.0,
            n_c: 6,
            min_chart_area: 1.0,
            min_chart_side: 1.0,
            max_nonplanarity: 0.0,
            boundaries: 0,
            interior_singularities: 0,
        }
    }

    #[test]
    fn thresholds_are_inclusive_where_stated() {
        let o = CurationOptions::default();
        let check = |f: &dyn Fn(&mut Measured), want: Option<Criterion>| {
            let mut m = measured();
            f(&mut m);
            assert_eq!(verdict(&m, &o).reason, want, "{m:?}");
        };
        check(&|m| m.s_l = 0.618, None);
        check(&|m| m.s_l = 0.6179, Some(Criterion::Simplicity));
        check(&|m| m.max_nonplanarity = 0.5, None);
        check(&|m| m.max_nonplanarity = 0.51, Some(Criterion::Planarity));
        check(&|m| m.n_c = 1024, None);
        check(&|m| m.n_c = 1025, Some(Criterion::ChartCount));
        check(&|m| m.min_chart_area = 1.0 / 1024.0, None);
        check(
            &|m| m.min_chart_area = 0.9 / 1024.0,
            Some(Criterion::ChartArea),
        );
        check(&|m| m.min_chart_side = (1.0f64 / 1024.0).sqrt(), None);
        check(&|m| m.min_chart_side = 0.031, Some(Criterion::ChartSide));
        check(&|m| (m.boundaries, m.interior_singularities) = (8, 1), None);
        check(
            &|m| (m.boundaries, m.interior_singularities) = (9, 1),
            Some(Criterion::Boundaries),
        );
        check(&|m| m.boundaries = 1, Some(Criterion::TrivialLayout));
        // closed meshes need no singularity
        check(&|m| m.interior_singularities = 0, None);
        // the first failure in gate order is the reason
        let mut m = measured();
        m.s_l = 0.1;
        m.n_c = 5000;
        let v = verdict(&m, &o);
        assert_eq!(v.reason, Some(Criterion::Simplicity));
        assert_eq!(
            v.failed(),
            vec![Criterion::Simplicity, Criterion::ChartCount]
        );
        assert_eq!(v.gates.len(), 7);
    }

    #[test]
    fn components_are_split_and_welded() {
        let a = corpus::cube(1);
        let b = corpus::grid_patch(2, 2);
        let mut pos = a.positions().to_vec();
        let off = pos.len() as u32;
        pos.extend(b.positions().iter().map(|p| p + Vec3::new(5.0, 0.0, 0.0)));
        let mut faces = a.face_lists();
        faces.extend(
            b.faces()
                .map(|f| f.iter().map(|v| v + off).collect::<Vec<u32>>()),
        );
        let both = PolyMesh::new(pos, faces).unwrap();
        let parts = split_components(&both).unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!((parts[0].n_faces(), parts[1].n_faces()), (6, 4));

        // two quads sharing an edge up to 1e-9
        let pos = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0 + 1e-9, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(2.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0 + 1e-9, 0.0),
        ];
        let loose = PolyMesh::new(pos, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]).unwrap();
        assert_eq!(split_components(&loose).unwrap().len(), 2);
        let welded = weld(&loose, 1e-6).unwrap();
        assert_eq!(welded.n_vertices(), 6);
        assert_eq!(split_components(&welded).unwrap().len(), 1);
    }

    #[test]
    fn duplicates_by_connectivity_and_shape() {
        let o = CurationOptions::default();
        let cube = normalize(&corpus::cube(2)).unwrap();
        let finer = normalize(&corpus::cube(4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        let jittered = cube.with_positions(
            cube.positions()
                .iter()
                .map(|p| {
                    p + Vec3::new(
                        rng.gen_range(-1e-5..1e-5),
                        rng.gen_range(-1e-5..1e-5),
                        rng.gen_range(-1e-5..1e-5),
                    )
                })
                .collect(),
        );
        let stretched = cube.with_positions(
            cube.positions()
                .iter()
                .map(|p| Vec3::new(p.x, p.y, 0.5 * p.z))
                .collect(),
        );
        let items = vec![
            (3, &jittered),
            (0, &cube),
            (1, &finer),
            (2, &cube),
            (4, &stretched),
        ];
        let d = dedup(&items, &o);
        assert_eq!(d.unique, vec![0, 1, 4]);
        let pairs: Vec<(i32, i32)> = d.duplicates.iter().map(|x| (x.id, x.of)).collect();
        assert_eq!(pairs, vec![(2, 0), (3, 0)]);
        assert!(d.duplicates[0].chamfer < 1e-12);
        assert!(d.duplicates[1].chamfer > 0.0 && d.duplicates[1].chamfer < 1e-4);
    }

    #[test]
    fn curate_reports_each_mesh() {
        let inputs = vec![
            ("b_cube".to_string(), corpus::cube(2)),
            ("a_grid".to_string(), corpus::grid_patch(4, 4)),
            ("c_copy".to_string(), corpus::cube(2)),
            ("d_tri".to_string(), corpus::icosphere(1)),
        ];
        let r = curate(&inputs, &CurationOptions::default());
        let got: Vec<(&str, bool, Option<&str>)> = r
            .iter()
            .map(|x| (x.path.as_str(), x.keep, x.reason.as_deref()))
            .collect();
        assert_eq!(
            got,
            vec![
                ("a_grid", false, Some("trivial-layout")),
                ("b_cube", true, None),
                ("c_copy", false, Some("duplicate")),
                ("d_tri", false, Some("not-quad")),
            ]
        );
    }

    #[test]
    fn histograms() {
        let csv = histogram_csv(&[0.0, 0.5, 1.0, 1.0], 0.0, 1.0, 2);
        assert_eq!(csv, "lo,hi,count\n0,0.5,1\n0.5,1,3\n");
        let csv = chart_histogram_csv(&[1, 6, 6, 1024]);
        assert!(csv.starts_with("lo,hi,count\n1,1,1\n2,3,0\n4,7,2\n"));
        assert!(csv.ends_with("1024,2047,1\n"));
    }
}

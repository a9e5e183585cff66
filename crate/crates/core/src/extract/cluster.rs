//! Seed detection and priority region growing of faces into clusters.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fields::FieldSample;
use crate::geom::Vec3;
use crate::mesh::sharp::{detect_sharp_edges, DEFAULT_SHARP_ANGLE};
use crate::mesh::PolyMesh;
use crate::{Error, Result};

/// Ring radius for seed detection on a mesh of `faces` faces: five rings
/// at half a million faces, scaled with the square root of the face count,
/// at least three.
pub fn seed_radius(faces: usize) -> usize {
    ((5.0 * (faces as f64 / 5e5).sqrt()).round() as usize).max(3)
}

/// Faces within `r` edge-adjacency rings of `f`, excluding `f`.
fn rings(mesh: &PolyMesh, f: u32, r: usize) -> Vec<u32> {
    let mut seen = vec![f];
    let mut frontier = vec![f];
    for _ in 0..r {
        let mut next = Vec::new();
        for &g in &frontier {
            for h in mesh.face_halfedges(g) {
                if let Some(t) = mesh.twin(h) {
                    let x = mesh.face_of(t);
                    if !seen.contains(&x) {
                        seen.push(x);
                        next.push(x);
                    }
                }
            }
        }
        frontier = next;
    }
    seen.swap_remove(0);
    seen
}

/// Faces whose value beats every face within `r` rings; equal values are
/// won by the lower face id.
pub fn detect_seeds(cdf: &[f64], mesh: &PolyMesh, r: usize) -> Vec<u32> {
    (0..mesh.n_faces() as u32)
        .into_par_iter()
        .filter(|&f| {
            let c = cdf[f as usize];
            rings(mesh, f, r).iter().all(|&g| {
                let d = cdf[g as usize];
                c > d || (c == d && f < g)
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterOptions {
    /// Faces below this value are walls during the first growth phase.
    pub wall: f64,
    /// Clusters merge when more than this fraction of their boundary face
    /// pairs exceed `merge_value` on both sides.
    pub merge_fraction: f64,
    pub merge_value: f64,
    /// Add the dual-center distance to the growth priority.
    pub use_dual: bool,
    /// Adjacent clusters whose seeds estimate the same centers (within this
    /// fraction of the bounding-box diagonal) are merged.
    pub same_center: f64,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            wall: 0.1,
            merge_fraction: 0.5,
            merge_value: 0.5,
            use_dual: false,
            same_center: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterBoundary {
    pub a: u32,
    pub b: u32,
    /// Face pairs across the shared boundary.
    pub pairs: usize,
    /// Pairs with both values above the merge value.
    pub high: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterPartition {
    pub face_cluster: Vec<u32>,
    /// Representative seed face of each cluster.
    pub seeds: Vec<u32>,
    pub centers: Vec<Vec3>,
    pub dual_centers: Vec<Vec3>,
    pub boundaries: Vec<ClusterBoundary>,
    pub merges: usize,
}

impl ClusterPartition {
    pub fn n_clusters(&self) -> usize {
        self.seeds.len()
    }

    pub fn members(&self, k: u32) -> Vec<u32> {
        (0..self.face_cluster.len() as u32)
            .filter(|&f| self.face_cluster[f as usize] == k)
            .collect()
    }
}

const NONE: u32 = u32::MAX;

struct Grower<'a> {
    mesh: &'a PolyMesh,
    samples: &'a [FieldSample],
    seeds: Vec<u32>,
    sharp: Vec<bool>,
    label: Vec<u32>,
    opts: ClusterOptions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Prio(f64);
impl Eq for Prio {}
impl PartialOrd for Prio {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Prio {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

type Heap = BinaryHeap<Reverse<(Prio, Prio, u32, u32)>>;

impl Grower<'_> {
    fn priority(&self, f: u32, k: u32) -> (f64, f64) {
        let s = &self.samples[self.seeds[k as usize] as usize];
        let x = &self.samples[f as usize];
        let mut p = (x.chart_center() - s.chart_center()).norm();
        if self.opts.use_dual {
            p += (x.dual_center() - s.dual_center()).norm();
        }
        (p, (x.position() - s.position()).norm())
    }

    /// Faces of cluster `k` around each vertex of `f` stay one fan when `f`
    /// joins.
    fn keeps_manifold(&self, f: u32, k: u32) -> bool {
        let m = self.mesh;
        let inside = |g: u32| g == f || self.label[g as usize] == k;
        for &v in m.face_vertices(f) {
            let faces: Vec<u32> = m.vertex_faces(v).filter(|&g| inside(g)).collect();
            let mut parent: Vec<usize> = (0..faces.len()).collect();
            fn find(p: &mut [usize], i: usize) -> usize {
                let mut i = i;
                while p[i] != i {
                    p[i] = p[p[i]];
                    i = p[i];
                }
                i
            }
            for &e in m.vertex_edges(v) {
                let (a, b) = m.edge_faces(e);
                let Some(b) = b else {
                    continue;
                };
                if let (Some(i), Some(j)) = (
                    faces.iter().position(|&x| x == a),
                    faces.iter().position(|&x| x == b),
                ) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri] = rj;
                }
            }
            let roots = (0..faces.len())
                .filter(|&i| find(&mut parent, i) == i)
                .count();
            if roots > 1 {
                return false;
            }
        }
        true
    }

    fn push_around(&self, f: u32, heap: &mut Heap, deferred: &mut Vec<(u32, u32)>, walls: bool) {
        let k = self.label[f as usize];
        for h in self.mesh.face_halfedges(f) {
            let Some(t) = self.mesh.twin(h) else {
                continue;
            };
            let g = self.mesh.face_of(t);
            if self.label[g as usize] != NONE {
                continue;
            }
            if !walls && self.samples[g as usize].cdf < self.opts.wall {
                continue;
            }
            if self.sharp[self.mesh.edge_of(h) as usize] {
                deferred.push((g, k));
                continue;
            }
            let (p, q) = self.priority(g, k);
            heap.push(Reverse((Prio(p), Prio(q), g, k)));
        }
    }

    fn grow(&mut self, heap: &mut Heap, walls: bool, strict: bool) {
        loop {
            let mut deferred = Vec::new();
            while let Some(Reverse((_, _, f, k))) = heap.pop() {
                if self.label[f as usize] != NONE {
                    continue;
                }
                if strict && !self.keeps_manifold(f, k) {
                    continue;
                }
                self.label[f as usize] = k;
                self.push_around(f, heap, &mut deferred, walls);
            }
            // cross sharp edges only when growth would otherwise stall
            deferred.retain(|&(g, _)| self.label[g as usize] == NONE);
            if deferred.is_empty() {
                break;
            }
            for (g, k) in deferred {
                let (p, q) = self.priority(g, k);
                heap.push(Reverse((Prio(p), Prio(q), g, k)));
            }
        }
    }

    fn frontier(&self, walls: bool) -> Heap {
        let mut heap = Heap::new();
        let mut deferred = Vec::new();
        for f in 0..self.mesh.n_faces() as u32 {
            if self.label[f as usize] != NONE {
                self.push_around(f, &mut heap, &mut deferred, walls);
            }
        }
        for (g, k) in deferred {
            let (p, q) = self.priority(g, k);
            heap.push(Reverse((Prio(p), Prio(q), g, k)));
        }
        heap
    }
}

struct UnionFind(Vec<u32>);
impl UnionFind {
    fn find(&mut self, i: u32) -> u32 {
        let mut i = i;
        while self.0[i as usize] != i {
            self.0[i as usize] = self.0[self.0[i as usize] as usize];
            i = self.0[i as usize];
        }
        i
    }
    /// Keeps the smaller root.
    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.0[hi as usize] = lo;
        true
    }
}

fn boundaries(
    mesh: &PolyMesh,
    label: &[u32],
    values: &[f64],
    merge_value: f64,
) -> Vec<ClusterBoundary> {
    let mut map: BTreeMap<(u32, u32), (usize, usize)> = BTreeMap::new();
    for e in 0..mesh.n_edges() as u32 {
        let (f, g) = mesh.edge_faces(e);
        let Some(g) = g else {
            continue;
        };
        let (a, b) = (label[f as usize], label[g as usize]);
        if a == b {
            continue;
        }
        let entry = map.entry((a.min(b), a.max(b))).or_default();
        entry.0 += 1;
        if values[f as usize] > merge_value && values[g as usize] > merge_value {
            entry.1 += 1;
        }
    }
    map.into_iter()
        .map(|((a, b), (pairs, high))| ClusterBoundary { a, b, pairs, high })
        .collect()
}

/// Grows clusters from `seeds` over the baked per-face samples.
///
/// Phase one grows over non-wall faces, keeping each cluster manifold at
/// its vertices and crossing sharp edges only when stalled. Phase two
/// releases the walls. Leftover faces join the neighbouring cluster with
/// the best priority. Phase three merges adjacent clusters whose shared
/// boundary is mostly high-valued, or whose seeds agree on their centers.
pub fn cluster_faces(
    mesh: &PolyMesh,
    samples: &[FieldSample],
    seeds: &[u32],
    opts: &ClusterOptions,
) -> Result<ClusterPartition> {
    if seeds.is_empty() {
        return Err(Error::NoSeeds);
    }
    if samples.len() != mesh.n_faces() {
        return Err(Error::InvalidArgument(
            "one sample per face required".into(),
        ));
    }
    let mut g = Grower {
        mesh,
        samples,
        seeds: seeds.to_vec(),
        sharp: detect_sharp_edges(mesh, DEFAULT_SHARP_ANGLE)
            .into_iter()
            .zip(&mesh.edge_feature)
            .map(|(a, &b)| a || b)
            .collect(),
        label: vec![NONE; mesh.n_faces()],
        opts: *opts,
    };
    for (k, &s) in seeds.iter().enumerate() {
        g.label[s as usize] = k as u32;
    }
    let mut heap = g.frontier(false);
    g.grow(&mut heap, false, true);
    let mut heap = g.frontier(true);
    g.grow(&mut heap, true, true);
    let mut heap = g.frontier(true);
    g.grow(&mut heap, true, false);
    // components without any seed become their own clusters
    while let Some(f0) = (0..mesh.n_faces() as u32).find(|&f| g.label[f as usize] == NONE) {
        let k = g.seeds.len() as u32;
        let best = {
            let mut stack = vec![f0];
            let mut seen = vec![f0];
            let mut mark = vec![false; mesh.n_faces()];
            mark[f0 as usize] = true;
            while let Some(f) = stack.pop() {
                for h in mesh.face_halfedges(f) {
                    if let Some(t) = mesh.twin(h) {
                        let x = mesh.face_of(t);
                        if g.label[x as usize] == NONE && !mark[x as usize] {
                            mark[x as usize] = true;
                            seen.push(x);
                            stack.push(x);
                        }
                    }
                }
            }
            *seen
                .iter()
                .max_by(|a, b| {
                    samples[**a as usize]
                        .cdf
                        .total_cmp(&samples[**b as usize].cdf)
                        .then(b.cmp(a))
                })
                .unwrap()
        };
        g.seeds.push(best);
        g.label[best as usize] = k;
        let mut heap = g.frontier(true);
        g.grow(&mut heap, true, false);
    }
    let (label, seeds) = (g.label, g.seeds);

    // phase three
    let values: Vec<f64> = samples.iter().map(|s| s.cdf).collect();
    let diag = mesh.bbox_diagonal();
    let bounds = boundaries(mesh, &label, &values, opts.merge_value);
    let mut uf = UnionFind((0..seeds.len() as u32).collect());
    let mut merges = 0;
    for b in &bounds {
        let high = b.high as f64 > opts.merge_fraction * b.pairs as f64;
        let (sa, sb) = (
            &samples[seeds[b.a as usize] as usize],
            &samples[seeds[b.b as usize] as usize],
        );
        let mut same = (sa.chart_center() - sb.chart_center()).norm() <= opts.same_center * diag;
        if opts.use_dual {
            same &= (sa.dual_center() - sb.dual_center()).norm() <= opts.same_center * diag;
        }
        if (high || same) && uf.union(b.a, b.b) {
            merges += 1;
        }
    }
    // relabel by root, roots ordered by their seed face
    let mut roots: Vec<u32> = (0..seeds.len() as u32)
        .filter(|&k| uf.find(k) == k)
        .collect();
    roots.sort_by_key(|&k| seeds[k as usize]);
    let mut new_id = vec![NONE; seeds.len()];
    for (i, &r) in roots.iter().enumerate() {
        new_id[r as usize] = i as u32;
    }
    // the representative seed of a merged cluster is its highest member seed
    let mut rep: Vec<u32> = roots.iter().map(|&r| seeds[r as usize]).collect();
    for k in 0..seeds.len() as u32 {
        let r = new_id[uf.find(k) as usize] as usize;
        let s = seeds[k as usize];
        let cur = rep[r];
        if samples[s as usize].cdf > samples[cur as usize].cdf
            || (samples[s as usize].cdf == samples[cur as usize].cdf && s < cur)
        {
            rep[r] = s;
        }
    }
    let face_cluster: Vec<u32> = label.iter().map(|&k| new_id[uf.find(k) as usize]).collect();
    let boundaries = boundaries(mesh, &face_cluster, &values, opts.merge_value);
    Ok(ClusterPartition {
        centers: rep
            .iter()
            .map(|&s| samples[s as usize].chart_center())
            .collect(),
        dual_centers: rep
            .iter()
            .map(|&s| samples[s as usize].dual_center())
            .collect(),
        seeds: rep,
        face_cluster,
        boundaries,
        merges,
    })
}

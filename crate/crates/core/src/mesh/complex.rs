//! Base complex: separatrices, charts and their grid structure.
//!
//! Cuts are the boundary, every edge-loop segment leaving an irregular
//! vertex, and edge-loops made entirely of sharp or tagged edges. Charts are
//! face components across uncut edges. A chart that is not a topological
//! disk gets extra chart-internal edge-loop segments, shortest first, until
//! every chart is a disk; a disk bounded by such cuts is always an `m x n`
//! grid.

use serde::Serialize;

use super::loops::{
    all_edge_loops, assign_ring_lengths, is_regular, trace_edge_loop, vertex_opposite,
};
use super::sharp::{detect_sharp_edges, DEFAULT_SHARP_ANGLE};
use super::{PolyMesh, NONE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IrregularVertex {
    pub vertex: u32,
    pub valence: usize,
    pub boundary: bool,
}

/// Vertices violating the regularity rule (interior valence 4, boundary
/// valence 3), including boundary corners of valence 2.
pub fn irregular_vertices(mesh: &PolyMesh) -> Result<Vec<IrregularVertex>> {
    mesh.require_quads()?;
    Ok((0..mesh.n_vertices() as u32)
        .filter(|&v| mesh.valence(v) > 0 && !is_regular(mesh, v))
        .map(|v| IrregularVertex {
            vertex: v,
            valence: mesh.valence(v),
            boundary: mesh.is_boundary_vertex(v),
        })
        .collect())
}

/// Interior irregular vertex count.
pub fn n_irregular_interior(mesh: &PolyMesh) -> Result<usize> {
    Ok(irregular_vertices(mesh)?
        .iter()
        .filter(|v| !v.boundary)
        .count())
}

/// One grid patch of the base complex.
#[derive(Debug, Clone, Serialize)]
pub struct Chart {
    pub m: usize,
    pub n: usize,
    /// Faces in row-major grid order: cell `(i, j)` is `faces[j * m + i]`.
    pub faces: Vec<u32>,
    /// Per cell, the half-edge on the cell's bottom side pointing along +i.
    pub bottom: Vec<u32>,
    /// Corner vertices at grid points `(0,0)`, `(m,0)`, `(m,n)`, `(0,n)`.
    pub corners: [u32; 4],
    /// Side polylines in counter-clockwise order: bottom `(0,0)->(m,0)`,
    /// right `(m,0)->(m,n)`, top `(m,n)->(0,n)`, left `(0,n)->(0,0)`.
    pub sides: [Vec<u32>; 4],
}

impl Chart {
    pub fn cell(&self, i: usize, j: usize) -> u32 {
        self.faces[j * self.m + i]
    }
    pub fn bottom_he(&self, i: usize, j: usize) -> u32 {
        self.bottom[j * self.m + i]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BaseComplex {
    pub charts: Vec<Chart>,
    pub face_chart: Vec<u32>,
    /// Grid cell `(i, j)` of each face within its chart.
    pub face_cell: Vec<(u32, u32)>,
    pub cut: Vec<bool>,
    /// Edge paths traced from irregular vertices and along features.
    pub separatrices: Vec<Vec<u32>>,
    /// Chart-internal segments added to reach disk topology.
    pub inserted: Vec<Vec<u32>>,
    /// Sorted unique chart pairs `(a <= b)` sharing a cut edge; `a == b`
    /// records a chart glued to itself.
    pub adjacency: Vec<(u32, u32)>,
}

impl BaseComplex {
    pub fn n_charts(&self) -> usize {
        self.charts.len()
    }
}

#[derive(Debug, Clone)]
pub struct ComplexOptions {
    /// Dihedral threshold for sharp edges treated as extra separatrices;
    /// `None` disables detection.
    pub sharp_angle: Option<f64>,
    /// Also treat the mesh's own feature tags as separatrices.
    pub use_feature_tags: bool,
    /// Extra edges to cut along (each extended along its edge-loop).
    pub extra: Vec<u32>,
}

impl Default for ComplexOptions {
    fn default() -> Self {
        ComplexOptions {
            sharp_angle: Some(DEFAULT_SHARP_ANGLE),
            use_feature_tags: true,
            extra: Vec::new(),
        }
    }
}

/// Topology of a chart on the cut surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChartTopology {
    pub euler: i64,
    pub boundaries: i64,
    pub genus: i64,
}

impl ChartTopology {
    /// Zero exactly for disks.
    pub fn defect(&self) -> i64 {
        2 * self.genus + (self.boundaries - 1).abs()
    }
}

struct Dsu(Vec<u32>);
impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n as u32).collect())
    }
    fn find(&mut self, x: u32) -> u32 {
        let mut r = x;
        while self.0[r as usize] != r {
            r = self.0[r as usize];
        }
        let mut y = x;
        while self.0[y as usize] != r {
            let n = self.0[y as usize];
            self.0[y as usize] = r;
            y = n;
        }
        r
    }
    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi as usize] = lo;
        }
    }
}

/// Faces in components across uncut edges, each sorted, ordered by first face.
pub fn face_components(mesh: &PolyMesh, cut: &[bool], faces: &[u32]) -> Vec<Vec<u32>> {
    let mut member = vec![false; mesh.n_faces()];
    for &f in faces {
        member[f as usize] = true;
    }
    let mut seen = vec![false; mesh.n_faces()];
    let mut sorted = faces.to_vec();
    sorted.sort_unstable();
    let mut out = Vec::new();
    for &f0 in &sorted {
        if seen[f0 as usize] {
            continue;
        }
        seen[f0 as usize] = true;
        let mut comp = vec![f0];
        let mut k = 0;
        while k < comp.len() {
            let f = comp[k];
            k += 1;
            for h in mesh.face_halfedges(f) {
                if cut[mesh.edge_of(h) as usize] {
                    continue;
                }
                if let Some(t) = mesh.twin(h) {
                    let g = mesh.face_of(t);
                    if member[g as usize] && !seen[g as usize] {
                        seen[g as usize] = true;
                        comp.push(g);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Euler characteristic, boundary count and genus of a face set viewed as
/// a surface cut open along `cut` edges.
pub fn chart_topology(mesh: &PolyMesh, cut: &[bool], faces: &[u32]) -> ChartTopology {
    let mut member = vec![false; mesh.n_faces()];
    for &f in faces {
        member[f as usize] = true;
    }
    let is_border = |h: u32| -> bool {
        cut[mesh.edge_of(h) as usize]
            || mesh
                .twin(h)
                .is_none_or(|t| !member[mesh.face_of(t) as usize])
    };
    let mut dsu = Dsu::new(mesh.n_halfedges());
    let mut n_edges = 0i64;
    for &f in faces {
        for h in mesh.face_halfedges(f) {
            if is_border(h) {
                n_edges += 1;
                continue;
            }
            let t = mesh.twin(h).unwrap();
            if h < t {
                n_edges += 1;
            }
            // corner at origin(h) in f matches corner at origin(t.next) in g
            dsu.union(h, mesh.next(t));
        }
    }
    let mut roots = std::collections::HashSet::new();
    for &f in faces {
        for h in mesh.face_halfedges(f) {
            roots.insert(dsu.find(h));
        }
    }
    let n_verts = roots.len() as i64;
    let euler = n_verts - n_edges + faces.len() as i64;
    // boundary cycles
    let mut seen = std::collections::HashSet::new();
    let mut boundaries = 0i64;
    for &f in faces {
        for h0 in mesh.face_halfedges(f) {
            if !is_border(h0) || seen.contains(&h0) {
                continue;
            }
            boundaries += 1;
            let mut h = h0;
            while seen.insert(h) {
                let mut g = mesh.next(h);
                let mut guard = 0;
                while !is_border(g) {
                    g = mesh.next(mesh.twin(g).unwrap());
                    guard += 1;
                    if guard > mesh.n_halfedges() {
                        break;
                    }
                }
                h = g;
            }
        }
    }
    let genus = (2 - euler - boundaries) / 2;
    ChartTopology {
        euler,
        boundaries,
        genus,
    }
}

/// Edge path from `v` along `e`, continuing through vertex-opposite edges
/// while `keep_going(vertex)` holds. Never revisits an edge.
fn extend_path(
    mesh: &PolyMesh,
    e: u32,
    v: u32,
    mut keep_going: impl FnMut(u32) -> bool,
) -> Vec<u32> {
    let mut path = vec![e];
    let mut cur = e;
    let mut w = mesh.other_vertex(e, v);
    while keep_going(w) {
        match vertex_opposite(mesh, cur, w) {
            Some(n) if !path.contains(&n) => {
                path.push(n);
                w = mesh.other_vertex(n, w);
                cur = n;
            }
            _ => break,
        }
    }
    path
}

/// Builds the base complex of a pure-quad mesh.
pub fn build_base_complex(mesh: &PolyMesh, opts: &ComplexOptions) -> Result<BaseComplex> {
    mesh.require_quads()?;
    let ne = mesh.n_edges();
    let mut cut: Vec<bool> = (0..ne as u32).map(|e| mesh.is_boundary_edge(e)).collect();
    let irregular: Vec<bool> = (0..mesh.n_vertices() as u32)
        .map(|v| mesh.valence(v) > 0 && !is_regular(mesh, v))
        .collect();

    let mut separatrices: Vec<Vec<u32>> = Vec::new();
    let mut traced = vec![false; ne];
    for v in 0..mesh.n_vertices() as u32 {
        if !irregular[v as usize] {
            continue;
        }
        for &e in mesh.vertex_edges(v) {
            if traced[e as usize] {
                continue;
            }
            let path = extend_path(mesh, e, v, |w| !irregular[w as usize]);
            for &x in &path {
                traced[x as usize] = true;
                cut[x as usize] = true;
            }
            separatrices.push(path);
        }
    }

    // features: an edge-loop whose edges are all sharp or tagged becomes a
    // separatrix; extra edges cut their whole edge-loop. Loops stop only at
    // irregular or boundary vertices, so no cut ends inside a chart.
    let mut feature = vec![false; ne];
    if let Some(angle) = opts.sharp_angle {
        for (f, s) in feature.iter_mut().zip(detect_sharp_edges(mesh, angle)) {
            *f |= s;
        }
    }
    if opts.use_feature_tags {
        for (f, &t) in feature.iter_mut().zip(&mesh.edge_feature) {
            *f |= t;
        }
    }
    let mut loops: Vec<Vec<u32>> = all_edge_loops(mesh)
        .into_iter()
        .map(|l| l.edges)
        .filter(|edges| edges.iter().all(|&e| feature[e as usize]))
        .collect();
    for &e in &opts.extra {
        if (e as usize) < ne {
            loops.push(trace_edge_loop(mesh, e).edges);
        }
    }
    for path in loops {
        if path.iter().all(|&x| cut[x as usize]) {
            continue;
        }
        for &x in &path {
            cut[x as usize] = true;
        }
        separatrices.push(path);
    }

    let ring_len = assign_ring_lengths(mesh);
    let all: Vec<u32> = (0..mesh.n_faces() as u32).collect();
    let mut work = face_components(mesh, &cut, &all);
    let mut done: Vec<Vec<u32>> = Vec::new();
    let mut inserted = Vec::new();
    while let Some(chart) = work.pop() {
        let defect = chart_topology(mesh, &cut, &chart).defect();
        if defect == 0 {
            done.push(chart);
            continue;
        }
        let mut accepted = false;
        for seg in internal_segments(mesh, &cut, &chart, &ring_len) {
            let mut trial = cut.clone();
            for &x in &seg {
                trial[x as usize] = true;
            }
            let parts = face_components(mesh, &trial, &chart);
            let after: i64 = parts
                .iter()
                .map(|p| chart_topology(mesh, &trial, p).defect())
                .sum();
            if after < defect {
                cut = trial;
                inserted.push(seg);
                work.extend(parts);
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(Error::InvalidMesh(format!(
                "chart containing face {} cannot be cut into a disk",
                chart[0]
            )));
        }
    }
    done.sort_unstable_by_key(|c| c[0]);

    let nf = mesh.n_faces();
    let mut face_chart = vec![NONE; nf];
    let mut face_cell = vec![(0, 0); nf];
    let mut charts = Vec::with_capacity(done.len());
    for (ci, faces) in done.iter().enumerate() {
        let chart = grid_chart(mesh, &cut, faces)?;
        for (k, &f) in chart.faces.iter().enumerate() {
            face_chart[f as usize] = ci as u32;
            face_cell[f as usize] = ((k % chart.m) as u32, (k / chart.m) as u32);
        }
        charts.push(chart);
    }
    let mut adjacency: Vec<(u32, u32)> = (0..ne as u32)
        .filter(|&e| cut[e as usize])
        .filter_map(|e| {
            let (f, g) = mesh.edge_faces(e);
            let g = g?;
            let (a, b) = (face_chart[f as usize], face_chart[g as usize]);
            Some((a.min(b), a.max(b)))
        })
        .collect();
    adjacency.sort_unstable();
    adjacency.dedup();
    Ok(BaseComplex {
        charts,
        face_chart,
        face_cell,
        cut,
        separatrices,
        inserted,
        adjacency,
    })
}

/// Maximal edge-loop segments inside a chart: paths of uncut chart edges
/// that stop at vertices touching a cut, or close up. Sorted by ring length,
/// then smallest edge id; lengths are quantized relative to the mean edge
/// so symmetric ties do not depend on the pose.
fn internal_segments(
    mesh: &PolyMesh,
    cut: &[bool],
    chart: &[u32],
    ring_len: &[f64],
) -> Vec<Vec<u32>> {
    let mut member = vec![false; mesh.n_faces()];
    for &f in chart {
        member[f as usize] = true;
    }
    let on_cut = |w: u32| mesh.vertex_edges(w).iter().any(|&x| cut[x as usize]);
    let mut edges: Vec<u32> = chart
        .iter()
        .flat_map(|&f| mesh.face_halfedges(f).map(|h| mesh.edge_of(h)))
        .filter(|&e| !cut[e as usize])
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let mut used = vec![false; mesh.n_edges()];
    let unit = mesh.mean_edge_length().max(f64::MIN_POSITIVE) * 1e-9;
    let mut segs: Vec<(i64, u32, Vec<u32>)> = Vec::new();
    for &e in &edges {
        if used[e as usize] {
            continue;
        }
        let (a, b) = mesh.edge_vertices(e);
        let (fwd, closed) = walk_until(mesh, e, b, &on_cut);
        let mut path = vec![e];
        path.extend(fwd);
        if !closed {
            let (bwd, _) = walk_until(mesh, e, a, &on_cut);
            path.splice(0..0, bwd.into_iter().rev());
        }
        path.retain(|&x| !cut[x as usize]);
        for &x in &path {
            used[x as usize] = true;
        }
        let len: f64 = path.iter().map(|&x| ring_len[x as usize]).sum();
        let key = *path.iter().min().unwrap();
        segs.push(((len / unit).round() as i64, key, path));
    }
    segs.sort_by_key(|s| (s.0, s.1));
    segs.into_iter().map(|s| s.2).collect()
}

/// Vertex-opposite walk from `e` through `w` until `stop(vertex)`. Returns
/// the edges after `e` and whether the walk closed onto `e`.
fn walk_until(mesh: &PolyMesh, e: u32, w: u32, stop: &impl Fn(u32) -> bool) -> (Vec<u32>, bool) {
    let mut out = Vec::new();
    let (mut cur, mut w) = (e, w);
    while !stop(w) {
        match vertex_opposite(mesh, cur, w) {
            Some(n) if n == e => return (out, true),
            Some(n) if !out.contains(&n) => {
                out.push(n);
                w = mesh.other_vertex(n, w);
                cur = n;
            }
            _ => break,
        }
    }
    (out, false)
}

/// Assigns grid coordinates to a disk chart by walking from a corner.
fn grid_chart(mesh: &PolyMesh, cut: &[bool], faces: &[u32]) -> Result<Chart> {
    let is_cut = |h: u32| cut[mesh.edge_of(h) as usize];
    let mut start = None;
    'outer: for &f in faces {
        for h in mesh.face_halfedges(f) {
            if is_cut(h) && is_cut(mesh.prev(h)) {
                start = Some(h);
                break 'outer;
            }
        }
    }
    let bad = |msg: &str| Error::InvalidMesh(format!("chart at face {}: {msg}", faces[0]));
    let start = start.ok_or_else(|| bad("no corner"))?;
    let mut cell: std::collections::HashMap<u32, (i64, i64, u32)> =
        std::collections::HashMap::new();
    cell.insert(mesh.face_of(start), (0, 0, start));
    let mut queue = std::collections::VecDeque::from([mesh.face_of(start)]);
    while let Some(f) = queue.pop_front() {
        let (i, j, hb) = cell[&f];
        let right = mesh.next(hb);
        let top = mesh.next(right);
        let left = mesh.next(top);
        let moves = [(right, 1, 0), (top, 0, 1), (left, -1, 0), (hb, 0, -1)];
        for (side, di, dj) in moves {
            if is_cut(side) {
                continue;
            }
            let t = mesh.twin(side).unwrap();
            let nb = match (di, dj) {
                (1, 0) => mesh.next(t),
                (0, 1) => t,
                (-1, 0) => mesh.prev(t),
                _ => mesh.next(mesh.next(t)),
            };
            let g = mesh.face_of(t);
            let want = (i + di, j + dj, nb);
            match cell.get(&g) {
                None => {
                    cell.insert(g, want);
                    queue.push_back(g);
                }
                Some(&c) if c != want => return Err(bad("not a grid")),
                _ => {}
            }
        }
    }
    if cell.len() != faces.len() {
        return Err(bad("disconnected"));
    }
    let (mi, mj) = cell
        .values()
        .fold((0, 0), |a, c| (a.0.max(c.0), a.1.max(c.1)));
    let lo = cell
        .values()
        .fold((0, 0), |a, c| (a.0.min(c.0), a.1.min(c.1)));
    if lo != (0, 0) {
        return Err(bad("corner is not extremal"));
    }
    let (m, n) = (mi as usize + 1, mj as usize + 1);
    if m * n != faces.len() {
        return Err(bad("cells do not form a rectangle"));
    }
    let mut grid = vec![NONE; m * n];
    let mut bottom = vec![NONE; m * n];
    for (&f, &(i, j, hb)) in &cell {
        let k = j as usize * m + i as usize;
        if grid[k] != NONE {
            return Err(bad("duplicate cell"));
        }
        grid[k] = f;
        bottom[k] = hb;
    }
    let b = |i: usize, j: usize| bottom[j * m + i];
    let mut sides: [Vec<u32>; 4] = Default::default();
    for i in 0..m {
        sides[0].push(mesh.origin(b(i, 0)));
    }
    sides[0].push(mesh.dest(b(m - 1, 0)));
    for j in 0..n {
        sides[1].push(mesh.origin(mesh.next(b(m - 1, j))));
    }
    sides[1].push(mesh.dest(mesh.next(b(m - 1, n - 1))));
    for i in (0..m).rev() {
        sides[2].push(mesh.origin(mesh.next(mesh.next(b(i, n - 1)))));
    }
    sides[2].push(mesh.dest(mesh.next(mesh.next(b(0, n - 1)))));
    for j in (0..n).rev() {
        sides[3].push(mesh.origin(mesh.prev(b(0, j))));
    }
    sides[3].push(mesh.dest(mesh.prev(b(0, 0))));
    let corners = [sides[0][0], sides[1][0], sides[2][0], sides[3][0]];
    Ok(Chart {
        m,
        n,
        faces: grid,
        bottom,
        corners,
        sides,
    })
}

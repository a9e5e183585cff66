//! Indexed half-edge polygon mesh.
//!
//! Connectivity is fixed at construction. Half-edges of face `f` occupy the
//! contiguous range `face_start[f]..face_start[f + 1]`, so `next`/`prev` are
//! index arithmetic and the origin array doubles as the face vertex list.
//! Boundary half-edges have no twin (`NONE`).

pub mod complex;
pub mod io;
pub mod loops;
pub mod sharp;

use std::ops::Range;

use crate::error::{Error, Result};
use crate::geom::{polygon_area_vector, triangle_area, Aabb, Vec3};

pub const NONE: u32 = u32::MAX;

/// Polygon mesh with half-edge adjacency. Used for triangle, quad and mixed
/// meshes alike; see [`QuadMesh`] and [`TriMesh`].
#[derive(Debug, Clone)]
pub struct PolyMesh {
    positions: Vec<Vec3>,
    face_start: Vec<u32>,
    he_vert: Vec<u32>,
    he_face: Vec<u32>,
    he_twin: Vec<u32>,
    he_edge: Vec<u32>,
    edge_he: Vec<u32>,
    vert_out_start: Vec<u32>,
    vert_out: Vec<u32>,
    vert_edge_start: Vec<u32>,
    vert_edge: Vec<u32>,
    /// Per-edge feature tag (sharp crease or user-supplied polyline).
    pub edge_feature: Vec<bool>,
    /// Per-vertex feature tag.
    pub vertex_feature: Vec<bool>,
}

/// A mesh expected to hold only quads. Purity is checked by the operations
/// that need it, not by the type.
pub type QuadMesh = PolyMesh;
/// A mesh expected to hold only triangles.
pub type TriMesh = PolyMesh;

impl PolyMesh {
    /// Builds a mesh from polygon faces, reorienting faces for consistency.
    ///
    /// Fails on out-of-range indices, faces with fewer than three or repeated
    /// vertices, edges shared by more than two faces and non-orientable input.
    pub fn new(positions: Vec<Vec3>, faces: Vec<Vec<u32>>) -> Result<Self> {
        let nv = positions.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.len() < 3 {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} has {} vertices",
                    f.len()
                )));
            }
            for (k, &v) in f.iter().enumerate() {
                if v as usize >= nv {
                    return Err(Error::InvalidMesh(format!(
                        "face {fi} references vertex {v}"
                    )));
                }
                if f[..k].contains(&v) {
                    return Err(Error::InvalidMesh(format!("face {fi} repeats vertex {v}")));
                }
            }
        }
        let faces = orient_faces(faces)?;
        Ok(Self::build(positions, &faces))
    }

    pub fn from_quads(positions: Vec<Vec3>, quads: &[[u32; 4]]) -> Result<Self> {
        Self::new(positions, quads.iter().map(|q| q.to_vec()).collect())
    }

    pub fn from_triangles(positions: Vec<Vec3>, tris: &[[u32; 3]]) -> Result<Self> {
        Self::new(positions, tris.iter().map(|t| t.to_vec()).collect())
    }

    fn build(positions: Vec<Vec3>, faces: &[Vec<u32>]) -> Self {
        let nv = positions.len();
        let mut face_start = Vec::with_capacity(faces.len() + 1);
        let mut he_vert = Vec::new();
        let mut he_face = Vec::new();
        face_start.push(0u32);
        for (fi, f) in faces.iter().enumerate() {
            he_vert.extend_from_slice(f);
            he_face.extend(std::iter::repeat_n(fi as u32, f.len()));
            face_start.push(he_vert.len() as u32);
        }
        let nh = he_vert.len();
        let next_of = |h: usize| -> usize {
            let f = he_face[h] as usize;
            let s = face_start[f] as usize;
            let n = face_start[f + 1] as usize - s;
            s + (h - s + 1) % n
        };
        let mut directed: Vec<(u32, u32, u32)> = (0..nh)
            .map(|h| (he_vert[h], he_vert[next_of(h)], h as u32))
            .collect();
        directed.sort_unstable();
        let mut he_twin = vec![NONE; nh];
        for h in 0..nh {
            let a = he_vert[h];
            let b = he_vert[next_of(h)];
            if let Ok(i) = directed.binary_search_by(|x| (x.0, x.1).cmp(&(b, a))) {
                he_twin[h] = directed[i].2;
            }
        }
        let mut he_edge = vec![NONE; nh];
        let mut edge_he = Vec::new();
        for h in 0..nh {
            if he_edge[h] != NONE {
                continue;
            }
            let e = edge_he.len() as u32;
            edge_he.push(h as u32);
            he_edge[h] = e;
            if he_twin[h] != NONE {
                he_edge[he_twin[h] as usize] = e;
            }
        }
        let (vert_out_start, vert_out) = csr(nv, (0..nh).map(|h| (he_vert[h], h as u32)));
        let ne = edge_he.len();
        let vert_edge_pairs = (0..ne).flat_map(|e| {
            let h = edge_he[e] as usize;
            [(he_vert[h], e as u32), (he_vert[next_of(h)], e as u32)]
        });
        let (vert_edge_start, vert_edge) = csr(nv, vert_edge_pairs);
        PolyMesh {
            positions,
            face_start,
            he_vert,
            he_face,
            he_twin,
            he_edge,
            edge_he,
            vert_out_start,
            vert_out,
            vert_edge_start,
            vert_edge,
            edge_feature: vec![false; ne],
            vertex_feature: vec![false; nv],
        }
    }

    /// Same connectivity and tags, new vertex positions.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Self {
        assert_eq!(positions.len(), self.positions.len());
        let mut m = self.clone();
        m.positions = positions;
        m
    }

    pub fn set_position(&mut self, v: u32, p: Vec3) {
        self.positions[v as usize] = p;
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }
    pub fn n_faces(&self) -> usize {
        self.face_start.len() - 1
    }
    pub fn n_edges(&self) -> usize {
        self.edge_he.len()
    }
    pub fn n_halfedges(&self) -> usize {
        self.he_vert.len()
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }
    pub fn position(&self, v: u32) -> Vec3 {
        self.positions[v as usize]
    }

    pub fn face_vertices(&self, f: u32) -> &[u32] {
        let r = self.face_halfedges(f);
        &self.he_vert[r.start as usize..r.end as usize]
    }
    pub fn face_halfedges(&self, f: u32) -> Range<u32> {
        self.face_start[f as usize]..self.face_start[f as usize + 1]
    }
    pub fn face_degree(&self, f: u32) -> usize {
        (self.face_start[f as usize + 1] - self.face_start[f as usize]) as usize
    }
    /// Iterator over the polygon faces as vertex slices.
    pub fn faces(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.n_faces() as u32).map(move |f| self.face_vertices(f))
    }

    pub fn next(&self, h: u32) -> u32 {
        let f = self.he_face[h as usize] as usize;
        let s = self.face_start[f];
        let n = self.face_start[f + 1] - s;
        s + (h - s + 1) % n
    }
    pub fn prev(&self, h: u32) -> u32 {
        let f = self.he_face[h as usize] as usize;
        let s = self.face_start[f];
        let n = self.face_start[f + 1] - s;
        s + (h - s + n - 1) % n
    }
    pub fn twin(&self, h: u32) -> Option<u32> {
        let t = self.he_twin[h as usize];
        (t != NONE).then_some(t)
    }
    pub fn origin(&self, h: u32) -> u32 {
        self.he_vert[h as usize]
    }
    pub fn dest(&self, h: u32) -> u32 {
        self.he_vert[self.next(h) as usize]
    }
    pub fn face_of(&self, h: u32) -> u32 {
        self.he_face[h as usize]
    }
    pub fn edge_of(&self, h: u32) -> u32 {
        self.he_edge[h as usize]
    }

    /// A half-edge of edge `e`; the interior one if `e` is a boundary edge.
    pub fn edge_halfedge(&self, e: u32) -> u32 {
        self.edge_he[e as usize]
    }
    pub fn edge_vertices(&self, e: u32) -> (u32, u32) {
        let h = self.edge_he[e as usize];
        (self.origin(h), self.dest(h))
    }
    pub fn edge_faces(&self, e: u32) -> (u32, Option<u32>) {
        let h = self.edge_he[e as usize];
        (self.face_of(h), self.twin(h).map(|t| self.face_of(t)))
    }
    pub fn is_boundary_edge(&self, e: u32) -> bool {
        self.he_twin[self.edge_he[e as usize] as usize] == NONE
    }
    pub fn edge_length(&self, e: u32) -> f64 {
        let (a, b) = self.edge_vertices(e);
        (self.position(a) - self.position(b)).norm()
    }
    pub fn edge_midpoint(&self, e: u32) -> Vec3 {
        let (a, b) = self.edge_vertices(e);
        (self.position(a) + self.position(b)) * 0.5
    }
    /// Edge joining `a` and `b`, if any.
    pub fn find_edge(&self, a: u32, b: u32) -> Option<u32> {
        self.vertex_edges(a).iter().copied().find(|&e| {
            let (x, y) = self.edge_vertices(e);
            (x == a && y == b) || (x == b && y == a)
        })
    }

    /// Outgoing half-edges of `v` (one per incident face).
    pub fn outgoing(&self, v: u32) -> &[u32] {
        let s = self.vert_out_start[v as usize] as usize;
        let e = self.vert_out_start[v as usize + 1] as usize;
        &self.vert_out[s..e]
    }
    /// Incident edges of `v`, sorted by id.
    pub fn vertex_edges(&self, v: u32) -> &[u32] {
        let s = self.vert_edge_start[v as usize] as usize;
        let e = self.vert_edge_start[v as usize + 1] as usize;
        &self.vert_edge[s..e]
    }
    pub fn valence(&self, v: u32) -> usize {
        self.vertex_edges(v).len()
    }
    pub fn vertex_faces(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.outgoing(v).iter().map(move |&h| self.face_of(h))
    }
    pub fn is_boundary_vertex(&self, v: u32) -> bool {
        self.vertex_edges(v)
            .iter()
            .any(|&e| self.is_boundary_edge(e))
    }
    /// The other endpoint of `e` seen from `v`.
    pub fn other_vertex(&self, e: u32, v: u32) -> u32 {
        let (a, b) = self.edge_vertices(e);
        if a == v {
            b
        } else {
            a
        }
    }
    /// Faces adjacent to edge `e` (one or two).
    pub fn edge_face_list(&self, e: u32) -> impl Iterator<Item = u32> {
        let (f, g) = self.edge_faces(e);
        std::iter::once(f).chain(g)
    }

    pub fn is_pure_quad(&self) -> bool {
        (0..self.n_faces() as u32).all(|f| self.face_degree(f) == 4)
    }
    pub fn is_pure_tri(&self) -> bool {
        (0..self.n_faces() as u32).all(|f| self.face_degree(f) == 3)
    }
    pub fn n_quads(&self) -> usize {
        (0..self.n_faces() as u32)
            .filter(|&f| self.face_degree(f) == 4)
            .count()
    }
    /// Errors with the first non-quad face.
    pub fn require_quads(&self) -> Result<()> {
        for f in 0..self.n_faces() as u32 {
            let d = self.face_degree(f);
            if d != 4 {
                return Err(Error::NotQuad {
                    face: f as usize,
                    degree: d,
                });
            }
        }
        Ok(())
    }

    /// Face area from the fan triangulation at the first vertex; for quads
    /// this is the fixed `v0-v2` diagonal split.
    pub fn face_area(&self, f: u32) -> f64 {
        let vs = self.face_vertices(f);
        let p0 = self.position(vs[0]);
        (1..vs.len() - 1)
            .map(|k| triangle_area(&p0, &self.position(vs[k]), &self.position(vs[k + 1])))
            .sum()
    }
    pub fn face_center(&self, f: u32) -> Vec3 {
        let vs = self.face_vertices(f);
        vs.iter().map(|&v| self.position(v)).sum::<Vec3>() / vs.len() as f64
    }
    pub fn face_normal(&self, f: u32) -> Vec3 {
        let pts: Vec<Vec3> = self
            .face_vertices(f)
            .iter()
            .map(|&v| self.position(v))
            .collect();
        let n = polygon_area_vector(&pts);
        let l = n.norm();
        if l > 0.0 {
            n / l
        } else {
            Vec3::zeros()
        }
    }
    pub fn total_area(&self) -> f64 {
        (0..self.n_faces() as u32).map(|f| self.face_area(f)).sum()
    }
    /// Area-weighted vertex normal.
    pub fn vertex_normal(&self, v: u32) -> Vec3 {
        let n: Vec3 = self
            .vertex_faces(v)
            .map(|f| self.face_normal(f) * self.face_area(f))
            .sum();
        let l = n.norm();
        if l > 0.0 {
            n / l
        } else {
            Vec3::zeros()
        }
    }

    pub fn bbox(&self) -> Aabb {
        Aabb::from_points(self.positions.iter())
    }
    pub fn bbox_diagonal(&self) -> f64 {
        self.bbox().diagonal()
    }
    pub fn mean_edge_length(&self) -> f64 {
        if self.n_edges() == 0 {
            return 0.0;
        }
        (0..self.n_edges() as u32)
            .map(|e| self.edge_length(e))
            .sum::<f64>()
            / self.n_edges() as f64
    }

    /// Boundary cycles as lists of boundary half-edges, ordered by their
    /// lowest half-edge id.
    pub fn boundary_loops(&self) -> Vec<Vec<u32>> {
        let mut seen = vec![false; self.n_halfedges()];
        let mut loops = Vec::new();
        for h0 in 0..self.n_halfedges() as u32 {
            if self.he_twin[h0 as usize] != NONE || seen[h0 as usize] {
                continue;
            }
            let mut lp = Vec::new();
            let mut h = h0;
            loop {
                if seen[h as usize] {
                    break;
                }
                seen[h as usize] = true;
                lp.push(h);
                h = self.next_boundary(h);
            }
            loops.push(lp);
        }
        loops
    }

    /// The boundary half-edge following boundary half-edge `h` along its hole.
    pub fn next_boundary(&self, h: u32) -> u32 {
        let mut g = self.next(h);
        let mut guard = 0;
        while let Some(t) = self.twin(g) {
            g = self.next(t);
            guard += 1;
            if guard > self.n_halfedges() {
                break;
            }
        }
        g
    }

    /// Number of connected components (face adjacency through edges).
    pub fn n_components(&self) -> usize {
        let mut comp = vec![NONE; self.n_faces()];
        let mut n = 0;
        let mut stack = Vec::new();
        for f0 in 0..self.n_faces() as u32 {
            if comp[f0 as usize] != NONE {
                continue;
            }
            comp[f0 as usize] = n;
            stack.push(f0);
            while let Some(f) = stack.pop() {
                for h in self.face_halfedges(f) {
                    if let Some(t) = self.twin(h) {
                        let g = self.face_of(t);
                        if comp[g as usize] == NONE {
                            comp[g as usize] = n;
                            stack.push(g);
                        }
                    }
                }
            }
            n += 1;
        }
        n as usize
    }

    pub fn euler_characteristic(&self) -> i64 {
        let used = self
            .vert_out_start
            .windows(2)
            .filter(|w| w[1] > w[0])
            .count();
        used as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    /// Total genus summed over components.
    pub fn genus(&self) -> i64 {
        let c = self.n_components() as i64;
        let b = self.boundary_loops().len() as i64;
        (2 * c - self.euler_characteristic() - b) / 2
    }

    /// Fan triangulation; returns triangles and the source face of each.
    pub fn triangulate(&self) -> (Vec<[u32; 3]>, Vec<u32>) {
        let mut tris = Vec::new();
        let mut src = Vec::new();
        for f in 0..self.n_faces() as u32 {
            let vs = self.face_vertices(f);
            for k in 1..vs.len() - 1 {
                tris.push([vs[0], vs[k], vs[k + 1]]);
                src.push(f);
            }
        }
        (tris, src)
    }

    /// Triangle soup of the fan triangulation.
    pub fn triangle_soup(&self) -> (Vec<[Vec3; 3]>, Vec<u32>) {
        let (tris, src) = self.triangulate();
        let soup = tris
            .iter()
            .map(|t| {
                [
                    self.position(t[0]),
                    self.position(t[1]),
                    self.position(t[2]),
                ]
            })
            .collect();
        (soup, src)
    }

    /// Faces as owned vertex lists.
    pub fn face_lists(&self) -> Vec<Vec<u32>> {
        self.faces().map(|f| f.to_vec()).collect()
    }

    /// Marks feature vertices as endpoints of feature edges.
    pub fn tag_feature_vertices(&mut self) {
        for v in self.vertex_feature.iter_mut() {
            *v = false;
        }
        for e in 0..self.n_edges() as u32 {
            if self.edge_feature[e as usize] {
                let (a, b) = self.edge_vertices(e);
                self.vertex_feature[a as usize] = true;
                self.vertex_feature[b as usize] = true;
            }
        }
    }
}

fn csr(n: usize, pairs: impl Iterator<Item = (u32, u32)>) -> (Vec<u32>, Vec<u32>) {
    let mut pairs: Vec<(u32, u32)> = pairs.collect();
    pairs.sort_unstable();
    let mut start = vec![0u32; n + 1];
    for &(k, _) in &pairs {
        start[k as usize + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    (start, pairs.into_iter().map(|(_, v)| v).collect())
}

/// Flips faces so that every interior edge is traversed in opposite
/// directions by its two faces. The first face of each component keeps its
/// orientation.
fn orient_faces(mut faces: Vec<Vec<u32>>) -> Result<Vec<Vec<u32>>> {
    let mut recs: Vec<(u32, u32, u32, bool)> = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..f.len() {
            let a = f[k];
            let b = f[(k + 1) % f.len()];
            recs.push((a.min(b), a.max(b), fi as u32, a < b));
        }
    }
    recs.sort_unstable();
    let mut bad = Vec::new();
    // adjacency: (face, neighbor, same_direction)
    let mut adj: Vec<Vec<(u32, bool)>> = vec![Vec::new(); faces.len()];
    let mut i = 0;
    while i < recs.len() {
        let mut j = i + 1;
        while j < recs.len() && recs[j].0 == recs[i].0 && recs[j].1 == recs[i].1 {
            j += 1;
        }
        match j - i {
            1 => {}
            2 => {
                let (f, g) = (recs[i].2, recs[i + 1].2);
                let same = recs[i].3 == recs[i + 1].3;
                adj[f as usize].push((g, same));
                adj[g as usize].push((f, same));
            }
            _ => bad.push((recs[i].0, recs[i].1)),
        }
        i = j;
    }
    if !bad.is_empty() {
        return Err(Error::NonManifold { edges: bad });
    }
    let mut flip: Vec<Option<bool>> = vec![None; faces.len()];
    let mut stack = Vec::new();
    for f0 in 0..faces.len() {
        if flip[f0].is_some() {
            continue;
        }
        flip[f0] = Some(false);
        stack.push(f0);
        while let Some(f) = stack.pop() {
            let ff = flip[f].unwrap();
            for &(g, same) in &adj[f] {
                let want = ff ^ same;
                match flip[g as usize] {
                    None => {
                        flip[g as usize] = Some(want);
                        stack.push(g as usize);
                    }
                    Some(x) if x != want => return Err(Error::NonOrientable),
                    _ => {}
                }
            }
        }
    }
    for (f, fl) in faces.iter_mut().zip(flip) {
        if fl == Some(true) {
            f[1..].reverse();
        }
    }
    Ok(faces)
}

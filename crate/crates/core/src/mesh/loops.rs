//! Edge-loops, edge-rings and face-loops.
//!
//! The vertex-opposite edge of `e` at `v` is the unique edge incident to `v`
//! sharing no face with `e`; it exists only at regular vertices. The
//! face-opposite edge of `e` in a quad is the edge two steps around it.
//! Both relations give every edge at most two neighbours, so each edge lies
//! on exactly one edge-loop and exactly one edge-ring.

use serde::Serialize;

use super::PolyMesh;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeLoop {
    pub edges: Vec<u32>,
    /// Vertex polyline; `edges.len() + 1` nodes when open, `edges.len()` when
    /// closed (the closing vertex is not repeated).
    pub vertices: Vec<u32>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FaceLoop {
    /// Faces in traversal order; a face crossed twice appears twice.
    pub faces: Vec<u32>,
    /// The edge-ring: `faces.len() + 1` edges when open, `faces.len()` when
    /// closed. Face `i` lies between ring edges `i` and `i + 1`.
    pub edges: Vec<u32>,
    pub closed: bool,
}

/// Interior vertex of valence 4 or boundary vertex of valence 3.
pub fn is_regular(mesh: &PolyMesh, v: u32) -> bool {
    let val = mesh.valence(v);
    if mesh.is_boundary_vertex(v) {
        val == 3
    } else {
        val == 4
    }
}

/// Vertex-opposite edge of `e` at `v`, if `v` is regular and it is unique.
pub fn vertex_opposite(mesh: &PolyMesh, e: u32, v: u32) -> Option<u32> {
    if !is_regular(mesh, v) {
        return None;
    }
    let (f, g) = mesh.edge_faces(e);
    let mut found = None;
    for &e2 in mesh.vertex_edges(v) {
        if e2 == e {
            continue;
        }
        let (f2, g2) = mesh.edge_faces(e2);
        let shares = f2 == f || Some(f2) == g || (g2.is_some() && (g2 == Some(f) || g2 == g));
        if !shares {
            if found.is_some() {
                return None;
            }
            found = Some(e2);
        }
    }
    found
}

/// Walks vertex-opposite edges from `e` through `v`. Returns the visited
/// edges (excluding `e`), the visited vertices after `v`, and whether the
/// walk came back to `e`.
fn walk_edges(mesh: &PolyMesh, e0: u32, v0: u32) -> (Vec<u32>, Vec<u32>, bool) {
    let mut edges = Vec::new();
    let mut verts = Vec::new();
    let (mut cur, mut v) = (e0, v0);
    while let Some(n) = vertex_opposite(mesh, cur, v) {
        if n == e0 {
            return (edges, verts, true);
        }
        if edges.len() > mesh.n_edges() {
            break;
        }
        edges.push(n);
        v = mesh.other_vertex(n, v);
        verts.push(v);
        cur = n;
    }
    (edges, verts, false)
}

/// Maximal edge-loop through `e`.
pub fn trace_edge_loop(mesh: &PolyMesh, e: u32) -> EdgeLoop {
    let (a, b) = mesh.edge_vertices(e);
    let (fwd_e, fwd_v, closed) = walk_edges(mesh, e, b);
    if closed {
        let mut edges = vec![e];
        edges.extend(fwd_e);
        let mut vertices = vec![a, b];
        vertices.extend(fwd_v);
        // the last vertex reached is `a` again
        vertices.pop();
        return EdgeLoop {
            edges,
            vertices,
            closed,
        };
    }
    let (bwd_e, bwd_v, _) = walk_edges(mesh, e, a);
    let mut edges: Vec<u32> = bwd_e.into_iter().rev().collect();
    edges.push(e);
    edges.extend(fwd_e);
    let mut vertices: Vec<u32> = bwd_v.into_iter().rev().collect();
    vertices.push(a);
    vertices.push(b);
    vertices.extend(fwd_v);
    EdgeLoop {
        edges,
        vertices,
        closed: false,
    }
}

/// Crosses quads from half-edge `h` (entering `face(h)`). Returns faces and
/// exit edges, and whether the walk re-entered through `e0`.
fn walk_faces(mesh: &PolyMesh, h0: u32, e0: u32) -> (Vec<u32>, Vec<u32>, bool) {
    let mut faces = Vec::new();
    let mut edges = Vec::new();
    let mut h = h0;
    loop {
        let f = mesh.face_of(h);
        if mesh.face_degree(f) != 4 || faces.len() > 2 * mesh.n_faces() {
            return (faces, edges, false);
        }
        let o = mesh.next(mesh.next(h));
        faces.push(f);
        let eo = mesh.edge_of(o);
        if eo == e0 {
            return (faces, edges, true);
        }
        edges.push(eo);
        match mesh.twin(o) {
            Some(t) => h = t,
            None => return (faces, edges, false),
        }
    }
}

/// Maximal face-loop (and its edge-ring) through `e`. Empty when neither
/// side of `e` is a quad.
pub fn trace_face_loop(mesh: &PolyMesh, e: u32) -> FaceLoop {
    let h = mesh.edge_halfedge(e);
    let (fwd_f, fwd_e, closed) = walk_faces(mesh, h, e);
    if closed {
        let mut edges = vec![e];
        edges.extend(fwd_e);
        return FaceLoop {
            faces: fwd_f,
            edges,
            closed,
        };
    }
    let (bwd_f, bwd_e) = match mesh.twin(h) {
        Some(t) => {
            let (f, e2, _) = walk_faces(mesh, t, e);
            (f, e2)
        }
        None => (Vec::new(), Vec::new()),
    };
    let mut faces: Vec<u32> = bwd_f.into_iter().rev().collect();
    faces.extend(fwd_f);
    let mut edges: Vec<u32> = bwd_e.into_iter().rev().collect();
    edges.push(e);
    edges.extend(fwd_e);
    FaceLoop {
        faces,
        edges,
        closed: false,
    }
}

/// Every edge gets the mean length of its edge-ring. Edges that touch no
/// quad keep their own length.
pub fn assign_ring_lengths(mesh: &PolyMesh) -> Vec<f64> {
    let mut out: Vec<f64> = (0..mesh.n_edges() as u32)
        .map(|e| mesh.edge_length(e))
        .collect();
    for ring in all_face_loops(mesh) {
        let mean =
            ring.edges.iter().map(|&e| mesh.edge_length(e)).sum::<f64>() / ring.edges.len() as f64;
        for &e in &ring.edges {
            out[e as usize] = mean;
        }
    }
    out
}

/// All edge-loops, each listed once, ordered by their smallest edge id.
pub fn all_edge_loops(mesh: &PolyMesh) -> Vec<EdgeLoop> {
    let mut done = vec![false; mesh.n_edges()];
    let mut out = Vec::new();
    for e in 0..mesh.n_edges() as u32 {
        if done[e as usize] {
            continue;
        }
        let l = trace_edge_loop(mesh, e);
        for &x in &l.edges {
            done[x as usize] = true;
        }
        out.push(l);
    }
    out
}

/// All face-loops (one per edge-ring touching a quad), ordered by their
/// smallest ring edge id.
pub fn all_face_loops(mesh: &PolyMesh) -> Vec<FaceLoop> {
    let mut done = vec![false; mesh.n_edges()];
    let mut out = Vec::new();
    for e in 0..mesh.n_edges() as u32 {
        if done[e as usize] {
            continue;
        }
        let l = trace_face_loop(mesh, e);
        for &x in &l.edges {
            done[x as usize] = true;
        }
        if !l.faces.is_empty() {
            out.push(l);
        }
    }
    out
}

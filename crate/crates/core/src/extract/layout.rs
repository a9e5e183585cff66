//! Polygonal layout from a face clustering.
//!
//! Cluster boundaries are traced as closed half-edge loops. Corners are
//! vertices where three clusters meet, where two clusters meet on the mesh
//! boundary, and sharp turns or junctions of feature polylines. Corners
//! closer than the snap distance are merged. Each cluster becomes one
//! polygon whose sides are the boundary pieces between consecutive corners;
//! a cluster with two boundary loops is first cut open along a shortest
//! interior path.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use crate::geom::{angle_between, Vec3};
use crate::mesh::sharp::{detect_sharp_edges, DEFAULT_SHARP_ANGLE};
use crate::mesh::{PolyMesh, TriMesh, NONE};
use crate::{Error, Result};

use super::cluster::ClusterPartition;

#[derive(Debug, Clone, Serialize)]
pub struct LayoutSide {
    /// Start and end corner.
    pub ends: [u32; 2],
    /// Polyline from the start corner to the end corner.
    pub path: Vec<Vec3>,
    /// Face walking the side forward, and the face walking it backward
    /// (`NONE` on the boundary). Equal entries mark a self-glued side.
    pub faces: [u32; 2],
    pub feature: bool,
}

impl LayoutSide {
    pub fn length(&self) -> f64 {
        self.path.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn is_boundary(&self) -> bool {
        self.faces[1] == NONE
    }
}

/// Polygonal layout. Face cycles list `(side, reversed)` in
/// counter-clockwise order.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LayoutMesh {
    pub corner_pos: Vec<Vec3>,
    pub corner_feature: Vec<bool>,
    pub sides: Vec<LayoutSide>,
    pub faces: Vec<Vec<(u32, bool)>>,
    /// Source cluster of each face.
    pub face_cluster: Vec<u32>,
    pub warnings: Vec<String>,
}

impl LayoutMesh {
    /// Layout with straight sides from polygons over corner positions. Sides
    /// are shared by faces using the same corner pair in opposite order.
    pub fn from_polygons(
        corners: Vec<Vec3>,
        polygons: &[Vec<u32>],
        feature: &[bool],
    ) -> Result<Self> {
        let mut layout = LayoutMesh {
            corner_feature: (0..corners.len())
                .map(|i| feature.get(i).copied().unwrap_or(false))
                .collect(),
            corner_pos: corners,
            ..Default::default()
        };
        let mut open: HashMap<(u32, u32), u32> = HashMap::new();
        for (f, poly) in polygons.iter().enumerate() {
            let mut cycle = Vec::new();
            for i in 0..poly.len() {
                let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
                if a as usize >= layout.corner_pos.len()
                    || b as usize >= layout.corner_pos.len()
                    || a == b
                {
                    return Err(Error::InvalidArgument(format!("bad polygon {f}")));
                }
                if let Some(s) = open.remove(&(b, a)) {
                    layout.sides[s as usize].faces[1] = f as u32;
                    cycle.push((s, true));
                } else {
                    let s = layout.sides.len() as u32;
                    layout.sides.push(LayoutSide {
                        ends: [a, b],
                        path: vec![layout.corner_pos[a as usize], layout.corner_pos[b as usize]],
                        faces: [f as u32, NONE],
                        feature: layout.corner_feature[a as usize]
                            && layout.corner_feature[b as usize],
                    });
                    if open.insert((a, b), s).is_some() {
                        return Err(Error::InvalidArgument(format!(
                            "side {a}-{b} used twice in one direction"
                        )));
                    }
                    cycle.push((s, false));
                }
            }
            layout.faces.push(cycle);
            layout.face_cluster.push(f as u32);
        }
        Ok(layout)
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_corners(&self) -> usize {
        self.corner_pos.len()
    }
    pub fn n_sides(&self) -> usize {
        self.sides.len()
    }
    pub fn face_degree(&self, f: usize) -> usize {
        self.faces[f].len()
    }
    pub fn n_non_quads(&self) -> usize {
        self.faces.iter().filter(|c| c.len() != 4).count()
    }

    /// Start corner of an oriented side.
    pub fn start(&self, (s, rev): (u32, bool)) -> u32 {
        self.sides[s as usize].ends[rev as usize]
    }
    pub fn end(&self, (s, rev): (u32, bool)) -> u32 {
        self.sides[s as usize].ends[!rev as usize]
    }

    pub fn face_corners(&self, f: usize) -> Vec<u32> {
        self.faces[f].iter().map(|&os| self.start(os)).collect()
    }

    /// Sorted unique face pairs sharing a side; `(a, a)` for self-glued
    /// faces.
    pub fn adjacency(&self) -> Vec<(u32, u32)> {
        let set: BTreeSet<(u32, u32)> = self
            .sides
            .iter()
            .filter(|s| !s.is_boundary())
            .map(|s| (s.faces[0].min(s.faces[1]), s.faces[0].max(s.faces[1])))
            .collect();
        set.into_iter().collect()
    }

    /// Every face cycle closes and every side is used by the faces it names.
    pub fn validate(&self) -> Result<()> {
        let mut uses = vec![0usize; self.sides.len()];
        for (f, cycle) in self.faces.iter().enumerate() {
            for i in 0..cycle.len() {
                let (a, b) = (cycle[i], cycle[(i + 1) % cycle.len()]);
                if self.end(a) != self.start(b) {
                    return Err(Error::Layout(format!(
                        "face {f} does not close at position {i}"
                    )));
                }
                uses[a.0 as usize] += 1;
                let want = self.sides[a.0 as usize].faces[a.1 as usize];
                if want != f as u32 {
                    return Err(Error::Layout(format!(
                        "side {} does not name face {f}",
                        a.0
                    )));
                }
            }
        }
        for (s, side) in self.sides.iter().enumerate() {
            let expect = if side.is_boundary() { 1 } else { 2 };
            if uses[s] != expect {
                return Err(Error::Layout(format!("side {s} used {} times", uses[s])));
            }
        }
        Ok(())
    }

    /// Corners as vertices, faces as corner polygons.
    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for p in &self.corner_pos {
            writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
        }
        for f in 0..self.n_faces() {
            let ids: Vec<String> = self
                .face_corners(f)
                .iter()
                .map(|c| (c + 1).to_string())
                .collect();
            writeln!(w, "f {}", ids.join(" "))?;
        }
        Ok(())
    }

    pub fn save_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_obj(std::io::BufWriter::new(file))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutOptions {
    /// Feature polyline turn (degrees) above which a vertex is a corner.
    pub corner_turn: f64,
    /// Snap distance in mean edge lengths; same-corner sides shorter than
    /// twice this are dropped.
    pub snap: f64,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        LayoutOptions {
            corner_turn: 45.0,
            snap: 3.0,
        }
    }
}

/// One piece of a face cycle between corner occurrences.
#[derive(Debug, Clone)]
struct Segment {
    from: u32,
    to: u32,
    hes: Vec<u32>,
    neighbor: u32,
    feature: bool,
}

struct Tracer<'a> {
    mesh: &'a TriMesh,
    label: &'a [u32],
}

impl Tracer<'_> {
    fn on_cluster_boundary(&self, h: u32) -> bool {
        match self.mesh.twin(h) {
            None => true,
            Some(t) => {
                self.label[self.mesh.face_of(t) as usize]
                    != self.label[self.mesh.face_of(h) as usize]
            }
        }
    }

    /// Next boundary half-edge of the same cluster after `h`, rotating
    /// around `dest(h)` through the cluster's faces.
    fn next_boundary(&self, h: u32) -> u32 {
        let mut x = self.mesh.next(h);
        for _ in 0..self.mesh.n_halfedges() {
            if self.on_cluster_boundary(x) {
                return x;
            }
            x = self
                .mesh
                .next(self.mesh.twin(x).expect("interior half-edge"));
        }
        unreachable!("boundary rotation does not close")
    }

    fn loops(&self) -> Vec<Vec<Vec<u32>>> {
        let k = self.label.iter().map(|&k| k + 1).max().unwrap_or(0) as usize;
        let mut out = vec![Vec::new(); k];
        let mut seen = vec![false; self.mesh.n_halfedges()];
        for h0 in 0..self.mesh.n_halfedges() as u32 {
            if seen[h0 as usize] || !self.on_cluster_boundary(h0) {
                continue;
            }
            let mut lp = Vec::new();
            let mut h = h0;
            loop {
                seen[h as usize] = true;
                lp.push(h);
                h = self.next_boundary(h);
                if h == h0 || seen[h as usize] {
                    break;
                }
            }
            out[self.label[self.mesh.face_of(h0) as usize] as usize].push(lp);
        }
        out
    }

    fn euler(&self, k: u32) -> i64 {
        let m = self.mesh;
        let (mut verts, mut edges, mut faces) = (HashSet::new(), HashSet::new(), 0i64);
        for f in 0..m.n_faces() as u32 {
            if self.label[f as usize] != k {
                continue;
            }
            faces += 1;
            for h in m.face_halfedges(f) {
                verts.insert(m.origin(h));
                edges.insert(m.edge_of(h));
            }
        }
        verts.len() as i64 - edges.len() as i64 + faces
    }
}

fn feature_corners(mesh: &TriMesh, turn: f64) -> Vec<bool> {
    (0..mesh.n_vertices() as u32)
        .map(|v| {
            let feat: Vec<u32> = mesh
                .vertex_edges(v)
                .iter()
                .copied()
                .filter(|&e| mesh.edge_feature[e as usize] || mesh.is_boundary_edge(e))
                .collect();
            match feat.len() {
                0 => false,
                2 => {
                    let p = mesh.position(v);
                    let a = mesh.position(mesh.other_vertex(feat[0], v));
                    let b = mesh.position(mesh.other_vertex(feat[1], v));
                    angle_between(&(p - a), &(b - p)) > turn.to_radians()
                }
                _ => true,
            }
        })
        .collect()
}

/// Shortest path of interior cluster edges from a vertex of `from` to a
/// vertex of `to`, avoiding other boundary vertices.
fn shortest_cut(
    mesh: &TriMesh,
    label: &[u32],
    k: u32,
    from: &HashSet<u32>,
    to: &HashSet<u32>,
    on_loop: &HashSet<u32>,
) -> Option<Vec<u32>> {
    let n = mesh.n_vertices();
    let mut g: UnGraph<(), f64> = UnGraph::with_capacity(n + 1, 0);
    for _ in 0..=n {
        g.add_node(());
    }
    let root = NodeIndex::new(n);
    for &s in from {
        g.add_edge(root, NodeIndex::new(s as usize), 0.0);
    }
    let end = |v: u32| from.contains(&v) || to.contains(&v);
    for e in 0..mesh.n_edges() as u32 {
        let (f, Some(f2)) = mesh.edge_faces(e) else {
            continue;
        };
        if label[f as usize] != k || label[f2 as usize] != k {
            continue;
        }
        let (a, b) = mesh.edge_vertices(e);
        let ok = (!on_loop.contains(&a) || end(a)) && (!on_loop.contains(&b) || end(b));
        // a cut may not run along or touch the loops except at its ends
        let both_on = on_loop.contains(&a) && on_loop.contains(&b);
        if ok
            && !(both_on
                && !(from.contains(&a) && to.contains(&b) || from.contains(&b) && to.contains(&a)))
        {
            g.add_edge(
                NodeIndex::new(a as usize),
                NodeIndex::new(b as usize),
                mesh.edge_length(e),
            );
        }
    }
    let (_, path) = astar(
        &g,
        root,
        |x| x.index() < n && to.contains(&(x.index() as u32)),
        |e| *e.weight(),
        |_| 0.0,
    )?;
    Some(path[1..].iter().map(|x| x.index() as u32).collect())
}

fn halfedge_from(mesh: &TriMesh, a: u32, b: u32) -> u32 {
    let e = mesh.find_edge(a, b).expect("path edge");
    let h = mesh.edge_halfedge(e);
    if mesh.origin(h) == a {
        h
    } else {
        mesh.twin(h).expect("interior edge")
    }
}

/// Traces cluster boundaries of `partition` on `mesh` into a polygonal
/// layout.
///
/// Fails when a cluster is neither a disk nor an annulus, or when a face
/// would have fewer than three corners.
pub fn extract_layout(
    mesh: &TriMesh,
    partition: &ClusterPartition,
    opts: &LayoutOptions,
) -> Result<LayoutMesh> {
    let label = &partition.face_cluster;
    if label.len() != mesh.n_faces() {
        return Err(Error::InvalidArgument(
            "partition does not match mesh".into(),
        ));
    }
    let n_clusters = partition.n_clusters();
    let tracer = Tracer { mesh, label };
    let loops = tracer.loops();
    let tau = opts.snap * mesh.mean_edge_length();
    let mut warnings = Vec::new();

    let clusters_at: Vec<usize> = (0..mesh.n_vertices() as u32)
        .map(|v| {
            mesh.vertex_faces(v)
                .map(|f| label[f as usize])
                .collect::<BTreeSet<_>>()
                .len()
        })
        .collect();
    let feat = feature_corners(mesh, opts.corner_turn);
    let mut is_corner: Vec<bool> = (0..mesh.n_vertices())
        .map(|v| {
            let on_loop = clusters_at[v] >= 2 || mesh.is_boundary_vertex(v as u32);
            clusters_at[v] >= 3
                || (mesh.is_boundary_vertex(v as u32) && clusters_at[v] >= 2)
                || (feat[v] && on_loop)
        })
        .collect();

    // one closed half-edge cycle per cluster
    let mut cycles: Vec<Vec<u32>> = Vec::with_capacity(n_clusters);
    let mut cut_he: HashSet<u32> = HashSet::new();
    for k in 0..n_clusters as u32 {
        let lps = &loops[k as usize];
        let chi = tracer.euler(k);
        match (lps.len(), chi) {
            (1, 1) => cycles.push(lps[0].clone()),
            (2, 0) => {
                let verts =
                    |l: &Vec<u32>| -> HashSet<u32> { l.iter().map(|&h| mesh.origin(h)).collect() };
                let (v1, v2) = (verts(&lps[0]), verts(&lps[1]));
                let prefer = |s: &HashSet<u32>| -> HashSet<u32> {
                    let c: HashSet<u32> = s
                        .iter()
                        .copied()
                        .filter(|&v| is_corner[v as usize])
                        .collect();
                    if c.is_empty() {
                        s.clone()
                    } else {
                        c
                    }
                };
                let on_loop: HashSet<u32> = v1.union(&v2).copied().collect();
                let path = shortest_cut(mesh, label, k, &prefer(&v1), &prefer(&v2), &on_loop)
                    .ok_or_else(|| {
                        Error::Layout(format!("cluster {k}: no cut between its boundary loops"))
                    })?;
                let (a, b) = (path[0], *path.last().unwrap());
                is_corner[a as usize] = true;
                is_corner[b as usize] = true;
                let fwd: Vec<u32> = path
                    .windows(2)
                    .map(|w| halfedge_from(mesh, w[0], w[1]))
                    .collect();
                let back: Vec<u32> = path
                    .windows(2)
                    .rev()
                    .map(|w| halfedge_from(mesh, w[1], w[0]))
                    .collect();
                cut_he.extend(fwd.iter().chain(&back));
                let rot = |l: &Vec<u32>, v: u32| {
                    let i = l.iter().position(|&h| mesh.origin(h) == v).unwrap();
                    l[i..].iter().chain(&l[..i]).copied().collect::<Vec<u32>>()
                };
                let (l1, l2) = if v1.contains(&a) {
                    (&lps[0], &lps[1])
                } else {
                    (&lps[1], &lps[0])
                };
                let mut cyc = rot(l1, a);
                cyc.extend(&fwd);
                cyc.extend(rot(l2, b));
                cyc.extend(&back);
                cycles.push(cyc);
                warnings.push(format!(
                    "cluster {k} is an annulus; cut open along {} edges",
                    fwd.len()
                ));
            }
            (n, chi) => {
                return Err(Error::Layout(format!(
                    "cluster {k} is not a disk (euler characteristic {chi}, {n} boundary loops)"
                )))
            }
        }
    }

    // snap nearby corners into groups
    let corners: Vec<u32> = (0..mesh.n_vertices() as u32)
        .filter(|&v| is_corner[v as usize])
        .collect();
    let mut parent: Vec<usize> = (0..corners.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..corners.len() {
        for j in i + 1..corners.len() {
            if (mesh.position(corners[i]) - mesh.position(corners[j])).norm() < tau {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut rep: HashMap<usize, u32> = HashMap::new();
    for (i, &c) in corners.iter().enumerate() {
        let r = find(&mut parent, i);
        let cur = rep.entry(r).or_insert(c);
        if clusters_at[c as usize] > clusters_at[*cur as usize] {
            *cur = c;
        }
    }
    let group: HashMap<u32, u32> = corners
        .iter()
        .enumerate()
        .map(|(i, &c)| (c, rep[&find(&mut parent, i)]))
        .collect();

    let neighbor = |k: u32, h: u32| -> u32 {
        if cut_he.contains(&h) {
            return k;
        }
        match mesh.twin(h) {
            None => NONE,
            Some(t) => label[mesh.face_of(t) as usize],
        }
    };
    let seg_len =
        |hes: &[u32]| -> f64 { hes.iter().map(|&h| mesh.edge_length(mesh.edge_of(h))).sum() };

    // split each cycle at corner occurrences
    let mut segments: Vec<Vec<Segment>> = Vec::with_capacity(n_clusters);
    for (k, cyc) in cycles.iter().enumerate() {
        let k = k as u32;
        let occ: Vec<usize> = (0..cyc.len())
            .filter(|&i| group.contains_key(&mesh.origin(cyc[i])))
            .collect();
        if occ.is_empty() {
            return Err(Error::Layout(format!("cluster {k} has no corners")));
        }
        let mut segs: Vec<Segment> = Vec::new();
        for (oi, &i) in occ.iter().enumerate() {
            let j = occ[(oi + 1) % occ.len()];
            let len = if j > i { j - i } else { cyc.len() - i + j };
            let hes: Vec<u32> = (0..len).map(|t| cyc[(i + t) % cyc.len()]).collect();
            segs.push(Segment {
                from: group[&mesh.origin(cyc[i])],
                to: group[&mesh.origin(cyc[j])],
                hes,
                neighbor: NONE,
                feature: false,
            });
        }
        // drop short pieces that start and end at the same snapped corner
        loop {
            let short = (0..segs.len()).find(|&i| {
                segs.len() > 1 && segs[i].from == segs[i].to && seg_len(&segs[i].hes) < 2.0 * tau
            });
            let Some(i) = short else {
                break;
            };
            let s = segs.remove(i);
            let next = i % segs.len();
            let mut hes = s.hes;
            hes.extend(&segs[next].hes);
            segs[next].hes = hes;
            segs[next].from = s.from;
        }
        for s in &mut segs {
            let mut votes: HashMap<u32, usize> = HashMap::new();
            for &h in &s.hes {
                *votes.entry(neighbor(k, h)).or_default() += 1;
            }
            s.neighbor = votes
                .into_iter()
                .max_by_key(|&(n, c)| (c, Reverse(n)))
                .map(|(n, _)| n)
                .unwrap();
            let nf = s
                .hes
                .iter()
                .filter(|&&h| {
                    let e = mesh.edge_of(h);
                    mesh.edge_feature[e as usize] || mesh.is_boundary_edge(e)
                })
                .count();
            s.feature = 2 * nf > s.hes.len();
        }
        if segs.len() < 3 {
            return Err(Error::Layout(format!(
                "cluster {k} has only {} corners",
                segs.len()
            )));
        }
        segments.push(segs);
    }

    // corner ids in order of representative vertex
    let mut used: Vec<u32> = segments.iter().flatten().map(|s| s.from).collect();
    used.sort_unstable();
    used.dedup();
    let corner_id: HashMap<u32, u32> = used
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    let mut layout = LayoutMesh {
        corner_pos: used.iter().map(|&v| mesh.position(v)).collect(),
        corner_feature: used.iter().map(|&v| feat[v as usize]).collect(),
        face_cluster: (0..n_clusters as u32).collect(),
        faces: vec![Vec::new(); n_clusters],
        ..Default::default()
    };

    let path_of = |s: &Segment| -> Vec<Vec3> {
        let mut p: Vec<Vec3> = s
            .hes
            .iter()
            .map(|&h| mesh.position(mesh.origin(h)))
            .collect();
        p.push(mesh.position(mesh.dest(*s.hes.last().unwrap())));
        p[0] = mesh.position(s.from);
        *p.last_mut().unwrap() = mesh.position(s.to);
        p
    };
    let midpoint = |s: &Segment| -> Vec3 { mesh.position(mesh.dest(s.hes[s.hes.len() / 2])) };

    // pair each segment with its opposite
    let mut side_of: HashMap<(u32, usize), (u32, bool)> = HashMap::new();
    for k in 0..n_clusters as u32 {
        for (i, s) in segments[k as usize].iter().enumerate() {
            if side_of.contains_key(&(k, i)) {
                continue;
            }
            let sid = layout.sides.len() as u32;
            let mut faces = [k, NONE];
            if s.neighbor != NONE {
                let mid = midpoint(s);
                let best = segments[s.neighbor as usize]
                    .iter()
                    .enumerate()
                    .filter(|&(j, t)| {
                        !(s.neighbor == k && j == i)
                            && !side_of.contains_key(&(s.neighbor, j))
                            && t.neighbor == k
                            && t.from == s.to
                            && t.to == s.from
                    })
                    .min_by(|a, b| {
                        (midpoint(a.1) - mid)
                            .norm()
                            .total_cmp(&(midpoint(b.1) - mid).norm())
                    })
                    .map(|(j, _)| j);
                match best {
                    Some(j) => {
                        faces[1] = s.neighbor;
                        side_of.insert((s.neighbor, j), (sid, true));
                    }
                    None => warnings.push(format!(
                        "side of cluster {k} toward cluster {} is unmatched",
                        s.neighbor
                    )),
                }
            }
            side_of.insert((k, i), (sid, false));
            layout.sides.push(LayoutSide {
                ends: [corner_id[&s.from], corner_id[&s.to]],
                path: path_of(s),
                faces,
                feature: s.feature,
            });
        }
    }
    for k in 0..n_clusters as u32 {
        layout.faces[k as usize] = (0..segments[k as usize].len())
            .map(|i| side_of[&(k, i)])
            .collect();
    }
    layout.warnings = warnings;
    layout.validate()?;
    Ok(layout)
}

/// Collapses shortest sides between two non-quad faces until none is left.
///
/// A side is collapsible when both faces differ, have at least five sides,
/// its corners differ and share no other face, and it does not join two
/// feature corners along a non-feature side. The surviving corner is the
/// feature one, else the one with more sides, else the lower id.
pub fn collapse_to_quads(layout: &LayoutMesh) -> LayoutMesh {
    let mut out = layout.clone();
    loop {
        let corner_faces = |l: &LayoutMesh| -> Vec<BTreeSet<u32>> {
            let mut cf = vec![BTreeSet::new(); l.n_corners()];
            for f in 0..l.n_faces() {
                for c in l.face_corners(f) {
                    cf[c as usize].insert(f as u32);
                }
            }
            cf
        };
        let cf = corner_faces(&out);
        let mut valence = vec![0usize; out.n_corners()];
        for s in &out.sides {
            valence[s.ends[0] as usize] += 1;
            valence[s.ends[1] as usize] += 1;
        }
        let mut best: Option<(f64, usize)> = None;
        for (i, s) in out.sides.iter().enumerate() {
            let [a, b] = s.faces;
            if b == NONE
                || a == b
                || out.faces[a as usize].len() < 5
                || out.faces[b as usize].len() < 5
            {
                continue;
            }
            let [u, v] = s.ends;
            if u == v {
                continue;
            }
            if !s.feature && out.corner_feature[u as usize] && out.corner_feature[v as usize] {
                continue;
            }
            let shared: BTreeSet<u32> = cf[u as usize]
                .intersection(&cf[v as usize])
                .copied()
                .collect();
            if shared.iter().any(|&f| f != a && f != b) {
                continue;
            }
            // corners must not be joined by another side
            if out
                .sides
                .iter()
                .enumerate()
                .any(|(j, t)| j != i && (t.ends == [u, v] || t.ends == [v, u]))
            {
                continue;
            }
            let len = s.length();
            if best.is_none_or(|(l, _)| len < l) {
                best = Some((len, i));
            }
        }
        let Some((_, i)) = best else {
            break;
        };
        let s = out.sides[i].clone();
        let [u, v] = s.ends;
        let keep_u = match (
            out.corner_feature[u as usize],
            out.corner_feature[v as usize],
        ) {
            (true, false) => true,
            (false, true) => false,
            _ => (valence[u as usize], Reverse(u)) >= (valence[v as usize], Reverse(v)),
        };
        let (keep, gone) = if keep_u { (u, v) } else { (v, u) };
        // path from the removed corner to the kept one
        let bridge: Vec<Vec3> = if keep_u {
            s.path.iter().rev().copied().collect()
        } else {
            s.path.clone()
        };
        for t in out.sides.iter_mut() {
            if t.ends[0] == gone {
                t.ends[0] = keep;
                let mut p: Vec<Vec3> = bridge.iter().rev().copied().collect();
                p.extend(&t.path[1..]);
                t.path = p;
            }
            if t.ends[1] == gone {
                t.ends[1] = keep;
                t.path.pop();
                t.path.extend(&bridge);
            }
        }
        for cycle in out.faces.iter_mut() {
            cycle.retain(|&(x, _)| x as usize != i);
        }
        out.sides.remove(i);
        for cycle in out.faces.iter_mut() {
            for os in cycle.iter_mut() {
                if os.0 as usize > i {
                    os.0 -= 1;
                }
            }
        }
    }
    // drop corners no longer used
    let mut used = vec![false; out.n_corners()];
    for s in &out.sides {
        used[s.ends[0] as usize] = true;
        used[s.ends[1] as usize] = true;
    }
    let remap: Vec<u32> = used
        .iter()
        .scan(0u32, |n, &u| {
            let id = *n;
            if u {
                *n += 1;
            }
            Some(if u { id } else { NONE })
        })
        .collect();
    out.corner_pos = out
        .corner_pos
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(p, _)| *p)
        .collect();
    out.corner_feature = out
        .corner_feature
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(p, _)| *p)
        .collect();
    for s in out.sides.iter_mut() {
        s.ends = [remap[s.ends[0] as usize], remap[s.ends[1] as usize]];
    }
    out
}

/// Layout of a quad mesh's own base complex, one face per chart.
pub fn layout_of_complex(
    mesh: &PolyMesh,
    bc: &crate::mesh::complex::BaseComplex,
) -> Result<LayoutMesh> {
    let mut corners: Vec<u32> = bc.charts.iter().flat_map(|c| c.corners).collect();
    corners.sort_unstable();
    corners.dedup();
    let id: HashMap<u32, u32> = corners
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    let mut layout = LayoutMesh {
        corner_pos: corners.iter().map(|&v| mesh.position(v)).collect(),
        corner_feature: corners
            .iter()
            .map(|&v| mesh.vertex_feature[v as usize])
            .collect(),
        face_cluster: (0..bc.n_charts() as u32).collect(),
        ..Default::default()
    };
    let sharp = detect_sharp_edges(mesh, DEFAULT_SHARP_ANGLE);
    let mut open: HashMap<Vec<u32>, u32> = HashMap::new();
    for (k, chart) in bc.charts.iter().enumerate() {
        let mut cycle = Vec::new();
        for s in 0..4 {
            let poly = &chart.sides[s];
            let rev: Vec<u32> = poly.iter().rev().copied().collect();
            if let Some(sid) = open.remove(&rev) {
                layout.sides[sid as usize].faces[1] = k as u32;
                cycle.push((sid, true));
                continue;
            }
            let sid = layout.sides.len() as u32;
            let feature = poly.windows(2).all(|w| {
                mesh.find_edge(w[0], w[1]).is_some_and(|e| {
                    sharp[e as usize] || mesh.edge_feature[e as usize] || mesh.is_boundary_edge(e)
                })
            });
            layout.sides.push(LayoutSide {
                ends: [id[&poly[0]], id[poly.last().unwrap()]],
                path: poly.iter().map(|&v| mesh.position(v)).collect(),
                faces: [k as u32, NONE],
                feature,
            });
            open.insert(poly.clone(), sid);
            cycle.push((sid, false));
        }
        layout.faces.push(cycle);
    }
    layout.validate()?;
    Ok(layout)
}

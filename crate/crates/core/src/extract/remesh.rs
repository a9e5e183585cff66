//! Isotropic remeshing with feature preservation.
//!
//! Split, collapse, flip and tangential relaxation passes on a mutable
//! triangle soup. Boundary edges are always features; sharp edges are
//! features when requested. Feature edges are never flipped, collapse only
//! along their own polyline, and their vertices relax along the original
//! feature curve. Corners (feature valence other than two, or a turn of
//! more than [`CORNER_TURN`] degrees) never move.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::geom::{closest_point_on_segment, triangle_normal, Bvh, Vec3};
use crate::mesh::sharp::{detect_sharp_edges, DEFAULT_SHARP_ANGLE};
use crate::mesh::{PolyMesh, TriMesh};
use crate::{Error, Result};

/// Feature polylines turning by more than this many degrees at a vertex
/// pin it as a corner.
pub const CORNER_TURN: f64 = 45.0;

const ITERATIONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Free,
    /// On feature curve `id`.
    Line(u32),
    Corner,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

struct Remesher {
    pos: Vec<Vec3>,
    class: Vec<Class>,
    tris: Vec<[u32; 3]>,
    alive: Vec<bool>,
    vt: Vec<Vec<u32>>,
    /// Feature edge -> curve id.
    feat: HashMap<(u32, u32), u32>,
    reference: Bvh,
    /// Segments of each original feature curve.
    curves: Vec<Vec<[Vec3; 2]>>,
    high: f64,
    low: f64,
}

impl Remesher {
    fn new(mesh: &PolyMesh, preserve_sharp: bool) -> Self {
        let (tris, _) = mesh.triangulate();
        let pos = mesh.positions().to_vec();
        let sharp = if preserve_sharp {
            detect_sharp_edges(mesh, DEFAULT_SHARP_ANGLE)
        } else {
            vec![false; mesh.n_edges()]
        };
        let is_feat = |e: u32| {
            sharp[e as usize]
                || mesh.is_boundary_edge(e)
                || (preserve_sharp && mesh.edge_feature[e as usize])
        };
        let feat_edges: Vec<(u32, u32)> = (0..mesh.n_edges() as u32)
            .filter(|&e| is_feat(e))
            .map(|e| mesh.edge_vertices(e))
            .collect();
        let mut fdeg = vec![0usize; pos.len()];
        let mut fnbr: Vec<Vec<u32>> = vec![Vec::new(); pos.len()];
        for &(a, b) in &feat_edges {
            fdeg[a as usize] += 1;
            fdeg[b as usize] += 1;
            fnbr[a as usize].push(b);
            fnbr[b as usize].push(a);
        }
        let corner: Vec<bool> = (0..pos.len())
            .map(|v| match fdeg[v] {
                0 => false,
                2 => {
                    let p = pos[v];
                    let (a, b) = (pos[fnbr[v][0] as usize], pos[fnbr[v][1] as usize]);
                    let turn = 180.0 - crate::geom::angle_between(&(a - p), &(b - p)).to_degrees();
                    turn > CORNER_TURN
                }
                _ => true,
            })
            .collect();
        // curves: feature edges joined through non-corner vertices
        let mut feat = HashMap::new();
        let mut curves: Vec<Vec<[Vec3; 2]>> = Vec::new();
        let mut sorted = feat_edges.clone();
        sorted.sort_unstable();
        for &(a, b) in &sorted {
            if feat.contains_key(&key(a, b)) {
                continue;
            }
            let id = curves.len() as u32;
            let mut segs = Vec::new();
            let mut stack = vec![(a, b)];
            while let Some((x, y)) = stack.pop() {
                if feat.contains_key(&key(x, y)) {
                    continue;
                }
                feat.insert(key(x, y), id);
                segs.push([pos[x as usize], pos[y as usize]]);
                for v in [x, y] {
                    if corner[v as usize] {
                        continue;
                    }
                    for &w in &fnbr[v as usize] {
                        if !feat.contains_key(&key(v, w)) {
                            stack.push((v, w));
                        }
                    }
                }
            }
            curves.push(segs);
        }
        let class = (0..pos.len())
            .map(|v| {
                if corner[v] {
                    Class::Corner
                } else if fdeg[v] == 2 {
                    Class::Line(feat[&key(v as u32, fnbr[v][0])])
                } else {
                    Class::Free
                }
            })
            .collect();
        let mut vt = vec![Vec::new(); pos.len()];
        for (t, tri) in tris.iter().enumerate() {
            for &v in tri {
                vt[v as usize].push(t as u32);
            }
        }
        let soup = tris.iter().map(|t| t.map(|v| pos[v as usize])).collect();
        Remesher {
            alive: vec![true; tris.len()],
            pos,
            class,
            tris,
            vt,
            feat,
            reference: Bvh::new(soup),
            curves,
            high: 0.0,
            low: 0.0,
        }
    }

    fn edges(&self) -> BTreeSet<(u32, u32)> {
        let mut s = BTreeSet::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if self.alive[t] {
                for k in 0..3 {
                    s.insert(key(tri[k], tri[(k + 1) % 3]));
                }
            }
        }
        s
    }

    fn edge_tris(&self, a: u32, b: u32) -> Vec<u32> {
        self.vt[a as usize]
            .iter()
            .copied()
            .filter(|&t| self.tris[t as usize].contains(&b))
            .collect()
    }

    fn neighbours(&self, v: u32) -> Vec<u32> {
        let mut n: Vec<u32> = self.vt[v as usize]
            .iter()
            .flat_map(|&t| self.tris[t as usize])
            .filter(|&x| x != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn len(&self, a: u32, b: u32) -> f64 {
        (self.pos[a as usize] - self.pos[b as usize]).norm()
    }

    fn third(&self, t: u32, a: u32, b: u32) -> u32 {
        *self.tris[t as usize]
            .iter()
            .find(|&&x| x != a && x != b)
            .unwrap()
    }

    fn normal(&self, t: &[u32; 3]) -> Vec3 {
        triangle_normal(
            &self.pos[t[0] as usize],
            &self.pos[t[1] as usize],
            &self.pos[t[2] as usize],
        )
    }

    fn vertex_normal(&self, v: u32) -> Vec3 {
        let n: Vec3 = self.vt[v as usize]
            .iter()
            .map(|&t| {
                let [a, b, c] = self.tris[t as usize].map(|x| self.pos[x as usize]);
                (b - a).cross(&(c - a))
            })
            .sum();
        n.try_normalize(0.0).unwrap_or_else(Vec3::zeros)
    }

    fn split(&mut self, a: u32, b: u32) {
        let m = self.pos.len() as u32;
        self.pos
            .push((self.pos[a as usize] + self.pos[b as usize]) * 0.5);
        let curve = self.feat.remove(&key(a, b));
        self.class.push(curve.map_or(Class::Free, Class::Line));
        if let Some(c) = curve {
            self.feat.insert(key(a, m), c);
            self.feat.insert(key(m, b), c);
        }
        self.vt.push(Vec::new());
        for t in self.edge_tris(a, b) {
            let tri = self.tris[t as usize];
            let k = (0..3)
                .find(|&k| key(tri[k], tri[(k + 1) % 3]) == key(a, b))
                .unwrap();
            let (u, v, w) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
            self.tris[t as usize] = [u, m, w];
            let nt = self.tris.len() as u32;
            self.tris.push([m, v, w]);
            self.alive.push(true);
            self.vt[v as usize].retain(|&x| x != t);
            self.vt[v as usize].push(nt);
            self.vt[w as usize].push(nt);
            self.vt[m as usize].extend([t, nt]);
        }
    }

    fn can_collapse(&self, a: u32, b: u32) -> bool {
        let feature = self.feat.contains_key(&key(a, b));
        match self.class[a as usize] {
            Class::Corner => return false,
            Class::Line(c) => {
                if self.feat.get(&key(a, b)) != Some(&c) {
                    return false;
                }
            }
            Class::Free => {
                if feature {
                    return false;
                }
            }
        }
        let et = self.edge_tris(a, b);
        let opp: BTreeSet<u32> = et.iter().map(|&t| self.third(t, a, b)).collect();
        let na = self.neighbours(a);
        let nb = self.neighbours(b);
        let common: BTreeSet<u32> = na
            .iter()
            .copied()
            .filter(|x| nb.binary_search(x).is_ok())
            .collect();
        if common != opp {
            return false;
        }
        // an interior edge between two boundary-ish vertices would pinch
        if et.len() == 2 && self.is_boundary_vertex(a) && self.is_boundary_vertex(b) && !feature {
            return false;
        }
        let pb = self.pos[b as usize];
        if na
            .iter()
            .any(|&x| x != b && (self.pos[x as usize] - pb).norm() > self.high)
        {
            return false;
        }
        for &t in &self.vt[a as usize] {
            let tri = self.tris[t as usize];
            if tri.contains(&b) {
                continue;
            }
            let before = self.normal(&tri);
            let after_tri = tri.map(|x| if x == a { b } else { x });
            let after = self.normal(&after_tri);
            if after == Vec3::zeros() || before.dot(&after) < 0.2 {
                return false;
            }
        }
        true
    }

    fn is_boundary_vertex(&self, v: u32) -> bool {
        self.neighbours(v)
            .iter()
            .any(|&x| self.edge_tris(v, x).len() == 1)
    }

    fn collapse(&mut self, a: u32, b: u32) {
        for t in self.edge_tris(a, b) {
            self.alive[t as usize] = false;
            for v in self.tris[t as usize] {
                self.vt[v as usize].retain(|&x| x != t);
            }
        }
        let moved = std::mem::take(&mut self.vt[a as usize]);
        for &t in &moved {
            for v in self.tris[t as usize].iter_mut() {
                if *v == a {
                    *v = b;
                }
            }
        }
        self.vt[b as usize].extend(moved);
        self.feat.remove(&key(a, b));
        for x in self.neighbours(b) {
            if let Some(c) = self.feat.remove(&key(a, x)) {
                self.feat.insert(key(x, b), c);
            }
        }
    }

    fn target_valence(&self, v: u32) -> i64 {
        if self.is_boundary_vertex(v) {
            4
        } else {
            6
        }
    }

    fn try_flip(&mut self, a: u32, b: u32) -> bool {
        if self.feat.contains_key(&key(a, b)) {
            return false;
        }
        let et = self.edge_tris(a, b);
        if et.len() != 2 {
            return false;
        }
        let (t1, t2) = (et[0], et[1]);
        // orient so that t1 = (a, b, c)
        let tri = self.tris[t1 as usize];
        let k = tri.iter().position(|&x| x == a).unwrap();
        let (a, b) = if tri[(k + 1) % 3] == b {
            (a, b)
        } else {
            (b, a)
        };
        let (t1, t2) = if self.tris[t1 as usize]
            .iter()
            .position(|&x| x == a)
            .map(|k| self.tris[t1 as usize][(k + 1) % 3])
            == Some(b)
        {
            (t1, t2)
        } else {
            (t2, t1)
        };
        let c = self.third(t1, a, b);
        let d = self.third(t2, a, b);
        if c == d || !self.edge_tris(c, d).is_empty() {
            return false;
        }
        let val = |v: u32| self.neighbours(v).len() as i64;
        let dev = |v: u32, delta: i64| (val(v) + delta - self.target_valence(v)).abs();
        let before = dev(a, 0) + dev(b, 0) + dev(c, 0) + dev(d, 0);
        let after = dev(a, -1) + dev(b, -1) + dev(c, 1) + dev(d, 1);
        if after >= before {
            return false;
        }
        let n_old = self.normal(&[a, b, c]) + self.normal(&[b, a, d]);
        let (n1, n2) = (self.normal(&[c, a, d]), self.normal(&[d, b, c]));
        if n1 == Vec3::zeros()
            || n2 == Vec3::zeros()
            || n1.dot(&n2) < 0.2
            || n1.dot(&n_old) <= 0.0
            || n2.dot(&n_old) <= 0.0
        {
            return false;
        }
        self.tris[t1 as usize] = [c, a, d];
        self.tris[t2 as usize] = [d, b, c];
        self.vt[b as usize].retain(|&x| x != t1);
        self.vt[a as usize].retain(|&x| x != t2);
        self.vt[d as usize].push(t1);
        self.vt[c as usize].push(t2);
        true
    }

    fn split_pass(&mut self) {
        for _ in 0..32 {
            let mut any = false;
            for (a, b) in self.edges() {
                if self.len(a, b) > self.high {
                    self.split(a, b);
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
    }

    fn collapse_pass(&mut self) {
        for _ in 0..8 {
            let mut any = false;
            let mut order: Vec<(u32, u32)> = self
                .edges()
                .into_iter()
                .filter(|&(a, b)| self.len(a, b) < self.low)
                .collect();
            order.sort_by(|x, y| {
                self.len(x.0, x.1)
                    .total_cmp(&self.len(y.0, y.1))
                    .then(x.cmp(y))
            });
            for (a, b) in order {
                if self.vt[a as usize].is_empty()
                    || self.vt[b as usize].is_empty()
                    || self.edge_tris(a, b).is_empty()
                {
                    continue;
                }
                if self.len(a, b) >= self.low {
                    continue;
                }
                if self.can_collapse(a, b) {
                    self.collapse(a, b);
                    any = true;
                } else if self.can_collapse(b, a) {
                    self.collapse(b, a);
                    any = true;
                }
            }
            if !any {
                break;
            }
        }
    }

    fn flip_pass(&mut self) {
        for _ in 0..4 {
            let mut any = false;
            for (a, b) in self.edges() {
                any |= self.try_flip(a, b);
            }
            if !any {
                break;
            }
        }
    }

    fn project_curve(&self, c: u32, p: &Vec3) -> Vec3 {
        let mut best = (f64::INFINITY, *p);
        for s in &self.curves[c as usize] {
            let (q, _) = closest_point_on_segment(p, &s[0], &s[1]);
            let d = (q - p).norm_squared();
            if d < best.0 {
                best = (d, q);
            }
        }
        best.1
    }

    fn relax(&mut self) {
        let n = self.pos.len();
        let new: Vec<Vec3> = (0..n as u32)
            .into_par_iter()
            .map(|v| {
                let p = self.pos[v as usize];
                if self.vt[v as usize].is_empty() {
                    return p;
                }
                match self.class[v as usize] {
                    Class::Corner => p,
                    Class::Line(c) => {
                        let nb: Vec<u32> = self
                            .neighbours(v)
                            .into_iter()
                            .filter(|&x| self.feat.get(&key(v, x)) == Some(&c))
                            .collect();
                        if nb.len() != 2 {
                            return p;
                        }
                        let q = (self.pos[nb[0] as usize] + self.pos[nb[1] as usize]) * 0.5;
                        self.project_curve(c, &(p + (q - p) * 0.5))
                    }
                    Class::Free => {
                        let nb = self.neighbours(v);
                        let q: Vec3 = nb.iter().map(|&x| self.pos[x as usize]).sum::<Vec3>()
                            / nb.len() as f64;
                        let nrm = self.vertex_normal(v);
                        let d = q - p;
                        let t = p + (d - nrm * nrm.dot(&d)) * 0.5;
                        self.reference.nearest(&t).map_or(t, |h| h.point)
                    }
                }
            })
            .collect();
        self.pos = new;
    }

    fn finish(self) -> Result<TriMesh> {
        let mut remap = vec![u32::MAX; self.pos.len()];
        let mut pos = Vec::new();
        let mut tris = Vec::new();
        for (t, tri) in self.tris.iter().enumerate() {
            if !self.alive[t] {
                continue;
            }
            tris.push(tri.map(|v| {
                if remap[v as usize] == u32::MAX {
                    remap[v as usize] = pos.len() as u32;
                    pos.push(self.pos[v as usize]);
                }
                remap[v as usize]
            }));
        }
        let mut out = PolyMesh::from_triangles(pos, &tris)?;
        let mut inverse = vec![0u32; out.n_vertices()];
        for (old, &new) in remap.iter().enumerate() {
            if new != u32::MAX {
                inverse[new as usize] = old as u32;
            }
        }
        for e in 0..out.n_edges() as u32 {
            let (a, b) = out.edge_vertices(e);
            out.edge_feature[e as usize] = self
                .feat
                .contains_key(&key(inverse[a as usize], inverse[b as usize]));
        }
        out.tag_feature_vertices();
        Ok(out)
    }
}

/// Remeshes toward edge length `target * diagonal`. Polygonal input is fan
/// triangulated first. Output edges tagged as features are the preserved
/// boundary and (with `preserve_sharp`) sharp polylines.
pub fn isotropic_remesh(mesh: &PolyMesh, target: f64, preserve_sharp: bool) -> Result<TriMesh> {
    if target.is_nan() || target <= 0.0 {
        return Err(Error::InvalidArgument(
            "target edge length must be positive".into(),
        ));
    }
    let l = target * mesh.bbox_diagonal();
    let mut r = Remesher::new(mesh, preserve_sharp);
    r.high = 4.0 / 3.0 * l;
    r.low = 4.0 / 5.0 * l;
    for _ in 0..ITERATIONS {
        r.split_pass();
        r.collapse_pass();
        r.flip_pass();
        r.relax();
    }
    r.split_pass();
    r.collapse_pass();
    r.flip_pass();
    r.finish()
}

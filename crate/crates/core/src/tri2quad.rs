//! Triangle merging into quad-dominant meshes.
//!
//! Admissible triangle pairs (dihedral at least 120 degrees, convex after
//! projection onto the mean normal plane) are scored by rectangularity,
//! `sum |angle_i - 90|`. Merging runs in waves: each unmerged pair, best
//! rectangularity first, seeds a priority queue that grows outwards,
//! preferring candidates whose edges continue the edges of the quad they
//! attach to. The queue key adds the candidate's own rectangularity to its
//! misalignment so that well-aligned but badly shaped pairs lose to the
//! true quad near singular vertices. Loop shifting then walks face-loops from leftover triangles
//! and re-pairs the triangles along them.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::geom::{angle_between, Vec3};
use crate::mesh::sharp::dihedral_angle;
use crate::mesh::{PolyMesh, TriMesh};
use crate::{Error, Result};

/// Pairs across a dihedral angle below this many degrees are not merged.
pub const MIN_DIHEDRAL: f64 = 120.0;

/// Minimum sine of a projected corner for the quad to count as convex.
const CONVEX_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MergeCandidate {
    pub edge: u32,
    pub rectangularity: f64,
    pub dihedral: f64,
    pub convex: bool,
}

impl MergeCandidate {
    pub fn admissible(&self) -> bool {
        self.convex && self.dihedral >= MIN_DIHEDRAL
    }
}

/// Quad formed by the two triangles of interior edge `e`, counter-clockwise
/// in the orientation of the mesh.
pub fn pair_quad(mesh: &TriMesh, e: u32) -> Option<[u32; 4]> {
    let h = mesh.edge_halfedge(e);
    let t = mesh.twin(h)?;
    let c = mesh.dest(mesh.next(h));
    let d = mesh.dest(mesh.next(t));
    Some([mesh.dest(h), c, mesh.origin(h), d])
}

/// Interior angles in degrees of a quad projected onto the plane normal
/// to `n`, and whether every corner turns the same way as `n`.
fn projected_angles(p: &[Vec3; 4], n: &Vec3) -> Option<([f64; 4], bool)> {
    let flat = p.map(|x| x - n * x.dot(n));
    let mut ang = [0.0; 4];
    let mut convex = true;
    for i in 0..4 {
        let a = flat[(i + 1) % 4] - flat[i];
        let b = flat[(i + 3) % 4] - flat[i];
        let (la, lb) = (a.norm(), b.norm());
        if la == 0.0 || lb == 0.0 {
            return None;
        }
        ang[i] = angle_between(&a, &b).to_degrees();
        if n.dot(&a.cross(&b)) / (la * lb) <= CONVEX_EPS {
            convex = false;
        }
    }
    Some((ang, convex))
}

/// Rectangularity of the quad `v0..v3` seen along normal `n`, with its
/// convexity.
pub fn quad_rectangularity(p: &[Vec3; 4], n: &Vec3) -> Option<(f64, bool)> {
    let (ang, convex) = projected_angles(p, n)?;
    Some((ang.iter().map(|a| (a - 90.0).abs()).sum(), convex))
}

/// Scores the pair across edge `e`; errors on a degenerate triangle.
pub fn rectangularity(mesh: &TriMesh, e: u32) -> Result<Option<MergeCandidate>> {
    let Some(q) = pair_quad(mesh, e) else {
        return Ok(None);
    };
    let (f, g) = mesh.edge_faces(e);
    let g = g.expect("interior edge");
    let (n1, n2) = (mesh.face_normal(f), mesh.face_normal(g));
    if n1 == Vec3::zeros() || n2 == Vec3::zeros() {
        return Err(Error::InvalidMesh(format!(
            "degenerate triangle at edge {e}"
        )));
    }
    let n = (n1 + n2).normalize();
    let p = q.map(|v| mesh.position(v));
    let dihedral = dihedral_angle(mesh, e).unwrap_or(180.0);
    Ok(Some(match quad_rectangularity(&p, &n) {
        Some((r, convex)) => MergeCandidate {
            edge: e,
            rectangularity: r,
            dihedral,
            convex,
        },
        None => MergeCandidate {
            edge: e,
            rectangularity: f64::INFINITY,
            dihedral,
            convex: false,
        },
    }))
}

/// Sum over the two vertices of the shared edge of the angle between the
/// current quad's edge arriving at the vertex and the candidate's edge
/// leaving it. `shared` are consecutive vertices of both quads.
pub fn misalignment(
    positions: &[Vec3],
    candidate: &[u32; 4],
    current: &[u32; 4],
    shared: (u32, u32),
) -> f64 {
    let other = |quad: &[u32; 4], v: u32, not: u32| -> u32 {
        let i = quad.iter().position(|&x| x == v).expect("shared vertex");
        let a = quad[(i + 1) % 4];
        if a != not {
            a
        } else {
            quad[(i + 3) % 4]
        }
    };
    let mut total = 0.0;
    for (x, y) in [(shared.0, shared.1), (shared.1, shared.0)] {
        let back = other(current, x, y);
        let fwd = other(candidate, x, y);
        let p = |v: u32| positions[v as usize];
        total += angle_between(&(p(x) - p(back)), &(p(fwd) - p(x))).to_degrees();
    }
    total
}

/// Provenance of an output face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FaceOrigin {
    Quad(u32, u32),
    Tri(u32),
}

#[derive(Debug, Clone, Serialize)]
pub struct Tri2QuadStats {
    pub input_tris: usize,
    pub quads: usize,
    pub remaining_tris: usize,
    pub purity: f64,
    pub loop_shifts_applied: usize,
}

#[derive(Debug, Clone)]
pub struct QuadDominantMesh {
    pub mesh: PolyMesh,
    pub origin: Vec<FaceOrigin>,
    pub loop_shifts: usize,
}

impl QuadDominantMesh {
    pub fn stats(&self) -> Tri2QuadStats {
        let quads = self
            .origin
            .iter()
            .filter(|o| matches!(o, FaceOrigin::Quad(..)))
            .count();
        let tris = self.origin.len() - quads;
        let input_tris = 2 * quads + tris;
        Tri2QuadStats {
            input_tris,
            quads,
            remaining_tris: tris,
            purity: if self.origin.is_empty() {
                100.0
            } else {
                100.0 * quads as f64 / self.origin.len() as f64
            },
            loop_shifts_applied: self.loop_shifts,
        }
    }
}

/// Working state: the triangle mesh, admissible candidates and the current
/// pairing.
struct Pairing<'a> {
    mesh: &'a TriMesh,
    cand: Vec<Option<MergeCandidate>>,
    /// Partner triangle, or `u32::MAX`.
    mate: Vec<u32>,
}

const UNMATCHED: u32 = u32::MAX;

impl<'a> Pairing<'a> {
    fn new(mesh: &'a TriMesh) -> Result<Self> {
        if !mesh.is_pure_tri() {
            return Err(Error::InvalidMesh("triangle mesh required".into()));
        }
        let cand = (0..mesh.n_edges() as u32)
            .map(|e| Ok(rectangularity(mesh, e)?.filter(|c| c.admissible())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Pairing {
            mesh,
            cand,
            mate: vec![UNMATCHED; mesh.n_faces()],
        })
    }

    fn free(&self, t: u32) -> bool {
        self.mate[t as usize] == UNMATCHED
    }

    fn edge_between(&self, a: u32, b: u32) -> Option<u32> {
        self.mesh.face_halfedges(a).find_map(|h| {
            let t = self.mesh.twin(h)?;
            (self.mesh.face_of(t) == b).then(|| self.mesh.edge_of(h))
        })
    }

    fn quad_of(&self, a: u32) -> Option<[u32; 4]> {
        let b = self.mate[a as usize];
        if b == UNMATCHED {
            return None;
        }
        pair_quad(self.mesh, self.edge_between(a, b)?)
    }

    /// Candidates adjacent to the quad `(a, b)`: pairs `(x, y)` with `x`
    /// across one of the quad's edges.
    fn push_neighbours(&self, a: u32, heap: &mut BinaryHeap<Reverse<(Key, u32)>>) {
        let Some(quad) = self.quad_of(a) else {
            return;
        };
        let b = self.mate[a as usize];
        for tri in [a, b] {
            for h in self.mesh.face_halfedges(tri) {
                let Some(t) = self.mesh.twin(h) else {
                    continue;
                };
                let x = self.mesh.face_of(t);
                if x == a || x == b || !self.free(x) {
                    continue;
                }
                let shared = (self.mesh.origin(h), self.mesh.dest(h));
                for hx in self.mesh.face_halfedges(x) {
                    let e = self.mesh.edge_of(hx);
                    let Some(c) = self.cand[e as usize] else {
                        continue;
                    };
                    let Some(tx) = self.mesh.twin(hx) else {
                        continue;
                    };
                    if !self.free(self.mesh.face_of(tx)) {
                        continue;
                    }
                    let cq = pair_quad(self.mesh, e).expect("interior");
                    let mis = misalignment(self.mesh.positions(), &cq, &quad, shared);
                    heap.push(Reverse((Key(mis + c.rectangularity, c.rectangularity), e)));
                }
            }
        }
    }

    fn merge(&mut self, e: u32) -> bool {
        let (f, g) = self.mesh.edge_faces(e);
        let g = g.expect("interior");
        if !self.free(f) || !self.free(g) {
            return false;
        }
        self.mate[f as usize] = g;
        self.mate[g as usize] = f;
        true
    }

    fn grow(&mut self) {
        let mut order: Vec<MergeCandidate> = self.cand.iter().flatten().copied().collect();
        order.sort_by(|a, b| {
            a.rectangularity
                .total_cmp(&b.rectangularity)
                .then(a.edge.cmp(&b.edge))
        });
        for seed in order {
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((Key(0.0, seed.rectangularity), seed.edge)));
            while let Some(Reverse((_, e))) = heap.pop() {
                if self.merge(e) {
                    let (f, _) = self.mesh.edge_faces(e);
                    self.push_neighbours(f, &mut heap);
                }
            }
        }
    }

    fn score(&self, a: u32, b: u32) -> Option<f64> {
        let e = self.edge_between(a, b)?;
        self.cand[e as usize].map(|c| c.rectangularity)
    }

    /// Walks the face-loop entering the quad across edge `h_in` (a
    /// half-edge of the quad pointing into it) and re-pairs triangles
    /// shifted by one. Returns the new pairs, the triangle left unmatched
    /// (if any) and the change in total rectangularity.
    fn shift_path(&self, start: u32, h_in: u32) -> Option<(Vec<(u32, u32)>, Option<u32>, f64)> {
        let mut pairs = Vec::new();
        let mut delta = 0.0;
        let mut cur = start;
        let mut h = h_in;
        let mut visited = vec![start];
        loop {
            let a = self.mesh.face_of(h);
            let b = self.mate[a as usize];
            if visited.contains(&a) {
                return None;
            }
            if b == UNMATCHED {
                delta += self.score(cur, a)?;
                pairs.push((cur, a));
                return Some((pairs, None, delta));
            }
            delta += self.score(cur, a)? - self.score(a, b)?;
            pairs.push((cur, a));
            visited.push(a);
            visited.push(b);
            // leave `b` across the quad edge opposite the entry edge
            let quad = self.quad_of(a)?;
            let (u, v) = (self.mesh.origin(h), self.mesh.dest(h));
            let i = quad.iter().position(|&x| x == u)?;
            debug_assert_eq!(quad[(i + 1) % 4], v);
            let (x, y) = (quad[(i + 2) % 4], quad[(i + 3) % 4]);
            let out = self
                .mesh
                .face_halfedges(b)
                .find(|&hb| self.mesh.origin(hb) == x && self.mesh.dest(hb) == y);
            let next = out.and_then(|hb| self.mesh.twin(hb));
            match next {
                Some(t) if self.score(b, self.mesh.face_of(t)).is_some() => {
                    cur = b;
                    h = t;
                }
                _ => return Some((pairs, Some(b), delta)),
            }
        }
    }

    fn total_score(&self) -> f64 {
        (0..self.mate.len() as u32)
            .filter(|&a| !self.free(a) && a < self.mate[a as usize])
            .filter_map(|a| self.score(a, self.mate[a as usize]))
            .sum()
    }

    fn apply(&mut self, start: u32, pairs: &[(u32, u32)], left: Option<u32>) {
        for &(x, y) in pairs {
            let old = self.mate[y as usize];
            if old != UNMATCHED && old != x {
                self.mate[old as usize] = UNMATCHED;
            }
            self.mate[x as usize] = y;
            self.mate[y as usize] = x;
        }
        if let Some(l) = left {
            self.mate[l as usize] = UNMATCHED;
        }
        debug_assert!(!self.free(start));
    }

    fn loop_shift(&mut self) -> usize {
        let mut applied = 0;
        loop {
            let mut best: Option<(u32, Vec<(u32, u32)>, Option<u32>, f64)> = None;
            for t in 0..self.mate.len() as u32 {
                if !self.free(t) {
                    continue;
                }
                for h in self.mesh.face_halfedges(t) {
                    let Some(tw) = self.mesh.twin(h) else {
                        continue;
                    };
                    if self.score(t, self.mesh.face_of(tw)).is_none() {
                        continue;
                    }
                    let Some((pairs, left, delta)) = self.shift_path(t, tw) else {
                        continue;
                    };
                    // a shift either absorbs a triangle or improves alignment
                    let gains = left.is_none();
                    if !gains && delta >= -1e-9 {
                        continue;
                    }
                    let better = match &best {
                        None => true,
                        Some((_, _, bl, bd)) => (gains, -delta) > (bl.is_none(), -bd),
                    };
                    if better {
                        best = Some((t, pairs, left, delta));
                    }
                }
                if matches!(best, Some((_, _, None, _))) {
                    break;
                }
            }
            let Some((t, pairs, left, _)) = best else {
                break;
            };
            let before = self.total_score();
            self.apply(t, &pairs, left);
            debug_assert!(left.is_none() || self.total_score() < before);
            applied += 1;
        }
        applied
    }

    fn finish(&self, loop_shifts: usize) -> Result<QuadDominantMesh> {
        let mut faces = Vec::new();
        let mut origin = Vec::new();
        for a in 0..self.mate.len() as u32 {
            let b = self.mate[a as usize];
            if b == UNMATCHED {
                faces.push(self.mesh.face_vertices(a).to_vec());
                origin.push(FaceOrigin::Tri(a));
            } else if a < b {
                faces.push(self.quad_of(a).expect("paired").to_vec());
                origin.push(FaceOrigin::Quad(a, b));
            }
        }
        let mut mesh = PolyMesh::new(self.mesh.positions().to_vec(), faces)?;
        for e in 0..mesh.n_edges() as u32 {
            let (u, v) = mesh.edge_vertices(e);
            if let Some(src) = self.mesh.find_edge(u, v) {
                mesh.edge_feature[e as usize] = self.mesh.edge_feature[src as usize];
            }
        }
        mesh.tag_feature_vertices();
        Ok(QuadDominantMesh {
            mesh,
            origin,
            loop_shifts,
        })
    }

    fn from_result(mesh: &'a TriMesh, qd: &QuadDominantMesh) -> Result<Self> {
        let mut p = Pairing::new(mesh)?;
        for o in &qd.origin {
            if let FaceOrigin::Quad(a, b) = *o {
                p.mate[a as usize] = b;
                p.mate[b as usize] = a;
            }
        }
        Ok(p)
    }
}

/// Float pair ordered by `total_cmp`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, f64);
impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Key {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0).then(self.1.total_cmp(&o.1))
    }
}

/// Greedy direction-aligned merging.
pub fn merge_triangles(mesh: &TriMesh) -> Result<QuadDominantMesh> {
    let mut p = Pairing::new(mesh)?;
    p.grow();
    p.finish(0)
}

/// Re-pairs triangles along face-loops from leftover triangles until no
/// shift adds a quad or improves total rectangularity. `source` must be
/// the triangle mesh `qd` was merged from.
pub fn loop_shift(source: &TriMesh, qd: &QuadDominantMesh) -> Result<QuadDominantMesh> {
    let mut p = Pairing::from_result(source, qd)?;
    let n = p.loop_shift();
    p.finish(qd.loop_shifts + n)
}

/// Merging followed by loop shifting.
pub fn tri_to_quad(mesh: &TriMesh) -> Result<QuadDominantMesh> {
    let mut p = Pairing::new(mesh)?;
    p.grow();
    let n = p.loop_shift();
    p.finish(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn tri(pts: &[(f64, f64)], tris: &[[u32; 3]]) -> TriMesh {
        let pos = pts.iter().map(|&(x, y)| Vec3::new(x, y, 0.0)).collect();
        PolyMesh::from_triangles(pos, tris).unwrap()
    }

    #[test]
    fn rectangle_and_parallelogram_scores() {
        let r = tri(
            &[(0., 0.), (2., 0.), (2., 1.), (0., 1.)],
            &[[0, 1, 2], [0, 2, 3]],
        );
        let e = r.find_edge(0, 2).unwrap();
        let c = rectangularity(&r, e).unwrap().unwrap();
        assert!(c.rectangularity.abs() < 1e-9 && c.admissible());
        let s = 60f64.to_radians();
        let p = tri(
            &[
                (0., 0.),
                (1., 0.),
                (1. + s.cos(), s.sin()),
                (s.cos(), s.sin()),
            ],
            &[[0, 1, 2], [0, 2, 3]],
        );
        let c = rectangularity(&p, p.find_edge(0, 2).unwrap())
            .unwrap()
            .unwrap();
        assert!((c.rectangularity - 120.0).abs() < 1e-9);
    }

    #[test]
    fn crease_pair_is_inadmissible() {
        let pos = vec![
            Vec3::new(0., 0., 0.),
            Vec3::new(1., 0., 0.),
            Vec3::new(0., 1., 0.),
            Vec3::new(0., 0., 1.),
        ];
        let m = PolyMesh::from_triangles(pos, &[[0, 1, 2], [0, 3, 1]]).unwrap();
        let c = rectangularity(&m, m.find_edge(0, 1).unwrap())
            .unwrap()
            .unwrap();
        assert!((c.dihedral - 90.0).abs() < 1e-9);
        assert!(!c.admissible());
    }

    #[test]
    fn straight_and_sheared_continuation() {
        let pos: Vec<Vec3> = [(0., 0.), (1., 0.), (1., 1.), (0., 1.), (2., 0.), (2., 1.)]
            .iter()
            .map(|&(x, y)| Vec3::new(x, y, 0.0))
            .collect();
        let cur = [0, 1, 2, 3];
        assert!(misalignment(&pos, &[1, 4, 5, 2], &cur, (1, 2)).abs() < 1e-9);
        let sh = 15f64.to_radians();
        let mut p2 = pos.clone();
        p2[4] = Vec3::new(1.0 + sh.cos(), sh.sin(), 0.0);
        p2[5] = Vec3::new(1.0 + sh.cos(), 1.0 + sh.sin(), 0.0);
        assert!((misalignment(&p2, &[1, 4, 5, 2], &cur, (1, 2)) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn figure_style_growth_prefers_aligned_quad() {
        // current quad v0 v1 v2 v3 with v1 v2 at the bottom; above it p
        // continues v2 v3 straight, q continues v1 v0 straight, r is off to
        // the right
        let pos: Vec<Vec3> = [
            (0., 1.),
            (0., 0.),
            (1., 0.),
            (1., 1.),
            (1., 2.),
            (0., 2.),
            (2., 2.),
        ]
        .iter()
        .map(|&(x, y)| Vec3::new(x, y, 0.0))
        .collect();
        let (v0, v1, v2, v3, p, q, r) = (0, 1, 2, 3, 4, 5, 6);
        let cur = [v0, v1, v2, v3];
        let good = misalignment(&pos, &[v0, v3, p, q], &cur, (v0, v3));
        let bad = misalignment(&pos, &[v0, v3, r, p], &cur, (v0, v3));
        assert!(good < bad, "{good} {bad}");
    }

    #[test]
    fn triangulated_grid_becomes_pure() {
        for seed in 0..5 {
            let g = corpus::grid_patch(7, 5);
            let t = corpus::triangulate_random(&g, seed);
            let q = tri_to_quad(&t).unwrap();
            assert_eq!(q.stats().quads, 35);
            assert_eq!(q.stats().remaining_tris, 0);
            assert_eq!(q.mesh.positions(), t.positions());
        }
    }

    #[test]
    fn cube_and_single_triangle() {
        let t = corpus::triangulate_random(&corpus::unit_cube_quads(), 0);
        assert_eq!(t.n_faces(), 12);
        let q = merge_triangles(&t).unwrap();
        assert_eq!((q.stats().quads, q.stats().remaining_tris), (6, 0));
        let one = tri(&[(0., 0.), (1., 0.), (0., 1.)], &[[0, 1, 2]]);
        let q = tri_to_quad(&one).unwrap();
        assert_eq!((q.stats().quads, q.stats().remaining_tris), (0, 1));
    }

    /// Strip of `k` parallelograms, each split along its long diagonal
    /// except that the pairing is offset by one so both ends dangle.
    fn parallelogram_strip(k: usize, slant: f64) -> TriMesh {
        let mut pts = Vec::new();
        for i in 0..=k {
            pts.push((i as f64, 0.0));
            pts.push((i as f64 + slant, 1.0));
        }
        let mut tris = Vec::new();
        for i in 0..k as u32 {
            let (a, b, c, d) = (2 * i, 2 * i + 2, 2 * i + 3, 2 * i + 1);
            tris.push([a, b, d]);
            tris.push([b, c, d]);
        }
        tri(&pts, &tris)
    }

    #[test]
    fn loop_shift_absorbs_dangling_triangles() {
        let t = parallelogram_strip(5, 0.8);
        let mut p = Pairing::new(&t).unwrap();
        // pair triangles across the vertical-ish edges, leaving both ends
        for i in 0..4u32 {
            let (x, y) = (2 * i + 1, 2 * i + 2);
            if p.score(x, y).is_some() {
                p.mate[x as usize] = y;
                p.mate[y as usize] = x;
            }
        }
        let before = p.finish(0).unwrap();
        let dangling = before.stats().remaining_tris;
        assert!(dangling >= 2);
        let after = loop_shift(&t, &before).unwrap();
        assert_eq!(after.stats().quads, before.stats().quads + 1);
        assert_eq!(after.stats().remaining_tris, 0);
        assert!(after.loop_shifts >= 1);
    }

    #[test]
    fn pure_input_and_worse_shift_unchanged() {
        let t = corpus::triangulate_random(&corpus::grid_patch(4, 3), 2);
        let q = tri_to_quad(&t).unwrap();
        let again = loop_shift(&t, &q).unwrap();
        assert_eq!(again.origin, q.origin);
        assert_eq!(again.loop_shifts, q.loop_shifts);
        // two squares and a cap triangle: shifting the cap into the strip
        // keeps the quad count and only makes the quads worse
        let t = tri(
            &[
                (0., 0.),
                (0., 1.),
                (1., 0.),
                (1., 1.),
                (2., 0.),
                (2., 1.),
                (2.5, 0.5),
            ],
            &[[0, 2, 1], [2, 3, 1], [2, 4, 3], [4, 5, 3], [4, 6, 5]],
        );
        let mut p = Pairing::new(&t).unwrap();
        for (a, b) in [(0, 1), (2, 3)] {
            p.mate[a] = b as u32;
            p.mate[b] = a as u32;
        }
        let before = p.finish(0).unwrap();
        let after = loop_shift(&t, &before).unwrap();
        assert_eq!(after.origin, before.origin);
        assert_eq!(after.loop_shifts, 0);
    }
}

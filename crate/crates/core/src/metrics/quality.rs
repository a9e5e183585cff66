//! Per-quad scaled Jacobian and sampled symmetric Hausdorff distance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::geom::{sample_triangles, Bvh, Vec3};
use crate::mesh::PolyMesh;
use crate::Result;

/// Minimum over the corners of `n . (e_next x e_prev) / (|e_next| |e_prev|)`
/// with `n` the unit Newell normal of the quad. `None` when an edge has zero
/// length or the normal vanishes.
pub fn quad_scaled_jacobian(q: &[Vec3; 4]) -> Option<f64> {
    let mut n = Vec3::zeros();
    for i in 0..4 {
        n += q[i].cross(&q[(i + 1) % 4]);
    }
    let nn = n.norm();
    if nn == 0.0 {
        return None;
    }
    let n = n / nn;
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let a = q[(i + 1) % 4] - q[i];
        let b = q[(i + 3) % 4] - q[i];
        let (la, lb) = (a.norm(), b.norm());
        if la == 0.0 || lb == 0.0 {
            return None;
        }
        best = best.min(n.dot(&a.cross(&b)) / (la * lb));
    }
    Some(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobianStats {
    pub min: f64,
    /// Area-weighted mean.
    pub mean: f64,
    /// Quads with a zero-length edge; they score `-1`.
    pub flagged: Vec<u32>,
}

pub fn scaled_jacobian(mesh: &PolyMesh) -> Result<JacobianStats> {
    mesh.require_quads()?;
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    let mut wsum = 0.0;
    let mut flagged = Vec::new();
    for f in 0..mesh.n_faces() as u32 {
        let v = mesh.face_vertices(f);
        let q = [0, 1, 2, 3].map(|i| mesh.position(v[i]));
        let sj = quad_scaled_jacobian(&q).unwrap_or_else(|| {
            flagged.push(f);
            -1.0
        });
        let w = mesh.face_area(f);
        min = min.min(sj);
        sum += w * sj;
        wsum += w;
    }
    let mean = if wsum > 0.0 { sum / wsum } else { min };
    Ok(JacobianStats { min, mean, flagged })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Hausdorff {
    /// Max distance from samples of `a` to `b`, percent of `a`'s diagonal.
    pub a_to_b: f64,
    pub b_to_a: f64,
    pub symmetric: f64,
}

pub const DEFAULT_HAUSDORFF_SAMPLES: usize = 100_000;

fn one_sided(from: &PolyMesh, to: &Bvh, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let (tris, _) = from.triangle_soup();
    let mut pts: Vec<Vec3> = sample_triangles(&tris, samples, rng)
        .into_iter()
        .map(|s| s.point)
        .collect();
    pts.extend(
        from.positions()
            .iter()
            .enumerate()
            .filter(|(v, _)| from.valence(*v as u32) > 0)
            .map(|(_, p)| *p),
    );
    pts.par_iter()
        .map(|p| to.nearest(p).map_or(f64::INFINITY, |n| n.dist()))
        .reduce(|| 0.0, f64::max)
}

/// Symmetric sampled Hausdorff distance in percent of the bounding-box
/// diagonal of `a`. Each side draws `samples` area-weighted points plus its
/// vertices; distances are exact point-to-triangle queries.
pub fn hausdorff(a: &PolyMesh, b: &PolyMesh, samples: usize, seed: u64) -> Hausdorff {
    let diag = a.bbox_diagonal();
    let bvh_a = Bvh::new(a.triangle_soup().0);
    let bvh_b = Bvh::new(b.triangle_soup().0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ab = one_sided(a, &bvh_b, samples, &mut rng);
    let ba = one_sided(b, &bvh_a, samples, &mut rng);
    let scale = if diag > 0.0 { 100.0 / diag } else { 0.0 };
    Hausdorff {
        a_to_b: ab * scale,
        b_to_a: ba * scale,
        symmetric: ab.max(ba) * scale,
    }
}

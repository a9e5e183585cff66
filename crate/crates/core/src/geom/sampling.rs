use rand::Rng;

use super::{triangle_area, Vec3};

/// A point drawn from a triangle soup.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub point: Vec3,
    pub tri: usize,
}

/// Draws `count` points uniformly by area from the given triangles.
///
/// Triangle selection uses the cumulative area table, point placement the
/// square-root barycentric warp, so the density is exactly uniform.
pub fn sample_triangles<R: Rng>(
    tris: &[[Vec3; 3]],
    count: usize,
    rng: &mut R,
) -> Vec<SurfaceSample> {
    let mut cdf = Vec::with_capacity(tris.len());
    let mut acc = 0.0;
    for t in tris {
        acc += triangle_area(&t[0], &t[1], &t[2]);
        cdf.push(acc);
    }
    if tris.is_empty() || acc <= 0.0 {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let x = rng.gen::<f64>() * acc;
            let i = cdf.partition_point(|&c| c < x).min(tris.len() - 1);
            let t = &tris[i];
            let r1 = rng.gen::<f64>().sqrt();
            let r2 = rng.gen::<f64>();
            let p = t[0] * (1.0 - r1) + t[1] * (r1 * (1.0 - r2)) + t[2] * (r1 * r2);
            SurfaceSample { point: p, tri: i }
        })
        .collect()
}

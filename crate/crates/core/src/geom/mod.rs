//! Small geometric toolkit shared by every stage: vector aliases, triangle
//! primitives, a bounding volume hierarchy for nearest-point queries and
//! area-weighted surface sampling.

mod bvh;
mod sampling;

pub use bvh::{Bvh, Nearest};
pub use sampling::{sample_triangles, SurfaceSample};

use nalgebra::{Vector2, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in pts {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn extent(&self) -> Vec3 {
        if self.is_empty() {
            Vec3::zeros()
        } else {
            self.max - self.min
        }
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn dist2(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Unit normal of a triangle, or zero for a degenerate one.
pub fn triangle_normal(a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let n = (b - a).cross(&(c - a));
    let l = n.norm();
    if l > 0.0 {
        n / l
    } else {
        Vec3::zeros()
    }
}

/// Newell normal (area vector, not normalized) of a planar or warped polygon.
pub fn polygon_area_vector(pts: &[Vec3]) -> Vec3 {
    let mut n = Vec3::zeros();
    let k = pts.len();
    for i in 0..k {
        let a = pts[i];
        let b = pts[(i + 1) % k];
        n += a.cross(&b);
    }
    n * 0.5
}

/// Closest point on triangle `abc` to `p`, together with its barycentric
/// coordinates (Ericson, Real-Time Collision Detection, 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

/// Closest point on segment `ab` to `p` and its parameter in `[0, 1]`.
pub fn closest_point_on_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> (Vec3, f64) {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&d) / l2).clamp(0.0, 1.0);
    (a + d * t, t)
}

/// Unsigned angle between two vectors in radians (0 for degenerate input).
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let c = a.cross(b).norm();
    let d = a.dot(b);
    c.atan2(d)
}

/// Orthonormal frame `(e1, e2)` spanning the plane of triangle `abc`, with
/// `e1` along `b - a`. Used to flatten a triangle rigidly into 2D.
pub fn triangle_frame(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<(Vec3, Vec3)> {
    let e1 = b - a;
    let l = e1.norm();
    if l == 0.0 {
        return None;
    }
    let e1 = e1 / l;
    let n = (b - a).cross(&(c - a));
    let nl = n.norm();
    if nl == 0.0 {
        return None;
    }
    let n = n / nl;
    Some((e1, n.cross(&e1)))
}

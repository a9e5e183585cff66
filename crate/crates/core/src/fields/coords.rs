//! Subchart coordinates inside one quad `q00 q10 q11 q01` split along the
//! diagonal `q00 q11`.
//!
//! On the first triangle `q00 q10 q11` the x-parameter is measured along
//! rays parallel to `q11 - q10` and the y-parameter along rays parallel to
//! `q10 - q00`; the second triangle `q00 q11 q01` uses `q11 - q01` and
//! `q01 - q00`. In the triangle plane the perpendicular of `v` is `n x v`,
//! which equals the planar perpendicular after a rigid flattening.

use crate::geom::{closest_point_on_triangle, Vec3};

/// Which triangle of the split quad a point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    /// `q00 q10 q11`
    First,
    /// `q00 q11 q01`
    Second,
}

impl Half {
    pub fn vertices(self, q: &[Vec3; 4]) -> [Vec3; 3] {
        match self {
            Half::First => [q[0], q[1], q[2]],
            Half::Second => [q[0], q[2], q[3]],
        }
    }
}

/// Affine map of one triangle: `t = base + grad . (p - origin)` for both
/// parameters.
#[derive(Debug, Clone, Copy)]
pub struct TriMap {
    pub origin: Vec3,
    pub normal: Vec3,
    pub tx: (f64, Vec3),
    pub ty: (f64, Vec3),
}

impl TriMap {
    /// `None` for a degenerate triangle.
    pub fn new(q: &[Vec3; 4], half: Half) -> Option<TriMap> {
        let [a, b, c] = half.vertices(q);
        let n = (b - a).cross(&(c - a));
        let nn = n.norm();
        if nn == 0.0 {
            return None;
        }
        let n = n / nn;
        let perp = |v: Vec3| n.cross(&v);
        // (p - from) . perp(along) / (to - from) . perp(along)
        let param = |from: Vec3, to: Vec3, along: Vec3| -> Option<(f64, Vec3)> {
            let w = perp(along);
            let den = (to - from).dot(&w);
            if den == 0.0 {
                return None;
            }
            let g = w / den;
            Some(((from - q[0]).dot(&-g), g))
        };
        let (tx, ty) = match half {
            Half::First => (
                param(q[0], q[1], q[2] - q[1])?,
                param(q[1], q[2], q[1] - q[0])?,
            ),
            Half::Second => (
                param(q[3], q[2], q[3] - q[0])?,
                param(q[0], q[3], q[2] - q[3])?,
            ),
        };
        Some(TriMap {
            origin: q[0],
            normal: n,
            tx,
            ty,
        })
    }

    /// Local parameters `(t_x, t_y)` of a point in the triangle plane.
    pub fn eval(&self, p: &Vec3) -> (f64, f64) {
        let d = p - self.origin;
        (self.tx.0 + self.tx.1.dot(&d), self.ty.0 + self.ty.1.dot(&d))
    }
}

/// Result of locating a point in a split quad.
#[derive(Debug, Clone, Copy)]
pub struct QuadCoords {
    pub px: f64,
    pub py: f64,
    pub half: Half,
    /// The point the coordinates were taken at (the input projected onto
    /// the chosen triangle).
    pub point: Vec3,
    pub bary: [f64; 3],
    /// The input was not on either triangle and was projected.
    pub projected: bool,
}

/// Coordinates on triangle `half` at a point assumed to lie on it, with
/// corner coordinates `a = (a0, a1)`, `b = (b0, b1)`.
pub fn coords_on(q: &[Vec3; 4], half: Half, p: &Vec3, a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    match TriMap::new(q, half) {
        Some(m) => {
            let (tx, ty) = m.eval(p);
            (a.0 + tx * (a.1 - a.0), b.0 + ty * (b.1 - b.0))
        }
        None => (a.0, b.0),
    }
}

/// Subchart coordinates of `p` in the quad with corner coordinates
/// `(a0,b0) (a1,b0) (a1,b1) (a0,b1)`. Points off both triangles are
/// projected onto the nearer one first; ties go to the first triangle.
pub fn subchart_coords(p: &Vec3, q: &[Vec3; 4], a: (f64, f64), b: (f64, f64)) -> QuadCoords {
    let (p1, b1) = closest_point_on_triangle(p, &q[0], &q[1], &q[2]);
    let (p2, b2) = closest_point_on_triangle(p, &q[0], &q[2], &q[3]);
    let (d1, d2) = ((p1 - p).norm_squared(), (p2 - p).norm_squared());
    let (half, point, bary, d) = if d1 <= d2 {
        (Half::First, p1, b1, d1)
    } else {
        (Half::Second, p2, b2, d2)
    };
    let scale = (q[2] - q[0]).norm().max((q[3] - q[1]).norm());
    let (px, py) = coords_on(q, half, &point, a, b);
    QuadCoords {
        px,
        py,
        half,
        point,
        bary,
        projected: d.sqrt() > 1e-9 * scale,
    }
}

//! Bounding volume hierarchy over triangles for exact nearest-point queries.

use super::{closest_point_on_triangle, Aabb, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        bounds: Aabb,
        start: usize,
        end: usize,
    },
    Inner {
        bounds: Aabb,
        left: usize,
        right: usize,
    },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Result of a nearest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    /// Index of the closest triangle in the input order.
    pub tri: usize,
    pub point: Vec3,
    pub dist2: f64,
    pub bary: [f64; 3],
}

impl Nearest {
    pub fn dist(&self) -> f64 {
        self.dist2.sqrt()
    }
}

/// Static BVH built with median splits along the longest box axis.
///
/// Queries are exact; among equidistant triangles the lowest index wins, so
/// results do not depend on traversal order.
#[derive(Debug, Clone)]
pub struct Bvh {
    tris: Vec<[Vec3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl Bvh {
    pub fn new(tris: Vec<[Vec3; 3]>) -> Self {
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut bvh = Bvh {
            tris,
            order: Vec::new(),
            nodes: Vec::new(),
        };
        if !order.is_empty() {
            let n = order.len();
            bvh.build(&mut order, &centroids, 0, n);
        }
        bvh.order = order;
        bvh
    }

    /// Builds a BVH from an indexed triangle list.
    pub fn from_indexed(positions: &[Vec3], faces: &[[u32; 3]]) -> Self {
        Bvh::new(
            faces
                .iter()
                .map(|f| {
                    [
                        positions[f[0] as usize],
                        positions[f[1] as usize],
                        positions[f[2] as usize],
                    ]
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.tris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    pub fn triangle(&self, i: usize) -> &[Vec3; 3] {
        &self.tris[i]
    }

    fn tri_bounds(&self, i: usize) -> Aabb {
        Aabb::from_points(self.tris[i].iter())
    }

    fn build(
        &mut self,
        order: &mut [usize],
        centroids: &[Vec3],
        start: usize,
        end: usize,
    ) -> usize {
        let mut bounds = Aabb::empty();
        for &i in &order[start..end] {
            bounds = bounds.merge(&self.tri_bounds(i));
        }
        let idx = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { bounds, start, end });
            return idx;
        }
        let mut cb = Aabb::empty();
        for &i in &order[start..end] {
            cb.grow(&centroids[i]);
        }
        let ext = cb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis]
                .total_cmp(&centroids[b][axis])
                .then(a.cmp(&b))
        });
        // placeholder, patched once children exist
        self.nodes.push(Node::Leaf { bounds, start, end });
        let left = self.build(order, centroids, start, mid);
        let right = self.build(order, centroids, mid, end);
        self.nodes[idx] = Node::Inner {
            bounds,
            left,
            right,
        };
        idx
    }

    /// Exact closest point on the triangle soup.
    pub fn nearest(&self, p: &Vec3) -> Option<Nearest> {
        self.nearest_within(p, f64::INFINITY)
    }

    /// Closest point if one lies within `max_dist2` (squared distance).
    pub fn nearest_within(&self, p: &Vec3, max_dist2: f64) -> Option<Nearest> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Nearest> = None;
        let mut best_d2 = max_dist2;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds().dist2(p) > best_d2 {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &ti in &self.order[start..end] {
                        let t = &self.tris[ti];
                        let (q, bary) = closest_point_on_triangle(p, &t[0], &t[1], &t[2]);
                        let d2 = (q - p).norm_squared();
                        let better = match best {
                            None => d2 <= best_d2,
                            Some(b) => d2 < b.dist2 || (d2 == b.dist2 && ti < b.tri),
                        };
                        if better {
                            best_d2 = d2;
                            best = Some(Nearest {
                                tri: ti,
                                point: q,
                                dist2: d2,
                                bary,
                            });
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().dist2(p);
                    let dr = self.nodes[right].bounds().dist2(p);
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }
}

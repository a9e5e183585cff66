//! Procedural meshes: the desk corpus used by the round-trip and recovery
//! checks, plus small constructions used in tests.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Vec3;
use crate::mesh::{PolyMesh, QuadMesh, TriMesh};

/// Subdivides each coarse quad into `k x k` bilinear quads, sharing vertices
/// along coarse edges.
pub fn subdivide_coarse(coarse: &[Vec3], quads: &[[u32; 4]], k: usize) -> QuadMesh {
    let mut pos: Vec<Vec3> = coarse.to_vec();
    let mut edge_pts: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut faces = Vec::new();
    // vertex ids along coarse edge a->b, k + 1 entries
    let mut edge_chain = |a: u32, b: u32, pos: &mut Vec<Vec3>| -> Vec<u32> {
        let (lo, hi) = (a.min(b), a.max(b));
        let chain = edge_pts
            .entry((lo, hi))
            .or_insert_with(|| {
                let mut c = vec![lo];
                for i in 1..k {
                    let t = i as f64 / k as f64;
                    pos.push(coarse[lo as usize] + (coarse[hi as usize] - coarse[lo as usize]) * t);
                    c.push((pos.len() - 1) as u32);
                }
                c.push(hi);
                c
            })
            .clone();
        if a == lo {
            chain
        } else {
            chain.into_iter().rev().collect()
        }
    };
    for q in quads {
        let bottom = edge_chain(q[0], q[1], &mut pos);
        let right = edge_chain(q[1], q[2], &mut pos);
        let top = edge_chain(q[3], q[2], &mut pos);
        let left = edge_chain(q[0], q[3], &mut pos);
        let mut grid = vec![vec![0u32; k + 1]; k + 1];
        for i in 0..=k {
            grid[0][i] = bottom[i];
            grid[k][i] = top[i];
            grid[i][0] = left[i];
            grid[i][k] = right[i];
        }
        let c = |v: u32| coarse[v as usize];
        for j in 1..k {
            for i in 1..k {
                let s = i as f64 / k as f64;
                let t = j as f64 / k as f64;
                let p = c(q[0]) * ((1.0 - s) * (1.0 - t))
                    + c(q[1]) * (s * (1.0 - t))
                    + c(q[2]) * (s * t)
                    + c(q[3]) * ((1.0 - s) * t);
                pos.push(p);
                grid[j][i] = (pos.len() - 1) as u32;
            }
        }
        for j in 0..k {
            for i in 0..k {
                faces.push(vec![
                    grid[j][i],
                    grid[j][i + 1],
                    grid[j + 1][i + 1],
                    grid[j + 1][i],
                ]);
            }
        }
    }
    PolyMesh::new(pos, faces).expect("subdivided coarse mesh is manifold")
}

/// Boundary of a union of unit cells, as outward-oriented unit quads.
pub fn polycube_coarse(cells: &[[i32; 3]]) -> (Vec<Vec3>, Vec<[u32; 4]>) {
    let occupied: std::collections::HashSet<[i32; 3]> = cells.iter().copied().collect();
    let mut ids: HashMap<[i32; 3], u32> = HashMap::new();
    let mut pos = Vec::new();
    let mut quads = Vec::new();
    let mut vid = |p: [i32; 3], pos: &mut Vec<Vec3>| -> u32 {
        *ids.entry(p).or_insert_with(|| {
            pos.push(Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64));
            (pos.len() - 1) as u32
        })
    };
    for c in cells {
        for a in 0..3 {
            for s in [1, -1] {
                let mut nb = *c;
                nb[a] += s;
                if occupied.contains(&nb) {
                    continue;
                }
                let b = (a + 1) % 3;
                let d = (a + 2) % 3;
                let mut base = *c;
                if s > 0 {
                    base[a] += 1;
                }
                let corner = |u: i32, v: i32| {
                    let mut p = base;
                    p[b] += u;
                    p[d] += v;
                    p
                };
                let mut ring = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                if s < 0 {
                    ring.reverse();
                }
                let q = ring.map(|p| vid(p, &mut pos));
                quads.push(q);
            }
        }
    }
    (pos, quads)
}

pub fn polycube(cells: &[[i32; 3]], k: usize) -> QuadMesh {
    let (p, q) = polycube_coarse(cells);
    subdivide_coarse(&p, &q, k)
}

/// Unit cube `[0,1]^3` with one quad per side.
pub fn unit_cube_quads() -> QuadMesh {
    polycube(&[[0, 0, 0]], 1)
}

/// Cube `[0,1]^3` with `k x k` quads per side.
pub fn cube(k: usize) -> QuadMesh {
    polycube(&[[0, 0, 0]], k)
}

/// Axis-aligned box of `nx x ny x nz` unit cells, one quad per cell side.
pub fn boxed(nx: i32, ny: i32, nz: i32) -> QuadMesh {
    let mut cells = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                cells.push([x, y, z]);
            }
        }
    }
    polycube(&cells, 1)
}

/// L-shaped extruded polycube, `k x k` quads per unit cell side.
pub fn l_bracket(k: usize) -> QuadMesh {
    polycube(&[[0, 0, 0], [1, 0, 0], [0, 0, 1]], k)
}

/// Cube with `k x k` quads per side projected onto the unit sphere.
pub fn cube_sphere(k: usize) -> QuadMesh {
    let c = cube(k);
    let p = c
        .positions()
        .iter()
        .map(|p| (p - Vec3::repeat(0.5)).normalize())
        .collect();
    c.with_positions(p)
}

/// Planar `m x n` grid of unit squares in the xy-plane.
pub fn grid_patch(m: usize, n: usize) -> QuadMesh {
    let mut pos = Vec::new();
    for j in 0..=n {
        for i in 0..=m {
            pos.push(Vec3::new(i as f64, j as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| (j * (m + 1) + i) as u32;
    let mut quads = Vec::new();
    for j in 0..n {
        for i in 0..m {
            quads.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolyMesh::from_quads(pos, &quads).unwrap()
}

/// Open cylinder: `nu` quads around, `nv` along the axis, radius 1, height 2.
pub fn cylinder(nu: usize, nv: usize) -> QuadMesh {
    let mut pos = Vec::new();
    for j in 0..=nv {
        for i in 0..nu {
            let a = 2.0 * PI * i as f64 / nu as f64;
            pos.push(Vec3::new(a.cos(), a.sin(), 2.0 * j as f64 / nv as f64));
        }
    }
    let id = |i: usize, j: usize| (j * nu + i % nu) as u32;
    let mut quads = Vec::new();
    for j in 0..nv {
        for i in 0..nu {
            quads.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolyMesh::from_quads(pos, &quads).unwrap()
}

/// Torus grid with major radius 1 and minor radius 0.4.
pub fn torus(nu: usize, nv: usize) -> QuadMesh {
    let (big, small) = (1.0, 0.4);
    let mut pos = Vec::new();
    for j in 0..nv {
        for i in 0..nu {
            let u = 2.0 * PI * i as f64 / nu as f64;
            let v = 2.0 * PI * j as f64 / nv as f64;
            let r = big + small * v.cos();
            pos.push(Vec3::new(r * u.cos(), r * u.sin(), small * v.sin()));
        }
    }
    let id = |i: usize, j: usize| ((j % nv) * nu + i % nu) as u32;
    let mut quads = Vec::new();
    for j in 0..nv {
        for i in 0..nu {
            quads.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolyMesh::from_quads(pos, &quads).unwrap()
}

/// Planar triangle split into three quad charts around a valence-3 vertex,
/// each chart `k x k`.
pub fn tri_patch(k: usize) -> QuadMesh {
    let a = Vec3::new(0.0, 0.0, 0.0);
    let b = Vec3::new(2.0, 0.0, 0.0);
    let c = Vec3::new(1.0, 3f64.sqrt(), 0.0);
    let o = (a + b + c) / 3.0;
    let coarse = vec![a, b, c, o, (a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5];
    // 0=a 1=b 2=c 3=o 4=ab 5=bc 6=ca
    let quads = [[0, 4, 3, 6], [1, 5, 3, 4], [2, 6, 3, 5]];
    subdivide_coarse(&coarse, &quads, k)
}

/// Icosphere triangle mesh on the unit sphere.
pub fn icosphere(level: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pos: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut m = |a: u32, b: u32, pos: &mut Vec<Vec3>| -> u32 {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                pos.push(((pos[a as usize] + pos[b as usize]) * 0.5).normalize());
                (pos.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = m(a, b, &mut pos);
            let bc = m(b, c, &mut pos);
            let ca = m(c, a, &mut pos);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    PolyMesh::from_triangles(pos, &tris).unwrap()
}

/// Strip of quads winding helically around a cylinder: vertex `k` sits at
/// angle `2 pi k / n` and height `pitch * k / n`; quad `k` joins `k, k + 1`
/// with the vertices one turn higher. `len` quads in total.
pub fn helix_strip(n: usize, len: usize, pitch: f64) -> QuadMesh {
    let nv = len + n + 1;
    let pos = (0..nv)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64;
            Vec3::new(a.cos(), a.sin(), pitch * k as f64 / n as f64)
        })
        .collect();
    let quads: Vec<[u32; 4]> = (0..len)
        .map(|k| [k as u32, (k + 1) as u32, (k + n + 1) as u32, (k + n) as u32])
        .collect();
    PolyMesh::from_quads(pos, &quads).unwrap()
}

/// Planar `w x h` grid with a ribbon of `len` quads lifted out of the plane
/// that leaves through the right boundary edge of row `row` and re-enters
/// through the top boundary edge of column `col`. The face loop along the
/// row therefore turns into the column and crosses face `(col, row)` twice.
pub fn crossing_strip(w: usize, h: usize, row: usize, col: usize, len: usize) -> QuadMesh {
    let g = grid_patch(w, h);
    let mut pos = g.positions().to_vec();
    let mut quads: Vec<Vec<u32>> = g.face_lists();
    let id = |i: usize, j: usize| (j * (w + 1) + i) as u32;
    let (a0, b0) = (id(w, row + 1), id(w, row));
    let (al, bl) = (id(col + 1, h), id(col, h));
    let pa0 = pos[a0 as usize];
    let pb0 = pos[b0 as usize];
    let pal = pos[al as usize];
    let pbl = pos[bl as usize];
    let mut a_chain = vec![a0];
    let mut b_chain = vec![b0];
    for t in 1..len {
        let s = t as f64 / len as f64;
        // arc out of the plane joining the two boundary edges
        let lift =
            Vec3::new(1.5, 1.5, 0.0) * (PI * s).sin() + Vec3::new(0.0, 0.0, 2.0 * (PI * s).sin());
        let pa = pa0 * (1.0 - s) + pal * s + lift;
        let pb = pb0 * (1.0 - s) + pbl * s + lift;
        pos.push(pa);
        a_chain.push((pos.len() - 1) as u32);
        pos.push(pb);
        b_chain.push((pos.len() - 1) as u32);
    }
    a_chain.push(al);
    b_chain.push(bl);
    for t in 0..len {
        quads.push(vec![a_chain[t], b_chain[t], b_chain[t + 1], a_chain[t + 1]]);
    }
    PolyMesh::new(pos, quads).unwrap()
}

/// Triangulates every quad along a random diagonal; other faces are fanned.
pub fn triangulate_random(mesh: &QuadMesh, seed: u64) -> TriMesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tris = Vec::new();
    for f in mesh.faces() {
        if f.len() == 4 {
            if rng.gen::<bool>() {
                tris.push([f[0], f[1], f[2]]);
                tris.push([f[0], f[2], f[3]]);
            } else {
                tris.push([f[1], f[2], f[3]]);
                tris.push([f[1], f[3], f[0]]);
            }
        } else {
            for k in 1..f.len() - 1 {
                tris.push([f[0], f[k], f[k + 1]]);
            }
        }
    }
    PolyMesh::from_triangles(mesh.positions().to_vec(), &tris).unwrap()
}

/// The ten-mesh desk corpus.
pub fn desk_corpus() -> Vec<(&'static str, QuadMesh)> {
    vec![
        ("grid_patch", grid_patch(6, 4)),
        ("cube_2x2", cube(2)),
        ("cube_4x4", cube(4)),
        ("cylinder", cylinder(16, 6)),
        ("torus", torus(24, 12)),
        ("cube_sphere", cube_sphere(4)),
        ("l_bracket", l_bracket(2)),
        ("cube_3x3", cube(3)),
        ("tri_patch", tri_patch(3)),
        ("box_3x2x1", boxed(3, 2, 1)),
    ]
}

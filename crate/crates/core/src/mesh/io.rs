//! OBJ and PLY reading and writing.
//!
//! OBJ is the interchange format: `v`, `f` (any `v/vt/vn` form, negative
//! indices) and `l` polylines, which mark feature edges. PLY reading covers
//! ASCII and binary little-endian files; PLY writing adds colors.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::PolyMesh;
use crate::error::{Error, Result};
use crate::geom::{polygon_area_vector, Aabb, Vec3};

/// Unprocessed indexed geometry as read from disk.
#[derive(Debug, Clone, Default)]
pub struct RawMesh {
    pub positions: Vec<Vec3>,
    pub faces: Vec<Vec<u32>>,
    pub lines: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Obj,
    Ply,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
        {
            Some(e) if e == "obj" => Ok(Format::Obj),
            Some(e) if e == "ply" => Ok(Format::Ply),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mesh format: {}",
                path.display()
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Drop faces that make an edge non-manifold instead of failing.
    pub diagnostic: bool,
}

/// What load-time cleaning found and did.
#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct LoadReport {
    pub merged_vertices: usize,
    pub dropped_degenerate: usize,
    pub non_manifold_edges: Vec<(u32, u32)>,
    pub dropped_non_manifold: Vec<usize>,
    pub pure_quad: bool,
    pub pure_tri: bool,
    pub boundary_loops: usize,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub mesh: PolyMesh,
    pub report: LoadReport,
}

pub fn load_mesh(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Loaded> {
    let path = path.as_ref();
    let raw = match Format::from_path(path)? {
        Format::Obj => read_obj(BufReader::new(File::open(path)?))?,
        Format::Ply => read_ply(BufReader::new(File::open(path)?))?,
    };
    build_mesh(raw, opts)
}

/// Exact-coordinate vertex dedup, degenerate face removal, construction, and
/// feature tagging from `l` polylines.
pub fn build_mesh(raw: RawMesh, opts: LoadOptions) -> Result<Loaded> {
    let mut report = LoadReport::default();
    let mut remap = Vec::with_capacity(raw.positions.len());
    let mut positions = Vec::new();
    let mut seen: HashMap<[u64; 3], u32> = HashMap::new();
    for p in &raw.positions {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        let id = *seen.entry(key).or_insert_with(|| {
            positions.push(*p);
            (positions.len() - 1) as u32
        });
        remap.push(id);
    }
    report.merged_vertices = raw.positions.len() - positions.len();

    let diag = Aabb::from_points(positions.iter()).diagonal();
    let area_tol = 1e-12 * diag * diag;
    let mut faces = Vec::with_capacity(raw.faces.len());
    for f in &raw.faces {
        let f: Vec<u32> = f.iter().map(|&v| remap[v as usize]).collect();
        let repeated = (0..f.len()).any(|k| f[..k].contains(&f[k]));
        let pts: Vec<Vec3> = f.iter().map(|&v| positions[v as usize]).collect();
        if repeated || f.len() < 3 || polygon_area_vector(&pts).norm() <= area_tol {
            report.dropped_degenerate += 1;
            continue;
        }
        faces.push(f);
    }

    let mesh = match PolyMesh::new(positions.clone(), faces.clone()) {
        Ok(m) => m,
        Err(Error::NonManifold { edges }) if opts.diagnostic => {
            report.non_manifold_edges = edges;
            let keep = drop_non_manifold(&faces, &mut report.dropped_non_manifold);
            PolyMesh::new(positions, keep)?
        }
        Err(e) => return Err(e),
    };
    let mut mesh = mesh;
    for line in &raw.lines {
        for w in line.windows(2) {
            let (a, b) = (remap[w[0] as usize], remap[w[1] as usize]);
            if let Some(e) = mesh.find_edge(a, b) {
                mesh.edge_feature[e as usize] = true;
            }
        }
    }
    mesh.tag_feature_vertices();
    report.pure_quad = mesh.is_pure_quad();
    report.pure_tri = mesh.is_pure_tri();
    report.boundary_loops = mesh.boundary_loops().len();
    Ok(Loaded { mesh, report })
}

/// Keeps faces in order, skipping any face that would put a third face on
/// an edge.
fn drop_non_manifold(faces: &[Vec<u32>], dropped: &mut Vec<usize>) -> Vec<Vec<u32>> {
    let mut count: HashMap<(u32, u32), u32> = HashMap::new();
    let mut keep = Vec::new();
    for (fi, f) in faces.iter().enumerate() {
        let keys: Vec<(u32, u32)> = (0..f.len())
            .map(|k| {
                let (a, b) = (f[k], f[(k + 1) % f.len()]);
                (a.min(b), a.max(b))
            })
            .collect();
        if keys.iter().any(|k| count.get(k).copied().unwrap_or(0) >= 2) {
            dropped.push(fi);
            continue;
        }
        for k in keys {
            *count.entry(k).or_insert(0) += 1;
        }
        keep.push(f.clone());
    }
    keep
}

fn parse_index(tok: &str, n: usize, line: usize) -> Result<u32> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("bad index '{tok}'"),
    })?;
    let idx = if i < 0 { n as i64 + i } else { i - 1 };
    if idx < 0 || idx as usize >= n {
        return Err(Error::Parse {
            line,
            msg: format!("index {i} out of range"),
        });
    }
    Ok(idx as u32)
}

pub fn read_obj<R: BufRead>(reader: R) -> Result<RawMesh> {
    let mut raw = RawMesh::default();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let lno = ln + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<f64> = toks
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse {
                        line: lno,
                        msg: e.to_string(),
                    })?;
                if c.len() != 3 {
                    return Err(Error::Parse {
                        line: lno,
                        msg: "vertex needs 3 coordinates".into(),
                    });
                }
                raw.positions.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let n = raw.positions.len();
                let f = toks
                    .map(|t| parse_index(t, n, lno))
                    .collect::<Result<Vec<u32>>>()?;
                if f.len() < 3 {
                    return Err(Error::Parse {
                        line: lno,
                        msg: "face needs 3 vertices".into(),
                    });
                }
                raw.faces.push(f);
            }
            Some("l") => {
                let n = raw.positions.len();
                let l = toks
                    .map(|t| parse_index(t, n, lno))
                    .collect::<Result<Vec<u32>>>()?;
                raw.lines.push(l);
            }
            _ => {}
        }
    }
    Ok(raw)
}

/// Writes positions, faces and feature edges (as two-vertex `l` lines).
pub fn write_obj<W: Write>(mesh: &PolyMesh, mut w: W) -> Result<()> {
    for p in mesh.positions() {
        writeln!(w, "v {} {} {}", fmt_f(p.x), fmt_f(p.y), fmt_f(p.z))?;
    }
    for f in mesh.faces() {
        write!(w, "f")?;
        for v in f {
            write!(w, " {}", v + 1)?;
        }
        writeln!(w)?;
    }
    for e in 0..mesh.n_edges() as u32 {
        if mesh.edge_feature[e as usize] {
            let (a, b) = mesh.edge_vertices(e);
            writeln!(w, "l {} {}", a + 1, b + 1)?;
        }
    }
    Ok(())
}

pub fn save_obj(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_obj(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Shortest decimal that round-trips exactly.
fn fmt_f(x: f64) -> String {
    let s = format!("{x:?}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }
    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Prop {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Prop>,
}

pub fn read_ply<R: BufRead>(mut reader: R) -> Result<RawMesh> {
    let perr = |line: usize, msg: &str| Error::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut line = String::new();
    let mut lno = 0;
    let mut elements: Vec<Element> = Vec::new();
    let mut binary = false;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(perr(lno, "unexpected end of header"));
        }
        lno += 1;
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.first().copied() {
            Some("ply") | Some("comment") | Some("obj_info") | None => {}
            Some("format") => match t.get(1).copied() {
                Some("ascii") => binary = false,
                Some("binary_little_endian") => binary = true,
                _ => return Err(perr(lno, "unsupported ply format")),
            },
            Some("element") => {
                if t.len() < 3 {
                    return Err(perr(lno, "bad element line"));
                }
                elements.push(Element {
                    name: t[1].to_string(),
                    count: t[2].parse().map_err(|_| perr(lno, "bad element count"))?,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| perr(lno, "property before element"))?;
                if t.get(1) == Some(&"list") {
                    if t.len() < 5 {
                        return Err(perr(lno, "bad list property"));
                    }
                    let c = Scalar::parse(t[2]).ok_or_else(|| perr(lno, "bad type"))?;
                    let i = Scalar::parse(t[3]).ok_or_else(|| perr(lno, "bad type"))?;
                    el.props.push(Prop::List(t[4].to_string(), c, i));
                } else {
                    if t.len() < 3 {
                        return Err(perr(lno, "bad property"));
                    }
                    let s = Scalar::parse(t[1]).ok_or_else(|| perr(lno, "bad type"))?;
                    el.props.push(Prop::Scalar(t[2].to_string(), s));
                }
            }
            Some("end_header") => break,
            Some(_) => return Err(perr(lno, "unknown header line")),
        }
    }
    let mut raw = RawMesh::default();
    let mut ascii_tokens: Vec<String> = Vec::new();
    let mut tok_pos = 0;
    let mut bytes = Vec::new();
    let mut byte_pos = 0;
    if binary {
        reader.read_to_end(&mut bytes)?;
    } else {
        let mut rest = String::new();
        reader.read_to_string(&mut rest)?;
        ascii_tokens = rest.split_whitespace().map(|s| s.to_string()).collect();
    }
    let mut next_val = |ty: Scalar| -> Result<f64> {
        if binary {
            let n = ty.size();
            if byte_pos + n > bytes.len() {
                return Err(perr(lno, "truncated binary body"));
            }
            let v = ty.read_le(&bytes[byte_pos..byte_pos + n]);
            byte_pos += n;
            Ok(v)
        } else {
            let t = ascii_tokens
                .get(tok_pos)
                .ok_or_else(|| perr(lno, "truncated ascii body"))?;
            tok_pos += 1;
            t.parse::<f64>().map_err(|_| perr(lno, "bad number"))
        }
    };
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            let mut face = None;
            for p in &el.props {
                match p {
                    Prop::Scalar(name, ty) => {
                        let v = next_val(*ty)?;
                        match name.as_str() {
                            "x" => xyz[0] = v,
                            "y" => xyz[1] = v,
                            "z" => xyz[2] = v,
                            _ => {}
                        }
                    }
                    Prop::List(name, cty, ity) => {
                        let n = next_val(*cty)? as usize;
                        let mut l = Vec::with_capacity(n);
                        for _ in 0..n {
                            l.push(next_val(*ity)? as u32);
                        }
                        if name == "vertex_indices" || name == "vertex_index" {
                            face = Some(l);
                        }
                    }
                }
            }
            match el.name.as_str() {
                "vertex" => raw.positions.push(Vec3::new(xyz[0], xyz[1], xyz[2])),
                "face" => {
                    if let Some(f) = face {
                        raw.faces.push(f);
                    }
                }
                _ => {}
            }
        }
    }
    let nv = raw.positions.len() as u32;
    if raw.faces.iter().flatten().any(|&v| v >= nv) {
        return Err(perr(lno, "face index out of range"));
    }
    Ok(raw)
}

/// Colors attached to a PLY export.
#[derive(Debug, Clone, Copy)]
pub enum Colors<'a> {
    None,
    PerVertex(&'a [[u8; 3]]),
    PerFace(&'a [[u8; 3]]),
}

/// ASCII PLY with optional per-vertex or per-face RGB.
pub fn write_ply<W: Write>(mesh: &PolyMesh, colors: Colors<'_>, mut w: W) -> Result<()> {
    writeln!(w, "ply\nformat ascii 1.0")?;
    writeln!(w, "element vertex {}", mesh.n_vertices())?;
    writeln!(w, "property double x\nproperty double y\nproperty double z")?;
    if matches!(colors, Colors::PerVertex(_)) {
        writeln!(
            w,
            "property uchar red\nproperty uchar green\nproperty uchar blue"
        )?;
    }
    writeln!(w, "element face {}", mesh.n_faces())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    if matches!(colors, Colors::PerFace(_)) {
        writeln!(
            w,
            "property uchar red\nproperty uchar green\nproperty uchar blue"
        )?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in mesh.positions().iter().enumerate() {
        write!(w, "{} {} {}", fmt_f(p.x), fmt_f(p.y), fmt_f(p.z))?;
        if let Colors::PerVertex(c) = colors {
            write!(w, " {} {} {}", c[i][0], c[i][1], c[i][2])?;
        }
        writeln!(w)?;
    }
    for (i, f) in mesh.faces().enumerate() {
        write!(w, "{}", f.len())?;
        for v in f {
            write!(w, " {v}")?;
        }
        if let Colors::PerFace(c) = colors {
            write!(w, " {} {} {}", c[i][0], c[i][1], c[i][2])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_ply(mesh: &PolyMesh, colors: Colors<'_>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_ply(mesh, colors, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Maps a scalar in [0, 1] to RGB: dark blue at 0 through cyan, yellow, to
/// dark red at 1.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    // piecewise-linear jet-like ramp
    let stops: [(f64, [f64; 3]); 5] = [
        (0.0, [0.0, 0.0, 0.5]),
        (0.25, [0.0, 0.5, 1.0]),
        (0.5, [0.5, 1.0, 0.5]),
        (0.75, [1.0, 0.5, 0.0]),
        (1.0, [0.5, 0.0, 0.0]),
    ];
    let k = stops.iter().position(|s| s.0 >= t).unwrap_or(4).max(1);
    let (t0, c0) = stops[k - 1];
    let (t1, c1) = stops[k];
    let a = (t - t0) / (t1 - t0);
    let mut out = [0u8; 3];
    for i in 0..3 {
        out[i] = ((c0[i] + a * (c1[i] - c0[i])) * 255.0).round() as u8;
    }
    out
}

/// Deterministic distinct-ish color for an id.
pub fn palette(id: u64, seed: u64) -> [u8; 3] {
    let mut x = id.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed.wrapping_mul(0xD1B5_4A32_D192_ED03);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 29;
    [
        (x & 0xff) as u8 | 0x20,
        ((x >> 8) & 0xff) as u8 | 0x20,
        ((x >> 16) & 0xff) as u8 | 0x20,
    ]
}

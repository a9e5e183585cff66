//! Command implementations. Each returns the JSON report to print.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use quadkit::curation::{
    chart_histogram_csv, curate as curate_meshes, histogram_csv, CurationOptions, ManifestRecord,
};
use quadkit::extract::{
    cluster_faces, collapse_to_quads, detect_seeds, extract_layout, isotropic_remesh, refine,
    roundtrip as run_roundtrip, seed_radius, ClusterPartition, RoundTripOptions,
};
use quadkit::fields::{
    bake_fields, superlevel_components, BakeSites, ChartSplit, FieldKind, FieldSample, Fields,
};
use quadkit::mesh::complex::{build_base_complex, n_irregular_interior, ComplexOptions};
use quadkit::mesh::io::{colormap, load_mesh, palette, save_obj, save_ply, Colors, LoadOptions};
use quadkit::mesh::PolyMesh;
use quadkit::metrics::{compute_metrics, MetricsOptions};
use quadkit::tri2quad::tri_to_quad;
use serde::Serialize;

use crate::config::{BakeConfig, PipelineConfig};
use crate::Failure;

type Out = Result<String, Failure>;

fn load(path: &Path) -> anyhow::Result<PolyMesh> {
    Ok(load_mesh(path, LoadOptions::default())
        .with_context(|| format!("loading {}", path.display()))?
        .mesh)
}

fn json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn out_file(dir: &Path, name: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}

fn write_json_file<T: Serialize>(path: &Path, v: &T) -> anyhow::Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("writing {}", path.display()))?);
    serde_json::to_writer(&mut w, v)?;
    w.flush()?;
    Ok(())
}

pub fn metrics(cfg: &PipelineConfig, mesh: &Path, reference: Option<&Path>) -> Out {
    let m = load(mesh)?;
    let r = reference.map(load).transpose()?;
    let opts = MetricsOptions {
        complex: ComplexOptions {
            sharp_angle: Some(cfg.metrics.sharp_angle),
            ..Default::default()
        },
        turning: cfg.metrics.turning,
        hausdorff_samples: cfg.metrics.hausdorff_samples,
        seed: cfg.seed,
    };
    Ok(json(&compute_metrics(&m, r.as_ref(), &opts)?)?)
}

#[derive(Serialize)]
struct Topology {
    vertices: usize,
    faces: usize,
    edges: usize,
    boundaries: usize,
    components: usize,
    genus: i64,
    pure_quad: bool,
    #[serde(rename = "N_I")]
    n_i: usize,
    #[serde(rename = "N_c")]
    n_c: Option<usize>,
}

pub fn topology(cfg: &PipelineConfig, mesh: &Path) -> Out {
    let m = load(mesh)?;
    let n_c = if m.is_pure_quad() {
        let opts = ComplexOptions {
            sharp_angle: Some(cfg.metrics.sharp_angle),
            ..Default::default()
        };
        Some(build_base_complex(&m, &opts)?.n_charts())
    } else {
        None
    };
    let n_i = if m.is_pure_quad() {
        n_irregular_interior(&m)?
    } else {
        0
    };
    Ok(json(&Topology {
        vertices: m.n_vertices(),
        faces: m.n_faces(),
        edges: m.n_edges(),
        boundaries: m.boundary_loops().len(),
        components: m.n_components(),
        genus: m.genus(),
        pure_quad: m.is_pure_quad(),
        n_i,
        n_c,
    })?)
}

/// Per-face values from per-face or per-vertex samples.
fn face_values(mesh: &PolyMesh, values: &[f64]) -> Vec<f64> {
    if values.len() == mesh.n_faces() {
        return values.to_vec();
    }
    mesh.faces()
        .map(|f| f.iter().map(|&v| values[v as usize]).sum::<f64>() / f.len() as f64)
        .collect()
}

#[derive(Serialize)]
struct BakeReport {
    sites: BakeSites,
    densify: u32,
    charts: usize,
    samples: usize,
    target_vertices: usize,
    target_faces: usize,
    cdf_min: f64,
    cdf_max: f64,
    /// Components of the face set with cdf > 0.5.
    maxima_regions: usize,
    seeds: usize,
}

pub fn bake(cfg: &BakeConfig, quads: &Path, target: Option<&Path>, out_dir: Option<&Path>) -> Out {
    let q = load(quads)?;
    q.require_quads()?;
    let bc = build_base_complex(&q, &ComplexOptions::default())?;
    let split = ChartSplit::new(&q, &bc);
    let kind = if cfg.densify == 0 {
        FieldKind::Plain
    } else {
        FieldKind::densified(cfg.densify)?
    };
    let target = match target {
        Some(p) => load(p)?,
        None => isotropic_remesh(&q, cfg.target_edge, true)?,
    };
    let samples = bake_fields(&Fields::new(&split, kind), &target, cfg.sites)?;
    let cdf: Vec<f64> = samples.iter().map(|s| s.cdf).collect();
    let dcdf: Vec<f64> = samples.iter().map(|s| s.dcdf).collect();
    let face_cdf = face_values(&target, &cdf);
    let report = BakeReport {
        sites: cfg.sites,
        densify: cfg.densify,
        charts: bc.n_charts(),
        samples: samples.len(),
        target_vertices: target.n_vertices(),
        target_faces: target.n_faces(),
        cdf_min: cdf.iter().copied().fold(f64::INFINITY, f64::min),
        cdf_max: cdf.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        maxima_regions: superlevel_components(&target, &face_cdf, 0.5),
        seeds: detect_seeds(&face_cdf, &target, seed_radius(target.n_faces())).len(),
    };
    if let Some(dir) = out_dir {
        write_json_file(&out_file(dir, "fields.json")?, &samples)?;
        save_obj(&target, out_file(dir, "target.obj")?)?;
        for (name, values) in [("cdf.ply", &cdf), ("dcdf.ply", &dcdf)] {
            let colors: Vec<[u8; 3]> = values.iter().map(|&v| colormap(v)).collect();
            let colors = match cfg.sites {
                BakeSites::FaceCenters => Colors::PerFace(&colors),
                BakeSites::Vertices => Colors::PerVertex(&colors),
            };
            save_ply(&target, colors, out_file(dir, name)?)?;
        }
    }
    Ok(json(&report)?)
}

fn mean3(xs: impl Iterator<Item = [f64; 3]>, n: f64) -> [f64; 3] {
    let mut s = [0.0; 3];
    for x in xs {
        for k in 0..3 {
            s[k] += x[k] / n;
        }
    }
    s
}

/// One sample per face; vertex samples are averaged over each face.
fn face_samples(mesh: &PolyMesh, samples: Vec<FieldSample>) -> anyhow::Result<Vec<FieldSample>> {
    if samples.len() == mesh.n_faces() {
        return Ok(samples);
    }
    if samples.len() != mesh.n_vertices() {
        bail!(
            "field file has {} samples; the mesh has {} faces and {} vertices",
            samples.len(),
            mesh.n_faces(),
            mesh.n_vertices()
        );
    }
    Ok(mesh
        .faces()
        .map(|f| {
            let n = f.len() as f64;
            let at = |g: fn(&FieldSample) -> [f64; 3]| {
                mean3(f.iter().map(|&v| g(&samples[v as usize])), n)
            };
            let normal = quadkit::geom::Vec3::from(at(|s| s.normal)).normalize();
            let pos = at(|s| s.pos);
            // offsets are re-anchored at the face center
            let c = at(|s| {
                (quadkit::geom::Vec3::from(s.pos) + quadkit::geom::Vec3::from(s.off_c)).into()
            });
            let dc = at(|s| {
                (quadkit::geom::Vec3::from(s.pos) + quadkit::geom::Vec3::from(s.off_dc)).into()
            });
            FieldSample {
                pos,
                normal: normal.into(),
                cdf: f.iter().map(|&v| samples[v as usize].cdf).sum::<f64>() / n,
                dcdf: f.iter().map(|&v| samples[v as usize].dcdf).sum::<f64>() / n,
                gcdf: at(|s| s.gcdf),
                gdcdf: at(|s| s.gdcdf),
                off_c: [c[0] - pos[0], c[1] - pos[1], c[2] - pos[2]],
                off_dc: [dc[0] - pos[0], dc[1] - pos[1], dc[2] - pos[2]],
            }
        })
        .collect())
}

fn save_clusters(
    mesh: &PolyMesh,
    part: &ClusterPartition,
    seed: u64,
    path: &Path,
) -> anyhow::Result<()> {
    let colors: Vec<[u8; 3]> = part
        .face_cluster
        .iter()
        .map(|&c| palette(c as u64, seed))
        .collect();
    save_ply(mesh, Colors::PerFace(&colors), path)?;
    Ok(())
}

#[derive(Serialize)]
struct ExtractReport {
    seeds: usize,
    clusters: usize,
    merges: usize,
    layout_faces: usize,
    layout_corners: usize,
    layout_sides: usize,
    non_quad_faces: usize,
    subdivision_levels: u32,
    refined_faces: usize,
    warnings: Vec<String>,
}

pub fn extract(cfg: &PipelineConfig, fields: &Path, mesh: &Path, out_dir: Option<&Path>) -> Out {
    let m = load(mesh)?;
    if !m.is_pure_tri() {
        return Err(anyhow::anyhow!("triangle mesh required: {}", mesh.display()).into());
    }
    let file =
        File::open(fields).with_context(|| format!("opening field file {}", fields.display()))?;
    let samples: Vec<FieldSample> = serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("parsing {}", fields.display()))?;
    let samples = face_samples(&m, samples)?;
    let cdf: Vec<f64> = samples.iter().map(|s| s.cdf).collect();
    let r = cfg
        .extract
        .seed_radius
        .unwrap_or_else(|| seed_radius(m.n_faces()));
    let seeds = detect_seeds(&cdf, &m, r);
    let part = cluster_faces(&m, &samples, &seeds, &cfg.extract.cluster)?;
    let layout = extract_layout(&m, &part, &cfg.extract.layout)?;
    let collapsed = collapse_to_quads(&layout);
    let refined = refine(&collapsed, &m, &cfg.extract.refine)?;
    if let Some(dir) = out_dir {
        collapsed.save_obj(out_file(dir, "layout.obj")?)?;
        save_obj(&refined.mesh, out_file(dir, "refined.obj")?)?;
        save_clusters(&m, &part, cfg.seed, &out_file(dir, "clusters.ply")?)?;
    }
    Ok(json(&ExtractReport {
        seeds: seeds.len(),
        clusters: part.n_clusters(),
        merges: part.merges,
        layout_faces: layout.n_faces(),
        layout_corners: collapsed.n_corners(),
        layout_sides: collapsed.n_sides(),
        non_quad_faces: collapsed.n_non_quads(),
        subdivision_levels: refined.levels,
        refined_faces: refined.mesh.n_faces(),
        warnings: layout.warnings.clone(),
    })?)
}

pub fn roundtrip(
    opts: &RoundTripOptions,
    seed: u64,
    quads: &Path,
    check: bool,
    dump: Option<&Path>,
) -> Out {
    let q = load(quads)?;
    let rt = run_roundtrip(&q, opts)?;
    if let Some(dir) = dump {
        save_obj(&rt.remeshed, out_file(dir, "remeshed.obj")?)?;
        write_json_file(&out_file(dir, "fields.json")?, &rt.samples)?;
        save_clusters(
            &rt.remeshed,
            &rt.partition,
            seed,
            &out_file(dir, "clusters.ply")?,
        )?;
        rt.layout.save_obj(out_file(dir, "layout.obj")?)?;
        save_obj(&rt.refined.mesh, out_file(dir, "refined.obj")?)?;
    }
    let report = json(&rt.report)?;
    if check && !(rt.report.success() && rt.report.s_l_out == 1.0) {
        return Err(Failure::Gate(report));
    }
    Ok(report)
}

pub fn tri2quad(mesh: &Path, out: Option<&Path>) -> Out {
    let m = load(mesh)?;
    let qd = tri_to_quad(&m)?;
    if let Some(p) = out {
        save_obj(&qd.mesh, p)?;
    }
    Ok(json(&qd.stats())?)
}

fn mesh_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            mesh_files(root, &path, out)?;
        } else if matches!(
            path.extension()
                .and_then(|e| e.to_str())
                .map(|e| e.to_ascii_lowercase())
                .as_deref(),
            Some("obj" | "ply")
        ) {
            out.push(path.strip_prefix(root)?.to_path_buf());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct CurateSummary {
    meshes: usize,
    kept: usize,
    rejected: BTreeMap<String, usize>,
}

pub fn curate(opts: &CurationOptions, dir: &Path, out_dir: Option<&Path>) -> Out {
    if !dir.is_dir() {
        return Err(anyhow::anyhow!("not a directory: {}", dir.display()).into());
    }
    let mut files = Vec::new();
    mesh_files(dir, dir, &mut files)?;
    files.sort();
    let mut inputs = Vec::new();
    let mut records = Vec::new();
    for rel in &files {
        let name = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        match load(&dir.join(rel)) {
            Ok(m) => inputs.push((name, m)),
            Err(e) => records.push(ManifestRecord {
                path: name,
                keep: false,
                reason: Some("load".into()),
                duplicate_of: None,
                verdict: None,
                error: Some(format!("{e:#}")),
            }),
        }
    }
    records.extend(curate_meshes(&inputs, opts));
    records.sort_by(|a, b| a.path.cmp(&b.path));

    let mut rejected = BTreeMap::new();
    for r in records.iter().filter(|r| !r.keep) {
        *rejected
            .entry(r.reason.clone().unwrap_or_default())
            .or_insert(0) += 1;
    }
    if let Some(out) = out_dir {
        let mut w = BufWriter::new(File::create(out_file(out, "manifest.jsonl")?)?);
        for r in &records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w)?;
        }
        w.flush()?;
        let kept: Vec<_> = records
            .iter()
            .filter(|r| r.keep)
            .filter_map(|r| r.verdict.as_ref())
            .collect();
        let s_l: Vec<f64> = kept.iter().map(|v| v.measured.s_l).collect();
        let n_c: Vec<usize> = kept.iter().map(|v| v.measured.n_c).collect();
        std::fs::write(
            out_file(out, "s_l_histogram.csv")?,
            histogram_csv(&s_l, 0.0, 1.0, 20),
        )?;
        std::fs::write(
            out_file(out, "n_c_histogram.csv")?,
            chart_histogram_csv(&n_c),
        )?;
    }
    Ok(json(&CurateSummary {
        meshes: records.len(),
        kept: records.iter().filter(|r| r.keep).count(),
        rejected,
    })?)
}

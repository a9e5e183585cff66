//! `quadkit` command-line front end.
//!
//! Every command prints a JSON report on stdout. Exit codes: 0 success, 1
//! quality gate failure (`roundtrip --check`), 2 input or processing error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;

#[derive(Parser, Debug)]
#[command(
    name = "quadkit",
    version,
    about = "Quad layout metrics, chart distance fields, layout extraction and curation"
)]
struct Cli {
    /// Seed for samplers and palettes; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// TOML config file; flags take precedence.
    #[arg(long, global = true, env = "QUADKIT_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Loop simplicity, chart count and quality of a quad mesh.
    Metrics {
        mesh: PathBuf,
        /// Reference surface for the Hausdorff distance.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Vertex, face, boundary, genus and layout counts of any mesh.
    Topology { mesh: PathBuf },
    /// Bakes the chart distance fields of a quad mesh onto a target mesh.
    Bake {
        quads: PathBuf,
        /// Target mesh; an isotropic remesh of the input when absent.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Densification factor (0 for the plain fields).
        #[arg(long)]
        densify: Option<u32>,
        /// Bake at target vertices instead of face centers.
        #[arg(long)]
        vertices: bool,
        /// Directory for fields.json, target.obj, cdf.ply and dcdf.ply.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Extracts a quad layout from baked fields and refines it.
    Extract {
        /// Field file written by `bake`.
        fields: PathBuf,
        /// Triangle mesh the fields were baked on.
        mesh: PathBuf,
        /// Directory for layout.obj, refined.obj and clusters.ply.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Bake, extract, refine and compare with the input layout.
    Roundtrip {
        quads: PathBuf,
        /// Uniform noise amplitude added to the baked distance field.
        #[arg(long)]
        noise: Option<f64>,
        /// Exit with 1 unless the layout is recovered with S_l = 1.
        #[arg(long)]
        check: bool,
        /// Directory for intermediate meshes and fields.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Merges triangle pairs into quads.
    Tri2quad {
        mesh: PathBuf,
        /// Output OBJ with mixed faces.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalizes, deduplicates and filters every mesh under a directory.
    Curate {
        dir: PathBuf,
        /// Directory for manifest.jsonl and the histogram CSVs.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Prints the effective configuration as TOML.
    Config,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Gate(String),
    Input(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()?;
    }
    let cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    }
    .with_seed(cli.seed);
    match cli.command {
        Command::Metrics { mesh, reference } => {
            commands::metrics(&cfg, &mesh, reference.as_deref())
        }
        Command::Topology { mesh } => commands::topology(&cfg, &mesh),
        Command::Bake {
            quads,
            target,
            densify,
            vertices,
            out_dir,
        } => {
            let mut bake = cfg.bake.clone();
            if let Some(d) = densify {
                bake.densify = d;
            }
            if vertices {
                bake.sites = quadkit::fields::BakeSites::Vertices;
            }
            commands::bake(&bake, &quads, target.as_deref(), out_dir.as_deref())
        }
        Command::Extract {
            fields,
            mesh,
            out_dir,
        } => commands::extract(&cfg, &fields, &mesh, out_dir.as_deref()),
        Command::Roundtrip {
            quads,
            noise,
            check,
            dump,
        } => {
            let mut opts = cfg.roundtrip.clone();
            if let Some(n) = noise {
                opts.noise = n;
            }
            commands::roundtrip(&opts, cfg.seed, &quads, check, dump.as_deref())
        }
        Command::Tri2quad { mesh, out } => commands::tri2quad(&mesh, out.as_deref()),
        Command::Curate { dir, out_dir } => {
            commands::curate(&cfg.curation, &dir, out_dir.as_deref())
        }
        Command::Config => Ok(cfg.dump()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Gate(report)) => {
            println!("{report}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! Pipeline configuration file.
//!
//! Every section falls back to the library defaults, so a config file only
//! needs the values it changes. The top-level `seed` replaces the seeds of
//! the individual sections.

use std::path::Path;

use anyhow::{Context, Result};
use quadkit::curation::CurationOptions;
use quadkit::extract::{ClusterOptions, LayoutOptions, RefineOptions, RoundTripOptions};
use quadkit::fields::BakeSites;
use quadkit::metrics::{TurningMode, DEFAULT_HAUSDORFF_SAMPLES};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub turning: TurningMode,
    pub hausdorff_samples: usize,
    /// Dihedral angle in degrees above which edges cut charts.
    pub sharp_angle: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            turning: TurningMode::default(),
            hausdorff_samples: DEFAULT_HAUSDORFF_SAMPLES,
            sharp_angle: quadkit::mesh::sharp::DEFAULT_SHARP_ANGLE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BakeConfig {
    /// Remesh edge length relative to the bounding-box diagonal, used when
    /// no target mesh is given.
    pub target_edge: f64,
    pub sites: BakeSites,
    /// Densification factor; zero bakes the plain fields.
    pub densify: u32,
}

impl Default for BakeConfig {
    fn default() -> Self {
        BakeConfig {
            target_edge: 0.02,
            sites: BakeSites::FaceCenters,
            densify: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    /// Seed detection radius; scaled with the face count when unset.
    pub seed_radius: Option<usize>,
    pub cluster: ClusterOptions,
    pub layout: LayoutOptions,
    pub refine: RefineOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub metrics: MetricsConfig,
    pub bake: BakeConfig,
    pub roundtrip: RoundTripOptions,
    pub extract: ExtractConfig,
    pub curation: CurationOptions,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn dump(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Propagates the top-level seed into the sections that sample.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.roundtrip.seed = self.seed;
        self.curation.seed = self.seed;
        self
    }
}

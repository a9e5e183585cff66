//! Quad-layout processing: half-edge meshes and base complexes, loop
//! simplicity metrics, chart distance fields, triangle-to-quad recovery,
//! layout extraction from fields, and corpus curation.

pub mod corpus;
pub mod curation;
pub mod error;
pub mod extract;
pub mod fields;
pub mod geom;
pub mod mesh;
pub mod metrics;
pub mod tri2quad;

pub use error::{Error, Result};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("non-manifold edges: {}", format_edges(.edges))]
    NonManifold { edges: Vec<(u32, u32)> },

    #[error("mesh is not orientable")]
    NonOrientable,

    #[error("quad mesh required: face {face} has {degree} vertices")]
    NotQuad { face: usize, degree: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{} query points lie farther than {max_dist:.6} from the quad surface (first indices: {:?})", .indices.len(), &.indices[..indices.len().min(16)])]
    TooFar { indices: Vec<usize>, max_dist: f64 },

    #[error("no seeds found")]
    NoSeeds,

    #[error("layout extraction failed: {0}")]
    Layout(String),
}

fn format_edges(edges: &[(u32, u32)]) -> String {
    let shown: Vec<String> = edges
        .iter()
        .take(16)
        .map(|(a, b)| format!("({a},{b})"))
        .collect();
    if edges.len() > 16 {
        format!("{} ... ({} total)", shown.join(" "), edges.len())
    } else {
        shown.join(" ")
    }
}

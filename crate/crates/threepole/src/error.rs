use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: malformed OBJ record: {msg}", path.display())]
    ObjParse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("mesh has no non-degenerate triangles")]
    EmptyMesh,

    #[error("spatial index built over an empty triangle subset")]
    EmptySubset,

    #[error("octree depth {0} outside supported range 1..=12")]
    DepthOutOfRange(u32),

    #[error("point {0:?} lies outside the octree root cube")]
    OutsideRootCube([f64; 3]),

    #[error("mesh is not watertight: {0} edge(s) without exactly two incident faces")]
    NotWatertight(usize),

    #[error("query point is within {0:.1e} of the surface; parity is unreliable")]
    OnSurface(f64),

    #[error("ray parity inconclusive after {0} jittered directions")]
    ParityInconclusive(usize),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{}: bad magic, expected {expected:?}", path.display())]
    BadMagic { path: PathBuf, expected: [u8; 4] },

    #[error("{}: truncated or inconsistent payload: {msg}", path.display())]
    BadPayload { path: PathBuf, msg: String },

    #[error("point sets must be non-empty and equally sized (got {0} and {1})")]
    BadPointSets(usize, usize),

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

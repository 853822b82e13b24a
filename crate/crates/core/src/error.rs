use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {format} mesh at line {line}: {message}")]
    MeshParse {
        format: &'static str,
        line: usize,
        message: String,
    },

    #[error("non-manifold edge ({0}, {1}) is shared by {2} triangles")]
    NonManifold(usize, usize, usize),

    #[error("mesh orientation cannot be made consistent: {0}")]
    Orientation(String),

    #[error("triangle {index} is degenerate (area {area:e} m^2)")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("mesh would need {required} triangles, above the cap of {cap}")]
    TooManyTriangles { required: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies outside triangle {triangle} (barycentric {bary:?})")]
    PointOutsideTriangle { triangle: usize, bary: [f64; 3] },

    #[error("{solver} did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("matrix is not symmetric positive definite (curvature {0:e})")]
    NotPositiveDefinite(f64),

    #[error("matrix is singular to working precision")]
    Singular,

    #[error("far-field grids differ: {0}")]
    GridMismatch(String),

    #[error("observation point {index} is {distance:e} m from the surface (minimum {minimum:e} m)")]
    PointTooClose {
        index: usize,
        distance: f64,
        minimum: f64,
    },

    #[error("Mie series truncated at order {order} has not converged (ka = {ka})")]
    MieTruncation { order: usize, ka: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// The innermost error beneath any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn in_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into().display().to_string(),
            source,
        }
    }
}

/// Attaches a stage name to the error of a [`Result`].
pub trait StageExt<T> {
    fn stage(self, stage: &str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}

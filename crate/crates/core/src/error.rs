use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the discretization and solver stack.
#[derive(Debug, Error)]
pub enum SplError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("singular evaluation at node {node}: value {value:e} is not positive")]
    SingularEvaluation { node: usize, value: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("{0}")]
    Construction(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<SplError>,
    },

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, SplError>;

impl SplError {
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        SplError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SplError::Io {
            path: path.into(),
            source,
        }
    }

    /// Name of the innermost pipeline stage, if the error was stage-tagged.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            SplError::Stage { stage, source } => source.stage().or(Some(stage)),
            _ => None,
        }
    }

    pub fn is_config(&self) -> bool {
        match self {
            SplError::Config(_) | SplError::InvalidParameter { .. } | SplError::Io { .. } => true,
            SplError::UnsupportedDomain(_) => true,
            SplError::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

/// Attaches a pipeline stage name to an error.
pub trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| SplError::Stage {
            stage,
            source: Box::new(e),
        })
    }
}

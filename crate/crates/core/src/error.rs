use crate::propagators::EnergySeries;

pub type Result<T> = std::result::Result<T, KhoError>;

/// Partial output of an evolution that left the grid.
#[derive(Debug, Clone)]
pub struct Truncation {
    /// Last kick whose record is trustworthy.
    pub kick: usize,
    /// Tail mass measured after the offending step.
    pub tail_mass: f64,
    pub partial: EnergySeries,
}

#[derive(Debug, thiserror::Error)]
pub enum KhoError {
    #[error("invalid signal length {len}: must be even and at least 4")]
    InvalidLength { len: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension {n} exceeds the configured cap {cap}")]
    ResourceCap { n: usize, cap: usize },

    #[error(
        "state left the grid after kick {}: tail mass {:.3e} in the outer 5%",
        .0.kick + 1,
        .0.tail_mass
    )]
    Truncated(Box<Truncation>),

    #[error("classical trajectory overflowed at kick {kick}")]
    Overflow { kick: usize },

    #[error("eigendecomposition failed: {certified} of {total} eigenpairs certified")]
    NoConvergence { certified: usize, total: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl KhoError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        KhoError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

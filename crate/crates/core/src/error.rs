use std::path::PathBuf;

use crate::lattice::Site;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("window of {sites} sites exceeds the budget of {max}")]
    WindowBudget { sites: u64, max: u64 },

    #[error("invalid window [{x1_min},{x1_max}]x[{x2_min},{x2_max}]")]
    InvalidWindow {
        x1_min: i64,
        x1_max: i64,
        x2_min: i64,
        x2_max: i64,
    },

    #[error("growth exponent must lie in (0,1), got {0}")]
    InvalidGrowth(f64),

    #[error("set specification: {0}")]
    SetSpec(String),

    #[error("truncation of width {n} has {sites} sites, budget is {max}")]
    SiteBudget { n: i64, sites: usize, max: usize },

    #[error("linear solve did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    #[error("problem size {size} exceeds guard {max}")]
    SizeGuard { size: usize, max: usize },

    #[error("negative equilibrium mass {mass:e} at {site}")]
    NegativeMass { site: Site, mass: f64 },

    #[error("singular or ill-conditioned system: {0}")]
    Singular(String),

    #[error("potential kernel radius {requested} exceeds budget {max}")]
    KernelBudget { requested: i64, max: i64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

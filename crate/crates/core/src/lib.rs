//! Simulation of cadlag infinitely divisible and symmetric alpha-stable
//! processes by truncated shot-noise / LePage series, with exact jump
//! tracking and distributional verification of the closed-form laws of
//! jump functionals (Frechet extremes, positive stable p-variation).

pub mod cli;
pub mod criterion;
pub mod kernel;
pub mod measure;
pub mod path;
pub mod reference;
pub mod rng;
pub mod series;
pub mod stats;

pub use kernel::{Kernel, LepageIntegrand, SeriesIntegrand};
pub use measure::ControlMeasure;
pub use path::{CadlagPath, JumpEntry, JumpLedger};
pub use rng::RngStream;
pub use series::{SeriesConfig, Truncation};

/// Tool version recorded in every output file header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("alpha must lie in (0,2), got {0}")]
    AlphaOutOfRange(f64),
    #[error("alpha must lie in (1,2) for the cadlag criterion, got {0}")]
    AlphaOutsideCriterionRange(f64),
    #[error("stability index must lie in (0,1), got {0}")]
    PositiveStableIndexOutOfRange(f64),
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("{0}")]
    InvalidMeasure(String),
    #[error("{0}")]
    InvalidKernel(String),
    #[error("paths have different grids and resampling is disabled")]
    GridMismatch,
    #[error("centering table was computed for u = {table_u} but the series is truncated at u = {config_u}")]
    CenteringLevelMismatch { table_u: f64, config_u: f64 },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("V_p is a.s. infinite for p = {p} <= alpha = {alpha} unless the kernel is continuous")]
    VariationDivergent { p: f64, alpha: f64 },
    #[error("j_max = {j_max} needs {needed} partition points, above the limit of {limit}")]
    DemoTooLarge { j_max: u32, needed: u64, limit: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

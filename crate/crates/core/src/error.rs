use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("drive is singular at imaginary time {tau} (pole at {pole})")]
    Singularity { tau: f64, pole: f64 },
    #[error("branch tracking lost near u = {re} + {im}i")]
    BranchTracking { re: f64, im: f64 },
    #[error("no saddle found for x = {x}, t = {t}")]
    SaddleNotFound { x: f64, t: f64 },
    #[error("no root in (0, {edge})")]
    NoRoot { edge: f64 },
    #[error("potential stays below the energy on the probe grid")]
    NoBarrier,
    #[error("shooting diverged, best residual {best_residual:e}")]
    ShootingDiverged { best_residual: f64 },
    #[error("short-pulse condition fails; static exponent {action}")]
    NoExtremum { action: f64 },
    #[error("expected two allowed regions, found {found}")]
    Topology { found: usize },
    #[error("path minimization stalled, gradient norm {grad_norm:e}")]
    MinimizationStalled { grad_norm: f64 },
    #[error("no turning points at the wall")]
    NoRoots,
    #[error("turning points in the wrong order: y0 = {y0}, y1 = {y1}")]
    RootOrder { y0: f64, y1: f64 },
    #[error("no sign change of A1 on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Stable name written into run summaries.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Singularity { .. } => "SingularityError",
            Error::BranchTracking { .. } => "BranchTrackingError",
            Error::SaddleNotFound { .. } => "SaddleNotFoundError",
            Error::NoRoot { .. } => "NoRootError",
            Error::NoBarrier => "NoBarrierError",
            Error::ShootingDiverged { .. } => "ShootingDivergedError",
            Error::NoExtremum { .. } => "NoExtremumError",
            Error::Topology { .. } => "TopologyError",
            Error::MinimizationStalled { .. } => "MinimizationStalledError",
            Error::NoRoots => "NoRootsError",
            Error::RootOrder { .. } => "RootOrderError",
            Error::NoSignChange { .. } => "NoSignChangeError",
            Error::Invalid(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

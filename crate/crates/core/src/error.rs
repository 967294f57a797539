use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 16")]
    GridSize(usize),
    #[error("half-width must be positive and finite, got {0}")]
    HalfWidth(f64),
    #[error("sample values length {got} does not match grid size {expected}")]
    Length { expected: usize, got: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("Lebesgue index must satisfy p >= 1, got {0}")]
    LebesgueIndex(f64),
    #[error("moment order {0} exceeds 4; tail truncation makes it unreliable")]
    MomentOrder(usize),
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("trajectory times must start at 0 and increase strictly")]
    TrajectoryTimes,
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("nonlinearity exponent p = {0} outside (1, 3]")]
    Exponent(f64),
    #[error("no root of the defining equation above 1 (right-hand side {0})")]
    Horizon(f64),
    #[error("data does not decay at the boundary: edge/max ratio {0:.3e}")]
    Truncation(f64),
    #[error("fit needs at least {needed} points, got {got}")]
    FitPoints { needed: usize, got: usize },
    #[error("fit rejected: r^2 = {0:.4}")]
    FitRejected(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run did not blow up before t = {0}")]
    NoBlowup(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

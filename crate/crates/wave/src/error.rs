use hyperfront_core::front::FrontError;
use hyperfront_core::grid::GridError;
use hyperfront_core::solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("rotation {theta} exceeds the admissible angle {limit}")]
    RotationOutOfRange { theta: f64, limit: f64 },
    #[error("lid equation did not converge (residual {residual:e})")]
    NewtonDivergence { residual: f64 },
    #[error("water depth {depth} under the body at x = {x}")]
    DryInterior { x: f64, depth: f64 },
    #[error("wetted interval of width {width} is below {minimum}")]
    ContactCollision { width: f64, minimum: f64 },
    #[error("contact point {position} left the lid interval [{lower}, {upper}]")]
    LidOverrun { position: f64, lower: f64, upper: f64 },
    #[error("contact is degenerate: jump of the elevation slope is {0:e}")]
    DegenerateContact(f64),
    #[error("flow at a moving wall or contact is no longer subcritical: margins {plus}, {minus}")]
    SubsonicityLoss { plus: f64, minus: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid lid description: {0}")]
    InvalidLid(String),
    #[error(transparent)]
    Front(#[from] FrontError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

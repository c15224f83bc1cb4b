use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("cycle grid needs at least 3 vertices, got {0} (n too small)")]
    TooFewVertices(usize),

    #[error("{what} must be strictly positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("graph is disconnected: vertex {0} is not reachable from vertex 0")]
    Disconnected(usize),

    #[error("invalid edge ({i}, {j}): {reason}")]
    InvalidEdge { i: usize, j: usize, reason: &'static str },

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("operands live on different spaces")]
    SpaceMismatch,

    #[error("{what} requires a cycle grid")]
    RequiresGrid { what: &'static str },

    #[error("compositional Laplacian style is only available on cycle grids")]
    StyleUnsupported,

    #[error("density is not normalized: total mass {mass}")]
    NotNormalized { mass: f64 },

    #[error("density must be strictly positive: rho[{index}] = {value}")]
    NotPositive { index: usize, value: f64 },

    #[error("tangent vector has nonzero total mass {mass}")]
    NonzeroMass { mass: f64 },

    #[error("right-hand side is not mean-zero: mu-mean {mean} (scale {scale})")]
    NotMeanZero { mean: f64, scale: f64 },

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("linear system is singular")]
    Singular,

    #[error("perturbed measure leaves the positive cone (step {step:e})")]
    LeftPositiveCone { step: f64 },

    #[error("geodesic exits the open simplex at t = {time}: rho[{index}] = {value:e}")]
    GeodesicExit { time: f64, index: usize, value: f64 },

    #[error("parameter {name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("dense assembly is capped at {cap} vertices, got {got}")]
    TooLarge { cap: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

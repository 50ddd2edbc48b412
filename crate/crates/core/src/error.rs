//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration (bad parameter, mismatched formulation/node kind, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A nodal state violates positivity of density or pressure.
    #[error("non-physical state{}: rho = {rho:.6e}, pressure = {pressure:.6e}", location_suffix(*.element, *.node))]
    InvalidState {
        rho: f64,
        pressure: f64,
        /// Element index, when known.
        element: Option<usize>,
        /// Node index within the element, when known.
        node: Option<usize>,
    },

    /// Mesh geometry is invalid (folded mapping, negative Jacobian, ...).
    #[error("invalid mesh geometry in element {element}: {detail}")]
    MeshInvalid { element: usize, detail: String },

    /// Mesh file could not be parsed.
    #[error("mesh parse error at byte offset {offset}: {detail}")]
    MeshParse { offset: u64, detail: String },

    /// A boundary tag is not one of the legal kinds.
    #[error("unknown boundary kind `{tag}`; legal kinds are Inflow, Outflow, FreeSlipWall, NoSlipWall, MovingWall, Periodic")]
    UnknownBcTag { tag: String },

    /// The time integration produced an invalid state.
    #[error("divergence detected at step {step}, RK stage {stage}: {detail}")]
    Divergence {
        step: usize,
        stage: usize,
        detail: String,
    },

    /// Not enough samples/data to carry out the requested reduction.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A probe location lies outside the mesh.
    #[error("out of range: {0}")]
    OutOfRange(String),

    /// Apples-to-oranges comparison (mismatched meshes, missing formulation, ...).
    #[error("comparison error: {0}")]
    Comparison(String),

    /// A sampled time series is not uniformly spaced.
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location_suffix(element: Option<usize>, node: Option<usize>) -> String {
    match (element, node) {
        (Some(e), Some(n)) => format!(" at element {e}, node {n}"),
        (Some(e), None) => format!(" at element {e}"),
        _ => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

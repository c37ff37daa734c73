//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // lattice
    #[error("intersection of all lattice elements is {dim}-dimensional, not {{0}}")]
    NonTrivialIntersection { dim: usize },
    #[error("generator basis is rank-deficient (rank {rank} < {cols} columns)")]
    DegenerateGenerator { rank: usize, cols: usize },
    #[error("invalid lattice element index {0}")]
    BadElement(usize),

    // model
    #[error("spec invalid: {0}")]
    SpecInvalid(String),
    #[error("λ = {lambda} is a critical value: |dV~_{channel}/dθ| = {derivative:.3e} at root θ = {theta}")]
    CriticalValue {
        channel: usize,
        theta: f64,
        derivative: f64,
        lambda: f64,
    },
    #[error("cutoff width {width} too large: minimal crossing separation is {separation}")]
    WidthTooLarge { width: f64, separation: f64 },
    #[error("β = {beta} too large: weight positivity margin {margin} < 1/2")]
    BetaTooLarge { beta: f64, margin: f64 },

    // discretize
    #[error("operator shapes mismatch: {0} vs {1}")]
    ShapeMismatch(usize, usize),
    #[error("operation requires many-body mode")]
    NotManyBody,
    #[error("Graf property {property} violated at x = {point:?}: {detail}")]
    PropertyViolated {
        property: u8,
        point: Vec<f64>,
        detail: String,
    },

    // spectral
    #[error("eigensolver failure: {0}")]
    EigensolverFailure(String),
    #[error("λ = {lambda} is below Σ = {sigma}")]
    BelowSigma { lambda: f64, sigma: f64 },
    #[error("threshold recursion exceeded lattice depth (malformed order relation)")]
    RecursionDepth,
    #[error("box half-width {half_width} too small for Weyl bump at scale k = {k}")]
    BoxTooSmall { half_width: f64, k: f64 },

    // dynamics
    #[error("propagation tolerance failure: {0}")]
    ToleranceFailure(String),
    #[error("filter annihilates the seed state (‖f(P)ψ‖/‖ψ‖ = {ratio:.3e})")]
    EmptyFilter { ratio: f64 },
    #[error("fit window too short: {0}")]
    WindowTooShort(String),
    #[error("gap d = {d} is not positive after subtracting ε = {epsilon}")]
    GapNonpositive { d: f64, epsilon: f64 },

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the solver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("potential violates its standing assumptions: {0}")]
    Assumption(String),

    #[error("projection onto the zero level set degenerated: |DW| = {grad_norm:.3e} at {point:?}")]
    DegenerateProjection { point: Vec<f64>, grad_norm: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("profile never enters the negative region of the potential")]
    NoCrossing,

    #[error("weight e^(c x) overflows: c * x_right = {0:.1} > 600; use weight normalization or a shorter grid")]
    WeightOverflow(f64),

    #[error("minimizer violates W >= 0 on x > 0 by {violation:.3e} (tolerance {tolerance:.1e})")]
    InfeasibleMinimizer { violation: f64, tolerance: f64 },

    #[error("no sign change of gamma found; probes (c, gamma): {probes:?}")]
    BracketFailure { probes: Vec<(f64, f64)> },

    #[error("|gamma({c})| = {gamma:.3e} exceeds {tolerance:.3e}: not a traveling wave; locate the speed first")]
    NotAWave { c: f64, gamma: f64, tolerance: f64 },

    #[error("right tail has only {found} usable nodes (need {needed}); profile has not settled at the well")]
    Tail { found: usize, needed: usize },

    #[error("shooting trajectory diverged at x = {x:.3}")]
    ShootingDivergence { x: f64 },

    #[error("profile I/O: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, WaveError>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A specification or argument violates a documented invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A position falls outside the cavity.
    #[error("position {position_m} m is outside the cavity (|x| <= {bound_m} m)")]
    OutOfCavity { position_m: f64, bound_m: f64 },

    /// The optical potential has no restoring force at the requested point.
    #[error("unstable trap: {0}")]
    UnstableTrap(String),

    /// Effective frequency squared went negative (anti-restoring spring).
    #[error("anti-restoring optical spring: omega_eff^2 = {omega_eff_sq} (rad/s)^2 at omega = {omega} rad/s")]
    AntiRestoring { omega_eff_sq: f64, omega: f64 },

    /// Two spectra were combined with different frequency grids.
    #[error("frequency grid mismatch: {0}")]
    GridMismatch(String),

    /// Adaptive quadrature failed to converge.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A root find has no solution in the admissible domain.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// A spectrum has no usable resonance peak.
    #[error("no resonance found: {0}")]
    NoResonance(String),

    /// A least-squares problem is too ill-conditioned to solve.
    #[error("ill-conditioned fit (condition number {condition:.3e}): {detail}")]
    IllConditioned { condition: f64, detail: String },

    /// The stochastic integrator detected a diverging trajectory.
    #[error("simulation diverged at t = {time_s} s: |x| = {x_m} m exceeds {limit_m} m")]
    Diverged { time_s: f64, x_m: f64, limit_m: f64 },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("potential vanishes identically")]
    ZeroPotential,

    #[error("potential takes negative value {min:.3e} at theta = {theta:.6}")]
    NegativePotential { min: f64, theta: f64 },

    #[error("curves {a} and {b} intersect or touch (separation {distance:.3e})")]
    CurveIntersection { a: usize, b: usize, distance: f64 },

    #[error("potential vanishes on the complement of the region")]
    ComplementPotentialVanishes,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("configuration error: {0}")]
    Config(#[from] serde_json::Error),

    #[error("cross-section ground state {mu0:.3e} is not positive")]
    NonPositiveGroundState { mu0: f64 },

    #[error("points coincide (separation {distance:.3e})")]
    CoincidentPoints { distance: f64 },

    #[error("truncation half-length {half_length} below required {required:.3}")]
    TruncationTooShort { half_length: f64, required: f64 },

    #[error("curve parameterization degenerates (min speed {min_speed:.3e})")]
    IrregularCurve { min_speed: f64 },

    #[error("offset {t} exceeds admissible bound {eps_max:.4}")]
    OffsetTooLarge { t: f64, eps_max: f64 },

    #[error("diagonal extrapolation unstable at node {node} (relative spread {spread:.3e})")]
    ExtrapolationUnstable { node: usize, spread: f64 },

    #[error("evaluation point too close to boundary (distance {distance:.3e})")]
    TooCloseToBoundary { distance: f64 },

    #[error("system ill-conditioned (condition estimate {cond:.3e} >= {limit:.1e})")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("operator family singular at tau = {tau} (condition {cond:.3e})")]
    SingularFamily { tau: f64, cond: f64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("volume source support too close to boundary (distance {distance:.3e})")]
    SourceTooClose { distance: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

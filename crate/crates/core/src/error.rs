//! Crate-wide error type.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Evaluation point is within machine-distinguishable distance of a pole.
    #[error("evaluation point {z} hits pole {pole} (distance {dist:.3e})")]
    PoleHit { z: Complex64, pole: Complex64, dist: f64 },

    /// The generator cannot certify the requested tolerance; best achievable bound attached.
    #[error("requested tolerance {tol:.3e} unreachable, best certified bound {best:.3e}")]
    ToleranceUnreachable { tol: f64, best: f64 },

    /// Pole data invalid at construction.
    #[error("invalid pole data: {0}")]
    InvalidPoleData(String),

    /// Radius lies in the exclusion set F.
    #[error("radius {r} lies in the exclusion set")]
    ExcludedRadius { r: f64 },

    /// Pole at the origin violates the normalization 0 ∉ T required here.
    #[error("pole at the origin: operation requires 0 outside the pole set")]
    PoleAtOrigin,

    /// Normalizing sum Σcₙ is too small to compare against (the Σcₙ = 0 regime).
    #[error("coefficient sum too small to normalize against (|S| = {s_abs:.3e})")]
    Normalization { s_abs: f64 },

    /// Contour boundary passes too close to a pole or zero.
    #[error("contour boundary within clearance of pole/zero at {near} (distance {dist:.3e}); suggest inflating by {nudge:.3e}")]
    ClearanceViolation { near: Complex64, dist: f64, nudge: f64 },

    /// Argument tracking could not resolve a phase step below π/2.
    #[error("winding resolution failure: phase step {step:.3} rad at parameter {t}")]
    WindingResolution { t: f64, step: f64 },

    /// Raw winding too far from an integer to accept.
    #[error("winding rejected: raw value {raw} is {defect:.3} from the nearest integer")]
    WindingRejected { raw: f64, defect: f64 },

    /// Quadrature error estimate above the requested tolerance within budget.
    #[error("quadrature budget exhausted: error estimate {err:.3e} > tolerance {tol:.3e}")]
    QuadBudget { err: f64, tol: f64 },

    /// Subsequence selection or octave sums requested beyond certified range.
    #[error("insufficient certified range: {0}")]
    InsufficientCertification(String),

    /// Least-squares fit is too ill-conditioned to trust.
    #[error("ill-conditioned fit (condition estimate {cond:.3e}); request different samples")]
    IllConditionedFit { cond: f64 },

    /// Degree-zero Q has no critical rays.
    #[error("no critical rays: deg Q = 0 (constant-coefficient regime)")]
    NoRays,

    /// Sector half-angle outside (0, π/(m+2)).
    #[error("sector half-angle {alpha} outside (0, {max})")]
    AlphaOutOfRange { alpha: f64, max: f64 },

    /// Characteristic table lacks zero counts needed for a defect estimate.
    #[error("characteristic table has no zero-count column")]
    MissingZeroCounts,

    /// Column data unusable for a log-log fit.
    #[error("order estimate failed: {0}")]
    DegenerateFit(String),

    /// A zero reported by an entire handle fails the simplicity threshold.
    #[error("derivative magnitude {mag:.3e} below simplicity threshold at zero {zero}")]
    NearMultipleZero { zero: Complex64, mag: f64 },

    /// ODE continuation step could not meet its local tolerance.
    #[error("Taylor step tolerance failure at {z} (remainder estimate {rem:.3e})")]
    StepTolerance { z: Complex64, rem: f64 },

    /// Newton refinement failed to converge.
    #[error("Newton refinement failed to converge (index {index})")]
    NewtonFailed { index: usize },

    /// Computed value sits below the accumulated rounding-noise floor, so
    /// its phase carries no information.
    #[error("value {value:.3e} at {z} below rounding noise {noise:.3e}")]
    SignalBelowNoise { z: Complex64, value: f64, noise: f64 },

    /// Generic invalid-input error.
    #[error("{0}")]
    InvalidInput(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::SolveStats;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // Integration failures carry the statistics gathered up to the failure point.
    #[error("step size underflow at x = {at} (|h| = {step:e}); stiff or blowing-up solution")]
    StepUnderflow { at: f64, step: f64, stats: SolveStats },
    #[error("non-finite state at x = {at}")]
    NonFiniteState { at: f64, stats: SolveStats },
    #[error("step limit {limit} exceeded at x = {at}")]
    MaxStepsExceeded { at: f64, limit: usize, stats: SolveStats },

    #[error("consecutive phase step {phase:.3} rad at sample {index} exceeds the sampling bound; refine the contour")]
    UnderSampled { index: usize, phase: f64 },
    #[error("|D| = {abs:e} at sample {index} is below the floor; root on or near the contour")]
    NearRootOnContour { index: usize, abs: f64 },
    #[error("contour refinement depth exceeded near λ = {lambda}; root on or near the contour")]
    RefinementDepthExceeded { lambda: Complex64 },
    #[error("Newton iteration did not converge in {iterations} iterations (last iterate {last})")]
    NewtonNoConvergence { last: Complex64, iterations: usize },
    #[error("derivative magnitude {abs:e} at λ = {at} is degenerate (multiple root?)")]
    DegenerateDerivative { at: Complex64, abs: f64 },

    #[error("configuration field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("state is not admissible: {0}")]
    InadmissibleState(String),
    #[error("Chapman-Jouguet or sonic wave (discriminant min {discriminant_min:e}); only overdriven waves are supported")]
    ChapmanJouguetOrSonic { discriminant_min: f64 },
    #[error("ignition window violated: {0}")]
    InvalidIgnitionWindow(String),
    #[error("temperature {temperature} lies inside the ignition window [{low}, {high}] where the cutoff is unspecified")]
    InsideIgnitionWindow { temperature: f64, low: f64, high: f64 },
    #[error("upstream state is not supersonic relative to the shock (|u+| = {speed}, c+ = {sound})")]
    SubsonicUpstream { speed: f64, sound: f64 },

    #[error("flux Jacobian A1 is nearly characteristic (condition estimate {condition:e})")]
    NearCharacteristic { condition: f64 },
    #[error("singular resolvent in the reactant block at λ = {lambda} (reaction resonance)")]
    ReactionResonance { lambda: Complex64 },
    #[error("eigenvalue collision along the λ path at λ = {lambda}")]
    BranchAmbiguity { lambda: Complex64 },

    #[error("λ = {lambda} is outside the supported domain: {reason}")]
    Domain { lambda: Complex64, reason: String },
    #[error("unfactored adjoint mode at λ = {lambda} spans e^{exponent:.1}, beyond floating range; use the neutral method")]
    ExponentRange { lambda: Complex64, exponent: f64 },
    #[error("neutral solution grew by {growth:e} at λ = {lambda}; decay rate mis-selected")]
    NonNeutralGrowth { lambda: Complex64, growth: f64 },

    #[error("D is not resolved on the contour at λ = {lambda} (|D| = {abs:e}): a root on the contour, or D below its integration noise")]
    ContourThroughRoot { lambda: Complex64, abs: f64 },
    #[error("winding number not resolved: {coarse} on the default contour, {fine} on the doubled one; D turns too fast for the sampling")]
    UnresolvedWinding { coarse: i64, fine: i64 },
    #[error("root continuation broke down after parameter {last_good}: {reason}")]
    ContinuationBreakdown { last_good: f64, reason: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(format!("json: {e}"))
    }
}

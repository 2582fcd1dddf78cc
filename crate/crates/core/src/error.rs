use alloc::string::String;

/// Errors shared by all modules of the toolkit.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Operation needs pointwise potential values, which the chosen
    /// representation cannot provide.
    #[error("unsupported potential mode: {0}")]
    UnsupportedMode(String),

    /// The potential violates a standing hypothesis (e.g. it is constant).
    #[error("unsupported potential: {0}")]
    UnsupportedPotential(String),

    /// A quadrature or ODE integration failed to converge.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// Band-edge root bracketing failed.
    #[error("band edge search failed: {0}")]
    EdgeSearch(String),

    /// Energy outside the tabulated band range.
    #[error("energy out of tabulated range: {0}")]
    OutOfRange(String),

    /// The linear system fixing the gap-normalized momentum polynomial is
    /// singular.
    #[error("momentum normalization failed: {0}")]
    Normalization(String),

    /// An evaluation came too close to a branch point of the momentum.
    #[error("branch point too close: {0}")]
    BranchPointProximity(String),

    /// A denominator fell below its degeneracy threshold.
    #[error("near-degenerate configuration: {0}")]
    NearDegenerate(String),

    /// An integration contour intersects the spectrum or an excluded set.
    #[error("invalid contour: {0}")]
    Contour(String),

    /// The window geometry violates the band-interaction hypothesis, or a
    /// constructed curve failed to close.
    #[error("window geometry invalid: {0}")]
    Geometry(String),

    /// Two candidate determinations of the momentum could not be told apart
    /// during analytic continuation.
    #[error("continuation ambiguity: {0}")]
    ContinuationAmbiguity(String),

    /// Two independent evaluation routes disagree beyond tolerance.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// A documented invariant of the inputs does not hold.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    /// A nominally non-resonant interval sits on a quantization singularity
    /// and must be treated as resonant.
    #[error("interval must be reclassified as resonant: {0}")]
    ReclassifyAsResonant(String),

    /// A resonant analysis was requested outside its regime of validity.
    #[error("wrong resonance regime: {0}")]
    WrongRegime(String),

    /// Numerical overflow or loss of significance in a long run.
    #[error("numerics failure: {0}")]
    Numerics(String),
}

pub type Result<T> = core::result::Result<T, Error>;

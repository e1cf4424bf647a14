use num_complex::Complex64;
use thiserror::Error;

/// Failures raised by the library. Variants map one-to-one onto the
/// precondition and numerical failure modes of the individual modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("theta_inf must be nonzero")]
    ThetaInfZero,
    #[error("trace {trace} lies in a boundary class (sigma = {sigma})")]
    BoundaryClass { trace: Complex64, sigma: Complex64 },
    #[error("degenerate denominator in connection formula")]
    DegenerateDenominator,
    #[error("A^2 vanishes at sigma = {0}")]
    SingularA(Complex64),
    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),
    #[error("reciprocal of a series with vanishing leading coefficient")]
    ReciprocalOfZeroSeries,
    #[error("resonance at level {level}: {detail}")]
    Resonance { level: i32, detail: String },
    #[error("condition violated: {0}")]
    ConditionViolation(String),
    #[error("point outside the convergence domain")]
    OutsideDomain,
    #[error("denominator near zero (|den| = {0:e}); a pole is close")]
    DenominatorNearZero(f64),
    #[error("|1 - x| too small for the hypergeometric kernel")]
    NearSingularity,
    #[error("argument is a lattice point of the Weierstrass function")]
    LatticePoint,
    #[error("degenerate period lattice")]
    DegenerateLattice,
    #[error("degenerate radical in the zero lattice")]
    DegenerateRadical,
    #[error("series reversion breaks down: vanishing linear term")]
    ReversionBreakdown,
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
    #[error("step size underflow at x = {0}")]
    StepUnderflow(Complex64),
    #[error("path approaches the fixed singularity {0}")]
    SingularityOnPath(Complex64),
    #[error("data are not a power law (fit residual {0:e})")]
    NonPowerLaw(f64),
    #[error("oscillation fit did not converge")]
    FitDivergence,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("mass matrix not invertible")]
    MassNotInvertible,

    #[error("overdamped mode: real eigenvalue {0}")]
    OverdampedMode(f64),

    #[error("unstable or undamped origin: eigenvalue with real part {0} >= 0")]
    UnstableOrigin(f64),

    #[error("matrix not semisimple")]
    NotSemisimple,

    #[error("invalid master mode index {index} (valid range 1..={n_dof})")]
    InvalidMode { index: usize, n_dof: usize },

    #[error("forcing orthogonal to master subspace: the origin is the response")]
    ForcingOrthogonal,

    #[error("near-resonant denominator {magnitude:.3e} at monomial ({m},{n}) component {component}, increase SSM dimension")]
    NearResonantDenominator {
        m: usize,
        n: usize,
        component: usize,
        magnitude: f64,
    },

    #[error("use resonant_correction for mode {mode}: harmonic frequency {frequency} is near-resonant")]
    NearResonantHarmonic { mode: usize, frequency: f64 },

    #[error("forcing is not single-harmonic")]
    NotSingleHarmonic,

    #[error("degenerate forcing, response is origin")]
    DegenerateForcing,

    #[error("inconsistent (rho, omega) pair, not a response point (cos argument {0})")]
    InconsistentResponsePoint(f64),

    #[error("stiff or singular dynamics: step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error("no orbit from this guess: shooting residual {0:.3e} after {1} Newton iterations")]
    NoOrbit(f64, usize),

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("missing parameter '{0}'")]
    MissingParameter(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

use thiserror::Error;

use crate::theorems::PreservationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix must be square with dim >= 1, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian: max |M_ij - conj(M_ji)| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("operator is not diagonal: |M[{i},{j}]| = {magnitude:e}")]
    NotDiagonal { i: usize, j: usize, magnitude: f64 },

    #[error("qubit count {n} outside supported range 1..={max}")]
    QubitCount { n: usize, max: usize },

    #[error("invalid basis state {0:?}: expected a string over 'u'/'d'")]
    BadBasisState(String),

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("state is not normalized: sum |a|^2 = {norm_sqr}")]
    Unnormalized { norm_sqr: f64 },

    #[error("density matrix trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("density matrix has eigenvalue {eigenvalue:e} below -1e-8")]
    NotPositive { eigenvalue: f64 },

    #[error("rate must be finite and > 0, got {0}")]
    NonPositiveRate(f64),

    #[error("tolerance {name} must be finite and > 0, got {value}")]
    BadTolerance { name: &'static str, value: f64 },

    #[error("path steps {from} -> {to} are not a single spin flip")]
    NotAdjacent { from: String, to: String },

    #[error("path must contain at least {min} basis states")]
    PathTooShort { min: usize },

    #[error("step size {step:e} exceeds stability bound {max_step:e}; use at least {required_steps} steps")]
    StepTooLarge {
        step: f64,
        max_step: f64,
        required_steps: usize,
    },

    #[error("t_max must be finite and > 0, got {0}")]
    BadDuration(f64),

    #[error("integration invariant breached at t = {time}: {what}")]
    InvariantBreach { time: f64, what: String },

    #[error("coherence ({i}, {j}) not tracked in trajectory")]
    NotTracked { i: usize, j: usize },

    #[error("no signal: initial |rho[{i},{j}]| = {magnitude:e} is below the magnitude floor")]
    NoSignal { i: usize, j: usize, magnitude: f64 },

    #[error("only {usable} samples above the magnitude floor; need at least 2")]
    TooFewSamples { usable: usize },

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("preset {name} expects {expected}, got {found}")]
    PresetArity {
        name: &'static str,
        expected: String,
        found: String,
    },

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("evolution is not population preserving; analytic rates do not apply")]
    NotPopulationPreserving(Box<PreservationReport>),

    #[error("chain bound violated: lhs {lhs} > rhs {rhs}")]
    BoundViolation { lhs: f64, rhs: f64 },

    #[error("theorem violation in {suite} (seed {seed}, trial {trial}): {detail}")]
    TheoremViolation {
        suite: &'static str,
        seed: u64,
        trial: u64,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::TheoremViolation { .. } | Error::BoundViolation { .. } => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

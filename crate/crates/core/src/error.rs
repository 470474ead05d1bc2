use alloc::string::String;
use core::fmt;

use crate::expr::{EvalError, ParseError};

pub type Result<T> = core::result::Result<T, Error>;

/// Errors produced by the numerical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An expression slot failed to parse.
    Parse { slot: String, source: ParseError },
    /// Expression evaluation failed (unbound name or domain error).
    Eval(EvalError),
    /// The problem definition violates one of its invariants.
    InvalidProblem { reason: String, lambda: Option<f64> },
    /// A caller-supplied argument is outside the operation's domain.
    Precondition(String),
    /// Adaptive step size fell below the representable minimum.
    StepUnderflow { t: f64, step: f64 },
    /// The numerical state stopped being finite.
    NonFinite { t: f64 },
    /// The step budget was exhausted before reaching the end of the domain.
    MaxSteps { t: f64, steps: usize },
    /// The fitted tail exponent makes the improper integral diverge.
    TailDiverges { exponent: f64 },
    /// No admissible truncation distance could be chosen.
    DeltaSelection(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { slot, source } => write!(f, "cannot parse `{slot}`: {source}"),
            Error::Eval(e) => write!(f, "evaluation failed: {e}"),
            Error::InvalidProblem { reason, lambda: Some(l) } => {
                write!(f, "invalid problem at lambda = {l}: {reason}")
            }
            Error::InvalidProblem { reason, lambda: None } => write!(f, "invalid problem: {reason}"),
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::StepUnderflow { t, step } => {
                write!(f, "step size underflow at t = {t} (step {step})")
            }
            Error::NonFinite { t } => write!(f, "solution became non-finite at t = {t}"),
            Error::MaxSteps { t, steps } => write!(f, "step budget of {steps} exhausted at t = {t}"),
            Error::TailDiverges { exponent } => {
                write!(f, "tail exponent {exponent} is not integrable (needs < 1)")
            }
            Error::DeltaSelection(msg) => write!(f, "cannot select truncation distance: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

impl From<EvalError> for Error {
    fn from(e: EvalError) -> Self {
        Error::Eval(e)
    }
}

impl Error {
    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Eval(_) => "eval",
            Error::InvalidProblem { .. } => "invalid-problem",
            Error::Precondition(_) => "precondition",
            Error::StepUnderflow { .. } => "step-underflow",
            Error::NonFinite { .. } => "non-finite",
            Error::MaxSteps { .. } => "max-steps",
            Error::TailDiverges { .. } => "tail-diverges",
            Error::DeltaSelection(_) => "delta-selection",
        }
    }
}

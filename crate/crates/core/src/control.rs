//! Bisection on `λ` for the control problem `φ(λ) = p`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::problem::Problem;
use crate::quad::{phi, QuadResult};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSpec {
    pub p: f64,
    /// Lower solution: `φ(lambda_lo) < p`.
    pub lambda_lo: f64,
    /// Upper solution: `φ(lambda_hi) > p`.
    pub lambda_hi: f64,
    /// Stop when `|φ(λ) − p| ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Accuracy of each `φ` evaluation.
    pub phi_tol: f64,
}

impl ControlSpec {
    pub fn new(p: f64, lambda_lo: f64, lambda_hi: f64, tol: f64) -> Self {
        ControlSpec { p, lambda_lo, lambda_hi, tol, max_iter: 60, phi_tol: tol / 10.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::Precondition(m));
        if !(self.lambda_lo > 0.0 && self.lambda_hi > 0.0) {
            return bad(format!("bracket [{}, {}] must be positive", self.lambda_lo, self.lambda_hi));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol = {} must be positive", self.tol));
        }
        if !(self.phi_tol > 0.0 && self.phi_tol <= self.tol / 10.0 * (1.0 + 1e-12)) {
            return bad(format!("phi_tol = {} must lie in (0, tol/10]", self.phi_tol));
        }
        if !self.p.is_finite() {
            return bad(format!("p = {} must be finite", self.p));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BracketVerdict {
    Valid { phi_lo: f64, phi_hi: f64 },
    Invalid { phi_lo: f64, phi_hi: f64 },
}

impl BracketVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, BracketVerdict::Valid { .. })
    }

    pub fn values(&self) -> (f64, f64) {
        match *self {
            BracketVerdict::Valid { phi_lo, phi_hi } | BracketVerdict::Invalid { phi_lo, phi_hi } => (phi_lo, phi_hi),
        }
    }
}

fn classify(spec: &ControlSpec, phi_lo: f64, phi_hi: f64) -> BracketVerdict {
    if phi_lo < spec.p - spec.phi_tol && phi_hi > spec.p + spec.phi_tol {
        BracketVerdict::Valid { phi_lo, phi_hi }
    } else {
        BracketVerdict::Invalid { phi_lo, phi_hi }
    }
}

pub fn verify_bracket(prob: &Problem, spec: &ControlSpec) -> Result<BracketVerdict> {
    spec.validate()?;
    let phi_lo = phi(prob, spec.lambda_lo, spec.phi_tol)?.value;
    let phi_hi = phi(prob, spec.lambda_hi, spec.phi_tol)?.value;
    Ok(classify(spec, phi_lo, phi_hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iteration {
    pub k: usize,
    pub lambda: f64,
    pub phi: f64,
    /// Bracket after the update.
    pub lo: f64,
    pub hi: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Converged(f64),
    Exhausted,
    InvalidBracket,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BisectionTrace {
    pub spec: ControlSpec,
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub iterations: Vec<Iteration>,
    pub outcome: Outcome,
}

impl BisectionTrace {
    pub fn lambda_star(&self) -> Option<f64> {
        match self.outcome {
            Outcome::Converged(l) => Some(l),
            _ => None,
        }
    }

    /// The last evaluated `φ`.
    pub fn final_phi(&self) -> Option<f64> {
        self.iterations.last().map(|it| it.phi)
    }
}

/// Bisection with `φ` evaluated by [`phi`] at `spec.phi_tol`.
pub fn bisect(prob: &Problem, spec: &ControlSpec) -> Result<BisectionTrace> {
    spec.validate()?;
    bisect_with(spec, |lambda| Ok(phi(prob, lambda, spec.phi_tol)?.value))
}

/// Bisection against an arbitrary evaluator of `φ`.
///
/// Each step takes the midpoint `λ`; if `|φ(λ) − p| ≤ phi_tol` it is the
/// solution, otherwise `λ` replaces the lower end when `φ(λ) < p` and the
/// upper end when `φ(λ) > p`. The run stops as soon as `|φ(λ) − p| ≤ tol`.
pub fn bisect_with(spec: &ControlSpec, mut eval: impl FnMut(f64) -> Result<f64>) -> Result<BisectionTrace> {
    spec.validate()?;
    let phi_lo = eval(spec.lambda_lo)?;
    let phi_hi = eval(spec.lambda_hi)?;
    let mut trace = BisectionTrace { spec: *spec, phi_lo, phi_hi, iterations: Vec::new(), outcome: Outcome::Exhausted };
    if !classify(spec, phi_lo, phi_hi).is_valid() {
        trace.outcome = Outcome::InvalidBracket;
        return Ok(trace);
    }
    let (mut lo, mut hi) = (spec.lambda_lo, spec.lambda_hi);
    for k in 1..=spec.max_iter {
        let mid = 0.5 * (lo + hi);
        let value = eval(mid)?;
        let residual = (value - spec.p).abs();
        let hit = residual <= spec.phi_tol;
        if !hit {
            if value < spec.p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        trace.iterations.push(Iteration { k, lambda: mid, phi: value, lo, hi, residual });
        if hit || residual <= spec.tol {
            trace.outcome = Outcome::Converged(mid);
            return Ok(trace);
        }
    }
    Ok(trace)
}

/// `φ` at each `λ`, in input order; failures are kept in place.
pub fn sweep(prob: &Problem, lambdas: &[f64], tol: f64) -> Vec<(f64, Result<QuadResult>)> {
    lambdas.iter().map(|&l| (l, phi(prob, l, tol))).collect()
}

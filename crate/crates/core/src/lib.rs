//! Numerical core for initial-value problems whose right-hand side blows up
//! at a parameter-dependent endpoint `θ(λ)`.
//!
//! The crate solves `u' = f(t, u, λ)`, `u(0) = u₀(λ)` on truncated domains
//! `[0, θ(λ) − δ]`, evaluates the improper functional
//! `φ(λ) = ∫₀^{θ(λ)} u_λ(s) ds` as a truncated body plus a power-law tail,
//! and finds `λ*` with `φ(λ*) = p` by bracketing bisection. A Caputo
//! fractional variant reuses the same functional and control loop.
//!
//! Everything here is `no_std` and only needs `alloc`; problem files, CSV and
//! the command-line driver live in the `singctl` crate.
#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod control;
pub mod error;
pub mod expr;
pub mod frac;
pub mod gk;
pub mod ivp;
pub mod problem;
pub mod quad;
pub mod special;

pub use control::{bisect, bisect_with, sweep, verify_bracket, BisectionTrace, BracketVerdict, ControlSpec, Outcome};
pub use error::{Error, Result};
pub use expr::{Env, Expr};
pub use frac::{phi_frac, solve_frac, FracScheme, FracTrajectory};
pub use ivp::{apriori_bound, solve_truncated, AprioriBound, Trajectory};
pub use problem::{AnalyticOracle, HypothesisReport, LambdaRange, Problem, ProblemDef, SamplingPlan, Verdict};
pub use quad::{phi, phi_pnorm, tail_rigor, QuadResult};

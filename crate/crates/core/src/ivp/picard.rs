//! Fixed-grid Picard iteration on the integral form
//! `u(t) = u₀ + ∫₀ᵗ f(s, u(s), λ) ds`.
//!
//! Slow and low order, but independent of the adaptive solver, so it
//! serves as a cross-check. The grid is uniform in `τ = ln(θ/(θ − t))`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSolution {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm change in the final sweep.
    pub last_change: f64,
    pub converged: bool,
}

/// Runs Picard sweeps on `n` grid intervals until the sup-norm update drops
/// below `tol` or `max_iter` is reached.
pub fn solve_picard(
    prob: &Problem,
    lambda: f64,
    delta: f64,
    n: usize,
    tol: f64,
    max_iter: usize,
) -> Result<PicardSolution> {
    let theta = prob.admissible(lambda)?;
    if !(delta > 0.0 && delta < theta) || n < 2 {
        return Err(Error::Precondition(format!("need 0 < delta < theta and n >= 2 (delta = {delta}, n = {n})")));
    }
    let u0 = prob.u0(lambda)?;
    let tau_end = libm::log(theta / delta);
    let t: Vec<f64> = (0..=n)
        .map(|i| if i == n { theta - delta } else { theta - theta * libm::exp(-tau_end * i as f64 / n as f64) })
        .collect();
    let h = tau_end / n as f64;
    let mut u = alloc::vec![u0; n + 1];
    let mut g = alloc::vec![0.0; n + 1];
    let mut iterations = 0;
    let mut change = f64::INFINITY;
    while iterations < max_iter && change > tol {
        for i in 0..=n {
            g[i] = prob.f(t[i], u[i], lambda)? * (theta - t[i]);
        }
        change = 0.0;
        let mut acc = u0;
        for i in 1..=n {
            acc += 0.5 * h * (g[i - 1] + g[i]);
            if !acc.is_finite() {
                return Err(Error::NonFinite { t: t[i] });
            }
            change = change.max((acc - u[i]).abs());
            u[i] = acc;
        }
        iterations += 1;
    }
    Ok(PicardSolution { t, u, iterations, last_change: change, converged: change <= tol })
}

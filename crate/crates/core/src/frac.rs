//! Caputo problems `ᶜDᵅu = f(t, u, λ)`, `u(0) = u₀(λ)`, `0 < α < 1`, through
//! the Volterra form
//! `u(t) = u₀ + 1/Γ(α) ∫₀ᵗ (t − s)^{α−1} f(s, u(s), λ) ds`
//! on a uniform grid over `[0, θ(λ) − δ]`.

use alloc::format;
use alloc::vec::Vec;

use crate::control::{bisect_with, BisectionTrace, ControlSpec};
use crate::error::{Error, Result};
use crate::ivp::Node;
use crate::problem::Problem;
use crate::quad::{c_tilde, power_tail, QuadFlags, QuadResult};
use crate::special::gamma;

const MIN_STEPS: usize = 128;
const MAX_STEPS: usize = 8192;
/// Smallest truncation relative to `θ`: about an eighth of the finest
/// uniform step, so no grid point sits right next to the singularity.
const DELTA_FLOOR: f64 = 1.0 / 65536.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum FracScheme {
    /// Explicit product rectangle rule, first order.
    ProductRectangle,
    /// Adams–Bashforth–Moulton predictor-corrector, order `1 + α`.
    #[default]
    Abm,
}

impl FracScheme {
    pub fn name(self) -> &'static str {
        match self {
            FracScheme::ProductRectangle => "product_rectangle",
            FracScheme::Abm => "abm",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "product_rectangle" | "rectangle" => Some(FracScheme::ProductRectangle),
            "abm" | "abm_predictor_corrector" => Some(FracScheme::Abm),
            _ => None,
        }
    }

    pub fn order(self, alpha: f64) -> f64 {
        match self {
            FracScheme::ProductRectangle => 1.0,
            FracScheme::Abm => 1.0 + alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FracTrajectory {
    pub alpha: f64,
    pub lambda: f64,
    pub theta: f64,
    pub delta: f64,
    pub scheme: FracScheme,
    pub nodes: Vec<Node>,
    /// Richardson estimate from a solve with half the steps.
    pub est_error: f64,
}

impl FracTrajectory {
    pub fn last(&self) -> &Node {
        self.nodes.last().expect("trajectory has nodes")
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

/// Grid values `u_0..u_n` and `f_0..f_n`.
fn march(
    prob: &Problem,
    lambda: f64,
    alpha: f64,
    end: f64,
    n: usize,
    scheme: FracScheme,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let h = end / n as f64;
    let t: Vec<f64> = (0..=n).map(|j| if j == n { end } else { h * j as f64 }).collect();
    let u0 = prob.u0(lambda)?;
    // k^α and k^{α+1} for k = 0..=n+1
    let pa: Vec<f64> = (0..=n + 1).map(|k| libm::pow(k as f64, alpha)).collect();
    let pa1: Vec<f64> = (0..=n + 1).map(|k| libm::pow(k as f64, alpha + 1.0)).collect();
    let c_pred = libm::pow(h, alpha) / gamma(alpha + 1.0);
    let c_corr = libm::pow(h, alpha) / gamma(alpha + 2.0);
    let mut u = Vec::with_capacity(n + 1);
    let mut f = Vec::with_capacity(n + 1);
    u.push(u0);
    f.push(prob.f(0.0, u0, lambda)?);
    for m in 0..n {
        // step to t_{m+1}
        let mut pred = 0.0;
        for j in 0..=m {
            pred += (pa[m + 1 - j] - pa[m - j]) * f[j];
        }
        let up = u0 + c_pred * pred;
        let next = match scheme {
            FracScheme::ProductRectangle => up,
            FracScheme::Abm => {
                let mf = m as f64;
                let mut acc = (pa1[m] - (mf - alpha) * pa[m + 1]) * f[0];
                for j in 1..=m {
                    acc += (pa1[m - j + 2] + pa1[m - j] - 2.0 * pa1[m - j + 1]) * f[j];
                }
                acc += prob.f(t[m + 1], up, lambda)?;
                u0 + c_corr * acc
            }
        };
        if !next.is_finite() {
            return Err(Error::NonFinite { t: t[m + 1] });
        }
        u.push(next);
        f.push(prob.f(t[m + 1], next, lambda)?);
    }
    Ok((t, u, f))
}

/// Solves on `n_steps` uniform steps over `[0, θ(λ) − δ]` with the default
/// scheme.
pub fn solve_frac(prob: &Problem, lambda: f64, alpha: f64, delta: f64, n_steps: usize) -> Result<FracTrajectory> {
    solve_frac_with(prob, lambda, alpha, delta, n_steps, FracScheme::default())
}

pub fn solve_frac_with(
    prob: &Problem,
    lambda: f64,
    alpha: f64,
    delta: f64,
    n_steps: usize,
    scheme: FracScheme,
) -> Result<FracTrajectory> {
    check_alpha(alpha)?;
    let theta = prob.admissible(lambda)?;
    if !(delta > 0.0 && delta < theta) {
        return Err(Error::Precondition(format!("delta = {delta} must lie in (0, theta = {theta})")));
    }
    if n_steps < 2 {
        return Err(Error::Precondition(format!("n_steps = {n_steps} must be at least 2")));
    }
    let end = theta - delta;
    let (t, u, _) = march(prob, lambda, alpha, end, n_steps, scheme)?;
    let half = n_steps / 2;
    let (_, uc, _) = march(prob, lambda, alpha, end, half, scheme)?;
    let diff = if n_steps.is_multiple_of(2) {
        (0..=half).map(|j| (u[2 * j] - uc[j]).abs()).fold(0.0, f64::max)
    } else {
        (u[n_steps] - uc[half]).abs()
    };
    let est_error = diff / (libm::pow(2.0, scheme.order(alpha)) - 1.0);
    let nodes = t
        .iter()
        .zip(&u)
        .enumerate()
        .map(|(j, (&t, &u))| Node { t, u, dist: if j == n_steps { delta } else { theta - t } })
        .collect();
    Ok(FracTrajectory { alpha, lambda, theta, delta, scheme, nodes, est_error })
}

/// `∫₀ᵀ u = u₀T + 1/Γ(α+1) ∫₀ᵀ (T − s)^α f(s, u(s)) ds`, product trapezoid
/// weights for the kernel `(T − s)^α`.
fn body_from_volterra(alpha: f64, end: f64, u0: f64, f: &[f64]) -> f64 {
    let n = f.len() - 1;
    let beta = alpha + 1.0;
    let h = end / n as f64;
    let nf = n as f64;
    let p1 = |k: f64| libm::pow(k, beta + 1.0);
    let mut acc = (p1(nf - 1.0) - (nf - 1.0 - beta) * libm::pow(nf, beta)) * f[0];
    for (j, fj) in f.iter().enumerate().take(n).skip(1) {
        let k = (n - j) as f64;
        acc += (p1(k + 1.0) + p1(k - 1.0) - 2.0 * p1(k)) * fj;
    }
    acc += f[n];
    u0 * end + libm::pow(h, beta) / gamma(beta + 2.0) * acc
}

/// `φ(λ)` for the fractional problem. Steps double from 128 until the body
/// changes by at most `tol/2` (at most 8192). The tail reuses the power-law
/// extrapolation; its bound is reported but flagged heuristic.
pub fn phi_frac(prob: &Problem, lambda: f64, alpha: f64, tol: f64) -> Result<QuadResult> {
    phi_frac_with(prob, lambda, alpha, tol, FracScheme::default())
}

pub fn phi_frac_with(prob: &Problem, lambda: f64, alpha: f64, tol: f64, scheme: FracScheme) -> Result<QuadResult> {
    check_alpha(alpha)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Precondition(format!("tol = {tol} must be positive")));
    }
    let Some(a) = prob.growth_a else {
        return Err(Error::Precondition(format!("`{}` declares no growth constant a", prob.label())));
    };
    let theta = prob.admissible(lambda)?;
    let mut flags = QuadFlags { heuristic: true, ..QuadFlags::default() };
    let ct = c_tilde(prob, lambda)?;
    if !ct.is_finite() {
        return Err(Error::DeltaSelection(format!("C~ = {ct} at lambda = {lambda}")));
    }
    let mut delta = 0.1 * theta;
    if ct > 0.0 {
        delta = delta.min(libm::pow(tol / (2.0 * ct), a / (a - 1.0)));
    }
    if delta < DELTA_FLOOR * theta {
        flags.delta_floored = true;
        delta = DELTA_FLOOR * theta;
    }
    let rigor = ct * libm::pow(delta, (a - 1.0) / a);
    let end = theta - delta;
    let u0 = prob.u0(lambda)?;

    let mut n = MIN_STEPS;
    let (t, u, f) = march(prob, lambda, alpha, end, n, scheme)?;
    let mut body = body_from_volterra(alpha, end, u0, &f);
    let mut last = (t, u);
    let mut change = f64::INFINITY;
    while n < MAX_STEPS {
        n *= 2;
        let (t, u, f) = march(prob, lambda, alpha, end, n, scheme)?;
        let next = body_from_volterra(alpha, end, u0, &f);
        change = (next - body).abs();
        body = next;
        last = (t, u);
        if change <= 0.5 * tol {
            break;
        }
    }
    let nodes: Vec<Node> = last
        .0
        .iter()
        .zip(&last.1)
        .enumerate()
        .map(|(j, (&t, &u))| Node { t, u, dist: if j == n { delta } else { theta - t } })
        .collect();
    let tail = power_tail(&nodes, delta, Some(a), None, &mut flags)?;
    Ok(QuadResult {
        value: body + tail,
        body,
        tail_estimate: tail,
        tail_rigor_bound: rigor,
        delta,
        est_error: change,
        flags,
    })
}

/// Bisection with `φ` from [`phi_frac`] at `spec.phi_tol`.
pub fn frac_control(prob: &Problem, alpha: f64, spec: &ControlSpec) -> Result<BisectionTrace> {
    check_alpha(alpha)?;
    bisect_with(spec, |lambda| Ok(phi_frac(prob, lambda, alpha, spec.phi_tol)?.value))
}

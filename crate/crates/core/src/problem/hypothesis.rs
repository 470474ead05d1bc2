//! Sampling-based checks of the structural hypotheses on a problem family.
//!
//! A pass verdict means no violation was found on the sampling grid; it is
//! not a proof. Every fail verdict carries at least one witness point.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::Problem;
use crate::error::{Error, Result};

/// Relative slack for bounds that hold with equality.
const REL_SLACK: f64 = 1e-9;
const ABS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Lipschitz in `x` on `[0, θ(λ) − ε]` with constant `L(λ, ε)`.
    H1,
    /// Continuity of `θ`, `u₀`, `L`, and `f` in the parameter.
    H2,
    /// Growth bound `|f| ≤ |x|/(a(θ−t)) + C_λ`.
    H3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail,
    NotChecked(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotChecked(_) => "not-checked",
        }
    }
}

/// A sample point where a bound was violated or could not be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub hypothesis: Hypothesis,
    pub t: f64,
    pub x: f64,
    pub lambda: f64,
    /// Amount by which the bound was exceeded (∞ for evaluation failures).
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub h1: Verdict,
    pub h2: Verdict,
    pub h3: Verdict,
    /// Worst violations first.
    pub witnesses: Vec<Witness>,
    pub samples_used: usize,
}

impl HypothesisReport {
    fn unchecked() -> Self {
        let nc = || Verdict::NotChecked("not requested".into());
        HypothesisReport { h1: nc(), h2: nc(), h3: nc(), witnesses: Vec::new(), samples_used: 0 }
    }

    pub fn verdict(&self, h: Hypothesis) -> &Verdict {
        match h {
            Hypothesis::H1 => &self.h1,
            Hypothesis::H2 => &self.h2,
            Hypothesis::H3 => &self.h3,
        }
    }

    fn merge(mut self, other: HypothesisReport) -> Self {
        let keep = |mine: Verdict, theirs: Verdict| match mine {
            Verdict::NotChecked(_) => theirs,
            v => v,
        };
        self.h1 = keep(self.h1, other.h1);
        self.h2 = keep(self.h2, other.h2);
        self.h3 = keep(self.h3, other.h3);
        self.witnesses.extend(other.witnesses);
        self.samples_used += other.samples_used;
        self
    }
}

/// Grid used by the checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingPlan {
    pub n_t: usize,
    pub n_x: usize,
    /// `x` interval; defaults to `±10·(1 + |u₀(λ)|)`.
    pub x_box: Option<(f64, f64)>,
    /// Smallest sampled `(θ − t)/θ` for the geometric refinement toward `θ`.
    pub closest_approach: f64,
    /// Parameter samples for the continuity check.
    pub n_lambda: usize,
    pub max_witnesses: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan { n_t: 64, n_x: 17, x_box: None, closest_approach: 1e-9, n_lambda: 32, max_witnesses: 8 }
    }
}

impl SamplingPlan {
    fn x_samples(&self, u0: f64) -> Vec<f64> {
        let (lo, hi) = self.x_box.unwrap_or_else(|| {
            let r = 10.0 * (1.0 + u0.abs());
            (-r, r)
        });
        if lo == hi || self.n_x < 2 {
            return alloc::vec![lo];
        }
        let mut xs: Vec<f64> = (0..self.n_x).map(|i| lo + (hi - lo) * i as f64 / (self.n_x - 1) as f64).collect();
        if lo < 0.0 && hi > 0.0 && !xs.contains(&0.0) {
            xs.push(0.0);
            xs.sort_by(f64::total_cmp);
        }
        xs
    }
}

struct Collector {
    hypothesis: Hypothesis,
    witnesses: Vec<Witness>,
    samples: usize,
    limit: usize,
}

impl Collector {
    fn new(hypothesis: Hypothesis, limit: usize) -> Self {
        Collector { hypothesis, witnesses: Vec::new(), samples: 0, limit: limit.max(1) }
    }

    fn record(&mut self, t: f64, x: f64, lambda: f64, excess: f64) {
        self.witnesses.push(Witness { hypothesis: self.hypothesis, t, x, lambda, excess });
    }

    fn finish(mut self) -> (Verdict, Vec<Witness>, usize) {
        self.witnesses.sort_by(|a, b| b.excess.total_cmp(&a.excess));
        self.witnesses.truncate(self.limit);
        let v = if self.witnesses.is_empty() { Verdict::Pass } else { Verdict::Fail };
        (v, self.witnesses, self.samples)
    }
}

fn excess(lhs: f64, bound: f64) -> Option<f64> {
    if !lhs.is_finite() {
        return Some(f64::INFINITY);
    }
    let slack = bound * REL_SLACK + ABS_SLACK;
    (lhs > bound + slack).then_some(lhs - bound)
}

fn theta_checked(prob: &Problem, lambda: f64) -> Result<f64> {
    let theta = prob.theta(lambda)?;
    if !(theta > 0.0) {
        return Err(Error::Precondition(format!("theta({lambda}) = {theta} is not positive")));
    }
    Ok(theta)
}

/// Samples the growth bound on `t ∈ [0, θ(λ))` refined geometrically toward
/// `θ(λ)` and `x` in the sampling box.
pub fn check_h3(prob: &Problem, lambda: f64, plan: &SamplingPlan) -> Result<HypothesisReport> {
    let mut report = HypothesisReport::unchecked();
    let Some(a) = prob.growth_a else {
        let mut reason = String::from("no growth constant declared");
        if let Some(note) = prob.notes.iter().find(|n| n.contains("h3")) {
            reason = format!("{reason} ({note})");
        }
        report.h3 = Verdict::NotChecked(reason);
        return Ok(report);
    };
    let theta = theta_checked(prob, lambda)?;
    let c_lambda = prob.c_lambda(lambda)?;
    let xs = plan.x_samples(prob.u0(lambda)?);
    let n_t = plan.n_t.max(2);
    let mut col = Collector::new(super::Hypothesis::H3, plan.max_witnesses);
    for i in 0..n_t {
        let rel = libm::pow(plan.closest_approach, i as f64 / (n_t - 1) as f64);
        let t = theta - theta * rel;
        let dist = theta - t;
        for &x in &xs {
            col.samples += 1;
            let bound = x.abs() / (a * dist) + c_lambda;
            match prob.f(t, x, lambda) {
                Ok(v) => {
                    if let Some(e) = excess(v.abs(), bound) {
                        col.record(t, x, lambda, e);
                    }
                }
                Err(_) => col.record(t, x, lambda, f64::INFINITY),
            }
        }
    }
    let (v, w, n) = col.finish();
    report.h3 = v;
    report.witnesses = w;
    report.samples_used = n;
    Ok(report)
}

/// Samples the Lipschitz bound `|f(t,x) − f(t,x̄)| ≤ L(λ,ε)|x − x̄|` on
/// `t ∈ [0, θ(λ) − ε]`.
pub fn check_h1(prob: &Problem, lambda: f64, eps: f64, plan: &SamplingPlan) -> Result<HypothesisReport> {
    let mut report = HypothesisReport::unchecked();
    let theta = theta_checked(prob, lambda)?;
    if !(eps > 0.0 && eps < theta) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, theta = {theta})")));
    }
    let Some(l) = prob.lipschitz(lambda, eps) else {
        report.h1 = Verdict::NotChecked("no lipschitz expression".into());
        return Ok(report);
    };
    let l = l?;
    let xs = plan.x_samples(prob.u0(lambda)?);
    let mut pairs: Vec<(f64, f64)> = xs.windows(2).map(|w| (w[0], w[1])).collect();
    if xs.len() > 2 {
        pairs.push((xs[0], xs[xs.len() - 1]));
    }
    let n_t = plan.n_t.max(2);
    let end = theta - eps;
    let mut col = Collector::new(Hypothesis::H1, plan.max_witnesses);
    for i in 0..n_t {
        let t = if i == n_t - 1 { end } else { end * i as f64 / (n_t - 1) as f64 };
        for &(x, y) in &pairs {
            col.samples += 1;
            let bound = l * (x - y).abs();
            match (prob.f(t, x, lambda), prob.f(t, y, lambda)) {
                (Ok(fx), Ok(fy)) => {
                    if let Some(e) = excess((fx - fy).abs(), bound) {
                        col.record(t, x, lambda, e / (x - y).abs());
                    }
                }
                _ => col.record(t, x, lambda, f64::INFINITY),
            }
        }
    }
    let (v, w, n) = col.finish();
    report.h1 = v;
    report.witnesses = w;
    report.samples_used = n;
    Ok(report)
}

/// Looks for jumps of `θ`, `u₀`, `C_λ`, `L(λ, θ/2)` and `f` under a small
/// relative perturbation of `λ` across the admissible range.
pub fn check_h2(prob: &Problem, plan: &SamplingPlan) -> Result<HypothesisReport> {
    const STEP: f64 = 1e-7;
    const JUMP: f64 = 1e-4;
    let mut report = HypothesisReport::unchecked();
    let mut col = Collector::new(Hypothesis::H2, plan.max_witnesses);
    let values = |lambda: f64, theta_ref: f64| -> Result<[f64; 8]> {
        let theta = prob.theta(lambda)?;
        let l = match prob.lipschitz(lambda, 0.5 * theta_ref) {
            Some(l) => l?,
            None => 0.0,
        };
        Ok([
            theta,
            prob.u0(lambda)?,
            prob.c_lambda(lambda)?,
            l,
            prob.f(0.0, 0.0, lambda)?,
            prob.f(0.0, 1.0, lambda)?,
            prob.f(0.5 * theta_ref, 0.0, lambda)?,
            prob.f(0.5 * theta_ref, 1.0, lambda)?,
        ])
    };
    for lambda in prob.range.samples(plan.n_lambda.max(1)) {
        col.samples += 1;
        let theta = match prob.theta(lambda) {
            Ok(t) => t,
            Err(_) => {
                col.record(0.0, 0.0, lambda, f64::INFINITY);
                continue;
            }
        };
        let here = values(lambda, theta);
        let near = values(lambda * (1.0 + STEP), theta);
        match (here, near) {
            (Ok(a), Ok(b)) => {
                for (i, (va, vb)) in a.iter().zip(b.iter()).enumerate() {
                    let jump = (va - vb).abs();
                    if !va.is_finite() || !vb.is_finite() || jump > JUMP * (1.0 + va.abs()) {
                        let t = if i >= 6 { 0.5 * theta } else { 0.0 };
                        col.record(t, (i % 2) as f64, lambda, jump);
                    }
                }
            }
            _ => col.record(0.0, 0.0, lambda, f64::INFINITY),
        }
    }
    let (v, w, n) = col.finish();
    report.h2 = v;
    report.witnesses = w;
    report.samples_used = n;
    Ok(report)
}

/// Runs all three checks at `λ`; `eps` is the cut-off for the Lipschitz check.
pub fn verify(prob: &Problem, lambda: f64, eps: f64, plan: &SamplingPlan) -> Result<HypothesisReport> {
    let h1 = check_h1(prob, lambda, eps, plan)?;
    let h2 = check_h2(prob, plan)?;
    let h3 = check_h3(prob, lambda, plan)?;
    let mut merged = h1.merge(h2).merge(h3);
    merged.witnesses.sort_by(|a, b| b.excess.total_cmp(&a.excess));
    Ok(merged)
}

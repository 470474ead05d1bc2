//! Problem families `u' = f(t, u, λ)`, `u(0) = u₀(λ)` on `[0, θ(λ))`.
//!
//! A [`ProblemDef`] holds expression sources and constants as read from a
//! problem file or the built-in registry; [`Problem::from_def`] parses and
//! validates it. Built problems are immutable.

mod hypothesis;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{parse, Env, Expr, Var};

pub use hypothesis::{check_h1, check_h2, check_h3, verify, Hypothesis, HypothesisReport, SamplingPlan, Verdict, Witness};

/// Admissible control values, the half-open interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaRange {
    pub lo: f64,
    pub hi: f64,
}

impl Default for LambdaRange {
    fn default() -> Self {
        LambdaRange { lo: 1e-3, hi: 1e3 }
    }
}

impl LambdaRange {
    pub fn contains(&self, lambda: f64) -> bool {
        lambda > self.lo && lambda <= self.hi
    }

    /// `n` points strictly inside the range, log-spaced when `lo > 0`.
    pub fn samples(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) / n as f64;
                if self.lo > 0.0 {
                    self.lo * libm::pow(self.hi / self.lo, s)
                } else {
                    self.lo + (self.hi - self.lo) * s
                }
            })
            .collect()
    }
}

/// Unparsed problem description.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemDef {
    pub name: Option<String>,
    pub f: String,
    pub theta: String,
    pub u0: String,
    /// Growth constant `a > 1` of the bound `|f| ≤ |x|/(a(θ−t)) + C_λ`; an
    /// expression over constants only.
    pub growth_a: Option<String>,
    pub c_lambda: Option<String>,
    pub lipschitz: Option<String>,
    pub constants: BTreeMap<String, f64>,
    pub u_exact: Option<String>,
    pub phi_exact: Option<String>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub notes: Vec<String>,
}

/// Closed-form solution and functional, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticOracle {
    /// `u_λ(t)` in `t`, `lambda`.
    pub u_exact: Option<Expr>,
    /// `φ(λ)` in `lambda`; absent when the improper integral diverges.
    pub phi_exact: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub name: Option<String>,
    pub f: Expr,
    pub theta: Expr,
    pub u0: Expr,
    pub growth_a: Option<f64>,
    pub c_lambda: Expr,
    pub lipschitz: Option<Expr>,
    pub constants: BTreeMap<String, f64>,
    pub analytic: Option<AnalyticOracle>,
    pub range: LambdaRange,
    pub notes: Vec<String>,
}

const LOAD_SAMPLES: usize = 32;

fn parse_slot(slot: &str, src: &str, allowed: &[Var], constants: &BTreeMap<String, f64>) -> Result<Expr> {
    let e = parse(src).map_err(|source| Error::Parse { slot: slot.into(), source })?;
    for v in [Var::T, Var::X, Var::Lambda, Var::Eps] {
        if e.uses_var(v) && !allowed.contains(&v) {
            return Err(Error::InvalidProblem {
                reason: format!("`{slot}` may not depend on `{}`", v.name()),
                lambda: None,
            });
        }
    }
    if let Some(name) = e.constants().into_iter().find(|c| !constants.contains_key(*c)) {
        return Err(Error::InvalidProblem { reason: format!("unbound constant `{name}` in `{slot}`"), lambda: None });
    }
    Ok(e)
}

impl Problem {
    /// Parses every slot and checks the family invariants on a 32-point
    /// sample of the admissible range.
    pub fn from_def(def: &ProblemDef) -> Result<Problem> {
        use Var::{Eps, Lambda, T, X};
        let c = &def.constants;
        let f = parse_slot("f", &def.f, &[T, X, Lambda], c)?;
        let theta = parse_slot("theta", &def.theta, &[Lambda], c)?;
        let u0 = parse_slot("u0", &def.u0, &[Lambda], c)?;
        let c_lambda = parse_slot("c_lambda", def.c_lambda.as_deref().unwrap_or("0"), &[Lambda], c)?;
        let lipschitz = def.lipschitz.as_deref().map(|s| parse_slot("lipschitz", s, &[Lambda, Eps], c)).transpose()?;
        let growth_a = match def.growth_a.as_deref() {
            None => None,
            Some(src) => {
                let a = parse_slot("growth_a", src, &[], c)?.eval(&Env::new(c))?;
                if !(a > 1.0) || !a.is_finite() {
                    return Err(Error::InvalidProblem { reason: format!("growth_a = {a} must exceed 1"), lambda: None });
                }
                Some(a)
            }
        };
        let u_exact = def.u_exact.as_deref().map(|s| parse_slot("analytic.u_exact", s, &[T, Lambda], c)).transpose()?;
        let phi_exact = def.phi_exact.as_deref().map(|s| parse_slot("analytic.phi_exact", s, &[Lambda], c)).transpose()?;
        let analytic = if u_exact.is_some() || phi_exact.is_some() {
            Some(AnalyticOracle { u_exact, phi_exact })
        } else {
            None
        };
        let default = LambdaRange::default();
        let range = LambdaRange { lo: def.lambda_min.unwrap_or(default.lo), hi: def.lambda_max.unwrap_or(default.hi) };
        if !(range.lo >= 0.0 && range.lo < range.hi) {
            return Err(Error::InvalidProblem {
                reason: format!("lambda range ({}, {}] is empty or negative", range.lo, range.hi),
                lambda: None,
            });
        }
        let problem = Problem {
            name: def.name.clone(),
            f,
            theta,
            u0,
            growth_a,
            c_lambda,
            lipschitz,
            constants: def.constants.clone(),
            analytic,
            range,
            notes: def.notes.clone(),
        };
        for lambda in range.samples(LOAD_SAMPLES) {
            problem.check_sample(lambda)?;
        }
        Ok(problem)
    }

    fn check_sample(&self, lambda: f64) -> Result<()> {
        let bad = |reason: String| Error::InvalidProblem { reason, lambda: Some(lambda) };
        let theta = self.theta(lambda).map_err(|e| bad(format!("theta: {e}")))?;
        if !(theta > 0.0) {
            return Err(bad(format!("theta = {theta} is not positive")));
        }
        let u0 = self.u0(lambda).map_err(|e| bad(format!("u0: {e}")))?;
        if !u0.is_finite() {
            return Err(bad("u0 is not finite".into()));
        }
        let c = self.c_lambda(lambda).map_err(|e| bad(format!("c_lambda: {e}")))?;
        if !(c >= 0.0) {
            return Err(bad(format!("c_lambda = {c} is negative")));
        }
        Ok(())
    }

    pub fn env(&self) -> Env<'_> {
        Env::new(&self.constants)
    }

    pub fn theta(&self, lambda: f64) -> Result<f64> {
        Ok(self.theta.eval(&self.env().lambda(lambda))?)
    }

    pub fn u0(&self, lambda: f64) -> Result<f64> {
        Ok(self.u0.eval(&self.env().lambda(lambda))?)
    }

    pub fn c_lambda(&self, lambda: f64) -> Result<f64> {
        Ok(self.c_lambda.eval(&self.env().lambda(lambda))?)
    }

    #[inline]
    pub fn f(&self, t: f64, x: f64, lambda: f64) -> Result<f64> {
        Ok(self.f.eval(&self.env().t(t).x(x).lambda(lambda))?)
    }

    /// `L(λ, ε)`, or `None` when no Lipschitz expression was given.
    pub fn lipschitz(&self, lambda: f64, eps: f64) -> Option<Result<f64>> {
        self.lipschitz.as_ref().map(|l| Ok(l.eval(&self.env().lambda(lambda).eps(eps))?))
    }

    pub fn u_exact(&self, t: f64, lambda: f64) -> Option<Result<f64>> {
        let e = self.analytic.as_ref()?.u_exact.as_ref()?;
        Some(e.eval(&self.env().t(t).lambda(lambda)).map_err(Error::from))
    }

    pub fn phi_exact(&self, lambda: f64) -> Option<Result<f64>> {
        let e = self.analytic.as_ref()?.phi_exact.as_ref()?;
        Some(e.eval(&self.env().lambda(lambda)).map_err(Error::from))
    }

    /// Returns `θ(λ)` if `λ` is admissible.
    pub fn admissible(&self, lambda: f64) -> Result<f64> {
        if !self.range.contains(lambda) {
            return Err(Error::Precondition(format!(
                "lambda = {lambda} outside admissible range ({}, {}]",
                self.range.lo, self.range.hi
            )));
        }
        let theta = self.theta(lambda)?;
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::InvalidProblem { reason: format!("theta = {theta} is not positive"), lambda: Some(lambda) });
        }
        Ok(theta)
    }

    /// Relative residual `|u'(t) − f(t, u(t), λ)| / max(1, |f|)` of the
    /// closed-form solution, with `u'` from a five-point central difference.
    pub fn oracle_residual(&self, t: f64, lambda: f64) -> Option<Result<f64>> {
        self.analytic.as_ref()?.u_exact.as_ref()?;
        Some((|| {
            let theta = self.theta(lambda)?;
            let h = 1e-3 * (theta - t).min(1.0);
            let u = |s: f64| self.u_exact(s, lambda).unwrap_or(Ok(f64::NAN));
            let du = (u(t - 2.0 * h)? - 8.0 * u(t - h)? + 8.0 * u(t + h)? - u(t + 2.0 * h)?) / (12.0 * h);
            let rhs = self.f(t, u(t)?, lambda)?;
            Ok((du - rhs).abs() / rhs.abs().max(1.0))
        })())
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("problem")
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 3] = ["exampleA", "remark13", "exampleB"];

fn def(name: &str, f: &str, u0: &str, lipschitz: &str, u_exact: &str) -> ProblemDef {
    ProblemDef {
        name: Some(name.into()),
        f: f.into(),
        theta: "lambda".into(),
        u0: u0.into(),
        c_lambda: Some("0".into()),
        lipschitz: Some(lipschitz.into()),
        u_exact: Some(u_exact.into()),
        ..ProblemDef::default()
    }
}

/// Built-in closed-form problems, with `overrides` applied to their constants.
///
/// * `exampleA`: `f = x/(λ−t)`, `u₀ = 1/λ`, `u = 1/(λ−t)`. The growth bound
///   fails (it needs `a ≤ 1`) and `φ` diverges.
/// * `remark13`: `f = 1/(λ(λ−t)^{1/λ+1})`, `u = (λ−t)^{−1/λ}`, admissible for
///   `λ > 1`; `φ(λ) → ∞` as `λ → 1⁺`.
/// * `exampleB`: `f = x/(a(λ−t))`, `u₀ = λ^{−1/a}`, `u = (λ−t)^{−1/a}`,
///   `φ = a/(a−1)·λ^{(a−1)/a}`; `a` defaults to 3.
pub fn builtin(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ProblemDef> {
    let mut d = match name {
        "exampleA" => {
            let mut d = def("exampleA", "x/(lambda - t)", "1/lambda", "1/eps", "1/(lambda - t)");
            d.notes.push("h3 not satisfied: the growth bound needs a <= 1 and phi diverges".into());
            d
        }
        "remark13" => {
            let mut d = def(
                "remark13",
                "1/(lambda*(lambda - t)^(1/lambda + 1))",
                "1/lambda^(1/lambda)",
                "0",
                "(lambda - t)^(-1/lambda)",
            );
            d.phi_exact = Some("lambda^((2*lambda - 1)/lambda)/(lambda - 1)".into());
            d.lambda_min = Some(1.0);
            d.notes.push("h3 not satisfied: f is unbounded at x = 0 near theta".into());
            d
        }
        "exampleB" => {
            let mut d = def(
                "exampleB",
                "x/(a*(lambda - t))",
                "lambda^(-1/a)",
                "1/(a*eps)",
                "(lambda - t)^(-1/a)",
            );
            d.growth_a = Some("a".into());
            d.phi_exact = Some("a/(a - 1)*lambda^((a - 1)/a)".into());
            d.constants.insert("a".into(), 3.0);
            d
        }
        other => return Err(Error::Precondition(format!("unknown built-in problem `{other}`"))),
    };
    for (k, v) in overrides {
        d.constants.insert(k.to_string(), *v);
    }
    Ok(d)
}

/// Builds a built-in problem with its default constants.
pub fn builtin_problem(name: &str) -> Result<Problem> {
    Problem::from_def(&builtin(name, &BTreeMap::new())?)
}

/// `exampleB` with growth constant `a`.
pub fn example_b(a: f64) -> Result<Problem> {
    let mut o = BTreeMap::new();
    o.insert("a".to_string(), a);
    Problem::from_def(&builtin("exampleB", &o)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_b_slots() {
        let p = example_b(3.0).unwrap();
        assert_eq!(p.theta, parse("lambda").unwrap());
        assert!((p.u0(8.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(p.growth_a, Some(3.0));
        assert!((p.phi_exact(1.0).unwrap().unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn example_a_slots() {
        let p = builtin_problem("exampleA").unwrap();
        assert_eq!(p.u0, parse("1/lambda").unwrap());
        assert_eq!(p.growth_a, None);
        assert!(p.phi_exact(2.0).is_none());
    }

    #[test]
    fn growth_constant_must_exceed_one() {
        let err = example_b(0.5).unwrap_err();
        assert!(matches!(err, Error::InvalidProblem { .. }), "{err:?}");
        let mut d = builtin("exampleB", &BTreeMap::new()).unwrap();
        d.growth_a = Some("0.5".into());
        assert!(Problem::from_def(&d).is_err());
    }

    #[test]
    fn slot_variable_restrictions() {
        let mut d = builtin("exampleB", &BTreeMap::new()).unwrap();
        d.theta = "lambda + t".into();
        assert!(Problem::from_def(&d).is_err());
        let mut d = builtin("exampleB", &BTreeMap::new()).unwrap();
        d.f = "x*eps".into();
        assert!(Problem::from_def(&d).is_err());
        let mut d = builtin("exampleB", &BTreeMap::new()).unwrap();
        d.f = "x/(b*(lambda - t))".into();
        let err = Problem::from_def(&d).unwrap_err();
        assert!(format!("{err}").contains("unbound constant `b`"));
    }

    #[test]
    fn invariant_violation_names_the_sample() {
        let mut d = builtin("exampleB", &BTreeMap::new()).unwrap();
        d.theta = "lambda - 1".into();
        match Problem::from_def(&d).unwrap_err() {
            Error::InvalidProblem { lambda: Some(l), .. } => assert!(l <= 1.0),
            other => panic!("{other:?}"),
        }
        let mut d = builtin("exampleB", &BTreeMap::new()).unwrap();
        d.c_lambda = Some("-1".into());
        assert!(Problem::from_def(&d).is_err());
    }

    #[test]
    fn parse_errors_carry_slot() {
        let mut d = builtin("exampleB", &BTreeMap::new()).unwrap();
        d.u0 = "lambda^(".into();
        match Problem::from_def(&d).unwrap_err() {
            Error::Parse { slot, source } => {
                assert_eq!(slot, "u0");
                assert_eq!(source.offset, 8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_builtin() {
        assert!(builtin("exampleC", &BTreeMap::new()).is_err());
    }

    #[test]
    fn oracle_residuals_are_small() {
        for name in BUILTIN_NAMES {
            let p = builtin_problem(name).unwrap();
            let lambdas = [1.05, 1.5, 2.0, 2.828, 4.0, 7.5, 10.0, 0.6, 0.9, 3.3];
            let mut checked = 0;
            for &l in lambdas.iter().filter(|l| p.range.contains(**l)) {
                let theta = p.theta(l).unwrap();
                let u_init = p.u_exact(0.0, l).unwrap().unwrap();
                assert!((u_init - p.u0(l).unwrap()).abs() < 1e-13 * u_init.abs().max(1.0));
                for k in 0..10 {
                    let t = (theta - 1e-3) * k as f64 / 9.0;
                    let r = p.oracle_residual(t, l).unwrap().unwrap();
                    assert!(r <= 1e-8, "{name} lambda={l} t={t}: residual {r}");
                    checked += 1;
                }
            }
            assert!(checked >= 50, "{name}: only {checked} samples");
        }
    }

    #[test]
    fn range_samples_are_inside() {
        let r = LambdaRange { lo: 1.0, hi: 1e3 };
        let s = r.samples(32);
        assert_eq!(s.len(), 32);
        assert!(s.iter().all(|l| r.contains(*l)));
        assert!(!r.contains(1.0));
        assert!(r.contains(1e3));
    }
}

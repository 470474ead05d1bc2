use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt;

use super::{BinOp, Expr, Func, Var};
use crate::special::gamma;

/// Evaluation failure. Invalid operands never degrade into a silent NaN.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    Unbound(String),
    DivisionByZero,
    LogOfNonPositive(f64),
    SqrtOfNegative(f64),
    FractionalPowerOfNegative { base: f64, exponent: f64 },
    GammaPole(f64),
    /// An operation on finite operands overflowed or produced NaN.
    NonFinite(&'static str),
}

impl EvalError {
    pub fn is_domain(&self) -> bool {
        !matches!(self, EvalError::Unbound(_))
    }
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Unbound(name) => write!(f, "unbound name `{name}`"),
            EvalError::DivisionByZero => f.write_str("domain error: division by zero"),
            EvalError::LogOfNonPositive(v) => write!(f, "domain error: log of non-positive value {v}"),
            EvalError::SqrtOfNegative(v) => write!(f, "domain error: sqrt of negative value {v}"),
            EvalError::FractionalPowerOfNegative { base, exponent } => {
                write!(f, "domain error: negative base {base} with fractional exponent {exponent}")
            }
            EvalError::GammaPole(v) => write!(f, "domain error: gamma pole at {v}"),
            EvalError::NonFinite(op) => write!(f, "domain error: `{op}` produced a non-finite value"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Bindings for one evaluation: the four variables plus named constants.
///
/// Variables set with [`Env::set`] take priority; otherwise names are looked
/// up in the constant map, so a plain `name → value` map works as an
/// environment on its own.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    vars: [Option<f64>; 4],
    constants: Option<&'a BTreeMap<String, f64>>,
}



impl<'a> Env<'a> {
    pub fn new(constants: &'a BTreeMap<String, f64>) -> Self {
        Env { vars: [None; 4], constants: Some(constants) }
    }

    pub fn set(mut self, var: Var, value: f64) -> Self {
        self.vars[var as usize] = Some(value);
        self
    }

    pub fn t(self, v: f64) -> Self {
        self.set(Var::T, v)
    }

    pub fn x(self, v: f64) -> Self {
        self.set(Var::X, v)
    }

    pub fn lambda(self, v: f64) -> Self {
        self.set(Var::Lambda, v)
    }

    pub fn eps(self, v: f64) -> Self {
        self.set(Var::Eps, v)
    }

    fn var(&self, var: Var) -> Result<f64, EvalError> {
        if let Some(v) = self.vars[var as usize] {
            return Ok(v);
        }
        self.lookup(var.name())
    }

    fn lookup(&self, name: &str) -> Result<f64, EvalError> {
        self.constants
            .and_then(|m| m.get(name).copied())
            .ok_or_else(|| EvalError::Unbound(name.into()))
    }
}

fn finite(v: f64, op: &'static str) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(op))
    }
}

fn pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if base < 0.0 && libm::trunc(exponent) != exponent {
        return Err(EvalError::FractionalPowerOfNegative { base, exponent });
    }
    if base == 0.0 && exponent < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    finite(libm::pow(base, exponent), "^")
}

impl Expr {
    /// Evaluates the expression.
    pub fn eval(&self, env: &Env<'_>) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(v) => env.var(*v),
            Expr::Const(name) => env.lookup(name),
            Expr::Neg(e) => Ok(-e.eval(env)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(env)?;
                let b = r.eval(env)?;
                match op {
                    BinOp::Add => finite(a + b, "+"),
                    BinOp::Sub => finite(a - b, "-"),
                    BinOp::Mul => finite(a * b, "*"),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(EvalError::DivisionByZero)
                        } else {
                            finite(a / b, "/")
                        }
                    }
                    BinOp::Pow => pow(a, b),
                }
            }
            Expr::Call(func, arg) => {
                let v = arg.eval(env)?;
                match func {
                    Func::Exp => finite(libm::exp(v), "exp"),
                    Func::Log => {
                        if v <= 0.0 {
                            Err(EvalError::LogOfNonPositive(v))
                        } else {
                            Ok(libm::log(v))
                        }
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            Err(EvalError::SqrtOfNegative(v))
                        } else {
                            Ok(libm::sqrt(v))
                        }
                    }
                    Func::Abs => Ok(libm::fabs(v)),
                    Func::Sin => Ok(libm::sin(v)),
                    Func::Cos => Ok(libm::cos(v)),
                    Func::Gamma => {
                        if v <= 0.0 && libm::trunc(v) == v {
                            Err(EvalError::GammaPole(v))
                        } else {
                            finite(gamma(v), "gamma")
                        }
                    }
                }
            }
        }
    }

    /// Evaluates with a bare `name → value` map.
    pub fn eval_map(&self, env: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
        self.eval(&Env::new(env))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use alloc::string::ToString;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn eval_str(src: &str, pairs: &[(&str, f64)]) -> Result<f64, EvalError> {
        parse(src).unwrap().eval_map(&map(pairs))
    }

    #[test]
    fn example_b_rhs_value() {
        let v = eval_str("x/(a*(lambda - t))", &[("t", 1.0), ("x", 2.0), ("lambda", 2.0), ("a", 3.0)]).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn negative_cube_root_exponent() {
        let v = eval_str("lambda^(-1/3)", &[("lambda", 8.0)]).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn singular_point_is_a_domain_error() {
        let err = eval_str("1/(lambda - t)", &[("lambda", 2.0), ("t", 2.0)]).unwrap_err();
        assert_eq!(err, EvalError::DivisionByZero);
        assert!(err.is_domain());
    }

    #[test]
    fn precedence_values() {
        assert_eq!(eval_str("2+3*4", &[]).unwrap(), 14.0);
        assert_eq!(eval_str("2^3^2", &[]).unwrap(), 512.0);
        assert_eq!(eval_str("-2^2", &[]).unwrap(), -4.0);
        assert_eq!(eval_str("2*-3", &[]).unwrap(), -6.0);
        assert_eq!(eval_str("(-2)^3", &[]).unwrap(), -8.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(eval_str("log(0)", &[]), Err(EvalError::LogOfNonPositive(_))));
        assert!(matches!(eval_str("sqrt(-1)", &[]), Err(EvalError::SqrtOfNegative(_))));
        assert!(matches!(eval_str("(-8)^(1/3)", &[]), Err(EvalError::FractionalPowerOfNegative { .. })));
        assert_eq!(eval_str("0^(-1)", &[]), Err(EvalError::DivisionByZero));
        assert!(matches!(eval_str("gamma(-2)", &[]), Err(EvalError::GammaPole(_))));
        assert_eq!(eval_str("exp(1000)", &[]), Err(EvalError::NonFinite("exp")));
        assert_eq!(eval_str("x + 1", &[]), Err(EvalError::Unbound("x".into())));
        assert_eq!(eval_str("a", &[]), Err(EvalError::Unbound("a".into())));
    }

    #[test]
    fn functions() {
        let pi = core::f64::consts::PI;
        assert!((eval_str("gamma(1.5)", &[]).unwrap() - pi.sqrt() / 2.0).abs() < 1e-14);
        assert!((eval_str("exp(log(2))", &[]).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(eval_str("abs(-3)", &[]).unwrap(), 3.0);
        assert!((eval_str("sin(0.5)^2 + cos(0.5)^2", &[]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn explicit_slots_shadow_the_map() {
        let consts = map(&[("a", 3.0), ("t", 100.0)]);
        let e = parse("t + a").unwrap();
        assert_eq!(e.eval(&Env::new(&consts).t(1.0)).unwrap(), 4.0);
        assert_eq!(e.eval(&Env::new(&consts)).unwrap(), 103.0);
    }

    #[test]
    fn deterministic_and_shareable() {
        fn is_send_sync<T: Send + Sync>() {}
        is_send_sync::<Expr>();
        let e = parse("gamma(x)*exp(-x)/(lambda - t)").unwrap();
        let env = map(&[("x", 2.3), ("lambda", 2.0), ("t", 0.3)]);
        let a = e.eval_map(&env).unwrap();
        let b = e.eval_map(&env).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

//! Scalar expression language used to describe problem families.
//!
//! Expressions range over the variables `t`, `x`, `lambda` and `eps`, named
//! constants bound at evaluation time, the operators `+ - * / ^` and the
//! functions `exp log sqrt abs sin cos gamma`.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := '-' term | factor (('*'|'/') factor)*
//! factor := base ('^' factor)?
//! base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2`
//! is `-(2^2)` and `-1/3` is `-(1/3)`.

mod eval;
mod parse;

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

pub use eval::{Env, EvalError};
pub use parse::{parse, ParseError, ParseErrorKind};

/// The four reserved variable names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    X,
    Lambda,
    Eps,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::Lambda => "lambda",
            Var::Eps => "eps",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "t" => Some(Var::T),
            "x" => Some(Var::X),
            "lambda" => Some(Var::Lambda),
            "eps" => Some(Var::Eps),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Gamma,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Gamma => "gamma",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "gamma" => Func::Gamma,
            _ => return None,
        })
    }
}

/// Abstract syntax tree of a scalar expression.
///
/// Values are immutable once built and can be evaluated from several threads.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Const(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn constant(name: &str) -> Expr {
        Expr::Const(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Box::new(e))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, Box::new(arg))
    }

    /// Calls `visit` on every node, parents before children.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a Expr)) {
        visit(self);
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Const(_) => {}
            Expr::Neg(e) | Expr::Call(_, e) => e.walk(visit),
            Expr::Binary(_, l, r) => {
                l.walk(visit);
                r.walk(visit);
            }
        }
    }

    pub fn uses_var(&self, v: Var) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if *e == Expr::Var(v) {
                found = true;
            }
        });
        found
    }

    /// Names of all constants referenced by the expression, in visit order.
    pub fn constants(&self) -> alloc::vec::Vec<&str> {
        let mut out = alloc::vec::Vec::new();
        self.walk(&mut |e| {
            if let Expr::Const(name) = e {
                if !out.contains(&name.as_str()) {
                    out.push(name.as_str());
                }
            }
        });
        out
    }
}

/// Syntactic position a node is printed in; decides when parentheses are needed.
#[derive(Clone, Copy, PartialEq)]
enum Pos {
    /// Whole expression, or left operand of `+`/`-`.
    Sum,
    /// Right operand of `+`/`-`, or operand of unary minus.
    Term,
    /// Left operand of `*`/`/`.
    Product,
    /// Right operand of `*`/`/`, exponent of `^`.
    Factor,
    /// Base of `^`.
    Base,
}

fn fits(e: &Expr, pos: Pos) -> bool {
    match e {
        Expr::Num(v) => *v >= 0.0 && v.is_sign_positive() && v.is_finite(),
        Expr::Var(_) | Expr::Const(_) | Expr::Call(..) => true,
        Expr::Binary(BinOp::Pow, ..) => pos != Pos::Base,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => matches!(pos, Pos::Sum | Pos::Term | Pos::Product),
        Expr::Neg(_) => matches!(pos, Pos::Sum | Pos::Term),
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => pos == Pos::Sum,
    }
}

fn write_at(e: &Expr, pos: Pos, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if !fits(e, pos) {
        f.write_str("(")?;
        write_at(e, Pos::Sum, f)?;
        return f.write_str(")");
    }
    match e {
        Expr::Num(v) => write!(f, "{v:?}"),
        Expr::Var(v) => f.write_str(v.name()),
        Expr::Const(name) => f.write_str(name),
        Expr::Neg(inner) => {
            f.write_str("-")?;
            write_at(inner, Pos::Term, f)
        }
        Expr::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_at(arg, Pos::Sum, f)?;
            f.write_str(")")
        }
        Expr::Binary(op, l, r) => {
            let (lp, rp) = match op {
                BinOp::Add | BinOp::Sub => (Pos::Sum, Pos::Term),
                BinOp::Mul | BinOp::Div => (Pos::Product, Pos::Factor),
                BinOp::Pow => (Pos::Base, Pos::Factor),
            };
            write_at(l, lp, f)?;
            if *op == BinOp::Pow {
                f.write_str("^")?;
            } else {
                write!(f, " {} ", op.symbol())?;
            }
            write_at(r, rp, f)
        }
    }
}

/// Prints source text that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_at(self, Pos::Sum, f)
    }
}

impl core::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000, 0u32..4).prop_map(|(m, s)| Expr::Num(m as f64 / 10f64.powi(s as i32))),
            prop_oneof![Just(Var::T), Just(Var::X), Just(Var::Lambda), Just(Var::Eps)].prop_map(Expr::Var),
            prop_oneof![Just("a"), Just("c2"), Just("alpha")].prop_map(Expr::constant),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Expr::neg),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
                (
                    prop_oneof![Just(Func::Exp), Just(Func::Sqrt), Just(Func::Gamma), Just(Func::Cos)],
                    inner
                )
                    .prop_map(|(func, e)| Expr::call(func, e)),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_then_parse_is_identity(e in arb_expr()) {
            let text = e.to_string();
            let back = parse(&text).unwrap();
            prop_assert_eq!(back, e, "printed as {}", text);
        }
    }

    #[test]
    fn prints_with_minimal_parentheses() {
        let e = parse("x/(a*(lambda - t))").unwrap();
        assert_eq!(e.to_string(), "x / (a * (lambda - t))");
        let e = parse("lambda^(-1/3)").unwrap();
        assert_eq!(e.to_string(), "lambda^(-1.0 / 3.0)");
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.to_string(), "2.0^3.0^2.0");
        let e = parse("(2^3)^2").unwrap();
        assert_eq!(e.to_string(), "(2.0^3.0)^2.0");
    }

    #[test]
    fn constants_and_vars_are_collected() {
        let e = parse("x/(a*(lambda - t)) + a*b").unwrap();
        assert_eq!(e.constants(), ["a", "b"]);
        assert!(e.uses_var(Var::X));
        assert!(!e.uses_var(Var::Eps));
    }
}

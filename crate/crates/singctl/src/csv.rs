//! Plain CSV writers. Numbers are printed with 12 significant digits in the
//! style of C's `%.12g`, independent of locale.

use std::io::{self, Write};

use singctl_core::control::BisectionTrace;
use singctl_core::frac::FracTrajectory;
use singctl_core::{QuadResult, Trajectory};

/// `%.12g`: fixed notation for exponents in `[-4, 12)`, scientific
/// otherwise, trailing zeros removed.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x)).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn row(w: &mut (impl Write + ?Sized), cells: &[f64]) -> io::Result<()> {
    let line: Vec<String> = cells.iter().map(|c| num(*c)).collect();
    writeln!(w, "{}", line.join(","))
}

pub fn write_trajectory(w: &mut (impl Write + ?Sized), traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "t,u")?;
    for n in &traj.nodes {
        row(w, &[n.t, n.u])?;
    }
    Ok(())
}

pub fn write_frac_trajectory(w: &mut (impl Write + ?Sized), traj: &FracTrajectory) -> io::Result<()> {
    writeln!(w, "alpha,t,u")?;
    for n in &traj.nodes {
        row(w, &[traj.alpha, n.t, n.u])?;
    }
    Ok(())
}

pub const QUAD_HEADER: &str = "lambda,value,body,tail_estimate,tail_rigor_bound,delta,est_error";

fn quad_cells(lambda: f64, r: &QuadResult) -> [f64; 7] {
    [lambda, r.value, r.body, r.tail_estimate, r.tail_rigor_bound, r.delta, r.est_error]
}

/// Rows of `φ` values; a failed entry is written as `nan` cells.
pub fn write_quad<'a>(
    w: &mut (impl Write + ?Sized),
    rows: impl IntoIterator<Item = (f64, Option<&'a QuadResult>)>,
    alpha: Option<f64>,
) -> io::Result<()> {
    match alpha {
        Some(_) => writeln!(w, "alpha,{QUAD_HEADER}")?,
        None => writeln!(w, "{QUAD_HEADER}")?,
    }
    for (lambda, r) in rows {
        let cells = match r {
            Some(r) => quad_cells(lambda, r),
            None => [lambda, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
        };
        match alpha {
            Some(a) => {
                let mut v = vec![a];
                v.extend_from_slice(&cells);
                row(w, &v)?
            }
            None => row(w, &cells)?,
        }
    }
    Ok(())
}

/// `k,lambda,phi,residual,lo,hi`, plus `lambda_error` when the exact root
/// is known.
pub fn write_trace(
    w: &mut (impl Write + ?Sized),
    trace: &BisectionTrace,
    lambda_exact: Option<f64>,
    alpha: Option<f64>,
) -> io::Result<()> {
    let mut header = String::new();
    if alpha.is_some() {
        header.push_str("alpha,");
    }
    header.push_str("k,lambda,phi,residual,lo,hi");
    if lambda_exact.is_some() {
        header.push_str(",lambda_error");
    }
    writeln!(w, "{header}")?;
    for it in &trace.iterations {
        let mut cells = Vec::with_capacity(8);
        if let Some(a) = alpha {
            cells.push(a);
        }
        cells.extend_from_slice(&[it.k as f64, it.lambda, it.phi, it.residual, it.lo, it.hi]);
        if let Some(l) = lambda_exact {
            cells.push((it.lambda - l).abs());
        }
        row(w, &cells)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn twelve_digits() {
        assert_eq!(num(2.828848838806), "2.82884883881");
        assert_eq!(num(10.0), "10");
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(1e-7), "1e-07");
        assert_eq!(num(1.5e-5), "1.5e-05");
        assert_eq!(num(1.5e-4), "0.00015");
        assert_eq!(num(123456789012.0), "123456789012");
        assert_eq!(num(1234567890123.0), "1.23456789012e+12");
        assert_eq!(num(-2.5), "-2.5");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(999999999999.9), "1e+12");
    }
}

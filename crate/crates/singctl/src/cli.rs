//! Command-line surface.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand};
use singctl_core::control::{bisect, BisectionTrace, ControlSpec, Outcome};
use singctl_core::frac::{frac_control, phi_frac_with, solve_frac_with, FracScheme};
use singctl_core::ivp::solve_picard;
use singctl_core::problem::{builtin, verify, SamplingPlan};
use singctl_core::quad::{phi, phi_at_delta, phi_pnorm};
use singctl_core::{solve_truncated, Problem};
use thiserror::Error;

use crate::config::{parse_config, ConfigError};
use crate::csv;
use crate::sweep::par_sweep;

#[derive(Debug, Parser)]
#[command(name = "singctl", version, about = "Bisection control of IVPs with a moving singular endpoint")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["builtin", "problem"])))]
pub struct Source {
    /// Built-in problem: exampleA, remark13 or exampleB.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Problem file.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Override a constant, e.g. `--const a=3`.
    #[arg(long = "const", value_name = "NAME=VALUE", value_parser = parse_const)]
    pub consts: Vec<(String, f64)>,
}

fn parse_const(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_scheme(s: &str) -> Result<FracScheme, String> {
    FracScheme::from_name(s).ok_or_else(|| format!("unknown scheme `{s}` (abm, product_rectangle)"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve on [0, θ(λ) − δ] and write `t,u`.
    Solve {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Use fixed-grid Picard iteration with this many intervals instead.
        #[arg(long, value_name = "N")]
        picard: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate φ(λ).
    Phi {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Fixed truncation instead of the automatic choice.
        #[arg(long, conflicts_with_all = ["pnorm", "alpha"])]
        delta: Option<f64>,
        /// Evaluate (∫|u|^p)^(1/p) instead.
        #[arg(long, conflicts_with = "alpha")]
        pnorm: Option<f64>,
        /// Fractional order of the Caputo variant.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, value_parser = parse_scheme, default_value = "abm")]
        scheme: FracScheme,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find λ with φ(λ) = p by bisection.
    Control {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        ctl: ControlArgs,
    },
    /// Evaluate φ on a list or grid of λ.
    Sweep {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["lo", "hi", "steps"])]
        lambdas: Option<Vec<f64>>,
        #[arg(long, requires_all = ["hi", "steps"])]
        lo: Option<f64>,
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        workers: Option<NonZeroUsize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the structural hypotheses at λ.
    Verify {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        lambda: f64,
        /// Cut-off for the Lipschitz check; defaults to θ(λ)/4.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Solve the Caputo problem on a uniform grid and write `alpha,t,u`.
    FracSolve {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1024)]
        steps: usize,
        #[arg(long, value_parser = parse_scheme, default_value = "abm")]
        scheme: FracScheme,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bisection control for the Caputo problem.
    FracControl {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        ctl: ControlArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ControlArgs {
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 60)]
    pub max_iter: usize,
    /// Accuracy of each φ evaluation; defaults to tol/10.
    #[arg(long)]
    pub phi_tol: Option<f64>,
    /// Write the iteration trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

impl ControlArgs {
    fn spec(&self) -> ControlSpec {
        let mut spec = ControlSpec::new(self.p, self.lo, self.hi, self.tol);
        spec.max_iter = self.max_iter;
        if let Some(t) = self.phi_tol {
            spec.phi_tol = t;
        }
        spec
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] singctl_core::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Config(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
        }
    }

    /// Process exit status.
    pub fn status(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

impl Source {
    pub fn load(&self) -> Result<Problem, CliError> {
        let overrides: BTreeMap<String, f64> = self.consts.iter().cloned().collect();
        let mut def = match (&self.builtin, &self.problem) {
            (Some(name), _) => builtin(name, &overrides)?,
            (None, Some(path)) => parse_config(&fs::read_to_string(path).map_err(io_err(path))?)?,
            (None, None) => return Err(CliError::Usage("one of --builtin or --problem is required".into())),
        };
        def.constants.extend(overrides);
        Ok(Problem::from_def(&def)?)
    }
}

/// Writes to `path`, or to standard output when absent.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(fs::File::create(p).map_err(io_err(p))?);
            f(&mut file).and_then(|_| file.flush()).map_err(io_err(p))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

/// Root of `φ_exact(λ) = p` in `[lo, hi]`, when a closed form is known and
/// brackets it.
fn exact_root(prob: &Problem, spec: &ControlSpec) -> Option<f64> {
    let g = |l: f64| prob.phi_exact(l).and_then(|r| r.ok()).map(|v| v - spec.p);
    let (mut lo, mut hi) = (spec.lambda_lo, spec.lambda_hi);
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)?.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn report_trace(out: &mut (impl Write + ?Sized), trace: &BisectionTrace, exact: Option<f64>) -> io::Result<()> {
    let outcome = match trace.outcome {
        Outcome::Converged(_) => "converged",
        Outcome::Exhausted => "exhausted",
        Outcome::InvalidBracket => "invalid_bracket",
    };
    writeln!(out, "outcome={outcome}")?;
    writeln!(out, "phi_lo={}", csv::num(trace.phi_lo))?;
    writeln!(out, "phi_hi={}", csv::num(trace.phi_hi))?;
    writeln!(out, "iterations={}", trace.iterations.len())?;
    if let Some(it) = trace.iterations.last() {
        writeln!(out, "lambda={}", csv::num(it.lambda))?;
        writeln!(out, "phi={}", csv::num(it.phi))?;
        writeln!(out, "residual={}", csv::num(it.residual))?;
    }
    if let Some(l) = exact {
        writeln!(out, "lambda_exact={}", csv::num(l))?;
    }
    Ok(())
}

fn finish_control(
    trace: &BisectionTrace,
    exact: Option<f64>,
    alpha: Option<f64>,
    path: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(p) = path {
        emit(Some(p), |w| csv::write_trace(w, trace, exact, alpha))?;
    }
    emit(None, |w| report_trace(w, trace, exact))?;
    if trace.outcome == Outcome::InvalidBracket {
        return Err(CliError::Core(singctl_core::Error::Precondition(format!(
            "phi(lo) = {} and phi(hi) = {} do not bracket p = {}",
            csv::num(trace.phi_lo),
            csv::num(trace.phi_hi),
            csv::num(trace.spec.p)
        ))));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { src, lambda, delta, tol, picard, out } => {
            let prob = src.load()?;
            match picard {
                Some(n) => {
                    let sol = solve_picard(&prob, lambda, delta, n, tol, 10_000)?;
                    if !sol.converged {
                        eprintln!("warning: picard sweeps stopped with change {}", csv::num(sol.last_change));
                    }
                    emit(out.as_deref(), |w| {
                        writeln!(w, "t,u")?;
                        for (t, u) in sol.t.iter().zip(&sol.u) {
                            writeln!(w, "{},{}", csv::num(*t), csv::num(*u))?;
                        }
                        Ok(())
                    })
                }
                None => {
                    let traj = solve_truncated(&prob, lambda, delta, tol)?;
                    emit(out.as_deref(), |w| csv::write_trajectory(w, &traj))?;
                    eprintln!("nodes={} est_error={} evals={}", traj.nodes.len(), csv::num(traj.est_error), traj.evals);
                    Ok(())
                }
            }
        }
        Command::Phi { src, lambda, tol, delta, pnorm, alpha, scheme, out } => {
            let prob = src.load()?;
            let r = match (alpha, pnorm, delta) {
                (Some(a), _, _) => phi_frac_with(&prob, lambda, a, tol, scheme)?,
                (None, Some(p), _) => phi_pnorm(&prob, lambda, p, tol)?,
                (None, None, Some(d)) => phi_at_delta(&prob, lambda, d, tol)?,
                (None, None, None) => phi(&prob, lambda, tol)?,
            };
            emit(out.as_deref(), |w| csv::write_quad(w, [(lambda, Some(&r))], alpha))
        }
        Command::Control { src, ctl } => {
            let prob = src.load()?;
            let spec = ctl.spec();
            let trace = bisect(&prob, &spec)?;
            finish_control(&trace, exact_root(&prob, &spec), None, ctl.trace.as_deref())
        }
        Command::Sweep { src, lambdas, lo, hi, steps, tol, workers, out } => {
            let prob = src.load()?;
            let grid = match (lambdas, lo, hi, steps) {
                (Some(l), ..) => l,
                (None, Some(lo), Some(hi), Some(n)) if n >= 2 => {
                    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
                }
                (None, Some(lo), Some(_), Some(1)) => vec![lo],
                _ => return Err(CliError::Usage("sweep needs --lambdas or --lo/--hi/--steps".into())),
            };
            let results = par_sweep(&prob, &grid, tol, workers);
            for (l, r) in &results {
                if let Err(e) = r {
                    eprintln!("lambda={}: error: {}: {e}", csv::num(*l), e.kind());
                }
            }
            emit(out.as_deref(), |w| csv::write_quad(w, results.iter().map(|(l, r)| (*l, r.as_ref().ok())), None))
        }
        Command::Verify { src, lambda, eps } => {
            let prob = src.load()?;
            let theta = prob.admissible(lambda)?;
            let eps = eps.unwrap_or(0.25 * theta);
            let report = verify(&prob, lambda, eps, &SamplingPlan::default())?;
            emit(None, |w| {
                writeln!(w, "problem={}", prob.label())?;
                writeln!(w, "lambda={} eps={}", csv::num(lambda), csv::num(eps))?;
                for (name, v) in [("h1", &report.h1), ("h2", &report.h2), ("h3", &report.h3)] {
                    match v {
                        singctl_core::Verdict::NotChecked(why) => writeln!(w, "{name}: {} ({why})", v.label())?,
                        _ => writeln!(w, "{name}: {}", v.label())?,
                    }
                }
                writeln!(w, "samples={}", report.samples_used)?;
                for wt in &report.witnesses {
                    writeln!(
                        w,
                        "witness {:?} t={} x={} lambda={} excess={}",
                        wt.hypothesis,
                        csv::num(wt.t),
                        csv::num(wt.x),
                        csv::num(wt.lambda),
                        csv::num(wt.excess)
                    )?;
                }
                for note in &prob.notes {
                    writeln!(w, "note: {note}")?;
                }
                Ok(())
            })
        }
        Command::FracSolve { src, lambda, alpha, delta, steps, scheme, out } => {
            let prob = src.load()?;
            let traj = solve_frac_with(&prob, lambda, alpha, delta, steps, scheme)?;
            emit(out.as_deref(), |w| csv::write_frac_trajectory(w, &traj))?;
            eprintln!("nodes={} est_error={}", traj.nodes.len(), csv::num(traj.est_error));
            Ok(())
        }
        Command::FracControl { src, alpha, ctl } => {
            let prob = src.load()?;
            let trace = frac_control(&prob, alpha, &ctl.spec())?;
            finish_control(&trace, None, Some(alpha), ctl.trace.as_deref())
        }
    }
}

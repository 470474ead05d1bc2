//! Problem files: one `key = value` per line, `#` starts a comment, values
//! may be wrapped in double quotes.
//!
//! ```text
//! # u' = x/(a(lambda - t))
//! f = "x/(a*(lambda - t))"
//! theta = "lambda"
//! u0 = "lambda^(-1/a)"
//! growth_a = "a"
//! constants.a = 3
//! analytic.u_exact = "(lambda - t)^(-1/a)"
//! ```

use std::collections::BTreeMap;

use singctl_core::{Problem, ProblemDef};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}` needs a number, got `{value}`")]
    NotNumber { line: usize, key: String, value: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Problem(#[from] singctl_core::Error),
}

impl ConfigError {
    pub fn kind(&self) -> &'static str {
        match self {
            ConfigError::Problem(e) => e.kind(),
            _ => "config",
        }
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// Strips a trailing comment, ignoring `#` inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

pub fn parse_config(text: &str) -> Result<ProblemDef, ConfigError> {
    let mut def = ProblemDef::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let (mut f, mut theta, mut u0) = (None, None, None);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw).trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let key = key.trim();
        let value = unquote(value).to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        if seen.insert(key.to_string(), line).is_some() {
            return Err(ConfigError::Duplicate { line, key: key.into() });
        }
        let number = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::NotNumber { line, key: key.into(), value: v.into() })
        };
        match key {
            "name" => def.name = Some(value),
            "f" => f = Some(value),
            "theta" => theta = Some(value),
            "u0" => u0 = Some(value),
            "growth_a" => def.growth_a = Some(value),
            "c_lambda" => def.c_lambda = Some(value),
            "lipschitz" => def.lipschitz = Some(value),
            "analytic.u_exact" => def.u_exact = Some(value),
            "analytic.phi_exact" => def.phi_exact = Some(value),
            "lambda_min" => def.lambda_min = Some(number(&value)?),
            "lambda_max" => def.lambda_max = Some(number(&value)?),
            k => match k.strip_prefix("constants.") {
                Some(name) if !name.is_empty() => {
                    def.constants.insert(name.to_string(), number(&value)?);
                }
                _ => return Err(ConfigError::UnknownKey { line, key: k.into() }),
            },
        }
    }
    def.f = f.ok_or(ConfigError::Missing("f"))?;
    def.theta = theta.ok_or(ConfigError::Missing("theta"))?;
    def.u0 = u0.ok_or(ConfigError::Missing("u0"))?;
    Ok(def)
}

/// Parses and validates a problem file.
pub fn load_problem(text: &str) -> Result<Problem, ConfigError> {
    Ok(Problem::from_def(&parse_config(text)?)?)
}

/// Renders a definition back to the file format.
pub fn render_config(def: &ProblemDef) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: &str| out.push_str(&format!("{k} = \"{v}\"\n"));
    if let Some(n) = &def.name {
        put("name", n);
    }
    put("f", &def.f);
    put("theta", &def.theta);
    put("u0", &def.u0);
    for (k, v) in [
        ("growth_a", &def.growth_a),
        ("c_lambda", &def.c_lambda),
        ("lipschitz", &def.lipschitz),
        ("analytic.u_exact", &def.u_exact),
        ("analytic.phi_exact", &def.phi_exact),
    ] {
        if let Some(v) = v {
            put(k, v);
        }
    }
    for (k, v) in [("lambda_min", def.lambda_min), ("lambda_max", def.lambda_max)] {
        if let Some(v) = v {
            out.push_str(&format!("{k} = {v:?}\n"));
        }
    }
    for (k, v) in &def.constants {
        out.push_str(&format!("constants.{k} = {v:?}\n"));
    }
    out
}

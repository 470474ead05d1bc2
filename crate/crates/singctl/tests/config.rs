use std::collections::BTreeMap;

use singctl::{load_problem, parse_config, render_config, ConfigError};
use singctl_core::problem::builtin;
use singctl_core::{Error, Expr, Problem};

const EXAMPLE_B: &str = r#"
# u' = x/(a(lambda - t))
name = exampleB
f = "x/(a*(lambda - t))"
theta = "lambda"
u0 = "lambda^(-1/a)"      # initial value
growth_a = "a"
c_lambda = 0
lipschitz = "1/(a*eps)"
constants.a = 3
analytic.u_exact = "(lambda - t)^(-1/a)"
analytic.phi_exact = "a/(a - 1)*lambda^((a - 1)/a)"
"#;

#[test]
fn example_b_file_matches_builtin() {
    let p = load_problem(EXAMPLE_B).unwrap();
    let b = Problem::from_def(&builtin("exampleB", &BTreeMap::new()).unwrap()).unwrap();
    assert_eq!(p.f, b.f);
    assert_eq!(p.theta, "lambda".parse::<Expr>().unwrap());
    assert_eq!(p.u0, "lambda^(-1/a)".parse::<Expr>().unwrap());
    assert_eq!(p.u0.to_string(), "lambda^(-1.0 / a)");
    assert_eq!(p.growth_a, Some(3.0));
    assert_eq!(p.analytic, b.analytic);
    assert_eq!(p.name.as_deref(), Some("exampleB"));
}

#[test]
fn builtin_round_trips_through_text() {
    for name in ["exampleA", "remark13", "exampleB"] {
        let def = builtin(name, &BTreeMap::new()).unwrap();
        let text = render_config(&def);
        let back = parse_config(&text).unwrap();
        assert_eq!(back.f, def.f, "{name}");
        assert_eq!(back.u0, def.u0);
        assert_eq!(back.constants, def.constants);
        assert_eq!(back.lambda_min, def.lambda_min);
        assert_eq!(Problem::from_def(&back).unwrap().u0, Problem::from_def(&def).unwrap().u0);
    }
}

#[test]
fn example_a_initial_value() {
    let def = builtin("exampleA", &BTreeMap::new()).unwrap();
    let p = load_problem(&render_config(&def)).unwrap();
    assert_eq!(p.u0, "1/lambda".parse::<Expr>().unwrap());
}

#[test]
fn growth_below_one_is_rejected() {
    let text = EXAMPLE_B.replace("growth_a = \"a\"", "growth_a = 0.5");
    match load_problem(&text) {
        Err(ConfigError::Problem(Error::InvalidProblem { reason, .. })) => assert!(reason.contains("growth_a")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn structural_errors_carry_lines() {
    let e = parse_config("f = x\ntheta = lambda\nu0 = 1\nspeed = 3\n").unwrap_err();
    assert!(matches!(e, ConfigError::UnknownKey { line: 4, .. }), "{e}");
    let e = parse_config("f = x\nf = 2\n").unwrap_err();
    assert!(matches!(e, ConfigError::Duplicate { line: 2, .. }));
    let e = parse_config("f = x\njust words\n").unwrap_err();
    assert!(matches!(e, ConfigError::Syntax { line: 2 }));
    let e = parse_config("f = x\ntheta = lambda\nu0 = 1\nconstants.a = three\n").unwrap_err();
    assert!(matches!(e, ConfigError::NotNumber { line: 4, .. }));
    assert!(matches!(parse_config("f = x\nu0 = 1\n").unwrap_err(), ConfigError::Missing("theta")));
    assert_eq!(parse_config("f = x\ntheta = lambda\nu0 = 1\nconstants. = 1\n").unwrap_err().kind(), "config");
}

#[test]
fn expression_errors_name_the_slot() {
    let e = load_problem("f = x\ntheta = lambda\nu0 = \"lambda^(\"\n").unwrap_err();
    match e {
        ConfigError::Problem(Error::Parse { slot, source }) => {
            assert_eq!(slot, "u0");
            assert_eq!(source.offset, 8);
        }
        other => panic!("{other:?}"),
    }
    let e = load_problem("f = x\ntheta = lambda\nu0 = \"k\"\n").unwrap_err();
    assert_eq!(e.kind(), "invalid-problem");
}

#[test]
fn hash_inside_quotes_is_kept_and_range_keys_parse() {
    let d = parse_config("name = \"a#b\"\nf = 0\ntheta = 2\nu0 = 1\nlambda_min = 1\nlambda_max = 4 # upper\n").unwrap();
    assert_eq!(d.name.as_deref(), Some("a#b"));
    assert_eq!((d.lambda_min, d.lambda_max), (Some(1.0), Some(4.0)));
    let p = Problem::from_def(&d).unwrap();
    assert!(p.admissible(1.0).is_err());
    assert!(p.admissible(4.0).is_ok());
}

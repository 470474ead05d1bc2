use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn singctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singctl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn solve_example_a_ends_at_ten() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("traj.csv");
    let o = singctl(&["solve", "--builtin", "exampleA", "--lambda", "2", "--delta", "0.1", "--tol", "1e-10", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&out);
    assert_eq!(r[0], ["t", "u"]);
    assert_eq!(r[1], ["0", "0.5"]);
    let last = r.last().unwrap();
    assert_eq!(last[0], "1.9");
    assert!((last[1].parse::<f64>().unwrap() - 10.0).abs() < 1e-6);
}

#[test]
fn control_writes_both_error_columns() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("out.csv");
    let o = singctl(&[
        "control", "--builtin", "exampleB", "--const", "a=3", "--p", "3", "--lo", "1", "--hi", "4", "--tol", "1e-6", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("outcome=converged"), "{text}");
    let r = rows(&trace);
    assert_eq!(r[0], ["k", "lambda", "phi", "residual", "lo", "hi", "lambda_error"]);
    assert_eq!(r[1][..2], ["1", "2.5"]);
    let last = r.last().unwrap();
    assert!(last[3].parse::<f64>().unwrap() <= 1e-6);
    assert!(last[6].parse::<f64>().unwrap() <= 5e-4);
}

#[test]
fn control_example_b_is_fast() {
    let start = Instant::now();
    let o = singctl(&["control", "--builtin", "exampleB", "--p", "3", "--lo", "1", "--hi", "4", "--tol", "1e-6"]);
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let text = stdout(&o);
    let lambda: f64 = text.lines().find_map(|l| l.strip_prefix("lambda=")).unwrap().parse().unwrap();
    assert!((lambda - 2f64.powf(1.5)).abs() <= 5e-4, "{text}");
}

#[test]
fn verify_remark13_reports_h3() {
    let o = singctl(&["verify", "--builtin", "remark13", "--lambda", "1.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("h1: pass"), "{text}");
    assert!(text.contains("h3: not-checked") || text.contains("h3: fail"), "{text}");
    assert!(text.contains("h3 not satisfied"));
}

#[test]
fn verify_detects_violator_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("bad.cfg");
    fs::write(&prob, "f = \"2*x/(lambda - t)\"\ntheta = lambda\nu0 = 1\ngrowth_a = 3\nlipschitz = \"2/eps\"\n").unwrap();
    let o = singctl(&["verify", "--problem", prob.to_str().unwrap(), "--lambda", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("h3: fail"), "{text}");
    assert!(text.contains("witness H3"));
}

#[test]
fn phi_sweep_and_pnorm() {
    let o = singctl(&["phi", "--builtin", "exampleB", "--lambda", "1", "--tol", "1e-8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("lambda,value,body,tail_estimate,tail_rigor_bound,delta,est_error"));
    let v: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 1.5).abs() < 1e-8);

    let o = singctl(&["phi", "--builtin", "exampleB", "--lambda", "1", "--pnorm", "2"]);
    let v: f64 = stdout(&o).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 3f64.sqrt()).abs() < 1e-7);

    let o = singctl(&["sweep", "--builtin", "exampleB", "--lambdas", "1,2,3,4", "--workers", "3"]);
    assert!(o.status.success());
    let vals: Vec<f64> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    for (v, e) in vals.iter().zip([1.5, 2.38110, 3.12013, 3.77976]) {
        assert!((v - e).abs() < 1e-5);
    }
    let o = singctl(&["sweep", "--builtin", "exampleB", "--lo", "1", "--hi", "2", "--steps", "3"]);
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn sweep_keeps_failed_entries() {
    let o = singctl(&["sweep", "--builtin", "exampleB", "--lambdas", "1,-1,2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("-1,nan"));
    assert!(stderr(&o).contains("error: precondition"));
}

#[test]
fn fractional_commands() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("one.cfg");
    fs::write(&prob, "f = 1\ntheta = lambda\nu0 = 0\ngrowth_a = 2\nc_lambda = 1\n").unwrap();
    let p = prob.to_str().unwrap();
    let out = dir.path().join("frac.csv");
    let o = singctl(&["frac-solve", "--problem", p, "--lambda", "2", "--alpha", "0.5", "--delta", "1", "--steps", "64", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = rows(&out);
    assert_eq!(r[0], ["alpha", "t", "u"]);
    assert_eq!(r.len(), 66);
    assert!((r[65][2].parse::<f64>().unwrap() - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-9);

    let trace = dir.path().join("trace.csv");
    let o = singctl(&[
        "frac-control", "--problem", p, "--alpha", "0.5", "--p", "0.752253", "--lo", "0.5", "--hi", "2", "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("outcome=converged"));
    assert_eq!(rows(&trace)[0], ["alpha", "k", "lambda", "phi", "residual", "lo", "hi"]);
}

#[test]
fn picard_mode_matches_adaptive_endpoint() {
    let o = singctl(&["solve", "--builtin", "exampleB", "--lambda", "2", "--delta", "0.5", "--picard", "2000", "--tol", "1e-12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let last = text.lines().last().unwrap();
    let u: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((u - 0.5f64.powf(-1.0 / 3.0)).abs() < 1e-6);
}

#[test]
fn output_is_byte_stable() {
    let args = ["sweep", "--builtin", "remark13", "--lambdas", "1.5,2,3"];
    let a = singctl(&args);
    let b = singctl(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("lambda,value,"));
}

#[test]
fn flag_errors_exit_2() {
    let o = singctl(&["solve", "--builtin", "exampleA", "--lambda", "two", "--delta", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = singctl(&["phi", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = singctl(&["phi", "--builtin", "exampleB", "--problem", "x.cfg", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = singctl(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1_with_kind() {
    let o = singctl(&["solve", "--builtin", "exampleA", "--lambda", "2", "--delta", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: precondition: "), "{}", stderr(&o));

    let o = singctl(&["phi", "--builtin", "exampleA", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: tail-diverges: "));

    let o = singctl(&["phi", "--builtin", "nope", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(1));

    let o = singctl(&["phi", "--problem", "/nonexistent/p.cfg", "--lambda", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: io: "));

    let o = singctl(&["control", "--builtin", "exampleB", "--p", "0.1", "--lo", "1", "--hi", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("outcome=invalid_bracket"));
}

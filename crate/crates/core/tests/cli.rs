//! End-to-end runs of the command-line interface.

use std::path::Path;
use std::process::{Command, Output};

fn graphforms(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphforms"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_str().unwrap().to_string()
}

const TWO_VERTEX: &str = r#"{
    "vertices": ["a", "b"],
    "edges": [{"u": "a", "v": "b", "w": 1.0}],
    "killing": [{"v": "a", "c": 1.0}]
}"#;

const STAR_SPEC: &str = r#"{
    "generator": {"kind": "star", "rays": 3, "weights": "geometric:2",
                  "depth": 20, "decay_measure": true}
}"#;

#[test]
fn green_on_two_vertex_graph() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "g.json", TWO_VERTEX);
    let csv = dir.path().join("green.csv");
    let out = graphforms(
        &[
            "green",
            "--spec",
            &spec,
            "--vertex",
            "a",
            "--levels",
            "4",
            "--tol",
            "1e-6",
            "--csv",
            csv.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("verdict: transient"), "{text}");
    assert!(std::fs::read_to_string(csv).unwrap().contains("radius_1,1"));
}

#[test]
fn decompose_reports_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "star.json", STAR_SPEC);
    let f = write(
        dir.path(),
        "f.json",
        r#"{"values": {"0": 1.0}, "tail": {"rule": "zero"}}"#,
    );
    let out = graphforms(
        &["decompose", "--spec", &spec, "--f", &f, "--tol", "1e-8"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("pythagorean residual"), "{text}");
}

#[test]
fn star_qdn_measure_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphforms(
        &["star", "qdn", "--N", "3", "--weights", "geometric:2", "--depth", "20"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0.666666666666666"), "{text}");

    let out = graphforms(&["star", "measure", "--vertex", "0"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0.3333333333333333"), "{text}");

    let f = write(
        dir.path(),
        "f.json",
        r#"{"values": {}, "tail": {"rule": "constant", "value": 2.5}}"#,
    );
    let out = graphforms(&["star", "trace", "--f", &f], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("value = 2.5"), "{text}");
}

#[test]
fn forms_trace_and_compose_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "star.json", STAR_SPEC);
    let out = graphforms(
        &["forms", "trace", "--spec", &spec, "--form", "neumann"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // an admissible boundary form: qdn + uniform jumps
    let q = write(
        dir.path(),
        "q.json",
        r#"{"n": 3, "entries": [1.1666666666666667, -0.5833333333333334, -0.5833333333333334,
                                -0.5833333333333334, 1.1666666666666667, -0.5833333333333334,
                                -0.5833333333333334, -0.5833333333333334, 1.1666666666666667]}"#,
    );
    let out = graphforms(
        &["forms", "compose", "--q", &q, "--verify", "--spec", &spec, "--tol", "1e-5"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );

    // a form below the Dirichlet-to-Neumann form is rejected as input
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"n": 3, "entries": [0.1, 0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.1]}"#,
    );
    let out = graphforms(&["forms", "compose", "--q", &bad, "--spec", &spec], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn forms_check_markov_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphforms(
        &["forms", "check", "--suite", "markov", "--samples", "200"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0 violations"), "{text}");
}

#[test]
fn approx_sweep_monotone_output() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "g.json", TWO_VERTEX);
    let f = write(
        dir.path(),
        "f.json",
        r#"{"values": {"b": 1.0}, "tail": {"rule": "zero"}}"#,
    );
    let out = graphforms(
        &["approx", "sweep", "--spec", &spec, "--f", &f, "--alphas", "1,10,100"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("alpha = 1: 0.4"), "{text}");
}

#[test]
fn scenario_star_toy_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.txt");
    let out = graphforms(
        &[
            "scenario",
            "--name",
            "star-toy",
            "--out",
            out_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_path).unwrap();
    assert!(text.contains("result: PASS"), "{text}");
    assert!(text.contains("provenance=closed-form"));
}

#[test]
fn scenario_all_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let out = graphforms(&["scenario", "--all", "--parallel"], dir.path());
    assert!(
        out.status.success(),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.matches("result: PASS").count(), 5, "{text}");
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "g.json", "{nonsense");
    let out = graphforms(
        &["green", "--spec", &spec, "--vertex", "a"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = graphforms(&["scenario", "--name", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let asym = write(
        dir.path(),
        "asym.json",
        r#"{"vertices": ["a", "b"],
            "edges": [{"u": "a", "v": "b", "w": 1.0}, {"u": "b", "v": "a", "w": 2.0}]}"#,
    );
    let out = graphforms(&["green", "--spec", &asym, "--vertex", "a"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn deterministic_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        let out = graphforms(
            &["scenario", "--name", "main-theorem-roundtrip", "--seed", "7"],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8_lossy(&out.stdout).to_string()
    };
    // identical inputs give bit-identical reports up to the runtime line
    let strip = |s: String| {
        s.lines()
            .filter(|l| !l.starts_with("result:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(run()), strip(run()));
}

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn sop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sop"))
        .args(args)
        .output()
        .expect("spawn sop")
}

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sop-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

const SCENARIO: &str = r#"
es_db = 40.0
esi_db = 15.0
alpha = 3.0
d_b = 2.5
d_e = 25.0
r_s = [0.5, 1.0]
interferers = [[10.0, 15.0], [20.0, 10.0], [25.0, 5.0]]
"#;

#[test]
fn eval_from_flags() {
    let out = sop(&[
        "eval",
        "--es-db",
        "40",
        "--esi-db",
        "15",
        "--rs",
        "1",
        "--methods",
        "closed_form,quadrature",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r_s,method,sop,uncertainty,fallbacks");
    assert_eq!(lines.len(), 3);
    let values: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!((values[0] - values[1]).abs() < 1e-9);
}

#[test]
fn eval_from_config_file() {
    let dir = scratch_dir("eval");
    let path = dir.join("scenario.toml");
    fs::write(&path, SCENARIO).unwrap();
    let out = sop(&[
        "eval",
        "--config",
        path.to_str().unwrap(),
        "--trials",
        "20000",
        "--seed",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    // two rates times three methods
    assert_eq!(text.lines().count(), 7);
    assert!(text.contains("0.5,monte_carlo,"));
}

#[test]
fn sweep_file_writes_companion_checks() {
    let dir = scratch_dir("sweep");
    let spec = dir.join("sweep.toml");
    fs::write(
        &spec,
        format!(
            "methods = [\"closed_form\", \"quadrature\"]\n\n[scenario]\n{SCENARIO}\n[axis]\nparam = \"es_db\"\nstart = 0.0\nstop = 20.0\nstep = 10.0\n\n[curves]\nesi_db = [5.0, 35.0]\n"
        ),
    )
    .unwrap();
    let csv = dir.join("out.csv");
    let plot = dir.join("out.dat");
    let out = sop(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "-o",
        csv.to_str().unwrap(),
        "--gnuplot",
        plot.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 2 * 2);
    let checks = fs::read_to_string(dir.join("out.csv.checks.csv")).unwrap();
    assert_eq!(checks.lines().count(), 1 + 3 * 2);
    assert!(fs::read_to_string(&plot).unwrap().starts_with("# curve="));
}

#[test]
fn figure_curve_override() {
    let out = sop(&[
        "figure",
        "fig1",
        "--methods",
        "closed_form",
        "--rs",
        "1",
        "--esi-db",
        "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // 26 axis points, one curve, one method
    assert_eq!(text.lines().count(), 27);
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.contains(",r_s=1;esi_db=5,closed_form,")));
}

#[test]
fn sweep_preset_matches_figure() {
    let a = sop(&["sweep", "--preset", "fig4", "--methods", "closed_form"]);
    let b = sop(&["figure", "fig4", "--methods", "closed_form"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn validate_reports_and_trips() {
    let ok = sop(&["validate", "--trials", "0"]);
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    assert_eq!(
        String::from_utf8(ok.stdout).unwrap().lines().count(),
        1 + 162
    );
    let strict = sop(&["validate", "--trials", "0", "--tolerance", "1e-300"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn errors_exit_with_one() {
    assert_eq!(sop(&["figure", "fig9"]).status.code(), Some(1));
    assert_eq!(sop(&["figure", "fig2", "--rs", "1"]).status.code(), Some(1));
    assert_eq!(sop(&["eval", "--rs", "-1"]).status.code(), Some(1));
    assert_eq!(
        sop(&["eval", "--config", "/nonexistent/scenario.toml"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(sop(&["sweep"]).status.code(), Some(1));
    assert_eq!(
        sop(&["--threads", "0", "figure", "fig1"]).status.code(),
        Some(1)
    );
    assert_eq!(sop(&["--help"]).status.code(), Some(0));
}

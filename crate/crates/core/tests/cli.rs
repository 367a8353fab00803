use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smvi::metrics::PointCloud;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smvi"))
}

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(format!("{name}.smvi"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_bundled_files() {
    for name in ["sfp", "svip", "smvip", "smp", "example1", "example2", "example3", "example4"] {
        let o = run(&["validate", problem(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn bundled_files_match_templates() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["sfp", "svip", "smvip", "smp", "example1", "example2", "example3", "example4"] {
        let out = dir.path().join(format!("{name}.smvi"));
        let o = run(&["init", "--template", name, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(std::fs::read_to_string(&out).unwrap(), std::fs::read_to_string(problem(name)).unwrap());
        let o = run(&["validate", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let o = run(&["init", "--template", "nope", "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_missing_section_and_context() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(problem("example1")).unwrap();
    let cut = text.find("[map.B2]").unwrap();
    let missing = dir.path().join("missing.smvi");
    std::fs::write(&missing, &text[..cut]).unwrap();
    let o = run(&["validate", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("map.B2"), "{}", stderr(&o));

    let bad = dir.path().join("bad.smvi");
    std::fs::write(&bad, text.replace("expr = y1^2", "expr = x1^2")).unwrap();
    let o = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("variable out of context"), "{}", stderr(&o));

    let o = run(&["validate", dir.path().join("absent.smvi").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn member_exit_codes() {
    let ex1 = problem("example1");
    let o = run(&["member", ex1.to_str().unwrap(), "--z", "0", "--w", "0", "--eps", "0.01"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("member = true"));

    let o = run(&["member", ex1.to_str().unwrap(), "--z", "0.5", "--w", "0.5", "--eps", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("defect2 = 0.25"), "{}", stdout(&o));

    let ex3 = problem("example3");
    let o = run(&["member", ex3.to_str().unwrap(), "--z", "0", "--w", "0", "--eps", "0.001", "--p", "0.5", "--delta", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("q = [0.5]"));

    let o = run(&["member", ex1.to_str().unwrap(), "--z", "0,1", "--w", "0", "--eps", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["member", ex1.to_str().unwrap(), "--z", "0", "--w", "0", "--eps", "-0.1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["member", ex1.to_str().unwrap(), "--z", "-1", "--w", "-1", "--eps", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn member_agrees_with_library() {
    let p: smvi::SplitProblem = smvi::model::problem_from_str(&std::fs::read_to_string(problem("example2")).unwrap()).unwrap();
    let grid = smvi::residual::GridSpec::for_problem(&p);
    for (z, w, eps) in [(1.0, 1.0, 0.0), (0.9, 0.95, 0.05), (0.0, 0.0, 0.5), (-0.97, -1.0, 0.02)] {
        let lib = smvi::residual::is_member(&p, &[z], &[w], eps, None, None, grid).unwrap().member;
        let o = run(&[
            "member",
            problem("example2").to_str().unwrap(),
            "--z",
            &z.to_string(),
            "--w",
            &w.to_string(),
            "--eps",
            &eps.to_string(),
        ]);
        assert_eq!(o.status.code(), Some(if lib { 0 } else { 1 }), "({z}, {w}) at {eps}");
    }
}

#[test]
fn scan_writes_csv_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cloud.csv");
    let o = run(&["scan", problem("example1").to_str().unwrap(), "--eps", "0.05", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# eps=0.05, delta=none, res=0.01, region="));
    let cloud = PointCloud::<f64>::from_csv(&text).unwrap();
    assert!(!cloud.is_empty());
    assert!(cloud.points().iter().flatten().all(|&v| (-0.05..=1.05).contains(&v)));

    let o = run(&["scan", problem("example2").to_str().unwrap(), "--eps", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let cloud = PointCloud::<f64>::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!cloud.is_empty());
    for q in cloud.points() {
        let near = |c: f64| ((q[0] - c).powi(2) + (q[1] - c).powi(2)).sqrt() <= 0.02;
        assert!(near(1.0) || near(-1.0), "{q:?}");
    }
}

#[test]
fn empty_scan_is_header_only_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("empty.smvi");
    let text = std::fs::read_to_string(problem("example1")).unwrap().replace("[set.Q]\nkind = box\nlower = 0\nupper = 1", "[set.Q]\nkind = box\nlower = 2\nupper = 3");
    std::fs::write(&spec, text).unwrap();
    let out = dir.path().join("cloud.csv");
    let o = run(&["scan", spec.to_str().unwrap(), "--eps", "0.05", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(PointCloud::<f64>::from_csv(&csv).unwrap().is_empty());
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>(), vec!["dim,2"]);
}

#[test]
fn scan_rejects_small_region() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cloud.csv");
    let o = run(&[
        "scan",
        problem("example1").to_str().unwrap(),
        "--eps",
        "0.1",
        "--region",
        "0,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eps-inflation"));
}

#[test]
fn sweep_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let read = |p: &Path| -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap() };

    let o = run(&["sweep", problem("example1").to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read(&report)["verdict"], "EvidenceLPWellPosed");

    let o = run(&["sweep", problem("example2").to_str().unwrap(), "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = read(&report);
    assert_eq!(r["verdict"], "EvidenceGeneralizedLPWellPosed");
    assert_eq!(r["verdict_detail"]["clusters"], 2);

    let o = run(&["sweep", problem("example1").to_str().unwrap(), "--schedule", "0.1", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(read(&report)["verdict"].as_str().unwrap().starts_with("Inconclusive"));

    let o = run(&["sweep", problem("example1").to_str().unwrap(), "--schedule", "0.1,0.2", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["sweep", problem("example3").to_str().unwrap(), "--p", "0.5", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read(&report);
    assert_eq!(r["verdict"], "EvidenceLPWellPosed");
    assert_eq!(r["delta_schedule"], serde_json::json!([0.2, 0.1, 0.05, 0.02]));
}

#[test]
fn probe_runs() {
    let o = run(&["probe", problem("example2").to_str().unwrap(), "--trials", "5", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("passed 5 of 5"), "{}", stdout(&o));
}

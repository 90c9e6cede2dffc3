use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tvopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const CIRCLE: &str = r#"
[problem]
name = "circle"

[method]
kind = "projected-gradient"
alpha = 0.5

[schedule]
h = 0.1
num_samples = 250
"#;

fn write_spec(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("spec.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), CIRCLE);
    let out = tmp.path().join("out");
    let o = tvopt(&["run", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["trajectory.csv", "trajectory.json", "metrics.json", "error_vs_k.dat", "spec.toml"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["contraction_violations"], 0);
    assert_eq!(metrics["problem"], "circle");
    assert!(metrics["counts"]["gradient"].as_u64().unwrap() > 0);
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("k,t,x_0,x_1,xstar_0,xstar_1,err,fpr,cost\n"));
    assert_eq!(csv.lines().count(), 251);
}

#[test]
fn format_flag_selects_files() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), CIRCLE);
    let out = tmp.path().join("json");
    let o = tvopt(&["run", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("trajectory.json").is_file());
    assert!(!out.join("trajectory.csv").exists());
    assert!(out.join("metrics.json").is_file());

    let o = tvopt(&["run", spec.to_str().unwrap(), "--format", "xml"]);
    assert!(!o.status.success());
}

#[test]
fn seed_changes_only_the_start() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), CIRCLE);
    let read = |seed: &str| {
        let out = tmp.path().join(format!("seed{seed}"));
        let o = tvopt(&["run", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(out.join("trajectory.csv")).unwrap()
    };
    let (a, b, c) = (read("1"), read("2"), read("1"));
    assert_eq!(a, c);
    assert_ne!(a, b);
    // Same x*, different x0.
    let row0 = |s: &str| s.lines().nth(1).unwrap().split(',').map(String::from).collect::<Vec<_>>();
    assert_eq!(row0(&a)[4..6], row0(&b)[4..6]);
    assert_ne!(row0(&a)[2..4], row0(&b)[2..4]);
}

#[test]
fn missing_h_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), &CIRCLE.replace("h = 0.1\n", ""));
    let o = tvopt(&["run", spec.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("`h`"), "{}", stderr(&o));
}

#[test]
fn large_step_cites_the_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), &CIRCLE.replace("alpha = 0.5", "alpha = 3.0"));
    let o = tvopt(&["run", spec.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("2/L"), "{}", stderr(&o));
}

#[test]
fn empty_sweep_axis_fails_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_spec(tmp.path(), &format!("{CIRCLE}\n[sweep]\nh = []\n"));
    let o = tvopt(&["sweep", spec.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_points_fit_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let spec = configs().join("order_running.toml");
    let o = tvopt(&["sweep", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("order fit [all]: slope"));
    for h in ["0.2", "0.1", "0.05", "0.025"] {
        assert!(out.join(format!("h={h}/metrics.json")).is_file());
        assert!(out.join(format!("h={h}/trajectory.csv")).is_file());
    }
    let fits: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("order_fit.json")).unwrap()).unwrap();
    let slope = fits[0]["fit"]["slope"].as_f64().unwrap();
    assert!((0.85..=1.15).contains(&slope));
    let dat = fs::read_to_string(out.join("error_vs_h.dat")).unwrap();
    assert_eq!(dat.lines().count(), 5);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("point,group,h,method,scheme,assumptions,corrections,asymptotic_error"));
    assert_eq!(summary.lines().count(), 5);
    assert!(fs::read_to_string(out.join("summary.txt")).unwrap().contains("correction-only"));
}

#[test]
fn scheme_comparison_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cmp");
    let spec = configs().join("compare_schemes.toml");
    let o = tvopt(&["sweep", spec.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    assert!(!out.join("order_fit.json").exists());
    // Every directory named in the summary exists and its metrics parse.
    for r in &rows {
        let text = fs::read_to_string(out.join(&r[0]).join("metrics.json")).unwrap();
        let _: serde_json::Value = serde_json::from_str(&text).unwrap();
    }
}

#[test]
fn failed_grid_point_sets_exit_status() {
    let tmp = tempfile::tempdir().unwrap();
    // α = 2.5 breaks α < 2/L; settings are checked before anything runs.
    let text = format!("{CIRCLE}\n[sweep]\nalpha = [0.5, 2.5]\n");
    let spec = write_spec(tmp.path(), &text);
    let o = tvopt(&["sweep", spec.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("alpha=2.5"), "{}", stderr(&o));
}

#[test]
fn runtime_failure_is_recorded_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    // Proximal point on a box runs an inner loop; capping it at one
    // iteration makes every point fail at run time.
    let text = r#"
[problem]
name = "circle-box"

[method]
kind = "proximal-point"
alpha = 1.0
inner_max_iterations = 1

[schedule]
h = 0.1
num_samples = 200

[sweep]
corrections = [1, 2]
"#;
    let spec = write_spec(tmp.path(), text);
    let out = tmp.path().join("fail");
    let o = tvopt(&["sweep", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("grid point(s) failed"), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("failed: sample"), "{summary}");
}

#[test]
fn list_is_sorted_and_shows_constants() {
    let o = tvopt(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(
        names,
        ["circle", "circle-box", "drift-quadratic", "equality-quadratic", "l1-stream"]
    );
    let circle = text.lines().next().unwrap();
    assert!(circle.contains("m=1 L=1"), "{circle}");
}

#[test]
fn validate_checks_oracles() {
    for name in ["circle.toml", "custom_quadratic.toml", "equality_dual.toml"] {
        let o = tvopt(&["validate", configs().join(name).to_str().unwrap()]);
        assert!(o.status.success(), "{name}: {}{}", stdout(&o), stderr(&o));
        assert!(stdout(&o).contains("spec ok"));
    }
}

#[test]
fn custom_quadratic_runs_with_batch_ground_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("custom");
    let spec = configs().join("custom_quadratic.toml");
    let o = tvopt(&["run", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["contraction_violations"], 0);
}

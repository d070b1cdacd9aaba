use isactrack_cli::table::ResultTable;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_isactrack"));
    c.env_remove("ISACTRACK_THREADS");
    c
}

fn ok(out: Output) -> Vec<u8> {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn seed_flag_lands_in_preamble() {
    let csv = String::from_utf8(ok(bin().args(["capacity-static", "--seed", "4242"]).output().unwrap())).unwrap();
    assert!(csv.lines().any(|l| l == "# seed = 4242"), "{csv}");
    assert!(csv.contains("lambda_b(1/km2),"));
}

#[test]
fn seed_from_config_and_flag_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "a.cfg", "[experiment]\nseed = 77\n");
    let csv = String::from_utf8(ok(bin().args(["plan", "--format", "csv", "--config"]).arg(&cfg).output().unwrap())).unwrap();
    assert!(csv.contains("# seed = 77"));
    let csv = String::from_utf8(ok(bin().args(["plan", "--format", "csv", "--seed", "5", "--config"]).arg(&cfg).output().unwrap())).unwrap();
    assert!(csv.contains("# seed = 5"));
}

#[test]
fn plan_defaults_to_json_and_round_trips() {
    let bytes = ok(bin().arg("plan").output().unwrap());
    let t = ResultTable::from_json(&bytes).unwrap();
    assert_eq!(t.experiment, "plan");
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.to_json().unwrap(), bytes);
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    ok(bin().args(["pareto", "--format", "json", "--out"]).arg(&path).output().unwrap());
    let stdout = ok(bin().args(["pareto", "--format", "json"]).output().unwrap());
    assert_eq!(std::fs::read(&path).unwrap(), stdout);
}

#[test]
fn config_override_changes_density_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b.cfg", "lambda_b_per_km2 = 20\n");
    let t = ResultTable::from_json(&ok(bin().args(["plan", "--config"]).arg(&cfg).output().unwrap())).unwrap();
    assert_eq!(t.numbers("lambda_b"), vec![20.0]);
    assert_eq!(t.metadata["config.network.lambda_b_per_km2"], "20");
    assert_eq!(t.metadata["config.kinematics.d_m2_per_s"], "1");
}

#[test]
fn unknown_key_fails_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.cfg", "# header\nlamda_b_per_km2 = 3\n");
    let out = bin().args(["plan", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("lamda_b_per_km2"), "{err}");
}

#[test]
fn missing_config_fails() {
    let out = bin().args(["plan", "--config", "/nonexistent/x.cfg"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn printed_template_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let text = String::from_utf8(ok(bin().arg("--print-config").output().unwrap())).unwrap();
    let cfg = write(dir.path(), "t.cfg", &text);
    let a = ok(bin().args(["capacity-compare", "--config"]).arg(&cfg).output().unwrap());
    let b = ok(bin().arg("capacity-compare").output().unwrap());
    assert_eq!(a, b);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["mtlt-single", "--seed", "9"];
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "d.cfg", "n_trajectories = 500\n");
    let one = ok(bin().args(args).args(["--threads", "1", "--config"]).arg(&cfg).output().unwrap());
    let env = ok(bin().args(args).arg("--config").arg(&cfg).env("ISACTRACK_THREADS", "4").output().unwrap());
    assert_eq!(one, env);
}

#[test]
fn validate_exits_zero_when_clean() {
    let out = bin().arg("validate").output().unwrap();
    let csv = String::from_utf8(ok(out)).unwrap();
    assert!(csv.contains("# failures = 0"), "{csv}");
}

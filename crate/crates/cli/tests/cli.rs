use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
seed = 5
trials = 4

[ccsm]
users = 3
L = 16
l = 3
taps = 8
frame_lengths = [96, 192]

[mer]
snr_db = [10.0, inf]

[mmin]
users = [2, 3]
m_per_user = [10.0, 64.0]
chunk = 2

[solver_study]
groups = 3
span = 16
weight = 2
rows = [40]
snr_db = [inf]

[mac]
users = [1, 3]
csma_trials = 50
ccsm = false
"#;

fn ccsm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccsm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--quiet")
        .env_remove("CCSM_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    fs::write(&path, TINY).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn missing_config_exits_2_and_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = ccsm(&["mer", "--config", "/no/such/file.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/file.toml"), "{}", stderr(&o));
}

#[test]
fn invariant_violation_names_field_and_runs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ccsm(&["mer", "--set", "ccsm.l=70"], &out);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("ccsm.l") && err.contains("l < L"), "{err}");
    assert!(
        !out.exists(),
        "nothing is written before validation succeeds"
    );
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = ccsm(&["mac", "--set", "mac.cw_mni=16"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cw_mni"), "{}", stderr(&o));
}

#[test]
fn malformed_override_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ccsm(&["mac", "--set", "trials"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mac_writes_config_then_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = dir.path().join("out");
    let o = ccsm(&["mac", "--config", &config], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = fs::read_to_string(out.join("mac_compare.config.toml")).unwrap();
    assert!(resolved.contains("scenario = \"mac_compare\""));
    assert!(resolved.contains("csma_trials = 50"));
    let csv = fs::read_to_string(out.join("mac_compare.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scenario,users,scheme,metric,value,trials,stderr");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("mac_compare,1,tdma,throughput,"));
    assert!(out.join("mac_compare.summary.txt").exists());
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = ccsm(&["all", "--config", &config], out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["mer_sweep", "mmin_search", "solver_study", "mac_compare"] {
        let file = format!("{name}.csv");
        assert_eq!(
            fs::read(a.join(&file)).unwrap(),
            fs::read(b.join(&file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn seed_and_trials_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = dir.path().join("out");
    let o = ccsm(
        &[
            "solvers", "--config", &config, "--seed", "99", "--trials", "3",
        ],
        &out,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = fs::read_to_string(out.join("solver_study.config.toml")).unwrap();
    assert!(resolved.contains("seed = 99"));
    assert!(resolved.contains("trials = 3"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_ccsm"))
        .args(["mac", "--quiet", "--config", &config])
        .env("CCSM_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("mac_compare.csv").exists());
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = ccsm(&["mac", "--config", &config], &blocker);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dump_bundle_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = dir.path().join("out");
    let o = ccsm(&["mer", "--config", &config, "--dump"], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("dump.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["trace"].as_array().is_some_and(|t| !t.is_empty()));
    assert_eq!(v["receiver"], 0);
}

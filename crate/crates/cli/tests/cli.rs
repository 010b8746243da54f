//! End-to-end tests of the command-line interface, driving the built binary.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isac-opt"))
}

fn write_config(dir: &Path, name: &str, body: serde_json::Value) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path
}

fn small_run_config() -> serde_json::Value {
    serde_json::json!({
        "geometry": { "seed": 7 },
        "sizes": { "n_antennas": 4, "n_users": 2, "n_eves": 2, "n_scatterers": 1 },
        "metric": { "kind": "detection", "p_fa": 0.1, "phi": 0.5 },
        "solver": { "max_iters": 150, "log_every": 50 },
        "trials": 2
    })
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn csv_without_wall_time(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn run_writes_csv_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", small_run_config());
    let out = dir.path().join("results.csv");
    let res = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3, "header + 2 trial rows:\n{csv}");
    assert_eq!(
        lines[0],
        "sweep_value,trial,seed,best_obj,realized_s,iterations,wall_ms"
    );

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("results.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["points"].as_array().unwrap().len(), 1);
    assert_eq!(summary["points"][0]["n_trials"], 2);
}

#[test]
fn run_is_deterministic_modulo_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", small_run_config());
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        let res = bin()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(csv_without_wall_time(&out_a), csv_without_wall_time(&out_b));
}

#[test]
fn run_sweep_emits_one_row_per_value_and_trial() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = small_run_config();
    body["metric"] = serde_json::json!({ "kind": "sinr", "gamma": 10.0 });
    body["sweep"] = serde_json::json!({ "parameter": "gamma_db", "values": [5.0, 10.0] });
    body["solver"]["max_iters"] = serde_json::json!(100);
    let config = write_config(dir.path(), "config.json", body);
    let out = dir.path().join("sweep.csv");
    let res = bin()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 5, "header + 2 values x 2 trials:\n{csv}");
    assert_eq!(csv.lines().filter(|l| l.starts_with("5,")).count(), 2);
    assert_eq!(csv.lines().filter(|l| l.starts_with("10,")).count(), 2);
}

#[test]
fn run_rejects_bad_config_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("broken.json");
    std::fs::write(&config, "{ not json").unwrap();
    let res = bin()
        .args(["run", "--config"])
        .arg(&config)
        .args(["--out", "/dev/null"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));

    let mismatched = write_config(dir.path(), "mismatch.json", {
        let mut body = small_run_config();
        body["sweep"] = serde_json::json!({ "parameter": "gamma_db", "values": [5.0] });
        body // gamma_db sweep on a detection metric
    });
    let res = bin()
        .args(["run", "--config"])
        .arg(&mismatched)
        .args(["--out", "/dev/null"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn gradcheck_passes_on_defaults_and_catches_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        serde_json::json!({
            "geometry": { "seed": 3 },
            "sizes": { "n_antennas": 6, "n_users": 2, "n_eves": 2, "n_scatterers": 2 }
        }),
    );
    let res = bin()
        .args(["gradcheck", "--config"])
        .arg(&config)
        .args(["--points", "5"])
        .output()
        .unwrap();
    assert!(
        res.status.success(),
        "stdout: {}\nstderr: {}",
        stdout(&res),
        String::from_utf8_lossy(&res.stderr)
    );
    let text = stdout(&res);
    for family in ["rate", "redundancy", "sinr", "beampattern", "detection", "mutual_info"] {
        assert!(text.contains(family), "missing family {family} in:\n{text}");
    }

    let res = bin()
        .args(["gradcheck", "--config"])
        .arg(&config)
        .args(["--points", "2", "--corrupt-rate-gradient"])
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2), "{}", stdout(&res));
}

#[test]
fn sopcheck_calibrates_within_binomial_noise() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        serde_json::json!({
            "geometry": { "seed": 5 },
            "sizes": { "n_antennas": 8, "n_users": 2, "n_eves": 2, "n_scatterers": 0 }
        }),
    );
    let res = bin()
        .args(["sopcheck", "--config"])
        .arg(&config)
        .args(["--samples", "20000", "--trials", "3"])
        .output()
        .unwrap();
    assert!(
        res.status.success(),
        "stdout: {}\nstderr: {}",
        stdout(&res),
        String::from_utf8_lossy(&res.stderr)
    );
    assert!(stdout(&res).contains("dominant-pair outage"));
}

#[test]
fn sopcheck_rejects_thin_arrays_and_small_sample_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        serde_json::json!({
            "sizes": { "n_antennas": 2, "n_users": 3, "n_eves": 1, "n_scatterers": 0 }
        }),
    );
    let res = bin()
        .args(["sopcheck", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(1));

    let res = bin().args(["sopcheck", "--samples", "100"]).output().unwrap();
    assert_eq!(res.status.code(), Some(1));
}

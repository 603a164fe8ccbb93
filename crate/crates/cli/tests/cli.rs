use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn evatrap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evatrap"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_json(path: &Path, value: &Value) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn line_config() -> Value {
    serde_json::from_str(&std::fs::read_to_string(configs().join("nanofiber-uncompensated-line.json")).unwrap())
        .unwrap()
}

#[test]
fn benchmark_summary_and_cache_hit() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("nanofiber-uncompensated.json");
    let config = config.to_str().unwrap();
    let first = evatrap(dir.path(), &["simulate", config, "--json"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(!stderr(&first).contains("cache hit"));
    let summary: Value = serde_json::from_slice(&first.stdout).unwrap();
    let ground = &summary["levels"][0]["sheets"][0];
    let depth = ground["depth_mk"].as_f64().unwrap();
    let distance = ground["distance_to_surface"].as_f64().unwrap();
    assert!((depth - 0.4).abs() <= 0.06, "depth {depth}");
    assert!((195e-9..=230e-9).contains(&distance), "distance {distance}");
    let excited = summary["levels"][1]["sheets"].as_array().unwrap();
    assert!(excited.iter().all(|s| s["stable"] == false));

    let second = evatrap(dir.path(), &["simulate", config, "--json"]);
    assert!(second.status.success());
    assert!(stderr(&second).contains("cache hit"));
    assert_eq!(first.stdout, second.stdout);
    assert!(dir.path().join(".evatrap-cache").is_dir());
}

#[test]
fn serial_and_uncached_runs_print_the_same_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("line.json");
    write_json(&config, &line_config());
    let config = config.to_str().unwrap();
    let parallel = evatrap(dir.path(), &["simulate", config, "--no-cache"]);
    let serial = evatrap(dir.path(), &["simulate", config, "--no-cache", "--threads", "1"]);
    assert!(parallel.status.success() && serial.status.success());
    assert!(!stderr(&serial).contains("cache hit"));
    assert_eq!(parallel.stdout, serial.stdout);
    assert!(!dir.path().join(".evatrap-cache").exists());
    assert!(stdout(&serial).contains("6S1/2 F=4"));
}

#[test]
fn csv_export_and_result_files() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("line.json");
    write_json(&config, &line_config());
    let cache = dir.path().join("elsewhere");
    let out = evatrap(
        dir.path(),
        &[
            "simulate",
            config.to_str().unwrap(),
            "--export",
            "csv",
            "--out",
            "res",
            "--cache-dir",
            cache.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(cache.is_dir());
    let csv = std::fs::read_to_string(dir.path().join("res/potential.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 202);
    let header: Vec<&str> = lines[0].split(',').collect();
    assert_eq!(header.len(), 4 + 9);
    assert_eq!(header[4], "level0_sheet0_mK");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == header.len()));
    assert!(dir.path().join("res/params.json").is_file());
    assert!(dir.path().join("res/potential_0.bin").is_file());
}

#[test]
fn missing_field_data_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("fields")).unwrap();
    let mut doc = line_config();
    doc["beams"][1]["field"] = json!({"folder": {"path": "fields"}});
    let config = dir.path().join("c.json");
    write_json(&config, &doc);
    let out = evatrap(dir.path(), &["simulate", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("missing field data"), "{}", stderr(&out));
}

#[test]
fn invalid_configuration_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = line_config();
    doc["beams"] = json!([]);
    let config = dir.path().join("c.json");
    write_json(&config, &doc);
    let out = evatrap(dir.path(), &["simulate", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = evatrap(dir.path(), &["simulate", config.to_str().unwrap(), "--threads", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = evatrap(dir.path(), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn physics_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    // three points across several microns cannot resolve the evanescent tail
    let out = evatrap(
        dir.path(),
        &["solve-nanofiber", "--radius", "2.5e-7", "--n-core", "1.45", "--wavelength", "1.064e-6", "--x", "3e-7:3e-6:3", "--out", "f"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("grid too coarse"));
}

#[test]
fn single_point_scan_equals_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("line.json");
    write_json(&config, &line_config());
    let spec = dir.path().join("spec.json");
    write_json(
        &spec,
        &json!({
            "parameters": [
                {"slider": 0, "min_W": 2.2e-3, "max_W": 2.2e-3, "steps": 1},
                {"slider": 1, "min_W": 2.5e-2, "max_W": 2.5e-2, "steps": 1}
            ],
            "objective": "depth"
        }),
    );
    let scan = evatrap(dir.path(), &["scan", config.to_str().unwrap(), spec.to_str().unwrap(), "--out", "s"]);
    assert!(scan.status.success(), "{}", stderr(&scan));
    assert!(stdout(&scan).contains("optimum:"));
    let bytes = std::fs::read(dir.path().join("s/objective.bin")).unwrap();
    let value = f64::from_le_bytes(bytes.try_into().unwrap());

    let sim = evatrap(dir.path(), &["simulate", config.to_str().unwrap(), "--json", "--no-cache"]);
    let summary: Value = serde_json::from_slice(&sim.stdout).unwrap();
    let depth = summary["levels"][0]["sheets"][0]["depth_mk"].as_f64().unwrap();
    assert_eq!(value.to_bits(), depth.to_bits());
}

#[test]
fn unstable_scan_reports_no_trap() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("line.json");
    write_json(&config, &line_config());
    let spec = dir.path().join("spec.json");
    write_json(
        &spec,
        &json!({
            "parameters": [{"slider": 0, "min_W": 1e-3, "max_W": 4e-3, "steps": 4}],
            "objective": "depth"
        }),
    );
    let mut doc = line_config();
    doc["beams"][1]["power_W"] = json!(0.0);
    write_json(&config, &doc);
    let out = evatrap(dir.path(), &["scan", config.to_str().unwrap(), spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("no stable trap in range"));
    let json_out = evatrap(dir.path(), &["scan", config.to_str().unwrap(), spec.to_str().unwrap(), "--json"]);
    let v: Value = serde_json::from_slice(&json_out.stdout).unwrap();
    assert!(v["argmax"].is_null());
    assert!(dir.path().join("scan/scan.json").is_file());
}

#[test]
fn solved_mode_round_trips_through_inspect_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = evatrap(
        dir.path(),
        &["solve-nanofiber", "--radius", "2.5e-7", "--n-core", "1.4496", "--wavelength", "7.8e-7", "--power", "2e-3", "--out", "mode", "--json"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let solved: Value = serde_json::from_slice(&out.stdout).unwrap();
    let n_eff = solved["effective_index"].as_f64().unwrap();
    assert!(n_eff > 1.0 && n_eff < 1.4496);

    let out = evatrap(dir.path(), &["inspect-field", "mode", "--json"]);
    assert!(out.status.success());
    let info: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(info["wavelength_m"], 7.8e-7);
    assert_eq!(info["direction"], "+z");
    assert_eq!(info["shape"], solved["shape"]);
    let flux = info["flux_W"].as_f64().unwrap();
    assert!((flux - 2e-3).abs() < 1e-5, "{flux}");

    let text = evatrap(dir.path(), &["inspect-field", "mode"]);
    assert!(stdout(&text).contains("780.000 nm"));
    let missing = evatrap(dir.path(), &["inspect-field", "nothing"]);
    assert_eq!(missing.status.code(), Some(4));
}

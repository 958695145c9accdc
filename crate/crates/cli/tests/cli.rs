use std::path::Path;
use std::process::{Command, Output};

fn ligme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ligme")).args(args).output().expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn version_flag() {
    let out = ligme(&["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ligme "));
}

#[test]
fn missing_config_is_a_config_error() {
    let out = ligme(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/config.json"));
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    write(&path, r#"{"modulation": {"kind": "psk", "order": 8}, "n": 4}"#);
    let out = ligme(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let csv = dir.path().join("out/ber.csv");
    write(
        &path,
        r#"{"modulation": {"kind": "qam", "per_axis": 2}, "n": 4, "m": 6, "snr_db": [10],
            "mu_grid": [0.01], "trials": 3, "max_iter": 20, "seed": 1,
            "detectors": [{"id": "soav", "model": "soav"}]}"#,
    );
    let out = ligme(&["run", "--config", path.to_str().unwrap(), "--output", csv.to_str().unwrap(), "--snr", "5,15"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,detector,mu,trials,bit_errors,total_bits,ber");
    // one grid row and one best row per SNR
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[1].starts_with("5,soav,"));
    assert!(dir.path().join("out/ber.csv.meta.json").exists());
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = dir.path().join("ok.json");
    write(
        &ok,
        r#"{"sensing": {"kind": "generated", "n": 4, "m": 5, "seed": 2}, "mu": 0.1,
            "gme": {"kind": "uniform_scaled_sensing", "total_gamma": 0.99, "blocks": 4}}"#,
    );
    let out = ligme(&["certify", "--config", ok.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("certified: true"));

    let bad = dir.path().join("bad.json");
    write(
        &bad,
        r#"{"sensing": {"kind": "inline", "matrix": {"rows": 1, "cols": 2, "data": [1, 0]}},
            "mu": 1, "gme": {"kind": "scaled_identity", "b": 0.5, "blocks": 2}}"#,
    );
    let out = ligme(&["certify", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stdout).contains("certified: false"));
}

#[test]
fn prox_check_exit_codes() {
    assert!(ligme(&["prox-check", "--cases", "20"]).status.success());
    let out = ligme(&["prox-check", "--cases", "20", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oracle mismatch"));
}

#[test]
fn landscape_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("land.csv");
    let out = ligme(&[
        "landscape", "--alphabet", "real:-1,0,1", "--symbols", "2", "--b", "1.0", "--lo", "-1", "--hi", "1", "--step", "0.5",
        "--output", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 5);
    assert!(ligme(&["landscape", "--alphabet", "real:-1,1", "--output", csv.to_str().unwrap()]).status.code() == Some(2));
}

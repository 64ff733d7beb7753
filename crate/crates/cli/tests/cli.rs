use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn phononbus(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phononbus"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "u.toml", "task = \"device-params\"\nbogus = 1\n[device]\nomega_r_hz = 1e6\n");
    let o = phononbus(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn missing_section_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "f.toml",
        "task = \"fidelity\"\n[device]\nomega_r_hz = 1e6\n[layout]\ntype = \"single_wire\"\nn = 2\n[pulses]\nk = 4\nn_cycles = 10\n",
    );
    let o = phononbus(&cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[bath]"), "{}", stderr(&o));
}

#[test]
fn buckled_layout_is_reported_by_validate() {
    let out = tempfile::tempdir().unwrap();
    let o = phononbus(&scenarios().join("buckled.toml"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = fs::read_to_string(out.path().join("report.csv")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("stability,buckling,")), "{report}");
}

#[test]
fn buckled_layout_is_a_domain_error_elsewhere() {
    let out = tempfile::tempdir().unwrap();
    let o = phononbus(&scenarios().join("buckled.toml"), out.path(), &["--task", "spectrum"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("buckled"));
}

#[test]
fn single_site_ising_is_a_zero_row() {
    let out = tempfile::tempdir().unwrap();
    let o = phononbus(&scenarios().join("single_site_ising.toml"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.path().join("ising.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].starts_with("0,0,0,0,0"));
}

#[test]
fn manifest_checksums_match_files() {
    let out = tempfile::tempdir().unwrap();
    let o = phononbus(&scenarios().join("chain_spectrum.toml"), out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["task"], "spectrum");
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert!(!artifacts.is_empty());
    for a in artifacts {
        let bytes = fs::read(out.path().join(a["file"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert!(!bytes.contains(&b'\r'));
    }
}

#[test]
fn task_flag_overrides_config() {
    let out = tempfile::tempdir().unwrap();
    let o = phononbus(&scenarios().join("two_site_fidelity.toml"), out.path(), &["--task", "device-params"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.path().join("device_params.csv").exists());
    assert!(!out.path().join("fidelity.csv").exists());
}

#[test]
fn zero_jobs_is_rejected() {
    let out = tempfile::tempdir().unwrap();
    let o = phononbus(&scenarios().join("device.toml"), out.path(), &["--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

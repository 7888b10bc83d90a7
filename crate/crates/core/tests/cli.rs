use std::path::Path;
use std::process::{Command, Output};

use ris_secrecy::config::{sha256_hex, PRESETS};
use ris_secrecy::output::CSV_COLUMNS;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ris-secrecy"));
    c.env_remove("RIS_SECRECY_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn run_fig8a_writes_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "presets/fig8a",
        "--trials",
        "40",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("fig8a.csv"));
    assert_eq!(rows[0], CSV_COLUMNS);
    // 10 N values x 2 models x 4 quantization levels
    assert_eq!(rows.len() - 1, 80);
    assert!(rows[1..].iter().all(|r| r[16] == "0" && r[17] == "40"));

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig8a.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["scenario_hash"].as_str().unwrap().len(), 64);
    assert!(summary["runtime_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(summary["prenull_failures"], 0);
    assert_eq!(summary["overrides"][0], "run.trials=40");
}

#[test]
fn set_override_applied_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "presets/fig9b",
        "--set",
        "gamma=3.5",
        "--trials",
        "10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("fig9b.csv"));
    assert_eq!(rows.len() - 1, 15 * 4);
    assert!(rows[1..].iter().all(|r| r[5] == "3.5" && r[2] == "prenull"));
    let summary = std::fs::read_to_string(dir.path().join("fig9b.summary.json")).unwrap();
    assert!(summary.contains("gamma=3.5"));
    assert!(summary.contains("prenull_failures_by_row"));
}

#[test]
fn unknown_key_exits_one_naming_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, PRESETS[0].source.replace("beta_min", "beta_mim")).unwrap();
    let out = run(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta_mim"));
}

#[test]
fn invalid_value_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "run",
        "fig9a",
        "--set",
        "d_v=-3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("d_v"));
    let out = run(&["run", "fig9a", "--set", "nonsense=1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_file_exits_two() {
    let out = run(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "fig10", "--trials", "5", "--set", "mu=0.5"])
        .env("RIS_SECRECY_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("fig10.csv"));
    assert_eq!(rows.len() - 1, 11 * 4);
}

#[test]
fn same_seed_same_bytes_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = Vec::new();
    for (i, workers) in ["1", "4", "1"].iter().enumerate() {
        let sub = dir.path().join(i.to_string());
        let out = run(&[
            "run",
            "fig8b",
            "--trials",
            "30",
            "--seed",
            "99",
            "--workers",
            workers,
            "--out",
            sub.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        csvs.push(std::fs::read(sub.join("fig8b.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[0], csvs[2]);
}

#[test]
fn presets_listing_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["presets", "--export", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["fig8a", "fig8b", "fig9a", "fig9b", "fig10"] {
        assert!(text.contains(name));
        let exported = std::fs::read(dir.path().join(format!("{name}.toml"))).unwrap();
        let frozen = PRESETS.iter().find(|p| p.name == name).unwrap().sha256;
        assert_eq!(sha256_hex(&exported), frozen);
    }
    assert!(text.contains("d_v=10 d_tl=20 d_te=15"));
    assert!(text.contains("P=20 dBm  noise=-100 dBm  C0=-30 dB  d0=1 m"));
    assert!(text.contains("mu=[0.3, 0.5, 0.7]"));
}

#[test]
fn verify_refuses_edited_presets() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&["presets", "--export", dir.path().to_str().unwrap()])
        .status
        .success());
    let path = dir.path().join("fig9a.toml");
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("gamma = 3.0", "gamma = 3.1");
    std::fs::write(&path, text).unwrap();
    let out = run(&[
        "verify",
        "--presets",
        dir.path().to_str().unwrap(),
        "--trials",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig9a"));
}

#[test]
fn verify_prints_every_criterion() {
    let out = run(&["verify", "--trials", "20"]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 3);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines = text
        .lines()
        .filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]"))
        .count();
    assert_eq!(lines, 10);
    assert!(text.contains("criteria passed"));
}

#[test]
fn help_exits_zero() {
    assert!(run(&["--help"]).status.success());
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
}

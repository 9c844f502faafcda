use std::path::{Path, PathBuf};
use std::process::Command;

use dimcert_cli::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dimcert"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn invocation(sub: Subcommand, config: Option<PathBuf>, out: &Path, seed: u64) -> Invocation {
    Invocation {
        subcommand: sub,
        config,
        seed,
        out: out.to_path_buf(),
        parallel: Some(2),
        snapshot_every: None,
    }
}

const DECAY: &str = r#"{
    "mu": 1.5, "sigma": 0.0, "tau": 0.5, "lf": 0.0,
    "grid": {"half_length": 8.0, "points": 64},
    "run": {"horizon": 3.0, "cutoff_radius": 2.0, "steps_per_delay": 10, "initial": {"kind": "constant", "value": 2.0}}
}"#;

const ZERO: &str = r#"{
    "mu": 1.0, "sigma": 0.2, "tau": 0.5, "lf": 1.0,
    "nonlinearity": {"kind": "scaled_tanh"},
    "grid": {"half_length": 8.0, "points": 64},
    "run": {"horizon": 2.0, "cutoff_radius": 2.0, "initial": {"kind": "zero"}}
}"#;

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let status = |args: &[&str]| bin().args(args).output().unwrap().status.code().unwrap();

    let good = configs().join("strongly_damped.json");
    let nd = configs().join("non_dissipative.json");
    let bad = write_config(tmp.path(), "bad.json", "{\"mu\": 1,");
    let unknown = write_config(tmp.path(), "unknown.json", &DECAY.replace("\"lf\"", "\"lff\""));
    let o = out.to_str().unwrap();

    assert_eq!(status(&["certify", "--config", good.to_str().unwrap(), "--out", o]), 0);
    assert_eq!(status(&["certify", "--config", nd.to_str().unwrap(), "--out", o]), 3);
    assert_eq!(status(&["certify", "--config", bad.to_str().unwrap(), "--out", o]), 2);
    assert_eq!(status(&["simulate", "--config", unknown.to_str().unwrap(), "--out", o]), 2);
    assert_eq!(status(&["certify", "--out", o]), 2);
    assert_eq!(status(&["frobnicate"]), 2);

    let blowup = write_config(
        tmp.path(),
        "blowup.json",
        r#"{"mu": 0.1, "sigma": 1e6, "tau": 1.0, "lf": 0.0,
            "grid": {"half_length": 4.0, "points": 8},
            "run": {"horizon": 200.0, "cutoff_radius": 1.0, "steps_per_delay": 4, "initial": {"kind": "constant", "value": 1.0}}}"#,
    );
    let output = bin()
        .args(["simulate", "--config", blowup.to_str().unwrap(), "--out", o])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).contains("step"));
}

#[test]
fn non_dissipative_certificate_names_the_condition() {
    let tmp = tempfile::tempdir().unwrap();
    let inv = invocation(Subcommand::Certify, Some(configs().join("non_dissipative.json")), tmp.path(), 0);
    let outcome = run(&inv).unwrap();
    assert_eq!(outcome.exit_code, EXIT_INFEASIBLE);
    let cert = std::fs::read_to_string(tmp.path().join("certificate.json")).unwrap();
    assert!(cert.contains("sigma(L_f+1)e^{mu tau} - mu < 0 fails"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in [Subcommand::Certify, Subcommand::Simulate, Subcommand::Squeeze] {
        let inv = invocation(sub, Some(configs().join("strongly_damped.json")), tmp.path(), 9);
        let first = run(&inv).unwrap().manifest;
        let again = run(&Invocation { parallel: Some(1), ..inv.clone() }).unwrap().manifest;
        assert_eq!(first, again, "{sub:?}");
        for (name, hash) in &first.files {
            let bytes = std::fs::read(tmp.path().join(name)).unwrap();
            assert_eq!(&sha256_hex(&bytes), hash);
        }
    }
    let manifest = std::fs::read_to_string(tmp.path().join("manifest.certify.json")).unwrap();
    assert!(manifest.contains("\"seed\": 9"));
}

#[test]
fn different_seeds_change_random_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = Some(configs().join("strongly_damped.json"));
    let ma = run(&invocation(Subcommand::Simulate, cfg.clone(), &a, 1)).unwrap().manifest;
    let mb = run(&invocation(Subcommand::Simulate, cfg, &b, 2)).unwrap().manifest;
    assert_ne!(ma.files["norms.csv"], mb.files["norms.csv"]);
}

#[test]
fn decay_case_norms_match_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "decay.json", DECAY);
    let mut inv = invocation(Subcommand::Simulate, Some(cfg), tmp.path(), 0);
    inv.snapshot_every = Some(10);
    run(&inv).unwrap();
    let csv = std::fs::read_to_string(tmp.path().join("norms.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,norm,segment_norm,boundary_fraction"));
    let norm0 = 2.0 * 16f64.sqrt();
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let expect = (-1.5 * cols[0]).exp() * norm0;
        assert!((cols[1] - expect).abs() < 1e-8, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 61);
    let snap = std::fs::read(tmp.path().join("snapshots/step_0000010.bin")).unwrap();
    let (field, t) = dimcert_core::export::decode_snapshot(&snap).unwrap();
    assert!((t - 0.5).abs() < 1e-12);
    assert!((field.values[0] - 2.0 * (-0.75f64).exp()).abs() < 1e-12);
}

#[test]
fn zero_data_give_zero_norms() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "zero.json", ZERO);
    run(&invocation(Subcommand::Simulate, Some(cfg), tmp.path(), 0)).unwrap();
    let csv = std::fs::read_to_string(tmp.path().join("norms.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(&cols[1..], &["0", "0", "0"]);
    }
}

#[test]
fn spectrum_of_zero_coupling_is_pure_decay() {
    let tmp = tempfile::tempdir().unwrap();
    run(&invocation(Subcommand::Spectrum, Some(configs().join("zero_coupling.json")), tmp.path(), 0)).unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("spectrum.json")).unwrap()).unwrap();
    let eig = doc["spectral"]["eigenvalues"].as_array().unwrap();
    let roots = doc["spectral"]["roots"].as_array().unwrap();
    assert_eq!(roots.len(), eig.len());
    for r in roots {
        let m = r["mode"].as_u64().unwrap() as usize;
        let expect = -1.0 - eig[m - 1].as_f64().unwrap();
        assert!((r["re"].as_f64().unwrap() - expect).abs() < 1e-12);
    }
}

#[test]
fn squeeze_on_identical_pair_reports_zero_difference() {
    let tmp = tempfile::tempdir().unwrap();
    run(&invocation(Subcommand::Squeeze, Some(configs().join("zero_coupling.json")), tmp.path(), 0)).unwrap();
    let csv = std::fs::read_to_string(tmp.path().join("contraction.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.contains(",zero_difference,")));
}

#[test]
fn report_lists_missing_files_and_merges_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let err = run(&invocation(Subcommand::Report, None, tmp.path(), 0)).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    let msg = err.to_string();
    for f in ["estimates.json", "spectrum.json", "certificate.json"] {
        assert!(msg.contains(f), "{msg}");
    }

    let cfg = Some(configs().join("strongly_damped.json"));
    run(&invocation(Subcommand::Certify, cfg.clone(), tmp.path(), 3)).unwrap();
    run(&invocation(Subcommand::Squeeze, cfg, tmp.path(), 3)).unwrap();
    run(&invocation(Subcommand::Report, None, tmp.path(), 0)).unwrap();
    let csv = std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("hausdorff,true,") && rows[2].starts_with("fractal,true,"));
    let header: Vec<&str> = rows[0].split(',').collect();
    let cells: Vec<&str> = rows[1].split(',').collect();
    let col = |name: &str| cells[header.iter().position(|h| *h == name).unwrap()];
    let worst_q: f64 = col("worst_q").parse().unwrap();
    let margin_q: f64 = col("margin_q").parse().unwrap();
    assert!((1.0 - worst_q - margin_q).abs() < 1e-15);

    // Report output is a pure function of its inputs.
    let first = std::fs::read(tmp.path().join("summary.txt")).unwrap();
    run(&invocation(Subcommand::Report, None, tmp.path(), 0)).unwrap();
    assert_eq!(first, std::fs::read(tmp.path().join("summary.txt")).unwrap());
}

#[test]
fn no_temporary_files_are_left_behind() {
    let tmp = tempfile::tempdir().unwrap();
    run(&invocation(Subcommand::Certify, Some(configs().join("strongly_damped.json")), tmp.path(), 0)).unwrap();
    let leftovers: Vec<_> = std::fs::read_dir(tmp.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

//! End-to-end checks of the `sigmax` binary: exit-code contract, output
//! determinism, manifest integrity, and the config round trip.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use sigmax_cli::config::{default_config, parse_config, save_config};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sigmax"))
}

fn work_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sigmax-cli-test-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn help_succeeds_and_bad_flags_fail() {
    assert_eq!(exit_code(&run(&["--help"])), 0);
    assert_eq!(exit_code(&run(&["params", "show"])), 0);
    assert_eq!(exit_code(&run(&["no-such-command"])), 1);
    assert_eq!(exit_code(&run(&["rates", "--no-such-flag"])), 1);
}

#[test]
fn invalid_configs_exit_with_code_one() {
    let dir = work_dir("badcfg");
    let cases = [
        ("negative_kappa.toml", "[device]\nkappa_mhz = -4.0\n"),
        ("unknown_key.toml", "[device]\nkapa_mhz = 4.0\n"),
        (
            "exclusive_drive.toml",
            "[device]\nn_sb = 12.0\nepsilon_sb_mhz = 52.0\n",
        ),
        ("bad_engine.toml", "[scenario]\nengine = \"quantum\"\n"),
        ("empty_seeds.toml", "[scenario]\nseeds = []\n"),
    ];
    for (name, text) in cases {
        let path = dir.join(name);
        fs::write(&path, text).unwrap();
        let out = run(&["--config", path.to_str().unwrap(), "params", "show"]);
        assert_eq!(exit_code(&out), 1, "{name} should be rejected");
    }
}

#[test]
fn runtime_failures_exit_with_code_two() {
    let dir = work_dir("runfail");
    // a record with no samples parses but cannot be analyzed
    let record = dir.join("empty.csv");
    fs::write(&record, "t,i,q,hidden_state\n").unwrap();
    let out = run(&[
        "analyze",
        "--input",
        record.to_str().unwrap(),
        "--out",
        dir.join("an").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn diffusive_engine_rejects_long_durations() {
    let dir = work_dir("cap");
    let out = run(&[
        "trace",
        "--engine",
        "diffusive",
        "--duration-s",
        "2e-4",
        "--out",
        dir.join("t").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
}

fn sweep_config(dir: &Path, out_name: &str) -> PathBuf {
    let path = dir.join(format!("{out_name}.toml"));
    fs::write(
        &path,
        format!(
            "[scenario]\nname = \"supp1a_zeta_sweep\"\nduration_s = 2e-3\n\
             omega_rabi_grid_mhz = [70.0, 85.0]\nseeds = [42]\nout_dir = \"{}\"\n",
            dir.join(out_name).display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn identical_configs_give_byte_identical_outputs() {
    let dir = work_dir("rerun");
    for name in ["a", "b"] {
        let cfg = sweep_config(&dir, name);
        let out = run(&["--config", cfg.to_str().unwrap(), "sweep", "--scenario", "supp1a_zeta_sweep"]);
        assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.join("a/zeta_sweep.csv")).unwrap();
    let b = fs::read(dir.join("b/zeta_sweep.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn manifest_checksums_match_emitted_files() {
    let dir = work_dir("manifest");
    let cfg = sweep_config(&dir, "m");
    let out = run(&["--config", cfg.to_str().unwrap(), "sweep", "--scenario", "supp1a_zeta_sweep"]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("m/manifest.json")).unwrap()).unwrap();
    let outputs = manifest["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for entry in outputs {
        let name = entry["path"].as_str().unwrap();
        let data = fs::read(dir.join("m").join(name)).unwrap();
        let digest = format!("{:x}", Sha256::digest(&data));
        assert_eq!(digest, entry["sha256"].as_str().unwrap(), "checksum of {name}");
        assert_eq!(data.len() as u64, entry["bytes"].as_u64().unwrap());
    }
    assert!(manifest["errors"].as_array().unwrap().is_empty());
}

#[test]
fn saved_config_resolves_to_the_same_run() {
    let cfg = default_config();
    let reloaded = parse_config(&save_config(&cfg)).unwrap();
    assert_eq!(reloaded.scenario, cfg.scenario);
    assert_eq!(reloaded.seeds, cfg.seeds);
    assert_eq!(reloaded.bins, cfg.bins);
    assert_eq!(reloaded.engine, cfg.engine);
    assert_eq!(reloaded.n_cavity, cfg.n_cavity);
    assert_eq!(reloaded.out_dir, cfg.out_dir);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    assert!(close(reloaded.params.omega_rabi, cfg.params.omega_rabi));
    assert!(close(reloaded.params.epsilon_sb, cfg.params.epsilon_sb));
    assert!(close(reloaded.params.epsilon_r, cfg.params.epsilon_r));
    assert!(close(reloaded.params.omega_qp, cfg.params.omega_qp));
    assert!(close(reloaded.params.t1, cfg.params.t1));
    assert!(close(reloaded.readout.t_m, cfg.readout.t_m));
    assert!(close(reloaded.readout.sigma_noise, cfg.readout.sigma_noise));
    assert!(close(reloaded.duration, cfg.duration));
}

#[test]
fn empty_config_matches_flag_free_defaults() {
    let dir = work_dir("defaults");
    let path = dir.join("empty.toml");
    fs::write(&path, "").unwrap();
    let with_file = run(&["--config", path.to_str().unwrap(), "rates"]);
    let without = run(&["rates"]);
    assert_eq!(exit_code(&with_file), 0);
    assert_eq!(with_file.stdout, without.stdout);
}

#[test]
fn histogram_scenario_emits_the_full_file_set() {
    let dir = work_dir("fig2");
    let path = dir.join("fig2.toml");
    fs::write(
        &path,
        format!(
            "[scenario]\nname = \"fig2_histograms\"\nduration_s = 5e-4\nbins = 24\n\
             n_cavity = 8\nomega_rabi_grid_mhz = [0.0, 70.0]\nseeds = [2]\nout_dir = \"{}\"\n",
            dir.join("out").display()
        ),
    )
    .unwrap();
    let out = run(&["--config", path.to_str().unwrap(), "sweep", "--scenario", "fig2_histograms"]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "histogram_000p0mhz.csv",
        "histogram_070p0mhz.csv",
        "fit_000p0mhz.json",
        "fit_070p0mhz.json",
        "summary.csv",
        "manifest.json",
    ] {
        assert!(dir.join("out").join(name).exists(), "missing {name}");
    }
    // the plotter picks up every histogram
    let plot = run(&["plot", "--input", dir.join("out").to_str().unwrap()]);
    assert_eq!(exit_code(&plot), 0);
    assert!(dir.join("out/histogram_070p0mhz.svg").exists());
}

#[test]
fn trace_roundtrip_through_record_and_analyze() {
    let dir = work_dir("roundtrip");
    let out_dir = dir.join("tr");
    let out = run(&[
        "trace",
        "--duration-s",
        "5e-3",
        "--seed",
        "17",
        "--out",
        out_dir.to_str().unwrap(),
        "--keep-record",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let record = out_dir.join("record.bin");
    assert!(record.exists());
    let an = run(&[
        "analyze",
        "--input",
        record.to_str().unwrap(),
        "--out",
        dir.join("an").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&an), 0, "{}", String::from_utf8_lossy(&an.stderr));
    let analysis: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("an/analysis.json")).unwrap()).unwrap();
    let zeta = analysis["zeta_extracted_mhz"].as_f64().unwrap();
    assert!((zeta - 1.913).abs() < 0.2, "zeta = {zeta}");
}

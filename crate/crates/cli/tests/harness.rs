use std::path::{Path, PathBuf};
use std::process::Command;

use densman_cli::config::{Experiment, ExperimentConfig};
use densman_cli::{run_experiment, HarnessError};

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_path(&config_path(name)).unwrap()
}

fn densman(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_densman")).args(args).output().unwrap()
}

#[test]
fn minimal_verify_on_c4_passes_and_is_deterministic() {
    let config = load("verify_c4.json");
    assert_eq!(config.seed, Some(42));
    let first = run_experiment(&config).unwrap();
    for c in first.failures() {
        panic!("{} = {} ({} {})", c.name, c.value, c.comparison.symbol(), c.threshold);
    }
    assert!(first.passed);
    assert!(first.checks.len() >= 30);
    let names: Vec<_> = first.checks.iter().map(|c| c.name.clone()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);

    let second = run_experiment(&config).unwrap();
    assert_eq!(first.to_json(), second.to_json());

    // one worker thread against the default pool
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let serial = pool.install(|| run_experiment(&config).unwrap());
    assert_eq!(first.to_json(), serial.to_json());
}

#[test]
fn misspelled_metric_names_the_field() {
    let text = std::fs::read_to_string(config_path("verify_c4.json"))
        .unwrap()
        .replace("\"otto\"", "\"ottto\"");
    let err = ExperimentConfig::from_json(&text).unwrap_err();
    let HarnessError::Config { field, line, .. } = &err else {
        panic!("{err}");
    };
    assert_eq!(field, "metric");
    assert_eq!(*line, 7);
    let msg = err.to_string();
    assert!(msg.contains("`metric`") && msg.contains("line 7"), "{msg}");
}

#[test]
fn randomized_experiments_need_a_seed() {
    let mut config = load("verify_c4.json");
    config.seed = None;
    match run_experiment(&config).unwrap_err() {
        HarnessError::Config { field, .. } => assert_eq!(field, "seed"),
        e => panic!("{e}"),
    }
}

#[test]
fn torsion_scan_table_and_linearity() {
    let mut config = load("torsion_scan_c4.json");
    config.trials = 5;
    let report = run_experiment(&config).unwrap();
    assert!(report.passed, "{:?}", report.failures().collect::<Vec<_>>());
    let table = &report.tables["torsion_norms"];
    assert_eq!(table.rows.len(), 2 * 5 * config.alphas.len());
    let names: Vec<_> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert!(names.contains(&"torsion_scan.linearity[otto]"));
    assert!(names.contains(&"torsion_scan.linearity[fisher_rao]"));
}

#[test]
fn convergence_validates_its_inputs() {
    let mut config = load("convergence_cycle64.json");
    config.metric = densman_cli::config::MetricName::FisherRao;
    assert!(matches!(run_experiment(&config), Err(HarnessError::Config { field, .. }) if field == "metric"));

    let mut config = load("verify_c4.json");
    config.experiment = Some(Experiment::Convergence);
    assert!(matches!(run_experiment(&config), Err(HarnessError::Config { field, .. }) if field == "space.kind"));
}

#[test]
fn convergence_ratios_near_four() {
    let mut config = load("convergence_cycle64.json");
    config.trials = 2;
    let report = run_experiment(&config).unwrap();
    assert!(report.passed, "{:?}", report.failures().collect::<Vec<_>>());
    assert_eq!(report.tables["errors"].rows.len(), 2 * 3);
    assert_eq!(report.tables["ratios"].rows.len(), 2 * 2);
}

#[test]
fn geodesic_comparison_reproduces_the_oracle_gap() {
    // dense autodiff oracle, see the core crate's acceptance suite
    const OTTO_GAP: f64 = 2.27978090706904002e-03;
    let report = run_experiment(&load("geodesic_c4_otto.json")).unwrap();
    assert!(report.passed);
    let gap = report.checks[0].value;
    assert!((gap - OTTO_GAP).abs() <= 1e-9 * OTTO_GAP, "{gap}");
    assert_eq!(report.tables["distances"].rows.len(), 201);

    let fr = run_experiment(&load("geodesic_c4_fisher_rao.json")).unwrap();
    assert!(fr.passed);
    assert!(fr.checks[0].value <= 1e-8);
}

#[test]
fn binary_writes_reports_and_sets_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("checks.csv");
    let cfg = config_path("verify_c4.json");
    let run = |seed: &str| {
        densman(&[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
            "--csv",
            csv.to_str().unwrap(),
        ])
    };
    let o = run("42");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(&out).unwrap();
    let o = run("42");
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(first, std::fs::read(&out).unwrap());
    let body: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(body["config"]["seed"], 42);
    assert_eq!(body["passed"], true);
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("name,value,threshold,comparison,pass\n"));

    // seed override changes the draws
    run("7");
    assert_ne!(first, std::fs::read(&out).unwrap());

    // subcommand disagreeing with the config
    let o = densman(&["torsion-scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`experiment`"));

    // a failing check: an almost-still Otto geodesic cannot separate by 1e-4
    let slow = dir.path().join("slow.json");
    let text = std::fs::read_to_string(config_path("geodesic_c4_otto.json"))
        .unwrap()
        .replace("[0.12, -0.05, 0.08, -0.15]", "[0.0012, -0.0005, 0.0008, -0.0015]");
    std::fs::write(&slow, text).unwrap();
    let o = densman(&["geodesic-compare", "--config", slow.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], false);

    // malformed config
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"space\": {\"kind\": \"cycle\", \"n\": 8}, \"metric\": \"ottto\"}").unwrap();
    let o = densman(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("`metric`") && err.contains("line 1"), "{err}");
}

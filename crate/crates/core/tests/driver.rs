use std::path::Path;

use hanzawa_flow::config::{InitialConfig, RunConfig};
use hanzawa_flow::driver::{read_manifest, run, summarize, DIAGNOSTICS_FILE, FINAL_SNAPSHOT};
use hanzawa_flow::error::FlowError;
use hanzawa_flow::persist::{read_diagnostics, read_snapshot};

fn config() -> RunConfig {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/ellipse.toml")).unwrap();
    RunConfig::parse(&text).unwrap()
}

#[test]
fn equilibrium_run_keeps_every_row_constant() {
    let mut cfg = config();
    cfg.initial = InitialConfig::Equilibrium { c_bulk: 0.4 };
    cfg.stepping.t_end = 10.0 * cfg.stepping.dt;
    let dir = tempfile::tempdir().unwrap();
    let out = run(&cfg, dir.path()).unwrap();
    assert_eq!(out.records.len(), 11);
    let rows = read_diagnostics(&dir.path().join(DIAGNOSTICS_FILE)).unwrap();
    let first = &rows[0];
    for r in &rows[1..] {
        assert!((r.phi - first.phi).abs() < 1e-12);
        assert!((r.surfactant_mass - first.surfactant_mass).abs() < 1e-12);
        assert!(r.u_max < 1e-12 && r.dissipation < 1e-20);
    }
    let m = read_manifest(dir.path()).unwrap();
    assert!(m.reached_end && m.steps == 10);
    assert!(summarize(dir.path()).unwrap().contains("equilibrium (1e-5): yes"));
}

#[test]
fn restart_from_snapshot_continues_the_run() {
    let mut cfg = config();
    cfg.stepping.t_end = 0.5;
    cfg.output.snapshot_every = 5;
    let dir = tempfile::tempdir().unwrap();
    let first = run(&cfg, dir.path()).unwrap();
    let snap = read_snapshot(&dir.path().join(FINAL_SNAPSHOT)).unwrap();
    assert!((snap.t - 0.5).abs() < 1e-12);
    assert!(dir.path().join("step-000005.snap").exists());
    let mut cont = cfg.clone();
    cont.initial = InitialConfig::FromSnapshot { path: dir.path().join(FINAL_SNAPSHOT) };
    cont.stepping.t_end = 0.6;
    let dir2 = tempfile::tempdir().unwrap();
    let second = run(&cont, dir2.path()).unwrap();
    assert_eq!(second.records[0].t, first.records.last().unwrap().t);
    assert!(second.records.last().unwrap().phi <= first.records.last().unwrap().phi);
}

#[test]
fn invalid_configuration_is_a_config_error() {
    let text = config().to_text().replace("epsilon = 0.9", "epsilon = 5.0");
    match RunConfig::parse(&text) {
        Err(FlowError::Config(msg)) => assert!(!msg.is_empty()),
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

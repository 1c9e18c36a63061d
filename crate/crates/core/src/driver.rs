//! Run orchestration: configuration in, diagnostics, snapshots and a
//! manifest out.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{InitialConfig, RunConfig};
use crate::diagnostics::{equilibrium_check, record, DiagnosticRecord};
use crate::error::{FlowError, Result};
use crate::nonlinear::{check_compatibility, run_semiflow, HaltReason};
use crate::persist::{read_diagnostics, read_snapshot, write_diagnostics, write_snapshot, VERSION};
use crate::state::FlowState;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";
pub const FINAL_SNAPSHOT: &str = "final.snap";

/// Record of a finished run, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub halt: String,
    pub reached_end: bool,
    pub steps: usize,
    pub t_final: f64,
    pub crate_version: String,
    pub snapshot_version: u32,
    pub config: RunConfig,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub halt: HaltReason,
    pub records: Vec<DiagnosticRecord>,
    pub last: FlowState<f64>,
    pub out: PathBuf,
}

/// Initial state of a configuration, checked against the compatibility
/// conditions.
pub fn initial_state(cfg: &RunConfig) -> Result<FlowState<f64>> {
    let scheme = cfg.scheme()?;
    let z0 = match &cfg.initial {
        InitialConfig::FromSnapshot { path } => read_snapshot(path)?.into_state(&scheme.grid)?,
        _ => cfg.preset_state(&scheme)?,
    };
    z0.check_positive()?;
    let rep = check_compatibility(&scheme, &z0)?;
    if !rep.passed() {
        return Err(FlowError::Config(format!("initial state violates the compatibility conditions: {rep:?}")));
    }
    Ok(z0)
}

/// Runs `cfg` and writes `diagnostics.csv`, snapshots `step-<k>.snap` at the
/// configured cadence, `final.snap` and `manifest.toml` into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let scheme = cfg.scheme()?;
    let z0 = initial_state(cfg)?;
    fs::create_dir_all(out)?;
    let every = cfg.output.diagnostics_every.max(1);
    let snap_every = cfg.output.snapshot_every;
    let mut records = vec![record(&scheme, &z0, None)?];
    let mut failure: Option<FlowError> = None;
    let mut step = 0usize;
    let traj = run_semiflow(&scheme, &z0, cfg.stepping.t_end, &cfg.controls(), |z, _| {
        step += 1;
        if failure.is_some() {
            return;
        }
        let mut go = || -> Result<()> {
            if step % every == 0 {
                let r = record(&scheme, z, records.last())?;
                records.push(r);
            }
            if snap_every > 0 && step % snap_every == 0 {
                write_snapshot(&out.join(format!("step-{step:06}.snap")), &scheme.grid, z)?;
            }
            Ok(())
        };
        if let Err(e) = go() {
            failure = Some(e);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if traj.steps % every != 0 {
        records.push(record(&scheme, &traj.last, records.last())?);
    }
    write_diagnostics(&out.join(DIAGNOSTICS_FILE), &records)?;
    write_snapshot(&out.join(FINAL_SNAPSHOT), &scheme.grid, &traj.last)?;
    let manifest = Manifest {
        halt: traj.halt.to_string(),
        reached_end: traj.halt == HaltReason::ReachedEnd,
        steps: traj.steps,
        t_final: traj.last.t,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        snapshot_version: VERSION,
        config: cfg.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| FlowError::Io(e.to_string()))?;
    fs::write(out.join(MANIFEST_FILE), text)?;
    Ok(RunOutcome { halt: traj.halt, records, last: traj.last, out: out.to_path_buf() })
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    toml::from_str(&text).map_err(|e| FlowError::Io(format!("manifest: {e}")))
}

/// Plain-text summary of a finished run directory.
pub fn summarize(dir: &Path) -> Result<String> {
    let m = read_manifest(dir)?;
    let rows = read_diagnostics(&dir.join(DIAGNOSTICS_FILE))?;
    let (first, last) = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(FlowError::Io("empty diagnostics table".into())),
    };
    let span = (last.t - first.t).max(f64::MIN_POSITIVE);
    let rel = |a: f64, b: f64| ((b - a) / a.abs().max(f64::MIN_POSITIVE)).abs();
    let max_rise = rows.windows(2).map(|w| w[1].phi - w[0].phi).fold(f64::NEG_INFINITY, f64::max);
    let cfg_scheme = m.config.scheme()?;
    let end = read_snapshot(&dir.join(FINAL_SNAPSHOT))?.into_state(&cfg_scheme.grid)?;
    let eq = equilibrium_check(&cfg_scheme, &end, 1e-5);
    let mut s = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(s, "halt:              {}", m.halt);
    let _ = writeln!(s, "steps:             {} (t = {} .. {})", m.steps, first.t, last.t);
    let _ = writeln!(s, "Phi:               {:.10e} -> {:.10e} (largest rise {:.3e})", first.phi, last.phi, max_rise);
    let _ = writeln!(s, "mass drift / time: {:.3e}", rel(first.surfactant_mass, last.surfactant_mass) / span);
    let _ = writeln!(s, "area drift / time: {:.3e}", rel(first.drop_area, last.drop_area) / span);
    let _ = writeln!(
        s,
        "final indicators:  u_max {:.3e}, circle {:.3e}, c_osc {:.3e}, c_sigma_osc {:.3e}, p_osc {:.3e}/{:.3e}",
        eq.u_max, eq.circle_deviation, eq.c_osc, eq.c_sigma_osc, eq.p_inner_osc, eq.p_outer_osc
    );
    let _ = writeln!(s, "equilibrium (1e-5): {}", if eq.is_equilibrium() { "yes" } else { "no" });
    Ok(s)
}

//! Verification suites: oracle checks with measured errors and observed
//! convergence orders, shared by the command line and the test targets.

mod dynamics;
mod mms;

pub use dynamics::{dynamics_suite, equilibrium_invariance, relaxation_run, DynamicsSetup, RelaxationSummary};
mod statics;

pub use mms::{bulk_mms, laplace_law, per_mode_vs_global, stokes_mms, stokes_study, surface_mms, ConvergenceStudy};

use std::fmt;

use crate::constitutive::{EquationOfState, Isotherm, MaterialModel};

pub use statics::{
    bulk_chain_rule, constitutive_suite, geometry_suite, hanzawa_suite, ops_suite, surface_chain_rule,
};

/// The two matched constitutive pairs used by the suites.
pub fn models() -> [(&'static str, MaterialModel<f64>); 2] {
    let linear = MaterialModel {
        rho_minus: 1.0,
        rho_plus: 1.0,
        eta_minus: 1.0,
        eta_plus: 0.5,
        d: 0.2,
        d_gamma: 0.1,
        eos: EquationOfState::Linear { sigma0: 1.0, beta: 0.2 },
        isotherm: Isotherm::Henry { k: 2.0 },
        s_ref: 0.5,
    };
    let langmuir = MaterialModel {
        eos: EquationOfState::Szyszkowski { sigma0: 1.0, e: 0.3, s_inf: 2.0 },
        isotherm: Isotherm::Langmuir { s_inf: 2.0, k: 1.5 },
        ..linear
    };
    [("linear/Henry", linear), ("Szyszkowski/Langmuir", langmuir)]
}

/// One pass/fail line.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable requirement, e.g. `< 1e-10` or `>= 1.9`.
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, measured: f64, tol: f64) -> Self {
        Self { name: name.into(), measured, requirement: format!("< {tol:.0e}"), pass: measured < tol }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, min: f64) -> Self {
        Self { name: name.into(), measured, requirement: format!(">= {min}"), pass: measured >= min }
    }

    pub fn within(name: impl Into<String>, measured: f64, centre: f64, half_width: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            requirement: format!("{centre} ± {half_width}"),
            pass: (measured - centre).abs() <= half_width,
        }
    }

    pub fn flag(name: impl Into<String>, measured: f64, pass: bool, requirement: impl Into<String>) -> Self {
        Self { name: name.into(), measured, requirement: requirement.into(), pass }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<58} {:>12.4e}  ({})", self.name, self.measured, self.requirement)
    }
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 7] = ["geometry", "hanzawa", "ops", "constitutive", "solver", "energy", "all"];

/// Runs a named suite. `energy` covers the relaxation run, the fixed-point
/// behaviour and equilibrium invariance.
pub fn run_suite(name: &str) -> Option<Vec<Check>> {
    let v = match name {
        "geometry" => geometry_suite(),
        "hanzawa" => hanzawa_suite(),
        "ops" => ops_suite(),
        "constitutive" => constitutive_suite(),
        "solver" => solver_suite(),
        "energy" => dynamics_suite(),
        "all" => SUITES[..6].iter().flat_map(|s| run_suite(s).unwrap_or_default()).collect(),
        _ => return None,
    };
    Some(v)
}

pub fn solver_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let (stokes, p_order) = stokes_study();
    for study in [surface_mms(), bulk_mms(), stokes] {
        out.push(Check::at_least(format!("solver: {} spatial order", study.name), study.spatial_order, 1.9));
        out.push(Check::at_least(format!("solver: {} temporal order", study.name), study.temporal_order, 0.9));
    }
    out.push(Check::at_least("solver: two-phase Stokes pressure order", p_order, 1.9));
    out.push(Check::below("solver: static drop pressure jump vs sigma/R", laplace_law(), 1e-9));
    out.push(Check::below("solver: per-mode vs dense global solve", per_mode_vs_global(), 1e-10));
    out
}

/// Observed order from errors at resolutions refined by `factor`.
pub fn observed_order(coarse: f64, fine: f64, factor: f64) -> f64 {
    (coarse / fine).ln() / factor.ln()
}

pub fn print_table(checks: &[Check]) -> String {
    checks.iter().map(|c| format!("{c}\n")).collect()
}

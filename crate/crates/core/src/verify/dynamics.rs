//! Relaxation of a perturbed drop: energy decay, conservation, approach to
//! equilibrium and fixed-point behaviour.

use super::{models, observed_order, Check};
use crate::diagnostics::{equilibrium_check, record, DiagnosticRecord, EquilibriumReport};
use crate::discrete::Scheme;
use crate::geometry::ReferenceGeometry;
use crate::hanzawa::HeightFunction;
use crate::nonlinear::{fixed_point_step, run_semiflow, Controls, HaltReason};
use crate::state::FlowState;

/// The relaxation test case: an elliptic drop in a Szyszkowski/Langmuir
/// surfactant system.
#[derive(Clone, Copy, Debug)]
pub struct DynamicsSetup {
    pub n_theta: usize,
    pub n_r_in: usize,
    pub n_r_out: usize,
    pub epsilon: f64,
    pub c_bulk: f64,
    pub amplitude: f64,
}

impl Default for DynamicsSetup {
    fn default() -> Self {
        Self { n_theta: 32, n_r_in: 16, n_r_out: 20, epsilon: 0.9, c_bulk: 0.4, amplitude: 0.05 }
    }
}

impl DynamicsSetup {
    pub fn scheme(&self, dt: f64) -> Scheme<f64> {
        let g = ReferenceGeometry::new(2.0, 1.0, self.n_theta, self.n_r_in, self.n_r_out, self.epsilon)
            .expect("valid geometry")
            .grid(2);
        Scheme::new(g, models()[1].1, dt).expect("valid scheme")
    }

    pub fn ellipse(&self, scheme: &Scheme<f64>) -> FlowState<f64> {
        let mut z = FlowState::equilibrium(&scheme.grid, &scheme.model, self.c_bulk).expect("admissible state");
        let th = scheme.grid.fourier.nodes();
        let a = self.amplitude * scheme.grid.geom.r_sigma;
        z.gamma = HeightFunction::from_fn(&th, |t| a * (2.0 * t).cos());
        z
    }
}

/// What a relaxation run measured.
#[derive(Clone, Debug)]
pub struct RelaxationSummary {
    pub halt: HaltReason,
    pub steps: usize,
    pub records: Vec<DiagnosticRecord>,
    /// Largest per-step increase of `Φ`.
    pub max_phi_rise: f64,
    pub mass_drift_rate: f64,
    pub area_drift_rate: f64,
    pub contraction: Vec<f64>,
    pub final_check: EquilibriumReport,
}

impl RelaxationSummary {
    pub fn record_at(&self, t: f64) -> Option<&DiagnosticRecord> {
        self.records.iter().find(|r| (r.t - t).abs() < 1e-9)
    }

    /// Median contraction over steps up to time `t`.
    pub fn median_contraction(&self, t: f64) -> f64 {
        let mut v: Vec<f64> =
            self.records.iter().skip(1).zip(&self.contraction).filter(|(r, _)| r.t <= t + 1e-9).map(|(_, &c)| c).collect();
        v.sort_by(f64::total_cmp);
        if v.is_empty() {
            return f64::NAN;
        }
        v[v.len() / 2]
    }
}

pub fn relaxation_run(setup: &DynamicsSetup, dt: f64, t_end: f64) -> RelaxationSummary {
    let scheme = setup.scheme(dt);
    let z0 = setup.ellipse(&scheme);
    let mut records = vec![record(&scheme, &z0, None).expect("diagnostics")];
    let traj = run_semiflow(&scheme, &z0, t_end, &Controls::default(), |z, _| {
        let r = record(&scheme, z, records.last()).expect("diagnostics");
        records.push(r);
    });
    let max_phi_rise = records.windows(2).map(|w| w[1].phi - w[0].phi).fold(f64::NEG_INFINITY, f64::max);
    let (first, last) = (&records[0], &records[records.len() - 1]);
    let span = (last.t - first.t).max(f64::MIN_POSITIVE);
    let drift = |a: f64, b: f64| ((b - a) / a).abs() / span;
    RelaxationSummary {
        halt: traj.halt.clone(),
        steps: traj.steps,
        max_phi_rise,
        mass_drift_rate: drift(first.surfactant_mass, last.surfactant_mass),
        area_drift_rate: drift(first.drop_area, last.drop_area),
        contraction: traj.contraction.iter().map(|c| c.unwrap_or(0.0)).collect(),
        final_check: equilibrium_check(&scheme, &traj.last, 1e-5),
        records,
    }
}

/// Largest deviation from the initial state over `steps` steps started at an
/// exact equilibrium.
pub fn equilibrium_invariance(steps: usize) -> f64 {
    let setup = DynamicsSetup::default();
    let scheme = setup.scheme(0.05);
    let z0 = FlowState::equilibrium(&scheme.grid, &scheme.model, setup.c_bulk).expect("admissible state");
    let mut z = z0.clone();
    let mut worst = 0.0f64;
    for _ in 0..steps {
        z = match fixed_point_step(&scheme, &z, &Controls::default()) {
            Ok(rep) => rep.state,
            Err(_) => return f64::INFINITY,
        };
        worst = worst.max(z.max_diff(&z0));
    }
    worst
}

pub fn dynamics_suite() -> Vec<Check> {
    let setup = DynamicsSetup::default();
    let mut out = Vec::new();
    let run = relaxation_run(&setup, 0.05, 45.0);
    let phi0 = run.records[0].phi.abs();
    out.push(Check::flag(
        "energy: relaxation run reaches T = 45",
        run.steps as f64,
        run.halt == HaltReason::ReachedEnd,
        "no halt",
    ));
    out.push(Check::below("energy: largest per-step rise of Phi / |Phi(0)|", run.max_phi_rise / phi0, 1e-10));
    out.push(Check::below("energy: surfactant mass drift per unit time (rel)", run.mass_drift_rate, 1e-6));
    out.push(Check::below("energy: drop area drift per unit time (rel)", run.area_drift_rate, 1e-6));
    let eq = &run.final_check;
    let worst = eq.indicators().into_iter().fold(0.0, f64::max);
    out.push(Check::below("energy: largest equilibrium indicator at T = 45", worst, 1e-5));
    let worst_ratio = run.contraction.iter().copied().fold(0.0, f64::max);
    out.push(Check::below("energy: largest fixed-point contraction ratio", worst_ratio, 1.0));

    // energy residual at t = 1 under Δt refinement
    let dts = [0.05, 0.025, 0.0125, 0.00625];
    let res: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let r = if dt == 0.05 { run.clone() } else { relaxation_run(&setup, dt, 1.0) };
            r.record_at(1.0).map(|x| x.energy_residual.abs()).unwrap_or(f64::INFINITY)
        })
        .collect();
    let order = res.windows(2).map(|w| observed_order(w[0], w[1], 2.0)).fold(f64::INFINITY, f64::min);
    out.push(Check::at_least("energy: energy residual at t = 1, worst order over dt halvings", order, 0.9));

    // contraction improves when the step is halved
    let half = relaxation_run(&setup, 0.025, 4.0);
    let (m1, m2) = (run.median_contraction(4.0), half.median_contraction(4.0));
    out.push(Check::flag(
        "energy: median contraction on [0, 4], dt = 0.025 (vs 0.05)",
        m2,
        m2 < m1,
        format!("< {m1:.4}"),
    ));
    out.push(Check::below("energy: equilibrium unchanged over 100 steps", equilibrium_invariance(100), 1e-9));
    out
}

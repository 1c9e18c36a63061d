//! Manufactured solutions for the three linear sub-solves, the static-drop
//! pressure jump and the per-mode/global agreement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{models, observed_order};
use crate::discrete::{Scheme, StokesRows};
use crate::field::{BulkField, Location};
use crate::geometry::{PolarGrid, ReferenceGeometry, SurfaceField};
use crate::hanzawa::HeightFunction;
use crate::linear_solver::{FrozenCoefficients, LinearSolver, LinearStepData};
use crate::nonlinear::{fixed_point_step, Controls};
use crate::state::FlowState;

/// Errors and observed orders of one manufactured-solution study.
#[derive(Clone, Debug)]
pub struct ConvergenceStudy {
    pub name: &'static str,
    /// `(resolution, sup error)` for the spatial refinement.
    pub spatial: Vec<(usize, f64)>,
    pub spatial_order: f64,
    /// `(Δt, sup of successive differences)`.
    pub temporal: Vec<(f64, f64)>,
    pub temporal_order: f64,
}

/// Time profile `τ` and its derivative: linear for spatial studies (backward
/// Euler is exact on it), exponential for temporal ones.
#[derive(Clone, Copy)]
enum Profile {
    Linear,
    Decay,
}

impl Profile {
    fn at(self, t: f64) -> (f64, f64) {
        match self {
            Profile::Linear => (1.0 + t, 1.0),
            Profile::Decay => ((-t).exp(), -(-t).exp()),
        }
    }
}

const OMEGA: f64 = 0.2;
const T_END: f64 = 0.4;

fn grid(nt: usize, nr: usize) -> PolarGrid<f64> {
    ReferenceGeometry::new(2.0, 1.0, nt, nr, nr, 0.9).expect("valid geometry").grid(2)
}

fn rotating_frozen(grid: &PolarGrid<f64>) -> FrozenCoefficients<f64> {
    let m = models()[1].1;
    let mut fr = FrozenCoefficients::at_rest(grid, &m, 0.3);
    fr.u_inner = grid.inner.r.iter().map(|&r| [0.0, OMEGA * r]).collect();
    fr.u_outer = grid.outer.r.iter().map(|&r| [0.0, OMEGA * r]).collect();
    fr.u_sigma = OMEGA * grid.geom.r_sigma;
    fr.sigma = 0.8;
    fr.alpha_prime = vec![1.0; grid.n_theta()];
    fr
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Marches `steps` backward-Euler steps of size `dt` from the exact state
/// and returns the final discrete state.
fn march<S>(init: S, dt: f64, t_end: f64, mut step: impl FnMut(&S, f64) -> S) -> S {
    let n = (t_end / dt).round() as usize;
    let mut s = init;
    for k in 1..=n {
        s = step(&s, k as f64 * dt);
    }
    s
}

fn temporal_study(dts: [f64; 3], run: impl Fn(f64) -> Vec<f64>) -> (Vec<(f64, f64)>, f64) {
    let sols: Vec<Vec<f64>> = dts.iter().map(|&dt| run(dt)).collect();
    let d1 = sup_diff(&sols[0], &sols[1]);
    let d2 = sup_diff(&sols[1], &sols[2]);
    (vec![(dts[0], d1), (dts[1], d2)], observed_order(d1, d2, dts[0] / dts[1]))
}

// ---------------------------------------------------------------- surface

fn surface_exact(theta: &[f64], tau: f64) -> Vec<f64> {
    theta.iter().map(|t| 1.0 + 0.3 * tau * t.sin().exp()).collect()
}

fn surface_run(nt: usize, dt: f64, prof: Profile) -> (Vec<f64>, Vec<f64>) {
    let g = grid(nt, 8);
    let fr = rotating_frozen(&g);
    let s = LinearSolver::new(&g, &models()[1].1, dt, fr.clone()).expect("solver");
    let (rs, dg) = (g.geom.r_sigma, s.model.d_gamma);
    let th = g.theta.clone();
    let out = march(surface_exact(&th, prof.at(0.0).0), dt, T_END, |old, t| {
        let (tau, dtau) = prof.at(t);
        let mut data = LinearStepData::zeros(&g, dt, fr.clone());
        data.surface = th
            .iter()
            .map(|&x| {
                let w = 0.3 * x.sin().exp();
                let (w1, w2) = (x.cos() * w, (x.cos().powi(2) - x.sin()) * w);
                dtau * w + tau * (fr.u_sigma * w1 / rs - dg * w2 / (rs * rs))
            })
            .collect();
        s.solve_surface_parabolic(old, &data)
    });
    (out, surface_exact(&th, prof.at(T_END).0))
}

pub fn surface_mms() -> ConvergenceStudy {
    let spatial: Vec<(usize, f64)> = [8, 16]
        .iter()
        .map(|&n| {
            let (a, b) = surface_run(n, 0.1, Profile::Linear);
            (n, sup_diff(&a, &b))
        })
        .collect();
    let spatial_order = observed_order(spatial[0].1, spatial[1].1.max(1e-16), 2.0);
    let (temporal, temporal_order) = temporal_study([0.1, 0.05, 0.025], |dt| surface_run(32, dt, Profile::Decay).0);
    ConvergenceStudy { name: "surface concentration", spatial, spatial_order, temporal, temporal_order }
}

// ------------------------------------------------------------------- bulk

const GAUSS: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

#[derive(Clone, Copy)]
struct BulkExact {
    r_sigma: f64,
    r_omega: f64,
}

impl BulkExact {
    /// `c = 1 + τ cos(πs)(0.3 + cos θ + 0.5 sin 2θ)` with `s` the scaled
    /// distance from Σ; `∂_r c` vanishes on the wall.
    fn parts(&self, r: f64, t: f64) -> ([f64; 3], [f64; 3]) {
        let l = self.r_omega - self.r_sigma;
        let k = std::f64::consts::PI / l;
        let s = k * (r - self.r_sigma);
        let radial = [s.cos(), -k * s.sin(), -k * k * s.cos()];
        let ang = [0.3 + t.cos() + 0.5 * (2.0 * t).sin(), -t.sin() + (2.0 * t).cos(), -t.cos() - 2.0 * (2.0 * t).sin()];
        (radial, ang)
    }

    fn value(&self, r: f64, t: f64, tau: f64) -> f64 {
        let (a, b) = self.parts(r, t);
        1.0 + tau * a[0] * b[0]
    }

    /// `c_t + ū_θ c_θ / r − d Δc` times `r`.
    fn weighted_operator(&self, r: f64, t: f64, tau: f64, dtau: f64, d: f64) -> f64 {
        let (a, b) = self.parts(r, t);
        let lap = a[2] * b[0] + a[1] * b[0] / r + a[0] * b[2] / (r * r);
        (dtau * a[0] * b[0] + tau * (OMEGA * a[0] * b[1] - d * lap)) * r
    }
}

fn bulk_run(nt: usize, nr: usize, dt: f64, prof: Profile) -> (Vec<f64>, Vec<f64>) {
    let g = grid(nt, nr);
    let fr = rotating_frozen(&g);
    let s = LinearSolver::new(&g, &models()[1].1, dt, fr.clone()).expect("solver");
    let ex = BulkExact { r_sigma: g.geom.r_sigma, r_omega: g.geom.r_omega };
    let r = g.outer.r.clone();
    let m = r.len();
    let d = s.model.d;
    let field = |tau: f64| -> Vec<f64> {
        let th = &g.theta;
        r.iter().flat_map(|&ri| th.iter().map(move |&t| ex.value(ri, t, tau))).collect()
    };
    let out = march(field(prof.at(0.0).0), dt, T_END, |old, t| {
        let (tau, dtau) = prof.at(t);
        let mut data = LinearStepData::zeros(&g, dt, fr.clone());
        for j in 1..m {
            let ra = 0.5 * (r[j - 1] + r[j]);
            let rb = if j + 1 < m { 0.5 * (r[j] + r[j + 1]) } else { r[m - 1] };
            for (a, &th) in g.theta.iter().enumerate() {
                data.bulk[j * nt + a] = GAUSS
                    .iter()
                    .map(|&(x, w)| {
                        let rr = 0.5 * (ra + rb) + 0.5 * (rb - ra) * x;
                        0.5 * (rb - ra) * w * ex.weighted_operator(rr, th, tau, dtau, d)
                    })
                    .sum();
            }
        }
        let trace: Vec<f64> = g.theta.iter().map(|&th| ex.value(r[0], th, tau)).collect();
        s.solve_bulk_parabolic(old, &trace, &data)
    });
    (out, field(prof.at(T_END).0))
}

pub fn bulk_mms() -> ConvergenceStudy {
    let spatial: Vec<(usize, f64)> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let (a, b) = bulk_run(16, n, 0.1, Profile::Linear);
            (n, sup_diff(&a, &b))
        })
        .collect();
    let spatial_order = observed_order(spatial[1].1, spatial[2].1, 2.0);
    let (temporal, temporal_order) = temporal_study([0.1, 0.05, 0.025], |dt| bulk_run(16, 32, dt, Profile::Decay).0);
    ConvergenceStudy { name: "bulk concentration", spatial, spatial_order, temporal, temporal_order }
}

// ----------------------------------------------------------------- Stokes

const A: f64 = 1.1;
const B: f64 = 0.7;

/// Cartesian velocity `U = (∂_yΨ, −∂_xΨ)` for `Ψ = sin(Ax) sin(By)`, its
/// Jacobian `J_ij = ∂_j U_i` and `ΔU = −(A² + B²)U`.
fn stokes_velocity(x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let (sx, cx) = (A * x).sin_cos();
    let (sy, cy) = (B * y).sin_cos();
    let u = [B * sx * cy, -A * cx * sy];
    let j = [[A * B * cx * cy, -B * B * sx * sy], [A * A * sx * sy, -A * B * cx * cy]];
    (u, j)
}

fn stokes_pressure(inner: bool, x: f64, y: f64) -> (f64, [f64; 2]) {
    if inner {
        let (sx, cx) = x.sin_cos();
        let (sy, cy) = (0.5 * y).sin_cos();
        (cx * cy, [-sx * cy, -0.5 * cx * sy])
    } else {
        let (s, c) = (x + y).sin_cos();
        (0.3 + 0.5 * s, [0.5 * c, 0.5 * c])
    }
}

fn stokes_gamma(t: f64) -> [f64; 3] {
    let a = 0.05;
    [
        a * ((2.0 * t).cos() + (3.0 * t).sin()),
        a * (-2.0 * (2.0 * t).sin() + 3.0 * (3.0 * t).cos()),
        a * (-4.0 * (2.0 * t).cos() - 9.0 * (3.0 * t).sin()),
    ]
}

fn frame(t: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = t.sin_cos();
    ([c, s], [-s, c])
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sym(j: [[f64; 2]; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    // aᵀ(J + Jᵀ)b
    let mut s = 0.0;
    for i in 0..2 {
        for k in 0..2 {
            s += a[i] * (j[i][k] + j[k][i]) * b[k];
        }
    }
    s
}

/// Exact `(u, p, γ)` in unknown layout at profile value `tau`.
fn stokes_exact(g: &PolarGrid<f64>, tau: f64) -> StokesRows<f64> {
    let u = BulkField::from_fn(g, 2, Location::Nodes, |c, r, t| {
        let (er, et) = frame(t);
        let (v, _) = stokes_velocity(r * t.cos(), r * t.sin());
        tau * dot(v, if c == 0 { er } else { et })
    });
    let mut p = BulkField::pressure(g);
    let (ri, ro) = BulkField::radii(g, Location::Cells);
    let nt = g.n_theta();
    for (blk, radii) in [ri, ro].iter().enumerate() {
        let dst = if blk == 0 { &mut p.inner[0] } else { &mut p.outer[0] };
        for (i, &r) in radii.iter().enumerate() {
            for (a, &t) in g.theta.iter().enumerate() {
                dst[i * nt + a] = tau * stokes_pressure(blk == 0, r * t.cos(), r * t.sin()).0;
            }
        }
    }
    let gamma: Vec<f64> = g.theta.iter().map(|&t| tau * stokes_gamma(t)[0]).collect();
    StokesRows::pack(&u, &p, &gamma)
}

fn stokes_data(g: &PolarGrid<f64>, fr: &FrozenCoefficients<f64>, dt: f64, tau: f64, dtau: f64) -> LinearStepData<f64> {
    let m = models()[1].1;
    let nt = g.n_theta();
    let (ni, no) = (g.inner.len(), g.outer.len());
    let rs = g.geom.r_sigma;
    let mut data = LinearStepData::zeros(g, dt, fr.clone());
    let rows = &mut data.stokes;
    let momentum = |inner: bool, r: f64, t: f64| -> [f64; 2] {
        let (x, y) = (r * t.cos(), r * t.sin());
        let (u, j) = stokes_velocity(x, y);
        let (_, gp) = stokes_pressure(inner, x, y);
        let ub = [-OMEGA * y, OMEGA * x];
        let (rho, eta) = (m.rho(inner), m.eta(inner));
        let k2 = A * A + B * B;
        let f: [f64; 2] = std::array::from_fn(|i| {
            let adv = j[i][0] * ub[0] + j[i][1] * ub[1];
            rho * (dtau * u[i] + tau * adv) + eta * tau * k2 * u[i] + tau * gp[i]
        });
        let (er, et) = frame(t);
        [dot(f, er), dot(f, et)]
    };
    for (a, &t) in g.theta.iter().enumerate() {
        for i in 0..ni - 1 {
            let v = momentum(true, g.inner.r[i], t);
            rows.inner[1][i * nt + a] = v[0];
            rows.inner[2][i * nt + a] = v[1];
        }
        for jn in 1..no - 1 {
            let v = momentum(false, g.outer.r[jn], t);
            rows.outer[0][jn * nt + a] = v[0];
            rows.outer[1][jn * nt + a] = v[1];
        }
        // interface rows (velocity is continuous, so the jump rows stay zero)
        let (x, y) = (rs * t.cos(), rs * t.sin());
        let (u, j) = stokes_velocity(x, y);
        let (er, et) = frame(t);
        let jump_eta = m.eta_plus - m.eta_minus;
        rows.outer[0][a] = -jump_eta * tau * sym(j, et, er);
        let jump_p = stokes_pressure(false, x, y).0 - stokes_pressure(true, x, y).0;
        let gm = stokes_gamma(t);
        rows.outer[1][a] = -jump_eta * tau * sym(j, er, er) + tau * jump_p - fr.sigma * tau * gm[2] / (rs * rs);
        rows.gamma[a] = dtau * gm[0] + fr.u_sigma * tau * gm[1] / rs - tau * dot(u, er);
        // wall
        let rw = g.geom.r_omega;
        let (uw, _) = stokes_velocity(rw * t.cos(), rw * t.sin());
        rows.outer[0][(no - 1) * nt + a] = tau * dot(uw, er);
        rows.outer[1][(no - 1) * nt + a] = tau * dot(uw, et);
    }
    // pressure level of the pinned cell
    let rc = 0.5 * (g.outer.r[no - 2] + g.outer.r[no - 1]);
    let level = g.theta.iter().map(|&t| tau * stokes_pressure(false, rc * t.cos(), rc * t.sin()).0).sum::<f64>() / nt as f64;
    rows.outer[2][(no - 2) * nt..(no - 1) * nt].iter_mut().for_each(|v| *v = level);
    data
}

fn velocity_of(g: &PolarGrid<f64>, x: &StokesRows<f64>) -> BulkField<f64> {
    let mut u = BulkField::velocity(g);
    u.inner = vec![x.inner[1].clone(), x.inner[2].clone()];
    u.outer = vec![x.outer[0].clone(), x.outer[1].clone()];
    u
}

/// Errors `(velocity and height, pressure)` of a Stokes run, or the final
/// unknowns when `keep` is set.
fn stokes_run(nt: usize, nr: usize, dt: f64, prof: Profile) -> (StokesRows<f64>, StokesRows<f64>) {
    let g = grid(nt, nr);
    let fr = rotating_frozen(&g);
    let s = LinearSolver::new(&g, &models()[1].1, dt, fr.clone()).expect("solver");
    let zeros = vec![0.0; nt];
    let out = march(stokes_exact(&g, prof.at(0.0).0), dt, T_END, |old, t| {
        let (tau, dtau) = prof.at(t);
        let data = stokes_data(&g, &fr, dt, tau, dtau);
        s.solve_two_phase_stokes(&velocity_of(&g, old), &old.gamma, &zeros, &data)
    });
    (out, stokes_exact(&g, prof.at(T_END).0))
}

fn kinematic_part(x: &StokesRows<f64>) -> Vec<f64> {
    let mut v = x.inner[1].clone();
    v.extend_from_slice(&x.inner[2]);
    v.extend_from_slice(&x.outer[0]);
    v.extend_from_slice(&x.outer[1]);
    v.extend_from_slice(&x.gamma);
    v
}

fn pressure_part(x: &StokesRows<f64>, nt: usize) -> Vec<f64> {
    let mut v = x.inner[0].clone();
    let n = x.outer[2].len() - nt;
    v.extend_from_slice(&x.outer[2][..n]);
    v
}

pub fn stokes_mms() -> ConvergenceStudy {
    stokes_study().0
}

/// The Stokes study and the observed pressure order.
pub fn stokes_study() -> (ConvergenceStudy, f64) {
    let nt = 32;
    let runs: Vec<(usize, f64, f64)> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let (a, b) = stokes_run(nt, n, 0.1, Profile::Linear);
            (n, sup_diff(&kinematic_part(&a), &kinematic_part(&b)), sup_diff(&pressure_part(&a, nt), &pressure_part(&b, nt)))
        })
        .collect();
    let spatial_order = observed_order(runs[1].1, runs[2].1, 2.0);
    let p_order = observed_order(runs[1].2, runs[2].2, 2.0);
    let (temporal, temporal_order) =
        temporal_study([0.1, 0.05, 0.025], |dt| kinematic_part(&stokes_run(nt, 24, dt, Profile::Decay).0));
    let study = ConvergenceStudy {
        name: "two-phase Stokes",
        spatial: runs.iter().map(|r| (r.0, r.1)).collect(),
        spatial_order,
        temporal,
        temporal_order,
    };
    (study, p_order)
}

// ----------------------------------------------------------- other checks

/// Largest deviation of the computed pressure jump from `σ/(R_σ + γ)` for a
/// drop at rest started from zero pressure, over a centred and a uniformly
/// dilated reference circle.
pub fn laplace_law() -> f64 {
    let (_, m) = models()[1];
    let g = grid(16, 12);
    let scheme = Scheme::new(g.clone(), m, 0.1).expect("scheme");
    let mut worst = 0.0f64;
    for shift in [0.0, 0.05] {
        let mut z = FlowState::equilibrium(&g, &m, 0.4).expect("equilibrium");
        z.gamma = HeightFunction::new(SurfaceField::constant(16, shift));
        z.p = BulkField::pressure(&g);
        let step = fixed_point_step(&scheme, &z, &Controls { tol: 1e-13, ..Controls::default() }).expect("step");
        let sigma = m.sigma(m.isotherm.alpha(0.4));
        let want = sigma / (g.geom.r_sigma + shift);
        let p_out = step.state.p.outer[0].iter().sum::<f64>() / step.state.p.outer[0].len() as f64;
        for &pi in &step.state.p.inner[0] {
            worst = worst.max((pi - p_out - want).abs());
        }
        for &po in &step.state.p.outer[0] {
            worst = worst.max((po - p_out).abs());
        }
        worst = worst.max(step.state.u.sup_norm());
    }
    worst
}

/// Difference between the per-mode banded solve and one dense real-space
/// solve of the same Stokes system for random data.
pub fn per_mode_vs_global() -> f64 {
    let g = ReferenceGeometry::new(2.0, 1.0, 8, 7, 8, 0.9).expect("valid geometry").grid(2);
    let (_, m) = models()[1];
    let mut fr = FrozenCoefficients::at_rest(&g, &m, 0.3);
    fr.u_inner.iter_mut().enumerate().for_each(|(i, u)| *u = [0.01 * i as f64, 0.1]);
    fr.u_outer.iter_mut().enumerate().for_each(|(i, u)| *u = [-0.02, 0.05 * i as f64]);
    fr.u_sigma = 0.1;
    let s = LinearSolver::new(&g, &m, 0.1, fr).expect("solver");
    let nt = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = StokesRows::zeros(&g).to_vec().len();
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut b = StokesRows::from_vec(&g, &v);
    let f = &g.fourier;
    let strip = |v: &mut Vec<f64>| {
        *v = v
            .chunks(nt)
            .flat_map(|row| {
                let mut h = f.half(row);
                h[nt / 2] = num_complex::Complex::new(0.0, 0.0);
                f.from_half_real(&h)
            })
            .collect();
    };
    b.inner.iter_mut().for_each(strip);
    b.outer.iter_mut().for_each(strip);
    strip(&mut b.gamma);
    let w = (g.outer.len() - 1) * nt;
    b.outer[2][w..].iter_mut().for_each(|v| *v = 0.0);
    let y = s.solve_stokes(&b);
    match s.solve_stokes_dense(&b) {
        Ok(z) => sup_diff(&y.to_vec(), &z.to_vec()),
        Err(_) => f64::INFINITY,
    }
}

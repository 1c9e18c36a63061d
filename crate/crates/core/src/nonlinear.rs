//! Fixed-point time stepping around the principal linearization.
//!
//! One step solves `F(z) = 0` for the backward-Euler residual of
//! [`crate::discrete`] by `z ← z − L⁻¹F(z)`, with `L` the frozen-coefficient
//! operator of [`crate::linear_solver`]. Written around the reference `z*` (the
//! previous accepted state) this is `z − z* = L⁻¹(N(z) − F(z*))`, where
//! `N(z) = L(z − z*) − (F(z) − F(z*))` collects the nonlinear remainder and
//! the lagged angular oscillation of the frozen coefficients.

use crate::constitutive::MaterialModel;
use crate::discrete::{Frame, Scheme, StepOrigin, StokesRows};
use crate::error::{FlowError, Result};
use crate::field::BulkField;
use crate::geometry::{PolarGrid, SurfaceField};
use crate::hanzawa::HeightFunction;
use crate::linear_solver::{FrozenCoefficients, LinearSolver};
use crate::scalar::Real;

pub use crate::state::FlowState;

/// Iteration controls of one time step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Controls<T> {
    pub tol: T,
    pub k_max: usize,
    /// Fraction of the height bound `ε/4` at which a run stops and asks for a
    /// new reference interface.
    pub rereference_fraction: T,
    /// Retries of a failed step with `Δt` halved.
    pub halvings: usize,
}

impl<T: Real> Default for Controls<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-9), k_max: 25, rereference_fraction: T::lit(0.9), halvings: 2 }
    }
}

/// Outcome of one converged step.
#[derive(Clone, Debug)]
pub struct StepReport<T: Real> {
    pub state: FlowState<T>,
    pub iterations: usize,
    /// Sup-norm of each increment.
    pub increments: Vec<T>,
    /// Ratios of consecutive increments.
    pub ratios: Vec<T>,
}

impl<T: Real> StepReport<T> {
    /// Mean contraction factor of the step: geometric mean of the ratios
    /// after the first one, over increments above roundoff level. The first
    /// ratio compares the first correction with the predictor jump `z − zⁿ`
    /// and measures the step size rather than the contraction. `None` when
    /// the step converged in one iteration.
    pub fn contraction(&self) -> Option<T> {
        let floor = T::lit(1e-12);
        let tail: Vec<T> = self
            .ratios
            .iter()
            .zip(self.increments.iter().skip(1))
            .skip(1)
            .filter(|(_, &inc)| inc > floor)
            .map(|(&r, _)| r)
            .collect();
        if tail.is_empty() {
            return self.ratios.first().copied();
        }
        let mean_log = tail.iter().map(|r| r.ln()).sum::<T>() / T::of_usize(tail.len());
        Some(mean_log.exp())
    }
}

/// Right-hand side blocks in the layouts of the linear sub-problems.
#[derive(Clone, Debug)]
pub struct Blocks<T: Real> {
    pub surface: Vec<T>,
    /// Exterior nodes; the first row is the adsorption condition on Σ.
    pub bulk: Vec<T>,
    pub stokes: StokesRows<T>,
}

impl<T: Real> Blocks<T> {
    /// Removes the Nyquist mode ring by ring. The iteration never corrects
    /// it, so convergence is measured on what remains.
    pub fn resolved(&self, grid: &PolarGrid<T>) -> Self {
        let f = &grid.fourier;
        let strip = |v: &[T]| -> Vec<T> {
            v.chunks(f.len())
                .flat_map(|ring| {
                    let mut h = f.forward(ring);
                    h[f.nyquist()] = num_complex::Complex::new(T::zero(), T::zero());
                    f.inverse(&h)
                })
                .collect()
        };
        let st = &self.stokes;
        Self {
            surface: strip(&self.surface),
            bulk: strip(&self.bulk),
            stokes: StokesRows {
                inner: [strip(&st.inner[0]), strip(&st.inner[1]), strip(&st.inner[2])],
                gamma: strip(&st.gamma),
                outer: [strip(&st.outer[0]), strip(&st.outer[1]), strip(&st.outer[2])],
            },
        }
    }

    pub fn sup_norm(&self) -> T {
        let s = |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        s(&self.surface).max(s(&self.bulk)).max(self.stokes.sup_norm())
    }
}

/// Full residual `F(z)` of a step from `origin`.
pub fn residual<T: Real>(scheme: &Scheme<T>, z: &FlowState<T>, origin: &StepOrigin<T>) -> Result<Blocks<T>> {
    let frame = scheme.frame(&z.gamma)?;
    let (bulk, q) = scheme.bulk_residual(z, origin, &frame);
    let surface = scheme.surface_residual(z, origin, &frame, &q);
    let stokes = scheme.stokes_residual(z, origin, &frame)?;
    Ok(Blocks { surface, bulk, stokes })
}

fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// `N(z | z*)`; vanishes identically at `z = z*`.
pub fn assemble_nonlinearities<T: Real>(
    scheme: &Scheme<T>,
    solver: &LinearSolver<T>,
    z: &FlowState<T>,
    reference: &FlowState<T>,
    origin: &StepOrigin<T>,
) -> Result<Blocks<T>> {
    let fz = residual(scheme, z, origin)?;
    let fs = residual(scheme, reference, origin)?;
    let ds = sub(z.c_sigma.values(), reference.c_sigma.values());
    let dc = sub(&z.c.outer[0], &reference.c.outer[0]);
    let nt = scheme.grid.n_theta();
    let mut lb = solver.apply_bulk(&dc);
    for a in 0..nt {
        lb[a] = solver.frozen.alpha_prime[a] * dc[a] - ds[a];
    }
    let du = {
        let mut u = z.u.clone();
        u.axpy(-T::one(), &reference.u);
        u
    };
    let mut dp = z.p.clone();
    dp.axpy(-T::one(), &reference.p);
    let dg = sub(z.gamma.values(), reference.gamma.values());
    let mut ls = solver.apply_stokes_with(&StokesRows::pack(&du, &dp, &dg), false);
    // Marangoni force of the surface increment belongs to the linear operator
    let dds = scheme.grid.fourier.derivative(&ds, 1);
    for a in 0..nt {
        ls.outer[0][a] -= solver.frozen.sigma_prime[a] * dds[a] / scheme.grid.geom.r_sigma;
    }
    let stokes_f = sub(&fz.stokes.to_vec(), &fs.stokes.to_vec());
    let stokes = StokesRows::from_vec(&scheme.grid, &sub(&ls.to_vec(), &stokes_f));
    Ok(Blocks {
        surface: sub(&solver.apply_surface(&ds), &sub(&fz.surface, &fs.surface)),
        bulk: sub(&lb, &sub(&fz.bulk, &fs.bulk)),
        stokes,
    })
}

fn sup<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// One backward-Euler step by fixed-point iteration. The iterate is updated
/// block by block in the order surface, bulk, Stokes.
pub fn fixed_point_step<T: Real>(scheme: &Scheme<T>, z_old: &FlowState<T>, controls: &Controls<T>) -> Result<StepReport<T>> {
    let grid = &scheme.grid;
    let nt = grid.n_theta();
    let no = grid.outer.len();
    let origin = scheme.origin(z_old)?;
    let frozen = FrozenCoefficients::from_state(grid, &scheme.model, z_old);
    let solver = LinearSolver::new(grid, &scheme.model, scheme.dt, frozen)?;
    let mut z = z_old.clone();
    z.t = z_old.t + scheme.dt;
    let mut increments: Vec<T> = Vec::new();
    let mut ratios = Vec::new();
    for k in 1..=controls.k_max {
        let frame = scheme.frame(&z.gamma)?;

        let (_, q) = scheme.bulk_residual(&z, &origin, &frame);
        let fs = scheme.surface_residual(&z, &origin, &frame, &q);
        let ds = solver.solve_surface(&fs);
        z.c_sigma = SurfaceField::new(sub(z.c_sigma.values(), &ds));

        let (fb, _) = scheme.bulk_residual(&z, &origin, &frame);
        let d0: Vec<T> = (0..nt).map(|a| fb[a] / solver.frozen.alpha_prime[a]).collect();
        let dc = solver.solve_bulk(&fb, &d0);
        z.c.outer[0] = sub(&z.c.outer[0], &dc);

        let mut fst = scheme.stokes_residual(&z, &origin, &frame)?;
        // the pressure level is fixed: drop the mean of the dependent row
        let row = (no - 2) * nt;
        let m = fst.outer[2][row..row + nt].iter().copied().sum::<T>() / T::of_usize(nt);
        fst.outer[2][row..row + nt].iter_mut().for_each(|v| *v -= m);
        let mut dst = solver.solve_stokes(&fst);
        dst.inner.iter_mut().chain(dst.outer.iter_mut()).chain(std::iter::once(&mut dst.gamma)).for_each(|v| {
            v.iter_mut().for_each(|x| *x = -*x)
        });
        let mut gam = z.gamma.values().to_vec();
        dst.apply(&mut z.u, &mut z.p, &mut gam);
        z.gamma = HeightFunction::new(SurfaceField::new(gam));

        let inc = sup(&ds).max(sup(&dc)).max(dst.sup_norm());
        if !inc.is_finite() {
            return Err(FlowError::NoConvergence { iterations: k, increment: f64::INFINITY });
        }
        if let Some(&prev) = increments.last() {
            if prev > T::zero() {
                ratios.push(inc / prev);
            }
        }
        increments.push(inc);
        if inc <= controls.tol {
            scheme.frame(&z.gamma)?;
            return Ok(StepReport { state: z, iterations: k, increments, ratios });
        }
    }
    Err(FlowError::NoConvergence { iterations: controls.k_max, increment: increments.last().map_or(f64::NAN, |v| v.as_f64()) })
}

/// [`fixed_point_step`], retried as two half steps (recursively, at most
/// `halvings` times) when the iteration fails to converge.
pub fn step_with_halving<T: Real>(
    scheme: &Scheme<T>,
    z_old: &FlowState<T>,
    controls: &Controls<T>,
    halvings: usize,
) -> Result<StepReport<T>> {
    match fixed_point_step(scheme, z_old, controls) {
        Err(FlowError::NoConvergence { .. }) if halvings > 0 => {
            let half = Scheme { dt: scheme.dt * T::lit(0.5), ..scheme.clone() };
            let a = step_with_halving(&half, z_old, controls, halvings - 1)?;
            let mut b = step_with_halving(&half, &a.state, controls, halvings - 1)?;
            b.iterations += a.iterations;
            b.increments.splice(0..0, a.increments);
            b.ratios.splice(0..0, a.ratios);
            Ok(b)
        }
        r => r,
    }
}

/// Why a run stopped.
#[derive(Clone, Debug, PartialEq)]
pub enum HaltReason {
    ReachedEnd,
    /// The interface left the admissible tube around Σ.
    NeedsReReference { ratio: f64, mean_gamma: f64 },
    FixedPointFailure(String),
}

impl std::fmt::Display for HaltReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::ReachedEnd => write!(f, "reached-end"),
            Self::NeedsReReference { ratio, mean_gamma } => {
                write!(f, "needs-re-reference (|γ|/(ε/4) = {ratio:.4}, mean γ = {mean_gamma:.3e})")
            }
            Self::FixedPointFailure(m) => write!(f, "fixed-point-failure: {m}"),
        }
    }
}

/// Result of [`run_semiflow`]: the last accepted state and per-step reports.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub last: FlowState<T>,
    pub steps: usize,
    pub halt: HaltReason,
    /// Worst contraction ratio per accepted step (`None`: one iteration).
    pub contraction: Vec<Option<T>>,
    pub iterations: Vec<usize>,
}

/// Advances `z0` to `t_end` in steps of the scheme's `Δt`, calling `observe`
/// after every accepted step.
pub fn run_semiflow<T: Real>(
    scheme: &Scheme<T>,
    z0: &FlowState<T>,
    t_end: T,
    controls: &Controls<T>,
    mut observe: impl FnMut(&FlowState<T>, &StepReport<T>),
) -> Trajectory<T> {
    let n_steps = ((t_end - z0.t) / scheme.dt).round().to_usize().unwrap_or(0);
    let bound = scheme.hanzawa.height_bound();
    let mut z = z0.clone();
    let mut traj = Trajectory { last: z0.clone(), steps: 0, halt: HaltReason::ReachedEnd, contraction: Vec::new(), iterations: Vec::new() };
    let rereference = |g: &HeightFunction<T>| HaltReason::NeedsReReference {
        ratio: (g.sup_norm() / bound).as_f64(),
        mean_gamma: g.gamma.mean().as_f64(),
    };
    for _ in 0..n_steps {
        match step_with_halving(scheme, &z, controls, controls.halvings) {
            Ok(rep) => {
                if rep.state.gamma.sup_norm() >= controls.rereference_fraction * bound {
                    traj.halt = rereference(&rep.state.gamma);
                    break;
                }
                if let Err(e) = rep.state.check_positive() {
                    traj.halt = HaltReason::FixedPointFailure(e.to_string());
                    break;
                }
                observe(&rep.state, &rep);
                traj.contraction.push(rep.contraction());
                traj.iterations.push(rep.iterations);
                traj.steps += 1;
                z = rep.state;
            }
            Err(FlowError::InvalidHeight(_)) => {
                traj.halt = rereference(&z.gamma);
                break;
            }
            Err(e) => {
                traj.halt = HaltReason::FixedPointFailure(e.to_string());
                break;
            }
        }
    }
    traj.last = z;
    traj
}

/// Discrete phase-manifold conditions of an initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct CompatibilityReport {
    pub divergence: f64,
    pub velocity_jump: f64,
    pub wall_trace: f64,
    pub tangential_stress: f64,
    pub tolerance: f64,
}

impl CompatibilityReport {
    pub fn passed(&self) -> bool {
        [self.divergence, self.velocity_jump, self.wall_trace, self.tangential_stress]
            .iter()
            .all(|&v| v <= self.tolerance)
    }
}

/// Evaluates `div u = 0`, `[[u]] = 0`, `u = 0` on the wall and the
/// tangential stress balance with the Marangoni force of `α([c]_Σ)`.
pub fn check_compatibility<T: Real>(scheme: &Scheme<T>, z0: &FlowState<T>) -> Result<CompatibilityReport> {
    let grid = &scheme.grid;
    let nt = grid.n_theta();
    let (ni, no) = (grid.inner.len(), grid.outer.len());
    let mut z = z0.clone();
    // tangential stress against σ(α([c]_Σ))
    let trace: Vec<T> = z0.c.outer[0][..nt].iter().map(|&c| scheme.model.isotherm.alpha(c)).collect();
    z.c_sigma = SurfaceField::new(trace);
    let origin = scheme.origin(&z)?;
    let frame = scheme.frame(&z.gamma)?;
    let r = scheme.stokes_residual(&z, &origin, &frame)?;
    let mean0 = r.inner[0][..nt].iter().copied().sum::<T>() / T::of_usize(nt);
    let mut div = mean0.abs().max(sup(&r.inner[0][nt..]));
    div = div.max(sup(&r.outer[2][..(no - 1) * nt]));
    let li = (ni - 1) * nt;
    let jump = sup(&r.inner[1][li..]).max(sup(&r.inner[2][li..]));
    let w = (no - 1) * nt;
    let wall = sup(&r.outer[0][w..]).max(sup(&r.outer[1][w..]));
    let tang = sup(&r.outer[0][..nt]);
    Ok(CompatibilityReport {
        divergence: div.as_f64(),
        velocity_jump: jump.as_f64(),
        wall_trace: wall.as_f64(),
        tangential_stress: tang.as_f64(),
        tolerance: 1e-8,
    })
}

/// Pressure recovered from a fixed velocity, interface and surface
/// concentration by least squares on the momentum and normal-stress rows,
/// with the level matched to `z.p` on the last exterior cell ring.
#[derive(Clone, Debug)]
pub struct PressureReconstruction<T: Real> {
    pub p: BulkField<T>,
    /// Sup-norm distance to the solver's pressure.
    pub deviation: T,
    /// Sup-norm of the least-squares residual.
    pub residual: T,
}

pub fn reconstruct_pressure<T: Real>(scheme: &Scheme<T>, z: &FlowState<T>, origin: &StepOrigin<T>) -> Result<PressureReconstruction<T>> {
    let grid = &scheme.grid;
    let nt = grid.n_theta();
    let (ni, no) = (grid.inner.len(), grid.outer.len());
    let frame: Frame<T> = scheme.frame(&z.gamma)?;
    let n_in = ni * nt;
    let n_p = n_in + (no - 1) * nt;
    let rows_of = |zz: &FlowState<T>| -> Result<Vec<f64>> {
        let r = scheme.stokes_residual(zz, origin, &frame)?;
        let mut v = Vec::new();
        v.extend(r.inner[1][..(ni - 1) * nt].iter().map(|x| x.as_f64()));
        v.extend(r.inner[2][..(ni - 1) * nt].iter().map(|x| x.as_f64()));
        v.extend(r.outer[0][nt..(no - 1) * nt].iter().map(|x| x.as_f64()));
        v.extend(r.outer[1][nt..(no - 1) * nt].iter().map(|x| x.as_f64()));
        v.extend(r.outer[1][..nt].iter().map(|x| x.as_f64()));
        // disk oscillation rows carry p_0 − mean p_0
        v.extend(r.inner[0][..nt].iter().map(|x| x.as_f64()));
        Ok(v)
    };
    let mut base = z.clone();
    base.p = z.p.map(|_| T::zero());
    let b0 = rows_of(&base)?;
    let mut disk_mean_rows = b0.len() - nt..b0.len();
    // the disk rows also contain the mean flux, which does not depend on p
    let m = b0.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(m + nt, n_p);
    for col in 0..n_p {
        let mut zz = base.clone();
        if col < n_in {
            zz.p.inner[0][col] = T::one();
        } else {
            zz.p.outer[0][col - n_in] = T::one();
        }
        let bc = rows_of(&zz)?;
        for row in 0..m {
            a[(row, col)] = bc[row] - b0[row];
        }
    }
    // level: match the mean of the last exterior ring
    let ring = n_p - nt;
    let target: f64 = z.p.outer[0][(no - 2) * nt..].iter().map(|x| x.as_f64()).sum::<f64>() / nt as f64;
    for k in 0..nt {
        a[(m + k, ring + k)] = 1.0 / nt as f64;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(m + nt);
    for row in 0..m {
        rhs[row] = -b0[row];
    }
    for row in disk_mean_rows.by_ref() {
        rhs[row] = 0.0;
    }
    for k in 0..nt {
        rhs[m + k] = target / nt as f64;
    }
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &rhs;
    let x = ata.lu().solve(&atb).ok_or_else(|| FlowError::Solve("pressure reconstruction is singular".into()))?;
    let res = (&a * &x - &rhs).amax();
    let mut p = z.p.map(|_| T::zero());
    for col in 0..n_p {
        let v = T::lit(x[col]);
        if col < n_in {
            p.inner[0][col] = v;
        } else {
            p.outer[0][col - n_in] = v;
        }
    }
    let deviation = p.max_diff(&z.p);
    Ok(PressureReconstruction { p, deviation, residual: T::lit(res) })
}

/// Material and scheme consistency of a state: convenience for callers that
/// only hold a model.
pub fn validate_state<T: Real>(model: &MaterialModel<T>, z: &FlowState<T>) -> Result<()> {
    z.check_positive()?;
    for &s in z.c_sigma.values() {
        model.chemical_potential(s)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{EquationOfState, Isotherm};
    use crate::discrete::{drop_area, surfactant_mass};
    use crate::geometry::ReferenceGeometry;

    fn model() -> MaterialModel<f64> {
        MaterialModel {
            rho_minus: 1.0,
            rho_plus: 1.0,
            eta_minus: 1.0,
            eta_plus: 0.5,
            d: 0.2,
            d_gamma: 0.1,
            eos: EquationOfState::Szyszkowski { sigma0: 1.0, e: 0.3, s_inf: 2.0 },
            isotherm: Isotherm::Langmuir { s_inf: 2.0, k: 1.5 },
            s_ref: 0.5,
        }
    }

    fn scheme() -> Scheme<f64> {
        let grid = ReferenceGeometry::new(2.0, 1.0, 16, 12, 14, 0.9).unwrap().grid(2);
        Scheme::new(grid, model(), 0.05).unwrap()
    }

    fn ellipse(s: &Scheme<f64>) -> FlowState<f64> {
        let mut z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
        let th = s.grid.fourier.nodes().to_vec();
        z.gamma = HeightFunction::from_fn(&th, |t| 0.05 * (2.0 * t).cos());
        z
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let s = scheme();
        let z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
        let rep = fixed_point_step(&s, &z, &Controls::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.state.max_diff(&z) < 1e-10);
    }

    #[test]
    fn nonlinearity_vanishes_at_the_reference() {
        let s = scheme();
        let z = ellipse(&s);
        let o = s.origin(&z).unwrap();
        let solver = LinearSolver::new(&s.grid, &s.model, s.dt, FrozenCoefficients::from_state(&s.grid, &s.model, &z)).unwrap();
        let n = assemble_nonlinearities(&s, &solver, &z, &z, &o).unwrap();
        assert!(n.sup_norm() < 1e-14);
    }

    #[test]
    fn ellipse_step_contracts_and_conserves() {
        let s = scheme();
        let z = ellipse(&s);
        let rep = fixed_point_step(&s, &z, &Controls { tol: 1e-13, k_max: 40, ..Controls::default() }).unwrap();
        let r = rep.contraction().unwrap();
        assert!(r < 1.0, "ratio {r} increments {:?}", rep.increments);
        let (f0, f1) = (s.frame(&z.gamma).unwrap(), s.frame(&rep.state.gamma).unwrap());
        let (m0, m1) = (surfactant_mass(&s, &z, &f0), surfactant_mass(&s, &rep.state, &f1));
        assert!((m1 - m0).abs() < 1e-10 * m0, "{m0} {m1}");
        let a0 = drop_area(1.0, &z.gamma.gamma);
        let a1 = drop_area(1.0, &rep.state.gamma.gamma);
        assert!((a1 - a0).abs() < 1e-10, "{a0} {a1}");
        let f = residual(&s, &rep.state, &s.origin(&z).unwrap()).unwrap().resolved(&s.grid);
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let st = &f.stokes;
        let nt = 16;
        let locate = |v: &[f64]| v.iter().enumerate().fold((0, 0.0f64), |m, (i, x)| if x.abs() > m.1 { (i, x.abs()) } else { m });
        assert!(
            f.sup_norm() < 1e-8,
            "{:?} surf {} bulk {} in {:?} g {} out {:?} nt {nt}", rep.increments,
            sup(&f.surface),
            sup(&f.bulk),
            st.inner.iter().map(|v| locate(v)).collect::<Vec<_>>(),
            sup(&st.gamma),
            st.outer.iter().map(|v| locate(v)).collect::<Vec<_>>()
        );
    }
}

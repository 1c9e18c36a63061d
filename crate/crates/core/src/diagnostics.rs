//! Energy, dissipation, conserved quantities and equilibrium indicators.
//!
//! Integrals are taken over the physical domain with the reference grid as
//! quadrature: a node with reference weight `∫ r dr` carries the physical
//! weight `ρ ρ_r / r` times it.

use crate::discrete::{drop_area, surfactant_mass, Frame, Scheme};
use crate::error::Result;
use crate::transformed_ops::{physical_first, physical_velocity_gradient, theta_rows, Derivs};
use crate::radial::Parity;
use crate::scalar::Real;
use crate::state::FlowState;

/// One row of the diagnostics log. Field order is the CSV column order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub kinetic: f64,
    pub free_bulk: f64,
    pub free_surface: f64,
    /// `Φ`, written as the `Phi` column.
    pub phi: f64,
    pub dissipation: f64,
    pub energy_residual: f64,
    pub surfactant_mass: f64,
    pub drop_area: f64,
    pub u_max: f64,
    pub circle_deviation: f64,
    pub c_osc: f64,
    pub c_sigma_osc: f64,
}

impl DiagnosticRecord {
    pub const COLUMNS: [&'static str; 13] = [
        "t",
        "kinetic",
        "free_bulk",
        "free_surface",
        "Phi",
        "dissipation",
        "energy_residual",
        "surfactant_mass",
        "drop_area",
        "u_max",
        "circle_deviation",
        "c_osc",
        "c_sigma_osc",
    ];

    pub fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.kinetic,
            self.free_bulk,
            self.free_surface,
            self.phi,
            self.dissipation,
            self.energy_residual,
            self.surfactant_mass,
            self.drop_area,
            self.u_max,
            self.circle_deviation,
            self.c_osc,
            self.c_sigma_osc,
        ]
    }
}

/// Energy split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Energy<T> {
    pub kinetic: T,
    pub free_bulk: T,
    pub free_surface: T,
    pub phi: T,
}

fn dtheta<T: Real>(scheme: &Scheme<T>) -> T {
    T::TAU() / T::of_usize(scheme.grid.n_theta())
}

/// Physical node weights (without `dθ`) of the inner and outer velocity
/// nodes.
fn node_weights<T: Real>(scheme: &Scheme<T>, frame: &Frame<T>) -> [Vec<T>; 2] {
    let nt = scheme.grid.n_theta();
    let blocks = [(&scheme.grid.inner, &frame.inner), (&scheme.grid.outer, &frame.outer)];
    blocks.map(|(blk, jets)| {
        let w = blk.area_weights();
        (0..blk.len() * nt)
            .map(|q| {
                let j = &jets[q];
                w[q / nt] * j.rho * j.rho_r / blk.r[q / nt]
            })
            .collect()
    })
}

/// `½∫ρ|u|²`, `∫_{Ω+} φ(c)`, `∮_Γ φ_Γ(c_Σ)` and their sum.
pub fn energy<T: Real>(scheme: &Scheme<T>, z: &FlowState<T>) -> Result<Energy<T>> {
    let frame = scheme.frame(&z.gamma)?;
    let model = &scheme.model;
    let dth = dtheta(scheme);
    let [wi, wo] = node_weights(scheme, &frame);
    let ke = |w: &[T], u: &[Vec<T>], dens: T| -> T {
        w.iter().enumerate().map(|(q, &w)| w * (u[0][q] * u[0][q] + u[1][q] * u[1][q])).sum::<T>() * dens
    };
    let kinetic = (ke(&wi, &z.u.inner, model.rho_minus) + ke(&wo, &z.u.outer, model.rho_plus)) * T::lit(0.5) * dth;
    let (vol, _) = scheme.bulk_volumes(&frame);
    let mut free_bulk = T::zero();
    for (&v, &c) in vol.iter().zip(&z.c.outer[0]) {
        free_bulk += v * model.phi(c)?;
    }
    free_bulk *= dth;
    let mut free_surface = T::zero();
    for (&l, &s) in frame.iface.ell.iter().zip(z.c_sigma.values()) {
        free_surface += l * model.phi_gamma(s)?;
    }
    free_surface *= dth;
    Ok(Energy { kinetic, free_bulk, free_surface, phi: kinetic + free_bulk + free_surface })
}

/// `2∫η|D|² + d∫φ''(c)|∇c|² + d_Γ∮φ_Γ''(c_Σ)|∇_Γc_Σ|²`.
pub fn dissipation<T: Real>(scheme: &Scheme<T>, z: &FlowState<T>) -> Result<T> {
    let frame = scheme.frame(&z.gamma)?;
    let g = &scheme.grid;
    let model = &scheme.model;
    let nt = g.n_theta();
    let f = &g.fourier;
    let dth = dtheta(scheme);
    let [wi, wo] = node_weights(scheme, &frame);
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let viscous = |blk, jets: &[crate::hanzawa::RadialMapJet<T>], u: &[Vec<T>], w: &[T], eta: T| -> T {
        let d = [Derivs::new(blk, f, &u[0], Parity::Odd), Derivs::new(blk, f, &u[1], Parity::Odd)];
        let mut s = T::zero();
        for q in 0..w.len() {
            let gu = physical_velocity_gradient(&jets[q], [d[0].f[q], d[1].f[q]], [d[0].r[q], d[1].r[q]], [d[0].t[q], d[1].t[q]]);
            let off = (gu[0][1] + gu[1][0]) * half;
            s += w[q] * (gu[0][0] * gu[0][0] + two * off * off + gu[1][1] * gu[1][1]);
        }
        two * eta * s
    };
    let mut total = viscous(&g.inner, &frame.inner, &z.u.inner, &wi, model.eta_minus)
        + viscous(&g.outer, &frame.outer, &z.u.outer, &wo, model.eta_plus);

    let c = &z.c.outer[0];
    let c_r = g.outer.derivative(c, nt, 1, Parity::Even);
    let c_t = theta_rows(f, c, 1);
    let (vol, _) = scheme.bulk_volumes(&frame);
    let mut bulk = T::zero();
    for q in 0..c.len() {
        let j = &frame.outer[q];
        let (gp, ga) = physical_first(j, c_r[q], c_t[q]);
        let ga = ga / j.rho;
        bulk += vol[q] * model.phi_d2(c[q])? * (gp * gp + ga * ga);
    }
    total += model.d * bulk;

    let s = z.c_sigma.values();
    let s_t = f.derivative(s, 1);
    let mut surf = T::zero();
    for a in 0..nt {
        let l = frame.iface.ell[a];
        surf += model.phi_gamma_d2(s[a])? * s_t[a] * s_t[a] / l;
    }
    total += model.d_gamma * surf;
    Ok(total * dth)
}

/// Discrete energy balance between two records `Δt` apart: the rate of
/// change of `Φ` plus the trapezoidal mean of the dissipation.
pub fn energy_residual(prev: &DiagnosticRecord, cur: &DiagnosticRecord) -> f64 {
    let dt = cur.t - prev.t;
    (cur.phi - prev.phi) / dt + 0.5 * (prev.dissipation + cur.dissipation)
}

/// Total surfactant and drop area.
pub fn conserved_quantities<T: Real>(scheme: &Scheme<T>, z: &FlowState<T>) -> Result<(T, T)> {
    let frame = scheme.frame(&z.gamma)?;
    Ok((surfactant_mass(scheme, z, &frame), drop_area(scheme.grid.geom.r_sigma, &z.gamma.gamma)))
}

/// Equilibrium indicators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumReport {
    pub u_max: f64,
    pub c_osc: f64,
    pub c_sigma_osc: f64,
    pub p_inner_osc: f64,
    pub p_outer_osc: f64,
    pub circle_deviation: f64,
    pub tol: f64,
}

impl EquilibriumReport {
    pub fn indicators(&self) -> [f64; 6] {
        [self.u_max, self.c_osc, self.c_sigma_osc, self.p_inner_osc, self.p_outer_osc, self.circle_deviation]
    }

    pub fn is_equilibrium(&self) -> bool {
        self.indicators().iter().all(|&v| v < self.tol)
    }
}

fn osc<T: Real>(v: &[T]) -> T {
    let (lo, hi) = v.iter().fold((T::infinity(), T::neg_infinity()), |(a, b), &x| (a.min(x), b.max(x)));
    hi - lo
}

/// Least-squares circle through the interface nodes (algebraic fit of
/// `x² + y² + Dx + Ey + F = 0`). Returns centre, radius and the largest
/// distance of a node from the fitted circle.
pub fn best_fit_circle<T: Real>(r_sigma: T, gamma: &[T]) -> ([f64; 2], f64, f64) {
    let n = gamma.len();
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|a| {
            let th = std::f64::consts::TAU * a as f64 / n as f64;
            let r = (r_sigma + gamma[a]).as_f64();
            [r * th.cos(), r * th.sin()]
        })
        .collect();
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for p in &pts {
        let row = nalgebra::Vector3::new(p[0], p[1], 1.0);
        ata += row * row.transpose();
        atb += row * -(p[0] * p[0] + p[1] * p[1]);
    }
    let x = ata.lu().solve(&atb).unwrap_or_else(nalgebra::Vector3::zeros);
    let centre = [-x[0] / 2.0, -x[1] / 2.0];
    let radius = (centre[0] * centre[0] + centre[1] * centre[1] - x[2]).max(0.0).sqrt();
    let dev = pts
        .iter()
        .map(|p| ((p[0] - centre[0]).hypot(p[1] - centre[1]) - radius).abs())
        .fold(0.0, f64::max);
    (centre, radius, dev)
}

/// Equilibrium indicators of `z`. The wall level has no pressure cell and is
/// left out of the exterior pressure oscillation.
pub fn equilibrium_check<T: Real>(scheme: &Scheme<T>, z: &FlowState<T>, tol: f64) -> EquilibriumReport {
    let nt = scheme.grid.n_theta();
    let no = scheme.grid.outer.len();
    let (_, _, dev) = best_fit_circle(scheme.grid.geom.r_sigma, z.gamma.values());
    EquilibriumReport {
        u_max: z.u.sup_norm().as_f64(),
        c_osc: osc(&z.c.outer[0]).as_f64(),
        c_sigma_osc: z.c_sigma.oscillation().as_f64(),
        p_inner_osc: osc(&z.p.inner[0]).as_f64(),
        p_outer_osc: osc(&z.p.outer[0][..(no - 1) * nt]).as_f64(),
        circle_deviation: dev,
        tol,
    }
}

/// Diagnostic row of `z`; the energy residual needs the previous row.
pub fn record<T: Real>(scheme: &Scheme<T>, z: &FlowState<T>, prev: Option<&DiagnosticRecord>) -> Result<DiagnosticRecord> {
    let e = energy(scheme, z)?;
    let (mass, area) = conserved_quantities(scheme, z)?;
    let eq = equilibrium_check(scheme, z, 0.0);
    let mut rec = DiagnosticRecord {
        t: z.t.as_f64(),
        kinetic: e.kinetic.as_f64(),
        free_bulk: e.free_bulk.as_f64(),
        free_surface: e.free_surface.as_f64(),
        phi: e.phi.as_f64(),
        dissipation: dissipation(scheme, z)?.as_f64(),
        energy_residual: 0.0,
        surfactant_mass: mass.as_f64(),
        drop_area: area.as_f64(),
        u_max: eq.u_max,
        circle_deviation: eq.circle_deviation,
        c_osc: eq.c_osc,
        c_sigma_osc: eq.c_sigma_osc,
    };
    if let Some(p) = prev {
        rec.energy_residual = energy_residual(p, &rec);
    }
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{EquationOfState, Isotherm, MaterialModel};
    use crate::geometry::{ReferenceGeometry, SurfaceField};
    use crate::hanzawa::HeightFunction;

    fn scheme() -> Scheme<f64> {
        let model = MaterialModel {
            rho_minus: 1.0,
            rho_plus: 2.0,
            eta_minus: 1.0,
            eta_plus: 0.5,
            d: 0.2,
            d_gamma: 0.1,
            eos: EquationOfState::Szyszkowski { sigma0: 1.0, e: 0.3, s_inf: 2.0 },
            isotherm: Isotherm::Langmuir { s_inf: 2.0, k: 1.5 },
            s_ref: 0.5,
        };
        let grid = ReferenceGeometry::new(2.0, 1.0, 32, 16, 20, 0.9).unwrap().grid(2);
        Scheme::new(grid, model, 0.05).unwrap()
    }

    #[test]
    fn equilibrium_energy_has_closed_form() {
        let s = scheme();
        let z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
        let e = energy(&s, &z).unwrap();
        let area = std::f64::consts::PI * (4.0 - 1.0);
        let want = area * s.model.phi(0.4).unwrap() + std::f64::consts::TAU * s.model.phi_gamma(z.c_sigma.values()[0]).unwrap();
        assert_eq!(e.kinetic, 0.0);
        assert!((e.phi - want).abs() < 1e-12 * want.abs().max(1.0), "{} {want}", e.phi);
        assert!(dissipation(&s, &z).unwrap().abs() < 1e-14);
        let (_, a) = conserved_quantities(&s, &z).unwrap();
        assert!((a - std::f64::consts::PI).abs() < 1e-14);
        assert!(equilibrium_check(&s, &z, 1e-12).is_equilibrium());
    }

    #[test]
    fn rigid_rotation_does_not_dissipate() {
        let s = scheme();
        let mut z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
        let (ri, ro) = crate::field::BulkField::radii(&s.grid, z.u.location);
        let nt = 32;
        for q in 0..z.u.inner[1].len() {
            z.u.inner[1][q] = 0.3 * ri[q / nt];
        }
        for q in 0..z.u.outer[1].len() {
            z.u.outer[1][q] = 0.3 * ro[q / nt];
        }
        let d = dissipation(&s, &z).unwrap();
        assert!(d.abs() < 1e-10, "{d}");
        let e = energy(&s, &z).unwrap();
        // ½ ∫ ρ ω² r² over the drop and the annulus
        let want = 0.5 * 0.09 * std::f64::consts::PI / 2.0 * (1.0 + 2.0 * (16.0 - 1.0));
        assert!((e.kinetic - want).abs() < 1e-2 * want, "{} {want}", e.kinetic);
        assert!(!equilibrium_check(&s, &z, 1e-5).is_equilibrium());
    }

    #[test]
    fn perturbed_interface_has_more_surface_energy() {
        let s = scheme();
        let z0 = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
        let mut z1 = z0.clone();
        let th = s.grid.fourier.nodes();
        z1.gamma = HeightFunction::from_fn(&th, |t| 0.05 * (2.0 * t).cos());
        let (e0, e1) = (energy(&s, &z0).unwrap(), energy(&s, &z1).unwrap());
        assert!(e1.free_surface > e0.free_surface);
    }

    #[test]
    fn translated_circle_fits_exactly() {
        let n = 64;
        let x0 = 0.05;
        let g: Vec<f64> = (0..n)
            .map(|a| {
                let t = std::f64::consts::TAU * a as f64 / n as f64;
                x0 * t.cos() + (1.0 - x0 * x0 * t.sin() * t.sin()).sqrt() - 1.0
            })
            .collect();
        let (c, r, dev) = best_fit_circle(1.0, &g);
        assert!((c[0] - x0).abs() < 1e-12 && c[1].abs() < 1e-12 && (r - 1.0).abs() < 1e-12 && dev < 1e-12);
        let e = best_fit_circle(1.0, SurfaceField::from_fn(&(0..n).map(|a| a as f64 * std::f64::consts::TAU / n as f64).collect::<Vec<_>>(), |t| 0.01 * (2.0 * t).cos()).values());
        assert!(e.2 > 5e-3);
    }
}

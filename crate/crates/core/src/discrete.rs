//! Fully nonlinear backward-Euler residual of the transformed system.
//!
//! The residual is written in physical variables through the radial map
//! `ρ(r, θ)`, so that the Hanzawa chain rule is applied pointwise. Mass,
//! drop area and surfactant balances are discretized in flux form, which
//! makes the converged step conserve them exactly.
//!
//! Row layouts mirror the unknowns level by level:
//! inner level `i` holds `(p_i, u_r, u_θ)` with rows (continuity, momentum r,
//! momentum θ); the last inner level sits on Σ and carries the velocity
//! transmission rows. Outer level `j` holds `(u_r, u_θ, p_j)`; its first
//! level carries the tangential and normal stress rows and the wall level
//! the no-slip rows.

use crate::constitutive::MaterialModel;
use crate::error::{FlowError, Result};
use crate::field::BulkField;
use crate::geometry::{PolarGrid, SurfaceField};
use crate::hanzawa::{Hanzawa, HeightFunction, RadialMapJet};
use crate::transformed_ops::{kappa_gamma, physical_first, physical_laplacian, physical_velocity_gradient, theta_rows, Derivs, InterfaceData};
use crate::radial::Parity;
use crate::scalar::Real;
use crate::state::FlowState;

/// Radial-map jets of one height function on nodes and bulk faces.
#[derive(Clone, Debug)]
pub struct Frame<T: Real> {
    pub iface: InterfaceData<T>,
    pub inner: Vec<RadialMapJet<T>>,
    pub outer: Vec<RadialMapJet<T>>,
    /// Outer faces between consecutive nodes, `(n_out − 1) × n_theta`.
    pub faces: Vec<RadialMapJet<T>>,
}

impl<T: Real> Frame<T> {
    pub fn new(grid: &PolarGrid<T>, hanzawa: &Hanzawa<T>, gamma: &HeightFunction<T>) -> Result<Self> {
        let rep = hanzawa.check_diffeo(gamma);
        if !rep.valid {
            return Err(FlowError::InvalidHeight(format!(
                "‖γ‖/ε = {:.4}, min θ' = {:.4}, min det = {:.4}",
                rep.ratio.as_f64(),
                rep.min_theta_prime.as_f64(),
                rep.min_det.as_f64()
            )));
        }
        let iface = InterfaceData::new(grid.geom.r_sigma, &grid.fourier, &gamma.gamma);
        let jets = |radii: &[T]| {
            let mut v = Vec::with_capacity(radii.len() * iface.gamma.len());
            for &r in radii {
                for j in 0..iface.gamma.len() {
                    v.push(hanzawa.jet(r, iface.gamma[j], iface.gamma_t[j], iface.gamma_tt[j]));
                }
            }
            v
        };
        let face_r: Vec<T> = grid.outer.r.windows(2).map(|w| (w[0] + w[1]) * T::lit(0.5)).collect();
        Ok(Self {
            inner: jets(&grid.inner.r),
            outer: jets(&grid.outer.r),
            faces: jets(&face_r),
            iface,
        })
    }
}

/// Stokes-block rows (or unknowns) in the level layout described above.
/// Every component array has one row of `n_theta` values per level; unused
/// slots (pressure on the wall level) stay zero.
#[derive(Clone, Debug, PartialEq)]
pub struct StokesRows<T> {
    pub inner: [Vec<T>; 3],
    pub gamma: Vec<T>,
    pub outer: [Vec<T>; 3],
}

impl<T: Real> StokesRows<T> {
    pub fn zeros(grid: &PolarGrid<T>) -> Self {
        let nt = grid.n_theta();
        let (ni, no) = (grid.inner.len(), grid.outer.len());
        Self {
            inner: std::array::from_fn(|_| vec![T::zero(); ni * nt]),
            gamma: vec![T::zero(); nt],
            outer: std::array::from_fn(|_| vec![T::zero(); no * nt]),
        }
    }

    /// Packs `(u, p, γ)` into the unknown layout.
    pub fn pack(u: &BulkField<T>, p: &BulkField<T>, gamma: &[T]) -> Self {
        let nt = u.n_theta;
        let mut outer_p = p.outer[0].clone();
        outer_p.extend(std::iter::repeat_n(T::zero(), nt));
        Self {
            inner: [p.inner[0].clone(), u.inner[0].clone(), u.inner[1].clone()],
            gamma: gamma.to_vec(),
            outer: [u.outer[0].clone(), u.outer[1].clone(), outer_p],
        }
    }

    /// Adds an increment in unknown layout to `(u, p, γ)`.
    pub fn apply(&self, u: &mut BulkField<T>, p: &mut BulkField<T>, gamma: &mut [T]) {
        let add = |dst: &mut [T], src: &[T]| dst.iter_mut().zip(src).for_each(|(a, &b)| *a += b);
        add(&mut p.inner[0], &self.inner[0]);
        add(&mut u.inner[0], &self.inner[1]);
        add(&mut u.inner[1], &self.inner[2]);
        add(&mut u.outer[0], &self.outer[0]);
        add(&mut u.outer[1], &self.outer[1]);
        let np = p.outer[0].len();
        add(&mut p.outer[0], &self.outer[2][..np]);
        add(gamma, &self.gamma);
    }

    /// All slots concatenated: inner components, γ, outer components.
    pub fn to_vec(&self) -> Vec<T> {
        let mut v: Vec<T> = self.inner.concat();
        v.extend_from_slice(&self.gamma);
        v.extend(self.outer.concat());
        v
    }

    pub fn from_vec(grid: &PolarGrid<T>, v: &[T]) -> Self {
        let mut out = Self::zeros(grid);
        let mut at = 0;
        for c in 0..3 {
            let n = out.inner[c].len();
            out.inner[c].copy_from_slice(&v[at..at + n]);
            at += n;
        }
        let n = out.gamma.len();
        out.gamma.copy_from_slice(&v[at..at + n]);
        at += n;
        for c in 0..3 {
            let n = out.outer[c].len();
            out.outer[c].copy_from_slice(&v[at..at + n]);
            at += n;
        }
        out
    }

    pub fn sup_norm(&self) -> T {
        self.inner
            .iter()
            .chain(self.outer.iter())
            .chain(std::iter::once(&self.gamma))
            .flat_map(|v| v.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// The previous accepted state with its geometry.
#[derive(Clone, Debug)]
pub struct StepOrigin<T: Real> {
    pub state: FlowState<T>,
    pub frame: Frame<T>,
}

/// Spatial discretization plus time step.
#[derive(Clone, Debug)]
pub struct Scheme<T: Real> {
    pub grid: PolarGrid<T>,
    pub model: MaterialModel<T>,
    pub hanzawa: Hanzawa<T>,
    pub dt: T,
}

#[inline]
fn avg<T: Real>(a: T, b: T) -> T {
    (a + b) * T::lit(0.5)
}

impl<T: Real> Scheme<T> {
    pub fn new(grid: PolarGrid<T>, model: MaterialModel<T>, dt: T) -> Result<Self> {
        grid.geom.validate()?;
        model.validate()?;
        if !(dt > T::zero()) {
            return Err(FlowError::Config(format!("time step must be positive, got {dt}")));
        }
        let hanzawa = Hanzawa::new(grid.geom.clone());
        Ok(Self { grid, model, hanzawa, dt })
    }

    pub fn frame(&self, gamma: &HeightFunction<T>) -> Result<Frame<T>> {
        Frame::new(&self.grid, &self.hanzawa, gamma)
    }

    pub fn origin(&self, state: &FlowState<T>) -> Result<StepOrigin<T>> {
        Ok(StepOrigin { frame: self.frame(&state.gamma)?, state: state.clone() })
    }

    fn nt(&self) -> usize {
        self.grid.n_theta()
    }

    /// Physical area of each exterior control volume per unit angle, and its
    /// reference radial width. Node volumes are half cells at Σ and the wall.
    pub fn bulk_volumes(&self, frame: &Frame<T>) -> (Vec<T>, Vec<T>) {
        let nt = self.nt();
        let m = self.grid.outer.len();
        let r = &self.grid.outer.r;
        let mut vol = vec![T::zero(); m * nt];
        let mut width = vec![T::zero(); m];
        let half = T::lit(0.5);
        for jr in 0..m {
            let ra = if jr == 0 { r[0] } else { avg(r[jr - 1], r[jr]) };
            let rb = if jr + 1 == m { r[m - 1] } else { avg(r[jr], r[jr + 1]) };
            width[jr] = rb - ra;
            for a in 0..nt {
                let pa = if jr == 0 { frame.iface.rho[a] } else { frame.faces[(jr - 1) * nt + a].rho };
                let pb = if jr + 1 == m { r[m - 1] } else { frame.faces[jr * nt + a].rho };
                vol[jr * nt + a] = (pb * pb - pa * pa) * half;
            }
        }
        (vol, width)
    }

    /// Radial and angular bulk fluxes in reference coordinates: radial on the
    /// faces, angular on the nodes.
    fn bulk_fluxes(&self, z: &FlowState<T>, origin: &StepOrigin<T>, frame: &Frame<T>) -> (Vec<T>, Vec<T>) {
        let nt = self.nt();
        let blk = &self.grid.outer;
        let m = blk.len();
        let f = &self.grid.fourier;
        let d = self.model.d;
        let c = &z.c.outer[0];
        let (ur, ut) = (&z.u.outer[0], &z.u.outer[1]);
        let h = blk.h;
        let mut cf = vec![T::zero(); (m - 1) * nt];
        for jr in 0..m - 1 {
            for a in 0..nt {
                cf[jr * nt + a] = avg(c[jr * nt + a], c[(jr + 1) * nt + a]);
            }
        }
        let cf_t = theta_rows(f, &cf, 1);
        let mut radial = vec![T::zero(); (m - 1) * nt];
        for jr in 0..m - 1 {
            for a in 0..nt {
                let q = jr * nt + a;
                let (lo, hi) = (jr * nt + a, (jr + 1) * nt + a);
                let jet = &frame.faces[q];
                let rho_old = origin.frame.faces[q].rho;
                let mesh = avg(jet.rho, rho_old) * (jet.rho - rho_old) / self.dt;
                let vr = avg(ur[lo], ur[hi]);
                let vt = avg(ut[lo], ut[hi]);
                let c_r = (c[hi] - c[lo]) / h;
                let adv = cf[q] * (jet.rho * vr - jet.rho_t * vt - mesh);
                let g = (jet.rho * jet.rho + jet.rho_t * jet.rho_t) / (jet.rho * jet.rho_r);
                radial[q] = adv - d * (g * c_r - jet.rho_t / jet.rho * cf_t[q]);
            }
        }
        let c_r = blk.derivative(c, nt, 1, Parity::Even);
        let c_t = theta_rows(f, c, 1);
        let mut angular = vec![T::zero(); m * nt];
        for q in 0..m * nt {
            let jet = &frame.outer[q];
            angular[q] = c[q] * jet.rho_r * ut[q] - d * ((jet.rho_r * c_t[q] - jet.rho_t * c_r[q]) / jet.rho);
        }
        (radial, angular)
    }

    /// Exterior balance rows. Row 0 is the adsorption condition `α(c) − c_Σ`
    /// on Σ; the returned `q` is the exchange flux into Σ per unit angle
    /// closing the half-cell balance next to it.
    pub fn bulk_residual(&self, z: &FlowState<T>, origin: &StepOrigin<T>, frame: &Frame<T>) -> (Vec<T>, Vec<T>) {
        let nt = self.nt();
        let m = self.grid.outer.len();
        let f = &self.grid.fourier;
        let (vol, width) = self.bulk_volumes(frame);
        let (vol_old, _) = self.bulk_volumes(&origin.frame);
        let (radial, angular) = self.bulk_fluxes(z, origin, frame);
        let ang_t = theta_rows(f, &angular, 1);
        let c = &z.c.outer[0];
        let c_old = &origin.state.c.outer[0];
        let mut res = vec![T::zero(); m * nt];
        let mut q_ex = vec![T::zero(); nt];
        for jr in 0..m {
            for a in 0..nt {
                let q = jr * nt + a;
                let store = (vol[q] * c[q] - vol_old[q] * c_old[q]) / self.dt;
                let out = if jr + 1 < m { radial[q] } else { T::zero() };
                let inn = if jr > 0 { radial[q - nt] } else { T::zero() };
                let bal = store + out - inn + width[jr] * ang_t[q];
                if jr == 0 {
                    q_ex[a] = -bal;
                    res[q] = self.model.isotherm.alpha(c[q]) - z.c_sigma.values()[a];
                } else {
                    res[q] = bal;
                }
            }
        }
        (res, q_ex)
    }

    /// Surface balance of `c_Σ` per unit reference length of Σ, given the
    /// exchange flux `q`.
    pub fn surface_residual(&self, z: &FlowState<T>, origin: &StepOrigin<T>, frame: &Frame<T>, q: &[T]) -> Vec<T> {
        let nt = self.nt();
        let f = &self.grid.fourier;
        let rs = self.grid.geom.r_sigma;
        let s = z.c_sigma.values();
        let s_old = origin.state.c_sigma.values();
        let d = &frame.iface;
        let ut = z.u.trace_inner(1);
        let s_t = f.derivative(s, 1);
        let flux: Vec<T> = (0..nt)
            .map(|a| d.ell[a] * s[a] * ut[a] / d.rho[a] - self.model.d_gamma * s_t[a] / d.ell[a])
            .collect();
        let flux_t = f.derivative(&flux, 1);
        (0..nt)
            .map(|a| {
                let store = (d.ell[a] * s[a] - origin.frame.iface.ell[a] * s_old[a]) / self.dt;
                (store + flux_t[a] - q[a]) / rs
            })
            .collect()
    }

    /// Momentum, continuity, interface and kinematic rows.
    pub fn stokes_residual(&self, z: &FlowState<T>, origin: &StepOrigin<T>, frame: &Frame<T>) -> Result<StokesRows<T>> {
        let g = &self.grid;
        let nt = self.nt();
        let f = &g.fourier;
        let (ni, no) = (g.inner.len(), g.outer.len());
        let rs = g.geom.r_sigma;
        let dt = self.dt;
        let model = &self.model;
        let mut out = StokesRows::zeros(g);

        let gam = z.gamma.values();
        let gam_old = origin.state.gamma.values();
        let dgam: Vec<T> = gam.iter().zip(gam_old).map(|(&a, &b)| (a - b) / dt).collect();

        // velocity derivatives per block
        let di = [
            Derivs::new(&g.inner, f, &z.u.inner[0], Parity::Odd),
            Derivs::new(&g.inner, f, &z.u.inner[1], Parity::Odd),
        ];
        let dout = [
            Derivs::new(&g.outer, f, &z.u.outer[0], Parity::Odd),
            Derivs::new(&g.outer, f, &z.u.outer[1], Parity::Odd),
        ];

        // pressure gradients at interior velocity nodes
        let pi = &z.p.inner[0];
        let po = &z.p.outer[0];
        let mut pn_i = vec![T::zero(); ni * nt];
        let mut pr_i = vec![T::zero(); ni * nt];
        for i in 0..ni - 1 {
            for a in 0..nt {
                let (lo, hi) = (pi[i * nt + a], pi[(i + 1) * nt + a]);
                pn_i[i * nt + a] = avg(lo, hi);
                pr_i[i * nt + a] = (hi - lo) / g.inner.h;
            }
        }
        let mut pn_o = vec![T::zero(); no * nt];
        let mut pr_o = vec![T::zero(); no * nt];
        for j in 1..no - 1 {
            for a in 0..nt {
                let (lo, hi) = (po[(j - 1) * nt + a], po[j * nt + a]);
                pn_o[j * nt + a] = avg(lo, hi);
                pr_o[j * nt + a] = (hi - lo) / g.outer.h;
            }
        }
        let pt_i = theta_rows(f, &pn_i, 1);
        let pt_o = theta_rows(f, &pn_o, 1);

        let momentum = |jet: &RadialMapJet<T>, d: &[Derivs<T>; 2], q: usize, uo: [T; 2], pr: T, pt: T, dg: T, inner: bool| {
            let u = [d[0].f[q], d[1].f[q]];
            let (ur_p, ur_a) = physical_first(jet, d[0].r[q], d[0].t[q]);
            let (ut_p, ut_a) = physical_first(jet, d[1].r[q], d[1].t[q]);
            let rho = jet.rho;
            let lap = |k: usize| physical_laplacian(jet, d[k].r[q], d[k].rr[q], d[k].t[q], d[k].tt[q], d[k].rt[q]);
            let vl = [
                lap(0) - u[0] / (rho * rho) - T::lit(2.0) * ut_a / (rho * rho),
                lap(1) - u[1] / (rho * rho) + T::lit(2.0) * ur_a / (rho * rho),
            ];
            let adv = [
                u[0] * ur_p + u[1] * ur_a / rho - u[1] * u[1] / rho,
                u[0] * ut_p + u[1] * ut_a / rho + u[0] * u[1] / rho,
            ];
            let mesh = jet.chi * dg;
            let grad_p = [pr / jet.rho_r, (pt - jet.rho_t / jet.rho_r * pr) / rho];
            let dens = model.rho(inner);
            let eta = model.eta(inner);
            let ddt = [(u[0] - uo[0]) / dt - mesh * ur_p, (u[1] - uo[1]) / dt - mesh * ut_p];
            [0, 1].map(|k| dens * (ddt[k] + adv[k]) - eta * vl[k] + grad_p[k])
        };

        for i in 0..ni - 1 {
            for a in 0..nt {
                let q = i * nt + a;
                let uo = [origin.state.u.inner[0][q], origin.state.u.inner[1][q]];
                let r = momentum(&frame.inner[q], &di, q, uo, pr_i[q], pt_i[q], dgam[a], true);
                out.inner[1][q] = r[0];
                out.inner[2][q] = r[1];
            }
        }
        for j in 1..no - 1 {
            for a in 0..nt {
                let q = j * nt + a;
                let uo = [origin.state.u.outer[0][q], origin.state.u.outer[1][q]];
                let r = momentum(&frame.outer[q], &dout, q, uo, pr_o[q], pt_o[q], dgam[a], false);
                out.outer[0][q] = r[0];
                out.outer[1][q] = r[1];
            }
        }

        // continuity in flux form on the pressure cells
        let fluxes = |jets: &[RadialMapJet<T>], u: &[Vec<T>]| -> (Vec<T>, Vec<T>) {
            let fr = (0..jets.len()).map(|q| jets[q].rho * u[0][q] - jets[q].rho_t * u[1][q]).collect();
            let ft = (0..jets.len()).map(|q| jets[q].rho_r * u[1][q]).collect();
            (fr, ft)
        };
        let cell = |r: &[T], fr: &[T], ft: &[T], lo: usize, hi: usize, row: &mut [T]| {
            let (a, b) = (r[lo], r[hi]);
            let area = (b * b - a * a) * T::lit(0.5);
            let avg_t: Vec<T> = (0..nt).map(|k| avg(ft[lo * nt + k], ft[hi * nt + k])).collect();
            let dt_t = f.derivative(&avg_t, 1);
            for k in 0..nt {
                row[k] = (fr[hi * nt + k] - fr[lo * nt + k] + (b - a) * dt_t[k]) / area;
            }
        };
        let (fr_i, ft_i) = fluxes(&frame.inner, &z.u.inner);
        {
            let r0 = g.inner.r[0];
            let mean_flux = fr_i[..nt].iter().copied().sum::<T>() / T::of_usize(nt);
            let mean_p = pi[..nt].iter().copied().sum::<T>() / T::of_usize(nt);
            for a in 0..nt {
                out.inner[0][a] = T::lit(2.0) * mean_flux / (r0 * r0) + pi[a] - mean_p;
            }
        }
        for i in 1..ni {
            cell(&g.inner.r, &fr_i, &ft_i, i - 1, i, &mut out.inner[0][i * nt..(i + 1) * nt]);
        }
        let (fr_o, ft_o) = fluxes(&frame.outer, &z.u.outer);
        for j in 0..no - 1 {
            cell(&g.outer.r, &fr_o, &ft_o, j, j + 1, &mut out.outer[2][j * nt..(j + 1) * nt]);
        }

        // interface rows
        let last = (ni - 1) * nt;
        let d = &frame.iface;
        let sigma: Vec<T> = z.c_sigma.values().iter().map(|&s| model.sigma(s)).collect();
        let sigma_t = f.derivative(&sigma, 1);
        let kappa = kappa_gamma(rs, f, &z.gamma)?;
        for a in 0..nt {
            let (qi, qo) = (last + a, a);
            let stress = |jet: &RadialMapJet<T>, dd: &[Derivs<T>; 2], q: usize, eta: T| {
                let gu = physical_velocity_gradient(jet, [dd[0].f[q], dd[1].f[q]], [dd[0].r[q], dd[1].r[q]], [dd[0].t[q], dd[1].t[q]]);
                [[T::lit(2.0) * gu[0][0], gu[0][1] + gu[1][0]], [gu[0][1] + gu[1][0], T::lit(2.0) * gu[1][1]]].map(|row| row.map(|v| eta * v))
            };
            let si = stress(&frame.inner[qi], &di, qi, model.eta_minus);
            let so = stress(&frame.outer[qo], &dout, qo, model.eta_plus);
            let nu = [d.rho[a] / d.ell[a], -d.gamma_t[a] / d.ell[a]];
            let tau = [d.gamma_t[a] / d.ell[a], d.rho[a] / d.ell[a]];
            let proj = |s: &[[T; 2]; 2], v: [T; 2], w: [T; 2]| {
                v[0] * (s[0][0] * w[0] + s[0][1] * w[1]) + v[1] * (s[1][0] * w[0] + s[1][1] * w[1])
            };
            let jt = proj(&so, tau, nu) - proj(&si, tau, nu);
            let jn = proj(&so, nu, nu) - proj(&si, nu, nu);
            let p_out = (T::lit(3.0) * po[a] - po[nt + a]) * T::lit(0.5);
            let p_in = (T::lit(3.0) * pi[last + a] - pi[last - nt + a]) * T::lit(0.5);
            out.inner[1][qi] = z.u.outer[0][qo] - z.u.inner[0][qi];
            out.inner[2][qi] = z.u.outer[1][qo] - z.u.inner[1][qi];
            out.outer[0][qo] = -jt - sigma_t[a] / d.ell[a];
            out.outer[1][qo] = -jn + (p_out - p_in) - sigma[a] * kappa.values()[a];
            let rho_bar = rs + avg(gam[a], gam_old[a]);
            let normal_flux = d.rho[a] * z.u.inner[0][qi] - d.gamma_t[a] * z.u.inner[1][qi];
            out.gamma[a] = (rho_bar * dgam[a] - normal_flux) / rs;
        }

        // wall
        let w = (no - 1) * nt;
        for a in 0..nt {
            out.outer[0][w + a] = z.u.outer[0][w + a];
            out.outer[1][w + a] = z.u.outer[1][w + a];
        }
        Ok(out)
    }
}

/// Total surfactant in the scheme's own quadrature: bulk control volumes
/// plus `∮ ℓ c_Σ dθ`.
pub fn surfactant_mass<T: Real>(scheme: &Scheme<T>, z: &FlowState<T>, frame: &Frame<T>) -> T {
    let nt = scheme.grid.n_theta();
    let dth = T::TAU() / T::of_usize(nt);
    let (vol, _) = scheme.bulk_volumes(frame);
    let bulk: T = vol.iter().zip(&z.c.outer[0]).map(|(&v, &c)| v * c).sum();
    let surf: T = frame.iface.ell.iter().zip(z.c_sigma.values()).map(|(&l, &s)| l * s).sum();
    (bulk + surf) * dth
}

/// Drop area `½∮(R_σ + γ)² dθ`.
pub fn drop_area<T: Real>(r_sigma: T, gamma: &SurfaceField<T>) -> T {
    let n = gamma.len();
    let s: T = gamma.values().iter().map(|&g| (r_sigma + g) * (r_sigma + g)).sum();
    s * T::lit(0.5) * T::TAU() / T::of_usize(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{EquationOfState, Isotherm};
    use crate::geometry::ReferenceGeometry;

    pub fn model() -> MaterialModel<f64> {
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

    #[test]
    fn equilibrium_is_an_exact_zero() {
        let s = scheme();
        let z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
        let o = s.origin(&z).unwrap();
        let fr = s.frame(&z.gamma).unwrap();
        let st = s.stokes_residual(&z, &o, &fr).unwrap();
        assert!(st.sup_norm() < 1e-13, "{}", st.sup_norm());
        let (b, q) = s.bulk_residual(&z, &o, &fr);
        assert!(b.iter().all(|v| v.abs() < 1e-13));
        assert!(q.iter().all(|v| v.abs() < 1e-13));
        let sr = s.surface_residual(&z, &o, &fr, &q);
        assert!(sr.iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn shifted_circle_at_rest_is_an_equilibrium() {
        // constant γ is a circle of radius R + γ: Laplace jump with that radius
        let s = scheme();
        let mut z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
        z.gamma = HeightFunction::new(SurfaceField::constant(16, 0.05));
        let sig = s.model.sigma(z.c_sigma.values()[0]);
        z.p.inner[0].iter_mut().for_each(|v| *v = sig / 1.05);
        let o = s.origin(&z).unwrap();
        let fr = s.frame(&z.gamma).unwrap();
        let st = s.stokes_residual(&z, &o, &fr).unwrap();
        assert!(st.sup_norm() < 1e-12, "{}", st.sup_norm());
    }
}

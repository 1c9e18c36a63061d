//! Pulled-back differential and geometric operators.
//!
//! All tensors are stored in the polar frame `(e_r, e_θ)` at the node's angle;
//! because the Hanzawa map preserves the angle, reference and physical points
//! share that frame. Rows of a gradient are derivative directions,
//! `(∇u)_{ij} = ∂_i u_j`.

use crate::error::{FlowError, Result};
use crate::field::{BulkField, Location};
use crate::geometry::{PolarGrid, SurfaceField};
use crate::hanzawa::{Hanzawa, HeightFunction, RadialMapJet};
use crate::radial::{Parity, RadialBlock};
use crate::scalar::Real;
use crate::spectral::Fourier;

pub type Tensor<T> = [[T; 2]; 2];

/// Angular derivative of every radial row of a block array.
pub fn theta_rows<T: Real>(f: &Fourier<T>, values: &[T], order: u32) -> Vec<T> {
    let n = f.len();
    let mut out = Vec::with_capacity(values.len());
    for row in values.chunks(n) {
        out.extend(f.derivative(row, order));
    }
    out
}

/// Reference-coordinate derivatives of one block array.
#[derive(Clone, Debug)]
pub struct Derivs<T> {
    pub f: Vec<T>,
    pub r: Vec<T>,
    pub rr: Vec<T>,
    pub t: Vec<T>,
    pub tt: Vec<T>,
    pub rt: Vec<T>,
}

impl<T: Real> Derivs<T> {
    pub fn new(block: &RadialBlock<T>, f: &Fourier<T>, values: &[T], parity: Parity) -> Self {
        let n = f.len();
        let r = block.derivative(values, n, 1, parity);
        let rr = block.derivative(values, n, 2, parity);
        let t = theta_rows(f, values, 1);
        let tt = theta_rows(f, values, 2);
        let rt = theta_rows(f, &r, 1);
        Self { f: values.to_vec(), r, rr, t, tt, rt }
    }
}

/// Physical derivatives from reference ones at one point:
/// `(∂_ρ, ∂_θ̃)` with `∂_ρ = ∂_r/ρ_r` and `∂_θ̃ = ∂_θ − (ρ_θ/ρ_r)∂_r`.
#[inline]
pub fn physical_first<T: Real>(j: &RadialMapJet<T>, fr: T, ft: T) -> (T, T) {
    (fr / j.rho_r, ft - j.rho_t / j.rho_r * fr)
}

/// Physical scalar Laplacian `∂_ρρ + ∂_ρ/ρ + ∂_θ̃θ̃/ρ²` at one point.
pub fn physical_laplacian<T: Real>(j: &RadialMapJet<T>, fr: T, frr: T, _ft: T, ftt: T, frt: T) -> T {
    let pr = j.rho_r;
    let a = j.rho_t / pr;
    let a_r = (j.rho_rt * pr - j.rho_t * j.rho_rr) / (pr * pr);
    let a_t = (j.rho_tt * pr - j.rho_t * j.rho_rt) / (pr * pr);
    let f_pp = frr / (pr * pr) - j.rho_rr * fr / (pr * pr * pr);
    let f_tt = ftt - T::lit(2.0) * a * frt + a * a * frr + (a * a_r - a_t) * fr;
    f_pp + fr / (pr * j.rho) + f_tt / (j.rho * j.rho)
}

/// Physical velocity gradient in the polar frame from reference derivatives.
pub fn physical_velocity_gradient<T: Real>(j: &RadialMapJet<T>, u: [T; 2], ur: [T; 2], ut: [T; 2]) -> Tensor<T> {
    let (a0, b0) = physical_first(j, ur[0], ut[0]);
    let (a1, b1) = physical_first(j, ur[1], ut[1]);
    [[a0, a1], [(b0 - u[1]) / j.rho, (b1 + u[0]) / j.rho]]
}

/// Pointwise values of `𝖦`, `𝖠`, `𝖫` (and `𝖣 = 𝖦ᵀ`).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Coefficients<T> {
    pub g: Tensor<T>,
    pub a: [T; 2],
    pub l: Tensor<T>,
}

impl<T: Real> Coefficients<T> {
    pub fn d(&self) -> Tensor<T> {
        transpose(self.g)
    }

    pub fn at(j: &RadialMapJet<T>, r: T) -> Self {
        let (pr, p) = (j.rho_r, j.rho);
        let one = T::one();
        let g = [[one - one / pr, T::zero()], [j.rho_t / (pr * p), one - r / p]];
        // inverse radial function f(ρ, φ) with f(ρ(r, θ), θ) = r
        let f_a = -j.rho_t / pr;
        let f_pp = -j.rho_rr / (pr * pr * pr);
        let f_aa = -j.rho_tt / pr + T::lit(2.0) * j.rho_t * j.rho_rt / (pr * pr)
            - j.rho_t * j.rho_t * j.rho_rr / (pr * pr * pr);
        let a = [-(f_pp + f_aa / (p * p) + (p / pr - r) / (p * p)), -(T::lit(2.0) * f_a / (p * p))];
        let d = transpose(g);
        let dg = matmul(d, g);
        let mut l = [[T::zero(); 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                l[i][k] = g[i][k] + d[i][k] - dg[i][k];
            }
        }
        Self { g, a, l }
    }
}

pub fn transpose<T: Copy>(m: Tensor<T>) -> Tensor<T> {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

pub fn matmul<T: Real>(a: Tensor<T>, b: Tensor<T>) -> Tensor<T> {
    let mut c = [[T::zero(); 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            c[i][k] = a[i][0] * b[0][k] + a[i][1] * b[1][k];
        }
    }
    c
}

pub fn contract<T: Real>(a: Tensor<T>, b: Tensor<T>) -> T {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Polar-frame Hessian of a scalar from reference derivatives at radius `r`.
pub fn hessian<T: Real>(r: T, fr: T, frr: T, ft: T, ftt: T, frt: T) -> Tensor<T> {
    let off = frt / r - ft / (r * r);
    [[frr, off], [off, ftt / (r * r) + fr / r]]
}

/// Angular data of `γ` and the interface quantities derived from it.
#[derive(Clone, Debug)]
pub struct InterfaceData<T> {
    pub gamma: Vec<T>,
    pub gamma_t: Vec<T>,
    pub gamma_tt: Vec<T>,
    /// `ρ_Σ = R_σ + γ`.
    pub rho: Vec<T>,
    /// `ℓ = (ρ² + γ_θ²)^{1/2}`, the arc-length density.
    pub ell: Vec<T>,
}

impl<T: Real> InterfaceData<T> {
    pub fn new(r_sigma: T, f: &Fourier<T>, gamma: &SurfaceField<T>) -> Self {
        let g = gamma.values().to_vec();
        let gt = gamma.derivative(f, 1);
        let gtt = gamma.derivative(f, 2);
        let rho: Vec<T> = g.iter().map(|&v| r_sigma + v).collect();
        let ell = rho.iter().zip(&gt).map(|(&p, &d)| p.hypot(d)).collect();
        Self { gamma: g, gamma_t: gt, gamma_tt: gtt, rho, ell }
    }
}

/// Coefficient fields and caches built for one height function.
#[derive(Clone, Debug)]
pub struct OperatorContext<T: Real> {
    pub grid: PolarGrid<T>,
    pub hanzawa: Hanzawa<T>,
    pub gamma: HeightFunction<T>,
    pub dgamma_dt: SurfaceField<T>,
    pub u_star: BulkField<T>,
    pub iface: InterfaceData<T>,
    /// Radial-map jets per node, `[i * n_theta + j]`.
    pub inner_jets: Vec<RadialMapJet<T>>,
    pub outer_jets: Vec<RadialMapJet<T>>,
}

impl<T: Real> OperatorContext<T> {
    pub fn new(
        grid: &PolarGrid<T>,
        gamma: &HeightFunction<T>,
        dgamma_dt: SurfaceField<T>,
        u_star: BulkField<T>,
    ) -> Result<Self> {
        let hanzawa = Hanzawa::new(grid.geom.clone());
        let rep = hanzawa.check_diffeo(gamma);
        if !rep.valid {
            return Err(FlowError::InvalidHeight(format!(
                "‖γ‖/ε = {}, min θ' = {}, min det = {}",
                rep.ratio, rep.min_theta_prime, rep.min_det
            )));
        }
        let iface = InterfaceData::new(grid.geom.r_sigma, &grid.fourier, &gamma.gamma);
        let jets = |block: &RadialBlock<T>| {
            let nt = grid.n_theta();
            let mut v = Vec::with_capacity(block.len() * nt);
            for &r in &block.r {
                for j in 0..nt {
                    v.push(hanzawa.jet(r, iface.gamma[j], iface.gamma_t[j], iface.gamma_tt[j]));
                }
            }
            v
        };
        let inner_jets = jets(&grid.inner);
        let outer_jets = jets(&grid.outer);
        Ok(Self {
            grid: grid.clone(),
            hanzawa,
            gamma: gamma.clone(),
            dgamma_dt,
            u_star,
            iface,
            inner_jets,
            outer_jets,
        })
    }

    /// Context with `∂_tγ = 0` and `u* = 0`.
    pub fn geometric(grid: &PolarGrid<T>, gamma: &HeightFunction<T>) -> Result<Self> {
        let n = grid.n_theta();
        Self::new(grid, gamma, SurfaceField::zeros(n), BulkField::velocity(grid))
    }

    /// Checks that the caches were built for `gamma`.
    pub fn ensure_fresh(&self, gamma: &HeightFunction<T>) -> Result<()> {
        if self.gamma.values() != gamma.values() {
            return Err(FlowError::StaleContext);
        }
        Ok(())
    }

    /// Radial-map jet at an arbitrary radius and angular node.
    pub fn jet_at(&self, r: T, j: usize) -> RadialMapJet<T> {
        self.hanzawa.jet(r, self.iface.gamma[j], self.iface.gamma_t[j], self.iface.gamma_tt[j])
    }

    fn blocks(&self) -> [(&RadialBlock<T>, &[RadialMapJet<T>]); 2] {
        [(&self.grid.inner, &self.inner_jets), (&self.grid.outer, &self.outer_jets)]
    }

    /// `𝖦`, `𝖠`, `𝖫` on the inner and outer node sets.
    pub fn bulk_coefficients(&self, gamma: &HeightFunction<T>) -> Result<[Vec<Coefficients<T>>; 2]> {
        self.ensure_fresh(gamma)?;
        let nt = self.grid.n_theta();
        Ok(self.blocks().map(|(b, jets)| {
            jets.iter().enumerate().map(|(q, j)| Coefficients::at(j, b.r[q / nt])).collect()
        }))
    }

    /// `𝖬 = ∂_tΘ − (ū − u*) + 𝖣(ū − ∂_tΘ)` per node (polar components).
    pub fn m_field(&self, u: &BulkField<T>, gamma: &HeightFunction<T>) -> Result<BulkField<T>> {
        let coeffs = self.bulk_coefficients(gamma)?;
        let nt = self.grid.n_theta();
        let mut out = BulkField::velocity(&self.grid);
        let dg = self.dgamma_dt.values();
        for (blk, (jets, cs)) in [(&self.inner_jets, &coeffs[0]), (&self.outer_jets, &coeffs[1])].into_iter().enumerate() {
            let (uf, us, of) = if blk == 0 {
                (&u.inner, &self.u_star.inner, &mut out.inner)
            } else {
                (&u.outer, &self.u_star.outer, &mut out.outer)
            };
            for q in 0..jets.len() {
                let dtheta = [jets[q].chi * dg[q % nt], T::zero()];
                let ub = [uf[0][q], uf[1][q]];
                let rel = [ub[0] - dtheta[0], ub[1] - dtheta[1]];
                let d = cs[q].d();
                for c in 0..2 {
                    let drel = d[c][0] * rel[0] + d[c][1] * rel[1];
                    of[c][q] = dtheta[c] - (ub[c] - us[c][q]) + drel;
                }
            }
        }
        Ok(out)
    }

    /// `𝓖(γ)φ = (1 − 𝖦)∇φ` for a scalar node field (either block may be empty).
    pub fn transformed_gradient(&self, phi: &BulkField<T>) -> BulkField<T> {
        let nt = self.grid.n_theta();
        let mut out = BulkField::velocity(&self.grid);
        for (blk, (b, jets)) in self.blocks().into_iter().enumerate() {
            let v = if blk == 0 { &phi.inner[0] } else { &phi.outer[0] };
            if v.is_empty() {
                if blk == 0 {
                    out.inner = vec![Vec::new(), Vec::new()];
                }
                continue;
            }
            let d = Derivs::new(b, &self.grid.fourier, v, Parity::Even);
            let o = if blk == 0 { &mut out.inner } else { &mut out.outer };
            for q in 0..v.len() {
                let r = b.r[q / nt];
                let c = Coefficients::at(&jets[q], r);
                let grad = [d.r[q], d.t[q] / r];
                for i in 0..2 {
                    o[i][q] = grad[i] - (c.g[i][0] * grad[0] + c.g[i][1] * grad[1]);
                }
            }
        }
        out
    }

    /// `𝓓(γ)u = div u − 𝖣:∇u` for a vector node field.
    pub fn transformed_divergence(&self, u: &BulkField<T>) -> BulkField<T> {
        let nt = self.grid.n_theta();
        let mut out = BulkField::zeros(&self.grid, 1, Location::Nodes);
        for (blk, (b, jets)) in self.blocks().into_iter().enumerate() {
            let v = if blk == 0 { &u.inner } else { &u.outer };
            let dr = Derivs::new(b, &self.grid.fourier, &v[0], Parity::Odd);
            let dt = Derivs::new(b, &self.grid.fourier, &v[1], Parity::Odd);
            let o = if blk == 0 { &mut out.inner[0] } else { &mut out.outer[0] };
            for q in 0..v[0].len() {
                let r = b.r[q / nt];
                let c = Coefficients::at(&jets[q], r);
                let gu = [[dr.r[q], dt.r[q]], [(dr.t[q] - v[1][q]) / r, (dt.t[q] + v[0][q]) / r]];
                let div = gu[0][0] + gu[1][1];
                o[q] = div - contract(c.d(), gu);
            }
        }
        out
    }

    /// `𝓛(γ)φ = Δφ − 𝖠·∇φ − 𝖫:∇²φ` for a scalar node field.
    pub fn transformed_laplacian(&self, phi: &BulkField<T>) -> BulkField<T> {
        let nt = self.grid.n_theta();
        let mut out = phi.map(|_| T::zero());
        for (blk, (b, jets)) in self.blocks().into_iter().enumerate() {
            let v = if blk == 0 { &phi.inner[0] } else { &phi.outer[0] };
            if v.is_empty() {
                continue;
            }
            let d = Derivs::new(b, &self.grid.fourier, v, Parity::Even);
            let o = if blk == 0 { &mut out.inner[0] } else { &mut out.outer[0] };
            for q in 0..v.len() {
                let r = b.r[q / nt];
                let c = Coefficients::at(&jets[q], r);
                let h = hessian(r, d.r[q], d.rr[q], d.t[q], d.tt[q], d.rt[q]);
                let lap = h[0][0] + h[1][1];
                let grad = [d.r[q], d.t[q] / r];
                o[q] = lap - (c.a[0] * grad[0] + c.a[1] * grad[1]) - contract(c.l, h);
            }
        }
        out
    }

    /// Surface coefficients `(𝖬_Σ, 𝖠_Σ, 𝖫_Σ)` of the transformed surface operators, in
    /// units where `𝓛_Γ = Δ_Σ − 𝖠_Σ ∂_θ/R_σ − 𝖫_Σ ∂_θθ/R_σ²` and the transformed
    /// surface advection is `(u*_θ − 𝖬_Σ) ∂_θ/R_σ`.
    pub fn surface_material_ops(&self, u_sigma: &[T], gamma: &HeightFunction<T>) -> Result<[SurfaceField<T>; 3]> {
        self.ensure_fresh(gamma)?;
        let rs = self.grid.geom.r_sigma;
        let nt = self.grid.n_theta();
        let ustar = self.u_star.trace_inner(1);
        let d = &self.iface;
        let ell_t = self.grid.fourier.derivative(&d.ell, 1);
        let mut m = Vec::with_capacity(nt);
        let mut a = Vec::with_capacity(nt);
        let mut l = Vec::with_capacity(nt);
        for j in 0..nt {
            // (1 − 𝖭)ū_Σ − (ū_Σ − u*_Σ): angular transport rate u_θ/ρ versus u*_θ/R
            let n = rs / d.rho[j];
            m.push((T::one() - n) * u_sigma[j] - (u_sigma[j] - ustar[j]));
            let e = d.ell[j];
            a.push(rs * ell_t[j] / (e * e * e));
            l.push(T::one() - rs * rs / (e * e));
        }
        Ok([SurfaceField::new(m), SurfaceField::new(a), SurfaceField::new(l)])
    }
}

/// `𝖭(γ)` on tangents: `R_σ/(R_σ + γ)`.
pub fn n_op<T: Real>(r_sigma: T, gamma: &HeightFunction<T>) -> Result<SurfaceField<T>> {
    if gamma.values().iter().any(|&g| T::one() + g / r_sigma <= T::zero()) {
        return Err(FlowError::InvalidHeight("1 + γ/R_σ ≤ 0".into()));
    }
    Ok(gamma.gamma.map(|g| r_sigma / (r_sigma + g)))
}

/// `μ(γ) = (1 + |𝖭∇_Σγ|²)^{-1/2}`.
pub fn mu<T: Real>(r_sigma: T, f: &Fourier<T>, gamma: &HeightFunction<T>) -> Result<SurfaceField<T>> {
    n_op(r_sigma, gamma)?;
    let d = InterfaceData::new(r_sigma, f, &gamma.gamma);
    Ok(SurfaceField::new((0..d.rho.len()).map(|j| d.rho[j] / d.ell[j]).collect()))
}

/// `ν_Γ(γ) = μ(ν_Σ − 𝖭∇_Σγ)` and the unit tangent, polar components.
pub fn nu_gamma<T: Real>(r_sigma: T, f: &Fourier<T>, gamma: &HeightFunction<T>) -> Result<(Vec<[T; 2]>, Vec<[T; 2]>)> {
    n_op(r_sigma, gamma)?;
    let d = InterfaceData::new(r_sigma, f, &gamma.gamma);
    let nu = (0..d.rho.len()).map(|j| [d.rho[j] / d.ell[j], -d.gamma_t[j] / d.ell[j]]).collect();
    let tau = (0..d.rho.len()).map(|j| [d.gamma_t[j] / d.ell[j], d.rho[j] / d.ell[j]]).collect();
    Ok((nu, tau))
}

/// `P_Γ = 1 − ν_Γ ⊗ ν_Γ`.
pub fn p_gamma<T: Real>(r_sigma: T, f: &Fourier<T>, gamma: &HeightFunction<T>) -> Result<Vec<Tensor<T>>> {
    let (nu, _) = nu_gamma(r_sigma, f, gamma)?;
    Ok(nu
        .into_iter()
        .map(|n| [[T::one() - n[0] * n[0], -n[0] * n[1]], [-n[1] * n[0], T::one() - n[1] * n[1]]])
        .collect())
}

/// `𝖦_Σ(γ) e_θ` with `𝖦_Σ = (1 − 𝖭) + (1 − P_Γ)𝖭`, so that
/// `𝒢_Γ(γ)φ = (e_θ − 𝖦_Σ e_θ) ∂_θφ / R_σ`.
pub fn g_sigma<T: Real>(r_sigma: T, f: &Fourier<T>, gamma: &HeightFunction<T>) -> Result<Vec<[T; 2]>> {
    let n = n_op(r_sigma, gamma)?;
    let (nu, _) = nu_gamma(r_sigma, f, gamma)?;
    Ok(nu
        .iter()
        .zip(n.values())
        .map(|(v, &n)| {
            let dot = v[1];
            [n * dot * v[0], T::one() - n + n * dot * v[1]]
        })
        .collect())
}

/// `κ_Γ(γ) = (μ/ρ)(μ² ∂_θ s − 1)` with `s = γ_θ/ρ`, the circle form of the
/// transformed curvature.
pub fn kappa_gamma<T: Real>(r_sigma: T, f: &Fourier<T>, gamma: &HeightFunction<T>) -> Result<SurfaceField<T>> {
    n_op(r_sigma, gamma)?;
    let d = InterfaceData::new(r_sigma, f, &gamma.gamma);
    let s: Vec<T> = d.gamma_t.iter().zip(&d.rho).map(|(&g, &p)| g / p).collect();
    let s_t = f.derivative(&s, 1);
    Ok(SurfaceField::new(
        (0..s.len())
            .map(|j| {
                let m = d.rho[j] / d.ell[j];
                m / d.rho[j] * (m * m * s_t[j] - T::one())
            })
            .collect(),
    ))
}

/// `κ'(0)h = (tr L_Σ² + Δ_Σ)h = (h + ∂_θθ h)/R_σ²`.
pub fn kappa_prime_zero<T: Real>(r_sigma: T, f: &Fourier<T>, h: &SurfaceField<T>) -> SurfaceField<T> {
    let htt = h.derivative(f, 2);
    let s = T::one() / (r_sigma * r_sigma);
    SurfaceField::new(h.values().iter().zip(&htt).map(|(&a, &b)| (a + b) * s).collect())
}

/// Curvature of the polar curve `ρ(θ)`: `−(ρ² + 2ρ'² − ρρ'')/(ρ² + ρ'²)^{3/2}`.
pub fn polar_curvature<T: Real>(rho: T, d1: T, d2: T) -> T {
    -(rho * rho + T::lit(2.0) * d1 * d1 - rho * d2) / (rho * rho + d1 * d1).powf(T::lit(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ReferenceGeometry;

    fn grid(nt: usize, nr: usize, order: usize) -> PolarGrid<f64> {
        ReferenceGeometry::new(2.0, 1.0, nt, nr, nr, 0.5).unwrap().grid(order)
    }

    fn wavy(th: &[f64], a: f64) -> HeightFunction<f64> {
        HeightFunction::from_fn(th, |t| a * ((2.0 * t).cos() + 0.4 * (3.0 * t + 0.3).sin()))
    }

    #[test]
    fn trivial_height_gives_trivial_operators() {
        let g = grid(16, 8, 2);
        let z = HeightFunction::zero(16);
        let ctx = OperatorContext::geometric(&g, &z).unwrap();
        for cs in ctx.bulk_coefficients(&z).unwrap() {
            for c in cs {
                assert_eq!(c, Coefficients::default());
            }
        }
        let m = ctx.m_field(&BulkField::velocity(&g), &z).unwrap();
        assert_eq!(m.sup_norm(), 0.0);
        assert_eq!(mu(1.0, &g.fourier, &z).unwrap().sup_norm(), 1.0);
        let k = kappa_gamma(1.0, &g.fourier, &z).unwrap();
        assert!(k.values().iter().all(|&v| v == -1.0));
        let gs = g_sigma(1.0, &g.fourier, &z).unwrap();
        assert!(gs.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }

    #[test]
    fn constant_height_examples() {
        let g = grid(16, 8, 2);
        let c = HeightFunction::new(SurfaceField::constant(16, 0.1));
        let k = kappa_gamma(1.0, &g.fourier, &c).unwrap();
        assert!(k.values().iter().all(|&v| (v + 1.0 / 1.1).abs() < 1e-14));
        let (nu, _) = nu_gamma(1.0, &g.fourier, &c).unwrap();
        assert!(nu.iter().all(|v| (v[0] - 1.0).abs() < 1e-15 && v[1].abs() < 1e-15));
        let gs = g_sigma(1.0, &g.fourier, &c).unwrap();
        assert!(gs.iter().all(|v| (v[1] - 0.1 / 1.1).abs() < 1e-15));
    }

    #[test]
    fn kappa_matches_polar_curvature() {
        let g = grid(256, 8, 2);
        let h = wavy(&g.theta, 0.1);
        let k = kappa_gamma(1.0, &g.fourier, &h).unwrap();
        let d1 = h.gamma.derivative(&g.fourier, 1);
        let d2 = h.gamma.derivative(&g.fourier, 2);
        for j in 0..256 {
            let o = polar_curvature(1.0 + h.values()[j], d1[j], d2[j]);
            assert!(((k.values()[j] - o) / o).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_prime_examples() {
        let g = grid(32, 8, 2);
        let c1 = SurfaceField::from_fn(&g.theta, |t| t.cos());
        assert!(kappa_prime_zero(1.0, &g.fourier, &c1).sup_norm() < 1e-13);
        let c3 = SurfaceField::from_fn(&g.theta, |t| (3.0 * t).cos());
        let k3 = kappa_prime_zero(2.0, &g.fourier, &c3);
        for (j, &t) in g.theta.iter().enumerate() {
            assert!((k3.values()[j] + 2.0 * (3.0 * t).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn projector_is_idempotent_and_annihilates_normal() {
        let g = grid(64, 8, 2);
        let h = wavy(&g.theta, 0.1);
        let p = p_gamma(1.0, &g.fourier, &h).unwrap();
        let (nu, _) = nu_gamma(1.0, &g.fourier, &h).unwrap();
        for (pj, n) in p.iter().zip(&nu) {
            assert!((n[0].hypot(n[1]) - 1.0).abs() < 1e-14);
            let pp = matmul(*pj, *pj);
            for i in 0..2 {
                for k in 0..2 {
                    assert!((pp[i][k] - pj[i][k]).abs() < 1e-14);
                }
                assert!((pj[i][0] * n[0] + pj[i][1] * n[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn laplacian_coefficients_agree_with_direct_chain_rule() {
        let g = grid(32, 24, 4);
        let h = wavy(&g.theta, 0.08);
        let ctx = OperatorContext::geometric(&g, &h).unwrap();
        let phi = BulkField::from_fn(&g, 1, Location::Nodes, |_, r, t| r * r * (2.0 * t).sin() + r.powi(3));
        let lap = ctx.transformed_laplacian(&phi);
        let nt = 32;
        for (blk, b) in [&g.inner, &g.outer].into_iter().enumerate() {
            let v = if blk == 0 { &phi.inner[0] } else { &phi.outer[0] };
            let jets = if blk == 0 { &ctx.inner_jets } else { &ctx.outer_jets };
            let d = Derivs::new(b, &g.fourier, v, Parity::Even);
            for q in 0..v.len() {
                let direct = physical_laplacian(&jets[q], d.r[q], d.rr[q], d.t[q], d.tt[q], d.rt[q]);
                let o = if blk == 0 { lap.inner[0][q] } else { lap.outer[0][q] };
                assert!((direct - o).abs() < 1e-9 * (1.0 + direct.abs()), "{blk} {q} {direct} {o} {}", q / nt);
            }
        }
    }
}

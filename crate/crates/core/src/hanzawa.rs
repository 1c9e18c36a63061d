//! The Hanzawa diffeomorphism `Θ(x) = x + χ(d_Σ(x)/ε) γ(Π_Σ(x)) ν_Σ(Π_Σ(x))`.
//!
//! On the reference circle the map preserves the polar angle, so it reduces to
//! the scalar radial map `ρ(r, θ) = r + χ((r - R_σ)/ε) γ(θ)`.

use num_complex::Complex;

use crate::error::{FlowError, Result};
use crate::geometry::{Point, ReferenceGeometry, SurfaceField};
use crate::scalar::Real;
use crate::spectral::Fourier;

/// Cutoff `χ` with `χ = 1` on `|r| < 1/3`, `χ = 0` on `|r| > 2/3` and `|χ'| ≤ 3.6`.
///
/// Built as a linear descent of slope `slope` on `[a, b]` (centered in
/// `[1/3, 2/3]`) mollified by the kernel `(35/32δ)(1 - (x/δ)²)³`, which keeps
/// the maximal slope and makes `χ` four times continuously differentiable.
/// Value and first two derivatives are evaluated in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct CutoffProfile<T: Real> {
    slope: T,
    a: T,
    b: T,
    delta: T,
}

impl<T: Real> Default for CutoffProfile<T> {
    fn default() -> Self {
        Self::new(T::lit(3.6), T::lit(0.025))
    }
}

impl<T: Real> CutoffProfile<T> {
    pub fn new(slope: T, delta: T) -> Self {
        let half = T::lit(0.5);
        let w = T::one() / slope;
        let a = half - half * w;
        let b = half + half * w;
        assert!(a - delta >= T::one() / T::lit(3.0), "mollifier too wide for the plateau");
        assert!(b + delta <= T::lit(2.0) / T::lit(3.0), "mollifier too wide for the support");
        Self { slope, a, b, delta }
    }

    /// `max |χ'|`.
    pub fn sup_slope(&self) -> T {
        self.slope
    }

    // kernel, its primitive and second primitive in scaled form
    fn kernel(&self, x: T) -> T {
        let t = x / self.delta;
        if t.abs() >= T::one() {
            return T::zero();
        }
        let q = T::one() - t * t;
        T::lit(35.0 / 32.0) * q * q * q / self.delta
    }

    fn cdf(&self, x: T) -> T {
        let t = x / self.delta;
        if t <= -T::one() {
            return T::zero();
        }
        if t >= T::one() {
            return T::one();
        }
        let t2 = t * t;
        let p = t * (T::one() - t2 + T::lit(0.6) * t2 * t2 - t2 * t2 * t2 / T::lit(7.0));
        T::lit(0.5) + T::lit(35.0 / 32.0) * p
    }

    fn ramp(&self, x: T) -> T {
        let t = x / self.delta;
        if t <= -T::one() {
            return T::zero();
        }
        if t >= T::one() {
            return x;
        }
        let t2 = t * t;
        let t4 = t2 * t2;
        let c0 = T::lit(0.5 - 0.25 + 0.1 - 1.0 / 56.0);
        let p = t2 * T::lit(0.5) - t4 * T::lit(0.25) + t4 * t2 * T::lit(0.1) - t4 * t4 / T::lit(56.0) - c0;
        self.delta * ((t + T::one()) * T::lit(0.5) + T::lit(35.0 / 32.0) * p)
    }

    pub fn value(&self, r: T) -> T {
        let x = r.abs();
        if x <= self.a - self.delta {
            return T::one();
        }
        if x >= self.b + self.delta {
            return T::zero();
        }
        T::one() - self.slope * (self.ramp(x - self.a) - self.ramp(x - self.b))
    }

    pub fn d1(&self, r: T) -> T {
        let x = r.abs();
        let v = -self.slope * (self.cdf(x - self.a) - self.cdf(x - self.b));
        if r < T::zero() {
            -v
        } else {
            v
        }
    }

    pub fn d2(&self, r: T) -> T {
        let x = r.abs();
        -self.slope * (self.kernel(x - self.a) - self.kernel(x - self.b))
    }
}

/// Interface height over `Σ`, the degrees of freedom of the interface.
#[derive(Clone, Debug, PartialEq)]
pub struct HeightFunction<T: Real> {
    pub gamma: SurfaceField<T>,
    sup_norm: T,
}

impl<T: Real> HeightFunction<T> {
    pub fn new(gamma: SurfaceField<T>) -> Self {
        let sup_norm = gamma.sup_norm();
        Self { gamma, sup_norm }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(SurfaceField::zeros(n))
    }

    pub fn from_fn(theta: &[T], f: impl Fn(T) -> T) -> Self {
        Self::new(SurfaceField::from_fn(theta, f))
    }

    #[inline]
    pub fn sup_norm(&self) -> T {
        self.sup_norm
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        self.gamma.values()
    }

    /// `(mean, γ - mean)`.
    pub fn mean_free(&self) -> (T, SurfaceField<T>) {
        let m = self.gamma.mean();
        (m, self.gamma.map(|v| v - m))
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }
}

/// Radial map `ρ` and its derivatives at one reference point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RadialMapJet<T> {
    pub rho: T,
    pub rho_r: T,
    pub rho_rr: T,
    pub rho_t: T,
    pub rho_tt: T,
    pub rho_rt: T,
    /// `χ(d/ε)`, the weight of `γ` at this point.
    pub chi: T,
}

/// The Hanzawa transformation for a fixed reference geometry and cutoff.
#[derive(Clone, Debug)]
pub struct Hanzawa<T: Real> {
    pub geom: ReferenceGeometry<T>,
    pub cutoff: CutoffProfile<T>,
    fourier: Fourier<T>,
}

impl<T: Real> Hanzawa<T> {
    pub fn new(geom: ReferenceGeometry<T>) -> Self {
        let fourier = geom.fourier();
        Self { geom, cutoff: CutoffProfile::default(), fourier }
    }

    #[inline]
    fn eps(&self) -> T {
        self.geom.epsilon
    }

    /// A-priori bound `‖γ‖_∞ < ε/4`.
    pub fn height_bound(&self) -> T {
        self.eps() / T::lit(4.0)
    }

    fn check_height(&self, g: T) -> Result<()> {
        if g.abs() >= self.height_bound() {
            return Err(FlowError::InvalidHeight(format!(
                "|γ| = {} violates the bound ε/4 = {}",
                g.abs(),
                self.height_bound()
            )));
        }
        Ok(())
    }

    /// `θ(r; g) = r + χ(r/ε) g` for a signed distance `r`.
    pub fn theta(&self, r: T, g: T) -> Result<T> {
        self.check_height(g)?;
        let dth = T::one() + self.cutoff.d1(r / self.eps()) * g / self.eps();
        if dth <= T::zero() {
            return Err(FlowError::InvalidHeight(format!("θ' = {dth} at r = {r}")));
        }
        Ok(r + self.cutoff.value(r / self.eps()) * g)
    }

    pub fn theta_prime(&self, r: T, g: T) -> T {
        T::one() + self.cutoff.d1(r / self.eps()) * g / self.eps()
    }

    /// Inverse of `θ(·; g)` by safeguarded Newton iteration.
    pub fn theta_inverse(&self, s: T, g: T) -> Result<T> {
        self.check_height(g)?;
        let eps = self.eps();
        let outer = T::lit(2.0) / T::lit(3.0) * eps;
        if s.abs() >= outer {
            return Ok(s);
        }
        // θ(r) - r ∈ [-|g|, |g|] brackets the root
        let mut lo = s - g.abs();
        let mut hi = s + g.abs();
        let f = |r: T| r + self.cutoff.value(r / eps) * g - s;
        let mut r = s - self.cutoff.value(s / eps) * g;
        let tol = T::root_tol() * (T::one() + s.abs());
        for _ in 0..100 {
            let fr = f(r);
            if fr.abs() <= tol {
                return Ok(r);
            }
            if fr > T::zero() {
                hi = r;
            } else {
                lo = r;
            }
            let dfr = self.theta_prime(r, g);
            let mut next = r - fr / dfr;
            if !(next > lo && next < hi) || dfr <= T::zero() {
                next = (lo + hi) * T::lit(0.5);
            }
            if (next - r).abs() <= tol * T::lit(0.1) {
                return Ok(next);
            }
            r = next;
        }
        Ok(r)
    }

    fn gamma_at(&self, coeffs: &[Complex<T>], angle: T) -> T {
        self.fourier.interpolate(coeffs, angle)
    }

    pub fn forward_map(&self, x: Point<T>, gamma: &HeightFunction<T>) -> Result<Point<T>> {
        self.check_height(gamma.sup_norm())?;
        let n = x[0].hypot(x[1]);
        if n == T::zero() {
            return Ok(x);
        }
        let d = n - self.geom.r_sigma;
        let angle = x[1].atan2(x[0]);
        let g = self.gamma_at(gamma.gamma.coeffs(&self.fourier), angle);
        let shift = self.theta(d, g)? - d;
        Ok([x[0] + shift * x[0] / n, x[1] + shift * x[1] / n])
    }

    pub fn inverse_map(&self, y: Point<T>, gamma: &HeightFunction<T>) -> Result<Point<T>> {
        self.check_height(gamma.sup_norm())?;
        let n = y[0].hypot(y[1]);
        if n == T::zero() {
            return Ok(y);
        }
        let d = n - self.geom.r_sigma;
        let angle = y[1].atan2(y[0]);
        let g = self.gamma_at(gamma.gamma.coeffs(&self.fourier), angle);
        let shift = self.theta_inverse(d, g)? - d;
        Ok([y[0] + shift * y[0] / n, y[1] + shift * y[1] / n])
    }

    /// `∇Θ` in Cartesian components with the convention `(∇Θ)_{ij} = ∂_i Θ_j`.
    pub fn grad_theta(&self, x: Point<T>, gamma: &HeightFunction<T>) -> Result<[[T; 2]; 2]> {
        self.check_height(gamma.sup_norm())?;
        let n = x[0].hypot(x[1]);
        let one = T::one();
        let zero = T::zero();
        if n == T::zero() {
            return Ok([[one, zero], [zero, one]]);
        }
        let eps = self.eps();
        let d = n - self.geom.r_sigma;
        let angle = x[1].atan2(x[0]);
        let coeffs = gamma.gamma.coeffs(&self.fourier);
        let g = self.gamma_at(coeffs, angle);
        let dcoeffs: Vec<Complex<T>> =
            coeffs.iter().enumerate().map(|(j, &c)| c * self.fourier.derivative_symbol(j, 1)).collect();
        let g_t = self.gamma_at(&dcoeffs, angle);
        let chi = self.cutoff.value(d / eps);
        let chi1 = self.cutoff.d1(d / eps);
        let nu = [angle.cos(), angle.sin()];
        let tau = [-angle.sin(), angle.cos()];
        let ntr = self.geom.normal_transport(d);
        let r_s = self.geom.r_sigma;
        // 1 + (χ'γ/ε) ν⊗ν + χ 𝖭(d) ∇_Σγ ⊗ ν − χ γ 𝖭(d) L_Σ
        let c_nn = chi1 * g / eps;
        let c_tn = chi * ntr * g_t / r_s;
        let c_tt = chi * g * ntr / r_s;
        let mut m = [[zero; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let id = if i == j { one } else { zero };
                m[i][j] = id + c_nn * nu[i] * nu[j] + c_tn * tau[i] * nu[j] + c_tt * tau[i] * tau[j];
            }
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det <= T::zero() {
            return Err(FlowError::InvalidHeight(format!("det ∇Θ = {det} at ({}, {})", x[0], x[1])));
        }
        Ok(m)
    }

    /// `ρ` and derivatives at radius `r` for height data `(γ, γ_θ, γ_θθ)` at one angle.
    pub fn jet(&self, r: T, g: T, g_t: T, g_tt: T) -> RadialMapJet<T> {
        let eps = self.eps();
        let s = (r - self.geom.r_sigma) / eps;
        let chi = self.cutoff.value(s);
        let chi1 = self.cutoff.d1(s) / eps;
        let chi2 = self.cutoff.d2(s) / (eps * eps);
        RadialMapJet {
            rho: r + chi * g,
            rho_r: T::one() + chi1 * g,
            rho_rr: chi2 * g,
            rho_t: chi * g_t,
            rho_tt: chi * g_tt,
            rho_rt: chi1 * g_t,
            chi,
        }
    }

    pub fn check_diffeo(&self, gamma: &HeightFunction<T>) -> DiffeoReport<T> {
        let eps = self.eps();
        let sup = gamma.sup_norm();
        let gt = gamma.gamma.derivative(&self.fourier, 1);
        let n_s = 401;
        let mut min_theta_prime = T::infinity();
        let mut min_det = T::infinity();
        let lo = -T::lit(2.0 / 3.0) * eps;
        let step = -lo * T::lit(2.0) / T::of_usize(n_s - 1);
        for (j, &g) in gamma.values().iter().enumerate() {
            for i in 0..n_s {
                let d = lo + step * T::of_usize(i);
                let tp = self.theta_prime(d, g);
                min_theta_prime = min_theta_prime.min(tp);
                let jet = self.jet(self.geom.r_sigma + d, g, gt[j], T::zero());
                let r = self.geom.r_sigma + d;
                min_det = min_det.min(jet.rho_r * jet.rho / r);
            }
        }
        let bound_ok = sup < self.height_bound();
        DiffeoReport {
            ratio: sup / eps,
            min_theta_prime,
            min_det,
            valid: bound_ok && min_theta_prime > T::zero() && min_det > T::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffeoReport<T> {
    /// `‖γ‖_∞ / ε`; must stay below 1/4.
    pub ratio: T,
    pub min_theta_prime: T,
    pub min_det: T,
    pub valid: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hz() -> Hanzawa<f64> {
        Hanzawa::new(ReferenceGeometry::new(2.0, 1.0, 32, 8, 8, 0.5).unwrap())
    }

    #[test]
    fn cutoff_plateau_support_and_slope() {
        let c = CutoffProfile::<f64>::default();
        for i in 0..=1000 {
            let r = -1.0 + 2.0 * i as f64 / 1000.0;
            let v = c.value(r);
            assert!((0.0..=1.0 + 1e-15).contains(&v));
            if r.abs() < 1.0 / 3.0 {
                assert_eq!(v, 1.0);
            }
            if r.abs() > 2.0 / 3.0 {
                assert!(v.abs() < 1e-15);
            }
            assert!(c.d1(r).abs() <= 3.6 + 1e-12);
        }
        assert!(c.sup_slope() < 4.0);
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        let c = CutoffProfile::<f64>::default();
        let h = 1e-6;
        for i in 0..200 {
            let r = 0.3 + 0.4 * i as f64 / 199.0;
            let fd1 = (c.value(r + h) - c.value(r - h)) / (2.0 * h);
            let fd2 = (c.d1(r + h) - c.d1(r - h)) / (2.0 * h);
            assert!((fd1 - c.d1(r)).abs() < 1e-6, "r={r}");
            assert!((fd2 - c.d2(r)).abs() < 1e-4 * (1.0 + c.d2(r).abs()), "r={r}");
        }
    }

    #[test]
    fn theta_examples() {
        let h = hz();
        assert_eq!(h.theta(0.2, 0.0).unwrap(), 0.2);
        assert_eq!(h.theta(0.4, 0.1).unwrap(), 0.4);
        assert_eq!(h.theta(0.0, 0.1).unwrap(), 0.1);
        assert!(h.theta(0.0, 0.2).is_err());
    }

    #[test]
    fn theta_inverse_round_trip() {
        let h = hz();
        for i in 0..101 {
            let r = -0.45 + 0.9 * i as f64 / 100.0;
            for &g in &[-0.12, -0.05, 0.0, 0.07, 0.124] {
                let s = h.theta(r, g).unwrap();
                let back = h.theta_inverse(s, g).unwrap();
                assert!((back - r).abs() < 1e-12, "r={r} g={g}");
            }
        }
    }

    #[test]
    fn constant_height_shifts_sigma_radially() {
        let h = hz();
        let g = HeightFunction::new(SurfaceField::constant(32, 0.1));
        let x = [0.6, 0.8];
        let y = h.forward_map(x, &g).unwrap();
        assert!((y[0] - 1.1 * 0.6).abs() < 1e-12 && (y[1] - 1.1 * 0.8).abs() < 1e-12);
        let z = HeightFunction::zero(32);
        assert_eq!(h.forward_map([0.3, -0.2], &z).unwrap(), [0.3, -0.2]);
    }

    #[test]
    fn grad_theta_identity_cases() {
        let h = hz();
        let th = h.geom.fourier().nodes();
        let g = HeightFunction::from_fn(&th, |t| 0.05 * (2.0 * t).cos());
        let far = h.grad_theta([1.5, 0.0], &g).unwrap();
        assert_eq!(far, [[1.0, 0.0], [0.0, 1.0]]);
        let z = HeightFunction::zero(32);
        assert_eq!(h.grad_theta([1.1, 0.1], &z).unwrap(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn diffeo_report_examples() {
        let h = hz();
        let th = h.geom.fourier().nodes();
        let z = HeightFunction::zero(32);
        let r = h.check_diffeo(&z);
        assert!(r.valid && r.min_theta_prime == 1.0);
        let big = HeightFunction::from_fn(&th, |_| 0.25);
        assert!(!h.check_diffeo(&big).valid);
        let ok = HeightFunction::from_fn(&th, |t| 0.9 * 0.125 * t.cos());
        let rep = h.check_diffeo(&ok);
        assert!(rep.valid && rep.min_theta_prime > 0.0 && rep.min_det > 0.0);
    }
}

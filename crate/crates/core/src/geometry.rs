//! Reference configuration: the disk `Ω`, the concentric reference circle `Σ`
//! and calculus on `Σ`.
//!
//! Curvature convention: `κ_Σ = tr L_Σ = -1/R_σ`, so that
//! `div_Σ{σ P_Σ} = σ κ_Σ ν_Σ + ∇_Σ σ` holds with `ν_Σ` the outward normal.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{FlowError, Result};
use crate::radial::RadialBlock;
use crate::scalar::Real;
use crate::spectral::Fourier;

pub type Point<T> = [T; 2];

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceGeometry<T: Real> {
    pub r_omega: T,
    pub r_sigma: T,
    pub n_theta: usize,
    pub n_r_in: usize,
    pub n_r_out: usize,
    pub epsilon: T,
}

impl<T: Real> ReferenceGeometry<T> {
    pub fn new(r_omega: T, r_sigma: T, n_theta: usize, n_r_in: usize, n_r_out: usize, epsilon: T) -> Result<Self> {
        let g = Self { r_omega, r_sigma, n_theta, n_r_in, n_r_out, epsilon };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(FlowError::Geometry(m));
        if !(self.r_sigma > T::zero() && self.r_sigma < self.r_omega) {
            return fail(format!(
                "need 0 < R_sigma < R_omega (R_sigma = {}, R_omega = {})",
                self.r_sigma, self.r_omega
            ));
        }
        if !(self.epsilon > T::zero() && self.epsilon < self.tube_size()) {
            return fail(format!(
                "need 0 < epsilon < tube size {} (epsilon = {})",
                self.tube_size(),
                self.epsilon
            ));
        }
        if self.n_theta < 8 || !self.n_theta.is_power_of_two() {
            return fail(format!("N_theta must be a power of two >= 8 (got {})", self.n_theta));
        }
        if self.n_r_in < 6 || self.n_r_out < 6 {
            return fail(format!(
                "need at least 6 radial nodes per block (got {} inner, {} outer)",
                self.n_r_in, self.n_r_out
            ));
        }
        Ok(())
    }

    /// `min(R_σ, R_Ω - R_σ)`: bounded by the curvature radius and the distance to the wall.
    pub fn tube_size(&self) -> T {
        self.r_sigma.min(self.r_omega - self.r_sigma)
    }

    pub fn signed_distance(&self, x: Point<T>) -> T {
        x[0].hypot(x[1]) - self.r_sigma
    }

    pub fn metric_projection(&self, x: Point<T>) -> Result<Point<T>> {
        let n = x[0].hypot(x[1]);
        if n == T::zero() {
            return Err(FlowError::SingularProjection);
        }
        Ok([self.r_sigma * x[0] / n, self.r_sigma * x[1] / n])
    }

    /// Outer unit normal `ν_Σ` at polar angle `theta`.
    pub fn normal(&self, theta: T) -> Point<T> {
        [theta.cos(), theta.sin()]
    }

    pub fn tangent(&self, theta: T) -> Point<T> {
        [-theta.sin(), theta.cos()]
    }

    /// Eigenvalue of `L_Σ` on tangent vectors.
    pub fn principal_curvature(&self) -> T {
        -T::one() / self.r_sigma
    }

    pub fn mean_curvature(&self) -> T {
        self.principal_curvature()
    }

    /// `𝖭(d) = (1 - d L_Σ)^{-1}` on tangents: `R_σ / (R_σ + d)`.
    pub fn normal_transport(&self, d: T) -> T {
        self.r_sigma / (self.r_sigma + d)
    }

    pub fn fourier(&self) -> Fourier<T> {
        Fourier::new(self.n_theta)
    }

    pub fn grid(&self, fd_order: usize) -> PolarGrid<T> {
        PolarGrid::new(self.clone(), fd_order)
    }
}

/// Discretization of the reference disk: Fourier in θ, finite differences in r.
#[derive(Clone, Debug)]
pub struct PolarGrid<T: Real> {
    pub geom: ReferenceGeometry<T>,
    pub fourier: Fourier<T>,
    pub inner: RadialBlock<T>,
    pub outer: RadialBlock<T>,
    pub theta: Vec<T>,
}

impl<T: Real> PolarGrid<T> {
    pub fn new(geom: ReferenceGeometry<T>, fd_order: usize) -> Self {
        let fourier = Fourier::new(geom.n_theta);
        let inner = RadialBlock::inner(geom.r_sigma, geom.n_r_in, fd_order);
        let outer = RadialBlock::outer(geom.r_sigma, geom.r_omega, geom.n_r_out, fd_order);
        let theta = fourier.nodes();
        Self { geom, fourier, inner, outer, theta }
    }

    #[inline]
    pub fn n_theta(&self) -> usize {
        self.geom.n_theta
    }

    pub fn with_order(&self, fd_order: usize) -> Self {
        Self::new(self.geom.clone(), fd_order)
    }
}

/// Periodic function on `Σ`, sampled at the angular nodes.
#[derive(Clone, Debug)]
pub struct SurfaceField<T: Real> {
    values: Vec<T>,
    coeffs: OnceLock<Vec<Complex<T>>>,
}

impl<T: Real> PartialEq for SurfaceField<T> {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl<T: Real> SurfaceField<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values, coeffs: OnceLock::new() }
    }

    pub fn constant(n: usize, v: T) -> Self {
        Self::new(vec![v; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, T::zero())
    }

    pub fn from_fn(theta: &[T], f: impl Fn(T) -> T) -> Self {
        Self::new(theta.iter().map(|&t| f(t)).collect())
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coeffs(&self, f: &Fourier<T>) -> &[Complex<T>] {
        self.coeffs.get_or_init(|| f.forward(&self.values))
    }

    pub fn derivative(&self, f: &Fourier<T>, order: u32) -> Vec<T> {
        if order == 0 {
            return self.values.clone();
        }
        let c: Vec<Complex<T>> = self
            .coeffs(f)
            .iter()
            .enumerate()
            .map(|(j, &c)| c * f.derivative_symbol(j, order))
            .collect();
        f.inverse(&c)
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / T::of_usize(self.len())
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn oscillation(&self) -> T {
        let (lo, hi) = self
            .values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self::new(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        Self::new(self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    /// Integral `∮ f dθ` by the trapezoidal rule (exact for resolved trig polynomials).
    pub fn integrate_dtheta(&self) -> T {
        self.mean() * T::TAU()
    }
}

/// Tangential component (along `e_θ`) of `∇_Σ f`.
pub fn surface_gradient<T: Real>(geom: &ReferenceGeometry<T>, f: &Fourier<T>, field: &SurfaceField<T>) -> SurfaceField<T> {
    let inv_r = T::one() / geom.r_sigma;
    SurfaceField::new(field.derivative(f, 1).into_iter().map(|v| v * inv_r).collect())
}

/// `div_Σ` of the tangent field `v e_θ`.
pub fn surface_divergence<T: Real>(geom: &ReferenceGeometry<T>, f: &Fourier<T>, v: &SurfaceField<T>) -> SurfaceField<T> {
    surface_gradient(geom, f, v)
}

pub fn laplace_beltrami<T: Real>(geom: &ReferenceGeometry<T>, f: &Fourier<T>, field: &SurfaceField<T>) -> SurfaceField<T> {
    let s = T::one() / (geom.r_sigma * geom.r_sigma);
    SurfaceField::new(field.derivative(f, 2).into_iter().map(|v| v * s).collect())
}

/// `div_Σ{σ P_Σ}` split into (normal, tangential) components:
/// `(σ κ_Σ, ∂_θ σ / R_σ)`.
pub fn projector_divergence<T: Real>(
    geom: &ReferenceGeometry<T>,
    f: &Fourier<T>,
    sigma: &SurfaceField<T>,
) -> (SurfaceField<T>, SurfaceField<T>) {
    let k = geom.mean_curvature();
    (sigma.map(|s| s * k), surface_gradient(geom, f, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> ReferenceGeometry<f64> {
        ReferenceGeometry::new(2.0, 1.0, 32, 8, 8, 0.5).unwrap()
    }

    #[test]
    fn signed_distance_examples() {
        let g = geom();
        assert_eq!(g.signed_distance([1.0, 0.0]), 0.0);
        assert_eq!(g.signed_distance([0.0, 0.0]), -1.0);
        assert!((g.signed_distance([1.1, 0.0]) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn metric_projection_examples() {
        let g = geom();
        assert_eq!(g.metric_projection([2.0, 0.0]).unwrap(), [1.0, 0.0]);
        let p = g.metric_projection([0.0, 0.5]).unwrap();
        assert!(p[0].abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let on = [0.6, 0.8];
        let q = g.metric_projection(on).unwrap();
        assert!((q[0] - 0.6).abs() < 1e-15 && (q[1] - 0.8).abs() < 1e-15);
        assert_eq!(g.metric_projection([0.0, 0.0]), Err(FlowError::SingularProjection));
    }

    #[test]
    fn tube_size_examples() {
        assert_eq!(geom().tube_size(), 1.0);
        let g = ReferenceGeometry::<f64>::new(2.0, 1.5, 32, 8, 8, 0.25).unwrap();
        assert_eq!(g.tube_size(), 0.5);
        assert!(g.tube_size() <= 1.0 / g.principal_curvature().abs());
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(ReferenceGeometry::new(1.0, 1.5, 32, 8, 8, 0.1).is_err());
        assert!(ReferenceGeometry::new(2.0, 1.0, 32, 8, 8, 1.0).is_err());
        assert!(ReferenceGeometry::new(2.0, 1.0, 48, 8, 8, 0.5).is_err());
    }

    #[test]
    fn projection_round_trip_in_tube() {
        let g = geom();
        for &(r, t) in &[(0.3, 0.1), (1.7, 2.0), (1.0, -1.0), (0.05, 3.0)] {
            let x = [r * f64::cos(t), r * f64::sin(t)];
            let p = g.metric_projection(x).unwrap();
            let d = g.signed_distance(x);
            let th = p[1].atan2(p[0]);
            let n = g.normal(th);
            assert!((p[0] + d * n[0] - x[0]).abs() < 1e-12);
            assert!((p[1] + d * n[1] - x[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn laplace_beltrami_eigenfunctions() {
        let g = ReferenceGeometry::new(2.0, 0.7, 64, 8, 8, 0.3).unwrap();
        let f = g.fourier();
        let th = f.nodes();
        for k in 0..32usize {
            let cosk = SurfaceField::from_fn(&th, |t| (k as f64 * t).cos());
            let lb = laplace_beltrami(&g, &f, &cosk);
            let lam = -((k * k) as f64) / (0.7 * 0.7);
            for (j, &t) in th.iter().enumerate() {
                assert!((lb.values()[j] - lam * (k as f64 * t).cos()).abs() < 1e-10 * (1.0 + lam.abs()));
            }
        }
        let c = SurfaceField::constant(64, 3.0);
        assert!(surface_gradient(&g, &f, &c).sup_norm() < 1e-14);
    }

    #[test]
    fn projector_divergence_matches_curve_differentiation() {
        // d/ds (σ τ) along the circle with centered differences in θ
        let g = geom();
        let f = g.fourier();
        let th = f.nodes();
        let sigma = SurfaceField::constant(32, 0.8);
        let (nrm, tan) = projector_divergence(&g, &f, &sigma);
        let h = 1e-5;
        for (j, &t) in th.iter().enumerate() {
            let tau = |a: f64| g.tangent(a);
            let dp = tau(t + h);
            let dm = tau(t - h);
            let d = [(dp[0] - dm[0]) / (2.0 * h) * 0.8, (dp[1] - dm[1]) / (2.0 * h) * 0.8];
            let n = g.normal(t);
            let normal_part = d[0] * n[0] + d[1] * n[1];
            assert!((normal_part - nrm.values()[j]).abs() < 1e-8);
            assert!((nrm.values()[j] + 0.8).abs() < 1e-15);
            assert!(tan.values()[j].abs() < 1e-14);
        }
    }
}

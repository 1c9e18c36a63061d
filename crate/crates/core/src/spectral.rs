//! Trigonometric interpolation on a uniform periodic grid.
//!
//! Coefficients follow `f(θ) = Σ_k f̂_k e^{ikθ}` with `f̂_k = (1/N) Σ_j f_j e^{-ikθ_j}`,
//! wavenumbers stored in FFT order. The Nyquist coefficient is treated as a
//! cosine mode: odd derivatives annihilate it.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

#[derive(Clone)]
pub struct Fourier<T: Real> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Fourier<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fourier").field("n", &self.n).finish()
    }
}

impl<T: Real> Fourier<T> {
    pub fn new(n: usize) -> Self {
        assert!(n >= 4 && n.is_power_of_two(), "angular resolution must be a power of two >= 4");
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Signed wavenumber of FFT slot `j`.
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    #[inline]
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    pub fn nodes(&self) -> Vec<T> {
        let h = T::TAU() / T::of_usize(self.n);
        (0..self.n).map(|j| h * T::of_usize(j)).collect()
    }

    pub fn forward(&self, values: &[T]) -> Vec<Complex<T>> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fwd.process(&mut buf);
        let scale = T::one() / T::of_usize(self.n);
        for c in &mut buf {
            *c = *c * scale;
        }
        buf
    }

    /// Inverse transform; the imaginary part of the result is discarded.
    pub fn inverse(&self, coeffs: &[Complex<T>]) -> Vec<T> {
        debug_assert_eq!(coeffs.len(), self.n);
        let mut buf = coeffs.to_vec();
        self.inv.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Full spectrum from the non-negative half `k = 0..=N/2` of a real signal.
    pub fn from_half(&self, half: &[Complex<T>]) -> Vec<Complex<T>> {
        debug_assert_eq!(half.len(), self.n / 2 + 1);
        let mut full = vec![Complex::new(T::zero(), T::zero()); self.n];
        full[..=self.n / 2].copy_from_slice(half);
        full[0].im = T::zero();
        full[self.n / 2].im = T::zero();
        for k in 1..self.n / 2 {
            full[self.n - k] = half[k].conj();
        }
        full
    }

    pub fn half(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut c = self.forward(values);
        c.truncate(self.n / 2 + 1);
        c
    }

    pub fn from_half_real(&self, half: &[Complex<T>]) -> Vec<T> {
        self.inverse(&self.from_half(half))
    }

    /// Multiplier of the `order`-th derivative for FFT slot `j`.
    pub fn derivative_symbol(&self, j: usize, order: u32) -> Complex<T> {
        let k = self.wavenumber(j);
        if order % 2 == 1 && j == self.n / 2 {
            return Complex::new(T::zero(), T::zero());
        }
        let kk = T::from_i64(k).unwrap();
        let ik = Complex::new(T::zero(), kk);
        let mut m = Complex::new(T::one(), T::zero());
        for _ in 0..order {
            m = m * ik;
        }
        m
    }

    /// Spectral derivative d^order/dθ^order of periodic samples.
    pub fn derivative(&self, values: &[T], order: u32) -> Vec<T> {
        if order == 0 {
            return values.to_vec();
        }
        let mut c = self.forward(values);
        for (j, cj) in c.iter_mut().enumerate() {
            *cj = *cj * self.derivative_symbol(j, order);
        }
        self.inverse(&c)
    }

    /// Evaluates the trigonometric interpolant at an arbitrary angle.
    pub fn interpolate(&self, coeffs: &[Complex<T>], theta: T) -> T {
        let mut acc = coeffs[0].re;
        let two = T::lit(2.0);
        for k in 1..self.n / 2 {
            let e = Complex::from_polar(T::one(), T::of_usize(k) * theta);
            acc += two * (coeffs[k] * e).re;
        }
        let kn = T::of_usize(self.n / 2);
        acc += coeffs[self.n / 2].re * (kn * theta).cos();
        acc
    }

    /// Resamples periodic data to a different power-of-two resolution by
    /// zero padding or truncation of the spectrum.
    pub fn resample(&self, values: &[T], target: &Fourier<T>) -> Vec<T> {
        let half = self.half(values);
        let m = target.len() / 2;
        let mut out = vec![Complex::new(T::zero(), T::zero()); m + 1];
        for k in 0..=m.min(self.n / 2) {
            out[k] = half[k];
        }
        if target.len() > self.n {
            // the source Nyquist mode is a cosine: split evenly between ±N/2
            let k = self.n / 2;
            out[k] = half[k] * T::lit(0.5);
        } else if target.len() < self.n {
            out[m] = Complex::new(out[m].re, T::zero());
        }
        target.from_half_real(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_trig_polynomial_is_exact() {
        let f = Fourier::<f64>::new(32);
        let th = f.nodes();
        let v: Vec<f64> = th.iter().map(|&t| (3.0 * t).sin() + 0.5 * (5.0 * t).cos()).collect();
        let d1 = f.derivative(&v, 1);
        let d2 = f.derivative(&v, 2);
        for (j, &t) in th.iter().enumerate() {
            let e1 = 3.0 * (3.0 * t).cos() - 2.5 * (5.0 * t).sin();
            let e2 = -9.0 * (3.0 * t).sin() - 12.5 * (5.0 * t).cos();
            assert!((d1[j] - e1).abs() < 1e-12);
            assert!((d2[j] - e2).abs() < 1e-11);
        }
    }

    #[test]
    fn half_spectrum_round_trip() {
        let f = Fourier::<f64>::new(16);
        let v: Vec<f64> = (0..16).map(|j| ((j * j) % 7) as f64 - 2.0).collect();
        let back = f.from_half_real(&f.half(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn interpolation_matches_nodes_and_resample_up_is_exact() {
        let f = Fourier::<f64>::new(16);
        let g = Fourier::<f64>::new(64);
        let v: Vec<f64> = f.nodes().iter().map(|&t| (2.0 * t).cos() + (7.0 * t).sin()).collect();
        let c = f.forward(&v);
        let x: f64 = 0.37;
        let exact = (2.0 * x).cos() + (7.0 * x).sin();
        assert!((f.interpolate(&c, x) - exact).abs() < 1e-12);
        let up = f.resample(&v, &g);
        for (t, u) in g.nodes().iter().zip(&up) {
            assert!((u - ((2.0 * t).cos() + (7.0 * t).sin())).abs() < 1e-12);
        }
    }
}

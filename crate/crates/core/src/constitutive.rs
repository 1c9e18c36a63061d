//! Equations of state, adsorption isotherms and the free-energy densities.
//!
//! The chemical potential is normalized at a reference surface concentration
//! `s_ref`: `μ_Γ(s) = −∫_{s_ref}^s σ'(r)/r dr`. Moving `s_ref` shifts the total
//! energy by a multiple of the (conserved) surfactant mass.

use crate::error::{FlowError, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EquationOfState<T> {
    /// `σ(s) = σ_0 − β s`.
    Linear { sigma0: T, beta: T },
    /// `σ(s) = σ_0 + E s_∞ ln(1 − s/s_∞)`.
    Szyszkowski { sigma0: T, e: T, s_inf: T },
}

impl<T: Real> EquationOfState<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Linear { sigma0, beta } => sigma0 > T::zero() && beta > T::zero(),
            Self::Szyszkowski { sigma0, e, s_inf } => sigma0 > T::zero() && e > T::zero() && s_inf > T::zero(),
        };
        if ok {
            Ok(())
        } else {
            Err(FlowError::Material(format!("equation of state parameters must be positive: {self:?}")))
        }
    }

    /// Upper end of the admissible range, where `σ` reaches zero or the
    /// concentration saturates.
    pub fn s_max(&self) -> T {
        match *self {
            Self::Linear { sigma0, beta } => sigma0 / beta,
            Self::Szyszkowski { sigma0, e, s_inf } => s_inf * (T::one() - (-sigma0 / (e * s_inf)).exp()),
        }
    }

    pub fn sigma(&self, s: T) -> T {
        match *self {
            Self::Linear { sigma0, beta } => sigma0 - beta * s,
            Self::Szyszkowski { sigma0, e, s_inf } => sigma0 + e * s_inf * (-s / s_inf).ln_1p(),
        }
    }

    pub fn d1(&self, s: T) -> T {
        match *self {
            Self::Linear { beta, .. } => -beta,
            Self::Szyszkowski { e, s_inf, .. } => -e * s_inf / (s_inf - s),
        }
    }

    pub fn d2(&self, s: T) -> T {
        match *self {
            Self::Linear { .. } => T::zero(),
            Self::Szyszkowski { e, s_inf, .. } => -e * s_inf / ((s_inf - s) * (s_inf - s)),
        }
    }

    /// Closed form of `−∫_{s_ref}^s σ'(r)/r dr`.
    fn mu(&self, s: T, s_ref: T) -> T {
        match *self {
            Self::Linear { beta, .. } => beta * (s / s_ref).ln(),
            Self::Szyszkowski { e, s_inf, .. } => e * ((s * (s_inf - s_ref)) / (s_ref * (s_inf - s))).ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Isotherm<T> {
    /// `α(c) = K c`.
    Henry { k: T },
    /// `α(c) = s_∞ K c / (1 + K c)`.
    Langmuir { s_inf: T, k: T },
}

impl<T: Real> Isotherm<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Henry { k } => k > T::zero(),
            Self::Langmuir { s_inf, k } => s_inf > T::zero() && k > T::zero(),
        };
        if ok {
            Ok(())
        } else {
            Err(FlowError::Material(format!("isotherm parameters must be positive: {self:?}")))
        }
    }

    pub fn alpha(&self, c: T) -> T {
        match *self {
            Self::Henry { k } => k * c,
            Self::Langmuir { s_inf, k } => s_inf * k * c / (T::one() + k * c),
        }
    }

    pub fn d1(&self, c: T) -> T {
        match *self {
            Self::Henry { k } => k,
            Self::Langmuir { s_inf, k } => {
                let q = T::one() + k * c;
                s_inf * k / (q * q)
            }
        }
    }

    pub fn inverse(&self, s: T) -> T {
        match *self {
            Self::Henry { k } => s / k,
            Self::Langmuir { s_inf, k } => s / (k * (s_inf - s)),
        }
    }
}

/// Material parameters of the two phases and the surfactant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialModel<T> {
    pub rho_minus: T,
    pub rho_plus: T,
    pub eta_minus: T,
    pub eta_plus: T,
    pub d: T,
    pub d_gamma: T,
    pub eos: EquationOfState<T>,
    pub isotherm: Isotherm<T>,
    pub s_ref: T,
}

impl<T: Real> MaterialModel<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("rho_minus", self.rho_minus),
            ("rho_plus", self.rho_plus),
            ("eta_minus", self.eta_minus),
            ("eta_plus", self.eta_plus),
            ("d", self.d),
            ("d_gamma", self.d_gamma),
            ("s_ref", self.s_ref),
        ];
        for (name, v) in pos {
            if !(v > T::zero()) {
                return Err(FlowError::Material(format!("{name} must be positive, got {v}")));
            }
        }
        self.eos.validate()?;
        self.isotherm.validate()?;
        if self.s_ref >= self.eos.s_max() {
            return Err(FlowError::Material("s_ref outside the admissible range of the equation of state".into()));
        }
        Ok(())
    }

    pub fn rho(&self, inner: bool) -> T {
        if inner {
            self.rho_minus
        } else {
            self.rho_plus
        }
    }

    pub fn eta(&self, inner: bool) -> T {
        if inner {
            self.eta_minus
        } else {
            self.eta_plus
        }
    }

    fn check_surface(&self, s: T) -> Result<()> {
        if !(s > T::zero() && s < self.eos.s_max()) {
            return Err(FlowError::Domain(format!(
                "surface concentration {s} outside (0, {})",
                self.eos.s_max()
            )));
        }
        Ok(())
    }

    fn check_bulk(&self, c: T) -> Result<()> {
        if !(c >= T::zero()) {
            return Err(FlowError::Domain(format!("bulk concentration {c} is negative")));
        }
        self.check_surface(self.isotherm.alpha(c)).or_else(|e| if c == T::zero() { Ok(()) } else { Err(e) })
    }

    pub fn sigma(&self, s: T) -> T {
        self.eos.sigma(s)
    }

    /// `μ_Γ(s)`.
    pub fn chemical_potential(&self, s: T) -> Result<T> {
        self.check_surface(s)?;
        Ok(self.eos.mu(s, self.s_ref))
    }

    /// `μ_Γ` by quadrature of `−σ'(r)/r`, an independent check of the closed forms.
    pub fn chemical_potential_quadrature(&self, s: T) -> Result<T> {
        self.check_surface(s)?;
        let f = |r: T| -self.eos.d1(r) / r;
        Ok(integrate(&f, self.s_ref, s, T::lit(1e-14)))
    }

    /// Closed form `φ(c) = A c (ln(B c) − 1)` when `μ_Γ∘α` is logarithmic.
    fn phi_closed(&self) -> Option<(T, T)> {
        match (self.eos, self.isotherm) {
            (EquationOfState::Linear { beta, .. }, Isotherm::Henry { k }) => Some((beta, k / self.s_ref)),
            (EquationOfState::Szyszkowski { e, s_inf, .. }, Isotherm::Langmuir { s_inf: s2, k }) if s_inf == s2 => {
                Some((e, k * (s_inf - self.s_ref) / self.s_ref))
            }
            _ => None,
        }
    }

    /// Bulk free energy density `φ(c) = ∫_0^c μ_Γ(α(r)) dr`.
    pub fn phi(&self, c: T) -> Result<T> {
        self.check_bulk(c)?;
        if c == T::zero() {
            return Ok(T::zero());
        }
        match self.phi_closed() {
            Some((a, b)) => Ok(a * c * ((b * c).ln() - T::one())),
            None => self.phi_quadrature(c),
        }
    }

    /// `φ` by adaptive quadrature after `r = c x²`, which removes the
    /// logarithmic singularity at zero.
    pub fn phi_quadrature(&self, c: T) -> Result<T> {
        self.check_bulk(c)?;
        if c == T::zero() {
            return Ok(T::zero());
        }
        let two = T::lit(2.0);
        let f = |x: T| {
            if x == T::zero() {
                return T::zero();
            }
            let r = c * x * x;
            two * c * x * self.eos.mu(self.isotherm.alpha(r), self.s_ref)
        };
        Ok(integrate(&f, T::zero(), T::one(), T::lit(1e-15) * (T::one() + c)))
    }

    /// `φ'(c) = μ_Γ(α(c))`.
    pub fn phi_d1(&self, c: T) -> Result<T> {
        self.chemical_potential(self.isotherm.alpha(c))
    }

    /// `φ''(c) = −σ'(α(c)) α'(c) / α(c)`.
    pub fn phi_d2(&self, c: T) -> Result<T> {
        self.check_bulk(c)?;
        let a = self.isotherm.alpha(c);
        Ok(-self.eos.d1(a) * self.isotherm.d1(c) / a)
    }

    /// Surface free energy density `φ_Γ(s) = σ(s) + s μ_Γ(s)`.
    pub fn phi_gamma(&self, s: T) -> Result<T> {
        Ok(self.eos.sigma(s) + s * self.chemical_potential(s)?)
    }

    /// `φ_Γ'(s) = μ_Γ(s)`.
    pub fn phi_gamma_d1(&self, s: T) -> Result<T> {
        self.chemical_potential(s)
    }

    /// `φ_Γ''(s) = −σ'(s)/s`.
    pub fn phi_gamma_d2(&self, s: T) -> Result<T> {
        self.check_surface(s)?;
        Ok(-self.eos.d1(s) / s)
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn integrate<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, tol: T) -> T {
    let m = (a + b) * T::lit(0.5);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    adapt(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<T: Real>(f: &impl Fn(T) -> T, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
    let m = (a + b) * T::lit(0.5);
    let (lm, rm) = ((a + m) * T::lit(0.5), (m + b) * T::lit(0.5));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    let half = tol * T::lit(0.5);
    adapt(f, a, m, fa, flm, fm, left, half, depth - 1) + adapt(f, m, b, fm, frm, fb, right, half, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn henry_linear() -> MaterialModel<f64> {
        MaterialModel {
            rho_minus: 1.0,
            rho_plus: 1.0,
            eta_minus: 1.0,
            eta_plus: 1.0,
            d: 0.5,
            d_gamma: 0.1,
            eos: EquationOfState::Linear { sigma0: 1.0, beta: 0.2 },
            isotherm: Isotherm::Henry { k: 2.0 },
            s_ref: 0.5,
        }
    }

    pub fn langmuir_szyszkowski() -> MaterialModel<f64> {
        MaterialModel {
            eos: EquationOfState::Szyszkowski { sigma0: 1.0, e: 0.3, s_inf: 2.0 },
            isotherm: Isotherm::Langmuir { s_inf: 2.0, k: 1.5 },
            ..henry_linear()
        }
    }

    #[test]
    fn chemical_potential_examples() {
        let m = henry_linear();
        assert_eq!(m.chemical_potential(0.5).unwrap(), 0.0);
        assert!((m.chemical_potential(0.5 * std::f64::consts::E).unwrap() - 0.2).abs() < 1e-15);
        let q = m.chemical_potential_quadrature(0.5 * std::f64::consts::E).unwrap();
        assert!((q - 0.2).abs() < 1e-10);
        let l = langmuir_szyszkowski();
        for &s in &[0.05, 0.3, 0.5, 1.0, 1.5, 1.6] {
            let a = l.chemical_potential(s).unwrap();
            let b = l.chemical_potential_quadrature(s).unwrap();
            assert!((a - b).abs() < 1e-10, "s={s}: {a} vs {b}");
        }
        assert!(m.chemical_potential(0.0).is_err());
        assert!(m.chemical_potential(6.0).is_err());
    }

    #[test]
    fn phi_closed_form_matches_quadrature() {
        for m in [henry_linear(), langmuir_szyszkowski()] {
            assert_eq!(m.phi(0.0).unwrap(), 0.0);
            for &c in &[1e-3, 0.05, 0.4, 1.0, 2.0] {
                let a = m.phi(c).unwrap();
                let b = m.phi_quadrature(c).unwrap();
                assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "c={c}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        for m in [henry_linear(), langmuir_szyszkowski()] {
            for e in -3..=1 {
                let c = 0.5 * 10f64.powf(e as f64 * 0.5);
                let h = 1e-4 * c;
                let fd = (m.phi(c + h).unwrap() - 2.0 * m.phi(c).unwrap() + m.phi(c - h).unwrap()) / (h * h);
                let ex = m.phi_d2(c).unwrap();
                assert!(((fd - ex) / ex).abs() < 1e-6, "c={c}: {fd} vs {ex}");
                assert!(ex > 0.0);
            }
        }
    }

    #[test]
    fn reference_shift_is_affine() {
        let a = henry_linear();
        let b = MaterialModel { s_ref: 0.8, ..a };
        let d0 = a.chemical_potential(0.3).unwrap() - b.chemical_potential(0.3).unwrap();
        let d1 = a.chemical_potential(0.9).unwrap() - b.chemical_potential(0.9).unwrap();
        assert!((d0 - d1).abs() < 1e-14);
        assert!((a.phi_gamma_d2(0.7).unwrap() - b.phi_gamma_d2(0.7).unwrap()).abs() < 1e-15);
    }
}

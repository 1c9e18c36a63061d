//! The discrete state of the flow.

use crate::constitutive::MaterialModel;
use crate::error::{FlowError, Result};
use crate::field::BulkField;
use crate::geometry::{PolarGrid, SurfaceField};
use crate::hanzawa::HeightFunction;
use crate::scalar::Real;

/// Velocity on nodes, pressure on cells, interface height, bulk
/// concentration on the exterior nodes and surface concentration on Σ.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState<T: Real> {
    pub u: BulkField<T>,
    pub p: BulkField<T>,
    pub gamma: HeightFunction<T>,
    pub c: BulkField<T>,
    pub c_sigma: SurfaceField<T>,
    pub t: T,
}

impl<T: Real> FlowState<T> {
    /// Fluid at rest on the reference circle with uniform bulk concentration
    /// `c_bulk` and the matching surface concentration `α(c_bulk)`. The
    /// pressure carries the Laplace jump `p_- − p_+ = σ/R_σ`.
    pub fn equilibrium(grid: &PolarGrid<T>, model: &MaterialModel<T>, c_bulk: T) -> Result<Self> {
        let n = grid.n_theta();
        let s = model.isotherm.alpha(c_bulk);
        model.chemical_potential(s)?;
        let mut p = BulkField::pressure(grid);
        let jump = model.sigma(s) / grid.geom.r_sigma;
        p.inner[0].iter_mut().for_each(|v| *v = jump);
        let mut c = BulkField::exterior(grid);
        c.outer[0].iter_mut().for_each(|v| *v = c_bulk);
        Ok(Self {
            u: BulkField::velocity(grid),
            p,
            gamma: HeightFunction::zero(n),
            c,
            c_sigma: SurfaceField::constant(n, s),
            t: T::zero(),
        })
    }

    pub fn n_theta(&self) -> usize {
        self.c_sigma.len()
    }

    /// Sup-norm distance over every state component (time excluded).
    pub fn max_diff(&self, other: &Self) -> T {
        let surf = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()));
        self.u
            .max_diff(&other.u)
            .max(self.p.max_diff(&other.p))
            .max(self.c.max_diff(&other.c))
            .max(surf(self.gamma.values(), other.gamma.values()))
            .max(surf(self.c_sigma.values(), other.c_sigma.values()))
    }

    /// Positivity of both concentrations.
    pub fn check_positive(&self) -> Result<()> {
        let cmin = self.c.outer[0].iter().fold(T::infinity(), |m, &v| m.min(v));
        let smin = self.c_sigma.values().iter().fold(T::infinity(), |m, &v| m.min(v));
        if !(cmin > T::zero() && smin > T::zero()) {
            return Err(FlowError::Domain(format!("concentration lost positivity (min c = {cmin}, min c_Σ = {smin})")));
        }
        Ok(())
    }
}

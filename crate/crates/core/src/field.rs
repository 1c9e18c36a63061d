//! Fields on the two-block polar grid.

use crate::geometry::PolarGrid;
use crate::scalar::Real;

/// Where the values of a [`BulkField`] live radially.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// Grid nodes; the interface ring is stored once per block.
    Nodes,
    /// Cell centers: `i h` inside (the first one is the pole) and
    /// `R_σ + (j + 1/2) h_o` outside.
    Cells,
}

/// Scalar or vector field stored per block as `comps` row-major arrays
/// `values[i * n_theta + j]`. A block may be empty (the bulk concentration
/// only lives in the exterior phase).
#[derive(Clone, Debug, PartialEq)]
pub struct BulkField<T> {
    pub location: Location,
    pub n_theta: usize,
    pub inner: Vec<Vec<T>>,
    pub outer: Vec<Vec<T>>,
}

impl<T: Real> BulkField<T> {
    fn rows(grid: &PolarGrid<T>, location: Location) -> (usize, usize) {
        let (ni, no) = (grid.inner.len(), grid.outer.len());
        match location {
            Location::Nodes => (ni, no),
            Location::Cells => (ni, no - 1),
        }
    }

    pub fn zeros(grid: &PolarGrid<T>, comps: usize, location: Location) -> Self {
        let nt = grid.n_theta();
        let (ri, ro) = Self::rows(grid, location);
        Self {
            location,
            n_theta: nt,
            inner: vec![vec![T::zero(); ri * nt]; comps],
            outer: vec![vec![T::zero(); ro * nt]; comps],
        }
    }

    pub fn velocity(grid: &PolarGrid<T>) -> Self {
        Self::zeros(grid, 2, Location::Nodes)
    }

    pub fn pressure(grid: &PolarGrid<T>) -> Self {
        Self::zeros(grid, 1, Location::Cells)
    }

    /// Scalar on the exterior block only.
    pub fn exterior(grid: &PolarGrid<T>) -> Self {
        let mut f = Self::zeros(grid, 1, Location::Nodes);
        f.inner = vec![Vec::new()];
        f
    }

    /// Fills every component from `f(component, r, θ)` at the field's own radii.
    pub fn from_fn(grid: &PolarGrid<T>, comps: usize, location: Location, f: impl Fn(usize, T, T) -> T) -> Self {
        let mut out = Self::zeros(grid, comps, location);
        let (ri, ro) = Self::radii(grid, location);
        let nt = grid.n_theta();
        for c in 0..comps {
            for (i, &r) in ri.iter().enumerate() {
                for j in 0..nt {
                    out.inner[c][i * nt + j] = f(c, r, grid.theta[j]);
                }
            }
            for (i, &r) in ro.iter().enumerate() {
                for j in 0..nt {
                    out.outer[c][i * nt + j] = f(c, r, grid.theta[j]);
                }
            }
        }
        out
    }

    /// Radii of the storage rows for each block.
    pub fn radii(grid: &PolarGrid<T>, location: Location) -> (Vec<T>, Vec<T>) {
        match location {
            Location::Nodes => (grid.inner.r.clone(), grid.outer.r.clone()),
            Location::Cells => {
                let h = grid.inner.h;
                let ri = (0..grid.inner.len()).map(|i| T::of_usize(i) * h).collect();
                let ro = grid.outer.r.windows(2).map(|w| (w[0] + w[1]) * T::lit(0.5)).collect();
                (ri, ro)
            }
        }
    }

    #[inline]
    pub fn comps(&self) -> usize {
        self.inner.len()
    }

    pub fn inner_rows(&self) -> usize {
        self.inner[0].len() / self.n_theta
    }

    pub fn outer_rows(&self) -> usize {
        self.outer[0].len() / self.n_theta
    }

    pub fn inner_row(&self, comp: usize, i: usize) -> &[T] {
        &self.inner[comp][i * self.n_theta..(i + 1) * self.n_theta]
    }

    pub fn outer_row(&self, comp: usize, j: usize) -> &[T] {
        &self.outer[comp][j * self.n_theta..(j + 1) * self.n_theta]
    }

    /// Trace on Σ from the interior block (last inner node row).
    pub fn trace_inner(&self, comp: usize) -> Vec<T> {
        self.inner_row(comp, self.inner_rows() - 1).to_vec()
    }

    /// Trace on Σ from the exterior block (first outer node row).
    pub fn trace_outer(&self, comp: usize) -> Vec<T> {
        self.outer_row(comp, 0).to_vec()
    }

    /// `[[φ]]_Σ = outer trace − inner trace` for node fields.
    pub fn jump(&self, comp: usize) -> Vec<T> {
        debug_assert_eq!(self.location, Location::Nodes);
        self.trace_outer(comp).iter().zip(self.trace_inner(comp)).map(|(&o, i)| o - i).collect()
    }

    pub fn sup_norm(&self) -> T {
        self.inner
            .iter()
            .chain(self.outer.iter())
            .flat_map(|v| v.iter())
            .fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// Componentwise `self + a * other`.
    pub fn axpy(&mut self, a: T, other: &Self) {
        for (x, y) in self.inner.iter_mut().zip(&other.inner).chain(self.outer.iter_mut().zip(&other.outer)) {
            for (p, &q) in x.iter_mut().zip(y) {
                *p += a * q;
            }
        }
    }

    pub fn max_diff(&self, other: &Self) -> T {
        self.inner
            .iter()
            .zip(&other.inner)
            .chain(self.outer.iter().zip(&other.outer))
            .flat_map(|(x, y)| x.iter().zip(y))
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let g = |v: &Vec<T>| v.iter().map(|&x| f(x)).collect::<Vec<T>>();
        Self {
            location: self.location,
            n_theta: self.n_theta,
            inner: self.inner.iter().map(g).collect(),
            outer: self.outer.iter().map(g).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ReferenceGeometry;

    #[test]
    fn layouts_and_jump() {
        let g = ReferenceGeometry::<f64>::new(2.0, 1.0, 8, 6, 7, 0.5).unwrap().grid(2);
        let p = BulkField::pressure(&g);
        assert_eq!((p.inner_rows(), p.outer_rows()), (6, 6));
        let (ri, ro) = BulkField::radii(&g, Location::Cells);
        assert_eq!(ri[0], 0.0);
        assert!((ro[0] - (1.0 + 1.0 / 12.0)).abs() < 1e-15);
        let mut f = BulkField::from_fn(&g, 1, Location::Nodes, |_, r, _| r);
        f.outer[0].iter_mut().for_each(|v| *v *= 2.0);
        assert!(f.jump(0).iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let c = BulkField::exterior(&g);
        assert_eq!(c.inner[0].len(), 0);
        assert_eq!(c.outer_rows(), 7);
    }
}

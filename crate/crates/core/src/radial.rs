//! Radial finite-difference machinery for the two blocks of the polar grid.
//!
//! The inner block holds nodes `r_i = (i + 1/2) h`, so the pole is never a
//! grid point; stencils that reach across it use mirrored ghost values
//! (`f(-r, θ) = ± f(r, θ + π)`). The outer block is uniform from the
//! interface ring to the wall.

use crate::scalar::Real;

/// Behavior of a field under continuation through the pole.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Scalars: `f(-r, θ) = f(r, θ + π)`.
    Even,
    /// Polar vector components: `f(-r, θ) = -f(r, θ + π)`.
    Odd,
}

impl Parity {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Parity::Even => T::one(),
            Parity::Odd => -T::one(),
        }
    }
}

/// Finite-difference weights (Fornberg) for the `m`-th derivative at `x0`.
pub fn fd_weights<T: Real>(x0: T, nodes: &[T], m: usize) -> Vec<T> {
    let n = nodes.len();
    assert!(n > m, "stencil too small for derivative order");
    let mut c = vec![vec![T::zero(); m + 1]; n];
    let mut c1 = T::one();
    let mut c4 = nodes[0] - x0;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (T::of_usize(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - T::of_usize(k) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    /// `(0, R_sigma]`, half-offset from the pole, last node on the interface.
    Inner,
    /// `[R_sigma, R_omega]`, first node on the interface, last on the wall.
    Outer,
}

/// Stencil for one node: weights applied to the extended array starting at `start`.
#[derive(Clone, Debug)]
struct Stencil<T> {
    start: usize,
    w: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct RadialBlock<T: Real> {
    pub kind: BlockKind,
    pub r: Vec<T>,
    pub h: T,
    order: usize,
    ghosts: usize,
    d1: Vec<Stencil<T>>,
    d2: Vec<Stencil<T>>,
}

impl<T: Real> RadialBlock<T> {
    pub fn inner(r_sigma: T, n: usize, order: usize) -> Self {
        assert!(n >= 4, "inner block needs at least 4 nodes");
        let h = r_sigma / (T::of_usize(n) - T::lit(0.5));
        let mut r: Vec<T> = (0..n).map(|i| (T::of_usize(i) + T::lit(0.5)) * h).collect();
        r[n - 1] = r_sigma;
        Self::build(BlockKind::Inner, r, h, order)
    }

    pub fn outer(r_sigma: T, r_omega: T, n: usize, order: usize) -> Self {
        assert!(n >= 4, "outer block needs at least 4 nodes");
        let h = (r_omega - r_sigma) / T::of_usize(n - 1);
        let mut r: Vec<T> = (0..n).map(|j| r_sigma + T::of_usize(j) * h).collect();
        r[n - 1] = r_omega;
        Self::build(BlockKind::Outer, r, h, order)
    }

    fn build(kind: BlockKind, r: Vec<T>, h: T, order: usize) -> Self {
        assert!(order >= 2 && order % 2 == 0, "finite-difference order must be even");
        let n = r.len();
        let ghosts = if kind == BlockKind::Inner { (order / 2 + 1).min(n) } else { 0 };
        // extended coordinates: mirrored ghosts then the nodes
        let mut x: Vec<T> = (0..ghosts).rev().map(|i| -r[i]).collect();
        x.extend_from_slice(&r);
        let ne = x.len();
        let make = |m: usize| -> Vec<Stencil<T>> {
            let centered = order + 1;
            (0..n)
                .map(|i| {
                    let ie = i + ghosts;
                    let half = order / 2;
                    let (start, len) = if ie >= half && ie + half < ne {
                        (ie - half, centered)
                    } else {
                        let len = if m == 1 { order + 1 } else { order + 2 };
                        let len = len.min(ne);
                        let start = if ie < half { 0 } else { ne - len };
                        (start, len)
                    };
                    Stencil { start, w: fd_weights(x[ie], &x[start..start + len], m) }
                })
                .collect()
        };
        let d1 = make(1);
        let d2 = make(2);
        Self { kind, r, h, order, ghosts, d1, d2 }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.r.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Applies the radial derivative of order `m` (1 or 2) to a block stored
    /// row-major as `values[i * n_theta + j]`.
    pub fn derivative(&self, values: &[T], n_theta: usize, m: usize, parity: Parity) -> Vec<T> {
        let n = self.len();
        debug_assert_eq!(values.len(), n * n_theta);
        let stencils = if m == 1 { &self.d1 } else { &self.d2 };
        let sign: T = parity.sign();
        let half_turn = n_theta / 2;
        let mut out = vec![T::zero(); n * n_theta];
        for (i, st) in stencils.iter().enumerate() {
            for (q, &w) in st.w.iter().enumerate() {
                let e = st.start + q;
                if e < self.ghosts {
                    // ghost mirrors node (ghosts - 1 - e) rotated by π
                    let src = self.ghosts - 1 - e;
                    for j in 0..n_theta {
                        let jj = (j + half_turn) % n_theta;
                        out[i * n_theta + j] += w * sign * values[src * n_theta + jj];
                    }
                } else {
                    let src = e - self.ghosts;
                    for j in 0..n_theta {
                        out[i * n_theta + j] += w * values[src * n_theta + j];
                    }
                }
            }
        }
        out
    }

    /// Stencil of the `m`-th derivative at node `i` as `(source node, weight, mirrored)`;
    /// mirrored entries are ghosts that read the source node rotated by π with the parity sign.
    pub fn stencil(&self, i: usize, m: usize) -> Vec<(usize, T, bool)> {
        let st = if m == 1 { &self.d1[i] } else { &self.d2[i] };
        st.w
            .iter()
            .enumerate()
            .map(|(q, &w)| {
                let e = st.start + q;
                if e < self.ghosts {
                    (self.ghosts - 1 - e, w, true)
                } else {
                    (e - self.ghosts, w, false)
                }
            })
            .collect()
    }

    /// Quadrature weights `∫ f r dr` over the block, one per node.
    pub fn area_weights(&self) -> Vec<T> {
        let n = self.len();
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        let ring = |a: T, b: T| (b * b - a * a) / two;
        (0..n)
            .map(|i| {
                let lo = if i == 0 {
                    match self.kind {
                        BlockKind::Inner => T::zero(),
                        BlockKind::Outer => self.r[0],
                    }
                } else {
                    (self.r[i - 1] + self.r[i]) * half
                };
                let hi = if i + 1 == n { self.r[n - 1] } else { (self.r[i] + self.r[i + 1]) * half };
                ring(lo, hi)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_reproduces_classic_weights() {
        let x = [-1.0f64, 0.0, 1.0];
        let w1 = fd_weights(0.0, &x, 1);
        let w2 = fd_weights(0.0, &x, 2);
        assert!((w1[0] + 0.5).abs() < 1e-15 && w1[1].abs() < 1e-15 && (w1[2] - 0.5).abs() < 1e-15);
        assert!((w2[0] - 1.0).abs() < 1e-15 && (w2[1] + 2.0).abs() < 1e-15 && (w2[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outer_derivatives_exact_on_low_degree_polynomials() {
        let b = RadialBlock::<f64>::outer(1.0, 2.0, 9, 4);
        let v: Vec<f64> = b.r.iter().map(|&r| r.powi(3) - 2.0 * r).collect();
        let d1 = b.derivative(&v, 1, 1, Parity::Even);
        let d2 = b.derivative(&v, 1, 2, Parity::Even);
        for (i, &r) in b.r.iter().enumerate() {
            assert!((d1[i] - (3.0 * r * r - 2.0)).abs() < 1e-10);
            assert!((d2[i] - 6.0 * r).abs() < 1e-9);
        }
    }

    #[test]
    fn inner_stencils_cross_the_pole_with_parity() {
        // f = x = r cos θ : mode 1 scalar, smooth through the pole
        let nt = 8;
        let b = RadialBlock::<f64>::inner(1.0, 8, 2);
        let th: Vec<f64> = (0..nt).map(|j| std::f64::consts::TAU * j as f64 / nt as f64).collect();
        let mut v = vec![0.0; b.len() * nt];
        for i in 0..b.len() {
            for j in 0..nt {
                v[i * nt + j] = b.r[i] * th[j].cos();
            }
        }
        let d1 = b.derivative(&v, nt, 1, Parity::Even);
        let d2 = b.derivative(&v, nt, 2, Parity::Even);
        for i in 0..b.len() {
            for j in 0..nt {
                assert!((d1[i * nt + j] - th[j].cos()).abs() < 1e-12);
                assert!(d2[i * nt + j].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn area_weights_sum_to_annulus_area() {
        let b = RadialBlock::<f64>::outer(1.0, 2.0, 11, 2);
        let s: f64 = b.area_weights().iter().sum();
        assert!((s - 1.5).abs() < 1e-14);
        let c = RadialBlock::<f64>::inner(1.0, 11, 2);
        let s: f64 = c.area_weights().iter().sum();
        assert!((s - 0.5).abs() < 1e-14);
    }
}

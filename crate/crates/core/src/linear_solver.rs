//! Principal linearization: one backward-Euler step with frozen,
//! angle-averaged coefficients, solved mode by mode.
//!
//! The three sub-problems are solved in order: surface concentration, bulk
//! concentration, then the two-phase Stokes system together with the
//! interface height. Every operator acts on increments in the row layout of
//! [`StokesRows`] and the bulk node layout; the Nyquist mode is held at zero.

use num_complex::Complex;
use rayon::prelude::*;

use crate::banded::{BandedLu, BandedMatrix};
use crate::constitutive::MaterialModel;
use crate::discrete::StokesRows;
use crate::error::Result;
use crate::field::BulkField;
use crate::geometry::PolarGrid;
use crate::radial::{Parity, RadialBlock};
use crate::scalar::Real;
use crate::spectral::Fourier;
use crate::state::FlowState;

type C<T> = Complex<T>;

fn cz<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

fn re<T: Real>(v: T) -> C<T> {
    C::new(v, T::zero())
}

/// Coefficients frozen at the reference state of a step.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenCoefficients<T> {
    /// Angular means of `u*` per radial node, `(u_r, u_θ)`.
    pub u_inner: Vec<[T; 2]>,
    pub u_outer: Vec<[T; 2]>,
    /// Angular mean of `u*_θ` on Σ.
    pub u_sigma: T,
    /// Angular mean of `σ(c*_Σ)`.
    pub sigma: T,
    /// `σ'(c*_Σ)` per angle, for the Marangoni term.
    pub sigma_prime: Vec<T>,
    /// `α'([c*]_Σ)` per angle.
    pub alpha_prime: Vec<T>,
}

impl<T: Real> FrozenCoefficients<T> {
    pub fn from_state(grid: &PolarGrid<T>, model: &MaterialModel<T>, z: &FlowState<T>) -> Self {
        let nt = grid.n_theta();
        let means = |v: &[Vec<T>]| -> Vec<[T; 2]> {
            (0..v[0].len() / nt)
                .map(|i| [0, 1].map(|c| v[c][i * nt..(i + 1) * nt].iter().copied().sum::<T>() / T::of_usize(nt)))
                .collect()
        };
        let u_inner = means(&z.u.inner);
        let u_sigma = u_inner.last().map(|u| u[1]).unwrap_or_else(T::zero);
        let s = z.c_sigma.values();
        Self {
            u_outer: means(&z.u.outer),
            u_inner,
            u_sigma,
            sigma: s.iter().map(|&v| model.sigma(v)).sum::<T>() / T::of_usize(nt),
            sigma_prime: s.iter().map(|&v| model.eos.d1(v)).collect(),
            alpha_prime: z.c.outer[0][..nt].iter().map(|&c| model.isotherm.d1(c)).collect(),
        }
    }

    /// Coefficients of the rest state with surface concentration `s`.
    pub fn at_rest(grid: &PolarGrid<T>, model: &MaterialModel<T>, c_bulk: T) -> Self {
        let nt = grid.n_theta();
        let s = model.isotherm.alpha(c_bulk);
        Self {
            u_inner: vec![[T::zero(); 2]; grid.inner.len()],
            u_outer: vec![[T::zero(); 2]; grid.outer.len()],
            u_sigma: T::zero(),
            sigma: model.sigma(s),
            sigma_prime: vec![model.eos.d1(s); nt],
            alpha_prime: vec![model.isotherm.d1(c_bulk); nt],
        }
    }
}

/// Unknown and row numbering of the per-mode Stokes system.
#[derive(Clone, Copy, Debug)]
struct Layout {
    ni: usize,
    no: usize,
}

impl Layout {
    fn inner(&self, i: usize, c: usize) -> usize {
        3 * i + c
    }
    fn gamma(&self) -> usize {
        3 * self.ni
    }
    fn outer(&self, j: usize, c: usize) -> usize {
        3 * self.ni + 1 + 3 * j + c
    }
    fn len(&self) -> usize {
        3 * self.ni + 1 + 3 * (self.no - 1) + 2
    }
}

/// Per-mode factorized principal linearization for one time step.
#[derive(Clone, Debug)]
pub struct LinearSolver<T: Real> {
    pub grid: PolarGrid<T>,
    pub model: MaterialModel<T>,
    pub dt: T,
    pub frozen: FrozenCoefficients<T>,
    stokes: Vec<BandedLu<T>>,
    bulk: Vec<BandedLu<T>>,
}

/// Radial stencil of derivative order `m` at node `i` in mode `k`, mapped to
/// unknown indices through `col`.
fn radial<T: Real>(b: &RadialBlock<T>, i: usize, m: usize, k: usize, parity: Parity, col: impl Fn(usize) -> usize) -> Vec<(usize, C<T>)> {
    let mirror: T = parity.sign::<T>() * if k % 2 == 0 { T::one() } else { -T::one() };
    b.stencil(i, m)
        .into_iter()
        .map(|(src, w, mirrored)| (col(src), re(if mirrored { w * mirror } else { w })))
        .collect()
}

impl<T: Real> LinearSolver<T> {
    pub fn new(grid: &PolarGrid<T>, model: &MaterialModel<T>, dt: T, frozen: FrozenCoefficients<T>) -> Result<Self> {
        let modes: Vec<usize> = (0..grid.n_theta() / 2).collect();
        let mut s = Self { grid: grid.clone(), model: *model, dt, frozen, stokes: Vec::new(), bulk: Vec::new() };
        let stokes: Result<Vec<_>> = modes.par_iter().map(|&k| s.stokes_matrix(k).factor()).collect();
        let bulk: Result<Vec<_>> = modes.par_iter().map(|&k| s.bulk_matrix(k).factor()).collect();
        s.stokes = stokes?;
        s.bulk = bulk?;
        Ok(s)
    }

    fn layout(&self) -> Layout {
        Layout { ni: self.grid.inner.len(), no: self.grid.outer.len() }
    }

    fn rs(&self) -> T {
        self.grid.geom.r_sigma
    }

    /// Diagonal symbol of the surface operator in mode `k`.
    pub fn surface_symbol(&self, k: usize) -> C<T> {
        let kk = T::of_usize(k);
        let rs = self.rs();
        C::new(
            T::one() / self.dt + self.model.d_gamma * kk * kk / (rs * rs),
            kk * self.frozen.u_sigma / rs,
        )
    }

    /// Solves the surface operator for an increment.
    pub fn solve_surface(&self, rhs: &[T]) -> Vec<T> {
        let f = &self.grid.fourier;
        let mut h = f.half(rhs);
        let nyq = f.nyquist();
        for (k, c) in h.iter_mut().enumerate() {
            *c = if k == nyq { cz() } else { *c / self.surface_symbol(k) };
        }
        f.from_half_real(&h)
    }

    /// Applies the surface operator.
    pub fn apply_surface(&self, x: &[T]) -> Vec<T> {
        let f = &self.grid.fourier;
        let mut h = f.half(x);
        for (k, c) in h.iter_mut().enumerate() {
            *c *= self.surface_symbol(k);
        }
        f.from_half_real(&h)
    }

    /// Applies the bulk operator to nodes `1..n_out` (node 0 enters through the
    /// first face); the Σ row of the result is left at zero.
    pub fn apply_bulk(&self, x: &[T]) -> Vec<T> {
        let f = &self.grid.fourier;
        let nt = f.len();
        let b = &self.grid.outer;
        let d = self.model.d;
        let s = Self::spectra(f, &x[nt..]);
        let s0 = f.half(&x[..nt]);
        let nh = f.nyquist() + 1;
        let mut rows = vec![vec![cz(); nh]; b.len() - 1];
        for k in 0..nh {
            let v: Vec<C<T>> = s.iter().map(|row| row[k]).collect();
            let mut y = self.bulk_matrix(k).matvec(&v);
            let rf = avg(b.r[0], b.r[1]);
            let ub = avg(self.frozen.u_outer[0][0], self.frozen.u_outer[1][0]);
            y[0] -= s0[k] * re(rf * ub * T::lit(0.5) + d * rf / b.h);
            for (j, yj) in y.into_iter().enumerate() {
                rows[j][k] = yj;
            }
        }
        let mut out = vec![T::zero(); nt];
        for h in rows {
            out.extend(f.from_half_real(&h));
        }
        out
    }

    /// Per-mode bulk matrix on the exterior nodes `1..n_out`.
    pub fn bulk_matrix(&self, k: usize) -> BandedMatrix<T> {
        let b = &self.grid.outer;
        let m = b.len();
        let (d, dt) = (self.model.d, self.dt);
        let ik = C::new(T::zero(), T::of_usize(k));
        let mut e = Vec::new();
        for j in 1..m {
            let row = j - 1;
            let r = &b.r;
            let ra = avg(r[j - 1], r[j]);
            let rb = if j + 1 < m { avg(r[j], r[j + 1]) } else { r[m - 1] };
            let vol = (rb * rb - ra * ra) * T::lit(0.5);
            let u = self.frozen.u_outer[j];
            let diag = re(vol / dt) + ik * re(rb - ra) * (re(u[1]) - ik * re(d / r[j]));
            e.push((row, row, diag));
            // face fluxes: out through j+½, in through j−½
            let face = |lo: usize, sgn: T, e: &mut Vec<(usize, usize, C<T>)>| {
                let rf = avg(r[lo], r[lo + 1]);
                let ub = avg(self.frozen.u_outer[lo][0], self.frozen.u_outer[lo + 1][0]);
                let wl = rf * ub * T::lit(0.5) + d * rf / b.h;
                let wh = rf * ub * T::lit(0.5) - d * rf / b.h;
                if lo >= 1 {
                    e.push((row, lo - 1, re(sgn * wl)));
                }
                e.push((row, lo, re(sgn * wh)));
            };
            if j + 1 < m {
                face(j, T::one(), &mut e);
            }
            face(j - 1, -T::one(), &mut e);
        }
        BandedMatrix::from_triplets(m - 1, &e)
    }

    /// Per-mode Stokes matrix.
    pub fn stokes_matrix(&self, k: usize) -> BandedMatrix<T> {
        let g = &self.grid;
        let lay = self.layout();
        let (ni, no) = (lay.ni, lay.no);
        let kk = T::of_usize(k);
        let ik = C::new(T::zero(), kk);
        let dt = self.dt;
        let rs = self.rs();
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let mut e: Vec<(usize, usize, C<T>)> = Vec::new();

        // momentum on interior nodes of both blocks
        let momentum = |b: &RadialBlock<T>, node: usize, ubar: [T; 2], inner: bool, e: &mut Vec<(usize, usize, C<T>)>| {
            let (rho, eta) = (self.model.rho(inner), self.model.eta(inner));
            let r = b.r[node];
            let (ur_col, ut_col, row_r, row_t, p_lo, p_hi) = if inner {
                (lay.inner(node, 1), lay.inner(node, 2), lay.inner(node, 1), lay.inner(node, 2), lay.inner(node, 0), lay.inner(node + 1, 0))
            } else {
                (lay.outer(node, 0), lay.outer(node, 1), lay.outer(node, 0), lay.outer(node, 1), lay.outer(node - 1, 2), lay.outer(node, 2))
            };
            let col = |c: usize| move |src: usize| if inner { lay.inner(src, c) } else { lay.outer(src, c - 1) };
            let diag = re(rho / dt) + ik * re(rho * ubar[1] / r) + re(eta * (kk * kk + T::one()) / (r * r));
            for (row, comp) in [(row_r, 1usize), (row_t, 2usize)] {
                e.push((row, if comp == 1 { ur_col } else { ut_col }, diag));
                for (cidx, w) in radial(b, node, 1, k, Parity::Odd, col(comp)) {
                    e.push((row, cidx, w * re(rho * ubar[0] - eta / r)));
                }
                for (cidx, w) in radial(b, node, 2, k, Parity::Odd, col(comp)) {
                    e.push((row, cidx, w * re(-eta)));
                }
            }
            let cross = ik * re(two * eta / (r * r));
            e.push((row_r, ut_col, re(-rho * ubar[1] / r) + cross));
            e.push((row_t, ur_col, re(rho * ubar[1] / r) - cross));
            e.push((row_r, p_hi, re(T::one() / b.h)));
            e.push((row_r, p_lo, re(-T::one() / b.h)));
            e.push((row_t, p_hi, ik * re(half / r)));
            e.push((row_t, p_lo, ik * re(half / r)));
        };
        for i in 0..ni - 1 {
            momentum(&g.inner, i, self.frozen.u_inner[i], true, &mut e);
        }
        for j in 1..no - 1 {
            momentum(&g.outer, j, self.frozen.u_outer[j], false, &mut e);
        }

        // continuity
        if k == 0 {
            let r0 = g.inner.r[0];
            e.push((lay.inner(0, 0), lay.inner(0, 1), re(two / r0)));
        } else {
            e.push((lay.inner(0, 0), lay.inner(0, 0), re(T::one())));
        }
        let cell = |row: usize, a: T, b: T, ur: [usize; 2], ut: [usize; 2], e: &mut Vec<(usize, usize, C<T>)>| {
            let area = (b * b - a * a) * half;
            e.push((row, ur[1], re(b / area)));
            e.push((row, ur[0], re(-a / area)));
            let w = ik * re((b - a) * half / area);
            e.push((row, ut[0], w));
            e.push((row, ut[1], w));
        };
        for i in 1..ni {
            let r = &g.inner.r;
            cell(lay.inner(i, 0), r[i - 1], r[i], [lay.inner(i - 1, 1), lay.inner(i, 1)], [lay.inner(i - 1, 2), lay.inner(i, 2)], &mut e);
        }
        for j in 0..no - 1 {
            let row = lay.outer(j, 2);
            if k == 0 && j == no - 2 {
                // pressure level fixed
                e.push((row, row, re(T::one())));
                continue;
            }
            let r = &g.outer.r;
            cell(row, r[j], r[j + 1], [lay.outer(j, 0), lay.outer(j + 1, 0)], [lay.outer(j, 1), lay.outer(j + 1, 1)], &mut e);
        }

        // interface
        let li = ni - 1;
        let (ei, eo) = (self.model.eta_minus, self.model.eta_plus);
        let one = re(T::one());
        e.push((lay.inner(li, 1), lay.outer(0, 0), one));
        e.push((lay.inner(li, 1), lay.inner(li, 1), -one));
        e.push((lay.inner(li, 2), lay.outer(0, 1), one));
        e.push((lay.inner(li, 2), lay.inner(li, 2), -one));
        let row_t = lay.outer(0, 0);
        let row_n = lay.outer(0, 1);
        for (b, node, eta, sgn, inner) in [(&g.inner, li, ei, T::one(), true), (&g.outer, 0, eo, -T::one(), false)] {
            let col = |c: usize| move |src: usize| if inner { lay.inner(src, c + 1) } else { lay.outer(src, c) };
            for (cidx, w) in radial(b, node, 1, k, Parity::Odd, col(1)) {
                e.push((row_t, cidx, w * re(sgn * eta)));
            }
            for (cidx, w) in radial(b, node, 1, k, Parity::Odd, col(0)) {
                e.push((row_n, cidx, w * re(sgn * two * eta)));
            }
            let (urc, utc) = if inner { (lay.inner(node, 1), lay.inner(node, 2)) } else { (lay.outer(node, 0), lay.outer(node, 1)) };
            e.push((row_t, urc, ik * re(sgn * eta / rs)));
            e.push((row_t, utc, re(-sgn * eta / rs)));
        }
        let th = T::lit(1.5);
        e.push((row_n, lay.outer(0, 2), re(th)));
        e.push((row_n, lay.outer(1, 2), re(-half)));
        e.push((row_n, lay.inner(li, 0), re(-th)));
        e.push((row_n, lay.inner(li - 1, 0), re(half)));
        e.push((row_n, lay.gamma(), re(self.frozen.sigma * kk * kk / (rs * rs))));
        e.push((lay.gamma(), lay.gamma(), re(T::one() / dt) + ik * re(self.frozen.u_sigma / rs)));
        e.push((lay.gamma(), lay.inner(li, 1), -one));

        // wall
        e.push((lay.outer(no - 1, 0), lay.outer(no - 1, 0), one));
        e.push((lay.outer(no - 1, 1), lay.outer(no - 1, 1), one));

        BandedMatrix::from_triplets(lay.len(), &e)
    }

    fn spectra(f: &Fourier<T>, v: &[T]) -> Vec<Vec<C<T>>> {
        v.chunks(f.len()).map(|row| f.half(row)).collect()
    }

    fn synth(f: &Fourier<T>, rows: &[Vec<C<T>>]) -> Vec<T> {
        let nyq = f.nyquist();
        rows.iter()
            .flat_map(|h| {
                let mut h = h.clone();
                h[nyq] = cz();
                f.from_half_real(&h)
            })
            .collect()
    }

    /// Solves the Stokes operator for an increment in row layout.
    pub fn solve_stokes(&self, rhs: &StokesRows<T>) -> StokesRows<T> {
        let f = &self.grid.fourier;
        let lay = self.layout();
        let (ni, no) = (lay.ni, lay.no);
        let si: Vec<_> = rhs.inner.iter().map(|v| Self::spectra(f, v)).collect();
        let so: Vec<_> = rhs.outer.iter().map(|v| Self::spectra(f, v)).collect();
        let sg = f.half(&rhs.gamma);
        let sols: Vec<Vec<C<T>>> = (0..f.nyquist())
            .into_par_iter()
            .map(|k| {
                let mut b = vec![cz(); lay.len()];
                for i in 0..ni {
                    for c in 0..3 {
                        b[lay.inner(i, c)] = si[c][i][k];
                    }
                }
                b[lay.gamma()] = sg[k];
                for j in 0..no {
                    let comps = if j + 1 == no { 2 } else { 3 };
                    for c in 0..comps {
                        b[lay.outer(j, c)] = so[c][j][k];
                    }
                }
                self.stokes[k].solve(&b)
            })
            .collect();
        let nh = f.nyquist() + 1;
        let gather = |idx: &dyn Fn(usize) -> Option<usize>, rows: usize| -> Vec<Vec<C<T>>> {
            (0..rows)
                .map(|row| {
                    let mut h = vec![cz(); nh];
                    if let Some(q) = idx(row) {
                        for (k, s) in sols.iter().enumerate() {
                            h[k] = s[q];
                        }
                    }
                    h
                })
                .collect()
        };
        let mut out = StokesRows::zeros(&self.grid);
        for c in 0..3 {
            out.inner[c] = Self::synth(f, &gather(&|i| Some(lay.inner(i, c)), ni));
            out.outer[c] = Self::synth(f, &gather(&|j| if c == 2 && j + 1 == no { None } else { Some(lay.outer(j, c)) }, no));
        }
        let mut hg = vec![cz(); nh];
        for (k, s) in sols.iter().enumerate() {
            hg[k] = s[lay.gamma()];
        }
        out.gamma = Self::synth(f, &[hg]);
        out
    }

    /// Solves the bulk operator on nodes `1..n_out` given the increment on Σ.
    pub fn solve_bulk(&self, rhs: &[T], dirichlet: &[T]) -> Vec<T> {
        let f = &self.grid.fourier;
        let nt = f.len();
        let b = &self.grid.outer;
        let m = b.len();
        let d = self.model.d;
        let s = Self::spectra(f, &rhs[nt..]);
        let s0 = f.half(dirichlet);
        let sols: Vec<Vec<C<T>>> = (0..f.nyquist())
            .into_par_iter()
            .map(|k| {
                let mut v: Vec<C<T>> = s.iter().map(|row| row[k]).collect();
                // flux through the first face carries the known Σ value
                let rf = avg(b.r[0], b.r[1]);
                let ub = avg(self.frozen.u_outer[0][0], self.frozen.u_outer[1][0]);
                let wl = rf * ub * T::lit(0.5) + d * rf / b.h;
                v[0] += s0[k] * re(wl);
                self.bulk[k].solve(&v)
            })
            .collect();
        let nh = f.nyquist() + 1;
        let rows: Vec<Vec<C<T>>> = (0..m - 1)
            .map(|j| {
                let mut h = vec![cz(); nh];
                for (k, sol) in sols.iter().enumerate() {
                    h[k] = sol[j];
                }
                h
            })
            .collect();
        let mut out = dirichlet.to_vec();
        out.extend(Self::synth(f, &rows));
        out
    }

    /// Real-space action of the Stokes operator, built from whole-field
    /// derivative operators rather than per-mode stencils.
    pub fn apply_stokes(&self, x: &StokesRows<T>) -> StokesRows<T> {
        self.apply_stokes_with(x, true)
    }

    /// As [`Self::apply_stokes`], optionally without the pressure-level row.
    pub fn apply_stokes_with(&self, x: &StokesRows<T>, pinned: bool) -> StokesRows<T> {
        let g = &self.grid;
        let f = &g.fourier;
        let nt = f.len();
        let (ni, no) = (g.inner.len(), g.outer.len());
        let rs = self.rs();
        let dt = self.dt;
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let m = &self.model;
        let mut out = StokesRows::zeros(g);
        let t1 = |v: &[T]| crate::transformed_ops::theta_rows(f, v, 1);
        let t2 = |v: &[T]| crate::transformed_ops::theta_rows(f, v, 2);
        let blocks = [(&g.inner, [&x.inner[1], &x.inner[2]], true), (&g.outer, [&x.outer[0], &x.outer[1]], false)];
        for (b, u, inner) in blocks {
            let ur = [b.derivative(u[0], nt, 1, Parity::Odd), b.derivative(u[1], nt, 1, Parity::Odd)];
            let urr = [b.derivative(u[0], nt, 2, Parity::Odd), b.derivative(u[1], nt, 2, Parity::Odd)];
            let ut = [t1(u[0]), t1(u[1])];
            let utt = [t2(u[0]), t2(u[1])];
            let (rho, eta) = (m.rho(inner), m.eta(inner));
            let (pv, h) = if inner { (&x.inner[0], b.h) } else { (&x.outer[2], b.h) };
            let nodes: Vec<usize> = if inner { (0..ni - 1).collect() } else { (1..no - 1).collect() };
            let mut pn = vec![T::zero(); b.len() * nt];
            let mut pr = vec![T::zero(); b.len() * nt];
            for &i in &nodes {
                let (lo, hi) = if inner { (i, i + 1) } else { (i - 1, i) };
                for a in 0..nt {
                    pn[i * nt + a] = avg(pv[lo * nt + a], pv[hi * nt + a]);
                    pr[i * nt + a] = (pv[hi * nt + a] - pv[lo * nt + a]) / h;
                }
            }
            let pt = t1(&pn);
            for &i in &nodes {
                let r = b.r[i];
                let ub = if inner { self.frozen.u_inner[i] } else { self.frozen.u_outer[i] };
                for a in 0..nt {
                    let q = i * nt + a;
                    let lap = |c: usize| urr[c][q] + ur[c][q] / r + utt[c][q] / (r * r);
                    let adv = |c: usize| ub[0] * ur[c][q] + ub[1] * ut[c][q] / r;
                    let vr = rho * (u[0][q] / dt + adv(0) - ub[1] * u[1][q] / r)
                        - eta * (lap(0) - u[0][q] / (r * r) - two * ut[1][q] / (r * r))
                        + pr[q];
                    let vt = rho * (u[1][q] / dt + adv(1) + ub[1] * u[0][q] / r)
                        - eta * (lap(1) - u[1][q] / (r * r) + two * ut[0][q] / (r * r))
                        + pt[q] / r;
                    if inner {
                        out.inner[1][q] = vr;
                        out.inner[2][q] = vt;
                    } else {
                        out.outer[0][q] = vr;
                        out.outer[1][q] = vt;
                    }
                }
            }
        }
        // continuity
        let mean = |v: &[T]| v.iter().copied().sum::<T>() / T::of_usize(v.len());
        let r0 = g.inner.r[0];
        let mflux = mean(&x.inner[1][..nt]);
        let mp = mean(&x.inner[0][..nt]);
        for a in 0..nt {
            out.inner[0][a] = two * mflux / r0 + x.inner[0][a] - mp;
        }
        let cell = |r: &[T], ur: &[T], ut: &[T], lo: usize, hi: usize| -> Vec<T> {
            let (a, b) = (r[lo], r[hi]);
            let area = (b * b - a * a) * half;
            let avg_t: Vec<T> = (0..nt).map(|k| avg(ut[lo * nt + k], ut[hi * nt + k])).collect();
            let d = f.derivative(&avg_t, 1);
            (0..nt).map(|k| (b * ur[hi * nt + k] - a * ur[lo * nt + k] + (b - a) * d[k]) / area).collect()
        };
        for i in 1..ni {
            let v = cell(&g.inner.r, &x.inner[1], &x.inner[2], i - 1, i);
            out.inner[0][i * nt..(i + 1) * nt].copy_from_slice(&v);
        }
        for j in 0..no - 1 {
            let mut v = cell(&g.outer.r, &x.outer[0], &x.outer[1], j, j + 1);
            if pinned && j == no - 2 {
                let mv = mean(&v);
                let mp = mean(&x.outer[2][j * nt..(j + 1) * nt]);
                v.iter_mut().for_each(|w| *w = *w - mv + mp);
            }
            out.outer[2][j * nt..(j + 1) * nt].copy_from_slice(&v);
        }
        // interface
        let li = (ni - 1) * nt;
        let dri = [g.inner.derivative(&x.inner[1], nt, 1, Parity::Odd), g.inner.derivative(&x.inner[2], nt, 1, Parity::Odd)];
        let dro = [g.outer.derivative(&x.outer[0], nt, 1, Parity::Odd), g.outer.derivative(&x.outer[1], nt, 1, Parity::Odd)];
        let uri: Vec<T> = x.inner[1][li..].to_vec();
        let uro: Vec<T> = x.outer[0][..nt].to_vec();
        let dti = f.derivative(&uri, 1);
        let dto = f.derivative(&uro, 1);
        let dg = f.derivative(&x.gamma, 1);
        let dgg = f.derivative(&x.gamma, 2);
        let (ei, eo) = (m.eta_minus, m.eta_plus);
        for a in 0..nt {
            let (qi, qo) = (li + a, a);
            out.inner[1][qi] = x.outer[0][qo] - x.inner[1][qi];
            out.inner[2][qi] = x.outer[1][qo] - x.inner[2][qi];
            let so = eo * (dro[1][qo] + (dto[a] - x.outer[1][qo]) / rs);
            let si = ei * (dri[1][qi] + (dti[a] - x.inner[2][qi]) / rs);
            out.outer[0][qo] = -(so - si);
            let p_out = T::lit(1.5) * x.outer[2][a] - half * x.outer[2][nt + a];
            let p_in = T::lit(1.5) * x.inner[0][li + a] - half * x.inner[0][li - nt + a];
            out.outer[1][qo] = -(two * eo * dro[0][qo] - two * ei * dri[0][qi]) + p_out - p_in - self.frozen.sigma * dgg[a] / (rs * rs);
            out.gamma[a] = x.gamma[a] / dt + self.frozen.u_sigma * dg[a] / rs - x.inner[1][qi];
        }
        let w = (no - 1) * nt;
        for a in 0..nt {
            out.outer[0][w + a] = x.outer[0][w + a];
            out.outer[1][w + a] = x.outer[1][w + a];
        }
        out
    }
}

#[inline]
fn avg<T: Real>(a: T, b: T) -> T {
    (a + b) * T::lit(0.5)
}

/// Right-hand sides of one linear step, in the row layouts of the three
/// sub-problems. The bulk array's first row holds `h^α` on Σ.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearStepData<T: Real> {
    pub dt: T,
    pub frozen: FrozenCoefficients<T>,
    pub surface: Vec<T>,
    pub bulk: Vec<T>,
    pub stokes: StokesRows<T>,
}

impl<T: Real> LinearStepData<T> {
    pub fn zeros(grid: &PolarGrid<T>, dt: T, frozen: FrozenCoefficients<T>) -> Self {
        let nt = grid.n_theta();
        Self {
            dt,
            frozen,
            surface: vec![T::zero(); nt],
            bulk: vec![T::zero(); grid.outer.len() * nt],
            stokes: StokesRows::zeros(grid),
        }
    }
}

impl<T: Real> LinearSolver<T> {
    /// `(c_Σ − c_Σ^old)/Δt + (u*_Σ·∇_Σ)c_Σ − d_Γ Δ_Σ c_Σ = h`.
    pub fn solve_surface_parabolic(&self, c_old: &[T], data: &LinearStepData<T>) -> Vec<T> {
        let rhs: Vec<T> = data.surface.iter().zip(c_old).map(|(&h, &c)| h + c / self.dt).collect();
        self.solve_surface(&rhs)
    }

    /// Exterior parabolic step with `α'[c]_Σ = c_Σ + h^α` on Σ; the result
    /// includes the Σ row.
    pub fn solve_bulk_parabolic(&self, c_old: &[T], c_sigma_new: &[T], data: &LinearStepData<T>) -> Vec<T> {
        let nt = self.grid.n_theta();
        let m = self.grid.outer.len();
        let r = &self.grid.outer.r;
        let dirichlet: Vec<T> = (0..nt).map(|a| (c_sigma_new[a] + data.bulk[a]) / self.frozen.alpha_prime[a]).collect();
        let mut rhs = data.bulk.clone();
        for j in 1..m {
            let ra = avg(r[j - 1], r[j]);
            let rb = if j + 1 < m { avg(r[j], r[j + 1]) } else { r[m - 1] };
            let vol = (rb * rb - ra * ra) * T::lit(0.5);
            for a in 0..nt {
                rhs[j * nt + a] += vol * c_old[j * nt + a] / self.dt;
            }
        }
        self.solve_bulk(&rhs, &dirichlet)
    }

    /// Two-phase Stokes step with the capillary term implicit; the Marangoni
    /// force of `c_Σ` enters the tangential stress row as data.
    pub fn solve_two_phase_stokes(&self, u_old: &BulkField<T>, gamma_old: &[T], c_sigma_new: &[T], data: &LinearStepData<T>) -> StokesRows<T> {
        let f = &self.grid.fourier;
        let nt = f.len();
        let (ni, no) = (self.grid.inner.len(), self.grid.outer.len());
        let rs = self.rs();
        let mut rhs = data.stokes.clone();
        for i in 0..ni - 1 {
            for a in 0..nt {
                let q = i * nt + a;
                rhs.inner[1][q] += self.model.rho_minus * u_old.inner[0][q] / self.dt;
                rhs.inner[2][q] += self.model.rho_minus * u_old.inner[1][q] / self.dt;
            }
        }
        for j in 1..no - 1 {
            for a in 0..nt {
                let q = j * nt + a;
                rhs.outer[0][q] += self.model.rho_plus * u_old.outer[0][q] / self.dt;
                rhs.outer[1][q] += self.model.rho_plus * u_old.outer[1][q] / self.dt;
            }
        }
        let ds = f.derivative(c_sigma_new, 1);
        for a in 0..nt {
            rhs.outer[0][a] += self.frozen.sigma_prime[a] * ds[a] / rs;
            rhs.gamma[a] += gamma_old[a] / self.dt;
        }
        self.solve_stokes(&rhs)
    }
}

impl<T: Real> LinearSolver<T> {
    /// Solves the Stokes operator as one dense real-space system assembled
    /// column by column from [`Self::apply_stokes`]. Nyquist content and the
    /// unused wall pressure slot are mapped by the identity. Verification only.
    pub fn solve_stokes_dense(&self, rhs: &StokesRows<T>) -> Result<StokesRows<T>> {
        let g = &self.grid;
        let f = &g.fourier;
        let nt = f.len();
        let n = rhs.to_vec().len();
        let wall_p = {
            let mut z = StokesRows::zeros(g);
            let w = (g.outer.len() - 1) * nt;
            z.outer[2][w..].iter_mut().for_each(|v| *v = T::one());
            z.to_vec()
        };
        let nyq_part = |v: &[T]| -> Vec<T> {
            v.chunks(nt)
                .flat_map(|row| {
                    let c = row.iter().enumerate().map(|(j, &x)| if j % 2 == 0 { x } else { -x }).sum::<T>() / T::of_usize(nt);
                    (0..nt).map(move |j| if j % 2 == 0 { c } else { -c })
                })
                .collect()
        };
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        for col in 0..n {
            let mut e = vec![T::zero(); n];
            e[col] = T::one();
            let q = nyq_part(&e);
            let mut e_free: Vec<T> = e.iter().zip(&q).map(|(&x, &y)| x - y).collect();
            let mut keep = q.clone();
            if wall_p[col] != T::zero() {
                e_free = vec![T::zero(); n];
                keep = e.clone();
            }
            let y = self.apply_stokes(&StokesRows::from_vec(g, &e_free)).to_vec();
            for row in 0..n {
                a[(row, col)] = (y[row] + keep[row]).as_f64();
            }
        }
        let b = nalgebra::DVector::from_iterator(n, rhs.to_vec().into_iter().map(|v| v.as_f64()));
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| crate::error::FlowError::Solve("dense Stokes matrix is singular".into()))?;
        let v: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
        Ok(StokesRows::from_vec(g, &v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{EquationOfState, Isotherm};
    use crate::geometry::ReferenceGeometry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> MaterialModel<f64> {
        MaterialModel {
            rho_minus: 1.0,
            rho_plus: 2.0,
            eta_minus: 1.0,
            eta_plus: 0.5,
            d: 0.2,
            d_gamma: 0.1,
            eos: EquationOfState::Linear { sigma0: 1.0, beta: 0.2 },
            isotherm: Isotherm::Henry { k: 2.0 },
            s_ref: 0.5,
        }
    }

    fn solver(nt: usize) -> LinearSolver<f64> {
        let grid = ReferenceGeometry::new(2.0, 1.0, nt, 7, 8, 0.9).unwrap().grid(2);
        let m = model();
        let mut fr = FrozenCoefficients::at_rest(&grid, &m, 0.3);
        fr.u_inner.iter_mut().enumerate().for_each(|(i, u)| *u = [0.01 * i as f64, 0.1]);
        fr.u_outer.iter_mut().enumerate().for_each(|(i, u)| *u = [-0.02, 0.05 * i as f64]);
        fr.u_sigma = 0.1;
        LinearSolver::new(&grid, &m, 0.1, fr).unwrap()
    }

    fn random_rows(grid: &PolarGrid<f64>, seed: u64) -> StokesRows<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nt = grid.n_theta();
        let v: Vec<f64> = (0..StokesRows::zeros(grid).to_vec().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut x = StokesRows::from_vec(grid, &v);
        // strip Nyquist content and the unused wall pressure slot
        let f = &grid.fourier;
        let strip = |v: &mut Vec<f64>| {
            let rows: Vec<f64> = v
                .chunks(nt)
                .flat_map(|r| {
                    let mut h = f.half(r);
                    h[nt / 2] = Complex::new(0.0, 0.0);
                    f.from_half_real(&h)
                })
                .collect();
            *v = rows;
        };
        x.inner.iter_mut().for_each(strip);
        x.outer.iter_mut().for_each(strip);
        strip(&mut x.gamma);
        let w = (grid.outer.len() - 1) * nt;
        x.outer[2][w..].iter_mut().for_each(|v| *v = 0.0);
        x
    }

    #[test]
    fn per_mode_matrices_invert_the_real_space_operator() {
        let s = solver(16);
        let x = random_rows(&s.grid, 3);
        let b = s.apply_stokes(&x);
        let y = s.solve_stokes(&b);
        let err = x.to_vec().iter().zip(y.to_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn per_mode_and_dense_global_solves_agree() {
        let s = solver(8);
        let b = random_rows(&s.grid, 5);
        let y = s.solve_stokes(&b);
        let z = s.solve_stokes_dense(&b).unwrap();
        let err = y.to_vec().iter().zip(z.to_vec()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn surface_modes_decay_by_the_backward_euler_factor() {
        let mut s = solver(16);
        s.frozen.u_sigma = 0.0;
        let th = s.grid.theta.clone();
        let c: Vec<f64> = th.iter().map(|t| (3.0 * t).cos()).collect();
        let data = LinearStepData::zeros(&s.grid, s.dt, s.frozen.clone());
        let out = s.solve_surface_parabolic(&c, &data);
        let fac = 1.0 / (1.0 + s.dt * s.model.d_gamma * 9.0);
        for (a, b) in out.iter().zip(&c) {
            assert!((a - fac * b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_data_gives_zero_stokes_step() {
        let s = solver(8);
        let data = LinearStepData::zeros(&s.grid, s.dt, s.frozen.clone());
        let nt = 8;
        let out = s.solve_two_phase_stokes(&BulkField::velocity(&s.grid), &vec![0.0; nt], &vec![0.6; nt], &data);
        assert!(out.sup_norm() < 1e-14);
    }
}

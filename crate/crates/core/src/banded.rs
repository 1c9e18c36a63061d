//! Complex banded LU factorization with partial pivoting.

use num_complex::Complex;

use crate::error::{FlowError, Result};
use crate::scalar::Real;

/// Square banded matrix with `kl` sub- and `ku` super-diagonals. Storage
/// reserves `kl` extra super-diagonals for the fill-in of row pivoting.
#[derive(Clone, Debug)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    /// `2 kl + ku + 1` entries per row; see `idx`.
    data: Vec<Complex<T>>,
}

impl<T: Real> BandedMatrix<T> {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        Self { n, kl, ku, data: vec![Complex::new(T::zero(), T::zero()); n * w] }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, Complex<T>)]) -> Self {
        let (mut kl, mut ku) = (0, 0);
        for &(i, j, _) in entries {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let mut m = Self::new(n, kl, ku);
        for &(i, j, v) in entries {
            m.add(i, j, v);
        }
        m
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // column offset relative to i, shifted so the lowest sub-diagonal is 0
        i * self.width() + (j + self.kl - i)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku + self.kl
    }

    pub fn add(&mut self, i: usize, j: usize, v: Complex<T>) {
        assert!(i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku, "entry outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            Complex::new(T::zero(), T::zero())
        }
    }

    pub fn matvec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + self.kl).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Factorizes in place (row pivoting within the band).
    pub fn factor(mut self) -> Result<BandedLu<T>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut piv = vec![0usize; n];
        let scale = self.data.iter().fold(T::zero(), |m, v| m.max(v.norm()));
        let tiny = scale * T::epsilon() * T::lit(1e-3);
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).norm();
            for i in k + 1..=last {
                let v = self.get(i, k).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(FlowError::Solve(format!("singular banded matrix at column {k}")));
            }
            piv[k] = p;
            let cols = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=cols {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let d = self.get(k, k);
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / d;
                self.data[ik] = l;
                if l.norm() == T::zero() {
                    continue;
                }
                for j in k + 1..=cols {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= l * kj;
                }
            }
        }
        Ok(BandedLu { m: self, piv })
    }
}

/// Factors of a [`BandedMatrix`].
#[derive(Clone, Debug)]
pub struct BandedLu<T> {
    m: BandedMatrix<T>,
    piv: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.piv[k]);
            let last = (k + m.kl).min(n - 1);
            for i in k + 1..=last {
                let l = m.data[m.idx(i, k)];
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for k in (0..n).rev() {
            let cols = (k + m.ku + m.kl).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=cols {
                s -= m.data[m.idx(k, j)] * x[j];
            }
            x[k] = s / m.data[m.idx(k, k)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solves_random_banded_system_needing_pivots() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n: usize = 40;
        let mut e = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(3)..(i + 3).min(n) {
                // weak diagonal forces row exchanges
                let d = if i == j { 0.01 } else { 1.0 };
                e.push((i, j, Complex::new(d * rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
            }
        }
        let a = BandedMatrix::from_triplets(n, &e);
        let x: Vec<Complex<f64>> = (0..n).map(|i| Complex::new(i as f64, 1.0)).collect();
        let b = a.matvec(&x);
        let y = a.clone().factor().unwrap().solve(&b);
        let err = x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn singular_matrix_is_reported() {
        let e = vec![(0, 0, Complex::new(1.0, 0.0)), (1, 0, Complex::new(1.0, 0.0))];
        assert!(BandedMatrix::<f64>::from_triplets(2, &e).factor().is_err());
    }
}

//! Banded storage, a banded LU with partial pivoting, and a small dense
//! generalized eigenvalue check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;
use std::ops::{AddAssign, Mul};

use crate::error::{Error, Result};

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
///
/// Each row keeps `kl` extra slots on the right so that the LU fill-in fits
/// in place.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T> BandMatrix<T>
where
    T: Copy + Zero + AddAssign + Mul<Output = T>,
{
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.kl + self.ku {
            None
        } else {
            Some(i * self.width + j + self.kl - i)
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        match self.slot(i, j) {
            Some(k) if j <= i + self.ku => self.data[k],
            _ => T::zero(),
        }
    }

    /// Adds `v` at `(i, j)`; panics if the entry lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i},{j}) outside band");
        let k = i * self.width + j + self.kl - i;
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                let mut acc = T::zero();
                for j in lo..=hi {
                    acc += self.data[i * self.width + j + self.kl - i] * x[j];
                }
                acc
            })
            .collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Nonzero pattern iterator `(i, j, value)` over the stored band.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            (lo..=hi).map(move |j| (i, j, self.get(i, j)))
        })
    }
}

impl BandMatrix<f64> {
    /// `x^H A y` with `A` real.
    pub fn form(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::zero();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut row = Complex64::zero();
            for j in lo..=hi {
                row += self.data[i * self.width + j + self.kl - i] * y[j];
            }
            acc += x[i].conj() * row;
        }
        acc
    }
}

impl BandMatrix<Complex64> {
    /// `x^H A y`.
    pub fn form(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let ay = self.matvec(y);
        x.iter().zip(&ay).map(|(a, b)| a.conj() * b).sum()
    }
}

/// LU factors of a complex band matrix (row interchanges kept LAPACK-style).
#[derive(Debug, Clone)]
pub struct BandLu {
    a: BandMatrix<Complex64>,
    piv: Vec<usize>,
    lower: Vec<Complex64>,
}

impl BandLu {
    pub fn factor(mut a: BandMatrix<Complex64>) -> Result<Self> {
        let n = a.n;
        let kl = a.kl;
        let reach = a.kl + a.ku;
        let w = a.width;
        let mut piv = vec![0; n];
        let mut lower = vec![Complex64::zero(); n * kl.max(1)];
        let scale = a.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !scale.is_finite() {
            return Err(Error::NumericalFailure("non-finite matrix entry".into()));
        }
        let idx = |i: usize, j: usize| i * w + j + kl - i;
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.data[idx(k, k)].norm();
            for r in k + 1..=last {
                let v = a.data[idx(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > scale * 1e-300) || best == 0.0 {
                return Err(Error::NumericalFailure(format!("singular matrix at pivot {k}")));
            }
            piv[k] = p;
            let cend = (k + reach).min(n - 1);
            if p != k {
                for c in k..=cend {
                    a.data.swap(idx(k, c), idx(p, c));
                }
            }
            let inv = 1.0 / a.data[idx(k, k)];
            for r in k + 1..=last {
                let l = a.data[idx(r, k)] * inv;
                lower[k * kl + (r - k - 1)] = l;
                a.data[idx(r, k)] = Complex64::zero();
                if l == Complex64::zero() {
                    continue;
                }
                let rk = idx(k, k);
                let rr = idx(r, k);
                for off in 1..=(cend - k) {
                    let v = a.data[rk + off];
                    a.data[rr + off] -= l * v;
                }
            }
        }
        Ok(Self { a, piv, lower })
    }

    pub fn n(&self) -> usize {
        self.a.n
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.a.n;
        let kl = self.a.kl;
        let reach = self.a.kl + self.a.ku;
        let w = self.a.width;
        if b.len() != n {
            return Err(Error::InvalidArgument(format!("rhs length {} != {n}", b.len())));
        }
        let mut x = b.to_vec();
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            let last = (k + kl).min(n - 1);
            for r in k + 1..=last {
                x[r] -= self.lower[k * kl + (r - k - 1)] * xk;
            }
        }
        for i in (0..n).rev() {
            let base = i * w + kl;
            let cend = (i + reach).min(n - 1);
            let mut acc = x[i];
            for c in i + 1..=cend {
                acc -= self.a.data[base + c - i] * x[c];
            }
            x[i] = acc / self.a.data[base];
        }
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NumericalFailure("non-finite solution".into()));
        }
        Ok(x)
    }
}

/// Smallest `lambda` with `H v = lambda G v`, where `H` is the Hermitian part
/// of `a` and `g` is real symmetric positive definite.
pub fn min_generalized_eigenvalue(a: &BandMatrix<Complex64>, g: &BandMatrix<f64>) -> Result<f64> {
    let n = a.n();
    let gd = DMatrix::from_fn(n, n, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)));
    let chol = gd
        .cholesky()
        .ok_or_else(|| Error::NumericalFailure("Gram matrix not positive definite".into()))?;
    let l = chol.l();
    let h = |i: usize, j: usize| 0.5 * (a.get(i, j) + a.get(j, i).conj());
    let hr = DMatrix::from_fn(n, n, |i, j| h(i, j).re);
    let hi = DMatrix::from_fn(n, n, |i, j| h(i, j).im);
    // C = L^-1 H L^-T for both parts
    let transform = |m: DMatrix<f64>| -> Option<DMatrix<f64>> {
        let t = l.solve_lower_triangular(&m)?;
        let t = l.solve_lower_triangular(&t.transpose())?;
        Some(t.transpose())
    };
    let cr = transform(hr).ok_or_else(|| Error::NumericalFailure("triangular solve failed".into()))?;
    let ci = transform(hi).ok_or_else(|| Error::NumericalFailure("triangular solve failed".into()))?;
    let mut big = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            big[(i, j)] = cr[(i, j)];
            big[(i + n, j + n)] = cr[(i, j)];
            big[(i, j + n)] = -ci[(i, j)];
            big[(i + n, j)] = ci[(i, j)];
        }
    }
    let big = 0.5 * (&big + big.transpose());
    let eig = big.symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Dense solve used only by tests and small oracles.
pub fn dense_solve(a: &[Vec<Complex64>], b: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = b.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let rhs = DVector::from_column_slice(b);
    m.lu().solve(&rhs).map(|v| v.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> BandMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                a.add(i, j, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
        }
        a
    }

    #[test]
    fn band_lu_matches_dense_solve() {
        for (n, kl, ku, seed) in [(1, 0, 0, 1), (7, 2, 3, 2), (40, 5, 5, 3), (33, 7, 1, 4), (20, 0, 4, 5)] {
            let a = random_band(n, kl, ku, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let b: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
            let x = BandLu::factor(a.clone()).unwrap().solve(&b).unwrap();
            let xd = dense_solve(&a.to_dense(), &b).unwrap();
            for (u, v) in x.iter().zip(&xd) {
                assert!((u - v).norm() < 1e-10 * (1.0 + v.norm()));
            }
            let r = a.matvec(&x);
            let res: f64 = r.iter().zip(&b).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-11 * norm2(&b));
        }
    }

    #[test]
    fn pivoting_needed() {
        // zero leading diagonal forces an interchange
        let mut a = BandMatrix::zeros(3, 1, 1);
        a.add(0, 1, Complex64::new(1.0, 0.0));
        a.add(1, 0, Complex64::new(2.0, 0.0));
        a.add(1, 1, Complex64::new(1.0, 0.0));
        a.add(1, 2, Complex64::new(1.0, 1.0));
        a.add(2, 1, Complex64::new(3.0, 0.0));
        a.add(2, 2, Complex64::new(1.0, 0.0));
        let b = vec![Complex64::new(1.0, 0.0); 3];
        let x = BandLu::factor(a.clone()).unwrap().solve(&b).unwrap();
        let r = a.matvec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_detected() {
        let a: BandMatrix<Complex64> = BandMatrix::zeros(3, 1, 1);
        assert!(matches!(BandLu::factor(a), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn generalized_eigenvalue_of_scaled_identity() {
        let n = 5;
        let mut a = BandMatrix::zeros(n, 1, 1);
        let mut g = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.add(i, i, Complex64::new(3.0 + i as f64, 0.0));
            g.add(i, i, 1.0 + i as f64 * 0.0);
        }
        // skew part must not change the answer
        a.add(0, 1, Complex64::new(0.0, 5.0));
        a.add(1, 0, Complex64::new(0.0, 5.0));
        let lam = min_generalized_eigenvalue(&a, &g).unwrap();
        assert!((lam - 3.0).abs() < 1e-12);
    }
}

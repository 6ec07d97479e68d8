//! Small dense linear algebra: complex square matrices and eigenvalues of
//! real-symmetric / Hermitian matrices.
//!
//! Eigenvalues use Householder reduction to tridiagonal form followed by the
//! implicit QL iteration. A Hermitian `n × n` matrix `A + iB` is handled through
//! its real-symmetric embedding `[[A, -B], [B, A]]`, whose spectrum is that of
//! the Hermitian matrix with every eigenvalue doubled.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_real(n: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), n * n);
        Self {
            n,
            data: values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        let n = self.n;
        assert_eq!(n, other.n);
        let mut out = CMat::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · other†`
    pub fn matmul_adjoint(&self, other: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            for j in 0..n {
                let other_row = &other.data[j * n..(j + 1) * n];
                let mut acc = ZERO;
                for (&a, &b) in row.iter().zip(other_row) {
                    acc += a * b.conj();
                }
                out.data[i * n + j] = acc;
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> CMat {
        CMat {
            n: self.n,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        let mut out = self.clone();
        out.add_assign_scaled(other, ONE);
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        let mut out = self.clone();
        out.add_assign_scaled(other, -ONE);
        out
    }

    pub fn add_assign_scaled(&mut self, other: &CMat, s: C64) {
        assert_eq!(self.n, other.n);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &CMat) -> CMat {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &CMat) -> C64 {
        let n = self.n;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| f64::max(m, v.norm()))
    }

    /// Largest entry of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Replaces the matrix by `(self + self†) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in i + 1..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// Frobenius-norm style bound on the operator norm.
    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v.norm_sqr()).sum())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMat) -> CMat {
        let (n, m) = (self.n, other.n);
        CMat::from_fn(n * m, |i, j| self[(i / m, j / m)] * other[(i % m, j % m)])
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues of a real symmetric matrix (row-major, only the lower triangle
/// is read), sorted ascending.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(matrix.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = matrix.to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    householder_tridiagonalize(&mut a, n, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and sub-diagonal `offdiag` (`offdiag.len() + 1 == diag.len()`).
///
/// Returns the eigenvalues ascending and the row-major `n × n` matrix whose
/// column `j` is the unit eigenvector of eigenvalue `j`.
pub fn symmetric_tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if offdiag.len() + 1 != n {
        return Err(Error::domain(
            "tridiagonal matrix",
            alloc::format!("{} diagonal entries need {} off-diagonal entries", n, n - 1),
        ));
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..].copy_from_slice(offdiag);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tridiagonal_ql(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&j| d[j]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &j) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + col] = z[row * n + j];
        }
    }
    Ok((values, vectors))
}

fn householder_tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    let at = |i: usize, j: usize| i * n + j;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[at(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[at(i, l)];
            } else {
                for k in 0..=l {
                    a[at(i, k)] /= scale;
                    h += a[at(i, k)] * a[at(i, k)];
                }
                let f = a[at(i, l)];
                let g = if f >= 0.0 { -libm::sqrt(h) } else { libm::sqrt(h) };
                e[i] = scale * g;
                h -= f * g;
                a[at(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[at(j, k)] * a[at(i, k)];
                    }
                    for k in j + 1..=l {
                        g += a[at(k, j)] * a[at(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[at(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[at(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[at(j, k)] -= f * e[k] + g * a[at(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[at(i, l)];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[at(i, i)];
    }
}

/// Implicit QL on a tridiagonal matrix; `e[i]` holds the entry below `d[i - 1]`.
/// Rotations are accumulated into the row-major `z` when given.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(Error::NoConvergence {
                    what: "tridiagonal QL iteration",
                    residual: e[l].abs(),
                    iterations,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = libm::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + libm::copysign(r, g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = libm::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[k * n + i + 1];
                        z[k * n + i + 1] = s * z[k * n + i] + c * f;
                        z[k * n + i] = c * z[k * n + i] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, sorted ascending.
pub fn hermitian_eigenvalues(h: &CMat) -> Result<Vec<f64>> {
    let n = h.dim();
    let big = 2 * n;
    let mut embed = vec![0.0; big * big];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            embed[i * big + j] = z.re;
            embed[(i + n) * big + (j + n)] = z.re;
            embed[i * big + (j + n)] = -z.im;
            embed[(i + n) * big + j] = z.im;
        }
    }
    let doubled = symmetric_eigenvalues(&embed, big)?;
    Ok(doubled.iter().step_by(2).copied().collect())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(h: &CMat) -> Result<f64> {
    Ok(hermitian_eigenvalues(h)?[0])
}

/// Solves the real system `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_real(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| m[p * n + col].abs().total_cmp(&m[q * n + col].abs()))
            .unwrap_or(col);
        if m[pivot * n + col].abs() <= scale * f64::EPSILON * 1e-3 {
            return Err(Error::domain("linear system", "matrix is singular"));
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let diag = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    #[test]
    fn symmetric_matches_nalgebra() {
        let mut seed = 7;
        for n in [1, 2, 3, 4, 7, 16, 40] {
            let mut a = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = lcg(&mut seed);
                    a[i * n + j] = v;
                    a[j * n + i] = v;
                }
            }
            let ours = symmetric_eigenvalues(&a, n).unwrap();
            let reference = nalgebra::DMatrix::from_row_slice(n, n, &a).symmetric_eigenvalues();
            let mut reference: Vec<f64> = reference.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            for (x, y) in ours.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-12, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn tridiagonal_eigenvectors() {
        let mut seed = 3;
        for n in [1, 2, 5, 30] {
            let diag: Vec<f64> = (0..n).map(|_| lcg(&mut seed)).collect();
            let off: Vec<f64> = (1..n).map(|_| lcg(&mut seed)).collect();
            let (values, vectors) = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
            let mut dense = vec![0.0; n * n];
            for i in 0..n {
                dense[i * n + i] = diag[i];
                if i + 1 < n {
                    dense[i * n + i + 1] = off[i];
                    dense[(i + 1) * n + i] = off[i];
                }
            }
            let reference = symmetric_eigenvalues(&dense, n).unwrap();
            for j in 0..n {
                assert!((values[j] - reference[j]).abs() < 1e-13);
                for i in 0..n {
                    let av: f64 = (0..n).map(|k| dense[i * n + k] * vectors[k * n + j]).sum();
                    assert!((av - values[j] * vectors[i * n + j]).abs() < 1e-12);
                }
                for l in 0..n {
                    let dot: f64 = (0..n).map(|k| vectors[k * n + j] * vectors[k * n + l]).sum();
                    let expected = if j == l { 1.0 } else { 0.0 };
                    assert!((dot - expected).abs() < 1e-12);
                }
            }
        }
        assert!(symmetric_tridiagonal_eigen(&[1.0, 2.0], &[]).is_err());
    }

    #[test]
    fn hermitian_known_spectrum() {
        // 2I + iΔ for Δ = [[0,1],[-1,0]] has eigenvalues 1 and 3
        let h = CMat::from_fn(2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => C64::new(2.0, 0.0),
            (0, 1) => I,
            _ => -I,
        });
        let ev = hermitian_eigenvalues(&h).unwrap();
        assert_relative_eq!(ev[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn hermitian_matches_nalgebra() {
        let mut seed = 99;
        for n in [3, 8, 24] {
            let mut h = CMat::zeros(n);
            for i in 0..n {
                h[(i, i)] = C64::new(lcg(&mut seed), 0.0);
                for j in 0..i {
                    let z = C64::new(lcg(&mut seed), lcg(&mut seed));
                    h[(i, j)] = z;
                    h[(j, i)] = z.conj();
                }
            }
            let ours = hermitian_eigenvalues(&h).unwrap();
            let dm = nalgebra::DMatrix::from_fn(n, n, |i, j| nalgebra::Complex::new(h[(i, j)].re, h[(i, j)].im));
            let mut reference: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            for (x, y) in ours.iter().zip(&reference) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_small_system() {
        let a = [4.0, 1.0, 2.0, 1.0, 3.0, 0.0, 2.0, 0.0, 5.0];
        let x = solve_real(&a, &[1.0, 2.0, 3.0], 3).unwrap();
        for i in 0..3 {
            let row: f64 = (0..3).map(|k| a[i * 3 + k] * x[k]).sum();
            assert_relative_eq!(row, [1.0, 2.0, 3.0][i], epsilon = 1e-14);
        }
        assert!(solve_real(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0], 2).is_err());
    }

    #[test]
    fn kron_and_trace() {
        let a = CMat::from_real(2, &[1.0, 2.0, 3.0, 4.0]);
        let b = CMat::identity(3);
        let k = a.kron(&b);
        assert_eq!(k.dim(), 6);
        assert_eq!(k.trace(), C64::new(15.0, 0.0));
        assert_eq!(a.trace_product(&a), a.matmul(&a).trace());
    }
}

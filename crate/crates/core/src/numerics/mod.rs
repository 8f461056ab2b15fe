//! Dense complex matrices of dimension 2 and 4.
//!
//! Every operator in the coin space is 2×2 and every superoperator or Choi
//! matrix of a coin map is 4×4, so the kernel works on a fixed 16-entry
//! buffer and stays `Copy`. Decompositions live in [`decomp`], the
//! double-double layer used for long evolutions lives in [`dd`].

pub mod dd;
pub mod decomp;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub use decomp::{
    cond, eig, eigenvalues, eigh, inv, pinv, singular_values, sqrtm_psd, svd, trace_norm,
    EigenDecomp, Svd,
};

pub use num_complex::Complex64 as C64;

/// Absolute floor used when a tolerance is expressed relative to a norm.
pub const ABS_FLOOR: f64 = 1e-14;

/// Shorthand for a complex number.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("unsupported matrix dimension {0} (expected 2 or 4)")]
    BadDimension(usize),
    #[error("expected {expected} entries, got {got}")]
    EntryCount { expected: usize, got: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("eigenvector matrix is ill-conditioned (condition {condition:.3e}); close to an exceptional point")]
    NonDiagonalizable { condition: f64 },
    #[error("matrix is singular (smallest/largest singular value {ratio:.3e})")]
    Singular { ratio: f64 },
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semi-definite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },
}

/// Square complex matrix of dimension 2 or 4, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct CMat {
    dim: usize,
    data: [C64; 16],
}

impl CMat {
    /// Builds a matrix from row-major entries, checking the dimension and
    /// that all entries are finite.
    pub fn new(dim: usize, entries: &[C64]) -> Result<Self, NumericsError> {
        if dim != 2 && dim != 4 {
            return Err(NumericsError::BadDimension(dim));
        }
        if entries.len() != dim * dim {
            return Err(NumericsError::EntryCount {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let mut m = Self::zeros(dim);
        for (idx, z) in entries.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(NumericsError::NonFinite {
                    row: idx / dim,
                    col: idx % dim,
                });
            }
            m.data[idx] = *z;
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "CMat dimension must be 2 or 4");
        Self {
            dim,
            data: [C64::new(0.0, 0.0); 16],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, z) in diag.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }

    /// 2×2 matrix from rows.
    pub fn mat2(rows: [[C64; 2]; 2]) -> Self {
        let mut m = Self::zeros(2);
        for (i, row) in rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        m
    }

    /// 2×2 matrix from real rows.
    pub fn real2(rows: [[f64; 2]; 2]) -> Self {
        Self::mat2([
            [c64(rows[0][0], 0.0), c64(rows[0][1], 0.0)],
            [c64(rows[1][0], 0.0), c64(rows[1][1], 0.0)],
        ])
    }

    /// Builds a matrix column by column.
    pub fn from_columns(cols: &[Vec<C64>]) -> Self {
        let dim = cols.len();
        let mut m = Self::zeros(dim);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), dim);
            for (i, z) in col.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        m
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        let mut m = Self::zeros(u.len());
        for i in 0..u.len() {
            for j in 0..v.len() {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.data[..self.dim * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        for (i, z) in col.iter().enumerate() {
            self[(i, j)] = *z;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        let mut m = *self;
        for z in m.data[..self.dim * self.dim].iter_mut() {
            *z = f(*z);
        }
        m
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn det(&self) -> C64 {
        match self.dim {
            2 => self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)],
            _ => {
                // Laplace expansion along the first row.
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..4 {
                    let minor = self.minor3(0, j);
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    acc += self[(0, j)] * minor * sign;
                }
                acc
            }
        }
    }

    fn minor3(&self, skip_r: usize, skip_c: usize) -> C64 {
        let rows: Vec<usize> = (0..4).filter(|&r| r != skip_r).collect();
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip_c).collect();
        let m = |i: usize, j: usize| self[(rows[i], cols[j])];
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
            - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        (*self - *other).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol * self.norm().max(ABS_FLOOR)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (*self * self.adjoint()).max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    /// Kronecker product of two 2×2 matrices.
    pub fn kron(&self, other: &Self) -> Self {
        assert!(self.dim == 2 && other.dim == 2, "kron is defined for 2x2 factors");
        let mut m = Self::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        m[(2 * i + k, 2 * j + l)] = self[(i, j)] * other[(k, l)];
                    }
                }
            }
        }
        m
    }

    /// Non-negative integer power by binary exponentiation.
    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = *self;
        let mut acc = Self::identity(self.dim);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            exp >>= 1;
            if exp > 0 {
                base = base * base;
            }
        }
        acc
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        debug_assert!(r < self.dim && c < self.dim);
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        debug_assert!(r < self.dim && c < self.dim);
        &mut self.data[r * self.dim + c]
    }
}

impl Add for CMat {
    type Output = CMat;
    fn add(self, rhs: CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        let mut m = self;
        for (a, b) in m.data.iter_mut().zip(rhs.data.iter()) {
            *a += *b;
        }
        m
    }
}

impl Sub for CMat {
    type Output = CMat;
    fn sub(self, rhs: CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        let mut m = self;
        for (a, b) in m.data.iter_mut().zip(rhs.data.iter()) {
            *a -= *b;
        }
        m
    }
}

impl Neg for CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.map(|z| -z)
    }
}

impl Mul for CMat {
    type Output = CMat;
    fn mul(self, rhs: CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    m[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        m
    }
}

impl Mul<C64> for CMat {
    type Output = CMat;
    fn mul(self, s: C64) -> CMat {
        self.scale(s)
    }
}

impl Mul<f64> for CMat {
    type Output = CMat;
    fn mul(self, s: f64) -> CMat {
        self.map(|z| z * s)
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:>+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_shape_and_finiteness() {
        assert_eq!(
            CMat::new(3, &[c64(0.0, 0.0); 9]).unwrap_err(),
            NumericsError::BadDimension(3)
        );
        assert!(matches!(
            CMat::new(2, &[c64(0.0, 0.0); 3]),
            Err(NumericsError::EntryCount { expected: 4, got: 3 })
        ));
        let mut e = [c64(1.0, 0.0); 4];
        e[3] = c64(f64::NAN, 0.0);
        assert_eq!(
            CMat::new(2, &e).unwrap_err(),
            NumericsError::NonFinite { row: 1, col: 1 }
        );
    }

    #[test]
    fn kron_and_det() {
        let a = CMat::real2([[1.0, 2.0], [3.0, 4.0]]);
        let b = CMat::real2([[0.0, 1.0], [1.0, 0.0]]);
        let k = a.kron(&b);
        assert_eq!(k[(0, 1)], c64(1.0, 0.0));
        assert_eq!(k[(2, 1)], c64(3.0, 0.0));
        // det(A⊗B) = det(A)^2 det(B)^2 for 2x2 factors
        let expected = a.det().powi(2) * b.det().powi(2);
        assert!((k.det() - expected).norm() < 1e-12);
    }

    #[test]
    fn pow_matches_repeated_product() {
        let a = CMat::mat2([[c64(0.3, 0.1), c64(0.2, -0.4)], [c64(-0.5, 0.0), c64(0.9, 0.2)]]);
        let mut acc = CMat::identity(2);
        for t in 0..9u32 {
            assert!(a.pow(t).max_abs_diff(&acc) < 1e-14);
            acc = acc * a;
        }
    }
}

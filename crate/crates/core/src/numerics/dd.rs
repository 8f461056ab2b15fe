//! Double-double arithmetic (about 32 significant digits).
//!
//! Above the exceptional point the per-momentum metric state has entries of
//! order λ₊^{2t} while its trace stays of order one. Plain `f64` loses the
//! trace to cancellation after a few dozen steps, so the evolution kernels
//! carry their per-k matrices and the k-sum in this representation and round
//! only at the end.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub};

use super::{c64, CMat, C64};

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Default, PartialEq, PartialOrd)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    /// Square root; zero for non-positive input.
    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let s = Dd::new(self.hi.sqrt());
        // one Newton step doubles the 53 correct bits
        s + (self - s * s) / (s * 2.0)
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: f64) -> Dd {
        self * Dd::new(o)
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * q1;
        let q2 = r.hi / o.hi;
        let r = r - o * q2;
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, o: Dd) {
        *self = *self + o;
    }
}

impl Sum for Dd {
    fn sum<I: Iterator<Item = Dd>>(iter: I) -> Dd {
        iter.fold(Dd::ZERO, |a, b| a + b)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}{:+e}", self.hi, self.lo)
    }
}

/// Complex number over [`Dd`].
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    pub const ONE: Cdd = Cdd {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    pub fn new(re: Dd, im: Dd) -> Self {
        Cdd { re, im }
    }

    pub fn to_c64(self) -> C64 {
        c64(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(self) -> Self {
        Cdd {
            re: self.re,
            im: -self.im,
        }
    }

    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    pub fn norm(self) -> Dd {
        self.norm_sqr().sqrt()
    }

    /// Principal square root.
    pub fn sqrt(self) -> Self {
        let r = self.norm();
        if r.hi == 0.0 {
            return Cdd::ZERO;
        }
        // pick the formula that avoids cancellation in |z| ± re
        if self.re.hi >= 0.0 {
            let s = ((r + self.re) * 0.5).sqrt();
            Cdd::new(s, self.im / (s * 2.0))
        } else {
            let s = ((r - self.re) * 0.5).sqrt();
            let re = self.im.abs() / (s * 2.0);
            let im = if self.im.hi < 0.0 { -s } else { s };
            Cdd::new(re, im)
        }
    }

    pub fn scale(self, s: Dd) -> Self {
        Cdd::new(self.re * s, self.im * s)
    }

    /// Integer power by repeated squaring.
    pub fn powi(self, exp: i64) -> Self {
        let mut base = if exp < 0 { Cdd::ONE / self } else { self };
        let mut e = exp.unsigned_abs();
        let mut acc = Cdd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl From<C64> for Cdd {
    fn from(z: C64) -> Self {
        Cdd::new(Dd::new(z.re), Dd::new(z.im))
    }
}

impl From<Dd> for Cdd {
    fn from(x: Dd) -> Self {
        Cdd::new(x, Dd::ZERO)
    }
}

impl Add for Cdd {
    type Output = Cdd;
    #[inline]
    fn add(self, o: Cdd) -> Cdd {
        Cdd::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    #[inline]
    fn sub(self, o: Cdd) -> Cdd {
        Cdd::new(self.re - o.re, self.im - o.im)
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd::new(-self.re, -self.im)
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    #[inline]
    fn mul(self, o: Cdd) -> Cdd {
        Cdd::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}

impl Div for Cdd {
    type Output = Cdd;
    fn div(self, o: Cdd) -> Cdd {
        let d = o.norm_sqr();
        let n = self * o.conj();
        Cdd::new(n.re / d, n.im / d)
    }
}

impl AddAssign for Cdd {
    fn add_assign(&mut self, o: Cdd) {
        *self = *self + o;
    }
}

impl Sum for Cdd {
    fn sum<I: Iterator<Item = Cdd>>(iter: I) -> Cdd {
        iter.fold(Cdd::ZERO, |a, b| a + b)
    }
}

impl fmt::Debug for Cdd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.re, self.im)
    }
}

/// 2×2 or 4×4 matrix over [`Cdd`], row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct XMat {
    dim: usize,
    data: [Cdd; 16],
}

impl XMat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "dimension must be 2 or 4");
        XMat {
            dim,
            data: [Cdd::ZERO; 16],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = XMat::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Cdd::ONE;
        }
        m
    }

    pub fn from_cmat(a: &CMat) -> Self {
        let mut m = XMat::zeros(a.dim());
        for (dst, src) in m.data.iter_mut().zip(a.entries()) {
            *dst = Cdd::from(*src);
        }
        m
    }

    pub fn from_diag(d: &[Cdd]) -> Self {
        let mut m = XMat::zeros(d.len());
        for (i, z) in d.iter().enumerate() {
            m[(i, i)] = *z;
        }
        m
    }

    /// Rounds every entry to `f64`.
    pub fn to_cmat(&self) -> CMat {
        let n = self.dim * self.dim;
        let entries: Vec<C64> = self.data[..n].iter().map(|z| z.to_c64()).collect();
        CMat::new(self.dim, &entries).unwrap_or_else(|_| {
            // overflowing entries are clamped so callers see a finite matrix
            let clamped: Vec<C64> = entries
                .iter()
                .map(|z| c64(clamp(z.re), clamp(z.im)))
                .collect();
            CMat::new(self.dim, &clamped).expect("clamped entries are finite")
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_finite(&self) -> bool {
        self.data[..self.dim * self.dim]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Cdd {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = XMat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = XMat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self[(j, i)];
            }
        }
        m
    }

    pub fn scale(&self, s: Cdd) -> Self {
        let mut m = *self;
        for z in m.data.iter_mut() {
            *z = *z * s;
        }
        m
    }

    /// Largest entry modulus, rounded.
    pub fn max_abs(&self) -> f64 {
        self.data[..self.dim * self.dim]
            .iter()
            .map(|z| z.to_c64().norm())
            .fold(0.0, f64::max)
    }

    /// Kronecker product of two 2×2 matrices.
    pub fn kron(&self, other: &Self) -> Self {
        assert!(self.dim == 2 && other.dim == 2, "kron needs 2×2 factors");
        let mut m = XMat::zeros(4);
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

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = *self;
        let mut acc = XMat::identity(self.dim);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            exp >>= 1;
        }
        acc
    }

    pub fn mul_vec(&self, v: &[Cdd]) -> Vec<Cdd> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Eigenvalues of a 2×2 matrix from the characteristic polynomial,
    /// `[h + r, h − r]` with h = tr/2 and r = √(h² − det).
    pub fn eigenvalues2(&self) -> [Cdd; 2] {
        assert_eq!(self.dim, 2, "eigenvalues2 needs a 2×2 matrix");
        let h = self.trace().scale(Dd::new(0.5));
        let det = self[(0, 0)] * self[(1, 1)] - self[(0, 1)] * self[(1, 0)];
        let r = (h * h - det).sqrt();
        [h + r, h - r]
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting. Returns
    /// `None` if a pivot vanishes exactly; conditioning is the caller's job.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.dim;
        let mut m = *self;
        let mut out = XMat::identity(n);
        for col in 0..n {
            let pivot = (col..n).max_by(|&i, &j| {
                m[(i, col)]
                    .norm_sqr()
                    .hi
                    .total_cmp(&m[(j, col)].norm_sqr().hi)
            })?;
            if m[(pivot, col)].norm_sqr().hi == 0.0 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    m.data.swap(col * n + j, pivot * n + j);
                    out.data.swap(col * n + j, pivot * n + j);
                }
            }
            let p = Cdd::ONE / m[(col, col)];
            for j in 0..n {
                m[(col, j)] = m[(col, j)] * p;
                out[(col, j)] = out[(col, j)] * p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = m[(i, col)];
                for j in 0..n {
                    let mv = m[(col, j)];
                    let ov = out[(col, j)];
                    m[(i, j)] = m[(i, j)] - f * mv;
                    out[(i, j)] = out[(i, j)] - f * ov;
                }
            }
        }
        Some(out)
    }
}

fn clamp(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-f64::MAX, f64::MAX)
    }
}

impl Index<(usize, usize)> for XMat {
    type Output = Cdd;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cdd {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for XMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cdd {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i * self.dim + j]
    }
}

impl Add for XMat {
    type Output = XMat;
    fn add(self, o: XMat) -> XMat {
        assert_eq!(self.dim, o.dim);
        let mut m = self;
        for (a, b) in m.data.iter_mut().zip(o.data.iter()) {
            *a += *b;
        }
        m
    }
}

impl Sub for XMat {
    type Output = XMat;
    fn sub(self, o: XMat) -> XMat {
        assert_eq!(self.dim, o.dim);
        let mut m = self;
        for (a, b) in m.data.iter_mut().zip(o.data.iter()) {
            *a = *a - *b;
        }
        m
    }
}

impl Mul for XMat {
    type Output = XMat;
    fn mul(self, o: XMat) -> XMat {
        assert_eq!(self.dim, o.dim);
        let n = self.dim;
        let mut m = XMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = (0..n).map(|k| self[(i, k)] * o[(k, j)]).sum();
            }
        }
        m
    }
}

impl fmt::Debug for XMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_cmat().fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_is_correctly_rounded_beyond_f64() {
        let q = Dd::new(10.0) / Dd::new(5.0);
        assert_eq!(q.hi, 2.0);
        assert_eq!(q.lo, 0.0);
        let third = Dd::ONE / Dd::new(3.0);
        let back = third * 3.0 - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn sqrt_squares_back() {
        let two = Dd::new(2.0);
        let r = two.sqrt();
        assert!((r * r - two).to_f64().abs() < 1e-31);
        let z = Cdd::from(c64(-3.0, 1e-20));
        let s = z.sqrt();
        assert!((s * s - z).norm().to_f64() < 1e-30);
        assert!(s.im.hi > 0.0);
    }

    #[test]
    fn catastrophic_cancellation_survives() {
        // (1e16 + 1) - 1e16 is lost in f64 but kept here
        let x = Dd::new(1e16) + Dd::ONE - Dd::new(1e16);
        assert_eq!(x.to_f64(), 1.0);
    }

    #[test]
    fn inverse_and_pow() {
        let a = CMat::new(
            4,
            &(0..16)
                .map(|i| c64((i as f64 * 0.7).sin() + if i % 5 == 0 { 2.0 } else { 0.0 }, (i as f64).cos()))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let x = XMat::from_cmat(&a);
        let prod = x * x.inverse().unwrap();
        assert!((prod - XMat::identity(4)).max_abs() < 1e-28);
        let p = x.pow(5);
        let q = x * x * x * x * x;
        assert!((p - q).max_abs() < 1e-24 * q.max_abs());
        assert!(p.to_cmat().max_abs_diff(&a.pow(5)) < 1e-10 * q.max_abs());
    }

    #[test]
    fn powi_negative() {
        let z = Cdd::from(c64(1.5, 0.25));
        let p = z.powi(7) * z.powi(-7);
        assert!((p - Cdd::ONE).norm().to_f64() < 1e-30);
    }
}

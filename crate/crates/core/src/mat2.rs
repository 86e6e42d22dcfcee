//! Dense 2×2 complex matrices.
//!
//! Every operator in the separable model is block diagonal over fiber modes
//! with 2×2 blocks indexed by the two cut components, so this small type
//! carries most of the linear algebra.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

pub type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[C64; 2]; 2],
}

impl Mat2 {
    pub const fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Self {
            m: [[m00, m01], [m10, m11]],
        }
    }

    pub fn real(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Self::new(m00.into(), m01.into(), m10.into(), m11.into())
    }

    pub fn identity() -> Self {
        Self::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Self::new(a, C64::new(0.0, 0.0), C64::new(0.0, 0.0), b)
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.m;
        Self::new(s * m[0][0], s * m[0][1], s * m[1][0], s * m[1][1])
    }

    pub fn adjoint(&self) -> Self {
        let m = self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn det(&self) -> C64 {
        let m = self.m;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> C64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let m = self.m;
        Some(Self::new(m[1][1], -m[0][1], -m[1][0], m[0][0]).scale(d.inv()))
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.distance(&self.adjoint()) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (*self * self.adjoint()).distance(&Self::identity()) <= tol
    }

    /// Eigenvalues from the characteristic polynomial.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let tr = self.trace();
        let disc = (tr * tr - 4.0 * self.det()).sqrt();
        [(tr - disc) * 0.5, (tr + disc) * 0.5]
    }

    /// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
    pub fn hermitian_eigen(&self) -> ([f64; 2], [[C64; 2]; 2]) {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = self.m[0][1];
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        let mid = 0.5 * (a + d);
        let vals = [mid - half_gap, mid + half_gap];
        if b.norm() <= f64::EPSILON * (a.abs() + d.abs()).max(f64::MIN_POSITIVE) {
            let e0 = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
            let e1 = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
            return if a <= d {
                (vals, [e0, e1])
            } else {
                (vals, [e1, e0])
            };
        }
        let vecs = vals.map(|lam| {
            // (A - lam) v = 0 with v = (b, lam - a)
            let v = [b, C64::new(lam - a, 0.0)];
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            [v[0] / n, v[1] / n]
        });
        (vals, vecs)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.m, o.m);
        Mat2::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.m, o.m);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// ⟨u, v⟩ linear in the first slot.
pub fn inner(u: [C64; 2], v: [C64; 2]) -> C64 {
    u[0] * v[0].conj() + u[1] * v[1].conj()
}

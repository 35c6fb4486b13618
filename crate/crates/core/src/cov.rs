//! Scattering vectors and 3x3 Hermitian covariance matrices.

use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One complex polarimetric sample (real and imaginary amplitude).
pub type ComplexSample = Complex64;

/// Relative tolerance for the positive-semidefinite check, scaled by trace.
pub const PSD_EPS: f64 = 1e-9;

/// Full 3x3 complex matrix, row-major.
pub type Matrix3 = [[Complex64; 3]; 3];

/// Reciprocal quad-pol scattering vector `[S_HH, S_HV, S_VV]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScatteringVector {
    pub hh: ComplexSample,
    pub hv: ComplexSample,
    pub vv: ComplexSample,
}

impl ScatteringVector {
    pub const ZERO: Self = Self::new(Complex64::ZERO, Complex64::ZERO, Complex64::ZERO);

    pub const fn new(hh: ComplexSample, hv: ComplexSample, vv: ComplexSample) -> Self {
        Self { hh, hv, vv }
    }

    /// Builds a vector from interleaved `(re, im)` pairs in HH, HV, VV order.
    pub fn from_parts(parts: [f64; 6]) -> Self {
        Self::new(
            Complex64::new(parts[0], parts[1]),
            Complex64::new(parts[2], parts[3]),
            Complex64::new(parts[4], parts[5]),
        )
    }

    pub fn to_parts(&self) -> [f64; 6] {
        [
            self.hh.re, self.hh.im, self.hv.re, self.hv.im, self.vv.re, self.vv.im,
        ]
    }

    pub fn channels(&self) -> [ComplexSample; 3] {
        [self.hh, self.hv, self.vv]
    }

    /// Total power `sᴴs`.
    pub fn norm_sqr(&self) -> f64 {
        self.hh.norm_sqr() + self.hv.norm_sqr() + self.vv.norm_sqr()
    }

    pub fn is_finite(&self) -> bool {
        self.to_parts().iter().all(|v| v.is_finite())
    }

    /// Squared Euclidean distance `(a - b)ᴴ(a - b)`.
    pub fn distance_sqr(&self, other: &Self) -> f64 {
        (self.hh - other.hh).norm_sqr()
            + (self.hv - other.hv).norm_sqr()
            + (self.vv - other.vv).norm_sqr()
    }
}

impl Sub for ScatteringVector {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self::new(self.hh - rhs.hh, self.hv - rhs.hv, self.vv - rhs.vv)
    }
}

/// Hermitian 3x3 covariance matrix stored as its diagonal and the upper
/// triangle; the lower triangle is implied by conjugate symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HermitianCov3 {
    pub d11: f64,
    pub d22: f64,
    pub d33: f64,
    pub c12: ComplexSample,
    pub c13: ComplexSample,
    pub c23: ComplexSample,
}

/// `ssᴴ` for a finite scattering vector.
pub fn outer_product(s: &ScatteringVector) -> Result<HermitianCov3> {
    if !s.is_finite() {
        return Err(Error::NonFinite("scattering vector"));
    }
    Ok(HermitianCov3::outer(s))
}

/// Entrywise `acc + w * c`.
pub fn cov_add_scaled(acc: &HermitianCov3, c: &HermitianCov3, w: f64) -> Result<HermitianCov3> {
    if !w.is_finite() {
        return Err(Error::NonFinite("weight"));
    }
    Ok(acc.add_scaled(c, w))
}

/// Frobenius norm of `a - b` over the full 3x3 matrices.
pub fn frobenius_distance(a: &HermitianCov3, b: &HermitianCov3) -> f64 {
    (*a - *b).frobenius_norm()
}

impl HermitianCov3 {
    pub const ZERO: Self = Self {
        d11: 0.0,
        d22: 0.0,
        d33: 0.0,
        c12: Complex64::ZERO,
        c13: Complex64::ZERO,
        c23: Complex64::ZERO,
    };

    pub const fn diag(d11: f64, d22: f64, d33: f64) -> Self {
        Self {
            d11,
            d22,
            d33,
            c12: Complex64::ZERO,
            c13: Complex64::ZERO,
            c23: Complex64::ZERO,
        }
    }

    pub const fn identity() -> Self {
        Self::diag(1.0, 1.0, 1.0)
    }

    /// Rank-one `ssᴴ` with no finiteness check.
    #[inline]
    pub fn outer(s: &ScatteringVector) -> Self {
        Self {
            d11: s.hh.norm_sqr(),
            d22: s.hv.norm_sqr(),
            d33: s.vv.norm_sqr(),
            c12: s.hh * s.hv.conj(),
            c13: s.hh * s.vv.conj(),
            c23: s.hv * s.vv.conj(),
        }
    }

    /// The nine stored scalars: `d11, d22, d33, re c12, im c12, re c13, im c13, re c23, im c23`.
    pub fn to_scalars(&self) -> [f64; 9] {
        [
            self.d11,
            self.d22,
            self.d33,
            self.c12.re,
            self.c12.im,
            self.c13.re,
            self.c13.im,
            self.c23.re,
            self.c23.im,
        ]
    }

    pub fn from_scalars(v: [f64; 9]) -> Self {
        Self {
            d11: v[0],
            d22: v[1],
            d33: v[2],
            c12: Complex64::new(v[3], v[4]),
            c13: Complex64::new(v[5], v[6]),
            c23: Complex64::new(v[7], v[8]),
        }
    }

    #[inline]
    pub fn add_scaled(&self, c: &Self, w: f64) -> Self {
        Self {
            d11: self.d11 + w * c.d11,
            d22: self.d22 + w * c.d22,
            d33: self.d33 + w * c.d33,
            c12: self.c12 + c.c12 * w,
            c13: self.c13 + c.c13 * w,
            c23: self.c23 + c.c23 * w,
        }
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self::ZERO.add_scaled(self, w)
    }

    pub fn trace(&self) -> f64 {
        self.d11 + self.d22 + self.d33
    }

    pub fn is_finite(&self) -> bool {
        self.to_scalars().iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        let diag = self.d11 * self.d11 + self.d22 * self.d22 + self.d33 * self.d33;
        let off = self.c12.norm_sqr() + self.c13.norm_sqr() + self.c23.norm_sqr();
        (diag + 2.0 * off).sqrt()
    }

    /// Full matrix with the lower triangle filled by conjugation.
    pub fn to_matrix(&self) -> Matrix3 {
        let r = |x: f64| Complex64::new(x, 0.0);
        [
            [r(self.d11), self.c12, self.c13],
            [self.c12.conj(), r(self.d22), self.c23],
            [self.c13.conj(), self.c23.conj(), r(self.d33)],
        ]
    }

    /// Projects a full matrix onto Hermitian storage (upper triangle and real diagonal).
    pub fn from_matrix(m: &Matrix3) -> Self {
        Self {
            d11: m[0][0].re,
            d22: m[1][1].re,
            d33: m[2][2].re,
            c12: m[0][1],
            c13: m[0][2],
            c23: m[1][2],
        }
    }

    /// Eigenvalues in ascending order, by cyclic complex Jacobi rotations.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut a = self.to_matrix();
        let scale = self.frobenius_norm();
        if scale == 0.0 {
            return [0.0; 3];
        }
        for _sweep in 0..64 {
            let off = a[0][1].norm_sqr() + a[0][2].norm_sqr() + a[1][2].norm_sqr();
            if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                jacobi_rotate(&mut a, p, q);
            }
        }
        let mut ev = [a[0][0].re, a[1][1].re, a[2][2].re];
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Hermitian positive semidefinite up to `PSD_EPS * trace`.
    pub fn is_psd(&self) -> bool {
        self.is_finite() && self.trace() >= 0.0 && self.min_eigenvalue() >= -PSD_EPS * self.trace()
    }

    /// Lower Cholesky factor `L` with `L Lᴴ = self`; fails unless strictly positive definite.
    pub fn cholesky(&self) -> Result<Matrix3> {
        if !self.is_finite() {
            return Err(Error::NonFinite("covariance"));
        }
        let a = self.to_matrix();
        let mut l = [[Complex64::ZERO; 3]; 3];
        for j in 0..3 {
            let mut diag = a[j][j].re;
            for k in 0..j {
                diag -= l[j][k].norm_sqr();
            }
            if !(diag > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l[j][j] = Complex64::new(ljj, 0.0);
            for i in (j + 1)..3 {
                let mut v = a[i][j];
                for k in 0..j {
                    v -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = v / ljj;
            }
        }
        Ok(l)
    }
}

/// One Jacobi step zeroing `a[p][q]` (and `a[q][p]`) via `a <- Jᴴ a J`.
fn jacobi_rotate(a: &mut Matrix3, p: usize, q: usize) {
    let apq = a[p][q];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    // phase: make the pivot real, then apply a real rotation
    let phase = apq / mag;
    let theta = (a[q][q].re - a[p][p].re) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let mut j = [[Complex64::ZERO; 3]; 3];
    for (i, row) in j.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    // J = diag(phase_q) * R, with R the real rotation acting on (p, q)
    let conj_phase = phase.conj();
    j[p][p] = Complex64::new(c, 0.0);
    j[p][q] = Complex64::new(s, 0.0);
    j[q][p] = conj_phase * -s;
    j[q][q] = conj_phase * c;
    let aj = mat_mul(a, &j);
    let jh = conj_transpose(&j);
    *a = mat_mul(&jh, &aj);
    a[p][q] = Complex64::ZERO;
    a[q][p] = Complex64::ZERO;
    for i in 0..3 {
        a[i][i].im = 0.0;
    }
}

fn mat_mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[Complex64::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn conj_transpose(a: &Matrix3) -> Matrix3 {
    let mut out = [[Complex64::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// `L z` for a lower-triangular factor.
pub fn lower_mul(l: &Matrix3, z: [Complex64; 3]) -> ScatteringVector {
    ScatteringVector::new(
        l[0][0] * z[0],
        l[1][0] * z[0] + l[1][1] * z[1],
        l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2],
    )
}

impl Add for HermitianCov3 {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        self.add_scaled(&rhs, 1.0)
    }
}

impl Sub for HermitianCov3 {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self.add_scaled(&rhs, -1.0)
    }
}

impl Mul<f64> for HermitianCov3 {
    type Output = Self;

    fn mul(self, rhs: f64) -> Self {
        self.scaled(rhs)
    }
}

//! Truncated power series with complex coefficients.
//!
//! A [`Series`] of order `m` stores the Taylor coefficients `a_0..=a_m` of a
//! function of the increment `h` about some base point. Products, reciprocals,
//! exponentials and principal logarithms follow the usual recurrences, so
//! derivatives of compositions come out exact up to rounding.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    coeffs: Vec<Complex64>,
}

impl Series {
    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// The identity map `z0 + h`.
    pub fn variable(z0: Complex64, order: usize) -> Self {
        let mut s = Self::constant(z0, order);
        if order >= 1 {
            s.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        s
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least one coefficient");
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    pub fn add_const(&self, c: Complex64) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += c;
        s
    }

    pub fn recip(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("reciprocal of a series vanishing at the base point".into()));
        }
        let inv0 = 1.0 / a0;
        let n = self.coeffs.len();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        b[0] = inv0;
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * b[k - j];
            }
            b[k] = -acc * inv0;
        }
        Ok(Self { coeffs: b })
    }

    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                acc += self.coeffs[j] * e[k - j] * j as f64;
            }
            e[k] = acc / k as f64;
        }
        Self { coeffs: e }
    }

    /// Principal logarithm.
    pub fn ln(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == Complex64::new(0.0, 0.0) {
            return Err(Error::Domain("logarithm of a series vanishing at the base point".into()));
        }
        let n = self.coeffs.len();
        let mut l = vec![Complex64::new(0.0, 0.0); n];
        l[0] = a0.ln();
        for k in 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 1..k {
                acc += l[j] * self.coeffs[k - j] * j as f64;
            }
            l[k] = (self.coeffs[k] - acc / k as f64) / a0;
        }
        Ok(Self { coeffs: l })
    }

    /// Principal power `exp(p · Log s)`.
    pub fn powf(&self, p: f64) -> Result<Self> {
        if p == 0.0 {
            return Ok(Self::constant(Complex64::new(1.0, 0.0), self.order()));
        }
        Ok(self.ln()?.scale(Complex64::new(p, 0.0)).exp())
    }

    /// Integer power by repeated squaring (negative powers via the reciprocal).
    pub fn powi(&self, n: i32) -> Result<Self> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Self::constant(Complex64::new(1.0, 0.0), self.order());
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        Series { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        Series { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        Series { coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        let n = self.coeffs.len();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            if self.coeffs[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += self.coeffs[i] * rhs.coeffs[j];
            }
        }
        Series { coeffs: c }
    }
}

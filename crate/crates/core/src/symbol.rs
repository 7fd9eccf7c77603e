//! The symbol `φ` of an operator function `φ(W)`.
//!
//! Powers `φ^α` use the principal branch, except for monomials `c·z^n`
//! where `φ^α = exp(α(Log c + n Log z))` so that the power stays analytic in
//! any sector `|arg z| < π/n` around the positive axis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, FRAC_PI_2};

use crate::error::{Error, Result};
use crate::series::Series;

/// Smallest admissible value of `Re φ^α(λ_q)` for a decaying mode.
pub const DECAY_THRESHOLD: f64 = 1e-8;
/// Safety margin subtracted from `π/2α` when certifying sampled sector maps.
pub const SECTOR_MARGIN: f64 = 1e-3;

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Coefficient-list description of `φ`. Complex numbers serialize as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionSpec {
    /// `coef · z^power`.
    Monomial {
        #[serde(default = "one")]
        coef: Complex64,
        power: u32,
    },
    /// `Σ c_k z^k`, `coeffs = [c_0, .., c_s]`.
    Polynomial { coeffs: Vec<Complex64> },
    /// `Σ c_k z^{lowest + k}`.
    Laurent { lowest: i32, coeffs: Vec<Complex64> },
    /// Truncated Taylor series of an entire function of declared order `order`.
    EntireTruncated { coeffs: Vec<Complex64>, order: f64 },
    /// `(z^xi · ln z · ln ln z)^kappa`.
    LogModulated { xi: f64, kappa: f64 },
}

/// Sector-mapping certificate: `|arg z| ≤ theta` is mapped into `|arg φ(z)| ≤ varpi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorCertificate {
    pub theta: f64,
    pub varpi: f64,
}

impl FunctionSpec {
    pub fn identity() -> Self {
        FunctionSpec::Monomial { coef: one(), power: 1 }
    }

    pub fn monomial(power: u32) -> Self {
        FunctionSpec::Monomial { coef: one(), power }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionSpec::Monomial { coef, .. } if coef.norm() == 0.0 => {
                Err(Error::InvalidSpec("monomial coefficient must be non-zero".into()))
            }
            FunctionSpec::Polynomial { coeffs } | FunctionSpec::Laurent { coeffs, .. } if coeffs.is_empty() => {
                Err(Error::InvalidSpec("coefficient list is empty".into()))
            }
            FunctionSpec::EntireTruncated { coeffs, order } => {
                if coeffs.is_empty() {
                    Err(Error::InvalidSpec("coefficient list is empty".into()))
                } else if !(*order >= 0.0 && *order < 0.5) {
                    Err(Error::InvalidSpec(format!("entire function order {order} must lie in [0, 1/2)")))
                } else {
                    Ok(())
                }
            }
            FunctionSpec::LogModulated { xi, kappa } if !(*xi > 0.0 && *kappa > 0.0) => {
                Err(Error::InvalidSpec("log-modulated symbol needs xi > 0 and kappa > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// `Some((c, n))` when `φ(z) = c z^n`.
    pub fn as_monomial(&self) -> Option<(Complex64, u32)> {
        match self {
            FunctionSpec::Monomial { coef, power } => Some((*coef, *power)),
            _ => None,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            FunctionSpec::Monomial { coef, power } => coef * z.powu(*power),
            FunctionSpec::Polynomial { coeffs } | FunctionSpec::EntireTruncated { coeffs, .. } => horner(coeffs, z),
            FunctionSpec::Laurent { lowest, coeffs } => horner(coeffs, z) * z.powi(*lowest),
            FunctionSpec::LogModulated { xi, kappa } => {
                let l = z.ln();
                (z.powf(*xi) * l * l.ln()).powf(*kappa)
            }
        }
    }

    /// `φ^α(z)`.
    pub fn eval_pow(&self, z: Complex64, alpha: f64) -> Complex64 {
        match self {
            FunctionSpec::Monomial { coef, power } => {
                if alpha == 1.0 {
                    coef * z.powu(*power)
                } else {
                    (alpha * (coef.ln() + z.ln() * *power as f64)).exp()
                }
            }
            _ if alpha == 1.0 => self.eval(z),
            _ => (self.eval(z).ln() * alpha).exp(),
        }
    }

    /// `φ(s)` for a truncated power series `s`.
    pub fn apply_series(&self, s: &Series) -> Result<Series> {
        Ok(match self {
            FunctionSpec::Monomial { coef, power } => s.powi(*power as i32)?.scale(*coef),
            FunctionSpec::Polynomial { coeffs } | FunctionSpec::EntireTruncated { coeffs, .. } => horner_series(coeffs, s),
            FunctionSpec::Laurent { lowest, coeffs } => &horner_series(coeffs, s) * &s.powi(*lowest)?,
            FunctionSpec::LogModulated { xi, kappa } => {
                let l = s.ln()?;
                let ll = l.ln()?;
                (&(&s.powf(*xi)? * &l) * &ll).powf(*kappa)?
            }
        })
    }

    /// `φ^α(s)` on truncated power series, on the same branch as [`eval_pow`](Self::eval_pow).
    pub fn apply_series_pow(&self, s: &Series, alpha: f64) -> Result<Series> {
        match self {
            FunctionSpec::Monomial { coef, power } if alpha != 1.0 => {
                let l = s.ln()?.scale(Complex64::new(alpha * *power as f64, 0.0));
                Ok(l.add_const(coef.ln() * alpha).exp())
            }
            _ if alpha == 1.0 => self.apply_series(s),
            _ => self.apply_series(s)?.powf(alpha),
        }
    }

    /// Checks that `φ` maps the sector `|arg z| ≤ theta` into `|arg w| < π/2α`.
    ///
    /// Monomials, polynomials and Laurent symbols use the per-coefficient
    /// condition `|arg c_n| + |n|·theta < π/2α`. Truncated entire functions
    /// and log-modulated symbols are sampled along the two boundary rays.
    pub fn sector_certificate(&self, theta: f64, alpha: f64) -> Result<SectorCertificate> {
        self.validate()?;
        let limit = FRAC_PI_2 / alpha;
        let coefficient_rule = |pairs: Vec<(i64, Complex64)>| -> Result<SectorCertificate> {
            let mut varpi: f64 = 0.0;
            for (n, c) in pairs {
                if c.norm() == 0.0 {
                    continue;
                }
                let a = c.arg().abs() + (n.unsigned_abs() as f64) * theta;
                if a >= limit {
                    return Err(Error::Domain(format!(
                        "coefficient of z^{n} violates |arg c| + |n|θ < π/2α ({a:.6} ≥ {limit:.6})"
                    )));
                }
                varpi = varpi.max(a);
            }
            Ok(SectorCertificate { theta, varpi })
        };
        match self {
            FunctionSpec::Monomial { coef, power } => coefficient_rule(vec![(*power as i64, *coef)]),
            FunctionSpec::Polynomial { coeffs } => {
                coefficient_rule(coeffs.iter().enumerate().map(|(k, c)| (k as i64, *c)).collect())
            }
            FunctionSpec::Laurent { lowest, coeffs } => coefficient_rule(
                coeffs.iter().enumerate().map(|(k, c)| (*lowest as i64 + k as i64, *c)).collect(),
            ),
            FunctionSpec::EntireTruncated { .. } => self.sampled_certificate(theta, limit, 1e-2, 1e6),
            FunctionSpec::LogModulated { .. } => self.sampled_certificate(theta, limit, E.powf(E), 1e8),
        }
    }

    fn sampled_certificate(&self, theta: f64, limit: f64, r0: f64, r1: f64) -> Result<SectorCertificate> {
        let samples = 400;
        let mut varpi: f64 = 0.0;
        for k in 0..=samples {
            let r = r0 * (r1 / r0).powf(k as f64 / samples as f64);
            for sign in [-1.0, 1.0] {
                let w = self.eval(Complex64::from_polar(r, sign * theta));
                if w.norm() == 0.0 {
                    return Err(Error::Domain(format!("symbol vanishes on the sector boundary at radius {r:.3e}")));
                }
                varpi = varpi.max(w.arg().abs());
            }
        }
        if varpi >= limit - SECTOR_MARGIN {
            return Err(Error::Domain(format!(
                "sampled |arg φ| reaches {varpi:.6}, not below π/2α − margin = {:.6}",
                limit - SECTOR_MARGIN
            )));
        }
        Ok(SectorCertificate { theta, varpi })
    }

    /// Fails with the list of characteristic numbers whose mode does not decay.
    pub fn decay_certificate(&self, lambdas: &[Complex64], alpha: f64) -> Result<()> {
        let offending: Vec<Complex64> = lambdas
            .iter()
            .copied()
            .filter(|l| {
                let v = self.eval_pow(*l, alpha);
                !(v.re > DECAY_THRESHOLD)
            })
            .collect();
        if offending.is_empty() {
            Ok(())
        } else {
            Err(Error::NonDecaying { offending })
        }
    }
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn horner_series(coeffs: &[Complex64], s: &Series) -> Series {
    let m = s.order();
    let mut acc = Series::constant(Complex64::new(0.0, 0.0), m);
    for c in coeffs.iter().rev() {
        acc = (&acc * s).add_const(*c);
    }
    acc
}

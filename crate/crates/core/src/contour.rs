//! Sector contours and contour-integral evaluation of
//! `u(t) = (1/2πi) ∫ e^{−φ^α(λ)t} B(I − λB)^{-1} f dλ`.
//!
//! The contour `ϑ(B)` consists of the arc `|λ| = r, |arg λ| ≤ ψ` and the two
//! rays `arg λ = ±ψ, |λ| ≥ r`, with `ψ = θ + ς`. It is traversed so that the
//! characteristic numbers lie on its right (lower ray inwards, arc
//! counter-clockwise, upper ray outwards); with this orientation the integral
//! equals the sum of the residue contributions `P_q(φ^α, t) f` directly.

use std::cell::RefCell;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{diagonalize, sector_gauge, CVector, DenseOperator, JordanSpec, ResolventKernel};
use crate::quad::{integrate_on, QuadSettings};
use crate::symbol::FunctionSpec;

/// Quadrature tolerances used on contour pieces.
pub type QuadratureSettings = QuadSettings;

/// Radius grid factor used while searching for the ray truncation.
const TRUNCATION_STEP: f64 = 1.25;
/// Largest ray truncation tried before giving up.
const MAX_TRUNCATION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContourKind {
    /// Arc around the origin plus two rays.
    Theta,
    /// Boundary of the sector with vertex `vertex < 0` and semi-angle `inner_angle + ς`.
    Gamma { vertex: f64, inner_angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorContour {
    pub kind: ContourKind,
    pub arc_radius: f64,
    /// `θ + ς`.
    pub semi_angle: f64,
    pub ray_truncation: f64,
}

impl SectorContour {
    pub fn varsigma(&self, theta: f64) -> f64 {
        self.semi_angle - theta
    }
}

/// Largest `|arg λ_q|` over the characteristic numbers.
pub fn spectral_angle(lambdas: &[Complex64]) -> f64 {
    lambdas.iter().map(|l| l.arg().abs()).fold(0.0, f64::max)
}

/// Opening limit for the rays: `Re φ^α` stays positive along `arg λ = ±ψ`
/// for every `ψ` below it. Only known in closed form for monomials.
fn opening_limit(phi: &FunctionSpec, alpha: f64) -> f64 {
    let limit = FRAC_PI_2 / alpha;
    // per-coefficient rule |arg c_n| + |n|ψ < π/2α over the non-constant terms
    let coefficient_limit = |pairs: &mut dyn Iterator<Item = (i64, Complex64)>| {
        pairs
            .filter(|(n, c)| *n != 0 && c.norm() > 0.0)
            .map(|(n, c)| (limit - c.arg().abs()) / n.unsigned_abs() as f64)
            .fold(PI, f64::min)
    };
    match phi {
        FunctionSpec::Monomial { coef, power } => coefficient_limit(&mut std::iter::once((*power as i64, *coef))),
        FunctionSpec::Polynomial { coeffs } => {
            coefficient_limit(&mut coeffs.iter().enumerate().map(|(k, c)| (k as i64, *c)))
        }
        FunctionSpec::Laurent { lowest, coeffs } => {
            coefficient_limit(&mut coeffs.iter().enumerate().map(|(k, c)| (*lowest as i64 + k as i64, *c)))
        }
        _ => limit.min(PI),
    }
}

/// Default extra opening `ς = (limit − θ)/2`, halfway between the spectral
/// angle and the largest admissible ray angle `limit` (`π/2α` for `φ(z) = z`).
///
/// Keeping the rays well away from the characteristic numbers matters for long
/// Jordan chains, where `‖(W − λ)^{-1}‖` grows like `dist(λ, λ_q)^{−k}`.
pub fn default_varsigma(theta: f64, phi: &FunctionSpec, alpha: f64) -> Result<f64> {
    let room = opening_limit(phi, alpha) - theta;
    if !(room > 0.0) {
        return Err(Error::NonDecaying { offending: vec![Complex64::from_polar(1.0, theta)] });
    }
    Ok(room / 2.0)
}

fn min_ray_decay(phi: &FunctionSpec, alpha: f64, radius: f64, psi: f64) -> f64 {
    [psi, -psi]
        .iter()
        .map(|a| phi.eval_pow(Complex64::from_polar(radius, *a), alpha).re)
        .fold(f64::INFINITY, f64::min)
}

fn tail_small(phi: &FunctionSpec, alpha: f64, radius: f64, psi: f64, t: f64, target: f64) -> bool {
    let d = min_ray_decay(phi, alpha, radius, psi);
    d > 0.0 && (-t * d).exp() * (1.0 + radius) < target
}

/// Builds `ϑ(B)` for characteristic numbers of the given moduli, lying in
/// `|arg λ| ≤ theta`.
///
/// The arc radius is `min|λ_q|/2`. The ray truncation is the first point of
/// the grid `2·max|λ_q|·1.25^k` at which `e^{−t·min Re φ^α}(1 + R)` drops
/// below `abs_tol/10` (checked also at `2R` and `4R`).
pub fn build_contour(
    moduli: &[f64],
    theta: f64,
    varsigma: Option<f64>,
    t: f64,
    phi: &FunctionSpec,
    alpha: f64,
    abs_tol: f64,
) -> Result<SectorContour> {
    if moduli.is_empty() || moduli.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(Error::Domain("characteristic moduli must be positive and finite".into()));
    }
    if !(t > 0.0) || !(alpha > 0.0) || !(abs_tol > 0.0) {
        return Err(Error::Domain(format!("need t > 0, α > 0, absTol > 0 (t = {t}, α = {alpha})")));
    }
    let varsigma = match varsigma {
        Some(s) if s > 0.0 => s,
        Some(s) => return Err(Error::Domain(format!("ς must be positive, got {s}"))),
        None => default_varsigma(theta, phi, alpha)?,
    };
    let psi = theta + varsigma;
    if matches!(phi, FunctionSpec::Monomial { .. } | FunctionSpec::Polynomial { .. } | FunctionSpec::Laurent { .. })
        && psi >= opening_limit(phi, alpha)
    {
        return Err(Error::NonDecaying {
            offending: vec![Complex64::from_polar(1.0, psi), Complex64::from_polar(1.0, -psi)],
        });
    }
    if psi >= PI {
        return Err(Error::Domain(format!("ray angle {psi} crosses the branch cut")));
    }
    let lo = moduli.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = moduli.iter().cloned().fold(0.0, f64::max);
    let target = abs_tol / 10.0;
    let mut radius = 2.0 * hi;
    while radius <= MAX_TRUNCATION {
        if (0..3).all(|k| tail_small(phi, alpha, radius * (1 << k) as f64, psi, t, target)) {
            return Ok(SectorContour {
                kind: ContourKind::Theta,
                arc_radius: lo / 2.0,
                semi_angle: psi,
                ray_truncation: radius,
            });
        }
        radius *= TRUNCATION_STEP;
    }
    Err(Error::NonDecaying {
        offending: vec![Complex64::from_polar(MAX_TRUNCATION, psi), Complex64::from_polar(MAX_TRUNCATION, -psi)],
    })
}

/// Shifted contour `Γ(B)`: boundary of the sector with vertex `vertex < 0`
/// and semi-angle `inner_angle + varsigma`.
pub fn shifted_contour(vertex: f64, inner_angle: f64, varsigma: f64) -> Result<SectorContour> {
    if !(vertex < 0.0) || !(varsigma > 0.0) || !(inner_angle + varsigma < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "need vertex < 0, ς > 0 and θ_ι + ς < π/2 (vertex = {vertex}, θ_ι = {inner_angle}, ς = {varsigma})"
        )));
    }
    Ok(SectorContour {
        kind: ContourKind::Gamma { vertex, inner_angle },
        arc_radius: 0.0,
        semi_angle: inner_angle + varsigma,
        ray_truncation: f64::INFINITY,
    })
}

/// Contour-integral value with its error budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourOutcome {
    pub value: CVector,
    /// `quadrature_error + tail_estimate`.
    pub error: f64,
    pub quadrature_error: f64,
    /// Estimated contribution of the rays beyond the truncation radius.
    pub tail_estimate: f64,
    pub panels: usize,
}

/// `(1/2πi) ∫_ϑ e^{−φ^α(λ)t} B(I − λB)^{-1} f dλ`.
pub fn contour_integral(
    b: &DenseOperator,
    phi: &FunctionSpec,
    alpha: f64,
    t: f64,
    f: &CVector,
    contour: &SectorContour,
    settings: &QuadratureSettings,
) -> Result<ContourOutcome> {
    integrate_contour(b, phi, alpha, t, f, contour, settings, false)
}

/// `(1/2πi) ∫_ϑ φ(λ) e^{−φ^α(λ)t} B(I − λB)^{-1} f dλ`, that is `φ(W) u(t)`.
pub fn weighted_contour_integral(
    b: &DenseOperator,
    phi: &FunctionSpec,
    alpha: f64,
    t: f64,
    f: &CVector,
    contour: &SectorContour,
    settings: &QuadratureSettings,
) -> Result<ContourOutcome> {
    integrate_contour(b, phi, alpha, t, f, contour, settings, true)
}

#[allow(clippy::too_many_arguments)]
fn integrate_contour(
    b: &DenseOperator,
    phi: &FunctionSpec,
    alpha: f64,
    t: f64,
    f: &CVector,
    contour: &SectorContour,
    settings: &QuadratureSettings,
    weighted: bool,
) -> Result<ContourOutcome> {
    if f.len() != b.dim() {
        return Err(Error::Dimension { expected: b.dim(), got: f.len() });
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("contour integral needs t > 0, got {t}")));
    }
    if contour.kind != ContourKind::Theta {
        return Err(Error::Precondition("only the contour ϑ(B) is integrated".into()));
    }
    let n = b.dim();
    if f.norm() == 0.0 {
        return Ok(ContourOutcome { value: CVector::zeros(n), error: 0.0, quadrature_error: 0.0, tail_estimate: 0.0, panels: 0 });
    }
    let kernel = ResolventKernel::new(b);
    let integrand = |lambda: Complex64| -> Result<CVector> {
        let mut w = (-phi.eval_pow(lambda, alpha) * t).exp();
        if weighted {
            w *= phi.eval(lambda);
        }
        Ok(kernel.b_resolvent(lambda, f)? * w)
    };
    let (r, big, psi) = (contour.arc_radius, contour.ray_truncation, contour.semi_angle);
    let piece_settings = QuadSettings { abs_tol: settings.abs_tol / 3.0, ..*settings };

    let mut ray_edges = vec![r];
    while ray_edges.last().unwrap() * 2.0 < big {
        let next = ray_edges.last().unwrap() * 2.0;
        ray_edges.push(next);
    }
    ray_edges.push(big);
    let arc_edges: Vec<f64> = (0..=8).map(|k| -psi + 2.0 * psi * k as f64 / 8.0).collect();

    // dλ/ds for each piece; the lower ray runs inwards, hence the sign
    let ray = |sign: f64| {
        let dir = Complex64::from_polar(1.0, sign * psi);
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let mut g = |s: f64| match integrand(dir * s) {
            Ok(v) => v * (dir * sign),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                CVector::zeros(n)
            }
        };
        let out = integrate_on(&mut g, &ray_edges, &piece_settings);
        match failure.into_inner() {
            Some(e) => Err(e),
            None => out,
        }
    };
    let arc = || {
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let mut g = |a: f64| {
            let lam = Complex64::from_polar(r, a);
            match integrand(lam) {
                Ok(v) => v * (Complex64::i() * lam),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    CVector::zeros(n)
                }
            }
        };
        let out = integrate_on(&mut g, &arc_edges, &piece_settings);
        match failure.into_inner() {
            Some(e) => Err(e),
            None => out,
        }
    };
    let (lower, (upper, arc_part)) = rayon::join(|| ray(-1.0), || rayon::join(|| ray(1.0), arc));
    let (lower, upper, arc_part) = (lower?, upper?, arc_part?);

    let norm = 1.0 / TAU;
    let value = (lower.value + upper.value + arc_part.value) * Complex64::new(0.0, -norm);
    let quadrature_error = (lower.error + upper.error + arc_part.error) * norm;
    let mut tail_estimate = 0.0;
    for sign in [-1.0, 1.0] {
        let dir = Complex64::from_polar(1.0, sign * psi);
        let g = integrand(dir * big)?.norm();
        let h = 1e-3 * big;
        let slope = t * (phi.eval_pow(dir * (big + h), alpha).re - phi.eval_pow(dir * big, alpha).re) / h;
        tail_estimate += if slope > 0.0 { g / slope } else { g * big } * norm;
    }
    Ok(ContourOutcome {
        value,
        error: quadrature_error + tail_estimate,
        quadrature_error,
        tail_estimate,
        panels: lower.panels.len() + upper.panels.len() + arc_part.panels.len(),
    })
}

/// Default residue circle radius: half the distance from `λ_q` to the
/// nearest other characteristic number or to the origin.
pub fn default_residue_radius(lambdas: &[Complex64], lambda_q: Complex64) -> f64 {
    let mut d = lambda_q.norm();
    for l in lambdas {
        let dist = (l - lambda_q).norm();
        if dist > 1e-8 * lambda_q.norm() {
            d = d.min(dist);
        }
    }
    0.5 * d
}

/// `P_q(φ^α, t) f` as `−(1/2πi)∮` of the integrand over the circle
/// `|λ − λ_q| = radius`, by the periodic trapezoid rule with doubling.
pub fn pole_residue(
    b: &DenseOperator,
    lambda_q: Complex64,
    phi: &FunctionSpec,
    alpha: f64,
    t: f64,
    f: &CVector,
    radius: f64,
) -> Result<CVector> {
    if f.len() != b.dim() {
        return Err(Error::Dimension { expected: b.dim(), got: f.len() });
    }
    if !(radius > 0.0) || radius >= lambda_q.norm() {
        return Err(Error::Domain(format!("residue radius {radius} must lie in (0, |λ_q|)")));
    }
    let kernel = ResolventKernel::new(b);
    let lambdas = kernel.characteristic_numbers();
    // computed eigenvalues of a Jordan block scatter around λ_q, so anything
    // within half the radius counts as λ_q itself
    let dist: Vec<f64> = lambdas.iter().map(|l| (*l - lambda_q).norm()).collect();
    if !dist.iter().any(|d| *d < 0.5 * radius) {
        return Err(Error::Domain(format!("{lambda_q} is not a characteristic number")));
    }
    if dist.iter().any(|d| *d >= 0.5 * radius && *d <= radius * (1.0 + 1e-6)) {
        let count = dist.iter().filter(|d| **d <= radius * (1.0 + 1e-6)).count();
        return Err(Error::Multiplicity { radius, count });
    }
    let eval = |k: usize, m: usize| -> Result<CVector> {
        let e = Complex64::from_polar(1.0, TAU * k as f64 / m as f64);
        let lam = lambda_q + e * radius;
        let w = (-phi.eval_pow(lam, alpha) * t).exp();
        Ok(kernel.b_resolvent(lam, f)? * (w * e * radius))
    };
    let mut m = 16;
    let mut sum = CVector::zeros(b.dim());
    for k in 0..m {
        sum += eval(k, m)?;
    }
    let mut estimate = sum.clone() / Complex64::new(m as f64, 0.0);
    loop {
        // add the midpoints of the current rule
        for k in 0..m {
            sum += eval(2 * k + 1, 2 * m)?;
        }
        m *= 2;
        let next = sum.clone() / Complex64::new(m as f64, 0.0);
        let change = (&next - &estimate).norm();
        estimate = next;
        if change <= 1e-14 * estimate.norm().max(f.norm() * 1e-3) || m >= 1 << 16 {
            break;
        }
    }
    // (1/2πi)∮ g dλ = mean of g·ρe^{iθ}; the projector carries the opposite sign
    Ok(-estimate)
}

/// Largest sampled `‖(I − λB)^{-1}‖·sin φ*` along the ray `arg λ = psi`,
/// `φ* = min(|psi| − θ, π/2)`. The bound holds when the result is ≤ 1.
pub fn ray_resolvent_bound_check(b: &DenseOperator, theta: f64, psi: f64, samples: usize) -> Result<f64> {
    let n = b.dim();
    let gauge = sector_gauge(b, 0.0, (n * n).max(256))?;
    if !gauge.certified || gauge.semi_angle > theta + 1e-12 {
        return Err(Error::Precondition(format!(
            "numerical range is not certified inside the sector of semi-angle {theta} (estimate {})",
            gauge.semi_angle
        )));
    }
    if psi.abs() <= theta {
        return Err(Error::Precondition(format!("ray angle {psi} lies inside the sector")));
    }
    let phi_star = (psi.abs() - theta).min(FRAC_PI_2);
    let kernel = ResolventKernel::new(b);
    let scale = crate::linops::spectral_norm(b.matrix()).max(f64::MIN_POSITIVE);
    let samples = samples.max(2);
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let s = 1e-3 * 1e7f64.powf(k as f64 / (samples - 1) as f64) / scale;
        let lam = Complex64::from_polar(s, psi);
        worst = worst.max(kernel.resolvent_norm(lam)? * phi_star.sin());
    }
    Ok(worst)
}

/// Largest sampled `‖(W − λ)^{-1}‖·|λ − ι|·sin ς` on the boundary of the
/// sector with vertex `ι` and semi-angle `θ_ι + ς`, restricted to `Re λ ≥ 0`.
///
/// `θ_ι` is taken from the sector gauge of `W` at `ι`; the bound holds when
/// the result is ≤ 1.
pub fn shifted_boundary_bound_check(w: &DenseOperator, vertex: f64, varsigma: f64, samples: usize) -> Result<f64> {
    let n = w.dim();
    let gauge = sector_gauge(w, vertex, (n * n).max(256))?;
    if !gauge.certified {
        return Err(Error::Precondition(format!("W is not sectorial with vertex {vertex}")));
    }
    let contour = shifted_contour(vertex, gauge.semi_angle, varsigma)?;
    let psi = contour.semi_angle;
    let scale = crate::linops::spectral_norm(w.matrix()).max(1.0);
    // smallest distance from the vertex at which the boundary reaches Re λ ≥ 0
    let s0 = -vertex / psi.cos();
    let samples = samples.max(2);
    let mut worst: f64 = 0.0;
    for sign in [-1.0, 1.0] {
        let dir = Complex64::from_polar(1.0, sign * psi);
        for k in 0..samples {
            let s = s0 * (1e4 * scale / s0).max(2.0).powf(k as f64 / (samples - 1) as f64);
            let lam = vertex + dir * s;
            let m = w.matrix() - crate::linops::CMatrix::identity(n, n) * lam;
            let inv = m.try_inverse().ok_or(Error::Pole { lambda_q: lam })?;
            worst = worst.max(crate::linops::spectral_norm(&inv) * s * varsigma.sin());
        }
    }
    Ok(worst)
}

/// `φ(W) f = Σ_n e_n φ(λ_n) (f, g_n)` for a spec with only simple chains.
pub fn eigenfunction_apply(spec: &JordanSpec, phi: &FunctionSpec, f: &CVector) -> Result<CVector> {
    if f.len() != spec.dim() {
        return Err(Error::Dimension { expected: spec.dim(), got: f.len() });
    }
    if spec.chains().iter().flatten().any(|len| *len != 1) {
        return Err(Error::Precondition("eigenfunction expansion needs a diagonalizable spec".into()));
    }
    let lambdas = spec.characteristic_numbers();
    let mut out = CVector::zeros(spec.dim());
    let mut col = 0;
    for (q, chains) in spec.chains().iter().enumerate() {
        let w = phi.eval(lambdas[q]);
        for _ in chains {
            let c = crate::linops::inner(f, &spec.biorthogonal_vector(col));
            out += spec.root_vector(col) * (c * w);
            col += 1;
        }
    }
    Ok(out)
}

/// `φ(W)` as a dense matrix, through the eigen-decomposition of `W`.
pub fn operator_function(w: &DenseOperator, phi: &FunctionSpec) -> Result<DenseOperator> {
    let (lam, v) = diagonalize(w)?;
    let vinv = v.clone().try_inverse().ok_or(Error::SingularBasis { condition: f64::INFINITY })?;
    let d = crate::linops::CMatrix::from_diagonal(&CVector::from_iterator(lam.len(), lam.iter().map(|l| phi.eval(*l))));
    DenseOperator::new(&v * d * vinv, format!("phi({})", w.label()))
}

/// `(n ln n · ln ln n)^κ / Re φ(λ_n)` for `n = first..first + lambdas.len()`.
pub fn log_modulation_ratios(lambdas: &[Complex64], phi: &FunctionSpec, kappa: f64, first: usize) -> Vec<f64> {
    lambdas
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let n = (first + k) as f64;
            (n * n.ln() * n.ln().ln()).powf(kappa) / phi.eval(*l).re
        })
        .collect()
}

//! Fractional integrals and derivatives on uniform grids and in time.
//!
//! Grid functions are extended by zero outside `[a, b]`. Weakly singular
//! kernels are integrated exactly against the piecewise-linear interpolant of
//! the data (product trapezoid rule), so no kernel is ever evaluated at its
//! singularity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linops::CVector;
use crate::quad::{gk15_fixed, integrate_on, QuadSettings};
use crate::series::Series;
use crate::special::{gamma, rgamma};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Complex samples of a function on a uniform grid over `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    a: f64,
    b: f64,
    values: Vec<Complex64>,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, values: Vec<Complex64>) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("grid interval [{a}, {b}] is empty or not finite")));
        }
        if values.len() < 2 {
            return Err(Error::GridTooCoarse(format!("{} points, need at least 2", values.len())));
        }
        Ok(Self { a, b, values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(a: f64, b: f64, n: usize, f: F) -> Result<Self> {
        let h = (b - a) / (n.max(2) - 1) as f64;
        Self::new(a, b, (0..n).map(|i| f(a + i as f64 * h)).collect())
    }

    pub fn from_real_fn<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> Result<Self> {
        Self::from_fn(a, b, n, |x| Complex64::new(f(x), 0.0))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.len() {
            self.b
        } else {
            self.a + i as f64 * self.step()
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    fn with_values(&self, values: Vec<Complex64>) -> Self {
        Self { a: self.a, b: self.b, values }
    }

    /// Writes `x,re,im` rows with a header line.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        wr.write_record(["x", "re", "im"]).map_err(io)?;
        for (i, v) in self.values.iter().enumerate() {
            wr.write_record([format!("{:.16e}", self.x(i)), format!("{:.16e}", v.re), format!("{:.16e}", v.im)])
                .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    /// Reads the format of [`write_csv`](Self::write_csv); abscissae must be uniform.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut xs = Vec::new();
        let mut vals = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse(format!("row {}: missing column {k}", line + 2)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)))
            };
            xs.push(field(0)?);
            vals.push(Complex64::new(field(1)?, field(2)?));
        }
        if xs.len() < 2 {
            return Err(Error::GridTooCoarse("CSV grid needs at least 2 rows".into()));
        }
        let g = Self::new(xs[0], xs[xs.len() - 1], vals)?;
        let h = g.step();
        for (i, x) in xs.iter().enumerate() {
            if (x - g.x(i)).abs() > 1e-9 * h.max((g.b - g.a).abs()) {
                return Err(Error::Parse(format!("abscissa {x} at row {} is not on a uniform grid", i + 2)));
            }
        }
        Ok(g)
    }
}

/// A positive order `ψ = [ψ] + {ψ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder {
    psi: f64,
}

impl FracOrder {
    pub fn new(psi: f64) -> Result<Self> {
        if !(psi > 0.0) || !psi.is_finite() {
            return Err(Error::Domain(format!("fractional order must be positive, got {psi}")));
        }
        Ok(Self { psi })
    }

    pub fn value(&self) -> f64 {
        self.psi
    }

    pub fn integer_part(&self) -> usize {
        self.psi.floor() as usize
    }

    pub fn fractional_part(&self) -> f64 {
        self.psi - self.psi.floor()
    }
}

/// Product-trapezoid weights: `w[k]` multiplies `f_{i−k}` in row `i` for
/// `1 ≤ k < i`, `w[0]` multiplies `f_i`, and `first[i]` multiplies `f_0`.
struct RlWeights {
    scale: f64,
    inner: Vec<f64>,
    first: Vec<f64>,
}

impl RlWeights {
    fn new(n: usize, h: f64, psi: f64) -> Self {
        let p1 = psi + 1.0;
        let pw = |k: f64| if k <= 0.0 { 0.0 } else { k.powf(p1) };
        let mut inner = vec![0.0; n];
        inner[0] = 1.0;
        for (k, w) in inner.iter_mut().enumerate().skip(1) {
            let k = k as f64;
            *w = pw(k + 1.0) - 2.0 * pw(k) + pw(k - 1.0);
        }
        let first = (0..n)
            .map(|i| {
                let m = i as f64;
                if i == 0 {
                    0.0
                } else {
                    pw(m - 1.0) - (m - 1.0 - psi) * m.powf(psi)
                }
            })
            .collect();
        Self { scale: h.powf(psi) * rgamma(psi + 2.0), inner, first }
    }

    fn row(&self, i: usize, f: &[Complex64]) -> Complex64 {
        if i == 0 {
            return ZERO;
        }
        let mut acc = f[0] * self.first[i];
        for j in 1..=i {
            acc += f[j] * self.inner[i - j];
        }
        acc * self.scale
    }
}

/// `I^ψ_{a+} f` on the grid of `f`; the value at `x = a` is zero.
pub fn rl_integral(f: &Grid1D, psi: FracOrder) -> Grid1D {
    let n = f.len();
    let w = RlWeights::new(n, f.step(), psi.value());
    let vals = f.values();
    let out: Vec<Complex64> = (0..n).into_par_iter().map(|i| w.row(i, vals)).collect();
    f.with_values(out)
}

/// Matrix of [`rl_integral`] on an `n`-point grid with step `h`.
pub fn rl_integral_matrix(n: usize, h: f64, psi: FracOrder) -> DMatrix<f64> {
    let w = RlWeights::new(n, h, psi.value());
    DMatrix::from_fn(n, n, |i, j| {
        if i == 0 || j > i {
            0.0
        } else if j == 0 {
            w.scale * w.first[i]
        } else {
            w.scale * w.inner[i - j]
        }
    })
}

/// Second-order finite-difference matrix for the `m`-th derivative
/// (one-sided stencils in the boundary rows).
pub fn derivative_matrix(n: usize, h: f64, m: usize) -> Result<DMatrix<f64>> {
    if m == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    if n <= m + 1 {
        return Err(Error::GridTooCoarse(format!("{n} points cannot carry a derivative of order {m}")));
    }
    let d1 = || {
        let mut d = DMatrix::zeros(n, n);
        let c = 1.0 / (2.0 * h);
        d[(0, 0)] = -3.0 * c;
        d[(0, 1)] = 4.0 * c;
        d[(0, 2)] = -c;
        for i in 1..n - 1 {
            d[(i, i - 1)] = -c;
            d[(i, i + 1)] = c;
        }
        d[(n - 1, n - 1)] = 3.0 * c;
        d[(n - 1, n - 2)] = -4.0 * c;
        d[(n - 1, n - 3)] = c;
        d
    };
    if m == 1 {
        return Ok(d1());
    }
    if n < 4 {
        return Err(Error::GridTooCoarse(format!("{n} points cannot carry a second derivative")));
    }
    let mut d2 = DMatrix::zeros(n, n);
    let c = 1.0 / (h * h);
    for (k, w) in [2.0, -5.0, 4.0, -1.0].iter().enumerate() {
        d2[(0, k)] = w * c;
        d2[(n - 1, n - 1 - k)] = w * c;
    }
    for i in 1..n - 1 {
        d2[(i, i - 1)] = c;
        d2[(i, i)] = -2.0 * c;
        d2[(i, i + 1)] = c;
    }
    let mut out = d2;
    for _ in 2..m {
        out = d1() * out;
    }
    Ok(out)
}

fn apply_derivative(v: &[Complex64], h: f64, m: usize) -> Result<Vec<Complex64>> {
    let n = v.len();
    if m == 0 {
        return Ok(v.to_vec());
    }
    if n <= m + 1 || (m >= 2 && n < 4) {
        return Err(Error::GridTooCoarse(format!("{n} points cannot carry a derivative of order {m}")));
    }
    let first = |v: &[Complex64]| -> Vec<Complex64> {
        let c = 1.0 / (2.0 * h);
        let mut out = vec![ZERO; n];
        out[0] = (v[0] * -3.0 + v[1] * 4.0 - v[2]) * c;
        for i in 1..n - 1 {
            out[i] = (v[i + 1] - v[i - 1]) * c;
        }
        out[n - 1] = (v[n - 1] * 3.0 - v[n - 2] * 4.0 + v[n - 3]) * c;
        out
    };
    if m == 1 {
        return Ok(first(v));
    }
    let c = 1.0 / (h * h);
    let mut out = vec![ZERO; n];
    out[0] = (v[0] * 2.0 - v[1] * 5.0 + v[2] * 4.0 - v[3]) * c;
    out[n - 1] = (v[n - 1] * 2.0 - v[n - 2] * 5.0 + v[n - 3] * 4.0 - v[n - 4]) * c;
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i] * 2.0 + v[i - 1]) * c;
    }
    for _ in 2..m {
        out = first(&out);
    }
    Ok(out)
}

/// `D^ψ_{a+} f = (d/dx)^{[ψ]+1} I^{1−{ψ}}_{a+} f`.
///
/// Integer orders skip the integral and difference `f` directly.
pub fn rl_derivative(f: &Grid1D, psi: FracOrder) -> Result<Grid1D> {
    let m = psi.integer_part() + 1;
    if f.len() <= m + 1 {
        return Err(Error::GridTooCoarse(format!(
            "{} points cannot carry a derivative of order {m}",
            f.len()
        )));
    }
    if psi.fractional_part() == 0.0 {
        return Ok(f.with_values(apply_derivative(f.values(), f.step(), psi.integer_part())?));
    }
    let g = rl_integral(f, FracOrder::new(1.0 - psi.fractional_part())?);
    Ok(f.with_values(apply_derivative(g.values(), f.step(), m)?))
}

/// Matrix of [`rl_derivative`] on an `n`-point grid with step `h`.
pub fn rl_derivative_matrix(n: usize, h: f64, psi: FracOrder) -> Result<DMatrix<f64>> {
    if psi.fractional_part() == 0.0 {
        return derivative_matrix(n, h, psi.integer_part());
    }
    let m = psi.integer_part() + 1;
    Ok(derivative_matrix(n, h, m)? * rl_integral_matrix(n, h, FracOrder::new(1.0 - psi.fractional_part())?))
}

fn check_marchaud(n: usize, a: f64, b: f64, alpha: f64, eps: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("Marchaud order must lie in (0, 1), got {alpha}")));
    }
    if n < 2 || !(b > a) {
        return Err(Error::GridTooCoarse(format!("need at least 2 points on a non-empty interval, got {n}")));
    }
    let h = (b - a) / (n - 1) as f64;
    if !(eps >= h * (1.0 - 1e-12)) {
        return Err(Error::Domain(format!("truncation ε = {eps} must be at least the grid step {h}")));
    }
    Ok(h)
}

/// Calls `put(column, weight)` for the non-zero weights of row `i`.
fn marchaud_row<P: FnMut(usize, f64)>(i: usize, n: usize, h: f64, alpha: f64, eps: f64, mut put: P) {
    let g = rgamma(1.0 - alpha);
    let len = (n - 1 - i) as f64 * h;
    let mut diag = g * len.max(eps).powf(-alpha);
    if len > eps {
        let c = alpha * g;
        diag += c * (eps.powf(-alpha) - len.powf(-alpha)) / alpha;
        for k in 0..(n - 1 - i) {
            let t1 = (k + 1) as f64 * h;
            if t1 <= eps {
                continue;
            }
            let t0 = (k as f64 * h).max(eps);
            let m0 = (t0.powf(-alpha) - t1.powf(-alpha)) / alpha;
            let m1 = (t1.powf(1.0 - alpha) - t0.powf(1.0 - alpha)) / (1.0 - alpha);
            let slope = (m1 - k as f64 * h * m0) / h;
            put(i + k, -c * (m0 - slope));
            put(i + k + 1, -c * slope);
        }
    }
    put(i, diag);
}

/// Matrix of the truncated right-side Marchaud derivative on `[a, b]` with
/// zero extension beyond `b`:
///
/// `(α/Γ(1−α)) ∫_ε^{b−x} [f(x) − f(x+t)] t^{−α−1} dt + f(x) max(b−x, ε)^{−α} / Γ(1−α)`.
///
/// The data are interpolated linearly between nodes and the kernel moments
/// are integrated exactly.
pub fn marchaud_matrix(n: usize, a: f64, b: f64, alpha: f64, eps: f64) -> Result<DMatrix<f64>> {
    let h = check_marchaud(n, a, b, alpha, eps)?;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        marchaud_row(i, n, h, alpha, eps, |j, w| m[(i, j)] += w);
    }
    Ok(m)
}

/// Truncated right-side Marchaud derivative of `f` (see [`marchaud_matrix`]).
pub fn marchaud_derivative(f: &Grid1D, alpha: f64, eps: f64) -> Result<Grid1D> {
    let n = f.len();
    let h = check_marchaud(n, f.a(), f.b(), alpha, eps)?;
    let v = f.values();
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = ZERO;
            marchaud_row(i, n, h, alpha, eps, |j, w| acc += v[j] * w);
            acc
        })
        .collect();
    Ok(f.with_values(out))
}

/// `B_β = 1/(2Γ(β)cos(βπ/2))`.
pub fn riesz_constant(beta: f64) -> f64 {
    1.0 / (2.0 * gamma(beta) * (beta * PI / 2.0).cos())
}

/// Riesz potential `B_β ∫ f(s)|x−s|^{β−1} ds`, `f` extended by zero.
pub fn riesz_potential(f: &Grid1D, beta: f64) -> Result<Grid1D> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("Riesz order must lie in (0, 1), got {beta}")));
    }
    let n = f.len();
    let h = f.step();
    // cell moments in the distance u = |x − s| measured in steps
    let b0: Vec<f64> = (0..n).map(|k| ((k + 1) as f64).powf(beta) - (k as f64).powf(beta)).collect();
    let b1: Vec<f64> =
        (0..n).map(|k| ((k + 1) as f64).powf(beta + 1.0) - (k as f64).powf(beta + 1.0)).collect();
    let scale = riesz_constant(beta) * h.powf(beta);
    let v = f.values();
    let out: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = ZERO;
            // cell with near end at distance k steps, far end at k+1
            let cell = |near: Complex64, far: Complex64, k: usize| {
                let m0 = b0[k] / beta;
                let m1 = b1[k] / (beta + 1.0) - k as f64 * m0;
                near * (m0 - m1) + far * m1
            };
            for k in 0..n - 1 - i {
                acc += cell(v[i + k], v[i + k + 1], k);
            }
            for k in 0..i {
                acc += cell(v[i - k], v[i - k - 1], k);
            }
            acc * scale
        })
        .collect();
    Ok(f.with_values(out))
}

/// Coefficients `C_0..=C_K` of `(c(1 − z))^α = Σ C_k z^k` by the recurrence
/// `C_0 = c^α`, `C_1 = −α c^α`, `C_{k+1} = C_k (k − α)/(k + 1)`.
///
/// All coefficients are real for `c > 0`.
pub fn difference_frac_coeffs(alpha: f64, c: f64, count: usize) -> Result<Vec<f64>> {
    check_difference_args(alpha, c)?;
    let mut out = Vec::with_capacity(count + 1);
    out.push(c.powf(alpha));
    if count >= 1 {
        out.push(-alpha * c.powf(alpha));
    }
    for k in 1..count {
        let next = out[k] * (k as f64 - alpha) / (k as f64 + 1.0);
        out.push(next);
    }
    Ok(out)
}

/// `C′_k = (c^{k+1} sin απ/π) ∫_0^∞ ξ^{α−1}(ξ + c)^{−k−1} dξ`, by adaptive quadrature.
///
/// After `ξ = c u/(1−u)` the integral is `c^α ∫_0^1 u^{α−1}(1−u)^{k−α} du`;
/// the two endpoint singularities are removed by power substitutions on
/// either half of `[0, 1]`.
pub fn difference_frac_coeffs_alt(alpha: f64, c: f64, count: usize) -> Result<Vec<f64>> {
    check_difference_args(alpha, c)?;
    let settings = QuadSettings { abs_tol: 1e-15, rel_tol: 1e-14, max_panels: 500 };
    let pre = c.powf(alpha) * (alpha * PI).sin() / PI;
    (0..=count)
        .map(|k| {
            let e = k as f64 + 1.0 - alpha;
            // u = v^{1/α} on [0, 1/2]
            let mut left = |v: f64| {
                let u = v.powf(1.0 / alpha);
                (1.0 - u).powf(k as f64 - alpha) / alpha
            };
            let vmax = 0.5f64.powf(alpha);
            let l = integrate_on(&mut left, &[0.0, vmax], &settings)?;
            // 1 − u = w^{1/e} on [1/2, 1]
            let mut right = |w: f64| {
                let u = 1.0 - w.powf(1.0 / e);
                u.powf(alpha - 1.0) / e
            };
            let wmax = 0.5f64.powf(e);
            let r = integrate_on(&mut right, &[0.0, wmax], &settings)?;
            Ok(pre * (l.value + r.value))
        })
        .collect()
}

fn check_difference_args(alpha: f64, c: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("order must lie in (0, 1), got {alpha}")));
    }
    if !(c > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {c}")));
    }
    Ok(())
}

/// `(c(I − S))^α` for the `n×n` down-shift `S`, from the Taylor expansion of
/// `(c − c z)^α` computed in power-series arithmetic (no eigenvalues involved).
pub fn nilpotent_shift_power(alpha: f64, c: f64, n: usize) -> Result<DMatrix<f64>> {
    check_difference_args(alpha, c)?;
    let m = n.saturating_sub(1);
    let base = Series::variable(Complex64::new(0.0, 0.0), m).scale(Complex64::new(-c, 0.0)).add_const(Complex64::new(c, 0.0));
    let p = base.powf(alpha)?;
    let coeffs = p.coeffs();
    Ok(DMatrix::from_fn(n, n, |i, j| if i >= j { coeffs[i - j].re } else { 0.0 }))
}

/// `Σ_{k<n} C_k S^k` with `C_k` from [`difference_frac_coeffs`].
pub fn truncated_difference_power(alpha: f64, c: f64, n: usize) -> Result<DMatrix<f64>> {
    let coeffs = difference_frac_coeffs(alpha, c, n.saturating_sub(1))?;
    Ok(DMatrix::from_fn(n, n, |i, j| if i >= j { coeffs[i - j] } else { 0.0 }))
}

/// Accretivity constant `μ = 1/(Γ(1−α) d^α)` of the 1D Marchaud derivative on `(0, d)`.
pub fn accretivity_certificate(alpha: f64, d: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(d > 0.0) {
        return Err(Error::Domain(format!("need 0 < α < 1 and d > 0, got α = {alpha}, d = {d}")));
    }
    Ok(rgamma(1.0 - alpha) / d.powf(alpha))
}

/// Settings of [`time_frac_derivative`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDerivativeSettings {
    pub quad: QuadSettings,
    /// Largest number of doubling segments tried before declaring the tail non-decaying.
    pub max_segments: usize,
}

impl Default for TimeDerivativeSettings {
    fn default() -> Self {
        Self { quad: QuadSettings { abs_tol: 1e-15, rel_tol: 1e-13, max_panels: 4000 }, max_segments: 64 }
    }
}

/// `D^{1/α}_− u(t) = −(1/Γ(1−1/α)) d/dt ∫_0^∞ u(t+x) x^{−1/α} dx` for `α ≥ 1`.
///
/// For `α = 1` this is `−u′(t)`. For `α > 1` the substitution
/// `x = s^{α/(α−1)}` turns the weight into the constant `α/(α−1)`. The
/// integral is partitioned adaptively at `t` and the same partition is reused
/// at the shifted points of the 4th-order central difference, so quadrature
/// error varies smoothly with `t`.
pub fn time_frac_derivative<F>(u: F, alpha: f64, t: f64, settings: &TimeDerivativeSettings) -> Result<CVector>
where
    F: Fn(f64) -> Result<CVector>,
{
    if !(alpha >= 1.0) {
        return Err(Error::Domain(format!("summation order must be at least 1, got {alpha}")));
    }
    let h = 1e-5 * t.abs().max(1.0);
    if !(t > 2.0 * h) {
        return Err(Error::Precondition(format!("time {t} too close to 0 for the difference step {h}")));
    }
    let stencil = |g: &dyn Fn(f64) -> Result<CVector>| -> Result<CVector> {
        let (m2, m1, p1, p2) = (g(t - 2.0 * h)?, g(t - h)?, g(t + h)?, g(t + 2.0 * h)?);
        Ok((m2 - p2 + (p1 - m1) * Complex64::new(8.0, 0.0)) / Complex64::new(12.0 * h, 0.0))
    };
    if alpha == 1.0 {
        return Ok(-stencil(&|s| u(s))?);
    }
    let p = alpha / (alpha - 1.0);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let dim = u(t)?.len();
    let integrand = |shift: f64| {
        let failure = &failure;
        let u = &u;
        move |s: f64| -> CVector {
            match u(shift + s.powf(p)) {
                Ok(v) => v * Complex64::new(p, 0.0),
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    CVector::zeros(dim)
                }
            }
        }
    };

    // adaptive partition at t, grown by doubling segments until the tail is negligible
    let mut partition: Vec<(f64, f64)> = Vec::new();
    let mut total = CVector::zeros(dim);
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut quiet = 0;
    let mut segments = 0;
    let mut g = integrand(t);
    while quiet < 2 {
        if segments == settings.max_segments {
            return Err(Error::Truncation(format!(
                "∫ u(t+x) x^(-1/α) dx not settled after {segments} doubling segments (s up to {lo:.3e})"
            )));
        }
        let seg = integrate_on(&mut g, &[lo, hi], &settings.quad)?;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
        let small = seg.value.norm() <= 1e-16 * total.norm().max(f64::MIN_POSITIVE) || seg.value.norm() == 0.0;
        total += &seg.value;
        partition.extend(seg.breakpoints());
        quiet = if small { quiet + 1 } else { 0 };
        segments += 1;
        lo = hi;
        hi *= 2.0;
    }
    partition.sort_by(|x, y| x.0.total_cmp(&y.0));
    let shifted = |tt: f64| -> Result<CVector> {
        let mut g = integrand(tt);
        let v: CVector = gk15_fixed(&mut g, &partition);
        match failure.borrow_mut().take() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    };
    let d = stencil(&shifted)?;
    Ok(d * Complex64::new(-rgamma(1.0 - 1.0 / alpha), 0.0))
}

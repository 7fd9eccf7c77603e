//! Zero sequences of entire functions: counting functions, convergence
//! exponent and genus estimates, canonical products, the `β(r)` growth
//! functional, Fredholm determinants and the angular indicator `H(ψ)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linops::{eigenvalues, singular_values, spectral_norm, DenseOperator};

/// Minimum number of terms accepted by [`convergence_exponent`].
pub const MIN_TERMS: usize = 1000;
/// A dyadic tail block must shrink below `1 − TAIL_MARGIN` times its
/// predecessor to count as convergent.
pub const TAIL_MARGIN: f64 = 0.01;

/// Ascending moduli `|a_n|`, optionally with arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSequence {
    moduli: Vec<f64>,
    args: Option<Vec<f64>>,
    unbounded: bool,
}

impl ZeroSequence {
    pub fn new(moduli: Vec<f64>, args: Option<Vec<f64>>) -> Result<Self> {
        if moduli.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::InvalidSpec("moduli must be finite and positive".into()));
        }
        if moduli.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpec("moduli must be non-decreasing".into()));
        }
        if let Some(a) = &args {
            if a.len() != moduli.len() {
                return Err(Error::Dimension { expected: moduli.len(), got: a.len() });
            }
        }
        Ok(Self { moduli, args, unbounded: false })
    }

    /// Sorts complex zeros by modulus (ties by argument).
    pub fn from_zeros(zeros: &[Complex64]) -> Result<Self> {
        let mut z = zeros.to_vec();
        z.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
        Self::new(z.iter().map(|w| w.norm()).collect(), Some(z.iter().map(|w| w.arg()).collect()))
    }

    /// Marks the sequence as a truncation of an infinite, unbounded one.
    pub fn with_unbounded(mut self, unbounded: bool) -> Self {
        self.unbounded = unbounded;
        self
    }

    pub fn moduli(&self) -> &[f64] {
        &self.moduli
    }

    pub fn args(&self) -> Option<&[f64]> {
        self.args.as_deref()
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    /// `Σ_{n<count} |a_n|^{−λ}`.
    pub fn partial_sum(&self, lambda: f64, count: usize) -> f64 {
        self.block_sum(lambda, 0, count.min(self.len()))
    }

    fn block_sum(&self, lambda: f64, from: usize, to: usize) -> f64 {
        // smallest terms first
        self.moduli[from..to].iter().rev().map(|m| m.powf(-lambda)).sum()
    }

    /// Tail test on the last two dyadic blocks: `[N/4, N/2)` against `[N/2, N)`.
    pub fn tail_convergent(&self, lambda: f64) -> bool {
        let n = self.len();
        let prev = self.block_sum(lambda, n / 4, n / 2);
        let last = self.block_sum(lambda, n / 2, n);
        last < (1.0 - TAIL_MARGIN) * prev
    }

    /// Writes `modulus,arg` rows (arg empty when unknown).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Parse(e.to_string());
        wr.write_record(["modulus", "arg"]).map_err(io)?;
        for (i, m) in self.moduli.iter().enumerate() {
            let arg = self.args.as_ref().map(|a| format!("{:.16e}", a[i])).unwrap_or_default();
            wr.write_record([format!("{m:.16e}"), arg]).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut moduli = Vec::new();
        let mut args = Vec::new();
        let mut all_args = true;
        for (line, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", line + 2)));
            moduli.push(parse(rec.get(0).unwrap_or(""))?);
            match rec.get(1).map(str::trim) {
                Some(s) if !s.is_empty() => args.push(parse(s)?),
                _ => all_args = false,
            }
        }
        Self::new(moduli, if all_args && !args.is_empty() { Some(args) } else { None })
    }
}

/// Number of points with modulus strictly below `r`.
pub fn counting_function(z: &ZeroSequence, r: f64) -> usize {
    z.moduli.partition_point(|m| *m < r)
}

/// Convergence exponent estimate from finite data.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub rho_hat: f64,
    pub genus: u32,
    pub diverges_at_rho: bool,
    pub beta_samples: Vec<(f64, f64)>,
}

impl GrowthReport {
    /// Flat `key = value` document.
    pub fn to_key_value(&self) -> String {
        let mut s = format!(
            "rho_hat = {:.17e}\ngenus = {}\ndiverges_at_rho = {}\n",
            self.rho_hat, self.genus, self.diverges_at_rho
        );
        for (r, b) in &self.beta_samples {
            s.push_str(&format!("beta[{r:.17e}] = {b:.17e}\n"));
        }
        s
    }
}

/// Estimates the convergence exponent `ρ̂`, the genus `p` and whether the
/// series still diverges at `ρ̂`.
///
/// `ρ̂` is the boundary on `lambda_grid` between exponents whose dyadic tail
/// blocks shrink (see [`ZeroSequence::tail_convergent`]) and those whose blocks
/// do not, refined by bisection. The genus is the least integer `p ≥ 0` with a
/// convergent tail at `p + 1`. `diverges_at_rho` compares the partial-sum
/// increments over the last two decades of terms at exponent `ρ̂`: the flag is
/// set when the latest increment is at least half the previous one, that is
/// when the sum has not begun to settle. This is a finite-data indicator; it
/// cannot separate divergence from convergence driven by logarithmic factors.
pub fn convergence_exponent(z: &ZeroSequence, lambda_grid: &[f64]) -> Result<GrowthReport> {
    if z.len() < MIN_TERMS {
        return Err(Error::InsufficientData(format!("{} terms, need at least {MIN_TERMS}", z.len())));
    }
    let mut grid: Vec<f64> = lambda_grid.iter().copied().filter(|l| l.is_finite() && *l > 0.0).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.len() < 2 {
        return Err(Error::InvalidSpec("exponent grid needs at least two positive values".into()));
    }
    let conv: Vec<bool> = grid.iter().map(|&l| z.tail_convergent(l)).collect();
    let rho_hat = match conv.iter().position(|&c| c) {
        None => grid[grid.len() - 1],
        Some(0) => grid[0],
        Some(k) => {
            let (mut lo, mut hi) = (grid[k - 1], grid[k]);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if z.tail_convergent(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    let mut genus = 0u32;
    while !z.tail_convergent(genus as f64 + 1.0) {
        genus += 1;
        if genus > 64 {
            return Err(Error::InsufficientData("no convergent integer exponent up to 65".into()));
        }
    }
    let n = z.len();
    let d0 = z.block_sum(rho_hat, n / 100, n / 10);
    let d1 = z.block_sum(rho_hat, n / 10, n);
    let diverges_at_rho = d1 >= 0.5 * d0;

    let mut beta_samples = Vec::new();
    let rho1 = rho_hat;
    let p = genus as i32;
    if (rho1 - p as f64).abs() > 1e-9 && (rho1 - p as f64 - 1.0).abs() > 1e-9 && rho1 < p as f64 + 1.0 {
        let top = z.moduli[n - 1];
        let mut r = 10f64.powi(z.moduli[0].log10().ceil() as i32);
        while r <= top {
            let b = beta_function(z, r, genus, rho1, rho1)?;
            beta_samples.push((r, b.value));
            r *= 10.0;
        }
    }
    Ok(GrowthReport { rho_hat, genus, diverges_at_rho, beta_samples })
}

/// Value of `β(r)` together with its extrapolation status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaValue {
    pub value: f64,
    /// `r` lies beyond the last modulus, so `n(t)` on `(a_N, r)` is extrapolated.
    pub extrapolated: bool,
    /// `r > 10·a_N`: the extrapolation is no longer trustworthy.
    pub warning: bool,
}

fn power_integral(s: f64, u: f64, v: f64) -> f64 {
    if v <= u {
        0.0
    } else if (s - 1.0).abs() < 1e-15 {
        (v / u).ln()
    } else {
        (u.powf(1.0 - s) - v.powf(1.0 - s)) / (s - 1.0)
    }
}

/// `r^p (∫_0^r n(t) t^{−p−1} dt + r ∫_r^∞ n(t) t^{−p−2} dt)` with `n(t)`
/// continued past the last modulus as `c·t^tail_exponent`.
fn growth_bracket(z: &ZeroSequence, r: f64, p: u32, tail_exponent: f64) -> Result<(f64, bool)> {
    let a = &z.moduli;
    let n = a.len();
    if n == 0 {
        return Ok((0.0, false));
    }
    let s1 = p as f64 + 1.0;
    let s2 = p as f64 + 2.0;
    if !(tail_exponent < s1) {
        return Err(Error::Domain(format!(
            "tail exponent {tail_exponent} makes ∫ n(t) t^(-p-2) dt diverge (need < {s1})"
        )));
    }
    let mut j1 = 0.0;
    let mut j2 = 0.0;
    for k in 1..n {
        let (u, v) = (a[k - 1], a[k]);
        let kf = k as f64;
        if u < r {
            j1 += kf * power_integral(s1, u, v.min(r));
        }
        if v > r {
            j2 += kf * power_integral(s2, u.max(r), v);
        }
    }
    let last = a[n - 1];
    let c = n as f64 / last.powf(tail_exponent);
    if r > last {
        j1 += c * power_integral(s1 - tail_exponent, last, r);
    }
    let x = last.max(r);
    j2 += c * x.powf(tail_exponent - s2 + 1.0) / (s2 - 1.0 - tail_exponent);
    Ok((r.powi(p as i32) * (j1 + r * j2), r > last))
}

/// `β(r) = r^{p−ρ₁}(∫_0^r n(t)/t^{p+1} dt + r∫_r^∞ n(t)/t^{p+2} dt)`.
///
/// Segment integrals are exact for the step function `n(t)`. Beyond the last
/// modulus `a_N` the counting function is continued as `N (t/a_N)^tail_exponent`.
pub fn beta_function(z: &ZeroSequence, r: f64, p: u32, rho1: f64, tail_exponent: f64) -> Result<BetaValue> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    if (rho1 - p as f64).abs() < 1e-12 || (rho1 - p as f64 - 1.0).abs() < 1e-12 {
        return Err(Error::Domain(format!("ρ₁ = {rho1} must differ from p and p + 1")));
    }
    if z.is_empty() {
        return Ok(BetaValue { value: 0.0, extrapolated: false, warning: false });
    }
    let (bracket, extrapolated) = growth_bracket(z, r, p, tail_exponent)?;
    let last = z.moduli[z.len() - 1];
    Ok(BetaValue { value: r.powf(-rho1) * bracket, extrapolated, warning: r > 10.0 * last })
}

/// Right-hand side bracket of the canonical-product bound for a finite zero
/// list (`n(t)` constant past the last zero).
pub fn canonical_product_bracket(z: &ZeroSequence, r: f64, p: u32) -> f64 {
    growth_bracket(z, r, p, 0.0).map(|b| b.0).unwrap_or(f64::INFINITY)
}

/// Value of a finite canonical product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductValue {
    pub value: Complex64,
    /// `z` coincides with a zero (within 1e-14 relative); `value` is exactly 0.
    pub at_zero: bool,
}

/// `Π G(z/a_n, p)`, `G(w, p) = (1−w) exp(w + w²/2 + … + w^p/p)`.
pub fn canonical_product(zeros: &[Complex64], z: Complex64, p: u32) -> Result<ProductValue> {
    let mut log_sum = Complex64::new(0.0, 0.0);
    for a in zeros {
        if a.norm() == 0.0 {
            return Err(Error::InvalidSpec("canonical products need non-zero zeros".into()));
        }
        if (z - a).norm() <= 1e-14 * a.norm().max(1.0) {
            return Ok(ProductValue { value: Complex64::new(0.0, 0.0), at_zero: true });
        }
        let w = z / a;
        let mut e = (Complex64::new(1.0, 0.0) - w).ln();
        let mut wk = Complex64::new(1.0, 0.0);
        for k in 1..=p {
            wk *= w;
            e += wk / k as f64;
        }
        log_sum += e;
    }
    Ok(ProductValue { value: log_sum.exp(), at_zero: false })
}

/// `det(I − λB)`.
pub fn fredholm_det(b: &DenseOperator, lambda: Complex64) -> Complex64 {
    let n = b.dim();
    (DMatrix::identity(n, n) - b.matrix() * lambda).determinant()
}

/// `(|det(I−λB)|·‖(I−λB)^{-1}‖, 2 Π(1 + |λ| s_n(B)))`.
pub fn det_resolvent_bound_check(b: &DenseOperator, lambda: Complex64) -> Result<(f64, f64)> {
    let n = b.dim();
    let m = DMatrix::identity(n, n) - b.matrix() * lambda;
    let inv = m.clone().try_inverse().ok_or_else(|| Error::Pole { lambda_q: nearest_characteristic(b, lambda) })?;
    let det = m.determinant().norm();
    if det == 0.0 {
        return Err(Error::Pole { lambda_q: nearest_characteristic(b, lambda) });
    }
    let lhs = det * spectral_norm(&inv);
    let rhs = 2.0 * singular_values(b).iter().map(|s| 1.0 + lambda.norm() * s).product::<f64>();
    Ok((lhs, rhs))
}

fn nearest_characteristic(b: &DenseOperator, lambda: Complex64) -> Complex64 {
    eigenvalues(b)
        .into_iter()
        .filter(|m| m.norm() > 0.0)
        .map(|m| 1.0 / m)
        .min_by(|x, y| (x - lambda).norm().total_cmp(&(y - lambda).norm()))
        .unwrap_or(lambda)
}

/// `(Π(1 + |λ μ_n(B)|), Π(1 + |λ| s_n(B)))`.
pub fn weyl_product_check(b: &DenseOperator, lambda: Complex64) -> (f64, f64) {
    let l = lambda.norm();
    let lhs = eigenvalues(b).iter().map(|m| 1.0 + l * m.norm()).product();
    let rhs = singular_values(b).iter().map(|s| 1.0 + l * s).product();
    (lhs, rhs)
}

/// `H(ψ) = (π/sin πϱ) Σ_j cos(ϱ(x_j − π)) ΔΔ_j`, `x_j = (ψ − φ_j) mod 2π ∈ [0, 2π)`,
/// for an angular density with jumps `ΔΔ_j` at angles `φ_j`.
///
/// Reducing `ψ − φ_j` modulo `2π` places each jump in the integration window
/// `(ψ − 2π, ψ]`.
pub fn angular_h(jumps: &[(f64, f64)], rho: f64, psi: f64) -> Result<f64> {
    if !(rho > 0.0) || rho.fract() == 0.0 {
        return Err(Error::Domain(format!("order ϱ = {rho} must be positive and non-integer")));
    }
    if jumps.iter().any(|(_, d)| *d < 0.0) {
        return Err(Error::Domain("angular density must be non-decreasing".into()));
    }
    let s: f64 = jumps
        .iter()
        .map(|&(phi, d)| {
            let x = (psi - phi).rem_euclid(TAU);
            (rho * (x - PI)).cos() * d
        })
        .sum();
    Ok(PI / (PI * rho).sin() * s)
}

/// Zeros `a_n = min{a ≥ e^e : a^ρ₁/(ln a · ln ln a) ≥ n}`.
///
/// The right-hand side dips after `e^e` before growing, so the indices it
/// already exceeds at `e^e` sit there; the rest are bisected on the
/// increasing branch.
pub fn example41_sequence(rho1: f64, count: usize) -> Result<ZeroSequence> {
    if !(rho1 > 0.0) || rho1.fract() == 0.0 {
        return Err(Error::Domain(format!("ρ₁ = {rho1} must be positive and non-integer")));
    }
    // log of the right-hand side as a function of L = ln a
    let g = |l: f64| rho1 * l - l.ln() - l.ln().ln();
    let dg = |l: f64| rho1 - 1.0 / l - 1.0 / (l * l.ln());
    let (mut lo, mut hi) = (std::f64::consts::E * (1.0 + 1e-12), 2.0);
    while dg(hi) <= 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dg(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let l_min = hi;
    let l_start = std::f64::consts::E;
    let mut out = Vec::with_capacity(count);
    let mut upper = l_min * 2.0;
    for n in 1..=count {
        let target = (n as f64).ln();
        // first crossing above e^e: indices already reached at the start sit there
        if target <= g(l_start) {
            out.push(l_start.exp());
            continue;
        }
        while g(upper) < target {
            upper *= 2.0;
        }
        let (mut a, mut b) = (l_min, upper);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if g(mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push((0.5 * (a + b)).exp());
    }
    Ok(ZeroSequence::new(out, None)?.with_unbounded(true))
}

//! Grouped root-vector sums.
//!
//! For a characteristic number `λ_q` with Jordan chains `e_{q_ξ}, …,
//! e_{q_ξ+k}` the residue of `e^{−φ^α(λ)t} B(I−λB)^{-1} f` is
//! `P_q(φ^α, t) f = Σ_ξ Σ_i e_{q_ξ+i} c_{q_ξ+i}(t)` with
//! `c_i(t) = e^{−φ^α(λ_q)t} Σ_m H_m c_{i+m}`. The time coefficients `H_m` are
//! the Taylor coefficients of `exp(−t(φ^α(1/ζ) − φ^α(λ_q)))` about `ζ = 1/λ_q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{inner, CVector, JordanSpec};
use crate::series::Series;
use crate::symbol::FunctionSpec;

/// `H_0..=H_M` for one characteristic number and time.
#[derive(Debug, Clone, PartialEq)]
pub struct HmTable {
    pub alpha: f64,
    pub lambda: Complex64,
    pub t: f64,
    pub values: Vec<Complex64>,
}

/// Time coefficients `H_m(φ, α, λ, t)`, `m = 0..=order`, by power-series arithmetic.
pub fn h_coefficients(phi: &FunctionSpec, alpha: f64, lambda: Complex64, t: f64, order: usize) -> Result<HmTable> {
    if lambda.norm() == 0.0 {
        return Err(Error::Domain("characteristic number must be non-zero".into()));
    }
    let zeta = Series::variable(1.0 / lambda, order);
    let g = phi
        .apply_series_pow(&zeta.recip()?, alpha)
        .map_err(|e| Error::Domain(format!("symbol is not analytic at 1/λ = {}: {e}", 1.0 / lambda)))?;
    let shifted = g.add_const(-g.value()).scale(Complex64::new(-t, 0.0));
    let mut values = shifted.exp().coeffs().to_vec();
    values[0] = Complex64::new(1.0, 0.0);
    Ok(HmTable { alpha, lambda, t, values })
}

/// `c_i(t) = e^{−φ^α(λ_q)t} Σ_{m=0}^{k−i} H_m c_{i+m}` along one chain.
pub fn chain_time_coeffs(
    c: &[Complex64],
    lambda_q: Complex64,
    phi: &FunctionSpec,
    alpha: f64,
    t: f64,
) -> Result<Vec<Complex64>> {
    if t == 0.0 {
        return Ok(c.to_vec());
    }
    let k = c.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let h = h_coefficients(phi, alpha, lambda_q, t, k - 1)?;
    let decay = (-phi.eval_pow(lambda_q, alpha) * t).exp();
    Ok((0..k)
        .map(|i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..k - i {
                acc += h.values[m] * c[i + m];
            }
            decay * acc
        })
        .collect())
}

/// `c_{q_ξ+i} = (f, g_{q_ξ+i})` along chain `ξ` of eigenvalue `q`.
pub fn fourier_chain_coeffs(f: &CVector, spec: &JordanSpec, q: usize, xi: usize) -> Result<Vec<Complex64>> {
    check_index(spec, q, xi)?;
    if f.len() != spec.dim() {
        return Err(Error::Dimension { expected: spec.dim(), got: f.len() });
    }
    Ok(spec.chain_columns(q, xi).map(|col| inner(f, &spec.biorthogonal_vector(col))).collect())
}

fn check_index(spec: &JordanSpec, q: usize, xi: usize) -> Result<()> {
    if q >= spec.eigenvalues().len() || xi >= spec.chains()[q].len() {
        return Err(Error::InvalidSpec(format!("no chain ({q}, {xi}) in the Jordan data")));
    }
    Ok(())
}

/// `P_q(φ^α, t) f`, the contribution of the characteristic number `λ_q = 1/μ_q`.
pub fn projector_apply(
    spec: &JordanSpec,
    q: usize,
    phi: &FunctionSpec,
    alpha: f64,
    t: f64,
    f: &CVector,
) -> Result<CVector> {
    check_index(spec, q, 0)?;
    let lambda_q = 1.0 / spec.eigenvalues()[q];
    let mut out = CVector::zeros(spec.dim());
    for xi in 0..spec.chains()[q].len() {
        let c = fourier_chain_coeffs(f, spec, q, xi)?;
        let ct = chain_time_coeffs(&c, lambda_q, phi, alpha, t)?;
        for (col, w) in spec.chain_columns(q, xi).zip(ct) {
            out += spec.root_vector(col) * w;
        }
    }
    Ok(out)
}

/// How a [`GroupingScheme`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum GroupingMethod {
    Gaps { k: f64, sigma: f64 },
    Power { beta: u32, eta: u32 },
    Explicit,
}

/// A gap that starts a new group: `(index j, |λ_{j+1}| − |λ_j|, K|λ_{j+1}|^{1−σ})`,
/// with `j` counted from 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedGap {
    pub index: usize,
    pub gap: f64,
    pub threshold: f64,
}

/// Split indices `0 = N_0 < N_1 < … < N_last = count`; group `ν` holds the
/// characteristic numbers with 1-based positions `N_ν + 1 ..= N_{ν+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingScheme {
    pub splits: Vec<usize>,
    pub method: GroupingMethod,
    pub certified_gaps: Vec<CertifiedGap>,
    /// No gap reached the threshold, so everything sits in one group.
    pub single_group: bool,
}

impl GroupingScheme {
    pub fn explicit(splits: Vec<usize>) -> Result<Self> {
        if splits.first() != Some(&0) || splits.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("split indices must start at 0 and increase strictly".into()));
        }
        let single_group = splits.len() <= 2;
        Ok(Self { splits, method: GroupingMethod::Explicit, certified_gaps: Vec::new(), single_group })
    }

    /// One group per characteristic number.
    pub fn singletons(count: usize) -> Self {
        Self {
            splits: (0..=count).collect(),
            method: GroupingMethod::Explicit,
            certified_gaps: Vec::new(),
            single_group: count <= 1,
        }
    }

    pub fn group_count(&self) -> usize {
        self.splits.len().saturating_sub(1)
    }

    /// 0-based positions of group `nu`.
    pub fn group(&self, nu: usize) -> std::ops::Range<usize> {
        self.splits[nu]..self.splits[nu + 1]
    }

    /// CSV rows `group,first,last` (1-based positions, inclusive).
    pub fn csv_rows(&self) -> Vec<[String; 3]> {
        (0..self.group_count())
            .map(|nu| [nu.to_string(), (self.splits[nu] + 1).to_string(), self.splits[nu + 1].to_string()])
            .collect()
    }
}

/// Splits after position `j` whenever `|λ_{j+1}| − |λ_j| ≥ K |λ_{j+1}|^{1−σ}`.
pub fn group_by_gaps(moduli: &[f64], sigma: f64, k: f64) -> Result<GroupingScheme> {
    if !(sigma > 0.0) || !(k > 0.0) {
        return Err(Error::Domain(format!("need σ > 0 and K > 0, got σ = {sigma}, K = {k}")));
    }
    if moduli.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidSpec("moduli must be ascending".into()));
    }
    let mut splits = vec![0];
    let mut certified_gaps = Vec::new();
    for j in 1..moduli.len() {
        let gap = moduli[j] - moduli[j - 1];
        let threshold = k * moduli[j].powf(1.0 - sigma);
        if gap >= threshold {
            splits.push(j);
            certified_gaps.push(CertifiedGap { index: j, gap, threshold });
        }
    }
    if !moduli.is_empty() {
        splits.push(moduli.len());
    }
    let single_group = splits.len() <= 2;
    Ok(GroupingScheme { splits, method: GroupingMethod::Gaps { k, sigma }, certified_gaps, single_group })
}

/// Largest `K` for which [`group_by_gaps`] forms at least `⌈count/4⌉` groups.
///
/// The group count only changes when `K` crosses one of the ratios
/// `(|λ_{j+1}| − |λ_j|)/|λ_{j+1}|^{1−σ}`, so the supremum is an order
/// statistic of those ratios. Zero ratios (equal moduli) never split; when
/// every ratio is zero `K = 1` is returned and the scheme is a single group.
pub fn default_gap_constant(moduli: &[f64], sigma: f64) -> f64 {
    let n = moduli.len();
    let mut ratios: Vec<f64> = moduli
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[1].powf(1.0 - sigma))
        .filter(|r| *r > 0.0)
        .collect();
    if ratios.is_empty() {
        return 1.0;
    }
    ratios.sort_by(|a, b| b.total_cmp(a));
    let needed_splits = n.div_ceil(4).saturating_sub(1).max(1);
    ratios[(needed_splits - 1).min(ratios.len() - 1)]
}

/// Exponent `σ` for the gap rule, estimated from the characteristic moduli.
///
/// With at least [`crate::growth::MIN_TERMS`] values the convergence-exponent
/// estimator is used; shorter spectra use the least-squares slope of
/// `ln n` against `ln |λ_n|`.
pub fn default_gap_exponent(moduli: &[f64]) -> f64 {
    let positive: Vec<f64> = moduli.iter().copied().filter(|m| *m > 0.0).collect();
    if positive.len() >= crate::growth::MIN_TERMS {
        if let Ok(z) = crate::growth::ZeroSequence::new(positive.clone(), None) {
            let grid: Vec<f64> = (1..=80).map(|k| k as f64 * 0.05).collect();
            if let Ok(r) = crate::growth::convergence_exponent(&z, &grid) {
                return r.rho_hat.max(1e-3);
            }
        }
    }
    if positive.len() < 2 {
        return 1.0;
    }
    let xs: Vec<f64> = positive.iter().map(|m| m.ln()).collect();
    let ys: Vec<f64> = (1..=positive.len()).map(|n| (n as f64).ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        1.0
    } else {
        (sxy / sxx).clamp(1e-3, 1e3)
    }
}

/// One row of the order-reduction split: `N_ν = β(ν+1)^γ = N_{0ν} + Σ_k N_{kν}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub beta: u64,
    pub eta: u64,
    pub nu: u64,
    pub n_nu: u128,
    pub n_0: u128,
    /// `N_{kν}` for `k = 1..=ν^η`.
    pub n_k: Vec<u128>,
}

impl SplitRow {
    pub fn gamma(&self) -> u64 {
        self.beta + self.eta
    }

    /// `β + γβν^{γ−1}`.
    pub fn lower_bound(&self) -> u128 {
        let g = self.gamma() as u32;
        self.beta as u128 + self.gamma() as u128 * self.beta as u128 * (self.nu as u128).pow(g - 1)
    }

    /// `γ²(ν+1)^{γ−1} − η`.
    pub fn upper_bound(&self) -> u128 {
        let g = self.gamma() as u32;
        (self.gamma() as u128).pow(2) * (self.nu as u128 + 1).pow(g - 1) - self.eta as u128
    }

    pub fn identity_holds(&self) -> bool {
        self.n_0 + self.n_k.iter().sum::<u128>() == self.n_nu
    }

    pub fn bounds_hold(&self) -> bool {
        self.lower_bound() <= self.n_0 && self.n_0 <= self.upper_bound()
    }
}

/// `N_{kν} = γ(ν^β − k^{β/η})` when `ν^η > k` (else 0), `k = 1..=ν^η`, and
/// `N_{0ν} = N_ν − Σ_k N_{kν}`.
pub fn split_order_reduction(beta: u64, eta: u64, nu: u64) -> Result<SplitRow> {
    if beta == 0 || eta == 0 || !beta.is_multiple_of(eta) {
        return Err(Error::Domain(format!("β = {beta} must be a positive multiple of η = {eta}")));
    }
    if nu == 0 {
        return Err(Error::Domain("ν must be at least 1".into()));
    }
    let gamma = (beta + eta) as u32;
    let ratio = (beta / eta) as u32;
    let nu128 = nu as u128;
    let n_nu = beta as u128 * (nu128 + 1).pow(gamma);
    let nu_eta = nu128.pow(eta as u32);
    let nu_beta = nu128.pow(beta as u32);
    let n_k: Vec<u128> = (1..=nu_eta)
        .map(|k| if nu_eta > k { gamma as u128 * (nu_beta - k.pow(ratio)) } else { 0 })
        .collect();
    let sum: u128 = n_k.iter().sum();
    if sum > n_nu {
        return Err(Error::Domain(format!("split parts exceed N_ν at ν = {nu}")));
    }
    Ok(SplitRow { beta, eta, nu, n_nu, n_0: n_nu - sum, n_k })
}

/// Group sums `P_ν(φ^α, t) f`, one vector per group of `grouping`, with
/// characteristic numbers ordered by ascending modulus.
pub fn abel_group_sums(
    spec: &JordanSpec,
    grouping: &GroupingScheme,
    phi: &FunctionSpec,
    alpha: f64,
    t: f64,
    f: &CVector,
) -> Result<Vec<CVector>> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time must be non-negative, got {t}")));
    }
    let order = spec.characteristic_order();
    if grouping.splits.last().copied().unwrap_or(0) != order.len() {
        return Err(Error::InvalidSpec(format!(
            "grouping covers {} characteristic numbers, operator has {}",
            grouping.splits.last().copied().unwrap_or(0),
            order.len()
        )));
    }
    (0..grouping.group_count())
        .map(|nu| {
            let mut acc = CVector::zeros(spec.dim());
            for pos in grouping.group(nu) {
                acc += projector_apply(spec, order[pos], phi, alpha, t, f)?;
            }
            Ok(acc)
        })
        .collect()
}

/// `Σ_ν P_ν(φ^α, t) f`.
pub fn abel_series_sum(
    spec: &JordanSpec,
    grouping: &GroupingScheme,
    phi: &FunctionSpec,
    alpha: f64,
    t: f64,
    f: &CVector,
) -> Result<CVector> {
    let groups = abel_group_sums(spec, grouping, phi, alpha, t, f)?;
    Ok(groups.into_iter().fold(CVector::zeros(spec.dim()), |acc, g| acc + g))
}

//! The evolution equation `D^{1/α}_− u = φ(W) u`, `u(0) = f`, and the
//! concrete operators it is exercised on.
//!
//! A [`CauchyProblem`] is a plain configuration document. [`CauchySolver`]
//! realizes it as Jordan data of `B = W^{-1}`, caches the biorthogonal
//! coefficients of `f` once, and then evaluates the grouped root-vector sum
//! `u(t) = Σ_ν P_ν(φ^α, t) f` for any number of times `t`.

use std::f64::consts::{E, FRAC_PI_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abel::{
    chain_time_coeffs, default_gap_constant, default_gap_exponent, fourier_chain_coeffs, group_by_gaps,
    GroupingScheme,
};
use crate::contour::{build_contour, eigenfunction_apply, spectral_angle, weighted_contour_integral};
use crate::error::{Error, Result};
use crate::fraccalc::{derivative_matrix, rl_derivative_matrix, time_frac_derivative, FracOrder, TimeDerivativeSettings};
use crate::linops::{
    build_jordan_operator, diagonalize, random_unit_vector, sector_gauge,
    CMatrix, CVector, DenseOperator, JordanSpec, SectorGauge,
};
use crate::quad::QuadSettings;
use crate::special::binomial;
use crate::symbol::FunctionSpec;

/// How the imaginary parts `η_n` of the artificial normal operator are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum ImagRule {
    /// `η_n = μ_n^{1/2} / 2`.
    #[default]
    HalfRoot,
    /// `η_n = 0`, a selfadjoint operator.
    Zero,
    /// `η_n = scale · μ_n^{1/2}`.
    Root { scale: f64 },
}

/// Operator part of a [`CauchyProblem`]. All eigenvalues refer to `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorConfig {
    /// `W = diag(lambdas)` in the standard basis.
    Diagonal { lambdas: Vec<Complex64> },
    /// Jordan data of `B = W^{-1}` with eigenvalues `1/λ_q`; `basis` is
    /// row-major and defaults to the identity.
    Jordan {
        lambdas: Vec<Complex64>,
        chains: Vec<Vec<usize>>,
        #[serde(default)]
        basis: Option<Vec<Vec<Complex64>>>,
    },
    /// `λ_n = a n²`, `n = 1..=modes`.
    SturmLiouville { a: Complex64, modes: usize },
    /// `Y = c(I − S)` on `dim` points.
    Difference { c: f64, dim: usize },
    /// `λ_n = μ_n + iη_n` with `μ_n = n^κ ln^κ(n+q) ln^κ ln(n+q)`.
    ArtificialNormal {
        kappa: f64,
        q: f64,
        dim: usize,
        #[serde(default)]
        imag: ImagRule,
    },
    /// `ηD² + ξD^β` on `points` grid points of `(a, b)`, projected onto the
    /// first `modes` sine modes.
    FracPerturbed {
        eta: f64,
        xi: f64,
        beta: f64,
        points: usize,
        modes: usize,
        #[serde(default)]
        a: f64,
        #[serde(default = "unit")]
        b: f64,
    },
}

fn unit() -> f64 {
    1.0
}

/// `D^{1/α}_− u = φ(W)u`, `u(0) = f`.
///
/// An empty `f` stands for `f_j = 1/(j+1)²` in the coordinates of the
/// realized operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyProblem {
    pub operator: OperatorConfig,
    pub phi: FunctionSpec,
    pub alpha: f64,
    #[serde(default)]
    pub f: Vec<Complex64>,
}

impl OperatorConfig {
    /// Jordan data of `B = W^{-1}`.
    pub fn realize(&self) -> Result<JordanSpec> {
        match self {
            OperatorConfig::Diagonal { lambdas } => {
                check_nonzero(lambdas)?;
                JordanSpec::diagonal(&lambdas.iter().map(|l| 1.0 / l).collect::<Vec<_>>())
            }
            OperatorConfig::Jordan { lambdas, chains, basis } => {
                check_nonzero(lambdas)?;
                let dim: usize = chains.iter().flatten().sum();
                let basis = match basis {
                    None => CMatrix::identity(dim, dim),
                    Some(rows) => {
                        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                            return Err(Error::Dimension { expected: dim, got: rows.len() });
                        }
                        CMatrix::from_fn(dim, dim, |i, j| rows[i][j])
                    }
                };
                JordanSpec::new(lambdas.iter().map(|l| 1.0 / l).collect(), chains.clone(), basis)
            }
            OperatorConfig::SturmLiouville { a, modes } => build_sturm_liouville(*a, *modes),
            OperatorConfig::Difference { c, dim } => build_difference_operator(*c, *dim).map(|d| d.spec),
            OperatorConfig::ArtificialNormal { kappa, q, dim, imag } => {
                build_artificial_normal(*kappa, *q, *dim, *imag).map(|a| a.spec)
            }
            OperatorConfig::FracPerturbed { eta, xi, beta, points, modes, a, b } => {
                let (w, _, _) = frac_perturbed_matrix(*eta, *xi, *beta, *a, *b, *points)?;
                modal_truncation(&DenseOperator::from_real(&w, "frac-perturbed")?, *modes)
            }
        }
    }
}

fn check_nonzero(lambdas: &[Complex64]) -> Result<()> {
    if lambdas.iter().any(|l| l.norm() == 0.0 || !l.re.is_finite() || !l.im.is_finite()) {
        return Err(Error::InvalidSpec("eigenvalues of W must be finite and non-zero".into()));
    }
    Ok(())
}

/// Default grouping: gap rule with the default exponent and constant.
pub fn default_grouping(spec: &JordanSpec) -> Result<GroupingScheme> {
    let lam = spec.characteristic_numbers();
    let moduli: Vec<f64> = spec.characteristic_order().iter().map(|&q| lam[q].norm()).collect();
    let sigma = default_gap_exponent(&moduli);
    group_by_gaps(&moduli, sigma, default_gap_constant(&moduli, sigma))
}

/// Tolerances of [`CauchySolver::residual`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSettings {
    pub time: TimeDerivativeSettings,
    /// Contour quadrature for `φ(W)u(t)` in the non-diagonalizable case.
    pub contour: QuadSettings,
}

impl Default for ResidualSettings {
    fn default() -> Self {
        // long Jordan chains evaluate u(t) with ~1e-12 relative rounding noise,
        // so the time quadrature cannot be asked for much more
        let quad = QuadSettings { abs_tol: 1e-14, rel_tol: 1e-11, max_panels: 4000 };
        Self { time: TimeDerivativeSettings { quad, ..Default::default() }, contour: QuadSettings::default() }
    }
}

/// A realized [`CauchyProblem`] with cached chain coefficients.
#[derive(Debug, Clone)]
pub struct CauchySolver {
    spec: JordanSpec,
    operator: DenseOperator,
    phi: FunctionSpec,
    alpha: f64,
    f: CVector,
    grouping: GroupingScheme,
    /// `coeffs[q][ξ]` = `(f, g_{q_ξ+i})` along the chain.
    coeffs: Vec<Vec<Vec<Complex64>>>,
}

impl CauchySolver {
    pub fn new(problem: &CauchyProblem) -> Result<Self> {
        let spec = problem.operator.realize()?;
        let f = if problem.f.is_empty() {
            default_initial(spec.dim())
        } else {
            CVector::from_column_slice(&problem.f)
        };
        Self::from_spec(spec, problem.phi.clone(), problem.alpha, f, None)
    }

    pub fn from_spec(
        spec: JordanSpec,
        phi: FunctionSpec,
        alpha: f64,
        f: CVector,
        grouping: Option<GroupingScheme>,
    ) -> Result<Self> {
        if !(alpha >= 1.0) {
            return Err(Error::Domain(format!("α must be at least 1, got {alpha}")));
        }
        phi.validate()?;
        if f.len() != spec.dim() {
            return Err(Error::Dimension { expected: spec.dim(), got: f.len() });
        }
        phi.decay_certificate(&spec.characteristic_numbers(), alpha)?;
        let grouping = match grouping {
            Some(g) => g,
            None => default_grouping(&spec)?,
        };
        if grouping.splits.last().copied() != Some(spec.eigenvalues().len()) {
            return Err(Error::InvalidSpec("grouping does not cover every characteristic number".into()));
        }
        let coeffs = (0..spec.eigenvalues().len())
            .map(|q| (0..spec.chains()[q].len()).map(|xi| fourier_chain_coeffs(&f, &spec, q, xi)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let operator = build_jordan_operator(&spec)?;
        Ok(Self { spec, operator, phi, alpha, f, grouping, coeffs })
    }

    pub fn spec(&self) -> &JordanSpec {
        &self.spec
    }

    /// The compact operator `B = W^{-1}`.
    pub fn operator(&self) -> &DenseOperator {
        &self.operator
    }

    pub fn phi(&self) -> &FunctionSpec {
        &self.phi
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn initial(&self) -> &CVector {
        &self.f
    }

    pub fn grouping(&self) -> &GroupingScheme {
        &self.grouping
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.spec.chains().iter().flatten().all(|l| *l == 1)
    }

    fn projector(&self, q: usize, t: f64) -> Result<CVector> {
        let lambda_q = 1.0 / self.spec.eigenvalues()[q];
        let mut out = CVector::zeros(self.spec.dim());
        for (xi, c) in self.coeffs[q].iter().enumerate() {
            let ct = chain_time_coeffs(c, lambda_q, &self.phi, self.alpha, t)?;
            for (col, w) in self.spec.chain_columns(q, xi).zip(ct) {
                out += self.spec.root_vector(col) * w;
            }
        }
        Ok(out)
    }

    /// Group sums `P_ν(φ^α, t) f`.
    pub fn group_sums(&self, t: f64) -> Result<Vec<CVector>> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("time must be non-negative, got {t}")));
        }
        let order = self.spec.characteristic_order();
        (0..self.grouping.group_count())
            .map(|nu| {
                let mut acc = CVector::zeros(self.spec.dim());
                for pos in self.grouping.group(nu) {
                    acc += self.projector(order[pos], t)?;
                }
                Ok(acc)
            })
            .collect()
    }

    /// `u(t)`.
    pub fn solve(&self, t: f64) -> Result<CVector> {
        Ok(self.group_sums(t)?.into_iter().fold(CVector::zeros(self.spec.dim()), |acc, g| acc + g))
    }

    /// `u` on a grid of times, evaluated in parallel.
    pub fn solve_grid(&self, times: &[f64]) -> Result<Vec<CVector>> {
        times.par_iter().map(|t| self.solve(*t)).collect()
    }

    /// `φ(W) u(t)`: eigen-expansion when diagonalizable, otherwise the
    /// φ-weighted contour integral.
    pub fn phi_w_u(&self, t: f64, settings: &QuadSettings) -> Result<CVector> {
        if self.is_diagonalizable() {
            return eigenfunction_apply(&self.spec, &self.phi, &self.solve(t)?);
        }
        let lam = self.spec.characteristic_numbers();
        let moduli: Vec<f64> = lam.iter().map(|l| l.norm()).collect();
        let contour = build_contour(&moduli, spectral_angle(&lam), None, t, &self.phi, self.alpha, settings.abs_tol)?;
        Ok(weighted_contour_integral(&self.operator, &self.phi, self.alpha, t, &self.f, &contour, settings)?.value)
    }

    /// `‖D^{1/α}_− u(t) − φ(W)u(t)‖ / max(1, ‖φ(W)u(t)‖)`.
    pub fn residual(&self, t: f64, settings: &ResidualSettings) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("residual needs t > 0, got {t}")));
        }
        if self.f.norm() == 0.0 {
            return Ok(0.0);
        }
        let lhs = time_frac_derivative(|s| self.solve(s), self.alpha, t, &settings.time)?;
        let rhs = self.phi_w_u(t, &settings.contour)?;
        Ok((lhs - &rhs).norm() / rhs.norm().max(1.0))
    }
}

/// `u(t)` for a single time; builds the solver on every call.
pub fn solve_cauchy(problem: &CauchyProblem, grouping: Option<GroupingScheme>, t: f64) -> Result<CVector> {
    let solver = CauchySolver::new(problem)?;
    let solver = match grouping {
        Some(g) => CauchySolver::from_spec(solver.spec, solver.phi, solver.alpha, solver.f, Some(g))?,
        None => solver,
    };
    solver.solve(t)
}

/// `residual` of a problem at one time.
pub fn residual(problem: &CauchyProblem, t: f64, settings: &ResidualSettings) -> Result<f64> {
    CauchySolver::new(problem)?.residual(t, settings)
}

/// Modal realization `λ_n = a n²`, `n = 1..=modes`, of `−a d²/dx²` on `(0, π)`.
pub fn build_sturm_liouville(a: Complex64, modes: usize) -> Result<JordanSpec> {
    if !(a.re > 0.0) {
        return Err(Error::Domain(format!("Re a must be positive for a sectorial operator, got {a}")));
    }
    if modes == 0 {
        return Err(Error::Domain("at least one mode is required".into()));
    }
    let mu: Vec<Complex64> = (1..=modes).map(|n| 1.0 / (a * (n * n) as f64)).collect();
    JordanSpec::diagonal(&mu)
}

/// Dirichlet second-difference matrix `(1, −2, 1)/h²` on the interior points of an
/// `points`-point grid with step `h`.
pub fn dirichlet_laplacian(points: usize, h: f64) -> Result<DMatrix<f64>> {
    if points < 3 {
        return Err(Error::GridTooCoarse(format!("{points} points leave no interior")));
    }
    let m = points - 2;
    let c = 1.0 / (h * h);
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            -2.0 * c
        } else if i.abs_diff(j) == 1 {
            c
        } else {
            0.0
        }
    }))
}

/// Grid realization of `−a d²/dx²` on `(0, π)` with Dirichlet ends.
pub fn sturm_liouville_grid(a: Complex64, points: usize) -> Result<DenseOperator> {
    if !(a.re > 0.0) {
        return Err(Error::Domain(format!("Re a must be positive for a sectorial operator, got {a}")));
    }
    let h = PI / (points.max(2) - 1) as f64;
    let lap = dirichlet_laplacian(points, h)?;
    DenseOperator::new(lap.map(|v| -a * v), "sturm-liouville grid")
}

/// Sampled bounds for the fractionally perturbed operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracCertificate {
    /// Extremes of `Re(Wf, f) / (−D²f, f)` over all grid functions.
    pub sandwich_lower: f64,
    pub sandwich_upper: f64,
    /// Largest sampled `|Im(Wf, f)| / (‖f‖_{H¹}‖f‖)`.
    pub h3_constant: f64,
}

impl FracCertificate {
    pub fn sandwich_holds(&self) -> bool {
        self.sandwich_lower > 0.0 && self.sandwich_upper.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct FracPerturbed {
    /// Matrix on the interior grid points.
    pub operator: DenseOperator,
    pub a: f64,
    pub b: f64,
    pub points: usize,
    pub certificate: FracCertificate,
    /// Set when the sandwich bound failed at the samples.
    pub warning: Option<String>,
}

impl FracPerturbed {
    /// Sector gauge of the numerical range with `dim²` samples. Kept out of
    /// construction: the sampling costs `O(dim⁴)`.
    pub fn sector_gauge(&self) -> Result<SectorGauge> {
        let m = self.operator.dim();
        sector_gauge(&self.operator, 0.0, (m * m).max(256))
    }
}

/// `W₀ = ηD² + ξD^β_{a+}` with Dirichlet ends, `η < 0`, `ξ > 0`, `0 < β < 1`.
pub fn build_frac_perturbed(eta: f64, xi: f64, beta: f64, a: f64, b: f64, points: usize) -> Result<FracPerturbed> {
    let (w, lap, h) = frac_perturbed_matrix(eta, xi, beta, a, b, points)?;
    let certificate = frac_certificate(&w, &lap, h)?;
    let operator = DenseOperator::from_real(&w, "frac-perturbed")?;
    let warning = (!certificate.sandwich_holds()).then(|| {
        format!(
            "sandwich bound failed: Re(Wf,f)/(−D²f,f) ranges over [{:.3e}, {:.3e}]",
            certificate.sandwich_lower, certificate.sandwich_upper
        )
    });
    Ok(FracPerturbed { operator, a, b, points, certificate, warning })
}

/// Interior-grid matrix of `ηD² + ξD^β_{a+}`, with the Laplacian and the step.
fn frac_perturbed_matrix(
    eta: f64,
    xi: f64,
    beta: f64,
    a: f64,
    b: f64,
    points: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    if !(eta < 0.0) || !(xi >= 0.0) || !(beta > 0.0 && beta < 1.0) || !(b > a) {
        return Err(Error::Domain(format!(
            "need η < 0, ξ ≥ 0, 0 < β < 1 and a < b (η = {eta}, ξ = {xi}, β = {beta})"
        )));
    }
    if points < 8 {
        return Err(Error::GridTooCoarse(format!("{points} points are too few for both stencils")));
    }
    let h = (b - a) / (points - 1) as f64;
    let lap = dirichlet_laplacian(points, h)?;
    let frac = rl_derivative_matrix(points, h, FracOrder::new(beta)?)?;
    let m = points - 2;
    let w = DMatrix::from_fn(m, m, |i, j| eta * lap[(i, j)] + xi * frac[(i + 1, j + 1)]);
    Ok((w, lap, h))
}

fn frac_certificate(w: &DMatrix<f64>, lap: &DMatrix<f64>, h: f64) -> Result<FracCertificate> {
    let m = w.nrows();
    // −D² is positive definite; reduce the pencil (Re W, −D²) with its Cholesky factor
    let chol = (-lap)
        .cholesky()
        .ok_or_else(|| Error::Precondition("−D² is not positive definite".into()))?;
    let l = chol.l();
    let re = (w + w.transpose()) * 0.5;
    let im = (w - w.transpose()) * 0.5;
    // L^{-1} Re W L^{-T} by two triangular solves
    let left = l
        .solve_lower_triangular(&re)
        .ok_or_else(|| Error::Precondition("singular Laplacian factor".into()))?;
    let reduced = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::Precondition("singular Laplacian factor".into()))?;
    let ev = ((&reduced + reduced.transpose()) * 0.5).symmetric_eigenvalues();
    let sandwich_upper = ev.max();
    let sandwich_lower = ev.min();

    let mut rng = ChaCha8Rng::seed_from_u64(crate::linops::SECTOR_GAUGE_SEED);
    let d1 = derivative_matrix(m, h, 1)?.map(|v| Complex64::new(v, 0.0));
    let skew = im.map(|v| Complex64::new(v, 0.0));
    let mut h3: f64 = 0.0;
    let mut probes: Vec<CVector> = (0..64).map(|_| random_unit_vector(m, &mut rng)).collect();
    for j in 1..=16.min(m) {
        probes.push(CVector::from_fn(m, |i, _| Complex64::new((PI * (j * (i + 1)) as f64 / (m + 1) as f64).sin(), 0.0)));
    }
    for f in &probes {
        // |(ℑm W f, f)| = |(Kf, f)| with K = (W − Wᵀ)/2
        let num = (f.adjoint() * &skew * f)[(0, 0)].norm();
        let h1 = (f.norm_squared() + (&d1 * f).norm_squared()).sqrt();
        h3 = h3.max(num / (h1 * f.norm()));
    }
    Ok(FracCertificate { sandwich_lower, sandwich_upper, h3_constant: h3 })
}

/// Galerkin projection of an interior-grid operator onto the first `modes`
/// discrete sine modes, returned as Jordan data of its inverse (diagonalizable).
pub fn modal_truncation(w: &DenseOperator, modes: usize) -> Result<JordanSpec> {
    let m = w.dim();
    if modes == 0 || modes > m {
        return Err(Error::Domain(format!("mode count must lie in 1..={m}, got {modes}")));
    }
    let norm = (2.0 / (m + 1) as f64).sqrt();
    let s = CMatrix::from_fn(m, modes, |i, j| {
        Complex64::new(norm * (PI * ((j + 1) * (i + 1)) as f64 / (m + 1) as f64).sin(), 0.0)
    });
    let g = s.adjoint() * w.matrix() * &s;
    let (lam, v) = diagonalize(&DenseOperator::new(g, "galerkin")?)?;
    check_nonzero(&lam)?;
    JordanSpec::new(lam.iter().map(|l| 1.0 / l).collect(), vec![vec![1]; modes], v)
}

/// The truncated difference operator and its Jordan data.
#[derive(Debug, Clone)]
pub struct DifferenceOperator {
    /// `Y = c(I − S)`.
    pub operator: DenseOperator,
    /// Jordan data of `Y^{-1}`: eigenvalue `1/c`, one chain of length `dim`.
    pub spec: JordanSpec,
}

/// `Y = c(I − S)` with `S` the one-step down-shift on `dim` points.
pub fn build_difference_operator(c: f64, dim: usize) -> Result<DifferenceOperator> {
    if !(c > 0.0) || dim == 0 {
        return Err(Error::Domain(format!("need c > 0 and dim ≥ 1, got c = {c}, dim = {dim}")));
    }
    let y = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            c
        } else if i == j + 1 {
            -c
        } else {
            0.0
        }
    });
    let operator = DenseOperator::from_real(&y, "difference")?;
    // Y^{-1} − 1/c = (1/c) Σ_{k≥1} S^k; its chain is generated by e_0
    let mut nil = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..i {
            nil[(i, j)] = 1.0 / c;
        }
    }
    let mut cols = vec![DMatrix::<f64>::zeros(dim, 1); dim];
    cols[dim - 1][(0, 0)] = 1.0;
    for k in (0..dim - 1).rev() {
        cols[k] = &nil * &cols[k + 1];
    }
    let basis = CMatrix::from_fn(dim, dim, |i, j| Complex64::new(cols[j][(i, 0)], 0.0));
    let spec = JordanSpec::new(vec![Complex64::new(1.0 / c, 0.0)], vec![vec![dim]], basis)?;
    Ok(DifferenceOperator { operator, spec })
}

/// The artificial normal operator `W = diag(λ_n)`.
#[derive(Debug, Clone)]
pub struct ArtificialNormal {
    pub lambdas: Vec<Complex64>,
    pub spec: JordanSpec,
}

/// `μ_n = n^κ ln^κ(n+q) · ln^κ ln(n+q)`.
pub fn artificial_modulus(kappa: f64, q: f64, n: usize) -> f64 {
    let x = n as f64 + q;
    (n as f64 * x.ln() * x.ln().ln()).powf(kappa)
}

/// `λ_n = μ_n + iη_n`, `n = 1..=dim`, checked against `|η_n| ≤ |λ_n|^{1/2}`,
/// `Re λ > (1 − e^{−κ})^{1/2} (Im λ)²` and `|arg λ_n| ≤ πκ/2`.
pub fn build_artificial_normal(kappa: f64, q: f64, dim: usize, imag: ImagRule) -> Result<ArtificialNormal> {
    if !(kappa > 0.0) || !(q > E.powf(E) - 1.0) || dim == 0 {
        return Err(Error::Domain(format!("need κ > 0, q > e^e − 1 and dim ≥ 1 (κ = {kappa}, q = {q})")));
    }
    let parabola = (1.0 - (-kappa).exp()).sqrt();
    let mut lambdas = Vec::with_capacity(dim);
    for n in 1..=dim {
        let mu = artificial_modulus(kappa, q, n);
        let eta = match imag {
            ImagRule::HalfRoot => 0.5 * mu.sqrt(),
            ImagRule::Zero => 0.0,
            ImagRule::Root { scale } => scale * mu.sqrt(),
        };
        let lam = Complex64::new(mu, eta);
        if eta.abs() > lam.norm().sqrt() {
            return Err(Error::Domain(format!("|η_{n}| = {eta:.4e} exceeds |λ_{n}|^(1/2)")));
        }
        if eta != 0.0 && !(mu > parabola * eta * eta) {
            return Err(Error::Domain(format!("λ_{n} = {lam} lies outside the parabolic domain")));
        }
        if lam.arg().abs() > (FRAC_PI_2 * kappa).min(PI) {
            return Err(Error::Domain(format!("|arg λ_{n}| = {:.4} exceeds πκ/2", lam.arg().abs())));
        }
        lambdas.push(lam);
    }
    let spec = JordanSpec::diagonal(&lambdas.iter().map(|l| 1.0 / l).collect::<Vec<_>>())?;
    Ok(ArtificialNormal { lambdas, spec })
}

/// `Σ_k Q_k D^{order_k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiPolynomial {
    /// `(Q_k, order_k)`.
    pub terms: Vec<(f64, f64)>,
}

impl QuasiPolynomial {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        for (i, a) in terms.iter().enumerate() {
            if terms[..i].iter().any(|b| (a.1 - b.1).abs() <= 1e-12 * a.1.abs().max(1.0)) {
                return Err(Error::InvalidSpec(format!("repeated order {}", a.1)));
            }
        }
        Ok(Self { terms })
    }

    /// Grid matrix `Σ_k Q_k D^{order_k}_{a+}` on `points` points with step `h`.
    pub fn matrix(&self, points: usize, h: f64) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(points, points);
        for (q, order) in &self.terms {
            out += rl_derivative_matrix(points, h, FracOrder::new(*order)?)? * *q;
        }
        Ok(out)
    }
}

/// `(−D² + D^β)^n = Σ_k (−1)^{n−k} C(n,k) D^{βk + 2(n−k)}`.
pub fn quasi_polynomial_expand(n: u32, beta: f64) -> Result<QuasiPolynomial> {
    if n == 0 || !(beta > 0.0 && beta < 1.0 / n as f64) {
        return Err(Error::Domain(format!("need n ≥ 1 and 0 < β < 1/n, got n = {n}, β = {beta}")));
    }
    let terms = (0..=n)
        .map(|k| {
            let sign = if (n - k).is_multiple_of(2) { 1.0 } else { -1.0 };
            (sign * binomial(n as u64, k as u64), beta * k as f64 + 2.0 * (n - k) as f64)
        })
        .collect();
    QuasiPolynomial::new(terms)
}

/// `f_j = 1/(j+1)²`, used when a problem leaves `f` empty.
pub fn default_initial(dim: usize) -> CVector {
    CVector::from_fn(dim, |j, _| Complex64::new(1.0 / ((j + 1) * (j + 1)) as f64, 0.0))
}

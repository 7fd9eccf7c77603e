//! Dense complex operators with prescribed Jordan structure.
//!
//! Operators here are finite matrices `B` acting on `C^n`. The inner product
//! is `(f, g) = Σ f_k conj(g_k)` and all norms are Euclidean. Jordan structure
//! is never recovered from an arbitrary matrix: a [`JordanSpec`] fixes the
//! eigenvalues, chain lengths and root-vector basis, and the matrix is built
//! from it. Arbitrary matrices only enter through the diagonalizable path
//! ([`diagonalize`]), which refuses nearly defective inputs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::ops::Range;

use crate::error::{Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance under which two declared eigenvalues count as equal.
pub const EIGEN_CLUSTER_TOL: f64 = 1e-8;
/// Minimal relative eigenvalue separation accepted on the diagonalizable path.
pub const EIGEN_SEPARATION_GUARD: f64 = 1e-6;
/// Largest basis condition number accepted by [`JordanSpec::new`].
pub const MAX_BASIS_CONDITION: f64 = 1e12;
/// Seed of the sampled unit vectors used by [`sector_gauge`].
pub const SECTOR_GAUGE_SEED: u64 = 0x5ec7_0a11;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Inner product `(f, g)`, conjugate-linear in the second slot.
pub fn inner(f: &CVector, g: &CVector) -> Complex64 {
    g.dotc(f)
}

/// A square complex matrix with a free-text label.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    entries: CMatrix,
    label: String,
}

impl DenseOperator {
    pub fn new(entries: CMatrix, label: impl Into<String>) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::InvalidSpec(format!(
                "operator must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSpec("operator has non-finite entries".into()));
        }
        Ok(Self { entries, label: label.into() })
    }

    pub fn from_real(entries: &DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)), label)
    }

    pub fn diagonal(values: &[Complex64], label: impl Into<String>) -> Result<Self> {
        Self::new(CMatrix::from_diagonal(&CVector::from_column_slice(values)), label)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, f: &CVector) -> CVector {
        &self.entries * f
    }

    pub fn adjoint(&self) -> Self {
        Self { entries: self.entries.adjoint(), label: format!("{}*", self.label) }
    }

    /// `(B f, f)`.
    pub fn form(&self, f: &CVector) -> Complex64 {
        inner(&self.apply(f), f)
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .entries
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain(format!("operator '{}' is not invertible", self.label)))?;
        Ok(Self { entries: inv, label: format!("{}^-1", self.label) })
    }
}

/// Jordan data defining a compact operator `B = S J S^{-1}` by construction.
///
/// `eigenvalues[q]` is `μ_q`; `chains[q]` lists the lengths of the Jordan
/// chains belonging to it. Basis columns are ordered eigenvalue by eigenvalue,
/// chain by chain, eigenvector first, so that `B e_0 = μ e_0` and
/// `B e_{j} = μ e_j + e_{j-1}` inside a chain. The biorthogonal system is
/// `G = (S^{-1})^*`, normalized so that `(e_i, g_j) = δ_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanSpec {
    eigenvalues: Vec<Complex64>,
    chains: Vec<Vec<usize>>,
    basis: CMatrix,
    biorthogonal: CMatrix,
}

impl JordanSpec {
    pub fn new(eigenvalues: Vec<Complex64>, chains: Vec<Vec<usize>>, basis: CMatrix) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidSpec("at least one eigenvalue is required".into()));
        }
        if eigenvalues.len() != chains.len() {
            return Err(Error::InvalidSpec(format!(
                "{} eigenvalues but {} chain lists",
                eigenvalues.len(),
                chains.len()
            )));
        }
        for (q, c) in chains.iter().enumerate() {
            if c.is_empty() || c.contains(&0) {
                return Err(Error::InvalidSpec(format!("eigenvalue {q} needs chains of positive length")));
            }
        }
        for (q, mu) in eigenvalues.iter().enumerate() {
            if !mu.re.is_finite() || !mu.im.is_finite() || mu.norm() == 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "eigenvalue {q} must be finite and non-zero (characteristic numbers are 1/μ)"
                )));
            }
            for (p, nu) in eigenvalues.iter().enumerate().take(q) {
                if (mu - nu).norm() <= EIGEN_CLUSTER_TOL * mu.norm().max(nu.norm()) {
                    return Err(Error::InvalidSpec(format!(
                        "eigenvalues {p} and {q} coincide within relative tolerance {EIGEN_CLUSTER_TOL:e}"
                    )));
                }
            }
        }
        let dim: usize = chains.iter().flatten().sum();
        if basis.nrows() != dim || basis.ncols() != dim {
            return Err(Error::Dimension { expected: dim, got: basis.nrows().max(basis.ncols()) });
        }
        let sv = basis.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_BASIS_CONDITION) {
            return Err(Error::SingularBasis { condition });
        }
        let inv = basis.clone().try_inverse().ok_or(Error::SingularBasis { condition })?;
        Ok(Self { eigenvalues, chains, basis, biorthogonal: inv.adjoint() })
    }

    /// Jordan spec of the diagonal matrix `diag(values)` in the standard basis.
    pub fn diagonal(values: &[Complex64]) -> Result<Self> {
        let n = values.len();
        Self::new(values.to_vec(), vec![vec![1]; n], CMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Eigenvalues `μ_q` of `B`.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Characteristic numbers `λ_q = 1/μ_q`, the poles of `(I − λB)^{-1}`.
    pub fn characteristic_numbers(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|mu| 1.0 / mu).collect()
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn biorthogonal(&self) -> &CMatrix {
        &self.biorthogonal
    }

    /// Algebraic multiplicity of eigenvalue `q`.
    pub fn multiplicity(&self, q: usize) -> usize {
        self.chains[q].iter().sum()
    }

    /// Columns of the basis belonging to chain `ξ` of eigenvalue `q`.
    pub fn chain_columns(&self, q: usize, xi: usize) -> Range<usize> {
        let start: usize = self.chains[..q].iter().flatten().sum::<usize>() + self.chains[q][..xi].iter().sum::<usize>();
        start..start + self.chains[q][xi]
    }

    pub fn root_vector(&self, column: usize) -> CVector {
        self.basis.column(column).into_owned()
    }

    pub fn biorthogonal_vector(&self, column: usize) -> CVector {
        self.biorthogonal.column(column).into_owned()
    }

    /// Block-diagonal Jordan matrix `J` with ones on the superdiagonal inside chains.
    pub fn jordan_matrix(&self) -> CMatrix {
        let n = self.dim();
        let mut j = CMatrix::zeros(n, n);
        for (q, mu) in self.eigenvalues.iter().enumerate() {
            for xi in 0..self.chains[q].len() {
                let cols = self.chain_columns(q, xi);
                for c in cols.clone() {
                    j[(c, c)] = *mu;
                    if c > cols.start {
                        j[(c - 1, c)] = ONE;
                    }
                }
            }
        }
        j
    }

    /// Indices `q` sorted by ascending modulus of the characteristic number.
    pub fn characteristic_order(&self) -> Vec<usize> {
        let lam = self.characteristic_numbers();
        let mut idx: Vec<usize> = (0..lam.len()).collect();
        idx.sort_by(|&a, &b| {
            lam[a]
                .norm()
                .total_cmp(&lam[b].norm())
                .then(lam[a].arg().total_cmp(&lam[b].arg()))
        });
        idx
    }

    /// Largest `|(e_i, g_j) − δ_ij|`.
    pub fn biorthogonality_defect(&self) -> f64 {
        let gram = self.biorthogonal.adjoint() * &self.basis;
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { ONE } else { ZERO };
                worst = worst.max((gram[(i, j)] - d).norm());
            }
        }
        worst
    }

    pub fn to_document(&self) -> JordanSpecDocument {
        JordanSpecDocument {
            eigenvalues: self.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            chains: self.chains.clone(),
            basis: (0..self.dim())
                .map(|i| (0..self.dim()).map(|j| [self.basis[(i, j)].re, self.basis[(i, j)].im]).collect())
                .collect(),
        }
    }

    pub fn from_document(doc: &JordanSpecDocument) -> Result<Self> {
        let n = doc.basis.len();
        if doc.basis.iter().any(|row| row.len() != n) {
            return Err(Error::Parse("basis must be a square row-major matrix".into()));
        }
        let basis = CMatrix::from_fn(n, n, |i, j| Complex64::new(doc.basis[i][j][0], doc.basis[i][j][1]));
        let eig = doc.eigenvalues.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        Self::new(eig, doc.chains.clone(), basis)
    }
}

/// Serialized form of a [`JordanSpec`]: complex numbers as `[re, im]`, basis row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanSpecDocument {
    pub eigenvalues: Vec<[f64; 2]>,
    pub chains: Vec<Vec<usize>>,
    pub basis: Vec<Vec<[f64; 2]>>,
}

/// Materializes `B = S J S^{-1}`.
pub fn build_jordan_operator(spec: &JordanSpec) -> Result<DenseOperator> {
    let b = spec.basis() * spec.jordan_matrix() * spec.biorthogonal().adjoint();
    DenseOperator::new(b, "jordan")
}

/// Relative defect `‖BS − SJ‖ / (‖B‖‖S‖)` of a constructed operator.
pub fn jordan_defect(spec: &JordanSpec, b: &DenseOperator) -> f64 {
    let lhs = b.matrix() * spec.basis();
    let rhs = spec.basis() * spec.jordan_matrix();
    (lhs - rhs).norm() / (b.matrix().norm() * spec.basis().norm()).max(f64::MIN_POSITIVE)
}

/// Schur factorization `B = Q T Q^*` reused across many resolvent solves.
#[derive(Debug, Clone)]
pub struct ResolventKernel {
    q: CMatrix,
    t: CMatrix,
}

impl ResolventKernel {
    pub fn new(b: &DenseOperator) -> Self {
        let (q, t) = b.matrix().clone().schur().unpack();
        Self { q, t }
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Eigenvalues of `B` in Schur order.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }

    /// Characteristic numbers `1/μ` of the non-zero eigenvalues.
    pub fn characteristic_numbers(&self) -> Vec<Complex64> {
        self.eigenvalues().into_iter().filter(|m| m.norm() > 0.0).map(|m| 1.0 / m).collect()
    }

    /// Solves `(I − λB) x = f`.
    pub fn solve(&self, lambda: Complex64, f: &CVector) -> Result<CVector> {
        let n = self.dim();
        for i in 0..n {
            let d = ONE - lambda * self.t[(i, i)];
            let scale = 1.0 + (lambda * self.t[(i, i)]).norm();
            if d.norm() <= EIGEN_CLUSTER_TOL * scale {
                return Err(Error::Pole { lambda_q: 1.0 / self.t[(i, i)] });
            }
        }
        let mut y = self.q.adjoint() * f;
        for i in (0..n).rev() {
            let mut acc = y[i];
            for j in i + 1..n {
                acc += lambda * self.t[(i, j)] * y[j];
            }
            y[i] = acc / (ONE - lambda * self.t[(i, i)]);
        }
        Ok(&self.q * y)
    }

    /// `B (I − λB)^{-1} f = ((I − λB)^{-1} f − f) / λ`, evaluated without division by λ.
    pub fn b_resolvent(&self, lambda: Complex64, f: &CVector) -> Result<CVector> {
        let x = self.solve(lambda, f)?;
        let tx = &self.t * (self.q.adjoint() * x);
        Ok(&self.q * tx)
    }

    /// Operator norm of `(I − λB)^{-1}`.
    pub fn resolvent_norm(&self, lambda: Complex64) -> Result<f64> {
        let n = self.dim();
        let mut cols = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = CVector::zeros(n);
            e[j] = ONE;
            cols.set_column(j, &self.solve(lambda, &e)?);
        }
        Ok(spectral_norm(&cols))
    }
}

/// Solves `(I − λB) x = f`; fails with the offending characteristic number at a pole.
pub fn resolvent_apply(b: &DenseOperator, lambda: Complex64, f: &CVector) -> Result<CVector> {
    if f.len() != b.dim() {
        return Err(Error::Dimension { expected: b.dim(), got: f.len() });
    }
    ResolventKernel::new(b).solve(lambda, f)
}

/// `(ζI − B)^{-1} e_{q_ξ+i} = Σ_{j≤i} e_{q_ξ+j} / (ζ − μ_q)^{i−j+1}`.
pub fn jordan_resolvent_chain(spec: &JordanSpec, zeta: Complex64, q: usize, xi: usize, i: usize) -> Result<CVector> {
    let mu = *spec
        .eigenvalues()
        .get(q)
        .ok_or_else(|| Error::InvalidSpec(format!("no eigenvalue with index {q}")))?;
    let cols = spec.chain_columns(q, xi);
    if i >= cols.len() {
        return Err(Error::InvalidSpec(format!("chain offset {i} outside chain of length {}", cols.len())));
    }
    let d = zeta - mu;
    if d.norm() <= EIGEN_CLUSTER_TOL * mu.norm() {
        return Err(Error::Pole { lambda_q: 1.0 / mu });
    }
    let mut out = CVector::zeros(spec.dim());
    for j in 0..=i {
        let w = d.powi(-((i - j + 1) as i32));
        out += spec.root_vector(cols.start + j) * w;
    }
    Ok(out)
}

/// `ℜe B = (B + B^*)/2` and `ℑm B = (B − B^*)/2i`.
pub fn hermitian_components(b: &DenseOperator) -> (DenseOperator, DenseOperator) {
    let m = b.matrix();
    let adj = m.adjoint();
    let re = (m + &adj) * Complex64::new(0.5, 0.0);
    let im = (m - &adj) * Complex64::new(0.0, -0.5);
    (
        DenseOperator { entries: re, label: format!("Re {}", b.label()) },
        DenseOperator { entries: im, label: format!("Im {}", b.label()) },
    )
}

/// Singular values in descending order.
pub fn singular_values(b: &DenseOperator) -> Vec<f64> {
    let mut s: Vec<f64> = b.matrix().clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub(crate) fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, descending. Only the Hermitian part is used.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Eigenvalues of an arbitrary square matrix (Schur order).
pub fn eigenvalues(b: &DenseOperator) -> Vec<Complex64> {
    ResolventKernel::new(b).eigenvalues()
}

/// Eigen-decomposition `W = V Λ V^{-1}` of a diagonalizable matrix.
///
/// Eigenvectors come from back substitution on the Schur form and are
/// normalized to unit length. Eigenvalues closer than
/// [`EIGEN_SEPARATION_GUARD`] (relative) are rejected.
pub fn diagonalize(w: &DenseOperator) -> Result<(Vec<Complex64>, CMatrix)> {
    let (q, t) = w.matrix().clone().schur().unpack();
    let n = t.nrows();
    let lam: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = lam.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (lam[i] - lam[j]).norm() < EIGEN_SEPARATION_GUARD * scale {
                return Err(Error::Domain(format!(
                    "eigenvalues {} and {} are not separated (guard {EIGEN_SEPARATION_GUARD:e}); \
                     supply the Jordan structure explicitly",
                    lam[j], lam[i]
                )));
            }
        }
    }
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut acc = ZERO;
            for j in i + 1..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            y[(i, k)] = -acc / (t[(i, i)] - lam[k]);
        }
    }
    let mut v = q * y;
    for k in 0..n {
        let nrm = v.column(k).norm();
        v.column_mut(k).scale_mut(1.0 / nrm);
    }
    Ok((lam, v))
}

/// Result of a sampled numerical-range sector estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGauge {
    pub vertex: f64,
    pub semi_angle: f64,
    pub sample_count: usize,
    pub certified: bool,
}

/// Estimates the semi-angle of the smallest sector with the given vertex
/// containing the numerical range of `B`.
///
/// Samples are deterministic: seeded random unit vectors, the eigenvectors
/// of `B` and, when `ℜe B − ι` is positive definite, the extremal vectors of
/// the pencil `(ℑm B, ℜe B − ι)` (which attain the exact angle). The result is
/// a Monte-Carlo certificate. A sample with `Re((Bf,f) − ι) ≤ 0` makes the
/// operator non-sectorial at this vertex: `certified = false` and the angle is
/// reported as π/2.
pub fn sector_gauge(b: &DenseOperator, vertex: f64, samples: usize) -> Result<SectorGauge> {
    let n = b.dim();
    if samples < n * n {
        return Err(Error::Precondition(format!("sector gauge needs at least dim² = {} samples", n * n)));
    }
    let mut directions: Vec<CVector> = Vec::with_capacity(samples + 2 * n);
    let mut rng = ChaCha8Rng::seed_from_u64(SECTOR_GAUGE_SEED);
    for _ in 0..samples {
        directions.push(random_unit_vector(n, &mut rng));
    }
    if let Ok((_, v)) = diagonalize(b) {
        for k in 0..n {
            directions.push(v.column(k).into_owned());
        }
    }
    let (re, im) = hermitian_components(b);
    let shifted = re.matrix() - CMatrix::identity(n, n) * Complex64::new(vertex, 0.0);
    if let Some(chol) = shifted.clone().cholesky() {
        // extremal directions of (Im B) x = t (Re B − ι) x
        let l = chol.l();
        if let Some(linv) = l.clone().try_inverse() {
            let m = &linv * im.matrix() * linv.adjoint();
            let eig = ((&m + m.adjoint()) * Complex64::new(0.5, 0.0)).symmetric_eigen();
            for k in 0..n {
                let y = eig.eigenvectors.column(k).into_owned();
                directions.push(linv.adjoint() * y);
            }
        }
    }
    // None marks a direction with Re((Bf,f) − ι) ≤ 0
    let angles: Vec<Option<f64>> = directions
        .par_iter()
        .filter_map(|f| {
            let nrm = f.norm();
            (nrm > 0.0).then(|| {
                let z = b.form(&(f / Complex64::new(nrm, 0.0))) - vertex;
                (z.re > 0.0).then(|| z.arg().abs())
            })
        })
        .collect();
    let sample_count = directions.len();
    if angles.iter().any(Option::is_none) {
        return Ok(SectorGauge { vertex, semi_angle: FRAC_PI_2, sample_count, certified: false });
    }
    let theta = angles.into_iter().flatten().fold(0.0, f64::max);
    Ok(SectorGauge { vertex, semi_angle: theta, sample_count, certified: theta < FRAC_PI_2 })
}

pub fn random_unit_vector<R: Rng>(n: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(n, |_, _| Complex64::new(gauss(rng), gauss(rng)));
    let nrm = v.norm();
    v / Complex64::new(nrm, 0.0)
}

pub(crate) fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Margins of the singular-number bound
/// `s_{2m−1}(B), s_{2m}(B) ≤ √2 sec θ · λ_m(ℜe B)`.
///
/// Returns the smallest value of `rhs − lhs` over all admissible indices,
/// divided by `s_1(B)`; non-negative means the bound holds.
pub fn singular_real_part_margin(b: &DenseOperator, theta: f64) -> f64 {
    let s = singular_values(b);
    let (re, _) = hermitian_components(b);
    let lam = hermitian_eigenvalues(re.matrix());
    let c = std::f64::consts::SQRT_2 / theta.cos();
    let scale = s[0].max(f64::MIN_POSITIVE);
    let mut worst = f64::INFINITY;
    for m in 1..=lam.len() {
        for idx in [2 * m - 1, 2 * m] {
            if idx <= s.len() {
                worst = worst.min((c * lam[m - 1] - s[idx - 1]) / scale);
            }
        }
    }
    worst
}

/// Margins of `cos⁴θ·λ_i(R_H) ≤ λ_i(V) ≤ λ_i(R_H)` with `V = ℜe(W^{-1})`,
/// `R_H = (ℜe W)^{-1}`; returns `(lower, upper)` margins relative to `λ_1(R_H)`.
pub fn real_part_sandwich_margins(w: &DenseOperator, theta: f64) -> Result<(f64, f64)> {
    let winv = w.inverse()?;
    let (v, _) = hermitian_components(&winv);
    let (h, _) = hermitian_components(w);
    let rh = h.inverse()?;
    let lv = hermitian_eigenvalues(v.matrix());
    let lr = hermitian_eigenvalues(rh.matrix());
    let scale = lr[0].abs().max(f64::MIN_POSITIVE);
    let c4 = theta.cos().powi(4);
    let lower = lv.iter().zip(&lr).map(|(a, b)| (a - c4 * b) / scale).fold(f64::INFINITY, f64::min);
    let upper = lv.iter().zip(&lr).map(|(a, b)| (b - a) / scale).fold(f64::INFINITY, f64::min);
    Ok((lower, upper))
}

/// Margin of `Σ_{i≤k} |λ_i(W^{-1})|^p ≤ sec^p θ Σ_{i≤k} λ_i^p((ℜe W)^{-1})`,
/// worst over all partial sums `k`, relative to the full right-hand side.
pub fn eigen_sum_margin(w: &DenseOperator, theta: f64, p: f64) -> Result<f64> {
    let winv = w.inverse()?;
    let mut mods: Vec<f64> = eigenvalues(&winv).iter().map(|z| z.norm()).collect();
    mods.sort_by(|x, y| y.total_cmp(x));
    let (h, _) = hermitian_components(w);
    let lr = hermitian_eigenvalues(h.inverse()?.matrix());
    let sec_p = theta.cos().powf(-p);
    let total: f64 = sec_p * lr.iter().map(|x| x.powf(p)).sum::<f64>();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut worst = f64::INFINITY;
    for (a, b) in mods.iter().zip(&lr) {
        lhs += a.powf(p);
        rhs += sec_p * b.powf(p);
        worst = worst.min((rhs - lhs) / total);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::*;

    mod approx_eq {
        pub fn close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * (1.0 + b.abs())
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cv(v: &[Complex64]) -> CVector {
        CVector::from_column_slice(v)
    }

    #[test]
    fn one_by_one_identity_basis() {
        let spec = JordanSpec::new(vec![c(2.0, 0.0)], vec![vec![1]], CMatrix::identity(1, 1)).unwrap();
        let b = build_jordan_operator(&spec).unwrap();
        assert_eq!(b.matrix()[(0, 0)], c(2.0, 0.0));
    }

    #[test]
    fn canonical_jordan_block() {
        let mu = c(0.7, -0.2);
        let spec = JordanSpec::new(vec![mu], vec![vec![2]], CMatrix::identity(2, 2)).unwrap();
        let b = build_jordan_operator(&spec).unwrap();
        let expect = CMatrix::from_row_slice(2, 2, &[mu, c(1.0, 0.0), c(0.0, 0.0), mu]);
        assert!((b.matrix() - expect).norm() < 1e-15);
    }

    #[test]
    fn clustered_or_zero_eigenvalues_rejected() {
        let s = CMatrix::identity(2, 2);
        let err = JordanSpec::new(vec![c(1.0, 0.0), c(1.0 + 1e-10, 0.0)], vec![vec![1], vec![1]], s.clone());
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
        let err = JordanSpec::new(vec![c(0.0, 0.0), c(1.0, 0.0)], vec![vec![1], vec![1]], s);
        assert!(matches!(err, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn singular_basis_reports_condition() {
        let s = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        match JordanSpec::new(vec![c(1.0, 0.0), c(3.0, 0.0)], vec![vec![1], vec![1]], s) {
            Err(Error::SingularBasis { condition }) => assert!(condition > MAX_BASIS_CONDITION),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chain_columns_follow_declaration_order() {
        let spec = JordanSpec::new(
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![vec![2, 1], vec![3]],
            CMatrix::identity(6, 6),
        )
        .unwrap();
        assert_eq!(spec.chain_columns(0, 0), 0..2);
        assert_eq!(spec.chain_columns(0, 1), 2..3);
        assert_eq!(spec.chain_columns(1, 0), 3..6);
        assert_eq!(spec.multiplicity(0), 3);
    }

    #[test]
    fn scalar_resolvent_and_zero_operator() {
        let b = DenseOperator::new(CMatrix::from_element(1, 1, c(0.5, 0.0)), "half").unwrap();
        let x = resolvent_apply(&b, c(1.0, 0.0), &cv(&[c(1.0, 0.0)])).unwrap();
        assert!((x[0] - c(2.0, 0.0)).norm() < 1e-15);

        let z = DenseOperator::new(CMatrix::zeros(3, 3), "zero").unwrap();
        let f = cv(&[c(1.0, 2.0), c(-1.0, 0.0), c(0.0, 3.0)]);
        let x = resolvent_apply(&z, c(4.0, -2.0), &f).unwrap();
        assert!((x - f).norm() < 1e-15);
    }

    #[test]
    fn pole_is_reported_with_characteristic_number() {
        let b = DenseOperator::diagonal(&[c(0.5, 0.0), c(0.25, 0.0)], "d").unwrap();
        match resolvent_apply(&b, c(4.0, 0.0), &cv(&[c(1.0, 0.0), c(1.0, 0.0)])) {
            Err(Error::Pole { lambda_q }) => assert!((lambda_q - c(4.0, 0.0)).norm() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jordan_chain_resolvent_examples() {
        let mu = c(0.5, 0.1);
        let spec = JordanSpec::new(vec![mu], vec![vec![2]], CMatrix::identity(2, 2)).unwrap();
        let zeta = c(1.3, -0.4);
        let d = zeta - mu;
        let r0 = jordan_resolvent_chain(&spec, zeta, 0, 0, 0).unwrap();
        assert!((r0 - cv(&[1.0 / d, c(0.0, 0.0)])).norm() < 1e-14);
        let r1 = jordan_resolvent_chain(&spec, zeta, 0, 0, 1).unwrap();
        assert!((r1 - cv(&[1.0 / (d * d), 1.0 / d])).norm() < 1e-14);

        let spec3 = JordanSpec::new(vec![mu], vec![vec![3]], CMatrix::identity(3, 3)).unwrap();
        let r2 = jordan_resolvent_chain(&spec3, mu + 1.0, 0, 0, 2).unwrap();
        assert!((r2 - cv(&[c(1.0, 0.0); 3])).norm() < 1e-14);
        assert!(matches!(jordan_resolvent_chain(&spec3, mu, 0, 0, 1), Err(Error::Pole { .. })));
    }

    #[test]
    fn hermitian_component_examples() {
        let b = DenseOperator::new(
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            "b",
        )
        .unwrap();
        let (re, im) = hermitian_components(&b);
        let re_expect = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let im_expect = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        assert!((re.matrix() - re_expect).norm() < 1e-15);
        assert!((im.matrix() - im_expect).norm() < 1e-15);

        let h = DenseOperator::new(
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)]),
            "h",
        )
        .unwrap();
        let (re, im) = hermitian_components(&h);
        assert!((re.matrix() - h.matrix()).norm() < 1e-15);
        assert!(im.matrix().norm() < 1e-15);
    }

    #[test]
    fn singular_value_examples() {
        let b = DenseOperator::new(
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            "b",
        )
        .unwrap();
        let s = singular_values(&b);
        assert!(close(s[0], 2.0, 1e-14) && s[1].abs() < 1e-14);
        let d = DenseOperator::diagonal(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)], "d").unwrap();
        let s = singular_values(&d);
        assert!(close(s[0], 3.0, 1e-14) && close(s[1], 2.0, 1e-14) && close(s[2], 1.0, 1e-14));
    }

    #[test]
    fn sector_gauge_examples() {
        let t = std::f64::consts::PI / 6.0;
        let b = DenseOperator::diagonal(&[c(1.0, 0.0), Complex64::from_polar(1.0, t)], "d").unwrap();
        let g = sector_gauge(&b, 0.0, 16).unwrap();
        assert!(g.certified);
        assert!((g.semi_angle - t).abs() < 1e-12);

        let id = DenseOperator::new(CMatrix::identity(3, 3), "I").unwrap();
        let g = sector_gauge(&id, 0.0, 9).unwrap();
        assert!(g.semi_angle.abs() < 1e-15 && g.certified);

        assert!(matches!(sector_gauge(&id, 0.0, 8), Err(Error::Precondition(_))));

        let neg = DenseOperator::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)], "n").unwrap();
        let g = sector_gauge(&neg, 0.0, 4).unwrap();
        assert!(!g.certified && g.semi_angle == FRAC_PI_2);
    }

    #[test]
    fn diagonalize_rejects_defective_input() {
        let j = DenseOperator::new(
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            "j",
        )
        .unwrap();
        assert!(diagonalize(&j).is_err());
    }
}

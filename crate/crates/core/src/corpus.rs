//! Seeded operator families used by the test suites and the CLI `verify` run.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::evolve::{CauchyProblem, OperatorConfig};
use crate::linops::{gauss, CMatrix, DenseOperator, JordanSpec};
use crate::symbol::FunctionSpec;

/// Seed of the default corpus.
pub const CORPUS_SEED: u64 = 20_240_601;

pub fn corpus_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss_matrix<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(gauss(rng), gauss(rng)))
}

/// Haar-like unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let (q, r) = gauss_matrix(rng, n).qr().unpack();
    let phases = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let d = r[(i, i)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                Complex64::new(1.0, 0.0)
            }
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    q * phases
}

/// Random Jordan data of dimension `dim` with chains of length at most
/// `max_chain`. Characteristic numbers have moduli in `[0.5, 4]` and
/// arguments in `[−theta, theta]`; some eigenvalues carry several chains.
pub fn random_jordan_spec<R: Rng>(rng: &mut R, dim: usize, max_chain: usize, theta: f64) -> Result<JordanSpec> {
    let mut lambdas: Vec<Complex64> = Vec::new();
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut left = dim;
    while left > 0 {
        let len = rng.gen_range(1..=max_chain.min(left).max(1));
        if !chains.is_empty() && rng.gen_bool(0.25) {
            let q = rng.gen_range(0..chains.len());
            chains[q].push(len);
        } else {
            let lam = loop {
                let cand = Complex64::from_polar(rng.gen_range(0.5..4.0), rng.gen_range(-theta..=theta));
                if lambdas.iter().all(|l| (l - cand).norm() > 0.2) {
                    break cand;
                }
            };
            lambdas.push(lam);
            chains.push(vec![len]);
        }
        left -= len;
    }
    let basis = CMatrix::identity(dim, dim) + gauss_matrix(rng, dim) * Complex64::new(0.25 / (dim as f64).sqrt(), 0.0);
    JordanSpec::new(lambdas.iter().map(|l| 1.0 / l).collect(), chains, basis)
}

/// `B = A^{1/2}(I + iK)A^{1/2}` with `A` positive definite (eigenvalues
/// `k^{-1.5}`, random eigenbasis) and `‖K‖ = 0.95 tan theta`, so the numerical
/// range lies in the sector `|arg z| ≤ theta` and `ℜe B = A`.
pub fn random_sectorial<R: Rng>(rng: &mut R, dim: usize, theta: f64) -> Result<DenseOperator> {
    let u = random_unitary(rng, dim);
    let sqrt_d = CMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(((i + 1) as f64).powf(-0.75), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let half = &u * sqrt_d * u.adjoint();
    let y = gauss_matrix(rng, dim);
    let k = (&y + y.adjoint()) * Complex64::new(0.5, 0.0);
    let knorm = k.clone().symmetric_eigen().eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let k = k * Complex64::new(0.0, 0.95 * theta.tan() / knorm.max(f64::MIN_POSITIVE));
    let b = &half * (CMatrix::identity(dim, dim) + k) * &half;
    DenseOperator::new(b, "sectorial")
}

/// A named Cauchy problem of the evolution corpus.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub problem: CauchyProblem,
    pub diagonalizable: bool,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `f_j = (j+1)^{−power}`; fast decay keeps `‖φ^α(W)f‖` moderate for
/// operators with growing spectra.
fn decaying(dim: usize, power: i32) -> Vec<Complex64> {
    (0..dim).map(|j| c(((j + 1) as f64).powi(-power), 0.0)).collect()
}

/// Evolution corpus at summation order `alpha` with `φ(z) = z`: diagonal,
/// Jordan, difference-operator and fractionally perturbed (modal) problems.
pub fn evolution_corpus(alpha: f64) -> Vec<CorpusEntry> {
    let phi = FunctionSpec::identity();
    let entry = |name: &str, operator: OperatorConfig, f: Vec<Complex64>, diagonalizable: bool| CorpusEntry {
        name: name.to_string(),
        problem: CauchyProblem { operator, phi: phi.clone(), alpha, f },
        diagonalizable,
    };
    vec![
        entry(
            "diagonal",
            OperatorConfig::Diagonal { lambdas: vec![c(0.6, 0.0), c(1.3, 0.2), c(2.1, -0.3), c(3.0, 0.1)] },
            vec![c(1.0, 0.0), c(0.5, -0.2), c(0.3, 0.1), c(-0.2, 0.0)],
            true,
        ),
        entry(
            "sturm-liouville",
            OperatorConfig::SturmLiouville { a: c(0.25, 0.05), modes: 6 },
            decaying(6, 3),
            true,
        ),
        entry(
            "jordan",
            OperatorConfig::Jordan {
                lambdas: vec![c(0.8, 0.1), c(1.7, -0.2), c(2.5, 0.0)],
                chains: vec![vec![2, 1], vec![3], vec![1]],
                basis: None,
            },
            vec![],
            false,
        ),
        entry("difference-4", OperatorConfig::Difference { c: 1.5, dim: 4 }, vec![], false),
        entry("difference-16", OperatorConfig::Difference { c: 1.0, dim: 16 }, vec![], false),
        entry(
            "frac-perturbed-modal",
            OperatorConfig::FracPerturbed { eta: -1.0, xi: 1.0, beta: 0.3, points: 401, modes: 32, a: 0.0, b: TAU },
            decaying(32, 6),
            true,
        ),
    ]
}

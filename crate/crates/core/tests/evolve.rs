use std::f64::consts::{E, FRAC_PI_6, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rootsum::corpus::{corpus_rng, evolution_corpus, random_unitary};
use rootsum::error::Error;
use rootsum::evolve::*;
use rootsum::fraccalc::{difference_frac_coeffs, nilpotent_shift_power, rl_derivative_matrix, FracOrder};
use rootsum::linops::{hermitian_eigenvalues, sector_gauge, CMatrix, CVector, DenseOperator};
use rootsum::symbol::FunctionSpec;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn diag_problem(lambdas: Vec<Complex64>, phi: FunctionSpec, alpha: f64, f: Vec<Complex64>) -> CauchyProblem {
    CauchyProblem { operator: OperatorConfig::Diagonal { lambdas }, phi, alpha, f }
}

#[test]
fn residual_vanishes_on_the_corpus() {
    let settings = ResidualSettings::default();
    for alpha in [1.0, 1.5, 2.0] {
        for entry in evolution_corpus(alpha) {
            let solver = CauchySolver::new(&entry.problem).unwrap();
            for t in [0.1, 0.5, 1.0, 2.0] {
                let r = solver.residual(t, &settings).unwrap();
                assert!(r <= 1e-4, "{} α={alpha} t={t}: {r:.3e}", entry.name);
            }
        }
    }
}

#[test]
fn classical_residual_matches_matrix_exponential() {
    let lambdas = vec![c(0.7, 0.1), c(1.9, -0.4), c(3.2, 0.0)];
    let f = vec![c(1.0, 0.0), c(-0.4, 0.3), c(0.2, 0.1)];
    let p = diag_problem(lambdas.clone(), FunctionSpec::identity(), 1.0, f.clone());
    let solver = CauchySolver::new(&p).unwrap();
    let w = CMatrix::from_diagonal(&CVector::from_vec(lambdas));
    let f = CVector::from_vec(f);
    for t in [0.3, 1.0, 2.0] {
        let oracle = (&w * c(-t, 0.0)).exp() * &f;
        assert!((solver.solve(t).unwrap() - oracle).norm() < 1e-13);
        assert!(solver.residual(t, &ResidualSettings::default()).unwrap() <= 1e-6);
    }
}

#[test]
fn zero_data_has_zero_residual() {
    let p = diag_problem(vec![c(1.0, 0.0), c(2.0, 0.0)], FunctionSpec::identity(), 1.5, vec![c(0.0, 0.0); 2]);
    assert_eq!(residual(&p, 0.5, &ResidualSettings::default()).unwrap(), 0.0);
    assert_eq!(solve_cauchy(&p, None, 0.5).unwrap().norm(), 0.0);
}

#[test]
fn non_decaying_modes_are_rejected() {
    let p = diag_problem(vec![c(1.0, 0.0), c(-2.0, 0.1)], FunctionSpec::identity(), 1.0, vec![]);
    match CauchySolver::new(&p) {
        Err(Error::NonDecaying { offending }) => assert_eq!(offending.len(), 1),
        other => panic!("expected a non-decaying error, got {other:?}"),
    }
}

#[test]
fn initial_condition_is_recovered() {
    for alpha in [1.0, 1.5] {
        for entry in evolution_corpus(alpha).into_iter().filter(|e| e.diagonalizable) {
            let solver = CauchySolver::new(&entry.problem).unwrap();
            let gaps: Vec<f64> = (1..=12)
                .map(|k| (solver.solve(0.5f64.powi(k)).unwrap() - solver.initial()).norm())
                .collect();
            assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{}: {gaps:?}", entry.name);
            assert!(gaps[11] <= 1e-3, "{}: {:.3e}", entry.name, gaps[11]);
        }
    }
}

/// `φ^α(W) = W^α` has a positive semidefinite Hermitian part: `W` normal with
/// sectorial spectrum, or `α = 1` and `ℜe W ≥ 0`.
fn generator_is_accretive(solver: &CauchySolver) -> bool {
    let w = solver.operator().inverse().unwrap();
    let m = w.matrix();
    let normal = (m * m.adjoint() - m.adjoint() * m).norm() <= 1e-10 * m.norm_squared();
    let (re, _) = rootsum::linops::hermitian_components(&w);
    let min = hermitian_eigenvalues(re.matrix()).into_iter().fold(f64::INFINITY, f64::min);
    normal || (solver.alpha() == 1.0 && min >= 0.0)
}

#[test]
fn solution_norm_never_exceeds_data() {
    let times = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0];
    let mut checked = 0;
    for alpha in [1.0, 1.5, 2.0] {
        for entry in evolution_corpus(alpha) {
            let solver = CauchySolver::new(&entry.problem).unwrap();
            if !generator_is_accretive(&solver) {
                continue;
            }
            checked += 1;
            let f = solver.initial().norm();
            for u in solver.solve_grid(&times).unwrap() {
                assert!(u.norm() <= f * (1.0 + 1e-12), "{} α={alpha}: {} > {f}", entry.name, u.norm());
            }
        }
    }
    assert_eq!(checked, 9);
}

#[test]
fn non_normal_generator_can_grow() {
    // decaying spectrum alone does not make W^α accretive: Y² for the
    // difference operator amplifies f before it decays
    let entry = evolution_corpus(2.0).into_iter().find(|e| e.name == "difference-16").unwrap();
    let solver = CauchySolver::new(&entry.problem).unwrap();
    assert!(!generator_is_accretive(&solver));
    let f = solver.initial().norm();
    let peak = solver.solve_grid(&[0.5, 1.0, 2.0, 4.0]).unwrap().iter().map(|u| u.norm()).fold(0.0, f64::max);
    assert!(peak > 2.0 * f, "{peak} vs {f}");
    assert!(solver.solve(60.0).unwrap().norm() < 1e-6 * f);
}

#[test]
fn classical_norm_is_non_increasing_for_accretive_symbols() {
    let mut rng = corpus_rng(61);
    let art = build_artificial_normal(1.0, E.powf(E), 64, ImagRule::HalfRoot).unwrap();
    let problems = vec![
        diag_problem(vec![c(0.6, 0.0), c(1.3, 0.2), c(2.1, -0.3)], FunctionSpec::identity(), 1.0, vec![]),
        diag_problem(art.lambdas.clone(), FunctionSpec::identity(), 1.0, vec![]),
        CauchyProblem {
            operator: OperatorConfig::SturmLiouville { a: c(1.0, 0.4), modes: 12 },
            phi: FunctionSpec::identity(),
            alpha: 1.0,
            f: vec![],
        },
    ];
    let times: Vec<f64> = (0..40).map(|k| 0.05 * k as f64).collect();
    for p in &problems {
        let dim = p.operator.realize().unwrap().dim();
        let f = rootsum::linops::random_unit_vector(dim, &mut rng);
        let p = CauchyProblem { f: f.iter().copied().collect(), ..p.clone() };
        let norms: Vec<f64> =
            CauchySolver::new(&p).unwrap().solve_grid(&times).unwrap().iter().map(|u| u.norm()).collect();
        assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13)), "{norms:?}");
    }
    // a unitary change of basis keeps the evolution a contraction
    let q = random_unitary(&mut rng, 6);
    let lam = [c(0.5, 0.2), c(1.0, -0.5), c(1.5, 0.1), c(2.0, 0.0), c(3.0, 1.0), c(4.0, -0.2)];
    let spec = rootsum::linops::JordanSpec::new(lam.iter().map(|l| 1.0 / l).collect(), vec![vec![1]; 6], q).unwrap();
    let f = rootsum::linops::random_unit_vector(6, &mut rng);
    let solver = CauchySolver::from_spec(spec, FunctionSpec::identity(), 1.0, f, None).unwrap();
    let norms: Vec<f64> = solver.solve_grid(&times).unwrap().iter().map(|u| u.norm()).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-13)));
}

/// Eigenvalues of a real symmetric matrix stored as complex.
fn sorted_real_spectrum(m: &CMatrix) -> Vec<f64> {
    assert!(m.iter().all(|v| v.im == 0.0));
    let re = m.map(|v| v.re);
    assert!((&re - re.transpose()).amax() == 0.0);
    let mut ev: Vec<f64> = re.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn sturm_liouville_grid_converges() {
    let op = sturm_liouville_grid(c(1.0, 0.0), 1001).unwrap();
    let ev = sorted_real_spectrum(op.matrix());
    assert!((ev[0] - 1.0).abs() < 1e-3, "{}", ev[0]);
    for j in 1..=5 {
        let want = (j * j) as f64;
        assert!((ev[j - 1] - want).abs() < 1e-2 * want);
    }
}

#[test]
fn rotated_sturm_liouville_gauge() {
    let a = Complex64::from_polar(1.0, FRAC_PI_6);
    let spec = build_sturm_liouville(a, 8).unwrap();
    let w = DenseOperator::diagonal(&spec.characteristic_numbers(), "modal").unwrap();
    let g = sector_gauge(&w, 0.0, 256).unwrap();
    assert!(g.certified);
    assert!((g.semi_angle - FRAC_PI_6).abs() < 1e-12, "{}", g.semi_angle);
}

#[test]
fn unperturbed_frac_operator_is_the_laplacian() {
    let (a, b) = (0.0, 2.0);
    let w = build_frac_perturbed(-1.0, 0.0, 0.5, a, b, 1001).unwrap();
    assert!(w.warning.is_none());
    let ev = sorted_real_spectrum(w.operator.matrix());
    for j in 1..=5 {
        let want = (PI * j as f64 / (b - a)).powi(2);
        assert!((ev[j - 1] - want).abs() < 1e-2 * want, "j={j}: {} vs {want}", ev[j - 1]);
    }
    let s = w.certificate;
    assert!((s.sandwich_lower - 1.0).abs() < 1e-9 && (s.sandwich_upper - 1.0).abs() < 1e-9);
    assert!(s.h3_constant < 1e-12);
}

#[test]
fn frac_perturbed_operator_is_sectorial() {
    let w = build_frac_perturbed(-1.0, 1.0, 0.3, 0.0, 1.0, 101).unwrap();
    assert!(w.warning.is_none());
    assert!(w.certificate.sandwich_holds());
    assert!(w.certificate.sandwich_lower > 0.5 && w.certificate.sandwich_upper < 2.0, "{:?}", w.certificate);
    assert!(w.certificate.h3_constant.is_finite() && w.certificate.h3_constant > 0.0);
    let g = w.sector_gauge().unwrap();
    assert!(g.certified, "{g:?}");
    assert!(build_frac_perturbed(1.0, 1.0, 0.3, 0.0, 1.0, 101).is_err());
    assert!(build_frac_perturbed(-1.0, 1.0, 0.3, 0.0, 1.0, 5).is_err());
}

/// Smooth bump supported in `[0.3, 0.7]`.
fn bump(x: f64) -> f64 {
    let s = (x - 0.5) / 0.2;
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

#[test]
fn squared_operator_matches_expansion() {
    let (n, beta) = (2001, 0.3);
    let h = 1.0 / (n - 1) as f64;
    let f = nalgebra::DVector::from_fn(n, |i, _| bump(i as f64 * h));
    let d2 = rl_derivative_matrix(n, h, FracOrder::new(2.0).unwrap()).unwrap();
    let db = rl_derivative_matrix(n, h, FracOrder::new(beta).unwrap()).unwrap();
    let apply = |g: &nalgebra::DVector<f64>| -(&d2 * g) + &db * g;
    let composed = apply(&apply(&f));
    let expanded = quasi_polynomial_expand(2, beta).unwrap().matrix(n, h).unwrap() * &f;
    // compare away from the right end, where the one-sided stencils lose an order
    let range = 0..n - 8;
    let err = range.clone().map(|i| (composed[i] - expanded[i]).abs()).fold(0.0, f64::max);
    let scale = range.map(|i| expanded[i].abs()).fold(0.0, f64::max);
    assert!(err <= 5e-2 * scale, "{err:.3e} vs {scale:.3e}");
}

#[test]
fn quasi_polynomial_is_accretive_under_refinement() {
    let q = quasi_polynomial_expand(2, 0.3).unwrap();
    // one-sided boundary stencils of the fourth difference are not dissipative;
    // the interior block is where functions of the operator domain live
    let trim = 4;
    for points in [101, 201, 401] {
        let h = 1.0 / (points - 1) as f64;
        let m = q.matrix(points, h).unwrap();
        let k = points - 2 * trim;
        let inner: DMatrix<f64> = m.view((trim, trim), (k, k)).into_owned();
        let sym = (&inner + inner.transpose()) * 0.5;
        let min = sym.symmetric_eigenvalues().min();
        let norm = inner.norm();
        assert!(min >= -0.02 * norm, "points={points}: {min:.3e} vs ‖·‖ = {norm:.3e}");
        assert!(min > 0.0);
    }
}

#[test]
fn artificial_normal_sums() {
    let (kappa, q) = (1.0, E.powf(E));
    let partial = |exp: f64, n: usize| -> f64 { (1..=n).map(|k| artificial_modulus(kappa, q, k).powf(-exp)).sum() };
    let decade_increments = |exp: f64| -> Vec<f64> {
        let s: Vec<f64> = [1_000usize, 10_000, 100_000].iter().map(|&n| partial(exp, n)).collect();
        vec![s[1] - s[0], s[2] - s[1]]
    };
    // Σ 1/(n ln n ln ln n) keeps adding a near-constant amount per decade
    let div = decade_increments(1.0 / kappa);
    assert!(div[1] > 0.6 * div[0], "{div:?}");
    // one extra power of decay makes the decades shrink geometrically
    let conv = decade_increments(1.0 / kappa + 0.5);
    assert!(conv[1] < 0.4 * conv[0], "{conv:?}");
    let tail = partial(1.5, 100_000) - partial(1.5, 10_000);
    assert!(tail < 1e-3, "{tail:.3e}");
}

#[test]
fn artificial_normal_operator_entries() {
    let a = build_artificial_normal(1.0, E.powf(E), 200, ImagRule::HalfRoot).unwrap();
    for (n, lam) in a.lambdas.iter().enumerate() {
        let mu = artificial_modulus(1.0, E.powf(E), n + 1);
        assert_eq!(lam.re, mu);
        assert!((lam.im - mu.sqrt() / 2.0).abs() < 1e-12 * mu);
        assert!(lam.im.abs() <= lam.norm().sqrt());
    }
    let zero = build_artificial_normal(0.7, E.powf(E), 50, ImagRule::Zero).unwrap();
    assert!(zero.lambdas.iter().all(|l| l.im == 0.0 && l.re > 0.0));
    let w = DenseOperator::diagonal(&zero.lambdas, "selfadjoint").unwrap();
    assert!((w.matrix() - w.matrix().adjoint()).norm() == 0.0);
    assert!(build_artificial_normal(1.0, E.powf(E), 10, ImagRule::Root { scale: 2.0 }).is_err());
}

#[test]
fn difference_operator_adjoint_and_powers() {
    let d = build_difference_operator(2.0, 5).unwrap();
    let adj = d.operator.adjoint();
    let m = adj.matrix();
    for i in 0..5 {
        for j in 0..5 {
            let want = if i == j {
                2.0
            } else if j == i + 1 {
                -2.0
            } else {
                0.0
            };
            assert_eq!(m[(i, j)], c(want, 0.0));
        }
    }
    // Y^β from the coefficient sequence is the lower-triangular Toeplitz matrix
    // of the nilpotent binomial series
    let beta = 0.4;
    let coeffs = difference_frac_coeffs(beta, 2.0, 5).unwrap();
    let power = nilpotent_shift_power(beta, 2.0, 5).unwrap();
    for i in 0..5 {
        for j in 0..=i {
            assert!((power[(i, j)] - coeffs[i - j]).abs() <= 1e-15 * 2f64.powf(beta));
        }
    }
}

#[test]
fn cauchy_problem_config_round_trip() {
    let p = CauchyProblem {
        operator: OperatorConfig::Jordan {
            lambdas: vec![c(0.8, 0.1), c(2.0, 0.0)],
            chains: vec![vec![2], vec![1]],
            basis: None,
        },
        phi: FunctionSpec::Polynomial { coeffs: vec![c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0)] },
        alpha: 1.5,
        f: vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)],
    };
    let text = toml::to_string(&p).unwrap();
    let back: CauchyProblem = toml::from_str(&text).unwrap();
    assert_eq!(back, p);
    let minimal = "alpha = 1.0\n[operator]\nkind = \"sturm-liouville\"\na = [1.0, 0.0]\nmodes = 4\n[phi]\nkind = \"monomial\"\npower = 1\n";
    let p: CauchyProblem = toml::from_str(minimal).unwrap();
    assert_eq!(CauchySolver::new(&p).unwrap().initial(), &default_initial(4));
}

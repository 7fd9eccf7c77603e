use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rootsum::corpus::{corpus_rng, random_sectorial};
use rootsum::growth::*;
use rootsum::linops::{eigenvalues, CMatrix, DenseOperator};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn power_sequence(exponent: f64, count: usize) -> ZeroSequence {
    ZeroSequence::new((1..=count).map(|n| (n as f64).powf(exponent)).collect(), None).unwrap().with_unbounded(true)
}

fn exponent_grid() -> Vec<f64> {
    (1..=40).map(|k| k as f64 * 0.1).collect()
}

#[test]
fn counting_examples() {
    let z = ZeroSequence::new(vec![1.0, 2.0, 3.0], None).unwrap();
    assert_eq!(counting_function(&z, 2.5), 2);
    assert_eq!(counting_function(&z, 0.5), 0);
    let e = example41_sequence(0.4, 20_000).unwrap();
    let direct = e.moduli().iter().filter(|m| **m < 1e3).count();
    assert_eq!(counting_function(&e, 1e3), direct);
}

#[test]
fn power_sequence_exponents() {
    let sq = convergence_exponent(&power_sequence(2.0, 100_000), &exponent_grid()).unwrap();
    assert!((sq.rho_hat - 0.5).abs() <= 0.05, "{}", sq.rho_hat);
    assert_eq!(sq.genus, 0);
    let lin = convergence_exponent(&power_sequence(1.0, 100_000), &exponent_grid()).unwrap();
    assert!((lin.rho_hat - 1.0).abs() <= 0.05, "{}", lin.rho_hat);
    assert_eq!(lin.genus, 1);
    assert!(lin.diverges_at_rho);
}

#[test]
fn too_few_terms_is_reported() {
    assert!(convergence_exponent(&power_sequence(2.0, 999), &exponent_grid()).is_err());
}

#[test]
fn example_sequence_diverges_at_its_exponent() {
    let z = example41_sequence(0.4, 100_000).unwrap();
    assert!(z.moduli().windows(2).all(|w| w[1] > w[0]));
    let a = z.moduli()[z.len() - 1];
    let (la, lla) = (a.ln(), a.ln().ln());
    let ratio = counting_function(&z, a) as f64 / (a.powf(0.4) / (la * lla));
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");

    let report = convergence_exponent(&z, &exponent_grid()).unwrap();
    assert!((report.rho_hat - 0.4).abs() <= 0.05, "{}", report.rho_hat);
    assert!(report.diverges_at_rho);

    // the divergence is triple-logarithmic: decade increments of Σ a_n^{-ρ₁}
    // barely shrink, while at ρ₁ + 0.1 they shrink geometrically
    let decay = |lambda: f64| {
        let s: Vec<f64> = [1_000, 10_000, 100_000].iter().map(|&n| z.partial_sum(lambda, n)).collect();
        (s[2] - s[1]) / (s[1] - s[0])
    };
    let (at, above) = (decay(0.4), decay(0.5));
    assert!(at > 0.75, "{at}");
    assert!(above < 0.6, "{above}");
    // at ρ₁ + 0.1 the tail block is small
    let n = z.len();
    let tail: f64 = z.moduli()[n / 2..].iter().map(|m| m.powf(-0.5)).sum();
    assert!(tail < 1e-3, "{tail}");
}

#[test]
fn beta_closed_forms() {
    let empty = ZeroSequence::new(vec![], None).unwrap();
    assert_eq!(beta_function(&empty, 3.0, 0, 0.5, 0.5).unwrap().value, 0.0);
    let single = ZeroSequence::new(vec![1.0], None).unwrap();
    for r in [2.0, 10.0, 1e3] {
        let b = beta_function(&single, r, 0, 1.0 - 1e-9, 0.0).unwrap();
        let want = (r.ln() + 1.0) / r;
        assert!((b.value - want).abs() < 1e-6 * want, "r={r}");
    }
    assert!(beta_function(&single, 2.0, 0, 1.0, 0.0).is_err());
}

#[test]
fn beta_decays_when_rho1_exceeds_rho() {
    // ρ = 0.5, ρ₁ = 0.8, p = 0
    let z = power_sequence(2.0, 100_000);
    let betas: Vec<f64> =
        (2..=8).map(|k| beta_function(&z, 10f64.powi(k), 0, 0.8, 0.5).unwrap().value).collect();
    assert!(betas.windows(2).all(|w| w[1] < w[0]), "{betas:?}");
    assert!(betas[betas.len() - 1] < 0.05 * betas[0]);
}

#[test]
fn beta_bounded_by_counting_ratio() {
    let radii: Vec<f64> = (2..=5).map(|k| 10f64.powi(k)).collect();
    let measure = |z: &ZeroSequence, rho1: f64, tail: f64| {
        let eps = radii
            .iter()
            .map(|&r| r.ln() * counting_function(z, r) as f64 / r.powf(rho1))
            .fold(0.0, f64::max);
        let lhs = radii
            .iter()
            .map(|&r| beta_function(z, r, 0, rho1, tail).unwrap().value * r.ln())
            .fold(0.0, f64::max);
        (lhs, eps)
    };
    // fit on one sequence, then freeze
    let (lhs, eps) = measure(&power_sequence(1.0 / 0.3, 100_000), 0.4, 0.3);
    let constant = lhs / eps;
    assert!(constant.is_finite() && constant > 0.0);
    for (z, rho1, tail) in [
        (power_sequence(1.0 / 0.35, 100_000), 0.4, 0.35),
        (power_sequence(1.0 / 0.2, 100_000), 0.4, 0.2),
        (example41_sequence(0.4, 100_000).unwrap(), 0.4, 0.4),
    ] {
        let (lhs, eps) = measure(&z, rho1, tail);
        assert!(lhs <= 2.0 * constant * eps, "{lhs} > 2·{constant}·{eps}");
    }
}

#[test]
fn canonical_product_examples() {
    let v = canonical_product(&[c(2.0, 0.0)], c(1.0, 0.0), 0).unwrap();
    assert!((v.value - c(0.5, 0.0)).norm() < 1e-15);
    let v = canonical_product(&[c(1.0, 0.0)], c(0.5, 0.0), 1).unwrap();
    assert!((v.value.re - 0.5 * 0.5f64.exp()).abs() < 1e-15);
    let z = canonical_product(&[c(1.0, 1.0)], c(1.0, 1.0), 2).unwrap();
    assert!(z.at_zero && z.value == c(0.0, 0.0));
}

#[test]
fn canonical_product_growth_bound() {
    let mut rng = corpus_rng(41);
    let zeros: Vec<Complex64> =
        (1..=200).map(|n| Complex64::from_polar((n as f64).powf(1.6), rng.gen_range(-PI..PI))).collect();
    let seq = ZeroSequence::from_zeros(&zeros).unwrap();
    let top = seq.moduli()[seq.len() - 1];
    let p = 0;
    let ratio = |z: Complex64| {
        let v = canonical_product(&zeros, z, p).unwrap();
        v.value.norm().ln() / canonical_product_bracket(&seq, z.norm(), p)
    };
    let sample = |rng: &mut rand_chacha::ChaCha8Rng| Complex64::from_polar(rng.gen_range(1.0..top), rng.gen_range(-PI..PI));
    let fitted = (0..250).map(|_| ratio(sample(&mut rng))).fold(f64::NEG_INFINITY, f64::max).max(1.0);
    assert!(fitted < 10.0, "{fitted}");
    for _ in 0..250 {
        assert!(ratio(sample(&mut rng)) <= 1.5 * fitted);
    }
}

#[test]
fn fredholm_determinant_matches_eigenvalues() {
    let mut rng = corpus_rng(42);
    let m = CMatrix::from_fn(6, 6, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let b = DenseOperator::new(m, "random").unwrap();
    let mu = eigenvalues(&b);
    for _ in 0..20 {
        let lambda = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let det = fredholm_det(&b, lambda);
        let prod: Complex64 = mu.iter().map(|m| c(1.0, 0.0) - lambda * m).product();
        assert!((det - prod).norm() <= 1e-10 * prod.norm().max(1e-300));
    }
    let d = DenseOperator::diagonal(&[c(2.0, 0.0), c(0.5, 1.0)], "diag").unwrap();
    let l = c(0.3, -0.2);
    let want = (c(1.0, 0.0) - l * 2.0) * (c(1.0, 0.0) - l * c(0.5, 1.0));
    assert!((fredholm_det(&d, l) - want).norm() < 1e-15);
    assert_eq!(fredholm_det(&d, c(0.0, 0.0)), c(1.0, 0.0));
}

#[test]
fn determinant_resolvent_bound() {
    let mut rng = corpus_rng(43);
    let b = random_sectorial(&mut rng, 8, 0.8).unwrap();
    for _ in 0..200 {
        let lambda = c(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0));
        let (lhs, rhs) = det_resolvent_bound_check(&b, lambda).unwrap();
        assert!(lhs <= rhs, "{lhs} > {rhs}");
    }
    // normal operator: the resolvent norm cancels the nearest factor
    let mu = [c(1.0, 0.0), c(0.5, 0.5), c(0.2, -0.1)];
    let n = DenseOperator::diagonal(&mu, "normal").unwrap();
    let lambda = c(0.7, 0.4);
    let factors: Vec<f64> = mu.iter().map(|m| (c(1.0, 0.0) - lambda * m).norm()).collect();
    let nearest = factors.iter().cloned().fold(f64::INFINITY, f64::min);
    let want = factors.iter().product::<f64>() / nearest;
    let (lhs, rhs) = det_resolvent_bound_check(&n, lambda).unwrap();
    assert!((lhs - want).abs() < 1e-12 * want);
    assert!(lhs <= rhs);
}

#[test]
fn weyl_products() {
    let mut rng = corpus_rng(44);
    for _ in 0..5 {
        let m = CMatrix::from_fn(8, 8, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let b = DenseOperator::new(m, "random").unwrap();
        for _ in 0..100 {
            let lambda = c(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let (lhs, rhs) = weyl_product_check(&b, lambda);
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

#[test]
fn angular_function_examples() {
    let h = angular_h(&[(PI, 1.5)], 0.3, 0.0).unwrap();
    assert!((h - PI * 1.5 / (0.3 * PI).sin()).abs() < 1e-13);
    assert_eq!(angular_h(&[], 0.3, 0.2).unwrap(), 0.0);
    assert!(angular_h(&[(0.0, 1.0)], 2.0, 0.0).is_err());
}

#[test]
fn sequence_csv_round_trip() {
    let z = ZeroSequence::from_zeros(&[c(1.0, 2.0), c(-4.0, 0.5), c(0.3, 0.0)]).unwrap();
    let mut buf = Vec::new();
    z.write_csv(&mut buf).unwrap();
    assert_eq!(ZeroSequence::read_csv(buf.as_slice()).unwrap(), z);
    let report = convergence_exponent(&power_sequence(2.0, 2000), &exponent_grid()).unwrap();
    assert!(report.to_key_value().starts_with("rho_hat = "));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn genus_brackets_exponent(exponent in 0.3f64..4.0, count in 2000usize..20_000) {
        let z = power_sequence(exponent, count);
        let r = convergence_exponent(&z, &exponent_grid()).unwrap();
        prop_assert!(r.genus as f64 <= r.rho_hat + 0.05 && r.rho_hat <= r.genus as f64 + 1.0 + 0.05,
            "p = {}, ρ̂ = {}", r.genus, r.rho_hat);
    }

    #[test]
    fn angular_function_positive(seed in any::<u64>(), rho in 0.01f64..=0.5) {
        let mut rng = corpus_rng(seed);
        let jumps: Vec<(f64, f64)> = (0..rng.gen_range(1..8))
            .map(|_| (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.01..2.0)))
            .collect();
        for k in 0..1000 {
            let psi = -PI + 2.0 * PI * (k as f64 + 0.5) / 1000.0;
            prop_assert!(angular_h(&jumps, rho, psi).unwrap() > 0.0);
        }
    }

    #[test]
    fn counting_is_monotone(seed in any::<u64>()) {
        let mut rng = corpus_rng(seed);
        let mut m: Vec<f64> = (0..200).map(|_| rng.gen_range(0.1..100.0)).collect();
        m.sort_by(f64::total_cmp);
        let z = ZeroSequence::new(m, None).unwrap();
        let mut last = 0;
        for k in 0..=120 {
            let n = counting_function(&z, k as f64);
            prop_assert!(n >= last);
            last = n;
        }
        prop_assert_eq!(last, 200);
    }
}

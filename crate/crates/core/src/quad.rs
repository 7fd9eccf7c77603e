//! Adaptive 15-point Gauss-Kronrod quadrature over real intervals.
//!
//! Integrands may be scalar (real or complex) or complex vectors; anything
//! implementing [`QuadValue`] works. The error estimate of a panel is the
//! norm of the difference between the Kronrod and embedded Gauss sums.

// node and weight tables keep their published digits
#![allow(clippy::excessive_precision)]

use nalgebra::{DVector, Matrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values that can be accumulated by the quadrature rules.
pub trait QuadValue: Clone {
    fn zeroed(&self) -> Self;
    fn add_scaled(&mut self, w: f64, other: &Self);
    fn norm(&self) -> f64;
    fn dist(&self, other: &Self) -> f64;
}

impl QuadValue for f64 {
    fn zeroed(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += w * other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl QuadValue for Complex64 {
    fn zeroed(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        *self += other * w;
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl QuadValue for DVector<Complex64> {
    fn zeroed(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add_scaled(&mut self, w: f64, other: &Self) {
        self.axpy(Complex64::new(w, 0.0), other, Complex64::new(1.0, 0.0));
    }
    fn norm(&self) -> f64 {
        Matrix::norm(self)
    }
    fn dist(&self, other: &Self) -> f64 {
        Matrix::norm(&(self - other))
    }
}


/// Tolerances and panel budget for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-11,
            max_panels: 2000,
        }
    }
}

/// One panel of an adaptive partition.
#[derive(Debug, Clone)]
pub struct Panel<T> {
    pub a: f64,
    pub b: f64,
    pub value: T,
    pub error: f64,
}

/// Result of an adaptive integration.
#[derive(Debug, Clone)]
pub struct QuadOutcome<T> {
    pub value: T,
    pub error: f64,
    pub panels: Vec<Panel<T>>,
}

impl<T> QuadOutcome<T> {
    /// Panel end points, sorted, suitable for [`gk15_fixed`].
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        let mut bp: Vec<(f64, f64)> = self.panels.iter().map(|p| (p.a, p.b)).collect();
        bp.sort_by(|x, y| x.0.total_cmp(&y.0));
        bp
    }
}

/// Kronrod estimate and |K15 − G7| on one panel.
pub fn gk15<T, F>(f: &mut F, a: f64, b: f64) -> (T, f64)
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.zeroed();
    let mut gauss = fc.zeroed();
    kron.add_scaled(WGK[7], &fc);
    gauss.add_scaled(WG[3], &fc);
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron.add_scaled(WGK[j], &f1);
        kron.add_scaled(WGK[j], &f2);
        if j % 2 == 1 {
            gauss.add_scaled(WG[j / 2], &f1);
            gauss.add_scaled(WG[j / 2], &f2);
        }
    }
    let mut k = kron.zeroed();
    k.add_scaled(half, &kron);
    let mut g = gauss.zeroed();
    g.add_scaled(half, &gauss);
    let err = k.dist(&g);
    (k, err)
}

/// Adaptive integration of `f` over `[a, b]`, starting from `initial`
/// equal-width panels and bisecting the worst panel until the summed error
/// estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T, F>(mut f: F, a: f64, b: f64, initial: usize, settings: &QuadSettings) -> Result<QuadOutcome<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let initial = initial.max(1);
    let edges: Vec<f64> = (0..=initial).map(|i| a + (b - a) * i as f64 / initial as f64).collect();
    integrate_on(&mut f, &edges, settings)
}

/// Adaptive integration starting from the partition given by `edges`
/// (strictly monotone list of at least two points).
pub fn integrate_on<T, F>(f: &mut F, edges: &[f64], settings: &QuadSettings) -> Result<QuadOutcome<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    assert!(edges.len() >= 2, "need at least one panel");
    let mut panels: Vec<Panel<T>> = edges
        .windows(2)
        .map(|w| {
            let (value, error) = gk15(f, w[0], w[1]);
            Panel { a: w[0], b: w[1], value, error }
        })
        .collect();
    loop {
        let (total, err) = summarize(&panels);
        let target = settings.abs_tol.max(settings.rel_tol * total.norm());
        if err <= target {
            return Ok(QuadOutcome { value: total, error: err, panels });
        }
        if panels.len() >= settings.max_panels {
            return Err(Error::ToleranceFailure { error_estimate: err, panels: panels.len() });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // panel cannot be split further in floating point
            return Err(Error::ToleranceFailure { error_estimate: err, panels: panels.len() + 1 });
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        panels.push(Panel { a: p.a, b: mid, value: v1, error: e1 });
        panels.push(Panel { a: mid, b: p.b, value: v2, error: e2 });
    }
}

fn summarize<T: QuadValue>(panels: &[Panel<T>]) -> (T, f64) {
    // fixed left-to-right order keeps results reproducible
    let mut order: Vec<usize> = (0..panels.len()).collect();
    order.sort_by(|&i, &j| panels[i].a.total_cmp(&panels[j].a));
    let mut total = panels[0].value.zeroed();
    let mut err = 0.0;
    for i in order {
        total.add_scaled(1.0, &panels[i].value);
        err += panels[i].error;
    }
    (total, err)
}

/// Kronrod sum over a fixed partition, no refinement.
pub fn gk15_fixed<T, F>(f: &mut F, panels: &[(f64, f64)]) -> T
where
    T: QuadValue,
    F: FnMut(f64) -> T,
{
    let mut total: Option<T> = None;
    for &(a, b) in panels {
        let (v, _) = gk15(f, a, b);
        match total.as_mut() {
            Some(t) => t.add_scaled(1.0, &v),
            None => total = Some(v),
        }
    }
    total.expect("at least one panel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact_on_one_panel() {
        // K15 integrates degree-22 polynomials exactly
        let (v, _) = gk15(&mut |x: f64| x.powi(10) - 3.0 * x.powi(3), 0.0, 2.0);
        let exact = 2f64.powi(11) / 11.0 - 3.0 * 16.0 / 4.0;
        assert!((v - exact).abs() < 1e-12 * exact.abs());
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let s = QuadSettings { abs_tol: 1e-12, rel_tol: 1e-12, max_panels: 500 };
        let out = integrate(|x: f64| 1.0 / (1e-4 + (x - 0.3).powi(2)), 0.0, 1.0, 1, &s).unwrap();
        let exact = ((0.7f64 / 1e-2).atan() + (0.3f64 / 1e-2).atan()) / 1e-2;
        assert!((out.value - exact).abs() < 1e-9 * exact);
        assert!(out.panels.len() > 1);
    }

    #[test]
    fn complex_and_vector_values() {
        let s = QuadSettings::default();
        let out = integrate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, std::f64::consts::PI, 1, &s).unwrap();
        assert!((out.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
        let outv = integrate(
            |x: f64| DVector::from_vec(vec![Complex64::new(x, 0.0), Complex64::new(0.0, 2.0 * x)]),
            0.0,
            1.0,
            1,
            &s,
        )
        .unwrap();
        assert!((outv.value[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn panel_budget_exhaustion_reports_failure() {
        let s = QuadSettings { abs_tol: 1e-15, rel_tol: 0.0, max_panels: 3 };
        let err = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1, &s).unwrap_err();
        assert!(matches!(err, Error::ToleranceFailure { .. }));
    }

    #[test]
    fn fixed_partition_reuses_adaptive_panels() {
        let s = QuadSettings::default();
        let out = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1, &s).unwrap();
        let again: f64 = gk15_fixed(&mut |x: f64| x.sqrt(), &out.breakpoints());
        assert!((again - out.value).abs() < 1e-15);
    }
}

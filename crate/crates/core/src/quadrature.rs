//! Adaptive Gauss–Kronrod quadrature in one and two dimensions, plus
//! Gauss–Legendre rules for fixed-node integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("quadrature did not converge: estimate {value:e}, error {error:e} > tolerance {tol:e} after {intervals} subintervals")]
    NonConvergence {
        value: f64,
        error: f64,
        tol: f64,
        intervals: usize,
    },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
}

/// Integral estimate with its absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

// 21-point Kronrod abscissae (positive half, descending) and weights; the odd
// entries are the 10-point Gauss nodes, tabulated past f64 precision.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_314_243,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(QuadratureError::NonFinite(center));
    }
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let (x1, x2) = (center - dx, center + dx);
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadratureError::NonFinite(x1));
        }
        if !f2.is_finite() {
            return Err(QuadratureError::NonFinite(x2));
        }
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Tolerances and work limit for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            ..Self::default()
        }
    }
}

/// Globally adaptive 21-point Gauss–Kronrod integration over `[a, b]`.
///
/// The interval with the largest error estimate is bisected until the summed
/// error is below `max(tol.abs, tol.rel * |I|)`. The `|K21 - G10|` error
/// estimate is used without the QUADPACK rescaling, so it is pessimistic for
/// smooth integrands.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate, QuadratureError> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error) = gk21(&mut f, a, b)?;
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let (mut total, mut total_err) = (value, error);
    loop {
        if total_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        if heap.len() >= tol.max_intervals {
            return Err(QuadratureError::NonConvergence {
                value: total,
                error: total_err,
                tol: tol.abs.max(tol.rel * total.abs()),
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk21(&mut f, worst.a, mid)?;
        let (v2, e2) = gk21(&mut f, mid, worst.b)?;
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum from the segments to shed the cancellation accumulated above.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Nested adaptive integration of `f(x, y)` over `[xa, xb] x [ya, yb]`.
///
/// The inner integrals are solved to a tenth of the outer absolute tolerance
/// (scaled by the outer length), so the reported error bound is the outer
/// estimate plus that budget.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (xa, xb): (f64, f64),
    (ya, yb): (f64, f64),
    tol: Tolerance,
) -> Result<Estimate, QuadratureError> {
    let width = (xb - xa).abs().max(f64::MIN_POSITIVE);
    let inner_tol = Tolerance {
        abs: 0.1 * tol.abs / width,
        rel: 0.1 * tol.rel,
        max_intervals: tol.max_intervals,
    };
    let mut failure: Option<QuadratureError> = None;
    let mut inner_evals = 0usize;
    let mut inner_err = 0.0f64;
    let outer = integrate(
        |x| {
            if failure.is_some() {
                return 0.0;
            }
            match integrate(|y| f(x, y), ya, yb, inner_tol) {
                Ok(est) => {
                    inner_evals += est.evaluations;
                    inner_err = inner_err.max(est.error);
                    est.value
                }
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        xa,
        xb,
        Tolerance {
            abs: 0.9 * tol.abs,
            ..tol
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let outer = outer?;
    Ok(Estimate {
        value: outer.value,
        error: outer.error + inner_err * width,
        evaluations: inner_evals,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.reverse();
    rule
}

/// Gauss–Legendre rule mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    gauss_legendre(n).into_iter().map(|(x, w)| (c + h * x, h * w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let est = integrate(|x| (-x * x).exp(), -10.0, 10.0, Tolerance::default()).unwrap();
        assert!((est.value - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_integral_refines() {
        let est = integrate(|x| (50.0 * x).cos(), 0.0, 1.0, Tolerance::absolute(1e-12)).unwrap();
        assert!((est.value - (50.0f64).sin() / 50.0).abs() < 1e-12);
        assert!(est.evaluations > 21);
    }

    #[test]
    fn reports_non_convergence() {
        let tol = Tolerance {
            abs: 1e-14,
            rel: 0.0,
            max_intervals: 3,
        };
        let res = integrate(|x| (1.0 / x.max(1e-300)).sin(), 1e-6, 1.0, tol);
        assert!(matches!(res, Err(QuadratureError::NonConvergence { .. })));
    }

    #[test]
    fn two_dimensional_product() {
        let est = integrate_2d(|x, y| x * x * y, (0.0, 1.0), (0.0, 2.0), Tolerance::absolute(1e-12)).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_rule_exactness() {
        for n in [1usize, 2, 5, 16, 64] {
            let rule = gauss_legendre(n);
            let wsum: f64 = rule.iter().map(|p| p.1).sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n = {n}");
            // exact for degree 2n-1
            let deg = 2 * n - 2;
            let m: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((m - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12, "n = {n}");
        }
    }
}

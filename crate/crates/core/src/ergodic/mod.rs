//! Time means, space means, and ergodicity / decomposability verdicts for
//! discrete-time dynamical systems.
//!
//! Observables are required to be bounded; every comparison of means uses an
//! absolute tolerance.

mod fixtures;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ensemble::member_rng;
use crate::quadrature::{integrate, integrate_2d, QuadratureError, Tolerance};

pub use fixtures::{BohmPair, Identity, Rotation, TwoPiece, GOLDEN};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ErgodicError {
    #[error("orbit left the domain at step {step}")]
    DivergentOrbit { step: usize },
    #[error("the map failed at step {step}: {reason}")]
    MapFailure { step: usize, reason: String },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// `(M, mu, phi)`: a state space given as a union of boxes, an invariant
/// probability measure and a one-step map.
pub trait DynamicalSystem: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// One application of the map.
    fn step(&self, x: &[f64]) -> Result<Vec<f64>, String>;
    fn contains(&self, x: &[f64]) -> bool;
    /// Density of `mu` w.r.t. Lebesgue measure on the domain boxes; `None`
    /// when `mu` is singular (then only Monte Carlo space means are available).
    fn density(&self, x: &[f64]) -> Option<f64>;
    /// One draw from `mu`.
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    /// Disjoint boxes whose union is the domain.
    fn domain(&self) -> Vec<Vec<(f64, f64)>>;
}

/// A bounded observable.
type BoxedFn<'a, T> = Box<dyn Fn(&[f64]) -> T + Sync + Send + 'a>;

pub struct Observable<'a> {
    pub name: String,
    pub f: BoxedFn<'a, f64>,
}

impl<'a> Observable<'a> {
    pub fn new<F: Fn(&[f64]) -> f64 + Sync + Send + 'a>(name: &str, f: F) -> Self {
        Self {
            name: name.to_string(),
            f: Box::new(f),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// A two-set partition given by a predicate.
pub struct Indicator<'a> {
    pub name: String,
    pub f: BoxedFn<'a, bool>,
}

impl<'a> Indicator<'a> {
    pub fn new<F: Fn(&[f64]) -> bool + Sync + Send + 'a>(name: &str, f: F) -> Self {
        Self {
            name: name.to_string(),
            f: Box::new(f),
        }
    }

    pub fn eval(&self, x: &[f64]) -> bool {
        (self.f)(x)
    }

    pub fn as_observable(&self) -> Observable<'_> {
        Observable::new(&self.name, move |x| if self.eval(x) { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeMean {
    /// `(1/N) sum_{n<N} f(phi^n x0)`, accumulated as a running mean.
    pub value: f64,
    pub n: usize,
    /// `max |f*_k - f*_N|` over `k in [N/2, N]`.
    pub tail_variation: f64,
}

/// Cesàro mean of `f` along the orbit of `x0`.
pub fn time_mean<S: DynamicalSystem + ?Sized>(sys: &S, f: &Observable, x0: &[f64], n: usize) -> Result<TimeMean, ErgodicError> {
    if n == 0 {
        return Err(ErgodicError::InvalidRequest("N must be at least 1".into()));
    }
    if !sys.contains(x0) {
        return Err(ErgodicError::DivergentOrbit { step: 0 });
    }
    let mut x = x0.to_vec();
    // running mean, exact for constant sequences
    let mut mean = 0.0;
    let mut partial = Vec::with_capacity(n - n / 2 + 1);
    for k in 0..n {
        mean += (f.eval(&x) - mean) / (k + 1) as f64;
        if k + 1 >= n / 2 {
            partial.push(mean);
        }
        if k + 1 < n {
            x = sys
                .step(&x)
                .map_err(|reason| ErgodicError::MapFailure { step: k + 1, reason })?;
            if !sys.contains(&x) {
                return Err(ErgodicError::DivergentOrbit { step: k + 1 });
            }
        }
    }
    let value = mean;
    let tail_variation = partial.iter().map(|p| (p - value).abs()).fold(0.0, f64::max);
    Ok(TimeMean {
        value,
        n,
        tail_variation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum SpaceMethod {
    /// Adaptive quadrature of `f mu` over the domain boxes (dimension <= 2).
    Quadrature { tol: f64 },
    MonteCarlo { n: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceMean {
    pub value: f64,
    /// Quadrature error bound, or the Monte Carlo standard error.
    pub error: f64,
}

/// `int f dmu`.
pub fn space_mean<S: DynamicalSystem + ?Sized>(sys: &S, f: &Observable, method: SpaceMethod) -> Result<SpaceMean, ErgodicError> {
    match method {
        SpaceMethod::Quadrature { tol } => {
            let tol = Tolerance::absolute(tol);
            let no_density = || ErgodicError::Unsupported(format!("{} has no invariant density", sys.name()));
            let (mut value, mut error) = (0.0, 0.0);
            for b in sys.domain() {
                let est = match b.len() {
                    1 => {
                        let mut missing = false;
                        let est = integrate(
                            |x| match sys.density(&[x]) {
                                Some(mu) => f.eval(&[x]) * mu,
                                None => {
                                    missing = true;
                                    0.0
                                }
                            },
                            b[0].0,
                            b[0].1,
                            tol,
                        )?;
                        if missing {
                            return Err(no_density());
                        }
                        est
                    }
                    2 => {
                        if sys.density(&[b[0].0, b[1].0]).is_none() {
                            return Err(no_density());
                        }
                        integrate_2d(
                            |x, y| f.eval(&[x, y]) * sys.density(&[x, y]).unwrap_or(0.0),
                            b[0],
                            b[1],
                            tol,
                        )?
                    }
                    d => {
                        return Err(ErgodicError::Unsupported(format!(
                            "quadrature space means support dimension <= 2, got {d}"
                        )))
                    }
                };
                value += est.value;
                error += est.error;
            }
            Ok(SpaceMean { value, error })
        }
        SpaceMethod::MonteCarlo { n, seed } => {
            if n < 2 {
                return Err(ErgodicError::InvalidRequest("Monte Carlo space mean needs n >= 2".into()));
            }
            let values: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| f.eval(&sys.sample(&mut member_rng(seed, i))))
                .collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Ok(SpaceMean {
                value: mean,
                error: (var / n as f64).sqrt(),
            })
        }
    }
}

/// Trial reading of the time mean: `n_trials` independent draws from `mu`,
/// each advanced `steps` times, averaged at the end state.
pub fn trial_time_mean<S: DynamicalSystem + ?Sized>(
    sys: &S,
    f: &Observable,
    n_trials: usize,
    steps: usize,
    seed: u64,
) -> Result<TimeMean, ErgodicError> {
    if n_trials == 0 {
        return Err(ErgodicError::InvalidRequest("need at least one trial".into()));
    }
    let values: Vec<f64> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut x = sys.sample(&mut member_rng(seed, i));
            for k in 0..steps {
                x = sys.step(&x).map_err(|reason| ErgodicError::MapFailure { step: k + 1, reason })?;
            }
            Ok(f.eval(&x))
        })
        .collect::<Result<_, ErgodicError>>()?;
    let mut sum = 0.0;
    let mut partial = Vec::new();
    for (k, v) in values.iter().enumerate() {
        sum += v;
        if k + 1 >= n_trials / 2 {
            partial.push(sum / (k + 1) as f64);
        }
    }
    let value = sum / n_trials as f64;
    Ok(TimeMean {
        value,
        n: n_trials,
        tail_variation: partial.iter().map(|p| (p - value).abs()).fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionTest {
    pub indicator: String,
    /// No sampled orbit changed indicator value.
    pub invariant: bool,
    /// Fraction of sampled orbits that changed value.
    pub max_violation: f64,
    pub violations: usize,
    /// Orbits started in `{indicator = true}` and `{indicator = false}`.
    pub samples_per_piece: [usize; 2],
    /// Empirical `mu` of `{indicator = true}` from the draws.
    pub measure_true: f64,
    pub n_steps: usize,
}

impl DecompositionTest {
    /// Invariant, and both pieces were populated by `mu` draws.
    pub fn verified(&self) -> bool {
        self.invariant && self.samples_per_piece.iter().all(|&c| c > 0) && self.measure_true > 0.0 && self.measure_true < 1.0
    }
}

/// Draws from `mu` until `n_samples` states lie in each piece of the
/// indicator (or `50 n_samples` draws), iterates each `n_steps` times and
/// reports orbits whose indicator value changed.
pub fn decomposability_test<S: DynamicalSystem + ?Sized>(
    sys: &S,
    indicator: &Indicator,
    n_samples: usize,
    n_steps: usize,
    seed: u64,
) -> Result<DecompositionTest, ErgodicError> {
    let max_draws = 50 * n_samples.max(1);
    let mut starts: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    let mut draws = 0usize;
    let mut in_true = 0usize;
    let mut rng = member_rng(seed, usize::MAX >> 1);
    while draws < max_draws && (starts[0].len() < n_samples || starts[1].len() < n_samples) {
        let x = sys.sample(&mut rng);
        draws += 1;
        let piece = indicator.eval(&x);
        in_true += piece as usize;
        let slot = &mut starts[if piece { 0 } else { 1 }];
        if slot.len() < n_samples {
            slot.push(x);
        }
    }
    let all: Vec<(bool, Vec<f64>)> = starts[0]
        .iter()
        .map(|x| (true, x.clone()))
        .chain(starts[1].iter().map(|x| (false, x.clone())))
        .collect();
    let changed: Vec<bool> = all
        .par_iter()
        .map(|(side, x0)| {
            let mut x = x0.clone();
            for k in 0..n_steps {
                x = sys.step(&x).map_err(|reason| ErgodicError::MapFailure { step: k + 1, reason })?;
                if indicator.eval(&x) != *side {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect::<Result<_, ErgodicError>>()?;
    let violations = changed.iter().filter(|c| **c).count();
    Ok(DecompositionTest {
        indicator: indicator.name.clone(),
        invariant: violations == 0,
        max_violation: if all.is_empty() { 0.0 } else { violations as f64 / all.len() as f64 },
        violations,
        samples_per_piece: [starts[0].len(), starts[1].len()],
        measure_true: in_true as f64 / draws.max(1) as f64,
        n_steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgodicVerdict {
    /// Every time mean within `tol` of its space mean.
    Ergodic,
    /// Start-dependent time means and a verified invariant indicator.
    Decomposable,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeMeanEntry {
    pub function: String,
    pub start: Vec<f64>,
    pub time_mean: TimeMean,
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionSummary {
    pub function: String,
    pub space_mean: SpaceMean,
    /// `max - min` of the time means over starts.
    pub spread: f64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicReport {
    pub system: String,
    pub n_steps: usize,
    pub tol: f64,
    pub time_means: Vec<TimeMeanEntry>,
    pub functions: Vec<FunctionSummary>,
    pub verdict: ErgodicVerdict,
    /// Present, and verified, whenever the verdict is decomposable.
    pub witness: Option<DecompositionTest>,
}

pub struct ErgodicOptions {
    pub n_steps: usize,
    pub tol: f64,
    pub space_method: SpaceMethod,
    /// Orbits per piece and steps for the witness test.
    pub witness_samples: usize,
    pub witness_steps: usize,
    pub seed: u64,
}

/// Time means from every start for every observable, compared with the space
/// means. A decomposable verdict is only given when one of `candidates`
/// passes [`decomposability_test`].
pub fn ergodicity_test<S: DynamicalSystem + ?Sized>(
    sys: &S,
    functions: &[Observable],
    starts: &[Vec<f64>],
    candidates: &[Indicator],
    opts: &ErgodicOptions,
) -> Result<ErgodicReport, ErgodicError> {
    if starts.len() < 2 || functions.is_empty() {
        return Err(ErgodicError::InvalidRequest("need at least two starts and one function".into()));
    }
    let mut time_means = Vec::new();
    let mut summaries = Vec::new();
    let mut max_dev: f64 = 0.0;
    let mut split = false;
    for f in functions {
        let sm = space_mean(sys, f, opts.space_method)?;
        let means: Vec<TimeMean> = starts
            .par_iter()
            .map(|x0| time_mean(sys, f, x0, opts.n_steps))
            .collect::<Result<_, _>>()?;
        let (lo, hi) = means
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m.value), hi.max(m.value)));
        let dev = means.iter().map(|m| (m.value - sm.value).abs()).fold(0.0, f64::max);
        max_dev = max_dev.max(dev);
        split |= hi - lo > 10.0 * opts.tol;
        summaries.push(FunctionSummary {
            function: f.name.clone(),
            space_mean: sm,
            spread: hi - lo,
            max_deviation: dev,
        });
        for (x0, m) in starts.iter().zip(means) {
            time_means.push(TimeMeanEntry {
                function: f.name.clone(),
                start: x0.clone(),
                time_mean: m,
            });
        }
    }
    let mut witness = None;
    let verdict = if max_dev < opts.tol {
        ErgodicVerdict::Ergodic
    } else if split {
        for c in candidates {
            let test = decomposability_test(sys, c, opts.witness_samples, opts.witness_steps, opts.seed)?;
            let ok = test.verified();
            witness = Some(test);
            if ok {
                break;
            }
        }
        match &witness {
            Some(w) if w.verified() => ErgodicVerdict::Decomposable,
            _ => ErgodicVerdict::Inconclusive,
        }
    } else {
        ErgodicVerdict::Inconclusive
    };
    Ok(ErgodicReport {
        system: sys.name().to_string(),
        n_steps: opts.n_steps,
        tol: opts.tol,
        time_means,
        functions: summaries,
        verdict,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cosine() -> Observable<'static> {
        Observable::new("cos", |x| (2.0 * PI * x[0]).cos())
    }

    #[test]
    fn identity_time_mean_is_exact() {
        let f = cosine();
        let tm = time_mean(&Identity, &f, &[0.3], 1000).unwrap();
        assert_eq!(tm.value, f.eval(&[0.3]));
    }

    #[test]
    fn two_piece_time_means() {
        let sys = TwoPiece::default();
        let f = Observable::new("in_first", |x| (x[0] <= 1.0) as u8 as f64);
        assert_eq!(time_mean(&sys, &f, &[0.5], 10_000).unwrap().value, 1.0);
        assert_eq!(time_mean(&sys, &f, &[2.5], 10_000).unwrap().value, 0.0);
        let sm = space_mean(&sys, &f, SpaceMethod::Quadrature { tol: 1e-10 }).unwrap();
        assert!((sm.value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn rotation_means() {
        let sys = Rotation::golden();
        let one = Observable::new("one", |_| 1.0);
        assert!((space_mean(&sys, &one, SpaceMethod::Quadrature { tol: 1e-10 }).unwrap().value - 1.0).abs() < 1e-8);
        let sm = space_mean(&sys, &cosine(), SpaceMethod::Quadrature { tol: 1e-12 }).unwrap();
        assert!(sm.value.abs() < 1e-10);
        let mc = space_mean(&sys, &cosine(), SpaceMethod::MonteCarlo { n: 10_000, seed: 1 }).unwrap();
        assert!(mc.value.abs() < 4.0 * mc.error);
    }

    #[test]
    fn rotation_mixes_halves() {
        let sys = Rotation::golden();
        let upper = Indicator::new("upper_half", |x| x[0] >= 0.5);
        let t = decomposability_test(&sys, &upper, 50, 10, 4).unwrap();
        assert!(!t.invariant && t.violations > 0);
    }

    #[test]
    fn decomposable_verdict_carries_witness() {
        let sys = TwoPiece::default();
        let f = Observable::new("in_first", |x| (x[0] <= 1.0) as u8 as f64);
        let piece = Indicator::new("first_piece", |x| x[0] <= 1.0);
        let opts = ErgodicOptions {
            n_steps: 10_000,
            tol: 1e-3,
            space_method: SpaceMethod::Quadrature { tol: 1e-10 },
            witness_samples: 100,
            witness_steps: 1000,
            seed: 9,
        };
        let r = ergodicity_test(&sys, &[f], &[vec![0.5], vec![2.5]], &[piece], &opts).unwrap();
        assert_eq!(r.verdict, ErgodicVerdict::Decomposable);
        assert!(r.witness.as_ref().unwrap().verified());
        // without a candidate the same data is inconclusive
        let f = Observable::new("in_first", |x| (x[0] <= 1.0) as u8 as f64);
        let r = ergodicity_test(&sys, &[f], &[vec![0.5], vec![2.5]], &[], &opts).unwrap();
        assert_eq!(r.verdict, ErgodicVerdict::Inconclusive);
    }

    #[test]
    fn divergent_orbit_is_reported() {
        let f = cosine();
        assert!(matches!(
            time_mean(&Rotation::golden(), &f, &[3.0], 10),
            Err(ErgodicError::DivergentOrbit { step: 0 })
        ));
    }
}

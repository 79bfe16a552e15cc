//! Joint detection probability at the plane `y = L`: quadrature of `R^2`
//! (space mean) against counting over evolved trials.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::dynamics::IntegratorOptions;
use crate::ensemble::{evolve_ensemble, sample_initial, EnsembleError, EnsembleSpec, TrajectorySummary};
use crate::quadrature::{gauss_legendre_on, integrate_2d, QuadratureError, Tolerance};
use crate::wavefunction::TwoParticleWaveFunction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error("invalid detector geometry: {0}")]
    InvalidGeometry(String),
    #[error("no usable trials: {total} evolved, {lost} lost")]
    EmptyEnsemble { total: usize, lost: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// Closed interval on the detector plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let (lo, hi) = (self.lo.max(other.lo), self.hi.min(other.hi));
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn mirrored(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

/// How a trial with arrival positions `(x1, x2)` counts as a joint hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Counting {
    /// The unordered pair of arrivals hits the unordered detector pair.
    #[default]
    Indistinguishable,
    /// `x1 in D1` and `x2 in D2` only.
    Ordered,
}

/// Two detector faces on the plane `y = L` (`L` from the model parameters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorGeometry {
    #[serde(rename = "D1")]
    pub d1: Interval,
    #[serde(rename = "D2")]
    pub d2: Interval,
    #[serde(default)]
    pub counting: Counting,
}

impl DetectorGeometry {
    pub fn new(d1: Interval, d2: Interval) -> Self {
        Self {
            d1,
            d2,
            counting: Counting::Indistinguishable,
        }
    }

    pub fn validate(&self) -> Result<(), DetectionError> {
        for (name, iv) in [("D1", self.d1), ("D2", self.d2)] {
            if !(iv.lo.is_finite() && iv.hi.is_finite() && iv.lo < iv.hi) {
                return Err(DetectionError::InvalidGeometry(format!(
                    "{name} = [{}, {}] needs finite lo < hi",
                    iv.lo, iv.hi
                )));
            }
        }
        Ok(())
    }

    /// Both faces sit on one side of the band `[-w/2, w/2]` with at least
    /// `guard` clearance.
    pub fn same_side(&self, band_width: f64, guard: f64) -> bool {
        let edge = 0.5 * band_width + guard;
        (self.d1.lo > edge && self.d2.lo > edge) || (self.d1.hi < -edge && self.d2.hi < -edge)
    }

    /// The labels swapped.
    pub fn swapped(&self) -> Self {
        Self {
            d1: self.d2,
            d2: self.d1,
            ..*self
        }
    }

    pub fn is_hit(&self, x1: f64, x2: f64) -> bool {
        let ordered = self.d1.contains(x1) && self.d2.contains(x2);
        match self.counting {
            Counting::Ordered => ordered,
            Counting::Indistinguishable => ordered || (self.d2.contains(x1) && self.d1.contains(x2)),
        }
    }

    /// `D1 = D2` = an interval covering `n_sd` widths of the density at `t`.
    pub fn full_window(model: &TwoParticleWaveFunction, t: f64, n_sd: f64) -> Self {
        let ((a, b), (c, d)) = model.transverse_window(t, n_sd).cartesian();
        let w = Interval::new(a.min(c), b.max(d));
        Self::new(w, w)
    }
}

/// Quadrature estimate of a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceMean {
    pub p: f64,
    pub error: f64,
}

/// Absolute tolerance used for the space-mean quadratures.
pub const SPACE_MEAN_TOL: f64 = 1e-10;

fn box_probability(model: &TwoParticleWaveFunction, a: Interval, b: Interval, t: f64) -> Result<SpaceMean, DetectionError> {
    let tol = Tolerance {
        abs: SPACE_MEAN_TOL,
        rel: 0.0,
        max_intervals: 4000,
    };
    let est = integrate_2d(|x1, x2| model.transverse_density(x1, x2, t), (a.lo, a.hi), (b.lo, b.hi), tol)?;
    Ok(SpaceMean {
        p: est.value,
        error: est.error,
    })
}

/// `int_{D1} int_{D2} |Psi_x(x1, x2, t_det)|^2`, symmetrized under
/// indistinguishable counting as `P(D1 x D2) + P(D2 x D1) - P((D1 and D2)^2)`.
pub fn space_mean_joint_prob(model: &TwoParticleWaveFunction, geom: &DetectorGeometry, t_det: f64) -> Result<SpaceMean, DetectionError> {
    geom.validate()?;
    let forward = box_probability(model, geom.d1, geom.d2, t_det)?;
    if geom.counting == Counting::Ordered {
        return Ok(forward);
    }
    let backward = box_probability(model, geom.d2, geom.d1, t_det)?;
    let overlap = match geom.d1.intersection(&geom.d2) {
        Some(iv) => box_probability(model, iv, iv, t_det)?,
        None => SpaceMean { p: 0.0, error: 0.0 },
    };
    Ok(SpaceMean {
        p: forward.p + backward.p - overlap.p,
        error: forward.error + backward.error + overlap.error,
    })
}

/// Gauss–Legendre nodes for the arrival-time mixture.
pub const ARRIVAL_NODES: usize = 24;

/// Space mean at the joint arrival time of the rigid longitudinal packets.
///
/// Both `y` coordinates start i.i.d. normal about `v t0` with width
/// `sigma_long` and move at exactly `v`, so the joint arrival is
/// `t_J = L/v - sigma_long * m / v` with `m` the minimum of two standard
/// normals (density `2 phi(m) (1 - Phi(m))`). The transverse state is
/// independent of `y`, so the detected law is the `t_J` mixture of
/// `|Psi_x(t_J)|^2`.
pub fn arrival_joint_prob(model: &TwoParticleWaveFunction, geom: &DetectorGeometry) -> Result<SpaceMean, DetectionError> {
    let params = model.params();
    let (v, sigma) = (params.v(), model.longitudinal().sigma);
    let (mut p, mut error) = (0.0, 0.0);
    let mut mass = 0.0;
    for (m, w) in gauss_legendre_on(ARRIVAL_NODES, -7.5, 4.5) {
        let phi = (-0.5 * m * m).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let tail = 0.5 * erfc(m / std::f64::consts::SQRT_2);
        let weight = w * 2.0 * phi * tail;
        let t = (params.length - sigma * m) / v;
        let est = space_mean_joint_prob(model, geom, t)?;
        p += weight * est.p;
        error += weight * est.error;
        mass += weight;
    }
    // mixture weights are normalized; the truncated tails are below 1e-12
    Ok(SpaceMean {
        p: p / mass,
        error: error / mass + (1.0 - mass).abs(),
    })
}

/// Monte Carlo estimate from counting trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountEstimate {
    pub p: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)` of the sample.
    pub standard_error: f64,
    pub hits: usize,
    pub trials: usize,
    pub lost: usize,
}

/// Lost members and members that never reached the plane are excluded from
/// numerator and denominator and counted in `lost`.
pub fn trajectory_joint_prob(trajectories: &[TrajectorySummary], geom: &DetectorGeometry) -> Result<CountEstimate, DetectionError> {
    geom.validate()?;
    let usable: Vec<_> = trajectories.iter().filter(|s| !s.lost() && s.reached_detector).collect();
    let lost = trajectories.len() - usable.len();
    if usable.is_empty() {
        return Err(DetectionError::EmptyEnsemble {
            total: trajectories.len(),
            lost,
        });
    }
    let hits = usable.iter().filter(|s| geom.is_hit(s.end.x1, s.end.x2)).count();
    let n = usable.len() as f64;
    let p = hits as f64 / n;
    Ok(CountEstimate {
        p,
        standard_error: (p * (1.0 - p) / n).sqrt(),
        hits,
        trials: usable.len(),
        lost,
    })
}

/// Writes `trial,x1_det,x2_det,hit`; lost trials have empty positions.
pub fn write_arrivals_csv<W: std::io::Write>(mut out: W, trajectories: &[TrajectorySummary], geom: &DetectorGeometry) -> std::io::Result<()> {
    writeln!(out, "trial,x1_det,x2_det,hit")?;
    for s in trajectories {
        if s.lost() || !s.reached_detector {
            writeln!(out, "{},,,0", s.member)?;
        } else {
            let hit = geom.is_hit(s.end.x1, s.end.x2) as u8;
            writeln!(out, "{},{:e},{:e},{hit}", s.member, s.end.x1, s.end.x2)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerdictThresholds {
    /// `p_time` must differ from `p_space` by more than this many standard errors.
    pub incompatible_sigma: f64,
    /// `p_gibbs` must agree with `p_space` within this many standard errors.
    pub agreement_sigma: f64,
    /// Largest tolerated fraction of lost trials.
    pub max_lost_fraction: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            incompatible_sigma: 5.0,
            agreement_sigma: 3.0,
            max_lost_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Compatible,
    Incompatible,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub geometry: DetectorGeometry,
    #[serde(rename = "L")]
    pub length: f64,
    pub p_space: SpaceMean,
    pub p_gibbs: CountEstimate,
    pub p_time: CountEstimate,
    pub lost: usize,
    pub lost_fraction: f64,
    /// `|p_gibbs - p_space|` in null-hypothesis standard errors.
    pub z_gibbs: f64,
    /// `|p_time - p_space|` in null-hypothesis standard errors.
    pub z_time: f64,
    pub spec_gibbs: EnsembleSpec,
    pub spec_time: EnsembleSpec,
    pub thresholds: VerdictThresholds,
    /// Both faces clear the constraint band by at least `d`.
    pub same_side: bool,
    pub verdict: Verdict,
}

/// Distance of an estimate from the quadrature value in standard errors of a
/// binomial with the quadrature probability (the null hypothesis), combined
/// with the quadrature error.
pub fn z_score(est: &CountEstimate, space: &SpaceMean) -> f64 {
    let null_var = space.p * (1.0 - space.p) / est.trials as f64;
    let se = (null_var + space.error * space.error).sqrt();
    let diff = (est.p - space.p).abs();
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        diff / se
    }
}

/// Verdict from the three estimates.
pub fn verdict(p_space: &SpaceMean, p_gibbs: &CountEstimate, p_time: &CountEstimate, th: &VerdictThresholds) -> (Verdict, f64, f64) {
    let z_gibbs = z_score(p_gibbs, p_space);
    let z_time = z_score(p_time, p_space);
    let total = p_gibbs.trials + p_gibbs.lost + p_time.trials + p_time.lost;
    let lost_fraction = (p_gibbs.lost + p_time.lost) as f64 / total as f64;
    let v = if lost_fraction > th.max_lost_fraction || z_gibbs > th.agreement_sigma {
        Verdict::Inconclusive
    } else if z_time > th.incompatible_sigma {
        Verdict::Incompatible
    } else {
        Verdict::Compatible
    };
    (v, z_gibbs, z_time)
}

/// Arrival horizon: ensembles are integrated until the detector event or
/// this many nominal flight times.
pub const FLIGHT_HORIZON: f64 = 10.0;

/// Samples and evolves `spec` until every member reaches the plane `y = L`.
pub fn run_to_detector(
    model: &TwoParticleWaveFunction,
    spec: &EnsembleSpec,
    opts: &IntegratorOptions,
) -> Result<Vec<TrajectorySummary>, DetectionError> {
    let initial = sample_initial(model, spec)?;
    let opts = IntegratorOptions {
        stop_at_detector: true,
        ..*opts
    };
    let t_final = spec.t0 + FLIGHT_HORIZON * model.params().flight_time();
    Ok(evolve_ensemble(model, &initial, t_final, &opts)?.1)
}

/// Assembles a report from already evolved ensembles.
pub fn report_from_parts(
    model: &TwoParticleWaveFunction,
    geom: &DetectorGeometry,
    gibbs: (&EnsembleSpec, &[TrajectorySummary]),
    time: (&EnsembleSpec, &[TrajectorySummary]),
    thresholds: &VerdictThresholds,
) -> Result<DetectionReport, DetectionError> {
    let p_space = arrival_joint_prob(model, geom)?;
    let p_gibbs = trajectory_joint_prob(gibbs.1, geom)?;
    let p_time = trajectory_joint_prob(time.1, geom)?;
    let (v, z_gibbs, z_time) = verdict(&p_space, &p_gibbs, &p_time, thresholds);
    let lost = p_gibbs.lost + p_time.lost;
    let total = gibbs.1.len() + time.1.len();
    Ok(DetectionReport {
        geometry: *geom,
        length: model.params().length,
        p_space,
        p_gibbs,
        p_time,
        lost,
        lost_fraction: lost as f64 / total as f64,
        z_gibbs,
        z_time,
        spec_gibbs: gibbs.0.clone(),
        spec_time: time.0.clone(),
        thresholds: *thresholds,
        same_side: geom.same_side(time.0.width(model), model.params().d),
        verdict: v,
    })
}

/// Runs all three estimators end to end.
pub fn incompatibility_report(
    model: &TwoParticleWaveFunction,
    geom: &DetectorGeometry,
    spec_gibbs: &EnsembleSpec,
    spec_time: &EnsembleSpec,
    opts: &IntegratorOptions,
    thresholds: &VerdictThresholds,
) -> Result<DetectionReport, DetectionError> {
    geom.validate()?;
    let gibbs = run_to_detector(model, spec_gibbs, opts)?;
    let time = if spec_time == spec_gibbs {
        gibbs.clone()
    } else {
        run_to_detector(model, spec_time, opts)?
    };
    report_from_parts(model, geom, (spec_gibbs, &gibbs), (spec_time, &time), thresholds)
}

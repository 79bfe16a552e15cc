//! Initial-condition ensembles: quantum equilibrium (Gibbs) and one
//! constrained pair per trial, plus their evolution and the equivariance test.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{integrate_trajectory, DynamicsError, IntegratorOptions, Trajectory};
use crate::quadrature::gauss_legendre_on;
use crate::stats::{chi_square_pooled, ChiSquare};
use crate::wavefunction::{Configuration, TransverseWindow, TwoParticleWaveFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid ensemble spec: {0}")]
    InvalidSpec(String),
    #[error("rejection sampler stalled for member {member}: acceptance below 1e-6 ({attempts} proposals)")]
    RejectionStall { member: usize, attempts: u64 },
    #[error("rejection envelope {envelope:e} exceeded by density {density:e} at ({x1}, {x2})")]
    EnvelopeViolation { envelope: f64, density: f64, x1: f64, x2: f64 },
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    #[default]
    Gibbs,
    ConstrainedPairs,
}

/// Distribution of the per-trial constraint value `delta_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeltaLaw {
    /// Uniform on `[-w/2, w/2]`.
    #[default]
    Uniform,
    /// Every trial at the same value.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub mode: SamplingMode,
    pub n: usize,
    pub seed: u64,
    /// Width `w` of the band for `x1 + x2`; defaults to the slit width `d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_width: Option<f64>,
    #[serde(default)]
    pub t0: f64,
    #[serde(default)]
    pub delta_law: DeltaLaw,
}

impl EnsembleSpec {
    pub fn gibbs(n: usize, seed: u64) -> Self {
        Self {
            mode: SamplingMode::Gibbs,
            n,
            seed,
            constraint_width: None,
            t0: 0.0,
            delta_law: DeltaLaw::Uniform,
        }
    }

    pub fn constrained(n: usize, seed: u64) -> Self {
        Self {
            mode: SamplingMode::ConstrainedPairs,
            ..Self::gibbs(n, seed)
        }
    }

    pub fn width(&self, model: &TwoParticleWaveFunction) -> f64 {
        self.constraint_width.unwrap_or(model.params().d)
    }

    pub fn validate(&self, model: &TwoParticleWaveFunction) -> Result<(), EnsembleError> {
        if self.n == 0 {
            return Err(EnsembleError::InvalidSpec("n must be at least 1".into()));
        }
        if !self.t0.is_finite() {
            return Err(EnsembleError::InvalidSpec(format!("t0 = {} is not finite", self.t0)));
        }
        let w = self.width(model);
        if !(w > 0.0 && w < model.params().a) {
            return Err(EnsembleError::InvalidSpec(format!(
                "constraint_width = {w} must lie in (0, a = {})",
                model.params().a
            )));
        }
        if let DeltaLaw::Fixed(delta) = self.delta_law {
            if !(delta.abs() <= 0.5 * w) {
                return Err(EnsembleError::InvalidSpec(format!("fixed delta {delta} outside [-w/2, w/2], w = {w}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleState {
    pub mode: SamplingMode,
    pub seed: u64,
    pub t: f64,
    pub configurations: Vec<Configuration>,
    /// `delta_n = x1 + x2` per member at sampling; empty in Gibbs mode.
    pub deltas: Vec<f64>,
    /// Total rejection proposals spent.
    pub proposals: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub mode: SamplingMode,
    pub seed: u64,
    pub t: f64,
    pub n: usize,
    pub proposals: u64,
    pub acceptance: f64,
}

impl EnsembleState {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    pub fn summary(&self) -> EnsembleSummary {
        EnsembleSummary {
            mode: self.mode,
            seed: self.seed,
            t: self.t,
            n: self.len(),
            proposals: self.proposals,
            acceptance: if self.proposals == 0 {
                1.0
            } else {
                self.len() as f64 / self.proposals as f64
            },
        }
    }

    /// Snapshot CSV `member_id,x1,y1,x2,y2,delta_n`; `delta_n` is empty in Gibbs mode.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "member_id,x1,y1,x2,y2,delta_n")?;
        for (i, c) in self.configurations.iter().enumerate() {
            let delta = self.deltas.get(i).map(|d| format!("{d:e}")).unwrap_or_default();
            writeln!(out, "{i},{:e},{:e},{:e},{:e},{delta}", c.x1, c.y1, c.x2, c.y2)?;
        }
        Ok(())
    }
}

/// Independent stream for ensemble member `index`.
pub fn member_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// A member needing this many proposals has acceptance below 1e-6 with
/// probability `1 - e^-10`.
pub const STALL_PROPOSALS: u64 = 10_000_000;
const ENVELOPE_MARGIN: f64 = 1.25;
const SCAN: usize = 301;

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Rejection sampler for `|Psi_x|^2` in `(X, r)` coordinates.
struct GibbsSampler<'a> {
    model: &'a TwoParticleWaveFunction,
    t0: f64,
    window: TransverseWindow,
    envelope: f64,
}

impl<'a> GibbsSampler<'a> {
    fn new(model: &'a TwoParticleWaveFunction, t0: f64) -> Result<Self, EnsembleError> {
        let window = model.transverse_window(t0, 6.0);
        let mut peak: f64 = 0.0;
        for i in 0..SCAN {
            let cm = window.cm_center + window.cm_half * (2.0 * i as f64 / (SCAN - 1) as f64 - 1.0);
            for j in 0..SCAN {
                let r = window.rel_center + window.rel_half * (2.0 * j as f64 / (SCAN - 1) as f64 - 1.0);
                peak = peak.max(model.transverse_density(cm + 0.5 * r, cm - 0.5 * r, t0));
            }
        }
        let envelope = ENVELOPE_MARGIN * peak;
        let area = 4.0 * window.cm_half * window.rel_half;
        if !(envelope > 0.0) || 1.0 / (envelope * area) < 1e-6 {
            return Err(EnsembleError::RejectionStall { member: 0, attempts: 0 });
        }
        Ok(Self {
            model,
            t0,
            window,
            envelope,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, member: usize) -> Result<(f64, f64, u64), EnsembleError> {
        let w = &self.window;
        for attempt in 1..=STALL_PROPOSALS {
            let cm = uniform(rng, w.cm_center - w.cm_half, w.cm_center + w.cm_half);
            let r = uniform(rng, w.rel_center - w.rel_half, w.rel_center + w.rel_half);
            let (x1, x2) = (cm + 0.5 * r, cm - 0.5 * r);
            let f = self.model.transverse_density(x1, x2, self.t0);
            if f > self.envelope {
                return Err(EnsembleError::EnvelopeViolation {
                    envelope: self.envelope,
                    density: f,
                    x1,
                    x2,
                });
            }
            if rng.random::<f64>() * self.envelope < f {
                return Ok((x1, x2, attempt));
            }
        }
        Err(EnsembleError::RejectionStall {
            member,
            attempts: STALL_PROPOSALS,
        })
    }
}

/// Rejection sampler for `x1` given `x1 + x2 = delta`, uniform proposals over
/// the slit windows.
struct ConstrainedSampler<'a> {
    model: &'a TwoParticleWaveFunction,
    t0: f64,
    width: f64,
    law: DeltaLaw,
    /// Window offsets from `delta/2`.
    windows: Vec<(f64, f64)>,
    envelope: f64,
}

fn merge(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

impl<'a> ConstrainedSampler<'a> {
    fn new(model: &'a TwoParticleWaveFunction, spec: &EnsembleSpec) -> Result<Self, EnsembleError> {
        let t0 = spec.t0;
        let windows = merge(
            model
                .relative_lumps(t0)
                .into_iter()
                .map(|l| (l.offset - 6.0 * l.width, l.offset + 6.0 * l.width))
                .collect(),
        );
        let width = spec.width(model);
        let deltas: Vec<f64> = match spec.delta_law {
            DeltaLaw::Fixed(d) => vec![d],
            DeltaLaw::Uniform => (0..21).map(|i| width * (i as f64 / 20.0 - 0.5)).collect(),
        };
        let mut peak: f64 = 0.0;
        for &delta in &deltas {
            for &(lo, hi) in &windows {
                for j in 0..SCAN {
                    let x1 = 0.5 * delta + lo + (hi - lo) * j as f64 / (SCAN - 1) as f64;
                    peak = peak.max(model.transverse_density(x1, delta - x1, t0));
                }
            }
        }
        if !(peak > 0.0) {
            return Err(EnsembleError::RejectionStall { member: 0, attempts: 0 });
        }
        Ok(Self {
            model,
            t0,
            width,
            law: spec.delta_law,
            windows,
            envelope: ENVELOPE_MARGIN * peak,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, member: usize) -> Result<(f64, f64, f64, u64), EnsembleError> {
        let total: f64 = self.windows.iter().map(|(lo, hi)| hi - lo).sum();
        let half = 0.5 * self.width;
        let mut attempts = 0u64;
        'delta: loop {
            let delta = match self.law {
                DeltaLaw::Uniform => uniform(rng, -half, half),
                DeltaLaw::Fixed(d) => d,
            };
            while attempts < STALL_PROPOSALS {
                attempts += 1;
                let mut u = rng.random::<f64>() * total;
                let mut x1 = f64::NAN;
                for &(lo, hi) in &self.windows {
                    if u < hi - lo {
                        x1 = 0.5 * delta + lo + u;
                        break;
                    }
                    u -= hi - lo;
                }
                if x1.is_nan() {
                    x1 = 0.5 * delta + self.windows[self.windows.len() - 1].1;
                }
                let x2 = delta - x1;
                let f = self.model.transverse_density(x1, x2, self.t0);
                if f > self.envelope {
                    return Err(EnsembleError::EnvelopeViolation {
                        envelope: self.envelope,
                        density: f,
                        x1,
                        x2,
                    });
                }
                if rng.random::<f64>() * self.envelope < f {
                    let stored = x1 + x2;
                    // keep the constraint exact in floating point
                    if stored.abs() > half {
                        continue 'delta;
                    }
                    return Ok((x1, x2, stored, attempts));
                }
            }
            return Err(EnsembleError::RejectionStall { member, attempts });
        }
    }
}

fn longitudinal_pair(model: &TwoParticleWaveFunction, rng: &mut ChaCha8Rng, t0: f64) -> (f64, f64) {
    let long = model.longitudinal();
    let y1 = long.center(t0) + long.sigma * rng.sample::<f64, _>(StandardNormal);
    let y2 = long.center(t0) + long.sigma * rng.sample::<f64, _>(StandardNormal);
    (y1, y2)
}

/// Draws the initial ensemble. Member `i` uses stream `i` of the seed, so the
/// result does not depend on the thread count.
pub fn sample_initial(model: &TwoParticleWaveFunction, spec: &EnsembleSpec) -> Result<EnsembleState, EnsembleError> {
    spec.validate(model)?;
    let t0 = spec.t0;
    let members: Vec<(Configuration, Option<f64>, u64)> = match spec.mode {
        SamplingMode::Gibbs => {
            let sampler = GibbsSampler::new(model, t0)?;
            (0..spec.n)
                .into_par_iter()
                .map(|i| {
                    let mut rng = member_rng(spec.seed, i);
                    let (x1, x2, tries) = sampler.draw(&mut rng, i)?;
                    let (y1, y2) = longitudinal_pair(model, &mut rng, t0);
                    Ok((Configuration::new(x1, y1, x2, y2, t0), None, tries))
                })
                .collect::<Result<_, EnsembleError>>()?
        }
        SamplingMode::ConstrainedPairs => {
            let sampler = ConstrainedSampler::new(model, spec)?;
            (0..spec.n)
                .into_par_iter()
                .map(|i| {
                    let mut rng = member_rng(spec.seed, i);
                    let (x1, x2, delta, tries) = sampler.draw(&mut rng, i)?;
                    let (y1, y2) = longitudinal_pair(model, &mut rng, t0);
                    Ok((Configuration::new(x1, y1, x2, y2, t0), Some(delta), tries))
                })
                .collect::<Result<_, EnsembleError>>()?
        }
    };
    let proposals = members.iter().map(|m| m.2).sum();
    let deltas = members.iter().filter_map(|m| m.1).collect();
    Ok(EnsembleState {
        mode: spec.mode,
        seed: spec.seed,
        t: t0,
        configurations: members.into_iter().map(|m| m.0).collect(),
        deltas,
        proposals,
    })
}

/// Per-member outcome of an evolution, without the step history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub member: usize,
    pub start: Configuration,
    pub end: Configuration,
    pub delta0: f64,
    pub max_sum_drift: f64,
    pub min_axis_distance: f64,
    pub crossed_axis: bool,
    pub node_abort: bool,
    pub reached_detector: bool,
    pub step_underflow: bool,
    pub steps: usize,
}

impl TrajectorySummary {
    pub fn from_trajectory(member: usize, tr: &Trajectory) -> Self {
        Self {
            member,
            start: *tr.start(),
            end: *tr.end(),
            delta0: tr.delta0,
            max_sum_drift: tr.max_sum_drift,
            min_axis_distance: tr.min_axis_distance,
            crossed_axis: tr.flags.crossed_axis,
            node_abort: tr.flags.node_abort,
            reached_detector: tr.flags.reached_detector,
            step_underflow: tr.flags.step_underflow,
            steps: tr.accepted_steps,
        }
    }

    /// Node contact or step underflow: excluded from every estimator.
    pub fn lost(&self) -> bool {
        self.node_abort || self.step_underflow
    }
}

/// Integrates every member; output order matches input order.
pub fn evolve_ensemble(
    model: &TwoParticleWaveFunction,
    state: &EnsembleState,
    t_final: f64,
    opts: &IntegratorOptions,
) -> Result<(EnsembleState, Vec<TrajectorySummary>), EnsembleError> {
    opts.validate()?;
    if !(t_final > state.t) {
        return Err(EnsembleError::InvalidSpec(format!("t_final = {t_final} must exceed t0 = {}", state.t)));
    }
    let opts = IntegratorOptions { record: false, ..*opts };
    let summaries: Vec<TrajectorySummary> = state
        .configurations
        .par_iter()
        .enumerate()
        .map(|(i, c)| integrate_trajectory(model, c, t_final, &opts).map(|tr| TrajectorySummary::from_trajectory(i, &tr)))
        .collect::<Result<_, DynamicsError>>()?;
    let evolved = EnsembleState {
        mode: state.mode,
        seed: state.seed,
        t: t_final,
        configurations: summaries.iter().map(|s| s.end).collect(),
        deltas: state.deltas.clone(),
        proposals: state.proposals,
    };
    Ok((evolved, summaries))
}

/// Histogram of `(x1, x2)` on a `bins x bins` grid over `box`, with the count
/// outside it.
pub fn histogram_2d(points: &[(f64, f64)], (bx, by): ((f64, f64), (f64, f64)), bins: usize) -> (Vec<u64>, u64) {
    let mut counts = vec![0u64; bins * bins];
    let mut outside = 0;
    let (dx, dy) = ((bx.1 - bx.0) / bins as f64, (by.1 - by.0) / bins as f64);
    for &(x, y) in points {
        let (i, j) = (((x - bx.0) / dx).floor(), ((y - by.0) / dy).floor());
        if i >= 0.0 && j >= 0.0 && (i as usize) < bins && (j as usize) < bins {
            counts[i as usize * bins + j as usize] += 1;
        } else {
            outside += 1;
        }
    }
    (counts, outside)
}

/// Cell probabilities of `|Psi_x(t)|^2` on the same grid, by a 12 x 12
/// Gauss–Legendre rule per cell.
pub fn cell_probabilities(model: &TwoParticleWaveFunction, t: f64, (bx, by): ((f64, f64), (f64, f64)), bins: usize) -> Vec<f64> {
    let (dx, dy) = ((bx.1 - bx.0) / bins as f64, (by.1 - by.0) / bins as f64);
    (0..bins * bins)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / bins, k % bins);
            let (x0, y0) = (bx.0 + i as f64 * dx, by.0 + j as f64 * dy);
            let ry = gauss_legendre_on(12, y0, y0 + dy);
            gauss_legendre_on(12, x0, x0 + dx)
                .into_iter()
                .map(|(x, wx)| wx * ry.iter().map(|&(y, wy)| wy * model.transverse_density(x, y, t)).sum::<f64>())
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivarianceReport {
    pub n: usize,
    pub lost: usize,
    pub seed: u64,
    pub t0: f64,
    pub t_final: f64,
    pub bins: usize,
    pub chi_square: ChiSquare,
    /// `p_value > 0.01`.
    pub pass: bool,
}

/// Chi-square test of an evolved Gibbs ensemble against `|Psi_x(t_final)|^2`.
///
/// Members are integrated to the fixed time `t_final` with detector stopping
/// disabled. Lost members are excluded and counted.
pub fn equivariance_test(
    model: &TwoParticleWaveFunction,
    spec: &EnsembleSpec,
    t_final: f64,
    bins: usize,
    opts: &IntegratorOptions,
) -> Result<EquivarianceReport, EnsembleError> {
    if spec.mode != SamplingMode::Gibbs {
        return Err(EnsembleError::InvalidSpec("equivariance is tested on a gibbs ensemble".into()));
    }
    if bins == 0 {
        return Err(EnsembleError::InvalidSpec("bins must be positive".into()));
    }
    let initial = sample_initial(model, spec)?;
    let (points, lost): (Vec<(f64, f64)>, usize) = if t_final == spec.t0 {
        (initial.configurations.iter().map(|c| (c.x1, c.x2)).collect(), 0)
    } else {
        let opts = IntegratorOptions {
            stop_at_detector: false,
            ..*opts
        };
        let (_, summaries) = evolve_ensemble(model, &initial, t_final, &opts)?;
        let kept: Vec<_> = summaries.iter().filter(|s| !s.lost()).map(|s| (s.end.x1, s.end.x2)).collect();
        let lost = summaries.len() - kept.len();
        (kept, lost)
    };
    let grid = model.transverse_window(t_final, 4.0).cartesian();
    let (counts, outside) = histogram_2d(&points, grid, bins);
    let probs = cell_probabilities(model, t_final, grid, bins);
    let chi = chi_square_pooled(&counts, &probs, outside, 5.0).ok_or_else(|| {
        EnsembleError::InsufficientSamples(format!(
            "n = {} leaves a cell with expected count below 5 after pooling",
            points.len()
        ))
    })?;
    Ok(EquivarianceReport {
        n: spec.n,
        lost,
        seed: spec.seed,
        t0: spec.t0,
        t_final,
        bins,
        pass: chi.p_value > 0.01,
        chi_square: chi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_band, ks_distance};
    use crate::wavefunction::{ModelKind, PhysicalParams};

    fn natural() -> TwoParticleWaveFunction {
        TwoParticleWaveFunction::build(PhysicalParams::natural()).unwrap()
    }

    #[test]
    fn constrained_members_satisfy_constraint_exactly() {
        let m = natural();
        let st = sample_initial(&m, &EnsembleSpec::constrained(2000, 11)).unwrap();
        for (c, d) in st.configurations.iter().zip(&st.deltas) {
            assert_eq!(c.x1 + c.x2 - d, 0.0);
            assert!(d.abs() <= 0.5 * m.params().d);
        }
    }

    #[test]
    fn delta_is_uniform() {
        let m = natural();
        let n = 10_000;
        let st = sample_initial(&m, &EnsembleSpec::constrained(n, 5)).unwrap();
        let half = 0.5 * m.params().d;
        let ks = ks_distance(&st.deltas, |x| ((x + half) / (2.0 * half)).clamp(0.0, 1.0));
        assert!(ks < ks_band(n), "{ks}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = natural();
        let spec = EnsembleSpec::gibbs(300, 99);
        assert_eq!(sample_initial(&m, &spec).unwrap(), sample_initial(&m, &spec).unwrap());
        let other = sample_initial(&m, &EnsembleSpec::gibbs(300, 100)).unwrap();
        assert_ne!(other, sample_initial(&m, &spec).unwrap());
    }

    #[test]
    fn spec_validation() {
        let m = natural();
        let mut spec = EnsembleSpec::constrained(0, 1);
        assert!(matches!(spec.validate(&m), Err(EnsembleError::InvalidSpec(_))));
        spec.n = 1;
        spec.constraint_width = Some(50.0);
        assert!(spec.validate(&m).is_err());
        spec.constraint_width = None;
        spec.delta_law = DeltaLaw::Fixed(5.0);
        assert!(spec.validate(&m).is_err());
    }

    #[test]
    fn single_plane_wave_member_is_ballistic() {
        let m = TwoParticleWaveFunction::build(PhysicalParams::natural().with_kind(ModelKind::PlaneWave)).unwrap();
        let st = sample_initial(&m, &EnsembleSpec::gibbs(1, 3)).unwrap();
        let opts = IntegratorOptions {
            stop_at_detector: false,
            ..IntegratorOptions::default()
        };
        let (end, summaries) = evolve_ensemble(&m, &st, 40.0, &opts).unwrap();
        let (c0, c1) = (st.configurations[0], end.configurations[0]);
        let u = m.params().kx();
        assert!((c1.x1 - (c0.x1 + 40.0 * u)).abs() < 1e-10);
        assert!((c1.x2 - (c0.x2 - 40.0 * u)).abs() < 1e-10);
        assert!((c1.y1 - (c0.y1 + 40.0)).abs() < 1e-10);
        assert!(!summaries[0].lost());
    }

    #[test]
    fn sampler_alone_is_equivariant() {
        let m = natural();
        let r = equivariance_test(&m, &EnsembleSpec::gibbs(20_000, 8), 0.0, 30, &IntegratorOptions::default()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn csv_layout() {
        let m = natural();
        let st = sample_initial(&m, &EnsembleSpec::constrained(3, 2)).unwrap();
        let mut buf = Vec::new();
        st.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "member_id,x1,y1,x2,y2,delta_n");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 6);
    }
}

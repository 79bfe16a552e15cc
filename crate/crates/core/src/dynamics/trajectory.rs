use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::integrator::{Scheme, Step, StepError, Stepper};
use crate::wavefunction::{Configuration, ModelError, TwoParticleWaveFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("density {density:e} below node floor {floor:e} at {at:?}")]
    Node {
        at: Configuration,
        density: f64,
        floor: f64,
    },
    #[error("adaptive step {h:e} below minimum at t = {t}")]
    StepUnderflow { t: f64, h: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorOptions {
    pub scheme: Scheme,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Largest step; the fixed step of `rk4_fixed`. `null` in JSON is unbounded.
    #[serde(with = "unbounded")]
    pub max_step: f64,
    /// Density below which the velocity field is treated as singular. `None`
    /// uses the model's node floor.
    pub node_density_floor: Option<f64>,
    /// Stop at the joint arrival `min(y1, y2) = L`.
    pub stop_at_detector: bool,
    /// Keep every accepted step; otherwise only the endpoints are stored.
    pub record: bool,
}

/// `f64::INFINITY` as JSON `null`, which JSON cannot otherwise represent.
mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() && *x > 0.0 {
            s.serialize_none()
        } else {
            s.serialize_some(x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk45Adaptive,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_step: f64::INFINITY,
            node_density_floor: None,
            stop_at_detector: true,
            record: false,
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let ok = self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_step > 0.0;
        let fixed_ok = self.scheme != Scheme::Rk4Fixed || self.max_step.is_finite();
        if !(ok && fixed_ok) {
            return Err(DynamicsError::InvalidRequest(format!(
                "tolerances and max_step must be positive (rk4_fixed needs a finite max_step): {self:?}"
            )));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self.rel_tol = tol;
        self
    }
}

/// One stored point: configuration and its Bohmian velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub config: Configuration,
    pub velocity: [f64; 4],
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.config.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TrajectoryFlags {
    /// `x1 - delta0/2` changed sign at some accepted step or inside one.
    pub crossed_axis: bool,
    pub node_abort: bool,
    pub reached_detector: bool,
    pub step_underflow: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// `x1 + x2` per stored sample.
    pub sum_series: Vec<f64>,
    pub flags: TrajectoryFlags,
    pub delta0: f64,
    /// `max |x1 + x2 - delta0|` over every accepted step, stored or not.
    pub max_sum_drift: f64,
    /// Minimum of `|x1 - delta0/2|` seen at accepted steps.
    pub min_axis_distance: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn start(&self) -> &Configuration {
        &self.samples[0].config
    }

    pub fn end(&self) -> &Configuration {
        &self.samples[self.samples.len() - 1].config
    }

    /// Writes the frozen CSV layout `t,x1,y1,x2,y2,sum_x,flag_node,flag_cross`,
    /// prefixed by `traj_id` when given.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, traj_id: Option<usize>, header: bool) -> std::io::Result<()> {
        if header {
            if traj_id.is_some() {
                write!(out, "traj_id,")?;
            }
            writeln!(out, "t,x1,y1,x2,y2,sum_x,flag_node,flag_cross")?;
        }
        let (node, cross) = (self.flags.node_abort as u8, self.flags.crossed_axis as u8);
        for (s, sum) in self.samples.iter().zip(&self.sum_series) {
            if let Some(id) = traj_id {
                write!(out, "{id},")?;
            }
            let c = &s.config;
            writeln!(out, "{:e},{:e},{:e},{:e},{:e},{:e},{node},{cross}", c.t, c.x1, c.y1, c.x2, c.y2, sum)?;
        }
        Ok(())
    }
}

/// Bohmian velocity `grad S / m`.
pub fn velocity(model: &TwoParticleWaveFunction, c: &Configuration) -> Result<[f64; 4], DynamicsError> {
    velocity_with_floor(model, c, model.node_floor())
}

pub fn velocity_with_floor(model: &TwoParticleWaveFunction, c: &Configuration, floor: f64) -> Result<[f64; 4], DynamicsError> {
    let v = model.evaluate(c)?;
    if v.density < floor {
        return Err(DynamicsError::Node {
            at: *c,
            density: v.density,
            floor,
        });
    }
    let m = model.params().mass;
    Ok(v.grad_phase.map(|g| g / m))
}

fn detector_gap(y: &[f64; 4], length: f64) -> f64 {
    y[1].min(y[3]) - length
}

/// Time in `[step.t0, step.t1]` where `min(y1, y2) = L` on the dense output.
fn locate_arrival(step: &Step<4>, length: f64) -> f64 {
    let g = |t: f64| step.dense(1, t).min(step.dense(3, t)) - length;
    let (mut lo, mut hi) = (step.t0, step.t1);
    let tol = 1e-12 * step.t1.abs().max(1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Sign change of `x1 - axis` across the step, including inside it.
fn step_crosses(step: &Step<4>, axis: f64) -> bool {
    let side = |x: f64| x - axis;
    let (a, b) = (side(step.y0[0]), side(step.y1[0]));
    if a * b < 0.0 {
        return true;
    }
    step.interior_extrema(0)
        .into_iter()
        .any(|t| side(step.dense(0, t)) * a < 0.0 || side(step.dense(0, t)) * b < 0.0)
}

/// Called with every accepted step during integration.
pub trait StepObserver {
    fn on_step(&mut self, step: &Step<4>);
}

impl StepObserver for () {
    fn on_step(&mut self, _step: &Step<4>) {}
}

/// Integrates the guidance equation from `c0` until `t_final`, the detector
/// plane or a node.
pub fn integrate_trajectory(
    model: &TwoParticleWaveFunction,
    c0: &Configuration,
    t_final: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, DynamicsError> {
    integrate_observed(model, c0, t_final, opts, &mut ())
}

/// [`integrate_trajectory`] with a per-step observer.
///
/// Node contact and step underflow are reported through the flags with the
/// trajectory truncated at the last accepted step.
pub fn integrate_observed<O: StepObserver>(
    model: &TwoParticleWaveFunction,
    c0: &Configuration,
    t_final: f64,
    opts: &IntegratorOptions,
    observer: &mut O,
) -> Result<Trajectory, DynamicsError> {
    opts.validate()?;
    if !c0.is_finite() {
        return Err(ModelError::NonFinite(*c0).into());
    }
    if !(t_final > c0.t) {
        return Err(DynamicsError::InvalidRequest(format!("t_final = {t_final} must exceed t0 = {}", c0.t)));
    }
    let floor = opts.node_density_floor.unwrap_or_else(|| model.node_floor());
    let length = model.params().length;
    let mut rhs = |t: f64, y: &[f64; 4]| velocity_with_floor(model, &Configuration::from_state(*y, t), floor);

    let delta0 = c0.sum_x();
    let axis = 0.5 * delta0;
    let mut traj = Trajectory {
        samples: Vec::new(),
        sum_series: Vec::new(),
        flags: TrajectoryFlags::default(),
        delta0,
        max_sum_drift: 0.0,
        min_axis_distance: (c0.x1 - axis).abs(),
        accepted_steps: 0,
        rejected_steps: 0,
    };
    let push = |traj: &mut Trajectory, c: Configuration, v: [f64; 4]| {
        traj.sum_series.push(c.sum_x());
        traj.samples.push(Sample { config: c, velocity: v });
    };

    let v0 = match rhs(c0.t, &c0.state()) {
        Ok(v) => v,
        Err(DynamicsError::Node { .. }) => {
            traj.flags.node_abort = true;
            push(&mut traj, *c0, [f64::NAN; 4]);
            return Ok(traj);
        }
        Err(e) => return Err(e),
    };
    push(&mut traj, *c0, v0);
    if opts.stop_at_detector && detector_gap(&c0.state(), length) >= 0.0 {
        traj.flags.reached_detector = true;
        return Ok(traj);
    }

    let mut stepper = Stepper::new(opts.scheme, opts.abs_tol, opts.rel_tol, opts.max_step, t_final - c0.t);
    let (mut t, mut y, mut dy) = (c0.t, c0.state(), v0);
    while t < t_final {
        let mut step = match stepper.advance(&mut rhs, t, &y, &dy, t_final) {
            Ok(s) => s,
            Err(StepError::Rhs(DynamicsError::Node { .. })) => {
                traj.flags.node_abort = true;
                break;
            }
            Err(StepError::Rhs(e)) => return Err(e),
            Err(StepError::Underflow { .. }) => {
                traj.flags.step_underflow = true;
                break;
            }
        };
        let mut arrived = false;
        if opts.stop_at_detector && detector_gap(&step.y1, length) >= 0.0 {
            let t_star = locate_arrival(&step, length);
            step = match stepper.step_to(&mut rhs, step.t0, &step.y0, &step.f0, t_star) {
                Ok(s) => s,
                Err(DynamicsError::Node { .. }) => {
                    traj.flags.node_abort = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            arrived = true;
        }
        traj.accepted_steps += 1;
        if step_crosses(&step, axis) {
            traj.flags.crossed_axis = true;
        }
        traj.min_axis_distance = traj.min_axis_distance.min((step.y1[0] - axis).abs());
        traj.max_sum_drift = traj.max_sum_drift.max((step.y1[0] + step.y1[2] - delta0).abs());
        observer.on_step(&step);
        t = step.t1;
        y = step.y1;
        dy = step.f1;
        if opts.record || arrived || t >= t_final {
            push(&mut traj, Configuration::from_state(y, t), dy);
        }
        if arrived {
            traj.flags.reached_detector = true;
            break;
        }
    }
    if traj.samples.last().map(|s| s.t()) != Some(t) {
        push(&mut traj, Configuration::from_state(y, t), dy);
    }
    traj.rejected_steps = stepper.rejected;
    Ok(traj)
}

/// `max |x1(t) + x2(t) - delta0|` over the stored samples.
pub fn sum_invariant_drift(traj: &Trajectory) -> f64 {
    traj.sum_series
        .iter()
        .map(|s| (s - traj.delta0).abs())
        .fold(0.0, f64::max)
}

/// Whether `x1 - axis_x` changes sign along the stored samples, refining each
/// interval with the cubic Hermite interpolant from the stored velocities.
pub fn crossing_check(traj: &Trajectory, axis_x: f64) -> bool {
    traj.samples.windows(2).any(|w| {
        let step = Step {
            t0: w[0].t(),
            t1: w[1].t(),
            y0: w[0].config.state(),
            y1: w[1].config.state(),
            f0: w[0].velocity,
            f1: w[1].velocity,
        };
        step_crosses(&step, axis_x)
    })
}

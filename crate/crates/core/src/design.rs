//! Apparatus design formulas: near-field growth of `x1 + x2`, packet
//! spreading, and the feasibility checks built on them.

use serde::{Deserialize, Serialize};

use crate::dynamics::{integrator, Scheme, Stepper};
use crate::wavefunction::PhysicalParams;

/// `e^{v t / L}`, the growth of `x1 + x2` under `d(x1 + x2)/dt = (v/L)(x1 + x2)`.
pub fn growth_factor(t: f64, v: f64, length: f64) -> f64 {
    (v * t / length).exp()
}

/// The same factor by direct Dormand–Prince integration of the growth ODE.
pub fn growth_factor_ode(t: f64, v: f64, length: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let rate = v / length;
    let mut stepper = Stepper::new(Scheme::Rk45Adaptive, 1e-15, 1e-13, f64::INFINITY, t);
    let y = integrator::solve(|_t, y: &[f64; 1]| Ok::<_, ()>([rate * y[0]]), 0.0, [1.0], t, &mut stepper)
        .expect("linear growth ODE cannot fail");
    y[0]
}

/// Bound `delta0 e^{v t / L}` on `x1 + x2` in the near field.
pub fn sum_envelope(delta0: f64, t: f64, v: f64, length: f64) -> f64 {
    delta0 * growth_factor(t, v, length)
}

/// `sigma_t / sigma0 = [1 + (hbar t / (2 m sigma0^2))^2]^{1/2}`.
pub fn spreading_ratio(sigma0: f64, t: f64, mass: f64, hbar: f64) -> f64 {
    let tau = hbar * t / (2.0 * mass * sigma0 * sigma0);
    tau.hypot(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignInputs {
    pub params: PhysicalParams,
    #[serde(default = "default_spreading")]
    pub max_spreading: f64,
    #[serde(default = "default_growth")]
    pub max_growth: f64,
    #[serde(default = "default_margin")]
    pub fraunhofer_margin: f64,
}

fn default_spreading() -> f64 {
    1.05
}
fn default_growth() -> f64 {
    std::f64::consts::E
}
fn default_margin() -> f64 {
    10.0
}

impl DesignInputs {
    pub fn new(params: PhysicalParams) -> Self {
        Self {
            params,
            max_spreading: default_spreading(),
            max_growth: default_growth(),
            fraunhofer_margin: default_margin(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.params.validate().map_err(|e| e.to_string())?;
        if !(self.max_spreading > 1.0 && self.max_growth > 1.0) {
            return Err("max_spreading and max_growth must exceed 1".into());
        }
        if !(self.fraunhofer_margin >= 1.0) {
            return Err("fraunhofer_margin must be at least 1".into());
        }
        Ok(())
    }
}

/// One pass/fail check: `value <= limit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub value: f64,
    pub limit: f64,
    /// `limit / value`; above 1 when passing.
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(value: f64, limit: f64) -> Self {
        Self {
            value,
            limit,
            margin: limit / value,
            pass: value <= limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub flight_time: f64,
    pub wavelength: f64,
    /// Far-field onset `y_F = d^2 / lambda`.
    pub fraunhofer_onset: f64,
    /// `spreading_ratio(L/v) <= max_spreading`.
    pub spreading: Check,
    /// `y_F <= L / fraunhofer_margin`.
    pub fraunhofer: Check,
    /// `e^{y_F / L}`, the growth accumulated before the far field.
    pub growth_at_onset: Check,
    /// `d e^{v t_F / L} / a <= 1 / fraunhofer_margin`.
    pub constraint_band: Check,
}

impl FeasibilityReport {
    pub fn all_pass(&self) -> bool {
        self.spreading.pass && self.fraunhofer.pass && self.growth_at_onset.pass && self.constraint_band.pass
    }
}

pub fn feasibility_check(inputs: &DesignInputs) -> FeasibilityReport {
    let p = &inputs.params;
    let (v, length) = (p.v(), p.length);
    let t_flight = p.flight_time();
    let y_f = p.far_field_onset();
    let t_f = y_f / v;
    let growth = growth_factor(t_f, v, length);
    FeasibilityReport {
        flight_time: t_flight,
        wavelength: p.wavelength(),
        fraunhofer_onset: y_f,
        spreading: Check::at_most(spreading_ratio(p.sigma0, t_flight, p.mass, p.hbar), inputs.max_spreading),
        fraunhofer: Check::at_most(y_f, length / inputs.fraunhofer_margin),
        growth_at_onset: Check::at_most(growth, inputs.max_growth),
        constraint_band: Check::at_most(p.d * growth / p.a, 1.0 / inputs.fraunhofer_margin),
    }
}

//! Bohmian pair trajectories under the guidance law `v = grad S / m`.

pub mod integrator;
mod trajectory;

pub use integrator::{Scheme, Step, Stepper, MIN_STEP};
pub use trajectory::{
    crossing_check, integrate_observed, integrate_trajectory, sum_invariant_drift, velocity, velocity_with_floor,
    DynamicsError, IntegratorOptions, Sample, StepObserver, Trajectory, TrajectoryFlags,
};

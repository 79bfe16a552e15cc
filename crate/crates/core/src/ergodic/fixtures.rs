use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DynamicalSystem, ErgodicError, Indicator};
use crate::dynamics::{integrate_trajectory, IntegratorOptions};
use crate::ensemble::{sample_initial, EnsembleSpec};
use crate::wavefunction::{Configuration, TwoParticleWaveFunction};

/// `(sqrt 5 - 1) / 2`.
pub const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// The identity on `[0, 1]` with Lebesgue measure.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl DynamicalSystem for Identity {
    fn name(&self) -> &str {
        "identity"
    }
    fn dim(&self) -> usize {
        1
    }
    fn step(&self, x: &[f64]) -> Result<Vec<f64>, String> {
        Ok(x.to_vec())
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.len() == 1 && (0.0..=1.0).contains(&x[0])
    }
    fn density(&self, _x: &[f64]) -> Option<f64> {
        Some(1.0)
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.random::<f64>()]
    }
    fn domain(&self) -> Vec<Vec<(f64, f64)>> {
        vec![vec![(0.0, 1.0)]]
    }
}

/// Circle rotation `theta -> theta + alpha mod 1`.
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub alpha: f64,
}

impl Rotation {
    pub fn golden() -> Self {
        Self { alpha: GOLDEN }
    }
}

impl DynamicalSystem for Rotation {
    fn name(&self) -> &str {
        "rotation"
    }
    fn dim(&self) -> usize {
        1
    }
    fn step(&self, x: &[f64]) -> Result<Vec<f64>, String> {
        Ok(vec![(x[0] + self.alpha).rem_euclid(1.0)])
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.len() == 1 && (0.0..1.0).contains(&x[0])
    }
    fn density(&self, _x: &[f64]) -> Option<f64> {
        Some(1.0)
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.random::<f64>()]
    }
    fn domain(&self) -> Vec<Vec<(f64, f64)>> {
        vec![vec![(0.0, 1.0)]]
    }
}

/// Independent rotations of `[0, 1)` and `[2, 3)`, uniform measure `1/2` on each.
#[derive(Debug, Clone, Copy)]
pub struct TwoPiece {
    pub alpha: f64,
}

impl Default for TwoPiece {
    fn default() -> Self {
        Self { alpha: GOLDEN }
    }
}

impl TwoPiece {
    pub fn first_piece() -> Indicator<'static> {
        Indicator::new("in_[0,1]", |x| x[0] <= 1.0)
    }
}

impl DynamicalSystem for TwoPiece {
    fn name(&self) -> &str {
        "two_piece"
    }
    fn dim(&self) -> usize {
        1
    }
    fn step(&self, x: &[f64]) -> Result<Vec<f64>, String> {
        let base = if x[0] < 1.5 { 0.0 } else { 2.0 };
        Ok(vec![base + (x[0] - base + self.alpha).rem_euclid(1.0)])
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.len() == 1 && ((0.0..1.0).contains(&x[0]) || (2.0..3.0).contains(&x[0]))
    }
    fn density(&self, x: &[f64]) -> Option<f64> {
        Some(if self.contains(x) { 0.5 } else { 0.0 })
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let base = if rng.random::<bool>() { 0.0 } else { 2.0 };
        vec![base + rng.random::<f64>()]
    }
    fn domain(&self) -> Vec<Vec<(f64, f64)>> {
        vec![vec![(0.0, 1.0)], vec![(2.0, 3.0)]]
    }
}

/// Strobed Bohmian pair flow on states `(x1, y1, x2, y2, t)`: one step is
/// the guidance flow over `dt`. The measure is the constrained-pair trial
/// ensemble, represented by a pool drawn once at construction.
pub struct BohmPair<'m> {
    pub model: &'m TwoParticleWaveFunction,
    pub dt: f64,
    pub opts: IntegratorOptions,
    pub pool: Vec<Vec<f64>>,
}

impl<'m> BohmPair<'m> {
    /// Pool of `pool_size` constrained pairs sampled at `spec.t0`.
    pub fn new(
        model: &'m TwoParticleWaveFunction,
        spec: &EnsembleSpec,
        dt: f64,
        opts: IntegratorOptions,
    ) -> Result<Self, ErgodicError> {
        if !(dt > 0.0) {
            return Err(ErgodicError::InvalidRequest(format!("strobe dt = {dt} must be positive")));
        }
        let state = sample_initial(model, spec).map_err(|e| ErgodicError::InvalidRequest(e.to_string()))?;
        let pool = state
            .configurations
            .iter()
            .map(|c| vec![c.x1, c.y1, c.x2, c.y2, c.t])
            .collect();
        Ok(Self {
            model,
            dt,
            opts: IntegratorOptions {
                stop_at_detector: false,
                record: false,
                ..opts
            },
            pool,
        })
    }

    /// `x1 > delta/2` with `delta = x1 + x2` conserved along the flow.
    pub fn side_indicator() -> Indicator<'static> {
        Indicator::new("x1>delta/2", |x| x[0] > 0.5 * (x[0] + x[2]))
    }

    /// The first pool member on each side of its axis.
    pub fn starts(&self, per_side: usize) -> Vec<Vec<f64>> {
        let side = Self::side_indicator();
        let mut out = Vec::new();
        for want in [true, false] {
            out.extend(self.pool.iter().filter(|x| side.eval(x) == want).take(per_side).cloned());
        }
        out
    }
}

impl DynamicalSystem for BohmPair<'_> {
    fn name(&self) -> &str {
        "bohm_pair"
    }
    fn dim(&self) -> usize {
        5
    }
    fn step(&self, x: &[f64]) -> Result<Vec<f64>, String> {
        let c = Configuration::new(x[0], x[1], x[2], x[3], x[4]);
        let tr = integrate_trajectory(self.model, &c, c.t + self.dt, &self.opts).map_err(|e| e.to_string())?;
        if tr.flags.node_abort || tr.flags.step_underflow {
            return Err(format!("trajectory lost at t = {}", tr.end().t));
        }
        let e = tr.end();
        Ok(vec![e.x1, e.y1, e.x2, e.y2, e.t])
    }
    fn contains(&self, x: &[f64]) -> bool {
        x.len() == 5 && x.iter().all(|v| v.is_finite())
    }
    fn density(&self, _x: &[f64]) -> Option<f64> {
        None
    }
    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.pool[rng.random_range(0..self.pool.len())].clone()
    }
    fn domain(&self) -> Vec<Vec<(f64, f64)>> {
        let w = self.model.transverse_window(self.pool.first().map_or(0.0, |x| x[4]), 6.0);
        let ((a, b), (c, d)) = w.cartesian();
        vec![vec![
            (a, b),
            (f64::NEG_INFINITY, f64::INFINITY),
            (c, d),
            (f64::NEG_INFINITY, f64::INFINITY),
            (f64::NEG_INFINITY, f64::INFINITY),
        ]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergodic::{decomposability_test, space_mean, Observable, SpaceMethod};
    use crate::wavefunction::PhysicalParams;
    use std::f64::consts::PI;

    #[test]
    fn rotation_preserves_lebesgue() {
        let sys = Rotation::golden();
        let f = Observable::new("g", |x| (2.0 * PI * x[0]).sin().powi(2) + 0.3 * (4.0 * PI * x[0]).cos());
        let fphi = Observable::new("g_phi", |x| {
            let y = sys.step(x).unwrap()[0];
            (2.0 * PI * y).sin().powi(2) + 0.3 * (4.0 * PI * y).cos()
        });
        let q = SpaceMethod::Quadrature { tol: 1e-11 };
        let a = space_mean(&sys, &f, q).unwrap().value;
        let b = space_mean(&sys, &fphi, q).unwrap().value;
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn constrained_pair_sides_are_invariant() {
        let m = TwoParticleWaveFunction::build(PhysicalParams::natural()).unwrap();
        let spec = EnsembleSpec {
            t0: 5.0,
            ..EnsembleSpec::constrained(200, 17)
        };
        let sys = BohmPair::new(&m, &spec, 10.0, IntegratorOptions::default()).unwrap();
        let t = decomposability_test(&sys, &BohmPair::side_indicator(), 20, 5, 1).unwrap();
        assert!(t.verified(), "{t:?}");
    }
}

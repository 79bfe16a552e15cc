use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{Configuration, TwoParticleWaveFunction};

/// Worst violations of the three symmetry conditions over random configurations.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SymmetryReport {
    pub n_samples: usize,
    pub tol: f64,
    /// `max |1 - R(swapped)/R|`.
    pub exchange: f64,
    /// Spread of `S(swapped) - S` around its first sampled value, radians.
    pub exchange_phase: f64,
    /// `max |1 - R(reflected)/R|`.
    pub reflection: f64,
    /// `max |wrap(S(x1 + h, x2 + h) - S(x1, x2))| / hbar` over far-field points, radians.
    pub translation: f64,
    /// Number of sampled points in the far-field region.
    pub far_field_samples: usize,
    pub exchange_ok: bool,
    pub reflection_ok: bool,
    pub translation_ok: bool,
}

impl SymmetryReport {
    pub fn all_ok(&self) -> bool {
        self.exchange_ok && self.reflection_ok && self.translation_ok
    }
}

fn wrap(phase: f64) -> f64 {
    let w = (phase + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI { w + 2.0 * PI } else { w }
}

fn amplitude_ratio_dev(ln_a: f64, ln_b: f64) -> f64 {
    (ln_b - ln_a).exp_m1().abs()
}

/// Samples `n_samples` configurations over the flight and reports the worst
/// violation of exchange, reflection and far-field phase translation symmetry.
///
/// Points are drawn at uniform `t in [0, L/v]` with transverse coordinates
/// inside a 4-sigma window and `y` from the longitudinal packet. Shifts for
/// the translation check are uniform in `[-d, d]`.
pub fn check_symmetries(model: &TwoParticleWaveFunction, n_samples: usize, tol: f64, seed: u64) -> SymmetryReport {
    assert!(n_samples >= 1, "check_symmetries needs at least one sample");
    let p = model.params();
    let long = model.longitudinal();
    let t_max = p.flight_time();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SymmetryReport {
        n_samples,
        tol,
        exchange: 0.0,
        exchange_phase: 0.0,
        reflection: 0.0,
        translation: 0.0,
        far_field_samples: 0,
        exchange_ok: true,
        reflection_ok: true,
        translation_ok: true,
    };
    let mut phase_ref: Option<f64> = None;
    for _ in 0..n_samples {
        let t = rng.random::<f64>() * t_max;
        let w = model.transverse_window(t, 4.0);
        let cm = w.cm_center + w.cm_half * (2.0 * rng.random::<f64>() - 1.0);
        let rel = w.rel_center + w.rel_half * (2.0 * rng.random::<f64>() - 1.0);
        let y1 = long.center(t) + long.sigma * rng.sample::<f64, _>(StandardNormal);
        let y2 = long.center(t) + long.sigma * rng.sample::<f64, _>(StandardNormal);
        let c = Configuration::new(cm + 0.5 * rel, y1, cm - 0.5 * rel, y2, t);

        let (ln, _) = model.log_psi(&c);
        let (ln_s, _) = model.log_psi(&c.swapped());
        let (ln_r, _) = model.log_psi(&c.reflected());
        report.exchange = report.exchange.max(amplitude_ratio_dev(ln.re, ln_s.re));
        report.reflection = report.reflection.max(amplitude_ratio_dev(ln.re, ln_r.re));
        let dphase = wrap(ln_s.im - ln.im);
        let base = *phase_ref.get_or_insert(dphase);
        report.exchange_phase = report.exchange_phase.max(wrap(dphase - base).abs());

        if model.is_far_field(&c) {
            report.far_field_samples += 1;
            let h = p.d * (2.0 * rng.random::<f64>() - 1.0);
            let (ln_h, _) = model.log_psi(&c.shifted(h));
            report.translation = report.translation.max(wrap(ln_h.im - ln.im).abs());
        }
    }
    report.exchange_ok = report.exchange <= tol && report.exchange_phase <= tol;
    report.reflection_ok = report.reflection <= tol;
    report.translation_ok = report.translation <= tol;
    report
}

use bohm_ergo::cli::ScenarioConfig;
use bohm_ergo::design::{growth_factor, growth_factor_ode, spreading_ratio};
use bohm_ergo::detection::{Counting, DetectorGeometry, Interval};
use bohm_ergo::dynamics::{integrate_trajectory, velocity, IntegratorOptions, Scheme};
use bohm_ergo::ensemble::{sample_initial, DeltaLaw, EnsembleSpec};
use bohm_ergo::ergodic::{time_mean, Observable, Rotation};
use bohm_ergo::quadrature::{integrate, Tolerance};
use bohm_ergo::stats::chi_square_pooled;
use bohm_ergo::wavefunction::{Configuration, ModelKind, PhysicalParams, TwoParticleWaveFunction};
use proptest::prelude::*;

fn model(kind: ModelKind) -> TwoParticleWaveFunction {
    TwoParticleWaveFunction::build(PhysicalParams::natural().with_kind(kind)).unwrap()
}

fn any_kind() -> impl Strategy<Value = ModelKind> {
    prop_oneof![
        Just(ModelKind::DoubleSlit),
        Just(ModelKind::DoubleSlitFree),
        Just(ModelKind::AsymmetricSlits),
        Just(ModelKind::PlaneWave),
    ]
}

fn config() -> impl Strategy<Value = Configuration> {
    (-40.0..40.0f64, -3.0..3.0f64, -40.0..40.0f64, -3.0..3.0f64, 0.0..100.0f64)
        .prop_map(|(x1, y1, x2, y2, t)| Configuration::new(x1, y1 + t, x2, y2 + t, t))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + f64::MIN_POSITIVE
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exchange_symmetry(c in config(), kind in prop_oneof![
        Just(ModelKind::DoubleSlit), Just(ModelKind::DoubleSlitFree), Just(ModelKind::AsymmetricSlits)]) {
        let m = model(kind);
        prop_assert!(close(m.density(&c), m.density(&c.swapped()), 1e-12));
    }

    #[test]
    fn reflection_symmetry(c in config(), kind in prop_oneof![Just(ModelKind::DoubleSlit), Just(ModelKind::DoubleSlitFree)]) {
        let m = model(kind);
        prop_assert!(close(m.density(&c), m.density(&c.reflected()), 1e-12));
    }

    #[test]
    fn density_is_amplitude_squared(c in config(), kind in any_kind()) {
        let e = model(kind).evaluate(&c).unwrap();
        prop_assert_eq!(e.density, e.amplitude * e.amplitude);
        prop_assert!(e.amplitude >= 0.0);
    }

    #[test]
    fn collimated_transverse_velocities_cancel(c in config()) {
        let m = model(ModelKind::DoubleSlit);
        prop_assume!(m.density(&c) > m.node_floor());
        let v = velocity(&m, &c).unwrap();
        prop_assert_eq!(v[0], -v[2]);
        let speed = m.params().v();
        prop_assert!(close(v[1], speed, 1e-14) && close(v[3], speed, 1e-14));
    }

    #[test]
    fn indistinguishable_hits_are_label_free(
        lo1 in -50.0..50.0f64, w1 in 0.1..30.0f64, lo2 in -50.0..50.0f64, w2 in 0.1..30.0f64,
        x1 in -80.0..80.0f64, x2 in -80.0..80.0f64,
    ) {
        let g = DetectorGeometry::new(Interval::new(lo1, lo1 + w1), Interval::new(lo2, lo2 + w2));
        prop_assert_eq!(g.is_hit(x1, x2), g.is_hit(x2, x1));
        prop_assert_eq!(g.is_hit(x1, x2), g.swapped().is_hit(x1, x2));
        let ordered = DetectorGeometry { counting: Counting::Ordered, ..g };
        prop_assert!(!ordered.is_hit(x1, x2) || g.is_hit(x1, x2));
    }

    #[test]
    fn chi_square_bounds(counts in prop::collection::vec(0u64..500, 2..30)) {
        let total: u64 = counts.iter().sum();
        prop_assume!(total > 0);
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        if let Some(chi) = chi_square_pooled(&counts, &probs, 0, 5.0) {
            // observed equals expected up to rounding
            prop_assert!(chi.statistic < 1e-9);
            prop_assert!(chi.p_value > 0.999 && chi.p_value <= 1.0);
        }
        let flat = vec![1.0 / counts.len() as f64; counts.len()];
        if let Some(chi) = chi_square_pooled(&counts, &flat, 0, 5.0) {
            prop_assert!(chi.statistic >= 0.0);
            prop_assert!((0.0..=1.0).contains(&chi.p_value));
        }
    }

    #[test]
    fn quadrature_exact_on_quintics(c in prop::array::uniform6(-3.0..3.0f64), a in -5.0..0.0f64, w in 0.1..8.0f64) {
        let b = a + w;
        let f = |x: f64| c.iter().rev().fold(0.0, |acc, &k| acc * x + k);
        let anti = |x: f64| c.iter().enumerate().map(|(i, &k)| k * x.powi(i as i32 + 1) / (i as f64 + 1.0)).sum::<f64>();
        let got = integrate(f, a, b, Tolerance::default()).unwrap().value;
        let want = anti(b) - anti(a);
        prop_assert!((got - want).abs() < 1e-9 * want.abs().max(1.0));
    }

    #[test]
    fn growth_closed_form_matches_ode(frac in 0.0..1.0f64, v in 1.0..1e10f64, length in 1.0..1e3f64) {
        let t = frac * length / v;
        let (a, b) = (growth_factor(t, v, length), growth_factor_ode(t, v, length));
        prop_assert!(close(a, b, 1e-9));
    }

    #[test]
    fn spreading_is_monotone(s in 1e-5..10.0f64, t1 in 0.0..100.0f64, dt in 0.0..100.0f64) {
        let (a, b) = (spreading_ratio(s, t1, 1.0, 1.0), spreading_ratio(s, t1 + dt, 1.0, 1.0));
        prop_assert!(a >= 1.0 && b >= a);
    }

    #[test]
    fn constant_time_mean_is_exact(x0 in 0.0..1.0f64, k in -5.0..5.0f64, n in 1usize..5000) {
        let f = Observable::new("k", move |_| k);
        let m = time_mean(&Rotation::golden(), &f, &[x0], n).unwrap();
        prop_assert_eq!(m.value, k);
    }

    #[test]
    fn scenario_round_trips(
        seed in any::<u64>(), n in 1usize..1_000_000, t0 in 0.0..50.0f64, delta in -1.0..1.0f64,
        kind in any_kind(), max_step in prop_oneof![Just(f64::INFINITY), 1e-3..10.0f64],
        tol in 1e-14..1e-3f64, sigma in 0.5..3.0f64,
    ) {
        let mut cfg = ScenarioConfig::natural();
        cfg.seed = seed;
        cfg.gibbs.n = n;
        cfg.constrained.t0 = t0;
        cfg.constrained.delta_law = DeltaLaw::Fixed(delta);
        cfg.model.model_kind = kind;
        cfg.model.sigma0 = sigma;
        cfg.integrator = IntegratorOptions { max_step, scheme: Scheme::Rk4Fixed, ..IntegratorOptions::default().with_tolerance(tol) };
        cfg.detectors = Some(DetectorGeometry::new(Interval::new(delta, 3.0 * sigma), Interval::new(-t0, 0.1)));
        let back = ScenarioConfig::from_json(&cfg.to_json(), "test").unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plane_wave_sum_is_conserved(dx1 in -2.0..2.0f64, dx2 in -2.0..2.0f64, y in -1.0..1.0f64) {
        let m = model(ModelKind::PlaneWave);
        let a = m.params().a;
        let c = Configuration::new(0.5 * a + dx1, y, -0.5 * a + dx2, -y, 0.0);
        let tr = integrate_trajectory(&m, &c, 10.0 * m.params().flight_time(), &IntegratorOptions::default()).unwrap();
        prop_assert!(tr.flags.reached_detector);
        prop_assert!(tr.max_sum_drift < 1e-12, "{}", tr.max_sum_drift);
    }

    #[test]
    fn collimated_sum_is_conserved(delta in -1.0..1.0f64, u in -3.0..3.0f64, t0 in 0.0..20.0f64) {
        let m = model(ModelKind::DoubleSlit);
        let a = m.params().a;
        let x1 = 0.5 * (a + delta) + u;
        let c = Configuration::new(x1, m.params().v() * t0, delta - x1, m.params().v() * t0, t0);
        prop_assume!(m.density(&c) > 1e3 * m.node_floor());
        let tr = integrate_trajectory(&m, &c, t0 + 10.0 * m.params().flight_time(), &IntegratorOptions::default()).unwrap();
        prop_assume!(!tr.flags.node_abort);
        prop_assert!(tr.max_sum_drift < 1e-10, "{}", tr.max_sum_drift);
        prop_assert!(!tr.flags.crossed_axis);
    }

    #[test]
    fn ensemble_members_are_prefix_stable(seed in any::<u64>(), constrained in any::<bool>()) {
        let m = model(ModelKind::DoubleSlit);
        let spec = |n| if constrained { EnsembleSpec::constrained(n, seed) } else { EnsembleSpec::gibbs(n, seed) };
        let small = sample_initial(&m, &spec(8)).unwrap();
        let large = sample_initial(&m, &spec(16)).unwrap();
        prop_assert_eq!(&small.configurations[..], &large.configurations[..8]);
        for c in &small.configurations {
            if constrained {
                prop_assert!(c.sum_x().abs() <= 0.5 * m.params().d + 1e-12);
            }
        }
    }
}

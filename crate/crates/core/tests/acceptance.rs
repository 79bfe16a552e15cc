//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. The 10^5-member ensembles are drawn once from the shipped
//! `constrained_sameside` preset and shared between criteria 4 and 5.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bohm_ergo::cli::config::preset;
use bohm_ergo::design::{growth_factor, growth_factor_ode, spreading_ratio};
use bohm_ergo::detection::{
    arrival_joint_prob, report_from_parts, run_to_detector, trajectory_joint_prob, DetectorGeometry, Interval, Verdict,
};
use bohm_ergo::dynamics::{integrate_trajectory, IntegratorOptions};
use bohm_ergo::ensemble::{equivariance_test, evolve_ensemble, sample_initial, DeltaLaw, EnsembleSpec, TrajectorySummary};
use bohm_ergo::ergodic::{
    ergodicity_test, BohmPair, ErgodicOptions, ErgodicVerdict, Observable, Rotation, SpaceMethod, TwoPiece,
};
use bohm_ergo::wavefunction::{Configuration, ModelKind, PhysicalParams, TwoParticleWaveFunction};
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn natural(kind: ModelKind) -> TwoParticleWaveFunction {
    TwoParticleWaveFunction::build(PhysicalParams::natural().with_kind(kind)).unwrap()
}

fn far_field_drift(m: &TwoParticleWaveFunction, starts: &[Configuration], tol: f64) -> f64 {
    let opts = IntegratorOptions::default().with_tolerance(tol);
    let t_final = starts[0].t + 10.0 * m.params().flight_time();
    starts
        .iter()
        .map(|c| {
            let tr = integrate_trajectory(m, c, t_final, &opts).unwrap();
            assert!(tr.flags.reached_detector && !tr.flags.node_abort);
            tr.max_sum_drift
        })
        .fold(0.0, f64::max)
}

fn constant_of_motion() -> Outcome {
    let pw = natural(ModelKind::PlaneWave);
    let a = pw.params().a;
    let c = Configuration::new(0.5 * a + 0.3, 0.0, -0.5 * a - 0.1, 0.0, 0.0);
    let tr = integrate_trajectory(&pw, &c, 10.0 * pw.params().flight_time(), &IntegratorOptions::default()).unwrap();
    let pw_drift = tr.max_sum_drift;

    // delta_n = 0 launches with both particles past the far-field onset
    let m = natural(ModelKind::DoubleSlit);
    let d = m.params().d;
    let t0 = (m.params().far_field_onset() + 6.0 * m.params().sigma_long()) / m.params().v();
    let spec = EnsembleSpec {
        t0,
        delta_law: DeltaLaw::Fixed(0.0),
        ..EnsembleSpec::constrained(20, 101)
    };
    let starts = sample_initial(&m, &spec).unwrap().configurations;
    assert!(starts.iter().all(|c| m.is_far_field(c)));
    let (full, half) = (far_field_drift(&m, &starts, 1e-8), far_field_drift(&m, &starts, 5e-9));
    // rounding floor of x1 + x2 at |x| ~ a
    let floor = 1e-15 * m.params().a;
    let halving = half <= 0.5 * full + floor;

    outcome(
        pw_drift < 1e-12 && full < 1e-6 * d && halving,
        format!(
            "plane-wave drift {pw_drift:.2e} < 1e-12; double_slit drift {full:.2e} (tol 1e-8) -> {half:.2e} (tol 5e-9), \
             bound {:.1e}, {} launches",
            1e-6 * d,
            starts.len()
        ),
    )
}

fn non_crossing() -> Outcome {
    let cfg = preset("constrained").unwrap();
    let m = TwoParticleWaveFunction::build(cfg.model.clone()).unwrap();
    let spec = cfg.constrained_spec();
    let start = sample_initial(&m, &spec).unwrap();
    let (_, runs) = evolve_ensemble(&m, &start, spec.t0 + 10.0 * m.params().flight_time(), &cfg.integrator).unwrap();
    let crossings = runs.iter().filter(|s| s.crossed_axis).count();
    let lost = runs.iter().filter(|s| s.lost()).count();
    let reached = runs.iter().filter(|s| s.reached_detector).count();
    let closest = runs.iter().map(|s| s.min_axis_distance).fold(f64::INFINITY, f64::min);
    outcome(
        runs.len() == 1000 && crossings == 0 && lost == 0 && reached == 1000,
        format!("{} trajectories, {crossings} crossings, {lost} lost, closest approach to axis {closest:.3}", runs.len()),
    )
}

fn equivariance() -> Outcome {
    let cfg = preset("natural").unwrap();
    let m = TwoParticleWaveFunction::build(cfg.model.clone()).unwrap();
    let spec = EnsembleSpec {
        n: 100_000,
        ..cfg.gibbs_spec()
    };
    let r = equivariance_test(&m, &spec, m.params().flight_time(), 50, &cfg.integrator).unwrap();
    outcome(
        r.pass && r.lost == 0,
        format!(
            "n = {}, lost {}, chi2 = {:.1} on {} dof ({} cells pooled), p = {:.3} > 0.01",
            r.n, r.lost, r.chi_square.statistic, r.chi_square.dof, r.chi_square.pooled_cells, r.chi_square.p_value
        ),
    )
}

fn geometries() -> [(&'static str, DetectorGeometry); 3] {
    let g = |a: f64, b: f64, c: f64, d: f64| DetectorGeometry::new(Interval::new(a, b), Interval::new(c, d));
    [
        ("same-side [5,40]x[45,80]", g(5.0, 40.0, 45.0, 80.0)),
        ("mirror [5,60]x[-60,-5]", g(5.0, 60.0, -60.0, -5.0)),
        ("straddle [-30,10]x[20,70]", g(-30.0, 10.0, 20.0, 70.0)),
    ]
}

/// RMS over blocks of `size` of the deviation from `p`, in units of the
/// binomial standard error `sqrt(p(1-p)/size)`.
fn block_rms_ratio(hits: &[bool], size: usize, p: f64) -> f64 {
    let blocks: Vec<f64> = hits
        .chunks_exact(size)
        .map(|b| b.iter().filter(|&&h| h).count() as f64 / size as f64)
        .collect();
    let ms = blocks.iter().map(|q| (q - p).powi(2)).sum::<f64>() / blocks.len() as f64;
    ms.sqrt() / (p * (1.0 - p) / size as f64).sqrt()
}

fn estimator_agreement(m: &TwoParticleWaveFunction, gibbs: &[TrajectorySummary]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let usable: Vec<&TrajectorySummary> = gibbs.iter().filter(|s| !s.lost() && s.reached_detector).collect();
    pass &= usable.len() == gibbs.len();
    for (i, (name, geom)) in geometries().into_iter().enumerate() {
        let space = arrival_joint_prob(m, &geom).unwrap();
        let est = trajectory_joint_prob(gibbs, &geom).unwrap();
        let z = (est.p - space.p) / (space.p * (1.0 - space.p) / est.trials as f64).sqrt();
        pass &= z.abs() < 3.0;
        parts.push(format!("{name}: p_space {:.5}, p_gibbs {:.5}, z {z:+.2}", space.p, est.p));
        // error scaling on the first geometry
        if i == 0 {
            let hits: Vec<bool> = usable.iter().map(|s| geom.is_hit(s.end.x1, s.end.x2)).collect();
            let r3 = block_rms_ratio(&hits, 1_000, space.p);
            let r4 = block_rms_ratio(&hits, 10_000, space.p);
            let r5 = z.abs();
            pass &= (0.5..=2.0).contains(&r3) && (0.5..=2.0).contains(&r4) && r5 <= 3.0;
            parts.push(format!(
                "error / sqrt(p(1-p)/n): n=1e3 {r3:.2} (100 blocks), n=1e4 {r4:.2} (10 blocks), n=1e5 {r5:.2}"
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn incompatibility(
    m: &TwoParticleWaveFunction,
    gibbs: (&EnsembleSpec, &[TrajectorySummary]),
    time: (&EnsembleSpec, &[TrajectorySummary]),
) -> Outcome {
    let cfg = preset("constrained_sameside").unwrap();
    let geom = cfg.detectors.unwrap();
    let r = report_from_parts(m, &geom, gibbs, time, &cfg.thresholds).unwrap();
    let guard_ok = geom.same_side(time.0.width(m), m.params().d);
    outcome(
        r.p_time.hits == 0
            && r.p_time.trials == 100_000
            && r.p_space.p > 1e-3
            && guard_ok
            && r.verdict == Verdict::Incompatible,
        format!(
            "constrained joint count {} / {}; p_space {:.5} > 1e-3; p_gibbs {:.5} (z {:.2}); same side with guard d: {guard_ok}; \
             verdict {:?}",
            r.p_time.hits, r.p_time.trials, r.p_space.p, r.p_gibbs.p, r.z_gibbs, r.verdict
        ),
    )
}

fn near_field_growth() -> Outcome {
    let p = PhysicalParams::electron();
    let (v, length) = (p.v(), p.length);
    let t_end = length / v;
    let worst = (0..=100)
        .map(|k| {
            let t = t_end * k as f64 / 100.0;
            let (a, b) = (growth_factor(t, v, length), growth_factor_ode(t, v, length));
            ((a - b) / a).abs()
        })
        .fold(0.0, f64::max);
    let at_end = (growth_factor(t_end, v, length) - std::f64::consts::E).abs();
    outcome(
        worst < 1e-9 && at_end < 1e-12,
        format!("max relative closed-form/ODE gap {worst:.2e} < 1e-9 on [0, L/v]; |g(L/v) - e| = {at_end:.1e} < 1e-12"),
    )
}

fn spreading() -> Outcome {
    let p = PhysicalParams::electron();
    let s = spreading_ratio(p.sigma0, p.flight_time(), p.mass, p.hbar);
    outcome(
        (s - 1.0104).abs() <= 5e-4 && s <= 1.05,
        format!("sigma_t/sigma0 = {s:.6} (1.0104 +/- 0.0005), below 1.05"),
    )
}

fn ergodic_toolkit() -> Outcome {
    let cosine = || Observable::new("cos", |x: &[f64]| (2.0 * std::f64::consts::PI * x[0]).cos());
    let opts = ErgodicOptions {
        n_steps: 1_000_000,
        tol: 1e-3,
        space_method: SpaceMethod::Quadrature { tol: 1e-11 },
        witness_samples: 20,
        witness_steps: 5,
        seed: 8,
    };

    let rot = Rotation::golden();
    let half = bohm_ergo::ergodic::Indicator::new("x<1/2", |x| x[0] < 0.5);
    let starts: Vec<Vec<f64>> = [0.05, 0.3, 0.55, 0.8].iter().map(|&x| vec![x]).collect();
    let fs = [cosine(), half.as_observable()];
    let r1 = ergodicity_test(&rot, &fs, &starts, std::slice::from_ref(&half), &opts).unwrap();

    let tp = TwoPiece::default();
    let piece = TwoPiece::first_piece();
    let starts: Vec<Vec<f64>> = [0.1, 0.6, 2.1, 2.6].iter().map(|&x| vec![x]).collect();
    let fs = [cosine(), piece.as_observable()];
    let r2 = ergodicity_test(&tp, &fs, &starts, std::slice::from_ref(&piece), &opts).unwrap();

    let m = natural(ModelKind::DoubleSlit);
    let spec = EnsembleSpec {
        t0: 5.0,
        ..EnsembleSpec::constrained(200, 9)
    };
    let pair = BohmPair::new(&m, &spec, 10.0, IntegratorOptions::default()).unwrap();
    let side = BohmPair::side_indicator();
    let fs = [side.as_observable()];
    let bohm_opts = ErgodicOptions {
        n_steps: 20,
        space_method: SpaceMethod::MonteCarlo { n: 10_000, seed: 9 },
        ..opts
    };
    let r3 = ergodicity_test(&pair, &fs, &pair.starts(2), std::slice::from_ref(&side), &bohm_opts).unwrap();

    let verified = |r: &bohm_ergo::ergodic::ErgodicReport| r.witness.as_ref().is_some_and(|w| w.verified());
    outcome(
        r1.verdict == ErgodicVerdict::Ergodic
            && r2.verdict == ErgodicVerdict::Decomposable
            && verified(&r2)
            && r3.verdict == ErgodicVerdict::Decomposable
            && verified(&r3),
        format!(
            "rotation {:?} (max |f* - <f>| {:.1e}, N = 1e6); two_piece {:?} (witness {}); bohm_pair {:?} (witness {}, \
             time-mean spread {:.2})",
            r1.verdict,
            r1.functions.iter().map(|f| f.max_deviation).fold(0.0, f64::max),
            r2.verdict,
            verified(&r2),
            r3.verdict,
            r3.witness.as_ref().map_or("none".into(), |w| w.indicator.clone()),
            r3.functions[0].spread
        ),
    )
}

fn run_cli(args: &[&str], cwd: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_bohm-ergo"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn strip_timing(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_s");
    v
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let scenarios: [&[&str]; 5] = [
        &["simulate", "--preset", "constrained", "--n", "300"],
        &["detect", "--preset", "constrained_sameside", "--n", "3000"],
        &["equivariance", "--n", "5000"],
        &["ergodic", "--system", "bohm_pair"],
        &["design", "--preset", "electron"],
    ];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (i, args) in scenarios.iter().enumerate() {
        // same --out path for both runs, so the echoed configs match too
        let dirs: Vec<String> = ["1", "4"].iter().map(|t| format!("run{i}_t{t}")).collect();
        for (dir, threads) in dirs.iter().zip(["1", "4"]) {
            let mut full: Vec<&str> = args.to_vec();
            full.extend(["--seed", "2024", "--threads", threads, "--out", "out"]);
            if !run_cli(&full, root) {
                mismatches.push(format!("{} failed", args[0]));
            }
            std::fs::rename(root.join("out"), root.join(dir)).unwrap();
        }
        let (a, b) = (root.join(&dirs[0]), root.join(&dirs[1]));
        let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for name in names {
            let (pa, pb) = (a.join(&name), b.join(&name));
            let same = if name.to_string_lossy().ends_with(".json") {
                strip_timing(&pa) == strip_timing(&pb)
            } else {
                std::fs::read(&pa).unwrap() == std::fs::read(&pb).unwrap()
            };
            compared += 1;
            if !same {
                mismatches.push(format!("{}/{}", args[0], name.to_string_lossy()));
            }
        }
    }
    outcome(
        mismatches.is_empty() && compared >= 15,
        format!(
            "{compared} output files compared across --threads 1 and 4 (JSON without wall_clock_s); mismatches: {}",
            if mismatches.is_empty() { "none".into() } else { mismatches.join(", ") }
        ),
    )
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "[{}] {id} {name}: {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((id, name, o));
    };

    record(1, "constant of motion", &mut constant_of_motion);
    record(2, "non-crossing", &mut non_crossing);
    record(3, "equivariance", &mut equivariance);

    let cfg = preset("constrained_sameside").unwrap();
    let m = TwoParticleWaveFunction::build(cfg.model.clone()).unwrap();
    let (spec_g, spec_c) = (cfg.gibbs_spec(), cfg.constrained_spec());
    assert_eq!((spec_g.n, spec_c.n), (100_000, 100_000));
    let gibbs = run_to_detector(&m, &spec_g, &cfg.integrator).unwrap();
    let constrained = run_to_detector(&m, &spec_c, &cfg.integrator).unwrap();
    record(4, "estimator agreement", &mut || estimator_agreement(&m, &gibbs));
    record(5, "incompatibility", &mut || incompatibility(&m, (&spec_g, &gibbs), (&spec_c, &constrained)));

    record(6, "near-field growth", &mut near_field_growth);
    record(7, "spreading", &mut spreading);
    record(8, "ergodic toolkit", &mut ergodic_toolkit);
    record(9, "reproducibility", &mut reproducibility);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} / {} criteria pass ({:.0} s){}",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failing: {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

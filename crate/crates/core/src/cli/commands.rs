use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use super::config::{ScenarioConfig, SystemName};
use super::output::RunDir;
use super::{CliError, Command};
use crate::design::feasibility_check;
use crate::detection::{report_from_parts, run_to_detector, write_arrivals_csv, DetectionError, FLIGHT_HORIZON};
use crate::dynamics::{integrate_trajectory, DynamicsError, IntegratorOptions};
use crate::ensemble::{
    equivariance_test, evolve_ensemble, sample_initial, EnsembleError, EnsembleSpec, EnsembleSummary, SamplingMode,
    TrajectorySummary,
};
use crate::ergodic::{
    ergodicity_test, BohmPair, ErgodicError, ErgodicOptions, Indicator, Observable, Rotation,
    SpaceMethod, TwoPiece, GOLDEN,
};
use crate::wavefunction::TwoParticleWaveFunction;

pub fn dispatch(command: Command, cfg: &ScenarioConfig) -> Result<(), CliError> {
    let model = cfg.validate()?;
    match command {
        Command::Simulate => simulate(cfg, &model),
        Command::Detect => detect(cfg, &model),
        Command::Ergodic => ergodic(cfg, &model),
        Command::Design => design(cfg),
        Command::Equivariance => equivariance(cfg, &model),
    }
}

fn ensemble_error(e: EnsembleError) -> CliError {
    match e {
        EnsembleError::InvalidSpec(s) => CliError::Config(s),
        EnsembleError::Dynamics(e) => dynamics_error(e),
        other => CliError::Numerical(other.to_string()),
    }
}

fn dynamics_error(e: DynamicsError) -> CliError {
    match e {
        DynamicsError::InvalidRequest(s) => CliError::Config(s),
        other => CliError::Numerical(other.to_string()),
    }
}

fn detection_error(e: DetectionError) -> CliError {
    match e {
        DetectionError::InvalidGeometry(s) => CliError::Config(format!("field `detectors`: {s}")),
        DetectionError::Ensemble(e) => ensemble_error(e),
        other => CliError::Numerical(other.to_string()),
    }
}

fn ergodic_error(e: ErgodicError) -> CliError {
    match e {
        ErgodicError::InvalidRequest(s) | ErgodicError::Unsupported(s) => CliError::Config(s),
        other => CliError::Numerical(other.to_string()),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    model: &'static str,
    spec: EnsembleSpec,
    initial: EnsembleSummary,
    t_final: f64,
    n: usize,
    reached_detector: usize,
    lost: usize,
    node_aborts: usize,
    step_underflows: usize,
    crossings: usize,
    max_sum_drift: f64,
    mean_sum_drift: f64,
    min_axis_distance: f64,
    mean_steps: f64,
    recorded: usize,
}

fn simulate(cfg: &ScenarioConfig, model: &TwoParticleWaveFunction) -> Result<(), CliError> {
    let run = RunDir::create(cfg, "simulate")?;
    let spec = cfg.spec(cfg.simulate.ensemble);
    let initial = sample_initial(model, &spec).map_err(ensemble_error)?;
    let t_final = cfg
        .simulate
        .t_final
        .unwrap_or(spec.t0 + FLIGHT_HORIZON * model.params().flight_time());
    let (_, summaries) = evolve_ensemble(model, &initial, t_final, &cfg.integrator).map_err(ensemble_error)?;
    run.csv("initial.csv", |w| initial.write_csv(w))?;
    run.csv("final.csv", |w| write_final_csv(w, &summaries))?;

    let recorded = cfg.simulate.record.min(initial.len());
    let opts = IntegratorOptions {
        record: true,
        ..cfg.integrator
    };
    let trajectories = initial.configurations[..recorded]
        .iter()
        .map(|c| integrate_trajectory(model, c, t_final, &opts))
        .collect::<Result<Vec<_>, _>>()
        .map_err(dynamics_error)?;
    run.csv("trajectories.csv", |w| {
        for (i, tr) in trajectories.iter().enumerate() {
            tr.write_csv(&mut *w, Some(i), i == 0)?;
        }
        if trajectories.is_empty() {
            writeln!(w, "traj_id,t,x1,y1,x2,y2,sum_x,flag_node,flag_cross")?;
        }
        Ok(())
    })?;

    let n = summaries.len();
    let count = |f: fn(&TrajectorySummary) -> bool| summaries.iter().filter(|s| f(s)).count();
    let summary = SimulateSummary {
        model: model.kind().name(),
        spec,
        initial: initial.summary(),
        t_final,
        n,
        reached_detector: count(|s| s.reached_detector),
        lost: count(|s| s.lost()),
        node_aborts: count(|s| s.node_abort),
        step_underflows: count(|s| s.step_underflow),
        crossings: count(|s| s.crossed_axis),
        max_sum_drift: summaries.iter().map(|s| s.max_sum_drift).fold(0.0, f64::max),
        mean_sum_drift: summaries.iter().map(|s| s.max_sum_drift).sum::<f64>() / n as f64,
        min_axis_distance: summaries.iter().map(|s| s.min_axis_distance).fold(f64::INFINITY, f64::min),
        mean_steps: summaries.iter().map(|s| s.steps as f64).sum::<f64>() / n as f64,
        recorded,
    };
    run.report(&summary)?;
    println!(
        "simulate: n = {n}, reached = {}, lost = {}, crossings = {}, max drift = {:e}",
        summary.reached_detector, summary.lost, summary.crossings, summary.max_sum_drift
    );
    Ok(())
}

fn write_final_csv<W: Write>(w: &mut W, summaries: &[TrajectorySummary]) -> std::io::Result<()> {
    writeln!(
        w,
        "member_id,t,x1,y1,x2,y2,delta0,max_sum_drift,min_axis_distance,crossed_axis,node_abort,reached_detector,step_underflow,steps"
    )?;
    for s in summaries {
        let e = &s.end;
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{},{},{}",
            s.member,
            e.t,
            e.x1,
            e.y1,
            e.x2,
            e.y2,
            s.delta0,
            s.max_sum_drift,
            s.min_axis_distance,
            s.crossed_axis as u8,
            s.node_abort as u8,
            s.reached_detector as u8,
            s.step_underflow as u8,
            s.steps
        )?;
    }
    Ok(())
}

fn detect(cfg: &ScenarioConfig, model: &TwoParticleWaveFunction) -> Result<(), CliError> {
    let geom = cfg
        .detectors
        .ok_or_else(|| CliError::Config("field `detectors`: required by detect".into()))?;
    let run = RunDir::create(cfg, "detect")?;
    let spec_gibbs = cfg.gibbs_spec();
    let spec_time = cfg.spec(cfg.detect.time_ensemble);
    let gibbs = run_to_detector(model, &spec_gibbs, &cfg.integrator).map_err(detection_error)?;
    run.csv("arrivals_gibbs.csv", |w| write_arrivals_csv(w, &gibbs, &geom))?;
    let time = if cfg.detect.time_ensemble == SamplingMode::Gibbs {
        gibbs.clone()
    } else {
        let time = run_to_detector(model, &spec_time, &cfg.integrator).map_err(detection_error)?;
        run.csv("arrivals_time.csv", |w| write_arrivals_csv(w, &time, &geom))?;
        time
    };
    let report = report_from_parts(model, &geom, (&spec_gibbs, &gibbs), (&spec_time, &time), &cfg.thresholds)
        .map_err(detection_error)?;
    run.report(&report)?;
    println!("p_space = {:.6e} (+/- {:.1e})", report.p_space.p, report.p_space.error);
    println!(
        "p_gibbs = {:.6e} (+/- {:.1e}, {} / {})",
        report.p_gibbs.p, report.p_gibbs.standard_error, report.p_gibbs.hits, report.p_gibbs.trials
    );
    println!(
        "p_time  = {:.6e} (+/- {:.1e}, {} / {})",
        report.p_time.p, report.p_time.standard_error, report.p_time.hits, report.p_time.trials
    );
    println!("verdict = {}", serde_json::to_string(&report.verdict).unwrap_or_default().trim_matches('"'));
    Ok(())
}

fn equivariance(cfg: &ScenarioConfig, model: &TwoParticleWaveFunction) -> Result<(), CliError> {
    let run = RunDir::create(cfg, "equivariance")?;
    let spec = cfg.gibbs_spec();
    let t_final = cfg.equivariance.t_final.unwrap_or(spec.t0 + model.params().flight_time());
    let report =
        equivariance_test(model, &spec, t_final, cfg.equivariance.bins, &cfg.integrator).map_err(ensemble_error)?;
    run.report(&report)?;
    println!(
        "equivariance: n = {}, lost = {}, chi2 = {:.2} (dof {}), p = {:.4}, pass = {}",
        report.n,
        report.lost,
        report.chi_square.statistic,
        report.chi_square.dof,
        report.chi_square.p_value,
        report.pass
    );
    Ok(())
}

fn design(cfg: &ScenarioConfig) -> Result<(), CliError> {
    let run = RunDir::create(cfg, "design")?;
    let report = feasibility_check(&cfg.design_inputs());
    run.report(&report)?;
    println!("flight time L/v        {:.6e}", report.flight_time);
    println!("wavelength             {:.6e}", report.wavelength);
    println!("far-field onset d^2/l  {:.6e}", report.fraunhofer_onset);
    println!("{:<22} {:>13} {:>13} {:>9}  pass", "check", "value", "limit", "margin");
    for (name, c) in [
        ("spreading ratio", report.spreading),
        ("far-field onset", report.fraunhofer),
        ("growth at onset", report.growth_at_onset),
        ("constraint band", report.constraint_band),
    ] {
        println!("{name:<22} {:>13.6e} {:>13.6e} {:>9.3}  {}", c.value, c.limit, c.margin, c.pass);
    }
    println!("all checks pass: {}", report.all_pass());
    Ok(())
}

fn ergodic(cfg: &ScenarioConfig, model: &TwoParticleWaveFunction) -> Result<(), CliError> {
    let e = &cfg.ergodic;
    let run = RunDir::create(cfg, "ergodic")?;
    let m = e.starts_per_side;
    let offsets: Vec<f64> = (0..m).map(|i| (i as f64 + 0.25) / m as f64).collect();
    let alpha = e.alpha.unwrap_or(GOLDEN);
    let circle_steps = e.n_steps.unwrap_or(1_000_000);
    let circle_opts = ErgodicOptions {
        n_steps: circle_steps,
        tol: e.tol,
        space_method: SpaceMethod::Quadrature { tol: 1e-11 },
        witness_samples: e.witness_samples,
        witness_steps: e.witness_steps,
        seed: cfg.seed,
    };
    let report = match e.system {
        SystemName::Rotation => {
            let sys = Rotation { alpha };
            let starts: Vec<Vec<f64>> = (0..2 * m).map(|i| vec![(i as f64 + 0.25) / (2 * m) as f64]).collect();
            let half = Indicator::new("x<1/2", |x| x[0] < 0.5);
            let functions = circle_functions(Some(half.as_observable()));
            ergodicity_test(&sys, &functions, &starts, std::slice::from_ref(&half), &circle_opts)
        }
        SystemName::TwoPiece => {
            let sys = TwoPiece { alpha };
            let starts: Vec<Vec<f64>> = offsets.iter().flat_map(|&u| [vec![u], vec![2.0 + u]]).collect();
            let piece = TwoPiece::first_piece();
            let functions = circle_functions(Some(piece.as_observable()));
            ergodicity_test(&sys, &functions, &starts, std::slice::from_ref(&piece), &circle_opts)
        }
        SystemName::BohmPair => {
            let spec = EnsembleSpec {
                n: e.pool,
                t0: e.t0,
                ..cfg.constrained_spec()
            };
            let sys = BohmPair::new(model, &spec, e.strobe_dt, cfg.integrator).map_err(ergodic_error)?;
            let starts = sys.starts(m);
            if starts.len() < 2 * m {
                return Err(CliError::Numerical(format!(
                    "pool of {} has fewer than {m} members on one side",
                    e.pool
                )));
            }
            let side = BohmPair::side_indicator();
            let a = model.params().a;
            let functions = vec![
                side.as_observable(),
                Observable::new("tanh((x1-x2)/a)", move |x| ((x[0] - x[2]) / a).tanh()),
            ];
            let opts = ErgodicOptions {
                n_steps: e.n_steps.unwrap_or(20),
                space_method: SpaceMethod::MonteCarlo {
                    n: 50 * e.pool,
                    seed: cfg.seed,
                },
                ..circle_opts
            };
            ergodicity_test(&sys, &functions, &starts, std::slice::from_ref(&side), &opts)
        }
    }
    .map_err(ergodic_error)?;
    run.report(&report)?;
    for f in &report.functions {
        println!(
            "{}: space mean {:.6}, time-mean spread {:.3e}, max deviation {:.3e}",
            f.function, f.space_mean.value, f.spread, f.max_deviation
        );
    }
    println!("verdict = {}", serde_json::to_string(&report.verdict).unwrap_or_default().trim_matches('"'));
    Ok(())
}

fn circle_functions(extra: Option<Observable<'_>>) -> Vec<Observable<'_>> {
    let mut f = vec![
        Observable::new("cos(2 pi x)", |x| (2.0 * PI * x[0]).cos()),
        Observable::new("sin^2(2 pi x)", |x| (2.0 * PI * x[0]).sin().powi(2)),
    ];
    f.extend(extra);
    f
}

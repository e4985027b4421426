use num_complex::Complex64;
use orbitlab_core::closed_form::{self, Family, TiredSpiralSpec, Tracking};
use orbitlab_core::dynamics::{CartesianState, DerivedConstants};
use orbitlab_core::integrator::{self, Formulation, StepStats, StopReason, Trajectory};
use orbitlab_core::monitors::{run_suite, CheckReport, MonitorConfig};
use orbitlab_core::series::{self, GrowthRow};
use serde::Serialize;

use crate::config::{resolve_control, FileConfig, FormulationKind, Initial, Scenario};
use crate::output::{self, emit, num, to_json};
use crate::{ClosedFormArgs, CliError, ScenarioArgs, SeriesArgs, VerifyArgs};
use crate::{EXIT_CHECK_FAILED, EXIT_EARLY_STOP, EXIT_OK};

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Integrate a resolved scenario in its formulation.
pub fn integrate(sc: &Scenario) -> Result<Trajectory, CliError> {
    let p = sc.model.effective_params(sc.params);
    let ctl = &sc.control;
    let mut traj = match (sc.formulation, sc.initial) {
        (FormulationKind::Cartesian, Initial::Cartesian { u0, v0 }) => {
            let s0 = CartesianState::new(0.0, Complex64::new(u0[0], u0[1]), Complex64::new(v0[0], v0[1]));
            integrator::integrate_cartesian(&s0, &p, ctl, sc.t_end, sc.r_min, sc.model)
        }
        (FormulationKind::Radial, Initial::Radial { r0, rdot0, momentum }) => {
            integrator::integrate_radial(r0, rdot0, &p, momentum, ctl, sc.t_end, sc.r_min)
        }
        (FormulationKind::Scaled, Initial::Radial { r0, rdot0, momentum }) => {
            // ρ = r e^{2δt}, so at t = 0: ρ = r and ρ' = r' + 2δr
            integrator::integrate_scaled_radial(r0, rdot0 + 2.0 * p.delta * r0, &p, momentum, ctl, sc.t_end, sc.r_min)
        }
        _ => return Err(usage("invalid value for `formulation`: initial data do not match")),
    }
    .map_err(usage)?;
    traj.model = sc.model;
    Ok(traj)
}

fn early_stop_message(traj: &Trajectory) {
    eprintln!("integration stopped early at t = {}: {}", num(traj.last().t), traj.stop.name());
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    scenario: &'a Scenario,
    formulation: Formulation,
    derived: DerivedConstants,
    stop: StopReason,
    stats: StepStats,
    samples: usize,
    t_final: f64,
    r_final: f64,
    max_r: f64,
}

fn simulation_report(sc: &Scenario, traj: &Trajectory) -> String {
    to_json(&SimulationReport {
        scenario: sc,
        formulation: traj.formulation,
        derived: traj.derived,
        stop: traj.stop,
        stats: traj.stats,
        samples: traj.samples.len(),
        t_final: traj.last().t,
        r_final: traj.last().r,
        max_r: traj.max_radius(),
    })
}

pub fn simulate(args: &ScenarioArgs) -> Result<i32, CliError> {
    let file = FileConfig::load_opt(args.config.as_deref())?;
    let sc = Scenario::resolve(&file, &args.overrides())?;
    let traj = integrate(&sc)?;
    let o = &sc.outputs;
    emit(o.out.as_deref(), &output::trajectory_csv(&traj))?;
    let report = simulation_report(&sc, &traj);
    match (&o.report, &o.out) {
        (Some(path), _) => emit(Some(path), &report)?,
        (None, Some(_)) => emit(None, &report)?,
        (None, None) => {}
    }
    if let Some(path) = &o.plot {
        emit(Some(path), &output::orbit_svg(&traj))?;
    }
    if traj.stop != StopReason::TimeReached {
        early_stop_message(&traj);
        return Ok(EXIT_EARLY_STOP);
    }
    Ok(EXIT_OK)
}

pub fn monitor_config(file: &FileConfig, check_tol: Option<f64>) -> Result<MonitorConfig, CliError> {
    let mut cfg = file.checks.unwrap_or_default();
    if let Some(tol) = check_tol {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(usage(format!("invalid value for `check_tol`: must be finite and >= 0, got {tol}")));
        }
        cfg.momentum_tol = tol;
        cfg.energy_tol = tol;
        cfg.f_tol = tol;
    }
    if cfg.fd_points < 4 {
        return Err(usage(format!("invalid value for `checks.fd_points`: need >= 4, got {}", cfg.fd_points)));
    }
    for (name, x) in [
        ("checks.window_fraction", cfg.window_fraction),
        ("checks.tail_fraction", cfg.tail_fraction),
    ] {
        if !(x > 0.0 && x <= 1.0) {
            return Err(usage(format!("invalid value for `{name}`: must lie in (0, 1], got {x}")));
        }
    }
    Ok(cfg)
}

fn summarise(reports: &[CheckReport]) {
    for r in reports {
        let verdict = match (r.applicable, r.pass) {
            (false, _) => "SKIP",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        let kind = if r.proxy { " (proxy)" } else { "" };
        let margin = r.worst_margin.map_or_else(|| "-".to_string(), num);
        eprintln!("{verdict} {}{kind}: worst margin {margin}, tolerance {}", r.check, num(r.tolerance));
    }
}

pub fn verify(args: &VerifyArgs) -> Result<i32, CliError> {
    let file = FileConfig::load_opt(args.scenario.config.as_deref())?;
    let sc = Scenario::resolve(&file, &args.scenario.overrides())?;
    let cfg = monitor_config(&file, args.check_tol)?;
    let traj = integrate(&sc)?;
    let reports = run_suite(&traj, &traj.derived, &cfg);
    let o = &sc.outputs;
    if let Some(path) = &o.out {
        emit(Some(path), &output::trajectory_csv(&traj))?;
    }
    if let Some(path) = &o.plot {
        emit(Some(path), &output::orbit_svg(&traj))?;
    }
    emit(o.report.as_deref(), &to_json(&reports))?;
    summarise(&reports);
    if traj.stop != StopReason::TimeReached {
        early_stop_message(&traj);
        return Ok(EXIT_EARLY_STOP);
    }
    Ok(if reports.iter().any(CheckReport::is_hard_failure) { EXIT_CHECK_FAILED } else { EXIT_OK })
}

pub const MAX_SERIES_ORDER: usize = 200;

#[derive(Serialize)]
struct SeriesReport {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "C")]
    c: Vec<String>,
    residual_order: Option<usize>,
    growth: Vec<GrowthRow>,
    growth_fitted_a: Option<f64>,
    /// C_1 = 2 and C_2 = 124, over the coefficients that were computed.
    matches_reference: bool,
}

pub fn series_json(order: usize) -> String {
    let coeffs = series::spiral_coefficients(order);
    let growth = series::growth_report(&coeffs);
    let c = coeffs.as_strings();
    let matches = [(1, "2"), (2, "124")].iter().all(|&(i, v)| c.get(i).is_none_or(|s| s == v));
    to_json(&SeriesReport {
        n: order,
        residual_order: series::residual_order(&coeffs),
        c,
        growth: growth.rows,
        growth_fitted_a: growth.fitted_a,
        matches_reference: matches,
    })
}

pub fn series(args: &SeriesArgs) -> Result<i32, CliError> {
    if args.order > MAX_SERIES_ORDER {
        return Err(usage(format!("invalid value for `order`: at most {MAX_SERIES_ORDER}, got {}", args.order)));
    }
    emit(args.out.as_deref(), &series_json(args.order))?;
    Ok(EXIT_OK)
}

pub const RESIDUAL_SAMPLES: usize = 100;
pub const TRACKING_TOL: f64 = 1e-6;

#[derive(Serialize)]
struct ClosedFormReport {
    spec: TiredSpiralSpec,
    t_end: f64,
    residual_samples: usize,
    max_scaled_residual: f64,
    residual_tolerance: f64,
    residual_pass: bool,
    tracking: Option<Tracking>,
    tracking_tolerance: f64,
    tracking_pass: bool,
    stop: Option<StopReason>,
}

fn closed_form_spec(file: &FileConfig, args: &ClosedFormArgs) -> Result<TiredSpiralSpec, CliError> {
    let f = &file.closed_form;
    let family = args.family.map(Family::from).or(f.family).unwrap_or(Family::Fast);
    let delta = args.delta.or(file.params.delta).unwrap_or(0.1);
    let c = args.c.or(file.params.c).unwrap_or(1.0);
    let spec = TiredSpiralSpec::new(
        family,
        args.amplitude.or(f.amplitude).unwrap_or(1.0),
        args.phase.or(f.phase).unwrap_or(0.0),
        args.sign.or(f.sign).unwrap_or(1.0),
        delta,
        c,
    )
    .map_err(usage)?;
    if let Some(alpha) = file.params.alpha {
        if Some(alpha) != spec.params.alpha {
            return Err(usage(format!(
                "invalid value for `alpha`: the {family:?} family fixes alpha = {:?}, got {alpha}",
                spec.params.alpha.unwrap_or(f64::NAN)
            )));
        }
    }
    Ok(spec)
}

pub fn closed_form(args: &ClosedFormArgs) -> Result<i32, CliError> {
    let file = FileConfig::load_opt(args.config.as_deref())?;
    let spec = closed_form_spec(&file, args)?;
    let t_end = args.t_end.or(file.t_end).unwrap_or(20.0);
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(usage(format!("invalid value for `t_end`: must be finite and > 0, got {t_end}")));
    }
    let residual_tol = args.check_tol.unwrap_or(1e-11);
    if !(residual_tol >= 0.0) {
        return Err(usage(format!("invalid value for `check_tol`: must be >= 0, got {residual_tol}")));
    }
    let ctl = resolve_control(&file.control, args.rtol, args.atol, None)?;
    let samples = args.samples.or(file.closed_form.samples).unwrap_or(1000);

    let traj = closed_form::sample_trajectory(&spec, t_end, samples).map_err(usage)?;
    let mut csv = String::from("t,re_u,im_u,r\n");
    for s in &traj.samples {
        csv.push_str(&format!("{},{},{},{}\n", num(s.t), num(s.u.re), num(s.u.im), num(s.r)));
    }
    emit(args.out.as_deref(), &csv)?;

    let max_residual = (0..RESIDUAL_SAMPLES)
        .map(|k| {
            let t = t_end * k as f64 / (RESIDUAL_SAMPLES - 1) as f64;
            closed_form::scaled_residual(&spec, &spec.eval(t))
        })
        .fold(0.0, f64::max);
    let (tracking, stop) = match closed_form::track_closed_form(&spec, t_end, &ctl) {
        Ok(t) => (Some(t), Some(StopReason::TimeReached)),
        Err(closed_form::ClosedFormError::EarlyStop { stop, .. }) => (None, Some(stop)),
        Err(e) => return Err(usage(e)),
    };
    let tracking_pass = tracking.as_ref().is_some_and(|t| t.max_rel_deviation <= TRACKING_TOL);
    let report = ClosedFormReport {
        spec,
        t_end,
        residual_samples: RESIDUAL_SAMPLES,
        max_scaled_residual: max_residual,
        residual_tolerance: residual_tol,
        residual_pass: max_residual <= residual_tol,
        tracking,
        tracking_tolerance: TRACKING_TOL,
        tracking_pass,
        stop,
    };
    let json = to_json(&report);
    match (&args.report, &args.out) {
        (Some(path), _) => emit(Some(path), &json)?,
        (None, Some(_)) => emit(None, &json)?,
        (None, None) => eprint!("{json}"),
    }
    if stop != Some(StopReason::TimeReached) {
        eprintln!("tracking integration stopped early: {}", stop.map_or("unknown", |s| s.name()));
        return Ok(EXIT_EARLY_STOP);
    }
    Ok(if report.residual_pass && tracking_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

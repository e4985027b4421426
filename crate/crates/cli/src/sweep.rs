//! Grid sweeps over launch radius, speed, angle and damping.
//!
//! Points are evaluated on a bounded rayon pool; rows come back in grid order
//! whatever the worker count, so the CSV is byte-identical across runs.

use std::time::Instant;

use orbitlab_core::dynamics::{Model, Params};
use orbitlab_core::integrator::{default_r_min, integrate_cartesian, launch_state, StepControl};
use orbitlab_core::monitors::{check_boundedness, check_momentum_law, MonitorConfig};
use rayon::prelude::*;

use crate::commands::monitor_config;
use crate::config::{resolve_control, FileConfig};
use crate::output::{emit, num};
use crate::{CliError, SweepArgs, EXIT_CHECK_FAILED, EXIT_OK};

pub const HEADER: &str = "u0,v0,angle,delta,M,F0,E0,small_ok,radius_bound,stop,t_final,final_r,max_r,\
bounded_observed,momentum_law,verdict";

pub const DEFAULT_T_END: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub u0: f64,
    pub v0: f64,
    pub angle: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub points: Vec<GridPoint>,
    pub c: f64,
    pub t_end: f64,
    pub control: StepControl,
    pub checks: MonitorConfig,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn axis(name: &str, given: Option<&Vec<f64>>, default: Vec<f64>, positive: bool) -> Result<Vec<f64>, CliError> {
    let values = given.cloned().unwrap_or(default);
    if values.is_empty() {
        return Err(CliError::Usage(format!("invalid value for `sweep.{name}`: list is empty")));
    }
    for &x in &values {
        if !x.is_finite() || (positive && x <= 0.0) {
            return Err(CliError::Usage(format!("invalid value for `sweep.{name}`: {x}")));
        }
    }
    Ok(values)
}

impl Grid {
    /// Default grid: 10×10 over |u0|, |v0| ∈ [0.5, 2] with a tangential launch
    /// and δ = 0.1, which straddles |u0||v0|² = 2c for c = 1.
    pub fn resolve(file: &FileConfig, args: &SweepArgs) -> Result<Grid, CliError> {
        let s = &file.sweep;
        let u0 = axis("u0", s.u0.as_ref(), linspace(0.5, 2.0, 10), true)?;
        let v0 = axis("v0", s.v0.as_ref(), linspace(0.5, 2.0, 10), false)?;
        let angle = axis("angle", s.angle.as_ref(), vec![std::f64::consts::FRAC_PI_2], false)?;
        let delta = axis("delta", s.delta.as_ref(), vec![0.1], false)?;
        let c = args.c.or(file.params.c).unwrap_or(1.0);
        for &d in &delta {
            Params::new(d, c).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        let t_end = args.t_end.or(file.t_end).unwrap_or(DEFAULT_T_END);
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(CliError::Usage(format!("invalid value for `t_end`: must be finite and > 0, got {t_end}")));
        }
        let control = resolve_control(&file.control, args.rtol, args.atol, args.max_steps)?;
        let mut points = Vec::with_capacity(u0.len() * v0.len() * angle.len() * delta.len());
        for &d in &delta {
            for &a in &angle {
                for &u in &u0 {
                    for &v in &v0 {
                        points.push(GridPoint { u0: u, v0: v, angle: a, delta: d });
                    }
                }
            }
        }
        Ok(Grid { points, c, t_end, control, checks: monitor_config(file, None)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// Smallness condition holds and the bound was respected.
    Ok,
    Violation,
    NotApplicable,
    Error,
}

impl Verdict {
    fn as_str(&self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::Violation => "violation",
            Verdict::NotApplicable => "n/a",
            Verdict::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub point: GridPoint,
    /// Outcome of the boundedness check.
    pub verdict: Verdict,
    pub momentum_failed: bool,
    pub csv: String,
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

pub fn evaluate(grid: &Grid, pt: GridPoint) -> Row {
    let lead = format!("{},{},{},{}", num(pt.u0), num(pt.v0), num(pt.angle), num(pt.delta));
    let params = Params { delta: pt.delta, c: grid.c, alpha: None };
    let s0 = launch_state(pt.u0, pt.v0, pt.angle);
    let model = if pt.delta == 0.0 { Model::Conservative } else { Model::Dissipative };
    let traj = match integrate_cartesian(&s0, &params, &grid.control, grid.t_end, default_r_min(pt.u0), model) {
        Ok(t) => t,
        Err(e) => {
            let csv = format!("{lead},,,,,,error: {},,,,,,error", sanitize(&e.to_string()));
            return Row { point: pt, verdict: Verdict::Error, momentum_failed: false, csv };
        }
    };
    let d = &traj.derived;
    let slack = grid.checks.inequality_slack;
    let bounded = check_boundedness(&traj, d, slack);
    let momentum = check_momentum_law(&traj, grid.checks.momentum_tol);
    let (observed, verdict) = if bounded.applicable {
        (bounded.pass.to_string(), if bounded.pass { Verdict::Ok } else { Verdict::Violation })
    } else {
        ("n/a".to_string(), Verdict::NotApplicable)
    };
    let momentum_failed = momentum.is_hard_failure();
    let momentum = if momentum.applicable { if momentum.pass { "pass" } else { "fail" } } else { "n/a" };
    let csv = format!(
        "{lead},{},{},{},{},{},{},{},{},{},{observed},{momentum},{}",
        num(d.m),
        num(d.f0),
        num(d.e0),
        d.small_ok,
        opt(d.radius_bound),
        traj.stop.name(),
        num(traj.last().t),
        num(traj.last().r),
        num(traj.max_radius()),
        verdict.as_str()
    );
    Row { point: pt, verdict, momentum_failed, csv }
}

/// Evaluate every grid point on `workers` threads, in grid order.
pub fn run_grid(grid: &Grid, workers: usize) -> Result<Vec<Row>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| grid.points.par_iter().map(|&p| evaluate(grid, p)).collect()))
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv);
        out.push('\n');
    }
    out
}

pub fn run(args: &SweepArgs) -> Result<i32, CliError> {
    let file = FileConfig::load_opt(args.config.as_deref())?;
    let grid = Grid::resolve(&file, args)?;
    let workers = match args.workers {
        Some(0) => return Err(CliError::Usage("invalid value for `workers`: must be >= 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let started = Instant::now();
    let rows = run_grid(&grid, workers)?;
    emit(args.out.as_deref(), &to_csv(&rows))?;
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    let momentum_failures = rows.iter().filter(|r| r.momentum_failed).count();
    eprintln!(
        "{} points on {workers} workers in {:.3} s: {} ok, {} bound violations, {} n/a, {} errors, \
         {momentum_failures} momentum-law failures",
        rows.len(),
        started.elapsed().as_secs_f64(),
        count(Verdict::Ok),
        count(Verdict::Violation),
        count(Verdict::NotApplicable),
        count(Verdict::Error)
    );
    let failed = count(Verdict::Violation) > 0 || momentum_failures > 0;
    Ok(if failed { EXIT_CHECK_FAILED } else { EXIT_OK })
}

//! `orbitlab` command-line driver.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
//! 3 the integration terminated before `t_end`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use orbitlab_core::closed_form::Family;
use orbitlab_core::dynamics::Model;
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

use config::{parse_pair, FormulationKind, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_EARLY_STOP: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Dissipative,
    Conservative,
    Tired,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Dissipative => Model::Dissipative,
            ModelArg::Conservative => Model::Conservative,
            ModelArg::Tired => Model::Tired,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Fast,
    Uniform,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Fast => Family::Fast,
            FamilyArg::Uniform => Family::Uniform,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "orbitlab", version, about = "Damped planar central-force laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario and write the trajectory
    Simulate(ScenarioArgs),
    /// Integrate one scenario and run the monitor suite on it
    Verify(VerifyArgs),
    /// Exact coefficients of the spiraling-orbit series
    Series(SeriesArgs),
    /// Sample and track an explicit tired-charge spiral
    ClosedForm(ClosedFormArgs),
    /// Run a grid of launches in parallel and summarise each
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// TOML scenario file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    pub formulation: Option<FormulationKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Initial position X,Y
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub u0: Option<[f64; 2]>,
    /// Initial velocity X,Y
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub v0: Option<[f64; 2]>,
    #[arg(long, allow_hyphen_values = true)]
    pub r0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rdot0: Option<f64>,
    /// Initial angular momentum M for radial formulations
    #[arg(long, allow_hyphen_values = true)]
    pub momentum: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Trajectory CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report JSON
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Orbit SVG
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

impl ScenarioArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            model: self.model.map(Into::into),
            formulation: self.formulation,
            delta: self.delta,
            c: self.c,
            alpha: self.alpha,
            u0: self.u0,
            v0: self.v0,
            r0: self.r0,
            rdot0: self.rdot0,
            momentum: self.momentum,
            t_end: self.t_end,
            rtol: self.rtol,
            atol: self.atol,
            r_min: self.r_min,
            max_steps: self.max_steps,
            out: self.out.clone(),
            report: self.report.clone(),
            plot: self.plot.clone(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Tolerance for every identity check (momentum, energy, F constancy)
    #[arg(long, allow_hyphen_values = true)]
    pub check_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SeriesArgs {
    /// Truncation order N
    #[arg(long, default_value_t = 12)]
    pub order: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClosedFormArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phase: Option<f64>,
    /// +1 or -1
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    /// Minimum number of grid intervals in the sampled CSV
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Tolerance on the scaled residual of the closed form
    #[arg(long, allow_hyphen_values = true)]
    pub check_tol: Option<f64>,
    /// Sampled solution CSV (t,re_u,im_u,r)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Residual and tracking summary JSON
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// TOML file; its [sweep] section lists the grid
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Worker threads (defaults to the available parallelism)
    #[arg(long, env = "ORBITLAB_WORKERS")]
    pub workers: Option<usize>,
    /// Summary CSV (stdout when omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Verify(a) => commands::verify(a),
        Command::Series(a) => commands::series(a),
        Command::ClosedForm(a) => commands::closed_form(a),
        Command::Sweep(a) => sweep::run(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}

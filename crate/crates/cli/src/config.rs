//! Scenario files (TOML) merged with command-line overrides.
//!
//! Flags always win over the file; anything left unset falls back to the
//! default scenario, a unit-radius circular launch with δ = 0.1, c = 1.

use std::path::{Path, PathBuf};

use orbitlab_core::closed_form::Family;
use orbitlab_core::dynamics::{Model, Params};
use orbitlab_core::integrator::{default_r_min, StepControl};
use orbitlab_core::monitors::MonitorConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FormulationKind {
    Cartesian,
    Radial,
    Scaled,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub u0: Option<[f64; 2]>,
    pub v0: Option<[f64; 2]>,
    pub r0: Option<f64>,
    pub rdot0: Option<f64>,
    pub momentum: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub h_init: Option<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: Option<usize>,
    /// Fraction of the local free-fall time capping each step; 0 disables the cap.
    pub freefall_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Launch radii |u0|.
    pub u0: Option<Vec<f64>>,
    /// Launch speeds |v0|.
    pub v0: Option<Vec<f64>>,
    /// Launch angles from the outward radial direction.
    pub angle: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormSection {
    pub family: Option<Family>,
    pub amplitude: Option<f64>,
    pub phase: Option<f64>,
    pub sign: Option<f64>,
    pub samples: Option<usize>,
}

/// The file format, every section optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub model: Option<Model>,
    pub formulation: Option<FormulationKind>,
    pub t_end: Option<f64>,
    pub r_min: Option<f64>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub control: ControlSection,
    #[serde(default)]
    pub output: OutputSection,
    pub checks: Option<MonitorConfig>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub closed_form: ClosedFormSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(FileConfig::default()), Self::load)
    }
}

/// Flag values that override the file. Each field mirrors a file key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<Model>,
    pub formulation: Option<FormulationKind>,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub alpha: Option<f64>,
    pub u0: Option<[f64; 2]>,
    pub v0: Option<[f64; 2]>,
    pub r0: Option<f64>,
    pub rdot0: Option<f64>,
    pub momentum: Option<f64>,
    pub t_end: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub r_min: Option<f64>,
    pub max_steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum Initial {
    Cartesian { u0: [f64; 2], v0: [f64; 2] },
    Radial { r0: f64, rdot0: f64, momentum: f64 },
}

impl Initial {
    pub fn radius(&self) -> f64 {
        match *self {
            Initial::Cartesian { u0, .. } => u0[0].hypot(u0[1]),
            Initial::Radial { r0, .. } => r0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

/// A fully resolved and validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub model: Model,
    pub formulation: FormulationKind,
    pub params: Params,
    pub initial: Initial,
    pub t_end: f64,
    pub r_min: f64,
    pub control: StepControl,
    #[serde(skip)]
    pub outputs: Outputs,
}

pub const DEFAULT_T_END: f64 = 5.0;

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn finite(field: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("invalid value for `{field}`: must be finite, got {x}")))
    }
}

/// Step control from the file section with flag overrides.
pub fn resolve_control(file: &ControlSection, rtol: Option<f64>, atol: Option<f64>, max_steps: Option<usize>) -> Result<StepControl, CliError> {
    let mut ctl = StepControl::default();
    if let Some(v) = pick(rtol, file.rtol) {
        ctl.rtol = v;
    }
    if let Some(v) = pick(atol, file.atol) {
        ctl.atol = v;
    }
    if let Some(v) = file.h_init {
        ctl.h_init = v;
    }
    if let Some(v) = file.h_min {
        ctl.h_min = v;
    }
    if let Some(v) = file.h_max {
        ctl.h_max = v;
    }
    if let Some(v) = pick(max_steps, file.max_steps) {
        ctl.max_steps = v;
    }
    if let Some(v) = file.freefall_fraction {
        ctl.freefall_fraction = (v != 0.0).then_some(v);
    }
    ctl.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(ctl)
}

impl Scenario {
    pub fn resolve(file: &FileConfig, o: &Overrides) -> Result<Scenario, CliError> {
        let model = pick(o.model, file.model).unwrap_or(Model::Dissipative);
        let formulation = pick(o.formulation, file.formulation).unwrap_or(FormulationKind::Cartesian);
        let delta = finite("delta", pick(o.delta, file.params.delta).unwrap_or(0.1))?;
        let c = finite("c", pick(o.c, file.params.c).unwrap_or(1.0))?;
        let alpha = pick(o.alpha, file.params.alpha);
        let mut params = Params::new(delta, c).map_err(|e| CliError::Usage(e.to_string()))?;
        if let Some(a) = alpha {
            params = params.with_alpha(a).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if model == Model::Tired && params.alpha.is_none() {
            return Err(CliError::Usage("invalid value for `alpha`: the tired model requires alpha".into()));
        }

        let fi = &file.initial;
        let u0 = pick(o.u0, fi.u0);
        let v0 = pick(o.v0, fi.v0);
        let r0 = pick(o.r0, fi.r0);
        let rdot0 = pick(o.rdot0, fi.rdot0);
        let momentum = pick(o.momentum, fi.momentum);
        let initial = match formulation {
            FormulationKind::Cartesian => {
                for (name, given) in [("r0", r0.is_some()), ("rdot0", rdot0.is_some()), ("momentum", momentum.is_some())] {
                    if given {
                        return Err(CliError::Usage(format!(
                            "invalid value for `{name}`: the cartesian formulation takes u0/v0 initial data"
                        )));
                    }
                }
                let u0 = u0.unwrap_or([1.0, 0.0]);
                let v0 = v0.unwrap_or([0.0, 1.0]);
                for (name, xs) in [("u0", u0), ("v0", v0)] {
                    finite(name, xs[0])?;
                    finite(name, xs[1])?;
                }
                if u0 == [0.0, 0.0] {
                    return Err(CliError::Usage("invalid value for `u0`: the origin is singular".into()));
                }
                Initial::Cartesian { u0, v0 }
            }
            FormulationKind::Radial | FormulationKind::Scaled => {
                for (name, given) in [("u0", u0.is_some()), ("v0", v0.is_some())] {
                    if given {
                        return Err(CliError::Usage(format!(
                            "invalid value for `{name}`: radial formulations take r0/rdot0/momentum initial data"
                        )));
                    }
                }
                if model == Model::Tired {
                    return Err(CliError::Usage(
                        "invalid value for `formulation`: the tired model needs the cartesian formulation".into(),
                    ));
                }
                let r0 = finite("r0", r0.unwrap_or(1.0))?;
                if r0 <= 0.0 {
                    return Err(CliError::Usage(format!("invalid value for `r0`: must be > 0, got {r0}")));
                }
                Initial::Radial {
                    r0,
                    rdot0: finite("rdot0", rdot0.unwrap_or(0.0))?,
                    momentum: finite("momentum", momentum.unwrap_or(1.0))?,
                }
            }
        };

        let t_end = finite("t_end", pick(o.t_end, file.t_end).unwrap_or(DEFAULT_T_END))?;
        if t_end <= 0.0 {
            return Err(CliError::Usage(format!("invalid value for `t_end`: must be > 0, got {t_end}")));
        }
        let r_min = finite("r_min", pick(o.r_min, file.r_min).unwrap_or_else(|| default_r_min(initial.radius())))?;
        if !(r_min > 0.0 && r_min < initial.radius()) {
            return Err(CliError::Usage(format!(
                "invalid value for `r_min`: need 0 < r_min < initial radius {}, got {r_min}",
                initial.radius()
            )));
        }
        let control = resolve_control(&file.control, o.rtol, o.atol, o.max_steps)?;
        let fo = &file.output;
        Ok(Scenario {
            model,
            formulation,
            params,
            initial,
            t_end,
            r_min,
            control,
            outputs: Outputs {
                out: o.out.clone().or_else(|| fo.out.clone()),
                report: o.report.clone().or_else(|| fo.report.clone()),
                plot: o.plot.clone().or_else(|| fo.plot.clone()),
            },
        })
    }
}

/// Parse `X,Y` into a pair.
pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    Ok([num(x)?, num(y)?])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<FileConfig, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    #[test]
    fn defaults() {
        let s = Scenario::resolve(&FileConfig::default(), &Overrides::default()).unwrap();
        assert_eq!(s.params, Params::new(0.1, 1.0).unwrap());
        assert_eq!(s.initial, Initial::Cartesian { u0: [1.0, 0.0], v0: [0.0, 1.0] });
        assert_eq!(s.r_min, 1e-9);
        assert_eq!(s.control, StepControl::default());
    }

    #[test]
    fn flags_win_over_file() {
        let file = parse("t_end = 3.0\n[params]\ndelta = 0.3\nc = 2.0\n[control]\nrtol = 1e-8\n").unwrap();
        let o = Overrides { delta: Some(0.2), ..Default::default() };
        let s = Scenario::resolve(&file, &o).unwrap();
        assert_eq!((s.params.delta, s.params.c, s.t_end, s.control.rtol), (0.2, 2.0, 3.0, 1e-8));
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse("[params]\ndleta = 0.1\n").unwrap_err();
        assert!(e.contains("dleta"), "{e}");
        let e = parse("t_end = \"soon\"\n").unwrap_err();
        assert!(e.contains("t_end"), "{e}");

        let bad = |o: Overrides, field: &str| {
            let msg = Scenario::resolve(&FileConfig::default(), &o).unwrap_err().to_string();
            assert!(msg.contains(field), "{msg}");
        };
        bad(Overrides { delta: Some(-1.0), ..Default::default() }, "delta");
        bad(Overrides { c: Some(0.0), ..Default::default() }, "`c`");
        bad(Overrides { rtol: Some(2.0), ..Default::default() }, "rtol");
        bad(Overrides { t_end: Some(0.0), ..Default::default() }, "t_end");
        bad(Overrides { u0: Some([0.0, 0.0]), ..Default::default() }, "u0");
        bad(Overrides { r0: Some(1.0), ..Default::default() }, "r0");
        bad(Overrides { model: Some(Model::Tired), ..Default::default() }, "alpha");
        bad(
            Overrides { formulation: Some(FormulationKind::Radial), u0: Some([1.0, 0.0]), ..Default::default() },
            "u0",
        );
        bad(Overrides { r_min: Some(5.0), ..Default::default() }, "r_min");
    }

    #[test]
    fn freefall_cap_can_be_disabled() {
        let file = parse("[control]\nfreefall_fraction = 0.0\n").unwrap();
        let s = Scenario::resolve(&file, &Overrides::default()).unwrap();
        assert_eq!(s.control.freefall_fraction, None);
    }

    #[test]
    fn pairs() {
        assert_eq!(parse_pair("1,-0.5"), Ok([1.0, -0.5]));
        assert!(parse_pair("1;2").is_err());
        assert!(parse_pair("1,x").is_err());
    }
}

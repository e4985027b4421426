//! Adaptive integration of the model in Cartesian, radial, and scaled-radial
//! form.
//!
//! All formulations share one Dormand–Prince 5(4) driver. Beyond the error
//! controller, the step is capped by a fraction of the local free-fall time
//! `r^{3/2}/√c`, and output samples are stored at every accepted step plus
//! dense-output fill-ins so the unwound phase moves by less than π/8 between
//! samples. A trajectory stops at `t_end`, when the radius reaches `r_min`,
//! when the step underflows `h_min`, or when the step budget runs out.
//!
//! The scaled-radial form integrates `ρ = r e^{2δt}`:
//!
//! ```text
//! ρ'' = 3δρ' − 2δ²ρ + e^{6δt} (M²/ρ³ − c/ρ²)
//! ```

mod dense;
mod dopri;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    self, angular_momentum, derived_constants, from_polar, CartesianState, DerivedConstants,
    DynamicsError, Model, Params, PolarState,
};
use dopri::{drive, System};

pub use dense::{resample_dense, uniform_grid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("invalid step control `{field}`: {reason}")]
    InvalidControl { field: &'static str, reason: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("time {t} outside trajectory span [{start}, {end}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Error tolerances and step limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Cap the step at this fraction of `r^{3/2}/√c`; `None` disables the cap.
    pub freefall_fraction: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 1e-4,
            h_min: 1e-16,
            h_max: 1.0,
            max_steps: 10_000_000,
            freefall_fraction: Some(0.01),
        }
    }
}

impl StepControl {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        StepControl { rtol, atol, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |field, reason: &str| Err(IntegrateError::InvalidControl { field, reason: reason.into() });
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return bad("rtol", "must lie in (0, 1)");
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return bad("atol", "must be > 0");
        }
        if !(self.h_min > 0.0) {
            return bad("h_min", "must be > 0");
        }
        if !(self.h_init >= self.h_min) {
            return bad("h_init", "must be >= h_min");
        }
        if !(self.h_max >= self.h_init) {
            return bad("h_max", "must be >= h_init");
        }
        if self.max_steps == 0 {
            return bad("max_steps", "must be >= 1");
        }
        if let Some(f) = self.freefall_fraction {
            if !(f > 0.0 && f.is_finite()) {
                return bad("freefall_fraction", "must be > 0");
            }
        }
        Ok(())
    }
}

/// Default collision threshold for an orbit starting at radius `r0`.
pub fn default_r_min(r0: f64) -> f64 {
    1e-9 * r0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum StopReason {
    TimeReached,
    CollisionThreshold { r: f64 },
    StepUnderflow,
    StepBudgetExhausted,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::TimeReached => "TimeReached",
            StopReason::CollisionThreshold { .. } => "CollisionThreshold",
            StopReason::StepUnderflow => "StepUnderflow",
            StopReason::StepBudgetExhausted => "StepBudgetExhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    Cartesian,
    Radial,
    ScaledRadial,
    /// Sampled from a closed-form solution rather than integrated.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub u: Complex64,
    pub v: Complex64,
    pub r: f64,
    /// Unwound phase.
    pub theta: f64,
    /// Angular momentum `Im(ū v)`.
    pub l: f64,
    /// Energy `|v|²/2 − c/r`.
    pub e: f64,
    /// Radial Lyapunov function.
    pub f: f64,
}

impl TrajectorySample {
    /// Observables of a Cartesian state; `theta` must already be unwound.
    pub fn observe(s: &CartesianState, theta: f64, p: &Params, m: f64) -> TrajectorySample {
        let r = s.u.norm();
        let rdot = (s.u.conj() * s.v).re / r;
        TrajectorySample {
            t: s.t,
            u: s.u,
            v: s.v,
            r,
            theta,
            l: angular_momentum(s),
            e: 0.5 * s.v.norm_sqr() - p.c / r,
            f: dynamics::f_function(s.t, r, rdot, p, m).unwrap_or(f64::NAN),
        }
    }

    pub fn state(&self) -> CartesianState {
        CartesianState::new(self.t, self.u, self.v)
    }

    pub fn rdot(&self) -> f64 {
        (self.u.conj() * self.v).re / self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Parameters as seen by the model (δ = 0 for the conservative model).
    pub params: Params,
    pub model: Model,
    pub formulation: Formulation,
    pub derived: DerivedConstants,
    pub samples: Vec<TrajectorySample>,
    pub stop: StopReason,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn span(&self) -> (f64, f64) {
        (self.first().t, self.last().t)
    }

    pub fn momentum(&self) -> f64 {
        self.derived.m
    }

    pub fn max_radius(&self) -> f64 {
        self.samples.iter().map(|s| s.r).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Scaled radius `r e^{2δt}` of sample `i`.
    pub fn rho(&self, i: usize) -> f64 {
        let s = &self.samples[i];
        s.r * (2.0 * self.params.delta * s.t).exp()
    }

    /// Acceleration of the planar motion at a sample, under the trajectory's model.
    pub fn acceleration(&self, s: &TrajectorySample) -> Complex64 {
        dynamics::accel(self.model, &s.state(), &self.params).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
    }
}

fn check_horizon(t0: f64, t_end: f64) -> Result<(), IntegrateError> {
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(IntegrateError::InvalidInput(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    Ok(())
}

struct Cartesian {
    model: Model,
    p: Params,
    m: f64,
}

impl System<4> for Cartesian {
    fn rhs(&self, t: f64, y: &[f64; 4]) -> [f64; 4] {
        let r2 = y[0] * y[0] + y[1] * y[1];
        let pull = self.model.force_constant(t, &self.p) / (r2 * r2.sqrt());
        [
            y[2],
            y[3],
            -self.p.delta * y[2] - pull * y[0],
            -self.p.delta * y[3] - pull * y[1],
        ]
    }

    fn radius(&self, _t: f64, y: &[f64; 4]) -> f64 {
        y[0].hypot(y[1])
    }

    fn angular_rate(&self, _t: f64, y: &[f64; 4]) -> f64 {
        (y[0] * y[3] - y[1] * y[2]) / (y[0] * y[0] + y[1] * y[1])
    }

    fn force_constant(&self, t: f64) -> f64 {
        self.model.force_constant(t, &self.p)
    }

    fn sample(&self, t: f64, y: &[f64; 4], prev: Option<f64>) -> TrajectorySample {
        let s = CartesianState::new(t, Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]));
        let theta = match prev {
            Some(prev) => dynamics::unwind(s.u.arg(), prev),
            None => s.u.arg(),
        };
        TrajectorySample::observe(&s, theta, &self.p, self.m)
    }
}

/// Integrate `u'' + δu' + c(t) u/|u|³ = 0` under `model` from `s0`.
pub fn integrate_cartesian(
    s0: &CartesianState,
    p: &Params,
    ctl: &StepControl,
    t_end: f64,
    r_min: f64,
    model: Model,
) -> Result<Trajectory, IntegrateError> {
    p.validate()?;
    ctl.validate()?;
    check_horizon(s0.t, t_end)?;
    if model == Model::Tired && p.alpha.is_none() {
        return Err(DynamicsError::MissingAlpha.into());
    }
    let r0 = s0.u.norm();
    if !(r_min > 0.0 && r0 > r_min) {
        return Err(IntegrateError::InvalidInput(format!("need |u0| = {r0} > r_min = {r_min} > 0")));
    }
    let p = model.effective_params(*p);
    let derived = derived_constants(s0, &p)?;
    let sys = Cartesian { model, p, m: derived.m };
    let y0 = [s0.u.re, s0.u.im, s0.v.re, s0.v.im];
    let run = drive(&sys, s0.t, y0, t_end, r_min, ctl);
    Ok(Trajectory {
        params: p,
        model,
        formulation: Formulation::Cartesian,
        derived,
        samples: run.samples,
        stop: run.stop,
        stats: StepStats { accepted: run.accepted, rejected: run.rejected },
    })
}

fn polar_sample(t: f64, r: f64, rdot: f64, theta: f64, thetadot: f64, p: &Params, m: f64) -> TrajectorySample {
    match from_polar(&PolarState { t, r, rdot, theta, thetadot }) {
        Ok(s) => TrajectorySample::observe(&s, theta, p, m),
        Err(_) => TrajectorySample {
            t,
            u: Complex64::new(f64::NAN, f64::NAN),
            v: Complex64::new(f64::NAN, f64::NAN),
            r,
            theta,
            l: f64::NAN,
            e: f64::NAN,
            f: f64::NAN,
        },
    }
}

struct Radial {
    p: Params,
    m: f64,
}

impl System<3> for Radial {
    fn rhs(&self, t: f64, y: &[f64; 3]) -> [f64; 3] {
        let (r, rdot) = (y[0], y[1]);
        let decay = (-self.p.delta * t).exp();
        let r2 = r * r;
        [
            rdot,
            self.m * self.m * decay * decay / (r2 * r) - self.p.c / r2 - self.p.delta * rdot,
            self.m * decay / r2,
        ]
    }

    fn radius(&self, _t: f64, y: &[f64; 3]) -> f64 {
        y[0]
    }

    fn angular_rate(&self, t: f64, y: &[f64; 3]) -> f64 {
        self.m * (-self.p.delta * t).exp() / (y[0] * y[0])
    }

    fn force_constant(&self, _t: f64) -> f64 {
        self.p.c
    }

    fn sample(&self, t: f64, y: &[f64; 3], _prev: Option<f64>) -> TrajectorySample {
        polar_sample(t, y[0], y[1], y[2], self.angular_rate(t, y), &self.p, self.m)
    }
}

fn radial_derived(r0: f64, rdot0: f64, p: &Params, m: f64) -> Result<DerivedConstants, IntegrateError> {
    let s0 = from_polar(&PolarState { t: 0.0, r: r0, rdot: rdot0, theta: 0.0, thetadot: m / (r0 * r0) })?;
    Ok(derived_constants(&s0, p)?)
}

/// Integrate the reduced radial equation from `t = 0`, reconstructing the
/// phase by quadrature of `θ' = M e^{−δt}/r²` (with `θ(0) = 0`).
pub fn integrate_radial(
    r0: f64,
    rdot0: f64,
    p: &Params,
    m: f64,
    ctl: &StepControl,
    t_end: f64,
    r_min: f64,
) -> Result<Trajectory, IntegrateError> {
    p.validate()?;
    ctl.validate()?;
    check_horizon(0.0, t_end)?;
    if !(r_min > 0.0 && r0 > r_min) {
        return Err(IntegrateError::InvalidInput(format!("need r0 = {r0} > r_min = {r_min} > 0")));
    }
    let derived = radial_derived(r0, rdot0, p, m)?;
    let sys = Radial { p: *p, m };
    let run = drive(&sys, 0.0, [r0, rdot0, 0.0], t_end, r_min, ctl);
    Ok(Trajectory {
        params: *p,
        model: Model::Dissipative,
        formulation: Formulation::Radial,
        derived,
        samples: run.samples,
        stop: run.stop,
        stats: StepStats { accepted: run.accepted, rejected: run.rejected },
    })
}

struct ScaledRadial {
    p: Params,
    m: f64,
}

impl System<3> for ScaledRadial {
    fn rhs(&self, t: f64, y: &[f64; 3]) -> [f64; 3] {
        let (rho, rhodot) = (y[0], y[1]);
        let d = self.p.delta;
        let grow = (3.0 * d * t).exp();
        let rho2 = rho * rho;
        [
            rhodot,
            3.0 * d * rhodot - 2.0 * d * d * rho + grow * grow * (self.m * self.m / (rho2 * rho) - self.p.c / rho2),
            self.m * grow / rho2,
        ]
    }

    fn radius(&self, t: f64, y: &[f64; 3]) -> f64 {
        y[0] * (-2.0 * self.p.delta * t).exp()
    }

    fn angular_rate(&self, t: f64, y: &[f64; 3]) -> f64 {
        self.m * (3.0 * self.p.delta * t).exp() / (y[0] * y[0])
    }

    fn force_constant(&self, _t: f64) -> f64 {
        self.p.c
    }

    fn sample(&self, t: f64, y: &[f64; 3], _prev: Option<f64>) -> TrajectorySample {
        let d = self.p.delta;
        let shrink = (-2.0 * d * t).exp();
        let r = y[0] * shrink;
        let rdot = (y[1] - 2.0 * d * y[0]) * shrink;
        polar_sample(t, r, rdot, y[2], self.angular_rate(t, y), &self.p, self.m)
    }
}

/// Integrate the radial motion in the scaled variable `ρ = r e^{2δt}` from `t = 0`.
pub fn integrate_scaled_radial(
    rho0: f64,
    rhodot0: f64,
    p: &Params,
    m: f64,
    ctl: &StepControl,
    t_end: f64,
    r_min: f64,
) -> Result<Trajectory, IntegrateError> {
    p.validate()?;
    ctl.validate()?;
    check_horizon(0.0, t_end)?;
    if !(r_min > 0.0 && rho0 > r_min) {
        return Err(IntegrateError::InvalidInput(format!("need rho0 = {rho0} > r_min = {r_min} > 0")));
    }
    let rdot0 = rhodot0 - 2.0 * p.delta * rho0;
    let derived = radial_derived(rho0, rdot0, p, m)?;
    let sys = ScaledRadial { p: *p, m };
    let run = drive(&sys, 0.0, [rho0, rhodot0, 0.0], t_end, r_min, ctl);
    Ok(Trajectory {
        params: *p,
        model: Model::Dissipative,
        formulation: Formulation::ScaledRadial,
        derived,
        samples: run.samples,
        stop: run.stop,
        stats: StepStats { accepted: run.accepted, rejected: run.rejected },
    })
}

/// Cartesian state with `u0` on the positive real axis, speed `v0`, and
/// launch angle `angle` measured from the outward radial direction.
pub fn launch_state(u0: f64, v0: f64, angle: f64) -> CartesianState {
    CartesianState::new(0.0, Complex64::new(u0, 0.0), Complex64::from_polar(v0, angle))
}

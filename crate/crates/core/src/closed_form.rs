//! Explicit spiraling solutions of the tired-charge equation
//! `u'' + δu' + c e^{−αt} u/|u|³ = 0`.
//!
//! Two families are known in closed form:
//!
//! ```text
//! fast     (α = δ):    u(t) = U e^{−δt}   exp(i(s √c/(δU^{3/2}) e^{δt} + φ))
//! uniform  (α = 3δ/2): u(t) = V e^{−δt/2} exp(i(s Ω t + φ)),   Ω = sqrt(c/V³ − δ²/4)
//! ```
//!
//! with `s = ±1`. Substituting the uniform family shows that the rate must be
//! `sqrt(c/V³ − δ²/4)`; the `+δ²/4` variant leaves a residual `−(δ²/2)u`
//! (see [`literal_uniform_rate`]). The uniform family therefore exists only
//! for `c/V³ > δ²/4`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, CartesianState, DynamicsError, Model, Params};
use crate::integrator::{
    self, Formulation, IntegrateError, StepControl, StepStats, StopReason, Trajectory, TrajectorySample,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClosedFormError {
    #[error("invalid closed-form spec `{field}`: {reason}")]
    InvalidSpec { field: &'static str, reason: String },
    #[error("expected a {expected:?} spiral, got {got:?}")]
    WrongFamily { expected: Family, got: Family },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("integration stopped early at t = {t}: {stop:?}")]
    EarlyStop { stop: StopReason, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Fast,
    Uniform,
}

impl Family {
    /// Charge-decay rate the family needs, as a multiple of δ.
    pub fn alpha_factor(self) -> f64 {
        match self {
            Family::Fast => 1.0,
            Family::Uniform => 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiredSpiralSpec {
    pub family: Family,
    /// `U` (fast) or `V` (uniform).
    pub amplitude: f64,
    pub phase: f64,
    /// +1 for counter-clockwise, −1 for clockwise.
    pub sign: f64,
    /// Must carry the family's α.
    pub params: Params,
}

/// Position and its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralPoint {
    pub t: f64,
    pub u: Complex64,
    pub du: Complex64,
    pub ddu: Complex64,
}

impl SpiralPoint {
    pub fn state(&self) -> CartesianState {
        CartesianState::new(self.t, self.u, self.du)
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ClosedFormError {
    ClosedFormError::InvalidSpec { field, reason: reason.into() }
}

impl TiredSpiralSpec {
    /// Build a spec with α fixed by the family.
    pub fn new(family: Family, amplitude: f64, phase: f64, sign: f64, delta: f64, c: f64) -> Result<Self, ClosedFormError> {
        let params = Params::new(delta, c)?.with_alpha(family.alpha_factor() * delta)?;
        let spec = TiredSpiralSpec { family, amplitude, phase, sign, params };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ClosedFormError> {
        self.params.validate()?;
        let p = &self.params;
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(invalid("amplitude", format!("must be finite and > 0, got {}", self.amplitude)));
        }
        if !self.phase.is_finite() {
            return Err(invalid("phase", "must be finite"));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(invalid("sign", format!("must be +1 or -1, got {}", self.sign)));
        }
        let want = self.family.alpha_factor() * p.delta;
        match p.alpha {
            Some(a) if a == want => {}
            other => {
                return Err(invalid("alpha", format!("{:?} family needs alpha = {want}, got {other:?}", self.family)));
            }
        }
        match self.family {
            Family::Fast if p.delta == 0.0 => Err(invalid("delta", "fast family needs delta > 0")),
            Family::Uniform if p.c / self.amplitude.powi(3) <= 0.25 * p.delta * p.delta => Err(invalid(
                "amplitude",
                format!("uniform family needs c/V^3 > delta^2/4 (V = {})", self.amplitude),
            )),
            _ => Ok(()),
        }
    }

    fn uniform_rate(&self) -> f64 {
        let p = &self.params;
        (p.c / self.amplitude.powi(3) - 0.25 * p.delta * p.delta).sqrt()
    }

    /// Exact unwound phase θ(t).
    pub fn phase_at(&self, t: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Fast => {
                let a = p.c.sqrt() / (p.delta * self.amplitude.powf(1.5));
                self.sign * a * (p.delta * t).exp() + self.phase
            }
            Family::Uniform => self.sign * self.uniform_rate() * t + self.phase,
        }
    }

    /// Exact θ'(t).
    pub fn angular_rate(&self, t: f64) -> f64 {
        let p = &self.params;
        match self.family {
            Family::Fast => self.sign * p.c.sqrt() / self.amplitude.powf(1.5) * (p.delta * t).exp(),
            Family::Uniform => self.sign * self.uniform_rate(),
        }
    }

    /// Exact |u(t)|.
    pub fn modulus(&self, t: f64) -> f64 {
        let d = self.params.delta;
        match self.family {
            Family::Fast => self.amplitude * (-d * t).exp(),
            Family::Uniform => self.amplitude * (-0.5 * d * t).exp(),
        }
    }

    /// `u`, `u'`, `u''` at `t`, whichever the family.
    pub fn eval(&self, t: f64) -> SpiralPoint {
        let d = self.params.delta;
        let u = Complex64::from_polar(self.modulus(t), self.phase_at(t));
        let w = self.angular_rate(t);
        let i = Complex64::i();
        match self.family {
            Family::Fast => {
                // u' = (−δ + iθ')u,  θ'' = δθ'
                let lam = Complex64::new(-d, w);
                let du = lam * u;
                let ddu = (lam * lam + i * d * w) * u;
                SpiralPoint { t, u, du, ddu }
            }
            Family::Uniform => {
                let lam = Complex64::new(-0.5 * d, w);
                SpiralPoint { t, u, du: lam * u, ddu: lam * lam * u }
            }
        }
    }

    pub fn initial_state(&self) -> CartesianState {
        self.eval(0.0).state()
    }
}

fn expect_family(spec: &TiredSpiralSpec, family: Family) -> Result<(), ClosedFormError> {
    spec.validate()?;
    if spec.family != family {
        return Err(ClosedFormError::WrongFamily { expected: family, got: spec.family });
    }
    Ok(())
}

pub fn eval_fast_spiral(spec: &TiredSpiralSpec, t: f64) -> Result<SpiralPoint, ClosedFormError> {
    expect_family(spec, Family::Fast)?;
    Ok(spec.eval(t))
}

pub fn eval_uniform_spiral(spec: &TiredSpiralSpec, t: f64) -> Result<SpiralPoint, ClosedFormError> {
    expect_family(spec, Family::Uniform)?;
    Ok(spec.eval(t))
}

/// `|u'' + δu' + c e^{−αt} u/|u|³|` divided by `max(|u''|, c e^{−αt}/|u|²)`.
pub fn scaled_residual(spec: &TiredSpiralSpec, pt: &SpiralPoint) -> f64 {
    let p = &spec.params;
    let ct = Model::Tired.force_constant(pt.t, p);
    let r = pt.u.norm();
    let res = pt.ddu + pt.du * p.delta + pt.u * (ct / (r * r * r));
    res.norm() / pt.ddu.norm().max(ct / (r * r))
}

/// Rate `sqrt(c/V³ + δ²/4)` of the uniform family as it is often quoted;
/// it does not solve the equation unless δ = 0.
pub fn literal_uniform_rate(v: f64, delta: f64, c: f64) -> f64 {
    (c / v.powi(3) + 0.25 * delta * delta).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracking {
    pub max_rel_deviation: f64,
    pub at_time: f64,
    pub samples: usize,
    pub stats: StepStats,
}

/// Integrate the tired model from the closed form's exact initial data and
/// report the worst `|u_num − u_exact|/|u_exact|` over the stored samples.
pub fn track_closed_form(spec: &TiredSpiralSpec, t_end: f64, ctl: &StepControl) -> Result<Tracking, ClosedFormError> {
    spec.validate()?;
    let s0 = spec.initial_state();
    let r_min = integrator::default_r_min(spec.amplitude);
    let traj = integrator::integrate_cartesian(&s0, &spec.params, ctl, t_end, r_min, Model::Tired)?;
    if traj.stop != StopReason::TimeReached {
        return Err(ClosedFormError::EarlyStop { stop: traj.stop, t: traj.last().t });
    }
    let mut worst = (0.0, 0.0);
    for s in &traj.samples {
        let exact = spec.eval(s.t).u;
        let dev = (s.u - exact).norm() / exact.norm();
        if dev > worst.0 {
            worst = (dev, s.t);
        }
    }
    Ok(Tracking { max_rel_deviation: worst.0, at_time: worst.1, samples: traj.samples.len(), stats: traj.stats })
}

/// The closed form sampled on a uniform grid over `[0, t_end]` as an analytic
/// trajectory. The grid has at least `n + 1` points and is refined until
/// consecutive phases differ by at most π/16.
pub fn sample_trajectory(spec: &TiredSpiralSpec, t_end: f64, n: usize) -> Result<Trajectory, ClosedFormError> {
    spec.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid("t_end", format!("must be finite and > 0, got {t_end}")));
    }
    // |θ'| is monotone in t for both families, so its peak is at an endpoint
    let peak = spec.angular_rate(0.0).abs().max(spec.angular_rate(t_end).abs());
    let needed = (peak * t_end / (std::f64::consts::PI / 16.0)).ceil() as usize;
    let n = n.max(needed).max(1);
    let derived = dynamics::derived_constants(&spec.initial_state(), &spec.params)?;
    let h = t_end / n as f64;
    let samples = (0..=n)
        .map(|i| {
            let t = if i == n { t_end } else { h * i as f64 };
            let pt = spec.eval(t);
            TrajectorySample::observe(&pt.state(), spec.phase_at(t), &spec.params, derived.m)
        })
        .collect();
    Ok(Trajectory {
        params: spec.params,
        model: Model::Tired,
        formulation: Formulation::Analytic,
        derived,
        samples,
        stop: StopReason::TimeReached,
        stats: StepStats::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fast(delta: f64) -> TiredSpiralSpec {
        TiredSpiralSpec::new(Family::Fast, 1.0, 0.3, 1.0, delta, 1.0).unwrap()
    }

    fn uniform(delta: f64) -> TiredSpiralSpec {
        TiredSpiralSpec::new(Family::Uniform, 1.0, 0.0, 1.0, delta, 1.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(TiredSpiralSpec::new(Family::Fast, 1.0, 0.0, 1.0, 0.0, 1.0).is_err());
        assert!(TiredSpiralSpec::new(Family::Fast, -1.0, 0.0, 1.0, 0.1, 1.0).is_err());
        assert!(TiredSpiralSpec::new(Family::Fast, 1.0, 0.0, 0.5, 0.1, 1.0).is_err());
        assert!(TiredSpiralSpec::new(Family::Uniform, 1.0, 0.0, -1.0, 2.0, 1.0).is_err());
        assert!(TiredSpiralSpec::new(Family::Uniform, 1.0, 0.0, -1.0, 0.0, 1.0).is_ok());
        let mut s = fast(0.1);
        s.params.alpha = Some(0.15);
        assert!(matches!(s.validate(), Err(ClosedFormError::InvalidSpec { field: "alpha", .. })));
        assert!(matches!(eval_uniform_spiral(&fast(0.1), 0.0), Err(ClosedFormError::WrongFamily { .. })));
    }

    #[test]
    fn initial_values() {
        let s = fast(0.1);
        let u0 = eval_fast_spiral(&s, 0.0).unwrap().u;
        let expected = Complex64::from_polar(1.0, 1.0 / 0.1 + 0.3);
        assert!((u0 - expected).norm() < 1e-15);
        let u0 = eval_uniform_spiral(&uniform(0.1), 0.0).unwrap().u;
        assert_eq!(u0, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn modulus_laws() {
        for t in [0.0, 1.0, 7.5, 30.0] {
            let f = fast(0.1).eval(t);
            assert!((f.u.norm() / (-0.1 * t).exp() - 1.0).abs() < 1e-14);
            let u = uniform(0.1).eval(t);
            assert!((u.u.norm() / (-0.05 * t).exp() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn residuals_vanish() {
        for spec in [fast(0.1), fast(0.37), uniform(0.1), uniform(1.2)] {
            for k in 0..100 {
                let t = 0.2 * k as f64;
                let r = scaled_residual(&spec, &spec.eval(t));
                assert!(r <= 1e-11, "{:?} t={t} residual {r}", spec.family);
            }
        }
    }

    #[test]
    fn literal_rate_leaves_half_delta_squared() {
        let (v, d, c) = (1.0, 0.1, 1.0);
        let mut spec = uniform(d);
        let w = literal_uniform_rate(v, d, c);
        // hand-build the literal solution and evaluate its residual
        let t = 3.0;
        let lam = Complex64::new(-0.5 * d, w);
        let u = Complex64::from_polar(v * (-0.5 * d * t).exp(), w * t);
        let ct = c * (-1.5 * d * t).exp();
        let res = lam * lam * u + lam * u * d + u * (ct / u.norm().powi(3));
        assert!(((res / u).re + 0.5 * d * d).abs() < 1e-14);
        assert!((res / u).im.abs() < 1e-14);
        spec.params.delta = 0.0;
        spec.params.alpha = Some(0.0);
        assert_eq!(spec.angular_rate(0.0), literal_uniform_rate(v, 0.0, c));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for spec in [fast(0.2), uniform(0.2)] {
            let t = 2.0;
            let pt = spec.eval(t);
            let err = |h: f64| {
                let fd = (spec.eval(t + h).u - spec.eval(t - h).u) / (2.0 * h);
                let fdd = (spec.eval(t + h).du - spec.eval(t - h).du) / (2.0 * h);
                ((fd - pt.du).norm(), (fdd - pt.ddu).norm())
            };
            let (a, b) = (err(1e-2), err(5e-3));
            assert!((a.0 / b.0 - 4.0).abs() < 0.05, "{:?} u' ratio {}", spec.family, a.0 / b.0);
            assert!((a.1 / b.1 - 4.0).abs() < 0.05, "{:?} u'' ratio {}", spec.family, a.1 / b.1);
        }
    }

    #[test]
    fn uniform_momentum_decays() {
        let spec = uniform(0.1);
        let w = (1.0f64 - 0.0025).sqrt();
        for t in [0.0, 5.0, 20.0] {
            let l = dynamics::angular_momentum(&spec.eval(t).state());
            assert!((l - w * (-0.1 * t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn clockwise_mirrors() {
        let plus = TiredSpiralSpec::new(Family::Fast, 1.0, 0.0, 1.0, 0.2, 1.0).unwrap();
        let minus = TiredSpiralSpec::new(Family::Fast, 1.0, 0.0, -1.0, 0.2, 1.0).unwrap();
        let (a, b) = (plus.eval(1.3), minus.eval(1.3));
        assert!((a.u.conj() - b.u).norm() < 1e-14);
        assert!(scaled_residual(&minus, &b) < 1e-12);
    }

    #[test]
    fn analytic_trajectory_unwinds() {
        let tr = sample_trajectory(&fast(0.1), 20.0, 10).unwrap();
        assert_eq!(tr.formulation, Formulation::Analytic);
        assert!(tr.samples.windows(2).all(|w| (w[1].theta - w[0].theta).abs() <= std::f64::consts::PI / 16.0 + 1e-12));
        assert_eq!(tr.last().t, 20.0);
    }
}

//! Model equations for the damped planar central-force problem
//!
//! ```text
//! u'' + δ u' + c u/|u|³ = 0            (dissipative)
//! u'' + c u/|u|³ = 0                   (conservative)
//! u'' + δ u' + c e^{-αt} u/|u|³ = 0    (tired charge)
//! ```
//!
//! Positions and velocities live in the complex plane. Polar coordinates
//! `u = r e^{iθ}` reduce the dissipative system to the radial equation
//!
//! ```text
//! r'' = M² e^{-2δt}/r³ − c/r² − δ r'
//! ```
//!
//! where `M = r²(0)θ'(0)` and the angular momentum decays as `r²θ' = M e^{-δt}`.
//! Everything here is a pure function of its inputs.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state is at the singular origin (|u| = 0)")]
    Singular,
    #[error("tired model requires a charge-decay rate alpha")]
    MissingAlpha,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

/// Model constants shared by every formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Damping rate δ ≥ 0.
    pub delta: f64,
    /// Central-force constant c > 0.
    pub c: f64,
    /// Charge-decay rate α ≥ 0, only read by the tired model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl Params {
    pub fn new(delta: f64, c: f64) -> Result<Self, DynamicsError> {
        let p = Params { delta, c, alpha: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, DynamicsError> {
        self.alpha = Some(alpha);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(DynamicsError::InvalidParam {
                name: "c",
                reason: format!("must be finite and > 0, got {}", self.c),
            });
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(DynamicsError::InvalidParam {
                name: "delta",
                reason: format!("must be finite and >= 0, got {}", self.delta),
            });
        }
        if let Some(alpha) = self.alpha {
            if !(alpha.is_finite() && alpha >= 0.0) {
                return Err(DynamicsError::InvalidParam {
                    name: "alpha",
                    reason: format!("must be finite and >= 0, got {alpha}"),
                });
            }
        }
        Ok(())
    }
}

/// Which of the three model equations drives the motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Dissipative,
    Conservative,
    Tired,
}

impl Model {
    /// Parameters as seen by this model: the conservative equation has no damping.
    pub fn effective_params(self, p: Params) -> Params {
        match self {
            Model::Conservative => Params { delta: 0.0, ..p },
            _ => p,
        }
    }

    /// Force constant at time `t` (decays only for the tired model).
    pub fn force_constant(self, t: f64, p: &Params) -> f64 {
        match (self, p.alpha) {
            (Model::Tired, Some(alpha)) => p.c * (-alpha * t).exp(),
            _ => p.c,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Dissipative => "dissipative",
            Model::Conservative => "conservative",
            Model::Tired => "tired",
        }
    }
}

/// Point of phase space in Cartesian (complex) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianState {
    pub t: f64,
    pub u: Complex64,
    pub v: Complex64,
}

impl CartesianState {
    pub fn new(t: f64, u: Complex64, v: Complex64) -> Self {
        CartesianState { t, u, v }
    }
}

/// Point of phase space in polar coordinates with an unwound phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub t: f64,
    pub r: f64,
    pub rdot: f64,
    pub theta: f64,
    pub thetadot: f64,
}

fn central_pull(u: Complex64, c: f64) -> Result<Complex64, DynamicsError> {
    let r = u.norm();
    if r == 0.0 {
        return Err(DynamicsError::Singular);
    }
    Ok(u * (c / (r * r * r)))
}

/// `u'' = −δ v − c u/|u|³`.
pub fn accel_dissipative(s: &CartesianState, p: &Params) -> Result<Complex64, DynamicsError> {
    Ok(-s.v * p.delta - central_pull(s.u, p.c)?)
}

/// `u'' = −δ v − c e^{−αt} u/|u|³`.
pub fn accel_tired(s: &CartesianState, p: &Params) -> Result<Complex64, DynamicsError> {
    let alpha = p.alpha.ok_or(DynamicsError::MissingAlpha)?;
    Ok(-s.v * p.delta - central_pull(s.u, p.c * (-alpha * s.t).exp())?)
}

/// Acceleration under the chosen model.
pub fn accel(model: Model, s: &CartesianState, p: &Params) -> Result<Complex64, DynamicsError> {
    match model {
        Model::Dissipative => accel_dissipative(s, p),
        Model::Conservative => Ok(-central_pull(s.u, p.c)?),
        Model::Tired => accel_tired(s, p),
    }
}

/// Right-hand side of the reduced radial equation: returns `r''`.
pub fn radial_rhs(t: f64, r: f64, rdot: f64, p: &Params, m: f64) -> Result<f64, DynamicsError> {
    if r == 0.0 {
        return Err(DynamicsError::Singular);
    }
    let decay = (-2.0 * p.delta * t).exp();
    Ok(m * m * decay / (r * r * r) - p.c / (r * r) - p.delta * rdot)
}

/// Shift `theta` by a multiple of 2π so it lies within π of `reference`.
pub fn unwind(theta: f64, reference: f64) -> f64 {
    let turns = ((reference - theta + PI) / TAU).floor();
    theta + turns * TAU
}

pub fn to_polar(s: &CartesianState, prev_theta: Option<f64>) -> Result<PolarState, DynamicsError> {
    let r = s.u.norm();
    if r == 0.0 {
        return Err(DynamicsError::Singular);
    }
    let w = s.u.conj() * s.v;
    let principal = s.u.arg();
    let theta = match prev_theta {
        Some(prev) => unwind(principal, prev),
        None => principal,
    };
    Ok(PolarState {
        t: s.t,
        r,
        rdot: w.re / r,
        theta,
        thetadot: w.im / (r * r),
    })
}

pub fn from_polar(s: &PolarState) -> Result<CartesianState, DynamicsError> {
    if !(s.r > 0.0) {
        return Err(DynamicsError::Singular);
    }
    let phase = Complex64::from_polar(1.0, s.theta);
    Ok(CartesianState {
        t: s.t,
        u: phase * s.r,
        v: phase * Complex64::new(s.rdot, s.r * s.thetadot),
    })
}

/// Specific angular momentum `Im(ū v) = r²θ'`.
pub fn angular_momentum(s: &CartesianState) -> f64 {
    s.u.re * s.v.im - s.u.im * s.v.re
}

/// Total energy `|v|²/2 − c/|u|`.
pub fn energy(s: &CartesianState, p: &Params) -> Result<f64, DynamicsError> {
    let r = s.u.norm();
    if r == 0.0 {
        return Err(DynamicsError::Singular);
    }
    Ok(0.5 * s.v.norm_sqr() - p.c / r)
}

/// Radial Lyapunov function `r'²/2 − c/r + (M²/2) e^{−2δt}/r²`.
pub fn f_function(t: f64, r: f64, rdot: f64, p: &Params, m: f64) -> Result<f64, DynamicsError> {
    if r == 0.0 {
        return Err(DynamicsError::Singular);
    }
    Ok(0.5 * rdot * rdot - p.c / r + 0.5 * m * m * (-2.0 * p.delta * t).exp() / (r * r))
}

/// Constants computed from the initial data, including every explicit
/// constant behind the global-existence and boundedness bounds.
///
/// The growth constants exist only for `M ≠ 0`. They are uniform in time:
///
/// ```text
/// K   = c/M² + sqrt(max(2F₀,0)/M² + c²/M⁴)     e^{-δt}/r(t) ≤ K e^{δt}
/// η   = 1/K                                    r(t) ≥ η e^{-2δt}
/// C   = sqrt(max(2F₀,0) + c²/M²)               |r'(t)| ≤ C e^{δt}
/// D   = C + |M|/η                              |u'(t)| ≤ D e^{δt}
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "F0")]
    pub f0: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "C_bound")]
    pub c_bound: Option<f64>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub eta: Option<f64>,
    #[serde(rename = "D_bound")]
    pub d_bound: Option<f64>,
    pub small_ok: bool,
    pub radius_bound: Option<f64>,
}

impl DerivedConstants {
    /// Time-dependent majorant of `e^{−δt}/r(t)` before it is bounded by `K e^{δt}`.
    pub fn reciprocal_radius_majorant(&self, t: f64, p: &Params) -> Option<f64> {
        if self.m == 0.0 {
            return None;
        }
        let m2 = self.m * self.m;
        let grow = (2.0 * p.delta * t).exp();
        let inner = 2.0 * self.f0 / m2 + p.c * p.c / (m2 * m2) * grow;
        Some(p.c / m2 * (p.delta * t).exp() + inner.max(0.0).sqrt())
    }
}

pub fn derived_constants(s0: &CartesianState, p: &Params) -> Result<DerivedConstants, DynamicsError> {
    let polar = to_polar(s0, None)?;
    let m = angular_momentum(s0) * (p.delta * s0.t).exp();
    let f0 = f_function(s0.t, polar.r, polar.rdot, p, m)?;
    let e0 = energy(s0, p)?;

    let (c_bound, k, eta, d_bound) = if m != 0.0 {
        let m2 = m * m;
        let pos = (2.0 * f0).max(0.0);
        let k = p.c / m2 + (pos / m2 + p.c * p.c / (m2 * m2)).sqrt();
        let eta = 1.0 / k;
        let c_bound = (pos + p.c * p.c / m2).sqrt();
        let d_bound = c_bound + m.abs() / eta;
        (Some(c_bound), Some(k), Some(eta), Some(d_bound))
    } else {
        (None, None, None, None)
    };

    let u0 = polar.r;
    let v0sq = s0.v.norm_sqr();
    let small_ok = u0 * v0sq < 2.0 * p.c;
    let radius_bound = small_ok.then(|| 2.0 * p.c * u0 / (2.0 * p.c - u0 * v0sq));

    Ok(DerivedConstants { m, f0, e0, c_bound, k, eta, d_bound, small_ok, radius_bound })
}

//! Dormand–Prince 5(4) stepping with PI step-size control, Hairer's
//! fourth-order continuous extension, bisection event location on the dense
//! output, and angle-driven output sampling.

use std::f64::consts::PI;

use super::{StepControl, StopReason, TrajectorySample};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the fifth- and fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const SHRINK_LIMIT: f64 = 5.0; // h may shrink by at most 1/5 per attempt
const GROW_LIMIT: f64 = 0.1; // and grow by at most 10x
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;

/// Target phase advance between consecutive output samples.
const SAMPLE_DTHETA: f64 = PI / 16.0;

/// A first-order system integrated by the driver.
pub(crate) trait System<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
    /// Distance from the attracting centre.
    fn radius(&self, t: f64, y: &[f64; N]) -> f64;
    fn angular_rate(&self, t: f64, y: &[f64; N]) -> f64;
    /// Force constant at `t`, used for the free-fall step cap.
    fn force_constant(&self, t: f64) -> f64;
    fn sample(&self, t: f64, y: &[f64; N], prev_theta: Option<f64>) -> TrajectorySample;
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (w, k) in terms {
            acc += w * k[i];
        }
        *o += h * acc;
    }
    out
}

struct Attempt<const N: usize> {
    y_new: [f64; N],
    k_new: [f64; N],
    err: f64,
    cont: [[f64; N]; 5],
}

fn attempt<S: System<N>, const N: usize>(
    sys: &S,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h: f64,
    ctl: &StepControl,
) -> Attempt<N> {
    let k2 = sys.rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]));
    let k3 = sys.rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]));
    let k4 = sys.rhs(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = sys.rhs(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = sys.rhs(
        t + h,
        &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y_new = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    let k7 = sys.rhs(t + h, &y_new);

    let mut sum = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = ctl.atol + ctl.rtol * y[i].abs().max(y_new[i].abs());
        sum += (e / scale).powi(2);
    }
    let err = (sum / N as f64).sqrt();

    let mut cont = [[0.0; N]; 5];
    for i in 0..N {
        let diff = y_new[i] - y[i];
        let bspl = h * k1[i] - diff;
        cont[0][i] = y[i];
        cont[1][i] = diff;
        cont[2][i] = bspl;
        cont[3][i] = diff - h * k7[i] - bspl;
        cont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }

    Attempt { y_new, k_new: k7, err: if err.is_nan() { f64::INFINITY } else { err }, cont }
}

fn dense<const N: usize>(cont: &[[f64; N]; 5], s: f64) -> [f64; N] {
    let s1 = 1.0 - s;
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = cont[0][i] + s * (cont[1][i] + s1 * (cont[2][i] + s * (cont[3][i] + s1 * cont[4][i])));
    }
    out
}

pub(crate) struct Run {
    pub samples: Vec<TrajectorySample>,
    pub stop: StopReason,
    pub accepted: usize,
    pub rejected: usize,
}

pub(crate) fn drive<S: System<N>, const N: usize>(
    sys: &S,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    r_min: f64,
    ctl: &StepControl,
) -> Run {
    let mut t = t0;
    let mut y = y0;
    let mut k1 = sys.rhs(t, &y);
    let mut h = ctl.h_init;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let mut accepted = 0;
    let mut rejected = 0;

    let mut samples = vec![sys.sample(t, &y, None)];
    let mut theta = samples[0].theta;

    let stop = loop {
        if t >= t_end {
            break StopReason::TimeReached;
        }
        if accepted + rejected >= ctl.max_steps {
            break StopReason::StepBudgetExhausted;
        }

        let mut cap = ctl.h_max;
        if let Some(fraction) = ctl.freefall_fraction {
            let r = sys.radius(t, &y);
            cap = cap.min(fraction * r * r.sqrt() / sys.force_constant(t).sqrt());
        }
        h = h.min(cap);
        let last = h >= t_end - t;
        if last {
            h = t_end - t;
        }
        if h < ctl.h_min || t + h == t {
            break StopReason::StepUnderflow;
        }

        let step = attempt(sys, t, &y, &k1, h, ctl);
        if step.err > 1.0 {
            rejected += 1;
            last_rejected = true;
            let fac11 = if step.err.is_finite() { step.err.powf(EXPO1) } else { f64::INFINITY };
            h /= SHRINK_LIMIT.min(fac11 / SAFETY);
            continue;
        }
        accepted += 1;
        let t_new = if last { t_end } else { t + h };

        // collision event: probe the interior as well as the endpoint
        let crossing = [0.5, 1.0].into_iter().find(|&s| {
            let ys = if s == 1.0 { step.y_new } else { dense(&step.cont, s) };
            sys.radius(t + s * h, &ys) <= r_min
        });
        if let Some(hi) = crossing {
            let s = locate_crossing(sys, &step.cont, t, h, 0.0, hi, r_min, ctl.rtol);
            let ys = dense(&step.cont, s);
            push_dense_samples(sys, &step.cont, t, h, s, &ys, &mut samples, &mut theta);
            let at = sys.sample(t + s * h, &ys, Some(theta));
            let r = at.r;
            samples.push(at);
            break StopReason::CollisionThreshold { r };
        }

        let k_new = step.k_new;
        push_dense_samples(sys, &step.cont, t, h, 1.0, &step.y_new, &mut samples, &mut theta);
        let end = sys.sample(t_new, &step.y_new, Some(theta));
        theta = end.theta;
        samples.push(end);

        t = t_new;
        y = step.y_new;
        k1 = k_new;

        let fac11 = step.err.powf(EXPO1);
        let fac = (fac11 / facold.powf(BETA) / SAFETY).clamp(GROW_LIMIT, SHRINK_LIMIT);
        let mut h_new = h / fac;
        if last_rejected {
            h_new = h_new.min(h);
        }
        facold = step.err.max(1e-4);
        last_rejected = false;
        h = h_new;
    };

    Run { samples, stop, accepted, rejected }
}

/// Interior samples so the stored phase never advances by more than about π/8.
#[allow(clippy::too_many_arguments)]
fn push_dense_samples<S: System<N>, const N: usize>(
    sys: &S,
    cont: &[[f64; N]; 5],
    t: f64,
    h: f64,
    upto: f64,
    y_end: &[f64; N],
    samples: &mut Vec<TrajectorySample>,
    theta: &mut f64,
) {
    let y0 = &cont[0];
    let rate = sys.angular_rate(t, y0).abs().max(sys.angular_rate(t + upto * h, y_end).abs());
    let pieces = (rate * upto * h / SAMPLE_DTHETA).ceil();
    if !(pieces > 1.0) {
        return;
    }
    let pieces = pieces.min(1e6) as usize;
    for j in 1..pieces {
        let s = upto * j as f64 / pieces as f64;
        let ys = dense(cont, s);
        let sample = sys.sample(t + s * h, &ys, Some(*theta));
        *theta = sample.theta;
        samples.push(sample);
    }
}

/// Bisection for the first dense-output time where the radius reaches `r_min`.
/// Returns the step fraction at the upper bracket (radius ≤ r_min).
#[allow(clippy::too_many_arguments)]
fn locate_crossing<S: System<N>, const N: usize>(
    sys: &S,
    cont: &[[f64; N]; 5],
    t: f64,
    h: f64,
    mut lo: f64,
    mut hi: f64,
    r_min: f64,
    rtol: f64,
) -> f64 {
    while hi - lo > rtol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sys.radius(t + mid * h, &dense(cont, mid)) <= r_min {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

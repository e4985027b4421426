use num_complex::Complex64;

use super::{IntegrateError, Trajectory, TrajectorySample};
use crate::dynamics::{self, CartesianState};

/// Quintic Hermite interpolant through position, velocity and acceleration
/// at both ends of `[0, 1]`. Returns (position, derivative) at `s`.
fn hermite5(
    s: f64,
    p: [Complex64; 2],
    d: [Complex64; 2],
    dd: [Complex64; 2],
) -> (Complex64, Complex64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h3 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h5 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;

    let g0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let g1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let g2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let g3 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let g4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let g5 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;

    let value = p[0] * h0 + d[0] * h1 + dd[0] * h2 + dd[1] * h3 + d[1] * h4 + p[1] * h5;
    let slope = p[0] * g0 + d[0] * g1 + dd[0] * g2 + dd[1] * g3 + d[1] * g4 + p[1] * g5;
    (value, slope)
}

/// Interpolate the trajectory at `times` from its stored samples.
///
/// Between consecutive samples the position is the quintic Hermite
/// interpolant of `(u, u', u'')`, with `u''` from the trajectory's model; the
/// velocity is its derivative. Times that coincide with a stored sample
/// return that sample unchanged.
pub fn resample_dense(traj: &Trajectory, times: &[f64]) -> Result<Vec<TrajectorySample>, IntegrateError> {
    let (start, end) = traj.span();
    let samples = &traj.samples;
    let m = traj.derived.m;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= start && t <= end) {
            return Err(IntegrateError::OutOfSpan { t, start, end });
        }
        // first sample with time >= t
        let j = samples.partition_point(|s| s.t < t);
        if samples[j].t == t {
            out.push(samples[j]);
            continue;
        }
        let (a, b) = (&samples[j - 1], &samples[j]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (acc_a, acc_b) = (traj.acceleration(a), traj.acceleration(b));
        let (u, du) = hermite5(s, [a.u, b.u], [a.v * h, b.v * h], [acc_a * (h * h), acc_b * (h * h)]);
        let state = CartesianState::new(t, u, du / h);
        let theta = dynamics::unwind(u.arg(), a.theta);
        out.push(TrajectorySample::observe(&state, theta, &traj.params, m));
    }
    Ok(out)
}

/// `n + 1` uniformly spaced times spanning the trajectory.
pub fn uniform_grid(traj: &Trajectory, n: usize) -> Vec<f64> {
    let (start, end) = traj.span();
    let h = (end - start) / n as f64;
    (0..=n).map(|i| if i == n { end } else { start + h * i as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_quintics() {
        // p(s) = 1 + 2s - s^2 + 3s^3 - 4s^4 + 5s^5 on [0, 1]
        let poly = |s: f64| 1.0 + 2.0 * s - s * s + 3.0 * s.powi(3) - 4.0 * s.powi(4) + 5.0 * s.powi(5);
        let d1 = |s: f64| 2.0 - 2.0 * s + 9.0 * s * s - 16.0 * s.powi(3) + 25.0 * s.powi(4);
        let d2 = |s: f64| -2.0 + 18.0 * s - 48.0 * s * s + 100.0 * s.powi(3);
        let c = |x: f64| Complex64::new(x, -x);
        for s in [0.0, 0.13, 0.5, 0.77, 1.0] {
            let (v, dv) = hermite5(s, [c(poly(0.0)), c(poly(1.0))], [c(d1(0.0)), c(d1(1.0))], [c(d2(0.0)), c(d2(1.0))]);
            assert!((v - c(poly(s))).norm() < 1e-13, "value at {s}");
            assert!((dv - c(d1(s))).norm() < 1e-12, "slope at {s}");
        }
    }
}

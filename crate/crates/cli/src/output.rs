use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use orbitlab_core::integrator::{Trajectory, TrajectorySample};
use serde::Serialize;

use crate::CliError;

pub const TRAJECTORY_HEADER: &str = "t,re_u,im_u,re_v,im_v,r,theta,L,E,F";

/// Write `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Usage(format!("stdout: {e}")))
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn sample_row(out: &mut String, s: &TrajectorySample) {
    let cols = [s.t, s.u.re, s.u.im, s.v.re, s.v.im, s.r, s.theta, s.l, s.e, s.f];
    for (i, x) in cols.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&num(*x));
    }
    out.push('\n');
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(200 * traj.samples.len() + 64);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        sample_row(&mut out, s);
    }
    out
}

/// At most `cap` evenly strided indices, always keeping the last.
fn stride(len: usize, cap: usize) -> impl Iterator<Item = usize> {
    let step = len.div_ceil(cap).max(1);
    (0..len).step_by(step).chain((len > 0 && !(len - 1).is_multiple_of(step)).then(|| len - 1))
}

/// Planar orbit as a polyline with a log10-radius-vs-time inset.
pub fn orbit_svg(traj: &Trajectory) -> String {
    const SIZE: f64 = 640.0;
    const PAD: f64 = 20.0;
    const CAP: usize = 20_000;
    let reach = traj.samples.iter().map(|s| s.u.re.abs().max(s.u.im.abs())).fold(f64::MIN_POSITIVE, f64::max);
    let scale = (SIZE / 2.0 - PAD) / reach;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<circle cx="{c}" cy="{c}" r="2" fill="black"/>"#, c = SIZE / 2.0);
    let _ = write!(svg, r#"<polyline fill="none" stroke="steelblue" stroke-width="0.8" points=""#);
    for i in stride(traj.samples.len(), CAP) {
        let s = &traj.samples[i];
        let _ = write!(svg, "{:.3},{:.3} ", SIZE / 2.0 + scale * s.u.re, SIZE / 2.0 - scale * s.u.im);
    }
    let _ = writeln!(svg, r#""/>"#);

    // inset: log10 r against t in the lower-right corner
    let (w, h) = (SIZE * 0.35, SIZE * 0.22);
    let (x0, y0) = (SIZE - w - PAD, SIZE - h - PAD);
    let (t0, t1) = traj.span();
    let logs: Vec<f64> = traj.samples.iter().map(|s| s.r.log10()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span_y = if hi > lo { hi - lo } else { 1.0 };
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let _ = writeln!(
        svg,
        r#"<g><rect x="{x0:.3}" y="{y0:.3}" width="{w:.3}" height="{h:.3}" fill="white" stroke="gray"/>"#
    );
    let _ = write!(svg, r#"<polyline fill="none" stroke="firebrick" stroke-width="0.8" points=""#);
    for i in stride(logs.len(), CAP) {
        let x = x0 + w * (traj.samples[i].t - t0) / span_t;
        let y = y0 + h - h * (logs[i] - lo) / span_y;
        let _ = write!(svg, "{x:.3},{y:.3} ");
    }
    let _ = writeln!(svg, r#""/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}" font-size="10" font-family="monospace">log10 r in [{lo:.2}, {hi:.2}], t in [{t0:.2}, {t1:.2}]</text></g>"#,
        x0 + 4.0,
        y0 + 12.0
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, 1e-10, -3.25e300, 2f64.sqrt(), f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0");
    }

    #[test]
    fn strides_keep_last() {
        assert_eq!(stride(5, 10).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
        assert_eq!(stride(10, 3).collect::<Vec<_>>(), [0, 4, 8, 9]);
        assert_eq!(stride(0, 3).count(), 0);
    }
}

//! Shooting on `Q(0)` for `Q'' + (2/r) Q' - Q + Q^3 = 0`.
//!
//! The ODE is integrated for `v = r Q`, which satisfies the regular equation
//! `v'' = v - v^3 / r^2`; the coordinate singularity at the origin is handled
//! by the series start `Q(r0) = Q0 (1 - (Q0^2 - 1) r0^2 / 6)`.

use crate::error::{Error, Result};

use super::profile::RadialProfile;

/// Tuning knobs of the shooting solver.
#[derive(Clone, Debug)]
pub struct ShootingOptions {
    /// Fixed RK4 step, also the spacing of the returned table.
    pub step: f64,
    /// Integration stops here if no far-field event occurred.
    pub r_far: f64,
    /// Left end of the integration (series start).
    pub r0: f64,
    /// Initial bracket for `Q(0)`.
    pub bracket: (f64, f64),
    /// Below this value the numerical profile is replaced by `A e^(-r)/r`.
    pub tail_switch: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            step: 5e-4,
            r_far: 40.0,
            r0: 1e-6,
            bracket: (1.0, 10.0),
            tail_switch: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum FarField {
    /// `Q` crossed zero: `Q(0)` too large.
    Crossed,
    /// `Q` turned upward or never decayed: `Q(0)` too small.
    TurnedUp,
}

struct Orbit {
    q: Vec<f64>,
    dq: Vec<f64>,
    verdict: FarField,
}

fn rhs(r: f64, v: f64, w: f64) -> (f64, f64) {
    (w, v - v * v * v / (r * r))
}

fn rk4(r: f64, v: f64, w: f64, h: f64) -> (f64, f64) {
    let (k1v, k1w) = rhs(r, v, w);
    let (k2v, k2w) = rhs(r + 0.5 * h, v + 0.5 * h * k1v, w + 0.5 * h * k1w);
    let (k3v, k3w) = rhs(r + 0.5 * h, v + 0.5 * h * k2v, w + 0.5 * h * k2w);
    let (k4v, k4w) = rhs(r + h, v + h * k3v, w + h * k3w);
    (
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    )
}

/// Integrates from the origin on nodes `i * step` until a far-field event.
fn shoot(q0: f64, opts: &ShootingOptions, record: bool) -> Orbit {
    let h = opts.step;
    let r0 = opts.r0;
    let a2 = -q0 * (q0 * q0 - 1.0) / 6.0;
    let q_start = q0 + a2 * r0 * r0;
    let dq_start = 2.0 * a2 * r0;
    let mut v = r0 * q_start;
    let mut w = q_start + r0 * dq_start;
    (v, w) = rk4(r0, v, w, h - r0);

    let mut q = Vec::new();
    let mut dq = Vec::new();
    if record {
        q.push(q0);
        dq.push(0.0);
    }
    let steps = (opts.r_far / h).ceil() as usize;
    let mut verdict = FarField::TurnedUp;
    for i in 1..=steps {
        let r = i as f64 * h;
        let qi = v / r;
        let dqi = (w - qi) / r;
        if qi < 0.0 {
            verdict = FarField::Crossed;
            break;
        }
        if dqi > 0.0 {
            verdict = FarField::TurnedUp;
            break;
        }
        if record {
            q.push(qi);
            dq.push(dqi);
        }
        (v, w) = rk4(r, v, w, h);
    }
    Orbit { q, dq, verdict }
}

pub(crate) fn classify(q0: f64, opts: &ShootingOptions) -> FarField {
    shoot(q0, opts, false).verdict
}

/// Bisects on `Q(0)` down to adjacent floating-point values and returns
/// `Q(0)` with the tabulated profile.
pub(crate) fn solve(opts: &ShootingOptions) -> Result<(f64, RadialProfile)> {
    if !(opts.step > 0.0 && opts.step < 0.1 && opts.r0 > 0.0 && opts.r0 < opts.step) {
        return Err(Error::param("step", "need 0 < r0 < step < 0.1"));
    }
    let (mut lo, mut hi) = opts.bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::BracketFailure {
            lo,
            hi,
            reason: "bracket must satisfy 0 < lo < hi".into(),
        });
    }
    if classify(lo, opts) != FarField::TurnedUp {
        return Err(Error::BracketFailure {
            lo,
            hi,
            reason: format!("Q(0) = {lo} already crosses zero"),
        });
    }
    if classify(hi, opts) != FarField::Crossed {
        return Err(Error::BracketFailure {
            lo,
            hi,
            reason: format!("Q(0) = {hi} never crosses zero"),
        });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(mid, opts) {
            FarField::Crossed => hi = mid,
            FarField::TurnedUp => lo = mid,
        }
    }

    let orbit = shoot(lo, opts, true);
    let h = opts.step;
    let cut = orbit
        .q
        .iter()
        .position(|&q| q < opts.tail_switch)
        .ok_or_else(|| Error::ToleranceUnreachable {
            residual: orbit.q.last().copied().unwrap_or(f64::NAN),
            tol: opts.tail_switch,
        })?;
    let q: Vec<f64> = orbit.q[..=cut].to_vec();
    let dq: Vec<f64> = orbit.dq[..=cut].to_vec();
    let d2q: Vec<f64> = q
        .iter()
        .zip(&dq)
        .enumerate()
        .map(|(i, (&qi, &dqi))| {
            if i == 0 {
                (qi - qi * qi * qi) / 3.0
            } else {
                qi - qi * qi * qi - 2.0 * dqi / (i as f64 * h)
            }
        })
        .collect();
    let r_cut = cut as f64 * h;
    let amplitude = q[cut] * r_cut * r_cut.exp();
    Ok((lo, RadialProfile::new(h, q, dq, d2q, Some(amplitude))))
}

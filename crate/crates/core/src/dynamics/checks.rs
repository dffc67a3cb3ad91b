//! Consistency checks evaluated on recorded trajectories.

use serde::Serialize;

use crate::error::{Error, Result};

use super::{DiagnosticsRecord, Trajectory};

/// Three-point derivative of `y` at `t[1]` on a nonuniform stencil.
pub(crate) fn central_derivative(t: [f64; 3], y: [f64; 3]) -> f64 {
    let h1 = t[1] - t[0];
    let h2 = t[2] - t[1];
    -h2 / (h1 * (h1 + h2)) * y[0] + (h2 - h1) / (h1 * h2) * y[1] + h1 / (h2 * (h1 + h2)) * y[2]
}

/// Largest `|dI_R/dt - F_{R,V}| / (4 (2 ||grad u||^2 + mu int V|u|^2 + 3/2 ||u||_4^4))`
/// over interior records, with `dI_R/dt` by central differences. The scale is
/// the size of the terms of `F`, which itself crosses zero along trajectories.
/// Only records taken before the sponge started absorbing are used.
pub fn virial_identity_check(traj: &Trajectory, radius: f64) -> Result<f64> {
    let k = traj.radius_index(radius).ok_or_else(|| {
        Error::InsufficientData(format!("radius {radius} was not recorded on this trajectory"))
    })?;
    let cut = traj.monitors_suspended_at.unwrap_or(f64::INFINITY);
    let recs: Vec<&DiagnosticsRecord> = traj.records.iter().filter(|r| r.t < cut).collect();
    if recs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "virial identity check needs 3 records, have {}",
            recs.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for w in recs.windows(3) {
        let d = central_derivative([w[0].t, w[1].t, w[2].t], [w[0].i_r[k], w[1].i_r[k], w[2].i_r[k]]);
        let r = w[1];
        let scale = 4.0 * (2.0 * r.grad_sq + traj.potential.mu * r.pot_term + 1.5 * r.l4_fourth);
        worst = worst.max((d - r.f_r[k]).abs() / scale);
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectorySide {
    BlowUp,
    Scattering,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexityReport {
    /// Decided by the sign of `delta` at the first record.
    pub side: TrajectorySide,
    pub records: usize,
    /// `f'' = 4 P_V < 0` at every record.
    pub f2_negative_all: bool,
    /// The variance flux decreases strictly over the second half of the run.
    pub flux_eventually_decreasing: bool,
    pub delta_negative_all: bool,
    pub delta_positive_all: bool,
    pub pv_positive_all: bool,
    /// Largest `|d(flux)/dt - 4 P_V| / (1 + |4 P_V|)` over interior records.
    pub f2_mismatch: Option<f64>,
    /// The assertions for `side` all hold.
    pub holds: bool,
}

pub fn variance_convexity_check(traj: &Trajectory) -> ConvexityReport {
    let recs = &traj.records;
    let side = if recs.first().is_some_and(|r| r.delta < 0.0) {
        TrajectorySide::BlowUp
    } else {
        TrajectorySide::Scattering
    };
    let f2_negative_all = recs.iter().all(|r| r.pv < 0.0);
    let delta_negative_all = recs.iter().all(|r| r.delta < 0.0);
    let delta_positive_all = recs.iter().all(|r| r.delta > 0.0);
    let pv_positive_all = recs.iter().all(|r| r.pv > 0.0);
    let fluxes: Option<Vec<f64>> = recs.iter().map(|r| r.flux).collect();
    let flux_eventually_decreasing = fluxes.as_ref().is_some_and(|f| {
        let tail = &f[f.len() / 2..];
        tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0])
    });
    let f2_mismatch = fluxes.as_ref().filter(|f| f.len() >= 3).map(|f| {
        let mut worst: f64 = 0.0;
        for i in 1..f.len() - 1 {
            let d = central_derivative(
                [recs[i - 1].t, recs[i].t, recs[i + 1].t],
                [f[i - 1], f[i], f[i + 1]],
            );
            let want = 4.0 * recs[i].pv;
            worst = worst.max((d - want).abs() / (1.0 + want.abs()));
        }
        worst
    });
    let holds = match side {
        TrajectorySide::BlowUp => f2_negative_all && flux_eventually_decreasing && delta_negative_all,
        TrajectorySide::Scattering => delta_positive_all,
    };
    ConvexityReport {
        side,
        records: recs.len(),
        f2_negative_all,
        flux_eventually_decreasing,
        delta_negative_all,
        delta_positive_all,
        pv_positive_all,
        f2_mismatch,
        holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_derivative_exact_on_quadratics() {
        let f = |t: f64| 3.0 * t * t - 2.0 * t + 1.0;
        let t = [0.1, 0.25, 0.7];
        let d = central_derivative(t, [f(t[0]), f(t[1]), f(t[2])]);
        assert!((d - (6.0 * 0.25 - 2.0)).abs() < 1e-12);
    }
}

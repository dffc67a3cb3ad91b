//! Space-time L5 norms along near-soliton data below threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_with, DiagnosticsPlan, RunStatus, SolverSettings, Trajectory};
use crate::error::{Error, Result};
use crate::functionals::PotentialSpec;
use crate::grid::CartesianGrid;
use crate::groundstate::GroundState;

use super::threshold::make_translated_family;

/// Largest admitted spacing between `int |u|^5` samples.
pub const MAX_SAMPLE_SPACING: f64 = 0.05;

/// `(int_window int |u|^5 dx dt)^(1/5)` by the trapezoid rule over the
/// trajectory's norm samples.
pub fn l5_norm(traj: &Trajectory, window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    if !(t1 >= t0) {
        return Err(Error::param("window", format!("empty window [{t0}, {t1}]")));
    }
    let slack = 1e-9 * t1.abs().max(1.0);
    let samples: Vec<_> = traj
        .norm_samples
        .iter()
        .filter(|s| s.t >= t0 - slack && s.t <= t1 + slack)
        .collect();
    if t1 == t0 {
        return Ok(0.0);
    }
    let first = samples.first().map_or(f64::INFINITY, |s| s.t);
    let last = samples.last().map_or(f64::NEG_INFINITY, |s| s.t);
    let widest = samples
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .fold(0.0, f64::max);
    if samples.len() < 2
        || first - t0 > slack
        || t1 - last > slack
        || widest > MAX_SAMPLE_SPACING + slack
    {
        return Err(Error::InsufficientData(format!(
            "L5 window [{t0}, {t1}] needs samples at spacing <= {MAX_SAMPLE_SPACING}; have {} samples over [{first}, {last}], widest gap {widest}",
            samples.len()
        )));
    }
    let integral: f64 = samples
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].l5_fifth + w[1].l5_fifth))
        .sum();
    Ok(integral.powf(0.2))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthSettings {
    pub l: f64,
    pub m: usize,
    pub solver: SolverSettings,
    /// Thresholds `delta0 / ||Q||^2_{Hdot1}` at which near-soliton time is measured.
    pub delta0_fractions: Vec<f64>,
}

impl Default for GrowthSettings {
    fn default() -> Self {
        GrowthSettings {
            l: 16.0,
            m: 96,
            solver: SolverSettings {
                dt0: 1e-2,
                t_end: 20.0,
                adapt: crate::dynamics::AdaptSettings {
                    enabled: false,
                    ..Default::default()
                },
                ..Default::default()
            },
            delta0_fractions: vec![0.1],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub n: usize,
    pub eps: f64,
    pub x: [f64; 3],
    /// `M(Q)^2 - E_V M` of the datum; positive below threshold.
    pub threshold_gap: f64,
    pub pv0: f64,
    pub status: Option<RunStatus>,
    pub l5: Option<f64>,
    /// Time with `|delta(t)| < delta0`, one entry per configured fraction.
    pub near_soliton_time: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthStudy {
    pub t_end: f64,
    pub delta0_fractions: Vec<f64>,
    pub rows: Vec<GrowthRow>,
}

impl GrowthStudy {
    pub fn l5_increasing(&self) -> bool {
        strictly_increasing(self.rows.iter().map(|r| r.l5))
    }

    /// Strict increase of the near-soliton time for the `k`-th threshold.
    pub fn duration_increasing(&self, k: usize) -> bool {
        strictly_increasing(self.rows.iter().map(|r| r.near_soliton_time.get(k).copied()))
    }
}

fn strictly_increasing(values: impl Iterator<Item = Option<f64>>) -> bool {
    let v: Option<Vec<f64>> = values.collect();
    v.is_some_and(|v| v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]))
}

/// Time with `|delta| < delta0`, counting each record interval whose
/// endpoints both qualify.
fn time_below(traj: &Trajectory, delta0: f64) -> f64 {
    traj.records
        .windows(2)
        .filter(|w| w[0].delta.abs() < delta0 && w[1].delta.abs() < delta0)
        .fold(0.0, |acc, w| acc + (w[1].t - w[0].t))
}

/// Evolves `(1 - eps_n) Q(x - x_n)` for each pair. Runs are independent and
/// fan out over the rayon pool; a failed run leaves its row with `error`.
pub fn run_threshold_growth_study(
    eps: &[f64],
    centers: &[[f64; 3]],
    pot: &PotentialSpec,
    gs: &GroundState,
    settings: &GrowthSettings,
) -> Result<GrowthStudy> {
    settings.solver.validate()?;
    if settings.delta0_fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::config("delta0_fractions", "entries must be positive"));
    }
    let grid = CartesianGrid::new(settings.l, settings.m)?;
    let data = make_translated_family(gs, eps, centers, &grid, pot)?;
    let t_end = settings.solver.t_end;
    let plan = DiagnosticsPlan {
        radii: Vec::new(),
        variance: false,
        snapshot_times: Vec::new(),
        norm_sample_interval: MAX_SAMPLE_SPACING,
    };
    let rows = data
        .par_iter()
        .enumerate()
        .map(|(n, d)| {
            let mut row = GrowthRow {
                n,
                eps: d.eps,
                x: d.center,
                threshold_gap: -d.threshold_excess,
                pv0: d.virial,
                status: None,
                l5: None,
                near_soliton_time: Vec::new(),
                error: None,
            };
            match evolve_with(&d.field, pot, &settings.solver, &plan)
                .and_then(|traj| Ok((l5_norm(&traj, (0.0, traj.t_final()))?, traj)))
            {
                Ok((l5, traj)) => {
                    row.status = Some(traj.status);
                    row.l5 = Some(l5);
                    row.near_soliton_time = settings
                        .delta0_fractions
                        .iter()
                        .map(|f| time_below(&traj, f * gs.hdot1_sq()))
                        .collect();
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(GrowthStudy {
        t_end,
        delta0_fractions: settings.delta0_fractions.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_with, SolverSettings};
    use crate::field::ComplexField;
    use crate::grid::{Grid, RadialGrid};

    fn plan() -> DiagnosticsPlan {
        DiagnosticsPlan {
            radii: Vec::new(),
            variance: false,
            snapshot_times: Vec::new(),
            norm_sample_interval: 0.05,
        }
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let grid = Grid::Radial(RadialGrid::new(10.0, 64).unwrap());
        let s = SolverSettings { t_end: 0.5, ..Default::default() };
        let traj = evolve_with(&ComplexField::zeros(&grid), &PotentialSpec::free(), &s, &plan()).unwrap();
        assert_eq!(l5_norm(&traj, (0.0, 0.5)).unwrap(), 0.0);
    }

    #[test]
    fn stationary_soliton_gives_window_power() {
        let gs = GroundState::certified().unwrap();
        let grid = Grid::Radial(RadialGrid::new(30.0, 1024).unwrap());
        let q = gs.sample(&grid, [0.0; 3]).unwrap();
        // short window: Q is linearly unstable and any seed grows like e^(5.5 t)
        let s = SolverSettings { t_end: 0.5, dt0: 1e-4, ..Default::default() };
        let traj = evolve_with(&q, &PotentialSpec::free(), &s, &plan()).unwrap();
        let want = 0.5f64.powf(0.2) * q.lp_pow(5.0).powf(0.2);
        let got = l5_norm(&traj, (0.0, 0.5)).unwrap();
        assert!((got - want).abs() < 1e-5 * want, "{got} vs {want}");
        assert!(l5_norm(&traj, (0.0, 1.0)).is_err());
    }

    #[test]
    fn sparse_samples_are_rejected() {
        let grid = Grid::Radial(RadialGrid::new(10.0, 64).unwrap());
        let s = SolverSettings { t_end: 0.5, ..Default::default() };
        let mut p = plan();
        p.norm_sample_interval = 0.1;
        let traj = evolve_with(&ComplexField::zeros(&grid), &PotentialSpec::free(), &s, &p).unwrap();
        assert!(l5_norm(&traj, (0.0, 0.5)).is_err());
    }

    #[test]
    fn strict_increase_needs_every_entry() {
        assert!(strictly_increasing([Some(0.0), Some(1.0)].into_iter()));
        assert!(!strictly_increasing([Some(0.0), Some(0.0)].into_iter()));
        assert!(!strictly_increasing([Some(0.0), None].into_iter()));
    }
}

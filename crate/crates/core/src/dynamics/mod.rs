//! Time evolution by Strang splitting, with conservation monitoring,
//! adaptive stepping, blow-up detection and an absorbing sponge layer.

mod checks;
mod evolve;
mod stepper;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::functionals::PotentialSpec;
use crate::grid::Grid;

pub use checks::{
    variance_convexity_check, virial_identity_check, ConvexityReport, TrajectorySide,
};
pub use evolve::{evolve, evolve_backward, evolve_with};
pub use stepper::{strang_step, SplitStepper};

/// Mass absorbed by the sponge beyond which conservation drift is no longer
/// meaningful.
pub const MONITOR_SUSPEND_MASS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpongeSettings {
    pub enabled: bool,
    /// Width of the absorbing layer as a fraction of the domain extent.
    pub width: f64,
    /// Peak absorption rate `sigma`.
    pub strength: f64,
    /// Stop once the remaining mass falls below this fraction of the initial mass.
    pub stop_fraction: f64,
}

impl Default for SpongeSettings {
    fn default() -> Self {
        SpongeSettings {
            enabled: false,
            width: 0.2,
            strength: 2.0,
            stop_fraction: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptSettings {
    pub enabled: bool,
    /// Factor by which `dt` shrinks on a rejected step and grows after a clean run.
    pub gain: f64,
    /// Largest accepted per-step energy jump relative to `|E_V|`.
    pub energy_tol: f64,
    pub clean_steps: usize,
}

impl Default for AdaptSettings {
    fn default() -> Self {
        AdaptSettings {
            enabled: true,
            gain: 2.0,
            energy_tol: 1e-8,
            clean_steps: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub dt0: f64,
    pub dt_min: f64,
    /// Upper bound on the nonlinear phase rotation `dt * sup|u|^2` per step.
    pub cfl_like_cap: f64,
    pub t_end: f64,
    pub sponge: SpongeSettings,
    pub record_every: usize,
    pub blowup_gradfactor: f64,
    pub adapt: AdaptSettings,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            dt0: 1e-3,
            dt_min: 1e-8,
            cfl_like_cap: 0.5,
            t_end: 10.0,
            sponge: SpongeSettings::default(),
            record_every: 10,
            blowup_gradfactor: 4.0,
            adapt: AdaptSettings::default(),
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Err(Error::config(format!("solver.{field}"), reason));
        if !(self.dt0.is_finite() && self.dt0 > 0.0) {
            return bad("dt0", format!("must be positive, got {}", self.dt0));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt0) {
            return bad("dt_min", format!("must lie in (0, dt0], got {}", self.dt_min));
        }
        if !(self.cfl_like_cap > 0.0) {
            return bad("cfl_like_cap", format!("must be positive, got {}", self.cfl_like_cap));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return bad("t_end", format!("must be positive, got {}", self.t_end));
        }
        if self.record_every == 0 {
            return bad("record_every", "must be at least 1".into());
        }
        if !(self.blowup_gradfactor > 1.0) {
            return bad(
                "blowup_gradfactor",
                format!("must exceed 1, got {}", self.blowup_gradfactor),
            );
        }
        let s = &self.sponge;
        if !(s.width > 0.0 && s.width < 0.5) {
            return bad("sponge.width", format!("must lie in (0, 0.5), got {}", s.width));
        }
        if !(s.strength >= 0.0 && s.strength.is_finite()) {
            return bad("sponge.strength", format!("must be >= 0, got {}", s.strength));
        }
        if !(0.0..1.0).contains(&s.stop_fraction) {
            return bad(
                "sponge.stop_fraction",
                format!("must lie in [0, 1), got {}", s.stop_fraction),
            );
        }
        let a = &self.adapt;
        if !(a.gain > 1.0) {
            return bad("adapt.gain", format!("must exceed 1, got {}", a.gain));
        }
        if !(a.energy_tol > 0.0) {
            return bad("adapt.energy_tol", format!("must be positive, got {}", a.energy_tol));
        }
        Ok(())
    }
}

/// What to measure along a run besides the conserved quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsPlan {
    /// Radii `R` (may include `inf`) at which `I_R` and `F_{R,V}` are recorded.
    pub radii: Vec<f64>,
    pub variance: bool,
    /// Times at which full field snapshots are kept.
    pub snapshot_times: Vec<f64>,
    /// Spacing of the `int |u|^4` / `int |u|^5` samples; `0` disables them.
    pub norm_sample_interval: f64,
}

impl Default for DiagnosticsPlan {
    fn default() -> Self {
        DiagnosticsPlan {
            radii: vec![f64::INFINITY],
            variance: true,
            snapshot_times: Vec::new(),
            norm_sample_interval: 0.0,
        }
    }
}

impl DiagnosticsPlan {
    pub fn validate(&self) -> Result<()> {
        for &r in &self.radii {
            if !(r >= 1.0) {
                return Err(Error::config("diagnostics.radii", format!("radius {r} below 1")));
            }
        }
        for &t in &self.snapshot_times {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::config(
                    "diagnostics.snapshot_times",
                    format!("time {t} is not a finite non-negative number"),
                ));
            }
        }
        if !(self.norm_sample_interval >= 0.0 && self.norm_sample_interval.is_finite()) {
            return Err(Error::config(
                "diagnostics.norm_sample_interval",
                format!("must be >= 0, got {}", self.norm_sample_interval),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: usize,
    pub mass: f64,
    pub energy: f64,
    pub pv: f64,
    pub delta: f64,
    pub grad_sq: f64,
    pub l4_fourth: f64,
    pub pot_term: f64,
    /// `I_R` for each configured radius, in the plan's order.
    pub i_r: Vec<f64>,
    /// `F_{R,V}` for each configured radius.
    pub f_r: Vec<f64>,
    pub variance: Option<f64>,
    pub flux: Option<f64>,
    pub sup_norm: f64,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowupDetected,
    Underresolved,
    SpongeAbsorbed,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowupDetected => "blowup_detected",
            RunStatus::Underresolved => "underresolved",
            RunStatus::SpongeAbsorbed => "sponge_absorbed",
        }
    }
}

impl std::fmt::Display for RunStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `int |u|^4` and `int |u|^5` at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub l4_fourth: f64,
    pub l5_fifth: f64,
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub field: ComplexField,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub potential: PotentialSpec,
    pub radii: Vec<f64>,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<Snapshot>,
    pub norm_samples: Vec<NormSample>,
    pub status: RunStatus,
    pub steps: usize,
    pub rejected_steps: usize,
    pub absorbed_mass: f64,
    /// Time at which the absorbed mass first exceeded [`MONITOR_SUSPEND_MASS`].
    pub monitors_suspended_at: Option<f64>,
    pub final_field: ComplexField,
}

impl Trajectory {
    pub fn grid(&self) -> &Grid {
        self.final_field.grid()
    }

    pub fn t_final(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    fn monitored(&self) -> impl Iterator<Item = &DiagnosticsRecord> {
        let cut = self.monitors_suspended_at.unwrap_or(f64::INFINITY);
        self.records.iter().filter(move |r| r.t < cut)
    }

    /// Largest `|M(t) - M(0)| / M(0)` over monitored records.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.records[0].mass;
        self.monitored()
            .map(|r| ((r.mass - m0) / m0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|E(t) - E(0)| / |E(0)|` over monitored records.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.records[0].energy;
        self.monitored()
            .map(|r| ((r.energy - e0) / e0).abs())
            .fold(0.0, f64::max)
    }

    /// Index of `R` in the recorded radius list.
    pub fn radius_index(&self, radius: f64) -> Option<usize> {
        self.radii.iter().position(|&r| r == radius)
    }
}

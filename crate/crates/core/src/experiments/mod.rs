//! Initial-data families, the trajectory classifier and the studies built on
//! them: the threshold dichotomy, L5 growth along near-soliton data, the
//! soliton residual table and the constrained-minimum sweep.

mod growth;
mod residual;
mod threshold;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{RunStatus, Trajectory};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::functionals::PotentialSpec;
use crate::grid::Grid;
use crate::groundstate::GroundState;

pub use growth::{l5_norm, run_threshold_growth_study, GrowthRow, GrowthStudy, GrowthSettings};
pub use residual::{
    da_nonattainment_sweep, soliton_residual_decay, translated_soliton_virial, Cutoff, DaRow,
    ResidualRow,
};
pub use threshold::{
    make_threshold_scaling, make_translated_family, rescale_to_threshold_mass, support_radius,
    threshold_cubic, Branch, Rescaled, ThresholdDatum, TranslatedDatum, SUPPORT_LEVEL,
};

/// Largest `||u(t)||_4^4 / ||u0||_4^4` accepted as dispersed.
pub const DISPERSION_RATIO: f64 = 0.05;
/// Trailing fraction of the run over which dispersion must persist.
pub const SUSTAIN_FRACTION: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataFamily {
    /// `c Q` with `c` either given or solved from the threshold cubic.
    ScaledGroundstate {
        #[serde(default)]
        branch: Option<Branch>,
        #[serde(default)]
        c: Option<f64>,
    },
    /// `(1 - eps) Q(x - x)`; Cartesian grids only.
    TranslatedGroundstate { eps: f64, x: [f64; 3] },
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    /// Radial profile by linear interpolation on `(r, values)`, zero beyond
    /// the last node.
    CustomProfile { r: Vec<f64>, values: Vec<f64> },
}

impl DataFamily {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Err(Error::config(format!("family.{field}"), reason));
        match self {
            DataFamily::ScaledGroundstate { branch, c } => match (branch, c) {
                (Some(_), Some(_)) => bad("c", "give either `branch` or `c`, not both".into()),
                (None, None) => bad("branch", "one of `branch` or `c` is required".into()),
                (None, Some(c)) if !(c.is_finite() && *c > 0.0) => {
                    bad("c", format!("must be positive, got {c}"))
                }
                _ => Ok(()),
            },
            DataFamily::TranslatedGroundstate { eps, x } => {
                if !(0.0..=1.0).contains(eps) {
                    return bad("eps", format!("must lie in [0, 1], got {eps}"));
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return bad("x", "must be finite".into());
                }
                Ok(())
            }
            DataFamily::Gaussian { amplitude, width, center } => {
                if !amplitude.is_finite() {
                    return bad("amplitude", "must be finite".into());
                }
                if !(width.is_finite() && *width > 0.0) {
                    return bad("width", format!("must be positive, got {width}"));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return bad("center", "must be finite".into());
                }
                Ok(())
            }
            DataFamily::CustomProfile { r, values } => {
                if r.len() != values.len() || r.len() < 2 {
                    return bad(
                        "values",
                        format!("need matching tables of length >= 2, got {} and {}", r.len(), values.len()),
                    );
                }
                if r[0] < 0.0 || r.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("r", "must be non-negative and strictly increasing".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("values", "must be finite".into());
                }
                Ok(())
            }
        }
    }

    pub fn build(&self, grid: &Grid, pot: &PotentialSpec, gs: &GroundState) -> Result<ComplexField> {
        self.validate()?;
        match self {
            DataFamily::ScaledGroundstate { branch: Some(b), .. } => {
                Ok(make_threshold_scaling(pot, gs, *b, grid)?.field)
            }
            DataFamily::ScaledGroundstate { c, .. } => {
                let c = c.expect("validated");
                Ok(gs.sample(grid, [0.0; 3])?.scaled(Complex64::new(c, 0.0)))
            }
            DataFamily::TranslatedGroundstate { eps, x } => match grid {
                Grid::Cartesian(g) => {
                    let mut fam = make_translated_family(gs, &[*eps], &[*x], g, pot)?;
                    Ok(fam.remove(0).field)
                }
                Grid::Radial(_) => Err(Error::config(
                    "grid",
                    "translated data need a Cartesian grid",
                )),
            },
            DataFamily::Gaussian { amplitude, width, center } => {
                let (a, w) = (*amplitude, *width);
                crate::field::sample_profile(grid, |r| a * (-0.5 * (r / w).powi(2)).exp(), *center)
            }
            DataFamily::CustomProfile { r, values } => {
                crate::field::sample_profile(grid, |s| interpolate(r, values, s), [0.0; 3])
            }
        }
    }
}

fn interpolate(r: &[f64], v: &[f64], s: f64) -> f64 {
    if s <= r[0] {
        return v[0];
    }
    let last = r.len() - 1;
    if s > r[last] {
        return 0.0;
    }
    let k = r.partition_point(|&x| x < s).max(1);
    let t = (s - r[k - 1]) / (r[k] - r[k - 1]);
    v[k - 1] + t * (v[k] - v[k - 1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Scattering,
    BlowUp,
    Undecided,
}

/// Sign pattern of a monitored quantity over all records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignRecord {
    Positive,
    Negative,
    Mixed,
}

impl SignRecord {
    fn of(values: impl Iterator<Item = f64>) -> SignRecord {
        let (mut pos, mut neg) = (true, true);
        for v in values {
            pos &= v > 0.0;
            neg &= v < 0.0;
        }
        match (pos, neg) {
            (true, _) => SignRecord::Positive,
            (_, true) => SignRecord::Negative,
            _ => SignRecord::Mixed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub status: RunStatus,
    pub delta_sign: SignRecord,
    pub pv_sign: SignRecord,
    /// `||u(t_end)||_4^4 / ||u0||_4^4`.
    pub dispersion_ratio: f64,
    /// Dispersion ratio stayed below [`DISPERSION_RATIO`] at every record in
    /// the trailing [`SUSTAIN_FRACTION`] of the run.
    pub dispersion_sustained: bool,
    /// Time at which blow-up was flagged.
    pub blowup_time: Option<f64>,
    pub notes: Vec<String>,
}

/// Scattering also accepts a run stopped because the sponge absorbed the
/// dispersing mass.
pub fn classify(traj: &Trajectory) -> Verdict {
    let recs = &traj.records;
    let delta_sign = SignRecord::of(recs.iter().map(|r| r.delta));
    let pv_sign = SignRecord::of(recs.iter().map(|r| r.pv));
    let l4_0 = recs.first().map_or(0.0, |r| r.l4_fourth);
    let ratio = |l4: f64| if l4_0 > 0.0 { l4 / l4_0 } else { f64::NAN };
    let t_end = traj.t_final();
    let dispersion_ratio = recs.last().map_or(f64::NAN, |r| ratio(r.l4_fourth));
    let window_start = (1.0 - SUSTAIN_FRACTION) * t_end;
    let dispersion_sustained = t_end > 0.0
        && recs
            .iter()
            .filter(|r| r.t >= window_start)
            .all(|r| ratio(r.l4_fourth) <= DISPERSION_RATIO);

    let mut notes = Vec::new();
    if delta_sign == SignRecord::Mixed {
        notes.push("delta changed sign; the run is underresolved".to_string());
    }
    let blowup = traj.status == RunStatus::BlowupDetected;
    let finished = matches!(traj.status, RunStatus::Completed | RunStatus::SpongeAbsorbed);
    let outcome = if blowup && delta_sign == SignRecord::Negative {
        Outcome::BlowUp
    } else if finished && delta_sign == SignRecord::Positive && dispersion_sustained {
        Outcome::Scattering
    } else {
        if blowup {
            notes.push("blow-up flagged without delta < 0 throughout".to_string());
        } else if finished && delta_sign == SignRecord::Positive {
            notes.push(format!(
                "dispersion not sustained (final ratio {dispersion_ratio:.3e})"
            ));
        }
        Outcome::Undecided
    };
    Verdict {
        outcome,
        status: traj.status,
        delta_sign,
        pv_sign,
        dispersion_ratio,
        dispersion_sustained,
        blowup_time: blowup.then_some(t_end),
        notes,
    }
}

//! Configuration, run orchestration, persistence and reporting.
//!
//! A run directory `<output_dir>/<name>/` holds the archived `spec.toml`,
//! `diagnostics.csv`, optional `norms.csv` and `snapshots/`, `final.bin`,
//! `verdict.json`, `summary.json` and the append-only `manifest.jsonl`.

mod csv_out;
mod report;
mod run;
mod study;
mod verify;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{DiagnosticsPlan, SolverSettings};
use crate::error::{Error, Result};
use crate::experiments::{support_radius, DataFamily};
use crate::functionals::PotentialSpec;
use crate::grid::{Grid, GridSpec};
use crate::groundstate::GroundState;

pub use csv_out::{diagnostics_header, write_diagnostics_csv, write_norms_csv};
pub use report::{record_verify, report, Report, RunSummaryLine, SuiteLine};
pub use run::{run, run_modulation, RunManifest, RunSummary, MANIFEST_FILE};
pub use study::{run_growth, run_sweep, GrowthSpec, StudyManifest, StudyRun, SweepSpec, DA_TOLERANCE};
pub use verify::{verify, Check, VerifyReport, VerifySettings};

/// Version string recorded in every manifest.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// One evolution: potential, grid, initial datum, solver and diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Run directory name under `output_dir`; letters, digits, `-`, `_`, `.`.
    pub name: String,
    pub potential: PotentialSpec,
    /// Defaults to the dynamics radial grid.
    #[serde(default = "GridSpec::dynamics_radial")]
    pub grid: GridSpec,
    pub family: DataFamily,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub diagnostics: DiagnosticsPlan,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Seed for the random-field property suites; the evolution itself is
    /// deterministic.
    #[serde(default)]
    pub seed: u64,
    /// Evolve toward negative times.
    #[serde(default)]
    pub backward: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        validate_name(&self.name)?;
        self.potential
            .validate()
            .and_then(|_| self.potential.validate_for_dynamics())
            .map_err(|e| prefixed("potential", e))?;
        let grid = self.grid.build().map_err(|e| Error::config("grid", e.to_string()))?;
        self.family.validate()?;
        check_fits(&self.family, &grid)?;
        self.solver.validate()?;
        self.diagnostics.validate()?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("spec", e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<ExperimentSpec> {
        let spec: ExperimentSpec = from_toml_strict(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.name)
    }
}

/// Reads and validates an [`ExperimentSpec`].
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    ExperimentSpec::from_toml(&read_text(path)?)
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    String::from_utf8(bytes)
        .map_err(|e| Error::config(path.display().to_string(), format!("not UTF-8: {e}")))
}

/// Parses TOML, turning serde's message into a field-level config error.
pub(crate) fn from_toml_strict<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e: toml::de::Error| {
        let field = e
            .message()
            .split('`')
            .nth(1)
            .filter(|_| e.message().starts_with("unknown field") || e.message().starts_with("missing field"))
            .unwrap_or("config")
            .to_string();
        Error::config(field, e.to_string().trim_end().to_string())
    })
}

pub(crate) fn validate_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name != "."
        && name != ".."
        && name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
    if ok {
        Ok(())
    } else {
        Err(Error::config(
            "name",
            format!("`{name}` must be non-empty and use only letters, digits, `-`, `_`, `.`"),
        ))
    }
}

/// Rewrites parameter errors as `section.parameter` config errors.
pub(crate) fn prefixed(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidParameter { name, reason } => Error::config(format!("{section}.{name}"), reason),
        Error::Config { field, reason } => Error::config(format!("{section}.{field}"), reason),
        other => Error::config(section, other.to_string()),
    }
}

/// Rejects data whose bulk lies outside the grid.
fn check_fits(family: &DataFamily, grid: &Grid) -> Result<()> {
    let extent = grid.extent();
    let too_small = |need: f64| {
        Err(Error::config(
            "grid",
            format!("the datum reaches radius {need:.3} but the grid extent is {extent}"),
        ))
    };
    let norm = |x: &[f64; 3]| x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let gs_reach = || GroundState::certified().map(support_radius);
    match family {
        DataFamily::ScaledGroundstate { .. } => {
            let need = gs_reach()?;
            if need > extent {
                return too_small(need);
            }
        }
        DataFamily::TranslatedGroundstate { x, .. } => {
            if grid.is_radial() {
                return Err(Error::config("grid", "translated data need a Cartesian grid"));
            }
            let need = norm(x) + gs_reach()?;
            if need > extent {
                return too_small(need);
            }
        }
        DataFamily::Gaussian { width, center, .. } => {
            if grid.is_radial() && norm(center) > 0.0 {
                return Err(Error::config("family.center", "radial grids need a centred datum"));
            }
            // exp(-r^2 / 2 w^2) < 1e-8 beyond 6 w
            let need = norm(center) + 6.0 * width;
            if need > extent {
                return too_small(need);
            }
        }
        DataFamily::CustomProfile { r, .. } => {
            let need = *r.last().expect("validated");
            if need > extent {
                return too_small(need);
            }
        }
    }
    Ok(())
}

//! Multi-run studies: the constrained-minimum sweep with the residual table,
//! and the L5 growth study.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    da_nonattainment_sweep, run_threshold_growth_study, soliton_residual_decay, Cutoff, DaRow,
    GrowthSettings, GrowthStudy, ResidualRow,
};
use crate::functionals::PotentialSpec;
use crate::groundstate::GroundState;

use super::csv_out::fmt;
use super::run::{append_manifest, sha256_hex, unix_now, write_json};
use super::{default_output_dir, from_toml_strict, prefixed, read_text, validate_name, TOOL_VERSION};

/// Largest shortfall of a constrained action below `S_0(Q)` that still
/// counts as quadrature error.
pub const DA_TOLERANCE: f64 = 1e-6;

fn default_distances() -> Vec<f64> {
    vec![0.0, 3.0, 6.0, 9.0]
}

fn default_residual_distances() -> Vec<f64> {
    vec![6.0, 12.0]
}

fn default_cutoff() -> Cutoff {
    Cutoff::Smooth
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub name: String,
    pub potential: PotentialSpec,
    /// Translations `|y|` for the constrained-minimum sweep.
    #[serde(default = "default_distances")]
    pub distances: Vec<f64>,
    #[serde(default)]
    pub residual_eps: f64,
    /// Separations `|x_n|` for the soliton residual table.
    #[serde(default = "default_residual_distances")]
    pub residual_distances: Vec<f64>,
    #[serde(default = "default_cutoff")]
    pub residual_cutoff: Cutoff,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        validate_name(&self.name)?;
        self.potential.validate().map_err(|e| prefixed("potential", e))?;
        for (key, list) in [("distances", &self.distances), ("residual_distances", &self.residual_distances)] {
            if list.is_empty() || list.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                return Err(Error::config(key, "need a non-empty list of finite values >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.residual_eps) {
            return Err(Error::config("residual_eps", format!("must lie in [0, 1], got {}", self.residual_eps)));
        }
        Ok(())
    }

    pub fn parse(path: &Path) -> Result<SweepSpec> {
        let s: SweepSpec = from_toml_strict(&read_text(path)?)?;
        s.validate()?;
        Ok(s)
    }
}

fn default_eps() -> Vec<f64> {
    (0..4).map(|n| 0.5f64.powi(n)).collect()
}

fn default_centers() -> Vec<[f64; 3]> {
    (0..4).map(|n| [4.0 + n as f64, 0.0, 0.0]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub name: String,
    pub potential: PotentialSpec,
    /// Defaults to `eps_n = 2^-n`, `x_n = (4 + n, 0, 0)`, `n = 0..3`.
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_centers")]
    pub centers: Vec<[f64; 3]>,
    #[serde(default)]
    pub growth: GrowthSettings,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl GrowthSpec {
    pub fn validate(&self) -> Result<()> {
        validate_name(&self.name)?;
        self.potential
            .validate()
            .and_then(|_| self.potential.validate_for_dynamics())
            .map_err(|e| prefixed("potential", e))?;
        if self.eps.len() != self.centers.len() || self.eps.is_empty() {
            return Err(Error::config(
                "centers",
                format!("{} centres for {} amplitudes", self.centers.len(), self.eps.len()),
            ));
        }
        if let Some(e) = self.eps.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::config("eps", format!("entries must lie in [0, 1], got {e}")));
        }
        self.growth.solver.validate().map_err(|e| prefixed("growth", e))?;
        Ok(())
    }

    pub fn parse(path: &Path) -> Result<GrowthSpec> {
        let s: GrowthSpec = from_toml_strict(&read_text(path)?)?;
        s.validate()?;
        Ok(s)
    }
}

/// Per-run entry of a study manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRun {
    pub label: String,
    pub status: String,
    pub error: Option<String>,
}

/// One line of a study's `manifest.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub name: String,
    pub kind: String,
    pub spec_sha256: String,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// `completed`, or `partial` when some runs failed, or `failed`.
    pub status: String,
    pub outputs: Vec<String>,
    pub runs: Vec<StudyRun>,
    pub error: Option<String>,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    s0: f64,
    da: &'a [DaRow],
    residual: &'a [ResidualRow],
    /// Every value at least `S_0(Q) - DA_TOLERANCE`.
    da_above_s0: bool,
    da_decreasing: bool,
}

fn begin(dir: &Path, text: &str) -> Result<f64> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("spec.toml"), text)?;
    Ok(unix_now())
}

pub fn run_sweep(spec: &SweepSpec) -> Result<StudyManifest> {
    spec.validate()?;
    let dir = spec.output_dir.join(&spec.name);
    let text = toml::to_string(spec).map_err(|e| Error::config("spec", e.to_string()))?;
    let started = begin(&dir, &text)?;
    let mut outputs = vec!["spec.toml".to_string()];
    let mut runs = Vec::new();
    let result = (|| -> Result<()> {
        let gs = GroundState::certified()?;
        let s0 = gs.e0 + gs.mass_m;
        let da = da_nonattainment_sweep(gs, &spec.potential, &spec.distances)?;
        for r in &da {
            runs.push(StudyRun {
                label: format!("da |y|={}", r.distance),
                status: "completed".into(),
                error: None,
            });
        }
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("da_sweep.csv"))?));
        w.write_record(["distance", "potential_term", "t_sq", "action", "excess"])?;
        for r in &da {
            w.write_record([r.distance, r.potential_term, r.t_sq, r.action, r.excess].map(fmt))?;
        }
        w.flush()?;
        outputs.push("da_sweep.csv".into());

        let residual = soliton_residual_decay(
            gs,
            spec.residual_eps,
            &spec.residual_distances,
            &spec.potential,
            spec.residual_cutoff,
        )?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("residual.csv"))?));
        w.write_record(["distance", "cubic", "cutoff", "potential", "total"])?;
        for r in &residual {
            w.write_record([r.distance, r.cubic, r.cutoff, r.potential, r.total].map(fmt))?;
        }
        w.flush()?;
        outputs.push("residual.csv".into());

        let summary = SweepSummary {
            s0,
            da: &da,
            residual: &residual,
            da_above_s0: da.iter().all(|r| r.action >= s0 - DA_TOLERANCE),
            da_decreasing: da.windows(2).all(|w| w[1].action < w[0].action),
        };
        write_json(&dir.join("summary.json"), &summary)?;
        outputs.push("summary.json".into());
        Ok(())
    })();
    finish(&dir, &spec.name, "sweep", &text, started, outputs, runs, result)
}

#[derive(Serialize)]
struct GrowthSummary<'a> {
    study: &'a GrowthStudy,
    l5_increasing: bool,
    /// One entry per `delta0_fractions` entry.
    duration_increasing: Vec<bool>,
}

pub fn run_growth(spec: &GrowthSpec) -> Result<(StudyManifest, Option<GrowthStudy>)> {
    spec.validate()?;
    let dir = spec.output_dir.join(&spec.name);
    let text = toml::to_string(spec).map_err(|e| Error::config("spec", e.to_string()))?;
    let started = begin(&dir, &text)?;
    let mut outputs = vec!["spec.toml".to_string()];
    let mut runs = Vec::new();
    let mut out = None;
    let result = (|| -> Result<()> {
        let gs = GroundState::certified()?;
        let study = run_threshold_growth_study(&spec.eps, &spec.centers, &spec.potential, gs, &spec.growth)?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("growth.csv"))?));
        let mut header: Vec<String> =
            ["n", "eps", "x1", "x2", "x3", "threshold_gap", "pv0", "status", "l5"].map(String::from).to_vec();
        header.extend(spec.growth.delta0_fractions.iter().map(|f| format!("near_soliton_time_{f}")));
        header.push("error".into());
        w.write_record(&header)?;
        for r in &study.rows {
            let mut row = vec![
                r.n.to_string(),
                fmt(r.eps),
                fmt(r.x[0]),
                fmt(r.x[1]),
                fmt(r.x[2]),
                fmt(r.threshold_gap),
                fmt(r.pv0),
                r.status.map(|s| s.as_str().to_string()).unwrap_or_else(|| "failed".into()),
                r.l5.map(fmt).unwrap_or_default(),
            ];
            row.extend((0..spec.growth.delta0_fractions.len()).map(|k| {
                r.near_soliton_time.get(k).copied().map(fmt).unwrap_or_default()
            }));
            row.push(r.error.clone().unwrap_or_default());
            w.write_record(&row)?;
            runs.push(StudyRun {
                label: format!("n={} eps={} x={:?}", r.n, r.eps, r.x),
                status: r.status.map_or("failed", |s| s.as_str()).to_string(),
                error: r.error.clone(),
            });
        }
        w.flush()?;
        outputs.push("growth.csv".into());
        let summary = GrowthSummary {
            study: &study,
            l5_increasing: study.l5_increasing(),
            duration_increasing: (0..study.delta0_fractions.len())
                .map(|k| study.duration_increasing(k))
                .collect(),
        };
        write_json(&dir.join("summary.json"), &summary)?;
        outputs.push("summary.json".into());
        out = Some(study);
        Ok(())
    })();
    let manifest = finish(&dir, &spec.name, "l5growth", &text, started, outputs, runs, result)?;
    Ok((manifest, out))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    dir: &Path,
    name: &str,
    kind: &str,
    text: &str,
    started: f64,
    outputs: Vec<String>,
    runs: Vec<StudyRun>,
    result: Result<()>,
) -> Result<StudyManifest> {
    let status = match &result {
        Err(_) => "failed",
        Ok(()) if runs.iter().any(|r| r.error.is_some()) => "partial",
        Ok(()) => "completed",
    };
    let manifest = StudyManifest {
        name: name.to_string(),
        kind: kind.to_string(),
        spec_sha256: sha256_hex(text.as_bytes()),
        tool_version: TOOL_VERSION.to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        status: status.to_string(),
        outputs,
        runs,
        error: result.err().map(|e| e.to_string()),
    };
    append_manifest(dir, &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_spec_defaults_follow_the_sequence() {
        let s: GrowthSpec = from_toml_strict("name = \"g\"\npotential = { a = 1.0, mu = 1.5 }\n").unwrap();
        s.validate().unwrap();
        assert_eq!(s.eps, [1.0, 0.5, 0.25, 0.125]);
        assert_eq!(s.centers[3], [7.0, 0.0, 0.0]);
        assert_eq!(s.growth.m, 96);
        let back: GrowthSpec = from_toml_strict(&toml::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let short = "name = \"g\"\npotential = { a = 1.0, mu = 1.5 }\neps = [0.5]\n";
        let s: GrowthSpec = from_toml_strict(short).unwrap();
        assert!(matches!(s.validate(), Err(Error::Config { field, .. }) if field == "centers"));
    }

    #[test]
    fn sweep_writes_tables_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let spec = SweepSpec {
            name: "sw".into(),
            potential: PotentialSpec::new(1.0, 1.5).unwrap(),
            distances: default_distances(),
            residual_eps: 0.0,
            residual_distances: vec![6.0],
            residual_cutoff: Cutoff::Smooth,
            output_dir: tmp.path().to_path_buf(),
        };
        let m = run_sweep(&spec).unwrap();
        assert_eq!(m.status, "completed", "{:?}", m.error);
        assert_eq!(m.runs.len(), 4);
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(tmp.path().join("sw/summary.json")).unwrap()).unwrap();
        assert_eq!(summary["da_above_s0"], true);
        assert_eq!(summary["da_decreasing"], true);
    }
}

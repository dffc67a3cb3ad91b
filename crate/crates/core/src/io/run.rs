//! Single runs: evolve an [`ExperimentSpec`] and persist everything it produced.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    evolve_backward, evolve_with, variance_convexity_check, virial_identity_check, ConvexityReport,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::experiments::{classify, Verdict};
use crate::groundstate::GroundState;
use crate::modulation::{modulation_inequality_report, modulation_track, ModulationReport, TrackPoint};
use crate::snapshot::write_snapshot;

use super::csv_out::{fmt, write_diagnostics_csv, write_norms_csv};
use super::{ExperimentSpec, TOOL_VERSION};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// One line of `manifest.jsonl`. Lines are only ever appended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    /// SHA-256 of the archived `spec.toml`.
    pub spec_sha256: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    /// Terminal solver status, or `failed` when the run raised an error.
    pub status: String,
    pub outcome: Option<String>,
    /// Paths relative to the run directory.
    pub outputs: Vec<String>,
    pub error: Option<String>,
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub status: String,
    pub t_final: f64,
    pub steps: usize,
    pub rejected_steps: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub absorbed_mass: f64,
    pub monitors_suspended_at: Option<f64>,
    /// `(R, worst virial_identity_check value)`, absent with fewer than three records.
    pub virial_identity: Vec<(f64, Option<f64>)>,
    pub convexity: Option<ConvexityReport>,
}

pub(crate) fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn append_manifest<T: Serialize>(dir: &Path, entry: &T) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join(MANIFEST_FILE))?;
    let mut line = serde_json::to_string(entry)?;
    line.push('\n');
    f.write_all(line.as_bytes())?;
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Evolves `spec` and writes its run directory. Configuration errors are
/// returned before anything is written; failures during the run are
/// recorded in the manifest, which is returned with `status = "failed"`.
pub fn run(spec: &ExperimentSpec) -> Result<RunManifest> {
    execute(spec, |_, _, _| Ok(()))
}

/// As [`run`], then fits the modulation parameters at every snapshot with
/// `|delta| < delta0_fraction * ||Q||^2_{Hdot1}` and writes
/// `modulation.csv` (`t, theta, y1, y2, y3, alpha, g_h1, h_h1, delta,
/// residual, error`) and `modulation.json` (ratio bands).
pub fn run_modulation(
    spec: &ExperimentSpec,
    delta0_fraction: f64,
) -> Result<(RunManifest, Option<ModulationReport>)> {
    if !(delta0_fraction > 0.0) {
        return Err(Error::config("delta0", format!("must be positive, got {delta0_fraction}")));
    }
    if spec.diagnostics.snapshot_times.len() < 3 {
        return Err(Error::config(
            "diagnostics.snapshot_times",
            "modulation tracking needs at least three snapshots",
        ));
    }
    let mut report = None;
    let manifest = execute(spec, |traj, dir, outputs| {
        let gs = GroundState::certified()?;
        let points = modulation_track(traj, gs, delta0_fraction * gs.hdot1_sq());
        write_track_csv(File::create(dir.join("modulation.csv"))?, &points)?;
        outputs.push("modulation.csv".into());
        let r = modulation_inequality_report(&points)?;
        write_json(&dir.join("modulation.json"), &r)?;
        outputs.push("modulation.json".into());
        report = Some(r);
        Ok(())
    })?;
    Ok((manifest, report))
}

fn write_track_csv<W: Write>(out: W, points: &[TrackPoint]) -> Result<()> {
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t", "theta", "y1", "y2", "y3", "alpha", "g_h1", "h_h1", "delta", "residual", "error",
    ])?;
    for p in points {
        let y = p.y.map(|y| y.map(Some)).unwrap_or([None; 3]);
        w.write_record([
            fmt(p.t),
            opt(p.theta),
            opt(y[0]),
            opt(y[1]),
            opt(y[2]),
            opt(p.alpha),
            opt(p.g_h1),
            opt(p.h_h1),
            fmt(p.delta),
            opt(p.residual),
            p.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

type Extra<'a> = dyn FnMut(&Trajectory, &Path, &mut Vec<String>) -> Result<()> + 'a;

fn execute<'a>(
    spec: &ExperimentSpec,
    mut extra: impl FnMut(&Trajectory, &Path, &mut Vec<String>) -> Result<()> + 'a,
) -> Result<RunManifest> {
    spec.validate()?;
    let dir = spec.run_dir();
    fs::create_dir_all(&dir)?;
    let text = spec.to_toml()?;
    fs::write(dir.join("spec.toml"), &text)?;
    let started = unix_now();
    let mut outputs = vec!["spec.toml".to_string()];
    let result = evolve_and_write(spec, &dir, &mut outputs, &mut extra);
    let (status, outcome, error) = match result {
        Ok((status, outcome)) => (status, Some(outcome), None),
        Err(e) => ("failed".to_string(), None, Some(e.to_string())),
    };
    let manifest = RunManifest {
        name: spec.name.clone(),
        spec_sha256: sha256_hex(text.as_bytes()),
        seed: spec.seed,
        tool_version: TOOL_VERSION.to_string(),
        started_unix: started,
        finished_unix: unix_now(),
        status,
        outcome,
        outputs,
        error,
    };
    append_manifest(&dir, &manifest)?;
    Ok(manifest)
}

fn evolve_and_write(
    spec: &ExperimentSpec,
    dir: &Path,
    outputs: &mut Vec<String>,
    extra: &mut Extra<'_>,
) -> Result<(String, String)> {
    let gs = GroundState::certified()?;
    let grid = spec.grid.build()?;
    let u0 = spec.family.build(&grid, &spec.potential, gs)?;
    let traj = if spec.backward {
        evolve_backward(&u0, &spec.potential, &spec.solver, &spec.diagnostics)?
    } else {
        evolve_with(&u0, &spec.potential, &spec.solver, &spec.diagnostics)?
    };

    write_diagnostics_csv(BufWriter::new(File::create(dir.join("diagnostics.csv"))?), &traj)?;
    outputs.push("diagnostics.csv".into());
    if !traj.norm_samples.is_empty() {
        write_norms_csv(BufWriter::new(File::create(dir.join("norms.csv"))?), &traj)?;
        outputs.push("norms.csv".into());
    }
    if !traj.snapshots.is_empty() {
        fs::create_dir_all(dir.join("snapshots"))?;
        for (k, s) in traj.snapshots.iter().enumerate() {
            let rel: PathBuf = ["snapshots", &format!("snap_{k:04}.bin")].iter().collect();
            write_snapshot(&dir.join(&rel), &s.field, s.t)?;
            outputs.push(rel.to_string_lossy().into_owned());
        }
    }
    write_snapshot(&dir.join("final.bin"), &traj.final_field, traj.t_final())?;
    outputs.push("final.bin".into());

    let verdict: Verdict = classify(&traj);
    write_json(&dir.join("verdict.json"), &verdict)?;
    outputs.push("verdict.json".into());

    let summary = RunSummary {
        name: spec.name.clone(),
        status: traj.status.as_str().to_string(),
        t_final: traj.t_final(),
        steps: traj.steps,
        rejected_steps: traj.rejected_steps,
        mass_drift: traj.mass_drift(),
        energy_drift: traj.energy_drift(),
        absorbed_mass: traj.absorbed_mass,
        monitors_suspended_at: traj.monitors_suspended_at,
        virial_identity: traj
            .radii
            .iter()
            .map(|&r| (r, virial_identity_check(&traj, r).ok()))
            .collect(),
        convexity: spec.diagnostics.variance.then(|| variance_convexity_check(&traj)),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    outputs.push("summary.json".into());

    extra(&traj, dir, outputs)?;
    let outcome = serde_json::to_value(verdict.outcome)?
        .as_str()
        .unwrap_or_default()
        .to_string();
    Ok((traj.status.as_str().to_string(), outcome))
}

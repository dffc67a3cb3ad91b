//! Aggregation of run and study directories into one summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

use super::run::{append_manifest, unix_now, write_json, MANIFEST_FILE};
use super::study::{StudyManifest, StudyRun};
use super::verify::VerifyReport;
use super::TOOL_VERSION;

/// Latest manifest line of one directory.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummaryLine {
    /// Directory relative to the report root.
    pub dir: PathBuf,
    pub name: String,
    /// `run`, `sweep`, `l5growth` or `verify`.
    pub kind: String,
    pub status: String,
    pub outcome: Option<String>,
    pub error: Option<String>,
    /// Manifest lines in the directory, i.e. how often it was (re)run.
    pub entries: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteLine {
    pub dir: PathBuf,
    pub name: String,
    pub passed: bool,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub root: PathBuf,
    pub runs: Vec<RunSummaryLine>,
    /// Identity suites from `verify.json` and study trends from `summary.json`.
    pub suites: Vec<SuiteLine>,
    pub failed_runs: usize,
    /// Every suite passed and no run failed.
    pub passed: bool,
}

/// Writes `verify.json` into `dir` and appends a manifest line for it.
pub fn record_verify(dir: &Path, report: &VerifyReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let now = unix_now();
    write_json(&dir.join("verify.json"), report)?;
    let runs = report
        .checks
        .iter()
        .map(|c| StudyRun {
            label: format!("{}.{}", c.suite, c.name),
            status: if c.passed { "passed" } else { "failed" }.into(),
            error: c.detail.clone(),
        })
        .collect();
    append_manifest(
        dir,
        &StudyManifest {
            name: "verify".into(),
            kind: "verify".into(),
            spec_sha256: String::new(),
            tool_version: TOOL_VERSION.into(),
            started_unix: now,
            finished_unix: now,
            status: if report.passed { "completed" } else { "failed" }.into(),
            outputs: vec!["verify.json".into()],
            runs,
            error: None,
        },
    )
}

fn manifest_dirs(root: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(root)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    if root.join(MANIFEST_FILE).is_file() {
        out.push(root.to_path_buf());
    }
    for e in entries {
        if e.file_type()?.is_dir() {
            manifest_dirs(&e.path(), out)?;
        }
    }
    Ok(())
}

fn read_json(path: &Path) -> Option<Value> {
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

/// Walks `root` for `manifest.jsonl` files and collects the latest entry of
/// each, the identity suites and the study trends. Writes `report.json`
/// into `root`.
pub fn report(root: &Path) -> Result<Report> {
    if !root.is_dir() {
        return Err(Error::config("dir", format!("{} is not a directory", root.display())));
    }
    let mut dirs = Vec::new();
    manifest_dirs(root, &mut dirs)?;
    let mut runs = Vec::new();
    let mut suites = Vec::new();
    for dir in dirs {
        let rel = dir.strip_prefix(root).unwrap_or(&dir).to_path_buf();
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let Some(last) = lines.last() else { continue };
        let m: Value = serde_json::from_str(last)?;
        let s = |k: &str| m.get(k).and_then(Value::as_str).map(str::to_string);
        let kind = s("kind").unwrap_or_else(|| "run".into());
        runs.push(RunSummaryLine {
            dir: rel.clone(),
            name: s("name").unwrap_or_default(),
            kind: kind.clone(),
            status: s("status").unwrap_or_default(),
            outcome: s("outcome"),
            error: s("error"),
            entries: lines.len(),
        });
        let mut suite = |name: String, passed: bool| suites.push(SuiteLine { dir: rel.clone(), name, passed });
        match kind.as_str() {
            "verify" => {
                if let Some(v) = read_json(&dir.join("verify.json")) {
                    let mut per_suite: Vec<(String, bool)> = Vec::new();
                    for c in v["checks"].as_array().into_iter().flatten() {
                        let name = format!("verify.{}", c["suite"].as_str().unwrap_or("?"));
                        let ok = c["passed"].as_bool().unwrap_or(false);
                        match per_suite.iter_mut().find(|(n, _)| *n == name) {
                            Some(entry) => entry.1 &= ok,
                            None => per_suite.push((name, ok)),
                        }
                    }
                    for (name, ok) in per_suite {
                        suite(name, ok);
                    }
                }
            }
            "sweep" => {
                if let Some(v) = read_json(&dir.join("summary.json")) {
                    suite("da.above_s0".into(), v["da_above_s0"].as_bool().unwrap_or(false));
                    suite("da.decreasing".into(), v["da_decreasing"].as_bool().unwrap_or(false));
                }
            }
            "l5growth" => {
                if let Some(v) = read_json(&dir.join("summary.json")) {
                    suite("l5growth.l5_increasing".into(), v["l5_increasing"].as_bool().unwrap_or(false));
                    for (k, d) in v["duration_increasing"].as_array().into_iter().flatten().enumerate() {
                        suite(format!("l5growth.duration_increasing[{k}]"), d.as_bool().unwrap_or(false));
                    }
                }
            }
            _ => {}
        }
    }
    let failed_runs = runs.iter().filter(|r| r.status == "failed" || r.status == "partial").count();
    let passed = failed_runs == 0 && suites.iter().all(|s| s.passed);
    let rep = Report {
        root: root.to_path_buf(),
        runs,
        suites,
        failed_runs,
        passed,
    };
    write_json(&root.join("report.json"), &rep)?;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::verify::Check;

    fn verify_report(passed: bool) -> VerifyReport {
        VerifyReport {
            seed: 0,
            checks: vec![
                Check { suite: "a".into(), name: "x".into(), value: 0.0, tol: 1.0, passed: true, detail: None },
                Check { suite: "a".into(), name: "y".into(), value: 2.0, tol: 1.0, passed, detail: None },
            ],
            passed,
        }
    }

    #[test]
    fn report_collects_latest_entries_and_suites() {
        let tmp = tempfile::tempdir().unwrap();
        record_verify(&tmp.path().join("v"), &verify_report(true)).unwrap();
        let r = report(tmp.path()).unwrap();
        assert!(r.passed);
        assert_eq!(r.suites.len(), 1);
        assert_eq!(r.runs[0].kind, "verify");
        assert!(tmp.path().join("report.json").is_file());

        record_verify(&tmp.path().join("v"), &verify_report(false)).unwrap();
        let r = report(tmp.path()).unwrap();
        assert!(!r.passed);
        assert_eq!(r.runs[0].entries, 2);
        assert_eq!(r.suites.len(), 1);
        assert!(!r.suites[0].passed);
    }

    #[test]
    fn missing_root_is_a_config_error() {
        assert!(matches!(report(Path::new("/nonexistent/nlsv")), Err(Error::Config { .. })));
    }
}

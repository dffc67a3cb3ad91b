use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nlsv(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlsv"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NLSV_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

const GAUSSIAN: &str = r#"
name = "gauss"
output_dir = "out"
potential = { a = 1.0, mu = 1.5 }
family = { kind = "gaussian", amplitude = 0.8, width = 1.0 }

[grid]
kind = "radial"
r_max = 20.0
n = 256

[solver]
dt0 = 1e-3
t_end = 0.3

[diagnostics]
radii = [2.0, inf]
snapshot_times = [0.0, 0.1, 0.2]
norm_sample_interval = 0.05
"#;

#[test]
fn evolve_writes_a_run_directory_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("g.toml"), GAUSSIAN).unwrap();
    let o = nlsv(&["evolve", "g.toml"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("out/gauss");
    let first = fs::read(dir.join("diagnostics.csv")).unwrap();
    for f in ["spec.toml", "norms.csv", "final.bin", "verdict.json", "summary.json", "snapshots/snap_0002.bin"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let o = nlsv(&["evolve", "g.toml"], tmp.path());
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(dir.join("diagnostics.csv")).unwrap(), first);
    assert_eq!(fs::read_to_string(dir.join("manifest.jsonl")).unwrap().lines().count(), 2);
    let archived = fs::read_to_string(dir.join("spec.toml")).unwrap();
    fs::write(tmp.path().join("again.toml"), archived).unwrap();
    let o = nlsv(&["evolve", "again.toml"], tmp.path());
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(dir.join("diagnostics.csv")).unwrap(), first);
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), GAUSSIAN.replace("mu = 1.5", "mu = 2.5")).unwrap();
    let o = nlsv(&["evolve", "bad.toml"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("potential.mu"));

    fs::write(tmp.path().join("typo.toml"), GAUSSIAN.replace("t_end", "tend")).unwrap();
    let o = nlsv(&["evolve", "typo.toml"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tend"));

    assert_eq!(code(&nlsv(&["evolve", "missing.toml"], tmp.path())), 2);
    assert_eq!(code(&nlsv(&["report", "nowhere"], tmp.path())), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_nlsv"))
        .args(["report", "."])
        .current_dir(tmp.path())
        .env("NLSV_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_and_report_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nlsv(&["verify", "--quick", "--fields", "20", "--out", "runs/verify"], tmp.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(code(&o), 0, "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
    assert!(tmp.path().join("runs/verify/verify.json").is_file());

    fs::write(tmp.path().join("g.toml"), GAUSSIAN.replace("\"out\"", "\"runs\"")).unwrap();
    assert_eq!(code(&nlsv(&["evolve", "g.toml"], tmp.path())), 0);
    let o = nlsv(&["report", "runs"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("runs/report.json")).unwrap()).unwrap();
    assert_eq!(rep["runs"].as_array().unwrap().len(), 2);
    assert_eq!(rep["passed"], true);

    // a valid config whose run fails marks the report failed
    let failing = r#"
name = "nosub"
output_dir = "runs"
potential = { a = 0.0, mu = 1.5 }
family = { kind = "scaled_groundstate", branch = "sub" }
grid = { kind = "radial", r_max = 30.0, n = 256 }
"#;
    fs::write(tmp.path().join("f.toml"), failing).unwrap();
    assert_eq!(code(&nlsv(&["evolve", "f.toml"], tmp.path())), 1);
    assert_eq!(code(&nlsv(&["report", "runs"], tmp.path())), 1);
}

#[test]
fn groundstate_writes_the_bundled_constants() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nlsv(&["groundstate", "--write-constants", "gs.toml"], tmp.path());
    assert_eq!(code(&o), 0);
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((printed["q0"].as_f64().unwrap() - 4.337387679981127).abs() < 1e-8);
    let bundled = include_str!("../../core/src/groundstate/ground_state.toml");
    assert_eq!(fs::read_to_string(tmp.path().join("gs.toml")).unwrap(), bundled);
}

#[test]
fn studies_and_modulation_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = "name = \"sw\"\noutput_dir = \"runs\"\npotential = { a = 1.0, mu = 1.5 }\nresidual_distances = [6.0]\n";
    fs::write(tmp.path().join("sweep.toml"), sweep).unwrap();
    assert_eq!(code(&nlsv(&["sweep", "sweep.toml"], tmp.path())), 0);
    assert!(tmp.path().join("runs/sw/da_sweep.csv").is_file());

    let growth = r#"
name = "l5"
output_dir = "runs"
potential = { a = 1.0, mu = 1.5 }
eps = [0.5, 0.25]
centers = [[1.0, 0.0, 0.0], [1.5, 0.0, 0.0]]

[growth]
l = 16.0
m = 32
solver = { dt0 = 1e-2, t_end = 0.1, adapt = { enabled = false } }
"#;
    fs::write(tmp.path().join("growth.toml"), growth).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nlsv"))
        .args(["l5growth", "growth.toml"])
        .current_dir(tmp.path())
        .env("NLSV_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("runs/l5/growth.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let modulate = r#"
name = "mod"
output_dir = "runs"
potential = { a = 1e-6, mu = 1.5 }
family = { kind = "scaled_groundstate", c = 0.99 }
grid = { kind = "radial", r_max = 30.0, n = 256 }
solver = { dt0 = 1e-4, t_end = 0.05 }
diagnostics = { snapshot_times = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05] }
"#;
    fs::write(tmp.path().join("mod.toml"), modulate).unwrap();
    let o = nlsv(&["modulate", "mod.toml"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(tmp.path().join("runs/mod/modulation.csv")).unwrap();
    assert!(csv.starts_with("t,theta,y1,y2,y3,alpha,g_h1,h_h1,delta,residual,error"));
    assert_eq!(csv.lines().count(), 7);
}

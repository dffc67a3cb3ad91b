//! `nlsv`: ground state, identity suites, evolutions, studies and reports.
//!
//! Exit codes: 0 success, 1 a check or run failed, 2 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nlsv_core::groundstate::{
    solve_ground_state_fixedpoint, solve_ground_state_shooting, GroundState, GroundStateConstants,
    DEFAULT_RESIDUAL_TOL,
};
use nlsv_core::io::{
    parse_config, record_verify, report, run, run_growth, run_modulation, run_sweep, GrowthSpec,
    SweepSpec, VerifySettings,
};
use nlsv_core::{Error, RadialGrid};

#[derive(Parser)]
#[command(name = "nlsv", version, about = "Focusing cubic NLS with a repulsive inverse-power potential")]
struct Cli {
    /// Worker threads for studies (default: all cores).
    #[arg(long, global = true, env = "NLSV_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Shooting,
    Fixedpoint,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state Q and print its constants as JSON.
    Groundstate {
        #[arg(long, value_enum, default_value = "shooting")]
        method: Solver,
        /// Write the constants file used by the certified ground state.
        #[arg(long, value_name = "PATH")]
        write_constants: Option<PathBuf>,
    },
    /// Run the fast identity suites; exit 1 if any check fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random fields for the inequality suite.
        #[arg(long, default_value_t = 1000)]
        fields: usize,
        /// Skip re-solving the ground state by fixed-point iteration.
        #[arg(long)]
        quick: bool,
        /// Directory for verify.json and its manifest line.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evolve the datum described by an experiment config.
    Evolve { config: PathBuf },
    /// Evolve and fit the modulation parameters along the snapshots.
    Modulate {
        config: PathBuf,
        /// Track snapshots with |delta| below this fraction of ||grad Q||^2.
        #[arg(long, default_value_t = nlsv_core::modulation::DEFAULT_DELTA0_FRACTION)]
        delta0: f64,
    },
    /// Constrained-minimum sweep over translations plus the soliton residual table.
    Sweep { config: PathBuf },
    /// L5 growth study along near-soliton data below threshold.
    L5growth { config: PathBuf },
    /// Aggregate manifests, identity suites and study trends under a directory.
    Report { dir: PathBuf },
}

enum Failure {
    Config(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidParameter { .. } => Failure::Config(e.to_string()),
            other => Failure::Check(other.to_string()),
        }
    }
}

fn read_config<T>(path: &Path, parse: impl Fn(&Path) -> nlsv_core::Result<T>) -> Result<T, Failure> {
    if !path.is_file() {
        return Err(Failure::Config(format!("config file {} not found", path.display())));
    }
    parse(path).map_err(|e| match e {
        Error::Io(io) => Failure::Config(format!("{}: {io}", path.display())),
        other => other.into(),
    })
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: NLSV_WORKERS must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is configured once");
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Groundstate { method, write_constants } => {
            let gs: GroundState = match method {
                Solver::Shooting => solve_ground_state_shooting(DEFAULT_RESIDUAL_TOL)?,
                Solver::Fixedpoint => {
                    solve_ground_state_fixedpoint(&RadialGrid::new(30.0, 4096)?, 1e-12)?
                }
            };
            print_json(&gs);
            if let Some(path) = write_constants {
                let text = GroundStateConstants::from_ground_state(&gs).to_toml();
                std::fs::write(&path, text).map_err(|e| Failure::Check(format!("{}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Verify { seed, fields, quick, out } => {
            let settings = VerifySettings {
                seed,
                inequality_fields: fields,
                solver_agreement: !quick,
                ..Default::default()
            };
            let r = nlsv_core::io::verify(&settings)?;
            for c in &r.checks {
                let mark = if c.passed { "PASS" } else { "FAIL" };
                let detail = c.detail.as_deref().map(|d| format!("  ({d})")).unwrap_or_default();
                println!("{mark}  {}.{}  {:.3e} <= {:.1e}{detail}", c.suite, c.name, c.value, c.tol);
            }
            if let Some(dir) = out {
                record_verify(&dir, &r)?;
            }
            if r.passed {
                Ok(())
            } else {
                Err(Failure::Check(format!("{} check(s) failed", r.failures().count())))
            }
        }
        Command::Evolve { config } => {
            let spec = read_config(&config, parse_config)?;
            let m = run(&spec)?;
            print_json(&m);
            match m.error {
                Some(e) => Err(Failure::Check(e)),
                None => Ok(()),
            }
        }
        Command::Modulate { config, delta0 } => {
            let spec = read_config(&config, parse_config)?;
            let (m, rep) = run_modulation(&spec, delta0)?;
            print_json(&m);
            if let Some(rep) = rep {
                print_json(&rep);
            }
            match m.error {
                Some(e) => Err(Failure::Check(e)),
                None => Ok(()),
            }
        }
        Command::Sweep { config } => {
            let spec = read_config(&config, SweepSpec::parse)?;
            let m = run_sweep(&spec)?;
            print_json(&m);
            match m.error {
                Some(e) => Err(Failure::Check(e)),
                None => Ok(()),
            }
        }
        Command::L5growth { config } => {
            let spec = read_config(&config, GrowthSpec::parse)?;
            let (m, _) = run_growth(&spec)?;
            print_json(&m);
            if m.status == "completed" {
                Ok(())
            } else {
                Err(Failure::Check(format!("study {}: {}", m.status, m.error.unwrap_or_default())))
            }
        }
        Command::Report { dir } => {
            if !dir.is_dir() {
                return Err(Failure::Config(format!("{} is not a directory", dir.display())));
            }
            let r = report(&dir)?;
            print_json(&r);
            if r.passed {
                Ok(())
            } else {
                Err(Failure::Check("report contains failed runs or suites".into()))
            }
        }
    }
}

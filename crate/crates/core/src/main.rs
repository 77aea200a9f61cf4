use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use moist_core::lab::checkpoint::checkpoint_header;
use moist_core::lab::config::ExperimentConfig;
use moist_core::lab::probe::continuous_dependence_probe;
use moist_core::lab::report::write_text;
use moist_core::lab::run::simulate;
use moist_core::lab::sweep::epsilon_sweep;
use moist_core::lab::validate::{validation_suite, Level};
use moist_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BLOW_UP: u8 = 3;

#[derive(Parser)]
#[command(name = "moistlab", version, about = "Moist two-mode model on a periodic square")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single simulation.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Relaxation time; 0 runs the limiting system.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Convergence study over `sweep.epsilon_list`.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Amplification of small initial perturbations.
    Probe {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
        delta: Vec<f64>,
    },
    /// Regression checks against exact solutions.
    Validate {
        #[arg(long, default_value = "quick")]
        level: String,
    },
    /// Print a checkpoint header.
    Inspect { checkpoint: PathBuf },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(|e| match e {
            Error::Io { .. } => Error::Config(e.to_string()),
            e => e,
        }),
        None => Ok(ExperimentConfig::default()),
    }
}

/// `--out`, then the environment, then `output.dir`.
fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.unwrap_or_else(|| cfg.resolved_output_dir())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BlowUp { .. } | Error::StepTooSmall { .. } => EXIT_BLOW_UP,
        Error::Config(_)
        | Error::ConstraintViolation(_)
        | Error::InvalidGrid(_)
        | Error::UnknownFamily(_)
        | Error::PositiveMoisture(_)
        | Error::InvalidArgument(_) => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

fn execute(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Run {
            config,
            out,
            t_end,
            dt,
            epsilon,
        } => {
            let mut cfg = load(config.as_deref())?;
            if let Some(t) = t_end {
                cfg.t_end = t;
            }
            if let Some(dt) = dt {
                cfg.stepper = cfg.stepper.with_dt(dt);
            }
            if epsilon.is_some() {
                cfg.run_epsilon = epsilon;
            }
            let cfg = cfg.validate()?;
            let dir = output_dir(out, &cfg);
            let (outcome, files) = simulate(&cfg, cfg.single_run_epsilon(), &dir)?;
            println!(
                "{} steps to t = {}; wrote {} and {}",
                outcome.steps,
                outcome.final_state.time,
                files.series.display(),
                files.checkpoint.display()
            );
            Ok(0)
        }
        Command::Sweep { config, out, jobs } => {
            let cfg = load(config.as_deref())?;
            let dir = output_dir(out, &cfg);
            let sweep = epsilon_sweep(&cfg, jobs)?;
            sweep.write(&dir)?;
            print!("{}", sweep.report.summary());
            let failed = sweep.report.rows.iter().any(|r| !r.is_ok());
            Ok(if failed { EXIT_BLOW_UP } else { 0 })
        }
        Command::Probe { config, out, delta } => {
            let cfg = load(config.as_deref())?;
            let dir = output_dir(out, &cfg);
            let table = continuous_dependence_probe(&cfg, &delta)?;
            write_text(&dir.join("probe.csv"), &table.to_csv())?;
            print!("{}", table.summary());
            Ok(0)
        }
        Command::Validate { level } => {
            let level: Level = level.parse()?;
            let report = validation_suite(level);
            print!("{report}");
            Ok(if report.passed() { 0 } else { EXIT_FAILURE })
        }
        Command::Inspect { checkpoint } => {
            print!("{}", checkpoint_header(&checkpoint)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

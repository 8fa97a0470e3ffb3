//! `mfanneal` subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfanneal_core::{
    gap_scan, generate_instance, integrate, magnetization_trace, CouplingDistribution, ExactError,
    FlowError, IsingInstance, SolverConfig, ZRule, DEFAULT_GAP_GRID,
};
use serde::Serialize;

use crate::harness::{self, GridRange, HarnessError, Scan2Config, SweepConfig};
use crate::io::{self as fmt_io, IoError};

#[derive(Debug, Parser)]
#[command(
    name = "mfanneal",
    version,
    about = "Mean-field adiabatic flow for Ising instances"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a random fully connected instance.
    Gen {
        /// Number of sites.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Coupling and field distribution, `uniform:LO:HI`.
        #[arg(long, default_value = "uniform:-1:1", value_parser = parse_dist)]
        dist: CouplingDistribution,
        /// Coordination number (default n-1, at least 1).
        #[arg(long)]
        z: Option<usize>,
        /// Output file (default standard output).
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Integrate the mean-field flow for one instance.
    Solve {
        /// Instance JSON, `-` for standard input.
        #[arg(long)]
        instance: PathBuf,
        /// Override the instance's coordination number.
        #[arg(long)]
        z: Option<usize>,
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long)]
        smax: Option<f64>,
        /// Relative integrator tolerance.
        #[arg(long)]
        rtol: Option<f64>,
        /// Write the per-step trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Outcome JSON (default standard output).
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Exact diagonalization: gap scan and ground-state magnetizations.
    Exact {
        #[arg(long)]
        instance: PathBuf,
        /// Points of the uniform s grid.
        #[arg(long, default_value_t = DEFAULT_GAP_GRID)]
        grid: usize,
        /// Gap CSV output.
        #[arg(long)]
        gap: Option<PathBuf>,
        /// Magnetization CSV output.
        #[arg(long)]
        mag: Option<PathBuf>,
    },
    /// Two-spin scan over (J1, J2).
    Scan2 {
        #[arg(long, default_value_t = 1.0)]
        j12: f64,
        /// Grid for both fields, `LO:HI:STEPS`.
        #[arg(long, default_value = "-3:3:7", value_parser = parse_range, allow_hyphen_values = true)]
        range: GridRange,
        /// Scan CSV (default standard output).
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Seeded random sweep over system sizes.
    Sweep {
        /// Comma-separated site counts.
        #[arg(long = "n-list", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        /// Samples per site count.
        #[arg(long)]
        samples: usize,
        /// Master seed.
        #[arg(long)]
        seed: u64,
        /// Worker threads (default all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Directory for sweep.csv, curve.csv and histogram.csv.
        #[arg(long, default_value = ".")]
        outdir: PathBuf,
    },
    /// Mean-field flow against exact diagonalization for one instance.
    Compare {
        #[arg(long)]
        instance: PathBuf,
        /// Report JSON (default standard output).
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

fn parse_dist(text: &str) -> Result<CouplingDistribution, String> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["uniform", lo, hi] => {
            let lo: f64 = lo.parse().map_err(|_| format!("bad lower bound `{lo}`"))?;
            let hi: f64 = hi.parse().map_err(|_| format!("bad upper bound `{hi}`"))?;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(format!("need finite LO <= HI, got {lo}:{hi}"));
            }
            Ok(CouplingDistribution::Uniform { lo, hi })
        }
        _ => Err(format!("expected uniform:LO:HI, got `{text}`")),
    }
}

fn parse_range(text: &str) -> Result<GridRange, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(format!("expected LO:HI:STEPS, got `{text}`"));
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad LO `{lo}`"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad HI `{hi}`"))?;
    let steps: usize = steps.parse().map_err(|_| format!("bad STEPS `{steps}`"))?;
    GridRange::new(lo, hi, steps).map_err(|e| e.to_string())
}

/// Error with the exit status it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input, unreadable files, capability limits.
    #[error("{0}")]
    Input(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Eigen(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::InvalidConfig(_)
            | FlowError::Ising(_)
            | FlowError::LengthMismatch { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Exact(e) => e.into(),
            HarnessError::Flow(e) => e.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn with_z(instance: IsingInstance, z: Option<usize>) -> Result<IsingInstance, CliError> {
    match z {
        None => Ok(instance),
        Some(z) => IsingInstance::new(
            instance.n(),
            z,
            instance.fields().to_vec(),
            instance.couplings().to_vec(),
        )
        .map_err(|e| CliError::Input(format!("z: {e}"))),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fmt_io::emit(Some(path), contents).map_err(CliError::from)
}

#[derive(Serialize)]
struct ExactSummary {
    n: usize,
    grid: usize,
    min_gap: f64,
    s_gap: f64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen {
            n,
            seed,
            dist,
            z,
            output,
        } => {
            let rule = z.map_or(ZRule::FullyConnected, ZRule::Fixed);
            let inst = generate_instance(n, seed, dist, rule)
                .map_err(|e| CliError::Input(e.to_string()))?;
            fmt_io::emit(output.as_deref(), &fmt_io::write_instance(&inst))?;
        }
        Command::Solve {
            instance,
            z,
            s0,
            smax,
            rtol,
            trace,
            output,
        } => {
            let inst = with_z(fmt_io::load_instance(&instance)?, z)?;
            let defaults = SolverConfig::default();
            let cfg = SolverConfig {
                s0: s0.unwrap_or(defaults.s0),
                s_max: smax.unwrap_or(defaults.s_max),
                rel_tol: rtol.unwrap_or(defaults.rel_tol),
                ..defaults
            };
            let outcome = integrate(&inst, &cfg)?;
            if let Some(path) = trace {
                write_file(&path, &fmt_io::trace_csv(outcome.trace(), inst.n()))?;
            }
            fmt_io::emit(output.as_deref(), &fmt_io::outcome_json(&outcome))?;
        }
        Command::Exact {
            instance,
            grid,
            gap,
            mag,
        } => {
            let inst = fmt_io::load_instance(&instance)?;
            let scan = gap_scan(&inst, grid)?;
            if let Some(path) = gap {
                write_file(&path, &fmt_io::gap_csv(&scan.points))?;
            }
            if let Some(path) = mag {
                let samples = magnetization_trace(&inst, grid)?;
                write_file(&path, &fmt_io::magnetization_csv(&samples, inst.n()))?;
            }
            let summary = ExactSummary {
                n: inst.n(),
                grid,
                min_gap: scan.min_gap,
                s_gap: scan.s_gap,
            };
            fmt_io::emit(None, &to_json(&summary))?;
        }
        Command::Scan2 { j12, range, output } => {
            let cfg = Scan2Config {
                j12,
                j1_range: range,
                j2_range: range,
                ..Scan2Config::default()
            };
            let cells = harness::run_two_spin_scan(&cfg)?;
            fmt_io::emit(output.as_deref(), &harness::scan2_csv(&cells))?;
        }
        Command::Sweep {
            n_list,
            samples,
            seed,
            threads,
            outdir,
        } => {
            if threads == Some(0) {
                return Err(CliError::Input("--threads must be positive".into()));
            }
            let cfg = SweepConfig {
                n_list,
                samples_per_n: samples,
                master_seed: seed,
                threads,
                ..SweepConfig::default()
            };
            let report = harness::run_multiqubit_sweep(&cfg)?;
            fs::create_dir_all(&outdir)
                .map_err(|e| CliError::Input(format!("{}: {e}", outdir.display())))?;
            write_file(
                &outdir.join("sweep.csv"),
                &harness::sweep_csv(&report.records),
            )?;
            write_file(
                &outdir.join("curve.csv"),
                &harness::curve_csv(&report.curve),
            )?;
            write_file(
                &outdir.join("histogram.csv"),
                &harness::histogram_csv(&report.histograms),
            )?;
        }
        Command::Compare { instance, output } => {
            let inst = fmt_io::load_instance(&instance)?;
            let report = harness::default_compare(&inst)?;
            fmt_io::emit(output.as_deref(), &to_json(&report))?;
        }
    }
    Ok(())
}

/// Parses `std::env::args`, runs, and reports errors on one line of stderr.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mfanneal: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_dist_and_range() {
        assert_eq!(
            parse_dist("uniform:-2:0.5").unwrap(),
            CouplingDistribution::Uniform { lo: -2.0, hi: 0.5 }
        );
        assert!(parse_dist("normal:0:1").is_err());
        assert!(parse_dist("uniform:1:0").is_err());
        let r = parse_range("-3:3:6").unwrap();
        assert_eq!((r.min, r.max, r.steps), (-3.0, 3.0, 6));
        assert!(parse_range("0:1").is_err());
    }

    #[test]
    fn unknown_flag_rejected() {
        assert!(
            Cli::try_parse_from(["mfanneal", "gen", "--n", "2", "--seed", "1", "--bogus"]).is_err()
        );
    }
}

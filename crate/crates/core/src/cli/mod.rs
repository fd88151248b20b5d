//! Command-line front end: `simulate`, `sweep`, `optimize` and `check`.

pub mod config;
pub mod csv;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::checks::{invariant_suite, oracle_suite};
use crate::dynamics::{evolve, DensityMatrix, EvolutionGrid};
use crate::experiments::{find_optimal_amplitude, sweep_amplitude, ExperimentError, SweepRow};
pub use config::{parse_config, ConfigError, Mode, Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Numerical(_) | CliError::ChecksFailed { .. } => 3,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Spec(m) => CliError::Config(ConfigError::Conflict(m)),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stirap", version, about = "STIRAP in a weakly anharmonic ladder with parasitic cross-couplings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single transfer run; writes one sweep row or a trajectory
    Simulate(RunArgs),
    /// Amplitude sweep over Ω/Δ, γ̃ and cross-coupling
    Sweep(RunArgs),
    /// Optimal amplitude per decoherence rate
    Optimize(RunArgs),
    /// Invariant and oracle-agreement suite on the reference runs
    Check(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat TOML configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// on|off
    #[arg(long, value_parser = parse_cross_arg)]
    pub cross: Option<bool>,
    /// Dimensionless decoherence rate; repeat for a list
    #[arg(long = "gamma-tilde")]
    pub gamma_tilde: Vec<f64>,
    /// Adiabaticity a = Ωσ
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub emit_trajectory: bool,
}

fn parse_cross_arg(s: &str) -> Result<bool, String> {
    config::parse_on_off(s).ok_or_else(|| format!("expected on or off, got {s:?}"))
}

impl Command {
    fn split(self) -> (Mode, RunArgs) {
        match self {
            Command::Simulate(a) => (Mode::Simulate, a),
            Command::Sweep(a) => (Mode::Sweep, a),
            Command::Optimize(a) => (Mode::Optimize, a),
            Command::Check(a) => (Mode::Check, a),
        }
    }
}

/// Builds the run configuration from the subcommand, config file and flags.
pub fn resolve(command: Command) -> Result<RunConfig, CliError> {
    let (mode, args) = command.split();
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.clone(), source })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text, mode)?;
    cfg.apply(&Overrides {
        output: args.output,
        cross: args.cross,
        gamma_tilde: args.gamma_tilde,
        a_param: args.a,
        emit_trajectory: args.emit_trajectory,
    })?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// Executes `cfg`, writes its CSV and returns the one-line summary. Check
/// mode also writes one line per check to `report`.
pub fn run(cfg: &RunConfig, report: &mut dyn Write) -> Result<String, CliError> {
    match cfg.mode {
        Mode::Simulate => run_simulate(cfg),
        Mode::Sweep => run_sweep(cfg),
        Mode::Optimize => run_optimize(cfg),
        Mode::Check => run_check(report),
    }
}

fn run_simulate(cfg: &RunConfig) -> Result<String, CliError> {
    let spec = &cfg.spec;
    let (x, g, c) = (spec.omega_over_delta_grid[0], spec.gamma_tilde_list[0], spec.cross_variants[0]);
    let (d, s) = spec
        .configs(x, g, c)
        .map_err(|e| CliError::Config(ConfigError::Conflict(e.to_string())))?;
    let mut grid = EvolutionGrid::for_run(&d, &s).map_err(|e| CliError::Numerical(e.to_string()))?;
    if cfg.emit_trajectory {
        grid = grid.with_sample_stride(cfg.sample_stride);
    }
    let res = evolve(&d, &s, &grid, &DensityMatrix::ground()).map_err(|e| CliError::Numerical(e.to_string()))?;
    let text = match &res.trajectory {
        Some(t) => csv::trajectory_csv(t),
        None => csv::sweep_csv(&[SweepRow {
            omega_over_delta: x,
            gamma_tilde: g,
            cross: c,
            a_param: spec.a_param,
            populations: res.populations,
            p1_max: res.max_p1,
            trace_drift: res.trace_drift,
        }]),
    };
    if let Some(p) = &cfg.output {
        write_file(p, &text)?;
    }
    let mut line = format!(
        "p2 = {} (omega/delta = {x}, gamma_tilde = {g}, cross = {}, a = {})",
        res.p2(),
        on_off(c),
        spec.a_param
    );
    if let Some(sc) = cfg.scale {
        line += &format!(
            "; omega/2pi = {:.4} MHz, sigma = {:.4} ns",
            sc.frequency_mhz(x),
            sc.time_ns(d.sigma)
        );
    }
    Ok(line)
}

fn run_sweep(cfg: &RunConfig) -> Result<String, CliError> {
    let rows = sweep_amplitude(&cfg.spec)?;
    if let Some(p) = &cfg.output {
        write_file(p, &csv::sweep_csv(&rows))?;
    }
    let best = rows
        .iter()
        .max_by(|a, b| a.p2().total_cmp(&b.p2()))
        .expect("validated spec has at least one row");
    Ok(format!(
        "sweep: {} rows{}; max p2 = {} at omega/delta = {} (gamma_tilde = {}, cross = {})",
        rows.len(),
        cfg.output.as_ref().map(|p| format!(" written to {}", p.display())).unwrap_or_default(),
        best.p2(),
        best.omega_over_delta,
        best.gamma_tilde,
        on_off(best.cross)
    ))
}

fn run_optimize(cfg: &RunConfig) -> Result<String, CliError> {
    let optima = cfg
        .spec
        .gamma_tilde_list
        .iter()
        .map(|&g| find_optimal_amplitude(g, &cfg.spec, cfg.bracket, cfg.tol))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(p) = &cfg.output {
        write_file(p, &csv::optimum_csv(&optima))?;
    }
    let describe = |o: &crate::experiments::OptimumResult| {
        let mut s = format!(
            "omega_star/delta = {:.6} (gamma_tilde = {}, p2_star = {:.6}{})",
            o.omega_star_over_delta,
            o.gamma_tilde,
            o.p2_star,
            if o.boundary { ", at bracket edge" } else { "" }
        );
        if let Some(sc) = cfg.scale {
            s += &format!(
                "; omega_star/2pi = {:.2} MHz, sigma_star = {:.2} ns",
                sc.frequency_mhz(o.omega_star_over_delta),
                sc.time_ns(o.sigma_star_times_delta)
            );
        }
        s
    };
    Ok(match optima.as_slice() {
        [o] => describe(o),
        [first, .., last] => format!(
            "optimize: {} rates; {} ... {}",
            optima.len(),
            describe(first),
            describe(last)
        ),
        [] => unreachable!("validated spec has at least one rate"),
    })
}

fn run_check(report: &mut dyn Write) -> Result<String, CliError> {
    let mut outcomes = invariant_suite();
    outcomes.extend(oracle_suite());
    for o in &outcomes {
        let _ = writeln!(report, "{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let total = outcomes.len();
    if failed > 0 {
        return Err(CliError::ChecksFailed { failed, total });
    }
    Ok(format!("check: {total} passed, 0 failed"))
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return e.exit_code();
        }
    };
    let result = resolve(cli.command).and_then(|cfg| run(&cfg, stdout));
    match result {
        Ok(summary) => {
            let _ = writeln!(stdout, "{summary}");
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with_args(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn bad_flag_is_config_error() {
        let (code, _, _) = call(&["stirap", "sweep", "--cross", "maybe"]);
        assert_eq!(code, 2);
        let (code, _, _) = call(&["stirap", "frobnicate"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn bad_config_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "bogus = 1\n").unwrap();
        let (code, _, err) = call(&["stirap", "sweep", "--config", p.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn missing_output_dir_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("missing").join("x.csv");
        let (code, _, err) = call(&["stirap", "simulate", "--output", p.to_str().unwrap()]);
        assert_eq!(code, 1, "{err}");
    }

    #[test]
    fn numerical_failure_exit_code() {
        let e: CliError = ExperimentError::Row {
            omega_over_delta: 0.1,
            gamma_tilde: 0.0,
            cross: true,
            source: crate::dynamics::DynamicsError::NumericalError { t: 1.0 },
        }
        .into();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("omega/delta = 0.1"));
    }
}

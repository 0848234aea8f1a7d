//! Command-line front end.
//!
//! Exit status 0 means success, 1 a usage or validation error, and 2 a runtime
//! failure (including an MDP that fails verification). Diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::harness::{
    coverage_experiment, emit_csv, format_float, info_gain_table, run_experiment, run_sweep, CsvRecords,
};
use crate::mdp::{make_random_rkhs_mdp, verify_assumption, AssumptionReport, Mdp};

pub const REGRET_FILE: &str = "regret.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const COVERAGE_FILE: &str = "coverage.csv";
pub const INFO_GAIN_FILE: &str = "info_gain.csv";
pub const ASSUMPTION_FILE: &str = "assumption.csv";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kovi", version, about = "Regret experiments for optimistic kernel value iteration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Configuration file of `key = value` lines; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Overrides `experiment.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Overrides `experiment.output-path`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Suppresses the summary on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One replication; writes regret.csv.
    Run,
    /// Replications over `experiment.seeds` seeds; writes sweep.csv.
    Sweep,
    /// Fixed-design confidence coverage; writes coverage.csv.
    Coverage,
    /// Realized and greedy information gain on the state-action grid; writes info_gain.csv.
    InfoGain,
    /// Rechecks the MDP's RKHS certificates; writes assumption.csv.
    VerifyMdp,
}

enum Outcome {
    Done,
    CheckFailed(String),
}

/// Loads the config named on the command line and applies flag overrides.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config(&text)?
        }
        None => parse_config("")?,
    };
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.experiment.output_path = out.clone();
    }
    Ok(cfg)
}

/// The configured MDP: loaded from `mdp.file` or generated from `mdp.seed`.
pub fn build_mdp(cfg: &ExperimentConfig) -> Result<Mdp> {
    let mdp = match &cfg.mdp.file {
        Some(path) => Mdp::load(path)?,
        None => return make_random_rkhs_mdp(cfg.kernel_spec()?, &cfg.generator()),
    };
    let found = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let expected = (cfg.mdp.states, cfg.mdp.actions, cfg.mdp.horizon);
    if found != expected {
        return Err(Error::input(format!(
            "MDP file has (states, actions, horizon) = {found:?} but the config says {expected:?}"
        )));
    }
    Ok(mdp)
}

impl CsvRecords for AssumptionReport {
    fn header(&self) -> Vec<String> {
        ["step", "next_state", "norm", "norm_bound", "max_reconstruction_error", "min_entry"]
            .iter()
            .map(|c| c.to_string())
            .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.checks
            .iter()
            .map(|c| {
                vec![
                    (c.step + 1).to_string(),
                    c.next_state.to_string(),
                    format_float(c.norm),
                    format_float(self.norm_bound),
                    format_float(c.max_reconstruction_error),
                    format_float(c.min_entry),
                ]
            })
            .collect()
    }
}

fn execute(command: Command, cfg: &ExperimentConfig, quiet: bool) -> Result<Outcome> {
    let out = &cfg.experiment.output_path;
    let echo = cfg.echo_lines();
    let path = |name: &str| -> PathBuf { out.join(name) };
    let say = |msg: String| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    // validate everything before touching the output directory
    let mdp = match command {
        Command::Coverage => None,
        _ => Some(build_mdp(cfg)?),
    };
    if let Some(m) = &mdp {
        if matches!(command, Command::Run | Command::Sweep) {
            cfg.agent_config().validate_for(m)?;
        }
    }
    let coverage_cfg = cfg.coverage_config()?;
    coverage_cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    match command {
        Command::Run => {
            let ledger = run_experiment(mdp.as_ref().expect("built above"), &cfg.run_config())?;
            emit_csv(&ledger, &echo, &path(REGRET_FILE))?;
            say(format!("episodes {} regret {}", ledger.len(), ledger.total_regret()));
            if let Some(rate) = ledger.optimism_rate() {
                say(format!("optimistic plan values at {:.3} of (episode, state) pairs", rate));
            }
        }
        Command::Sweep => {
            let summary = run_sweep(mdp.as_ref().expect("built above"), &cfg.run_config(), &cfg.sweep_seeds())?;
            emit_csv(&summary, &echo, &path(SWEEP_FILE))?;
            if let Some(last) = summary.rows.last() {
                say(format!(
                    "replications {} mean regret {} +- {}",
                    last.replications, last.mean_cum_regret, last.se_cum_regret
                ));
            }
        }
        Command::Coverage => {
            let report = coverage_experiment(&coverage_cfg)?;
            emit_csv(&report, &echo, &path(COVERAGE_FILE))?;
            say(format!(
                "coverage {}/{} = {} at beta {}",
                report.hits(),
                report.trials.len(),
                report.coverage(),
                report.beta
            ));
        }
        Command::InfoGain => {
            let m = mdp.as_ref().expect("built above");
            let table = info_gain_table(
                m.spec(),
                cfg.agent.rho,
                &m.pair_points(),
                cfg.infogain.max_n,
                cfg.experiment.seed,
            )?;
            emit_csv(&table, &echo, &path(INFO_GAIN_FILE))?;
        }
        Command::VerifyMdp => {
            let report = verify_assumption(mdp.as_ref().expect("built above"))?;
            emit_csv(&report, &echo, &path(ASSUMPTION_FILE))?;
            let summary = format!(
                "max norm {} (bound {}), reconstruction error {}, row-sum error {}, min entry {}",
                report.max_norm(),
                report.norm_bound,
                report.max_reconstruction_error(),
                report.max_row_sum_error,
                report.min_entry
            );
            if !report.passed() {
                return Ok(Outcome::CheckFailed(summary));
            }
            say(summary);
        }
    }
    Ok(Outcome::Done)
}

fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}

/// Runs the command line `args` (including the program name) and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let cfg = match load_config(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            // an unreadable config file is a usage problem, not a runtime failure
            return EXIT_VALIDATION;
        }
    };
    match execute(cli.command, &cfg, cli.quiet) {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::CheckFailed(msg)) => {
            eprintln!("verification failed: {msg}");
            EXIT_RUNTIME
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Path of a command's output file under `dir`.
pub fn output_file(dir: &Path, command: Command) -> PathBuf {
    dir.join(match command {
        Command::Run => REGRET_FILE,
        Command::Sweep => SWEEP_FILE,
        Command::Coverage => COVERAGE_FILE,
        Command::InfoGain => INFO_GAIN_FILE,
        Command::VerifyMdp => ASSUMPTION_FILE,
    })
}

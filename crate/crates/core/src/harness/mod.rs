//! Experiment orchestration: episode loop, regret accounting, coverage
//! experiments, replicated sweeps, and CSV output.
//!
//! Regret after `T` episodes is `R(T) = sum_t V*_1(s_{1,t}) - V^{pi_t}_1(s_{1,t})`,
//! where both values are computed exactly from the true transitions.

mod coverage;
mod output;
mod sweep;

pub use coverage::{coverage_experiment, CoverageConfig, CoverageReport, CoverageTrial};
pub use output::{emit_csv, format_float, render_csv, write_atomic, CsvRecords};
pub use sweep::{info_gain_table, run_sweep, InfoGainRow, SweepRow, SweepSummary};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};

use crate::agents::{build_agent, Agent, AgentConfig, SimRng};
use crate::error::{Error, Result};
use crate::mdp::{evaluate_policy, exact_optimal_values, transition_sample, Mdp, Policy, Step, Trajectory};

/// Tolerance below zero accepted for a per-episode gap.
pub const GAP_TOL: f64 = 1e-12;

/// How the environment picks `s_{1,t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialStateMode {
    Fixed(usize),
    RoundRobin,
    Uniform,
}

impl fmt::Display for InitialStateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialStateMode::Fixed(s) => write!(f, "fixed:{s}"),
            InitialStateMode::RoundRobin => f.write_str("round-robin"),
            InitialStateMode::Uniform => f.write_str("uniform"),
        }
    }
}

impl FromStr for InitialStateMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "round-robin" => Ok(InitialStateMode::RoundRobin),
            "uniform" => Ok(InitialStateMode::Uniform),
            other => other
                .strip_prefix("fixed:")
                .and_then(|i| i.parse().ok())
                .map(InitialStateMode::Fixed)
                .ok_or_else(|| {
                    format!("unknown initial-state mode `{other}` (expected fixed:<state>, round-robin, uniform)")
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub agent: AgentConfig,
    pub episodes: usize,
    pub seed: u64,
    pub initial_state: InitialStateMode,
    /// Off by default so that output files are reproducible byte for byte.
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub initial_state: usize,
    pub v_star: f64,
    pub v_pi: f64,
    pub gap: f64,
    pub cum_regret: f64,
    /// Per-step widths; empty for agents without a model.
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub wall_ms: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretLedger {
    pub horizon: usize,
    pub records: Vec<EpisodeRecord>,
    /// `(episode, state)` pairs where the plan's first-step value was at least `V*_1`.
    pub optimistic_pairs: usize,
    /// `(episode, state)` pairs for which the agent reported a plan value.
    pub planned_pairs: usize,
}

impl RegretLedger {
    pub fn new(horizon: usize) -> Self {
        RegretLedger {
            horizon,
            records: Vec::new(),
            optimistic_pairs: 0,
            planned_pairs: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cum_regret)
    }

    /// Cumulative regret after the first `t` episodes.
    pub fn regret_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.records[t - 1].cum_regret
        }
    }

    /// Fraction of planned `(episode, state)` pairs that were optimistic.
    pub fn optimism_rate(&self) -> Option<f64> {
        (self.planned_pairs > 0).then(|| self.optimistic_pairs as f64 / self.planned_pairs as f64)
    }

    fn push_gap(&mut self, mut record: EpisodeRecord) {
        record.cum_regret = self.total_regret() + record.gap;
        self.records.push(record);
    }
}

/// Prefix sums `(t, R(t))` for `t = 1..T`.
pub fn cumulative_regret(ledger: &RegretLedger) -> Vec<(usize, f64)> {
    let mut total = 0.0;
    ledger
        .records
        .iter()
        .map(|r| {
            total += r.gap;
            (r.episode, total)
        })
        .collect()
}

/// Plays `policy` for one episode from `initial_state`, feeding every
/// transition to the agent.
pub fn run_episode(
    mdp: &Mdp,
    policy: &Policy,
    t: usize,
    initial_state: usize,
    rng: &mut SimRng,
    agent: &mut dyn Agent,
) -> Result<Trajectory> {
    if initial_state >= mdp.num_states() {
        return Err(Error::input(format!("initial state {initial_state} is out of range")));
    }
    let mut s = initial_state;
    let mut steps = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        let a = policy.action(h, s);
        let step = Step {
            state: s,
            action: a,
            reward: mdp.reward(h, s, a),
            next_state: transition_sample(mdp, h, s, a, rng),
        };
        agent.observe(h, &step)?;
        steps.push(step);
        s = step.next_state;
    }
    Ok(Trajectory {
        episode: t,
        initial_state,
        steps,
    })
}

/// Independent streams derived from one seed.
pub(crate) struct Streams {
    pub init: SimRng,
    pub env: SimRng,
    pub agent: SimRng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let stream = |k| {
            let mut rng = SimRng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Streams {
            init: stream(0),
            env: stream(1),
            agent: stream(2),
        }
    }
}

pub fn run_experiment(mdp: &Mdp, cfg: &RunConfig) -> Result<RegretLedger> {
    let mut agent = build_agent(&cfg.agent, mdp)?;
    if let InitialStateMode::Fixed(s) = cfg.initial_state {
        if s >= mdp.num_states() {
            return Err(Error::input(format!("fixed initial state {s} is out of range")));
        }
    }
    let v_star = exact_optimal_values(mdp);
    let mut streams = Streams::new(cfg.seed);
    let mut ledger = RegretLedger::new(mdp.horizon());

    for t in 1..=cfg.episodes {
        let started = Instant::now();
        let s1 = match cfg.initial_state {
            InitialStateMode::Fixed(s) => s,
            InitialStateMode::RoundRobin => (t - 1) % mdp.num_states(),
            InitialStateMode::Uniform => streams.init.random_range(0..mdp.num_states()),
        };
        let decision = agent.plan(&mut streams.agent)?;
        let v_pi = evaluate_policy(mdp, &decision.policy)?;
        let trajectory = run_episode(mdp, &decision.policy, t, s1, &mut streams.env, agent.as_mut())?;

        let (betas, gammas) = match &decision.diagnostics {
            Some(d) => {
                ledger.planned_pairs += d.initial_values.len();
                ledger.optimistic_pairs += d
                    .initial_values
                    .iter()
                    .enumerate()
                    .filter(|(s, v)| **v >= v_star.value(0, *s) - GAP_TOL)
                    .count();
                (d.betas.clone(), d.gammas.clone())
            }
            None => (Vec::new(), Vec::new()),
        };
        let (vs, vp) = (v_star.value(0, s1), v_pi.value(0, s1));
        let gap = vs - vp;
        if gap < -GAP_TOL {
            return Err(Error::Numerical(format!(
                "episode {t}: policy value {vp} exceeds the optimum {vs}"
            )));
        }
        ledger.push_gap(EpisodeRecord {
            episode: t,
            initial_state: s1,
            v_star: vs,
            v_pi: vp,
            gap,
            cum_regret: 0.0,
            betas,
            gammas,
            wall_ms: if cfg.record_wall_time {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
            trajectory,
        });
    }
    Ok(ledger)
}

impl CsvRecords for RegretLedger {
    fn header(&self) -> Vec<String> {
        let mut cols: Vec<String> = ["episode", "initial_state", "v_star", "v_pi", "gap", "cum_regret"]
            .iter()
            .map(|c| c.to_string())
            .collect();
        cols.extend((1..=self.horizon).map(|h| format!("beta_h{h}")));
        cols.extend((1..=self.horizon).map(|h| format!("gamma_h{h}")));
        cols.push("wall_ms".into());
        cols
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let per_step = |vals: &[f64]| -> Vec<String> {
            if vals.is_empty() {
                vec![String::new(); self.horizon]
            } else {
                vals.iter().map(|v| format_float(*v)).collect()
            }
        };
        self.records
            .iter()
            .map(|r| {
                let mut row = vec![
                    r.episode.to_string(),
                    r.initial_state.to_string(),
                    format_float(r.v_star),
                    format_float(r.v_pi),
                    format_float(r.gap),
                    format_float(r.cum_regret),
                ];
                row.extend(per_step(&r.betas));
                row.extend(per_step(&r.gammas));
                row.push(format_float(r.wall_ms));
                row
            })
            .collect()
    }
}

//! Learning agents and control baselines.
//!
//! Every agent commits to a deterministic policy table at the start of an
//! episode, so the harness can evaluate the executed policy exactly.

mod bandit;
mod baseline;
mod kovi;

pub use bandit::{kernel_ucb_bandit_step, ucb_select, KernelUcbAgent};
pub use baseline::{baseline_act, Baseline, FixedAgent, OracleAgent, RandomAgent};
pub use kovi::{kovi_plan, EpisodePlan, History, KoviAgent};

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::krr::BetaSchedule;
use crate::mdp::{Mdp, Policy, Step};

/// Generator type used for every seeded stream in the crate.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    /// Optimistic kernel least-squares value iteration.
    Kovi,
    /// Kernel UCB on a single-state, single-step MDP.
    KernelUcbBandit,
    Random,
    /// KOVI with the exploration width forced to zero.
    GreedyOracleFree,
    Fixed(usize),
    /// Plays the optimal policy computed from the true transitions.
    Oracle,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentKind::Kovi => f.write_str("kovi"),
            AgentKind::KernelUcbBandit => f.write_str("kernel-ucb-bandit"),
            AgentKind::Random => f.write_str("random"),
            AgentKind::GreedyOracleFree => f.write_str("greedy-oracle-free"),
            AgentKind::Fixed(a) => write!(f, "fixed:{a}"),
            AgentKind::Oracle => f.write_str("oracle"),
        }
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "kovi" => Ok(AgentKind::Kovi),
            "kernel-ucb-bandit" => Ok(AgentKind::KernelUcbBandit),
            "random" => Ok(AgentKind::Random),
            "greedy-oracle-free" => Ok(AgentKind::GreedyOracleFree),
            "oracle" => Ok(AgentKind::Oracle),
            other => other
                .strip_prefix("fixed:")
                .and_then(|i| i.parse().ok())
                .map(AgentKind::Fixed)
                .ok_or_else(|| {
                    format!(
                        "unknown agent kind `{other}` (expected kovi, kernel-ucb-bandit, random, \
                         greedy-oracle-free, fixed:<action>, oracle)"
                    )
                }),
        }
    }
}

/// Whether the regression targets include the step reward.
///
/// With `Known` rewards the posterior models `[P_h V_{h+1}]` and the reward is
/// added back when forming Q; with `Observed` it models `r_h + [P_h V_{h+1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardModel {
    Known,
    Observed,
}

impl fmt::Display for RewardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardModel::Known => "known",
            RewardModel::Observed => "observed",
        })
    }
}

impl FromStr for RewardModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "known" => Ok(RewardModel::Known),
            "observed" => Ok(RewardModel::Observed),
            other => Err(format!("unknown reward model `{other}` (expected known, observed)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub kind: AgentKind,
    pub rho: f64,
    pub beta: BetaSchedule,
    /// Value cap; must equal the horizon of the MDP being played.
    pub clip: f64,
    pub rewards: RewardModel,
}

impl AgentConfig {
    pub fn new(kind: AgentKind, rho: f64, beta: BetaSchedule, clip: f64) -> Self {
        AgentConfig {
            kind,
            rho,
            beta,
            clip,
            rewards: RewardModel::Known,
        }
    }

    pub fn validate_for(&self, mdp: &Mdp) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::input(format!("agent rho must be positive, got {}", self.rho)));
        }
        if self.clip != mdp.horizon() as f64 {
            return Err(Error::input(format!(
                "agent clip {} must equal the horizon {}",
                self.clip,
                mdp.horizon()
            )));
        }
        self.beta.validate()?;
        match self.kind {
            AgentKind::KernelUcbBandit if mdp.num_states() != 1 || mdp.horizon() != 1 => Err(
                Error::input("the kernel UCB bandit agent needs a single state and horizon 1"),
            ),
            AgentKind::Fixed(a) if a >= mdp.num_actions() => {
                Err(Error::input(format!("fixed action {a} is out of range")))
            }
            _ => Ok(()),
        }
    }
}

/// Optimistic value `clamp(base + beta * stddev, 0, clip)`.
#[inline]
pub fn optimistic_value(base: f64, beta: f64, stddev: f64, clip: f64) -> f64 {
    (base + beta * stddev).clamp(0.0, clip)
}

/// Per-episode planning diagnostics reported by model-based agents.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanDiagnostics {
    /// Width used at each step.
    pub betas: Vec<f64>,
    /// Realized information gain of each step's posterior.
    pub gammas: Vec<f64>,
    /// The plan's own estimate of the first-step value of every state.
    pub initial_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub policy: Policy,
    pub diagnostics: Option<PlanDiagnostics>,
}

pub trait Agent: Send {
    /// Commits to the policy for the next episode.
    fn plan(&mut self, rng: &mut SimRng) -> Result<Decision>;

    /// Records the transition taken at step `h`.
    fn observe(&mut self, h: usize, step: &Step) -> Result<()>;
}

pub fn build_agent(cfg: &AgentConfig, mdp: &Mdp) -> Result<Box<dyn Agent>> {
    cfg.validate_for(mdp)?;
    Ok(match cfg.kind {
        AgentKind::Kovi => Box::new(KoviAgent::new(mdp.view(), cfg.clone())?),
        AgentKind::GreedyOracleFree => {
            let greedy = AgentConfig {
                beta: BetaSchedule::constant(0.0),
                ..cfg.clone()
            };
            Box::new(KoviAgent::new(mdp.view(), greedy)?)
        }
        AgentKind::KernelUcbBandit => Box::new(KernelUcbAgent::new(mdp.view(), cfg.clone())?),
        AgentKind::Random => Box::new(RandomAgent::new(mdp.horizon(), mdp.num_states(), mdp.num_actions())),
        AgentKind::Fixed(a) => Box::new(FixedAgent::new(mdp.horizon(), mdp.num_states(), a)),
        AgentKind::Oracle => Box::new(OracleAgent::new(mdp)),
    })
}

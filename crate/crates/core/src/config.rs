//! Flat `section.key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored; a `#` after a value
//! starts a trailing comment. Keys may appear in any order but at most once.
//! Every key has a default, so empty text is a complete configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::agents::{AgentConfig, AgentKind, RewardModel};
use crate::error::{Error, Result};
use crate::harness::{CoverageConfig, InitialStateMode, RunConfig};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::krr::{BetaKind, BetaSchedule, CoverTerm};
use crate::mdp::GeneratorConfig;

/// Every accepted key, in serialization order.
pub const KEYS: &[&str] = &[
    "kernel.family",
    "kernel.lengthscale",
    "kernel.scale",
    "kernel.offset",
    "mdp.states",
    "mdp.actions",
    "mdp.state-dim",
    "mdp.action-dim",
    "mdp.horizon",
    "mdp.perturbation",
    "mdp.centers",
    "mdp.seed",
    "mdp.norm-bound",
    "mdp.file",
    "agent.kind",
    "agent.rho",
    "agent.clip",
    "agent.rewards",
    "beta.kind",
    "beta.c_f",
    "beta.sigma",
    "beta.delta",
    "beta.cover_term",
    "beta.constant_value",
    "experiment.episodes",
    "experiment.seed",
    "experiment.seeds",
    "experiment.initial-state-mode",
    "experiment.output-path",
    "experiment.record-wall-time",
    "coverage.trials",
    "coverage.n",
    "coverage.dim",
    "coverage.centers",
    "coverage.test-points",
    "coverage.width-scale",
    "infogain.max-n",
];

/// Covering-number term: a fixed value, or `auto` for `dim_z * ln(1 + n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoverSetting {
    Auto,
    Fixed(f64),
}

impl fmt::Display for CoverSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverSetting::Auto => f.write_str("auto"),
            CoverSetting::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for CoverSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(CoverSetting::Auto);
        }
        s.parse()
            .map(CoverSetting::Fixed)
            .map_err(|_| format!("expected `auto` or a number, got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSection {
    pub family: KernelFamily,
    pub lengthscale: f64,
    pub scale: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdpSection {
    pub states: usize,
    pub actions: usize,
    pub state_dim: usize,
    pub action_dim: usize,
    pub horizon: usize,
    pub perturbation: f64,
    pub centers: usize,
    pub seed: u64,
    pub norm_bound: Option<f64>,
    /// Load this MDP instead of generating one; its horizon must match `horizon`.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSection {
    pub kind: AgentKind,
    pub rho: f64,
    pub clip: f64,
    pub rewards: RewardModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSection {
    pub kind: BetaKind,
    pub c_f: f64,
    pub sigma: f64,
    pub delta: f64,
    pub cover_term: CoverSetting,
    pub constant_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub episodes: usize,
    pub seed: u64,
    /// Replications in a sweep, using seeds `seed, seed + 1, ...`.
    pub seeds: usize,
    pub initial_state_mode: InitialStateMode,
    /// Directory that receives every output file.
    pub output_path: PathBuf,
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSection {
    pub trials: usize,
    pub n: usize,
    pub dim: usize,
    pub centers: usize,
    pub test_points: usize,
    pub width_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoGainSection {
    pub max_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: KernelSection,
    pub mdp: MdpSection,
    pub agent: AgentSection,
    pub beta: BetaSection,
    pub experiment: ExperimentSection,
    pub coverage: CoverageSection,
    pub infogain: InfoGainSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
}

impl Entries {
    fn new(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                key: content.to_string(),
                line,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    key: key.into(),
                    line,
                    message: "unknown key".into(),
                });
            }
            if let Some((_, first)) = map.insert(key.to_string(), (value.to_string(), line)) {
                return Err(Error::Config {
                    key: key.into(),
                    line,
                    message: format!("duplicate key, first set on line {first}"),
                });
            }
        }
        Ok(Entries { map })
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |e| e.1)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            key: key.into(),
            line: self.line(key),
            message: message.into(),
        }
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some((v, _)) => v
                .parse()
                .map(Some)
                .map_err(|e| self.err(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    fn check(&self, key: &str, ok: bool, message: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(self.err(key, message))
        }
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn nonnegative(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

/// Parses and validates a configuration, resolving every default.
///
/// `beta.sigma` defaults to `mdp.horizon / 2` and `agent.clip` to `mdp.horizon`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let e = Entries::new(text)?;

    let kernel = KernelSection {
        family: e.get("kernel.family", KernelFamily::SquaredExponential)?,
        lengthscale: e.get("kernel.lengthscale", 0.5)?,
        scale: e.get("kernel.scale", 1.0)?,
        offset: e.get("kernel.offset", 0.5)?,
    };
    e.check("kernel.lengthscale", positive(kernel.lengthscale), "must be positive")?;
    e.check("kernel.scale", positive(kernel.scale), "must be positive")?;
    e.check("kernel.offset", nonnegative(kernel.offset), "must be nonnegative")?;

    let mdp = MdpSection {
        states: e.get("mdp.states", 16)?,
        actions: e.get("mdp.actions", 4)?,
        state_dim: e.get("mdp.state-dim", 1)?,
        action_dim: e.get("mdp.action-dim", 1)?,
        horizon: e.get("mdp.horizon", 3)?,
        perturbation: e.get("mdp.perturbation", 0.05)?,
        centers: e.get("mdp.centers", 8)?,
        seed: e.get("mdp.seed", 0)?,
        norm_bound: e.opt("mdp.norm-bound")?,
        file: e.opt::<String>("mdp.file")?.map(PathBuf::from),
    };
    for key in ["mdp.states", "mdp.actions", "mdp.state-dim", "mdp.action-dim", "mdp.horizon", "mdp.centers"] {
        e.check(key, e.get::<usize>(key, 1)? > 0, "must be positive")?;
    }
    e.check(
        "mdp.perturbation",
        nonnegative(mdp.perturbation) && mdp.perturbation <= 1.0 / mdp.states as f64,
        "must lie in [0, 1/mdp.states]",
    )?;
    if let Some(u) = mdp.norm_bound {
        e.check("mdp.norm-bound", positive(u), "must be positive")?;
    }

    let horizon = mdp.horizon as f64;
    let agent = AgentSection {
        kind: e.get("agent.kind", AgentKind::Kovi)?,
        rho: e.get("agent.rho", 1.0)?,
        clip: e.get("agent.clip", horizon)?,
        rewards: e.get("agent.rewards", RewardModel::Known)?,
    };
    e.check("agent.rho", positive(agent.rho), "must be positive")?;
    e.check("agent.clip", agent.clip == horizon, "must equal mdp.horizon")?;
    if let AgentKind::Fixed(a) = agent.kind {
        e.check("agent.kind", a < mdp.actions, "fixed action is out of range")?;
    }
    if agent.kind == AgentKind::KernelUcbBandit {
        e.check(
            "agent.kind",
            mdp.states == 1 && mdp.horizon == 1,
            "kernel-ucb-bandit needs mdp.states = 1 and mdp.horizon = 1",
        )?;
    }

    let beta = BetaSection {
        kind: e.get("beta.kind", BetaKind::SelfNormalized)?,
        c_f: e.get("beta.c_f", 1.0)?,
        sigma: e.get("beta.sigma", horizon / 2.0)?,
        delta: e.get("beta.delta", 0.05)?,
        cover_term: e.get("beta.cover_term", CoverSetting::Auto)?,
        constant_value: e.get("beta.constant_value", 1.0)?,
    };
    e.check("beta.c_f", nonnegative(beta.c_f), "must be nonnegative")?;
    e.check("beta.sigma", nonnegative(beta.sigma), "must be nonnegative")?;
    e.check("beta.delta", beta.delta > 0.0 && beta.delta < 1.0, "must lie in (0, 1)")?;
    if let CoverSetting::Fixed(v) = beta.cover_term {
        e.check("beta.cover_term", nonnegative(v), "must be nonnegative")?;
    }
    e.check("beta.constant_value", nonnegative(beta.constant_value), "must be nonnegative")?;

    let experiment = ExperimentSection {
        episodes: e.get("experiment.episodes", 200)?,
        seed: e.get("experiment.seed", 0)?,
        seeds: e.get("experiment.seeds", 5)?,
        initial_state_mode: e.get("experiment.initial-state-mode", InitialStateMode::Uniform)?,
        output_path: PathBuf::from(e.get("experiment.output-path", "results".to_string())?),
        record_wall_time: e.get("experiment.record-wall-time", false)?,
    };
    e.check("experiment.seeds", experiment.seeds > 0, "must be positive")?;
    e.check(
        "experiment.seeds",
        experiment.seed.checked_add(experiment.seeds as u64 - 1).is_some(),
        "seed range overflows",
    )?;
    e.check(
        "experiment.output-path",
        !experiment.output_path.as_os_str().is_empty(),
        "must not be empty",
    )?;
    if let InitialStateMode::Fixed(s) = experiment.initial_state_mode {
        e.check("experiment.initial-state-mode", s < mdp.states, "fixed state is out of range")?;
    }

    let coverage = CoverageSection {
        trials: e.get("coverage.trials", 500)?,
        n: e.get("coverage.n", 30)?,
        dim: e.get("coverage.dim", 1)?,
        centers: e.get("coverage.centers", 10)?,
        test_points: e.get("coverage.test-points", 20)?,
        width_scale: e.get("coverage.width-scale", 1.0)?,
    };
    for key in ["coverage.n", "coverage.dim", "coverage.centers", "coverage.test-points"] {
        e.check(key, e.get::<usize>(key, 1)? > 0, "must be positive")?;
    }
    e.check("coverage.width-scale", nonnegative(coverage.width_scale), "must be nonnegative")?;

    let infogain = InfoGainSection {
        max_n: e.get("infogain.max-n", 32)?,
    };
    e.check("infogain.max-n", infogain.max_n > 0, "must be positive")?;

    let cfg = ExperimentConfig {
        kernel,
        mdp,
        agent,
        beta,
        experiment,
        coverage,
        infogain,
    };
    cfg.kernel_spec().map_err(|err| e.err("kernel.family", err.to_string()))?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        KernelSpec::new(
            self.kernel.family,
            self.kernel.lengthscale,
            self.kernel.scale,
            self.kernel.offset,
        )
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            state_dim: self.mdp.state_dim,
            action_dim: self.mdp.action_dim,
            num_states: self.mdp.states,
            num_actions: self.mdp.actions,
            horizon: self.mdp.horizon,
            perturbation: self.mdp.perturbation,
            centers: self.mdp.centers,
            seed: self.mdp.seed,
            norm_bound: self.mdp.norm_bound,
        }
    }

    pub fn beta_schedule(&self) -> BetaSchedule {
        let b = &self.beta;
        if b.kind == BetaKind::Constant {
            return BetaSchedule::constant(b.constant_value);
        }
        let cover = match b.cover_term {
            CoverSetting::Auto => CoverTerm::LogN {
                dim: (self.mdp.state_dim + self.mdp.action_dim) as f64,
            },
            CoverSetting::Fixed(v) => CoverTerm::Fixed(v),
        };
        BetaSchedule::new(b.kind, b.c_f, b.sigma, b.delta).with_cover_term(cover)
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            kind: self.agent.kind,
            rho: self.agent.rho,
            beta: self.beta_schedule(),
            clip: self.agent.clip,
            rewards: self.agent.rewards,
        }
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            agent: self.agent_config(),
            episodes: self.experiment.episodes,
            seed: self.experiment.seed,
            initial_state: self.experiment.initial_state_mode,
            record_wall_time: self.experiment.record_wall_time,
        }
    }

    /// Seeds of the sweep replications.
    pub fn sweep_seeds(&self) -> Vec<u64> {
        (0..self.experiment.seeds as u64)
            .map(|i| self.experiment.seed + i)
            .collect()
    }

    /// Coverage experiment using the kernel, `agent.rho`, and the `beta`
    /// section's `c_f`, `sigma` (as the noise level), and `delta`.
    pub fn coverage_config(&self) -> Result<CoverageConfig> {
        Ok(CoverageConfig {
            spec: self.kernel_spec()?,
            rho: self.agent.rho,
            c_f: self.beta.c_f,
            sigma: self.beta.sigma,
            delta: self.beta.delta,
            n: self.coverage.n,
            dim: self.coverage.dim,
            centers: self.coverage.centers,
            test_points: self.coverage.test_points,
            trials: self.coverage.trials,
            width_scale: self.coverage.width_scale,
            seed: self.experiment.seed,
        })
    }

    /// The serialized configuration, one `key = value` per line.
    pub fn echo_lines(&self) -> Vec<String> {
        self.to_string().lines().map(str::to_string).collect()
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (k, m, a, b, x, c) = (
            &self.kernel,
            &self.mdp,
            &self.agent,
            &self.beta,
            &self.experiment,
            &self.coverage,
        );
        writeln!(f, "kernel.family = {}", k.family)?;
        writeln!(f, "kernel.lengthscale = {}", k.lengthscale)?;
        writeln!(f, "kernel.scale = {}", k.scale)?;
        writeln!(f, "kernel.offset = {}", k.offset)?;
        writeln!(f, "mdp.states = {}", m.states)?;
        writeln!(f, "mdp.actions = {}", m.actions)?;
        writeln!(f, "mdp.state-dim = {}", m.state_dim)?;
        writeln!(f, "mdp.action-dim = {}", m.action_dim)?;
        writeln!(f, "mdp.horizon = {}", m.horizon)?;
        writeln!(f, "mdp.perturbation = {}", m.perturbation)?;
        writeln!(f, "mdp.centers = {}", m.centers)?;
        writeln!(f, "mdp.seed = {}", m.seed)?;
        if let Some(u) = m.norm_bound {
            writeln!(f, "mdp.norm-bound = {u}")?;
        }
        if let Some(p) = &m.file {
            writeln!(f, "mdp.file = {}", p.display())?;
        }
        writeln!(f, "agent.kind = {}", a.kind)?;
        writeln!(f, "agent.rho = {}", a.rho)?;
        writeln!(f, "agent.clip = {}", a.clip)?;
        writeln!(f, "agent.rewards = {}", a.rewards)?;
        writeln!(f, "beta.kind = {}", b.kind)?;
        writeln!(f, "beta.c_f = {}", b.c_f)?;
        writeln!(f, "beta.sigma = {}", b.sigma)?;
        writeln!(f, "beta.delta = {}", b.delta)?;
        writeln!(f, "beta.cover_term = {}", b.cover_term)?;
        writeln!(f, "beta.constant_value = {}", b.constant_value)?;
        writeln!(f, "experiment.episodes = {}", x.episodes)?;
        writeln!(f, "experiment.seed = {}", x.seed)?;
        writeln!(f, "experiment.seeds = {}", x.seeds)?;
        writeln!(f, "experiment.initial-state-mode = {}", x.initial_state_mode)?;
        writeln!(f, "experiment.output-path = {}", x.output_path.display())?;
        writeln!(f, "experiment.record-wall-time = {}", x.record_wall_time)?;
        writeln!(f, "coverage.trials = {}", c.trials)?;
        writeln!(f, "coverage.n = {}", c.n)?;
        writeln!(f, "coverage.dim = {}", c.dim)?;
        writeln!(f, "coverage.centers = {}", c.centers)?;
        writeln!(f, "coverage.test-points = {}", c.test_points)?;
        writeln!(f, "coverage.width-scale = {}", c.width_scale)?;
        writeln!(f, "infogain.max-n = {}", self.infogain.max_n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.mdp.states, 16);
        assert_eq!(cfg.agent.clip, 3.0);
        assert_eq!(cfg.beta.sigma, 1.5);
        assert_eq!(cfg.agent.kind, AgentKind::Kovi);
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn delta_out_of_range_names_key() {
        match parse_config("# c\n\nbeta.delta = 1.5\n") {
            Err(Error::Config { key, line, .. }) => {
                assert_eq!(key, "beta.delta");
                assert_eq!(line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        assert!(matches!(
            parse_config("mdp.states = 4\nmdp.colour = red"),
            Err(Error::Config { key, line: 2, .. }) if key == "mdp.colour"
        ));
        assert!(matches!(
            parse_config("mdp.states = 4\nmdp.states = 5"),
            Err(Error::Config { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("mdp.states = four"),
            Err(Error::Config { key, .. }) if key == "mdp.states"
        ));
    }

    #[test]
    fn horizon_drives_resolved_defaults() {
        let cfg = parse_config("mdp.horizon = 5 # steps").unwrap();
        assert_eq!((cfg.agent.clip, cfg.beta.sigma), (5.0, 2.5));
        assert!(parse_config("mdp.horizon = 5\nagent.clip = 3").is_err());
    }

    #[test]
    fn order_does_not_matter() {
        let a = parse_config("agent.rho = 0.3\nkernel.family = matern-3/2").unwrap();
        let b = parse_config("kernel.family = matern-3/2\nagent.rho = 0.3").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn serialization_round_trips() {
        let text = "kernel.family = matern-5/2\nkernel.lengthscale = 0.1\nmdp.norm-bound = 2.5\n\
                    mdp.file = some/mdp.json\nbeta.cover_term = 0.7\nagent.kind = fixed:2\n\
                    experiment.initial-state-mode = fixed:3\nagent.rewards = observed";
        let cfg = parse_config(text).unwrap();
        assert_eq!(parse_config(&cfg.to_string()).unwrap(), cfg);
        let defaults = ExperimentConfig::default();
        assert_eq!(parse_config(&defaults.to_string()).unwrap(), defaults);
        assert_eq!(defaults.to_string().lines().count(), KEYS.len() - 2);
    }

    #[test]
    fn bandit_needs_single_state() {
        assert!(parse_config("agent.kind = kernel-ucb-bandit").is_err());
        assert!(parse_config("agent.kind = kernel-ucb-bandit\nmdp.states = 1\nmdp.horizon = 1").is_ok());
    }
}

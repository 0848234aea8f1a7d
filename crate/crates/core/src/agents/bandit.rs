use super::{optimistic_value, Agent, AgentConfig, Decision, PlanDiagnostics, SimRng};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Point};
use crate::krr::{fit_posterior, Posterior};
use crate::mdp::{dp::argmax_first, MdpView, Policy, Step};

/// Candidate maximizing `min(clip, mean + beta * stddev)`, lowest index on ties.
///
/// The index is capped at `clip` like the optimistic Q-values of KOVI, which
/// makes this rule the `|S| = 1`, `H = 1` case of that planner.
pub fn ucb_select(post: &Posterior, candidates: &[Point], cfg: &AgentConfig) -> Result<(usize, f64, f64)> {
    let gamma = post.info_gain();
    let beta = cfg.beta.width(cfg.rho, post.len(), gamma)?;
    let ucb = candidates
        .iter()
        .map(|c| {
            let (mean, sd) = post.predict(c)?;
            Ok(optimistic_value(mean, beta, sd, cfg.clip))
        })
        .collect::<Result<Vec<f64>>>()?;
    let best = argmax_first(&ucb);
    Ok((best, beta, gamma))
}

/// One kernel UCB decision from scratch: fits the posterior on the observed
/// `(point, reward)` history and selects among `candidates`.
pub fn kernel_ucb_bandit_step(
    spec: &KernelSpec,
    points: &[Point],
    rewards: &[f64],
    candidates: &[Point],
    cfg: &AgentConfig,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::input("bandit step needs at least one candidate"));
    }
    let post = fit_posterior(*spec, cfg.rho, points.to_vec(), rewards.to_vec())?;
    Ok(ucb_select(&post, candidates, cfg)?.0)
}

/// Kernel UCB on a one-state, one-step MDP; the unknown quantity is the reward.
pub struct KernelUcbAgent {
    post: Posterior,
    candidates: Vec<Point>,
    cfg: AgentConfig,
}

impl KernelUcbAgent {
    pub fn new(view: MdpView<'_>, cfg: AgentConfig) -> Result<Self> {
        Ok(KernelUcbAgent {
            post: Posterior::empty(*view.spec, cfg.rho)?,
            candidates: view.pair_points(),
            cfg,
        })
    }
}

impl Agent for KernelUcbAgent {
    fn plan(&mut self, _rng: &mut SimRng) -> Result<Decision> {
        let (a, beta, gamma) = ucb_select(&self.post, &self.candidates, &self.cfg)?;
        let (mean, sd) = self.post.predict(&self.candidates[a])?;
        Ok(Decision {
            policy: Policy {
                actions: vec![vec![a]],
            },
            diagnostics: Some(PlanDiagnostics {
                betas: vec![beta],
                gammas: vec![gamma],
                initial_values: vec![optimistic_value(mean, beta, sd, self.cfg.clip)],
            }),
        })
    }

    fn observe(&mut self, _h: usize, step: &Step) -> Result<()> {
        self.post
            .push_observation(self.candidates[step.action].clone(), step.reward)
    }
}

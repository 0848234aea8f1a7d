use super::{optimistic_value, Agent, AgentConfig, Decision, PlanDiagnostics, RewardModel, SimRng};
use crate::error::{Error, Result};
use crate::kernel::Point;
use crate::krr::{GridPosterior, Posterior};
use crate::mdp::{dp::argmax_first, MdpView, Policy, Step};

/// Transitions seen so far, kept separately for each step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub steps: Vec<Vec<Step>>,
}

impl History {
    pub fn new(horizon: usize) -> Self {
        History {
            steps: vec![Vec::new(); horizon],
        }
    }

    pub fn record(&mut self, h: usize, step: Step) {
        self.steps[h].push(step);
    }
}

/// Optimistic Q tables for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodePlan {
    /// `[h][s * A + a]`, each in `[0, clip]`.
    pub q: Vec<Vec<f64>>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    num_actions: usize,
}

impl EpisodePlan {
    pub fn q_row(&self, h: usize, s: usize) -> &[f64] {
        &self.q[h][s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// Greedy action, lowest index on ties.
    pub fn act(&self, h: usize, s: usize) -> usize {
        argmax_first(self.q_row(h, s))
    }

    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.q_row(h, s)[self.act(h, s)]
    }

    pub fn policy(&self) -> Policy {
        let ns = self.q.first().map_or(0, |row| row.len() / self.num_actions);
        Policy {
            actions: (0..self.q.len())
                .map(|h| (0..ns).map(|s| self.act(h, s)).collect())
                .collect(),
        }
    }

    pub fn diagnostics(&self) -> PlanDiagnostics {
        let ns = self.q.first().map_or(0, |row| row.len() / self.num_actions);
        PlanDiagnostics {
            betas: self.betas.clone(),
            gammas: self.gammas.clone(),
            initial_values: (0..ns).map(|s| self.value(0, s)).collect(),
        }
    }
}

/// Source of step-`h` posterior predictions at every state-action pair.
trait StepModel {
    fn set_targets(&mut self, targets: Vec<f64>) -> Result<()>;
    fn len(&self) -> usize;
    fn info_gain(&self) -> f64;
    fn predict(&self, pair: usize) -> Result<(f64, f64)>;
}

struct Fresh<'a> {
    post: Posterior,
    pairs: &'a [Point],
}

impl StepModel for Fresh<'_> {
    fn set_targets(&mut self, targets: Vec<f64>) -> Result<()> {
        self.post.set_targets(targets)
    }
    fn len(&self) -> usize {
        self.post.len()
    }
    fn info_gain(&self) -> f64 {
        self.post.info_gain()
    }
    fn predict(&self, pair: usize) -> Result<(f64, f64)> {
        self.post.predict(&self.pairs[pair])
    }
}

impl StepModel for GridPosterior {
    fn set_targets(&mut self, targets: Vec<f64>) -> Result<()> {
        GridPosterior::set_targets(self, targets)
    }
    fn len(&self) -> usize {
        self.posterior().len()
    }
    fn info_gain(&self) -> f64 {
        self.posterior().info_gain()
    }
    fn predict(&self, pair: usize) -> Result<(f64, f64)> {
        GridPosterior::predict(self, pair)
    }
}

/// Backward induction shared by the batch planner and the incremental agent.
fn plan_backward<M: StepModel>(
    rewards: &[Vec<f64>],
    num_actions: usize,
    history: &[Vec<Step>],
    models: &mut [M],
    cfg: &AgentConfig,
) -> Result<EpisodePlan> {
    let horizon = rewards.len();
    let pairs = rewards.first().map_or(0, Vec::len);
    let ns = pairs / num_actions;
    let mut q = vec![Vec::new(); horizon];
    let mut betas = vec![0.0; horizon];
    let mut gammas = vec![0.0; horizon];
    let mut next_value = vec![0.0; ns];
    for h in (0..horizon).rev() {
        let targets = history[h]
            .iter()
            .map(|st| match cfg.rewards {
                RewardModel::Known => next_value[st.next_state],
                RewardModel::Observed => st.reward + next_value[st.next_state],
            })
            .collect();
        let model = &mut models[h];
        model.set_targets(targets)?;
        let gamma = model.info_gain();
        let beta = cfg.beta.width(cfg.rho, model.len(), gamma)?;
        let mut row = Vec::with_capacity(pairs);
        for (z, r) in rewards[h].iter().enumerate().take(pairs) {
            let (mean, sd) = model.predict(z)?;
            let base = match cfg.rewards {
                RewardModel::Known => r + mean,
                RewardModel::Observed => mean,
            };
            row.push(optimistic_value(base, beta, sd, cfg.clip));
        }
        next_value = row
            .chunks(num_actions)
            .map(|r| r[argmax_first(r)])
            .collect();
        q[h] = row;
        betas[h] = beta;
        gammas[h] = gamma;
    }
    Ok(EpisodePlan {
        q,
        betas,
        gammas,
        num_actions,
    })
}

/// Plans one episode of optimistic kernel LSVI from scratch.
///
/// Step `h` regresses `V_{h+1}(s')` on the state-action embeddings of the
/// step-`h` transitions, where `V_{h+1}(s) = max_a Q_{h+1}(s, a)` comes from
/// the same backward pass, and sets
/// `Q_h(z) = min(clip, r_h(z) + mean(z) + beta * stddev(z))`.
pub fn kovi_plan(view: MdpView<'_>, history: &History, cfg: &AgentConfig) -> Result<EpisodePlan> {
    if history.steps.len() != view.horizon {
        return Err(Error::input("history must hold one dataset per step"));
    }
    let na = view.num_actions();
    let pairs = view.pair_points();
    let mut models = history
        .steps
        .iter()
        .map(|data| {
            let mut post = Posterior::empty(*view.spec, cfg.rho)?;
            for st in data {
                let z = st.state * na + st.action;
                post.push_observation(pairs[z].clone(), 0.0)?;
            }
            Ok(Fresh {
                post,
                pairs: &pairs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    plan_backward(view.rewards, na, &history.steps, &mut models, cfg)
}

/// Incremental KOVI: posteriors and query caches persist across episodes.
pub struct KoviAgent {
    rewards: Vec<Vec<f64>>,
    pairs: Vec<Point>,
    num_actions: usize,
    cfg: AgentConfig,
    models: Vec<GridPosterior>,
    history: Vec<Vec<Step>>,
}

impl KoviAgent {
    pub fn new(view: MdpView<'_>, cfg: AgentConfig) -> Result<Self> {
        let pairs = view.pair_points();
        let models = (0..view.horizon)
            .map(|_| GridPosterior::new(Posterior::empty(*view.spec, cfg.rho)?, pairs.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(KoviAgent {
            rewards: view.rewards.to_vec(),
            pairs,
            num_actions: view.num_actions(),
            cfg,
            models,
            history: vec![Vec::new(); view.horizon],
        })
    }

    pub fn current_plan(&mut self) -> Result<EpisodePlan> {
        plan_backward(
            &self.rewards,
            self.num_actions,
            &self.history,
            &mut self.models,
            &self.cfg,
        )
    }
}

impl Agent for KoviAgent {
    fn plan(&mut self, _rng: &mut SimRng) -> Result<Decision> {
        let plan = self.current_plan()?;
        Ok(Decision {
            policy: plan.policy(),
            diagnostics: Some(plan.diagnostics()),
        })
    }

    fn observe(&mut self, h: usize, step: &Step) -> Result<()> {
        let z = step.state * self.num_actions + step.action;
        self.models[h].push_observation(self.pairs[z].clone(), 0.0)?;
        self.history[h].push(*step);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentKind, RewardModel};
    use crate::kernel::{KernelFamily, KernelSpec};
    use crate::krr::{BetaKind, BetaSchedule};
    use crate::mdp::{make_random_rkhs_mdp, transition_sample, GeneratorConfig, Mdp};
    use rand::SeedableRng;

    fn small_mdp() -> Mdp {
        let spec = KernelSpec::new(KernelFamily::SquaredExponential, 0.6, 1.0, 0.5).unwrap();
        let cfg = GeneratorConfig {
            num_states: 5,
            num_actions: 3,
            horizon: 3,
            perturbation: 0.15,
            centers: 4,
            seed: 7,
            ..Default::default()
        };
        make_random_rkhs_mdp(spec, &cfg).unwrap()
    }

    fn cfg(beta: BetaSchedule, clip: f64) -> AgentConfig {
        AgentConfig::new(AgentKind::Kovi, 1.0, beta, clip)
    }

    #[test]
    fn empty_history_last_step_is_reward() {
        let mdp = small_mdp();
        let plan = kovi_plan(mdp.view(), &History::new(3), &cfg(BetaSchedule::constant(0.0), 3.0)).unwrap();
        assert_eq!(plan.q[2], mdp.rewards(2).to_vec());
    }

    #[test]
    fn huge_beta_saturates() {
        let mdp = small_mdp();
        let plan = kovi_plan(mdp.view(), &History::new(3), &cfg(BetaSchedule::constant(1e6), 3.0)).unwrap();
        for h in 0..3 {
            assert!(plan.q[h].iter().all(|q| *q == 3.0));
            for s in 0..5 {
                assert_eq!(plan.act(h, s), 0);
            }
        }
    }

    #[test]
    fn incremental_agent_matches_batch_planner() {
        let mdp = small_mdp();
        let c = cfg(BetaSchedule::new(BetaKind::SelfNormalized, 1.0, 1.5, 0.05), 3.0);
        for rewards in [RewardModel::Known, RewardModel::Observed] {
            let c = AgentConfig { rewards, ..c.clone() };
            let mut agent = KoviAgent::new(mdp.view(), c.clone()).unwrap();
            let mut history = History::new(3);
            let mut rng = SimRng::seed_from_u64(5);
            for t in 0..15 {
                let plan = agent.current_plan().unwrap();
                assert_eq!(plan, kovi_plan(mdp.view(), &history, &c).unwrap(), "episode {t}");
                let mut s = t % 5;
                for h in 0..3 {
                    let a = plan.act(h, s);
                    let next = transition_sample(&mdp, h, s, a, &mut rng);
                    let step = Step { state: s, action: a, reward: mdp.reward(h, s, a), next_state: next };
                    agent.observe(h, &step).unwrap();
                    history.record(h, step);
                    s = next;
                }
            }
        }
    }

    #[test]
    fn q_values_stay_in_range() {
        let mdp = small_mdp();
        let c = cfg(BetaSchedule::new(BetaKind::SelfNormalized, 1.0, 1.5, 0.05), 3.0);
        let mut agent = KoviAgent::new(mdp.view(), c).unwrap();
        let mut rng = SimRng::seed_from_u64(1);
        for t in 0..40 {
            let plan = agent.current_plan().unwrap();
            assert!(plan.q.iter().flatten().all(|q| (0.0..=3.0).contains(q)));
            let mut s = t % 5;
            for h in 0..3 {
                let a = plan.act(h, s);
                let next = transition_sample(&mdp, h, s, a, &mut rng);
                agent
                    .observe(h, &Step { state: s, action: a, reward: mdp.reward(h, s, a), next_state: next })
                    .unwrap();
                s = next;
            }
        }
    }

    #[test]
    fn act_is_shift_invariant() {
        let plan = EpisodePlan {
            q: vec![vec![0.2, 0.9, 0.9, 0.4, 0.1, 0.3]],
            betas: vec![0.0],
            gammas: vec![0.0],
            num_actions: 3,
        };
        assert_eq!(plan.act(0, 0), 1);
        assert_eq!(plan.act(0, 1), 0);
        let shifted = EpisodePlan {
            q: vec![plan.q[0].iter().map(|q| q + 0.05).collect()],
            ..plan.clone()
        };
        assert_eq!(shifted.policy(), plan.policy());
        let single = EpisodePlan { q: vec![vec![0.4]], betas: vec![0.0], gammas: vec![0.0], num_actions: 1 };
        assert_eq!(single.act(0, 0), 0);
    }
}

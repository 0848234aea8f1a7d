use rand::Rng;

use super::{Agent, Decision, SimRng};
use crate::error::Result;
use crate::mdp::{exact_optimal_values, Mdp, Policy, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Random,
    Fixed(usize),
}

/// Seeded uniform draw over `num_actions`, or the fixed index.
pub fn baseline_act(kind: Baseline, rng: &mut SimRng, num_actions: usize) -> usize {
    match kind {
        Baseline::Random => rng.random_range(0..num_actions),
        Baseline::Fixed(a) => a,
    }
}

/// Draws a fresh uniformly random policy table each episode.
///
/// Since every `(h, s)` entry is independent and uniform, the expected value of
/// the committed policy equals the value of the uniform stochastic policy.
pub struct RandomAgent {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
}

impl RandomAgent {
    pub fn new(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        RandomAgent {
            horizon,
            num_states,
            num_actions,
        }
    }
}

impl Agent for RandomAgent {
    fn plan(&mut self, rng: &mut SimRng) -> Result<Decision> {
        let actions = (0..self.horizon)
            .map(|_| {
                (0..self.num_states)
                    .map(|_| baseline_act(Baseline::Random, rng, self.num_actions))
                    .collect()
            })
            .collect();
        Ok(Decision {
            policy: Policy { actions },
            diagnostics: None,
        })
    }

    fn observe(&mut self, _h: usize, _step: &Step) -> Result<()> {
        Ok(())
    }
}

pub struct FixedAgent {
    policy: Policy,
}

impl FixedAgent {
    pub fn new(horizon: usize, num_states: usize, action: usize) -> Self {
        FixedAgent {
            policy: Policy::constant(horizon, num_states, action),
        }
    }
}

impl Agent for FixedAgent {
    fn plan(&mut self, _rng: &mut SimRng) -> Result<Decision> {
        Ok(Decision {
            policy: self.policy.clone(),
            diagnostics: None,
        })
    }

    fn observe(&mut self, _h: usize, _step: &Step) -> Result<()> {
        Ok(())
    }
}

/// Greedy with respect to the exact optimal Q; has zero regret by construction.
pub struct OracleAgent {
    policy: Policy,
}

impl OracleAgent {
    pub fn new(mdp: &Mdp) -> Self {
        OracleAgent {
            policy: exact_optimal_values(mdp).greedy_policy(),
        }
    }
}

impl Agent for OracleAgent {
    fn plan(&mut self, _rng: &mut SimRng) -> Result<Decision> {
        Ok(Decision {
            policy: self.policy.clone(),
            diagnostics: None,
        })
    }

    fn observe(&mut self, _h: usize, _step: &Step) -> Result<()> {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn fixed_is_constant() {
        let mut rng = SimRng::seed_from_u64(1);
        assert!((0..100).all(|_| baseline_act(Baseline::Fixed(2), &mut rng, 4) == 2));
    }

    #[test]
    fn random_is_seeded() {
        let draw = |seed| {
            let mut rng = SimRng::seed_from_u64(seed);
            (0..50)
                .map(|_| baseline_act(Baseline::Random, &mut rng, 7))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn random_is_uniform() {
        let mut rng = SimRng::seed_from_u64(42);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[baseline_act(Baseline::Random, &mut rng, 4)] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e4 - 0.25).abs() <= 0.02, "{counts:?}");
        }
    }
}

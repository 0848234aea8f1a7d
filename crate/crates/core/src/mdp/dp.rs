use super::Mdp;
use crate::error::{Error, Result};

/// Backward-induction tables. `v` has `horizon + 1` rows (the last is all
/// zeros); `q[h][s * A + a]` has `horizon` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub v: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    num_actions: usize,
}

impl ValueTable {
    pub fn value(&self, h: usize, s: usize) -> f64 {
        self.v[h][s]
    }

    pub fn q_value(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[h][s * self.num_actions + a]
    }

    /// Greedy policy with respect to `q`, lowest action index on ties.
    pub fn greedy_policy(&self) -> Policy {
        let actions = self
            .q
            .iter()
            .map(|row| row.chunks(self.num_actions).map(argmax_first).collect())
            .collect();
        Policy { actions }
    }
}

/// Index of the first maximal entry.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// A deterministic nonstationary policy `actions[h][s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub actions: Vec<Vec<usize>>,
}

impl Policy {
    pub fn constant(horizon: usize, num_states: usize, action: usize) -> Self {
        Policy {
            actions: vec![vec![action; num_states]; horizon],
        }
    }

    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h][s]
    }

    fn check(&self, mdp: &Mdp) -> Result<()> {
        if self.actions.len() != mdp.horizon() {
            return Err(Error::input(format!(
                "policy covers {} steps, MDP has {}",
                self.actions.len(),
                mdp.horizon()
            )));
        }
        for (h, row) in self.actions.iter().enumerate() {
            if row.len() != mdp.num_states() {
                return Err(Error::input(format!("policy step {h} does not cover every state")));
            }
            if let Some(a) = row.iter().find(|a| **a >= mdp.num_actions()) {
                return Err(Error::input(format!("policy step {h} uses invalid action {a}")));
            }
        }
        Ok(())
    }
}

fn backup(mdp: &Mdp, h: usize, next: &[f64]) -> Vec<f64> {
    let na = mdp.num_actions();
    (0..mdp.num_pairs())
        .map(|z| {
            let (s, a) = (z / na, z % na);
            let expect: f64 = mdp
                .transition_row(h, s, a)
                .iter()
                .zip(next)
                .map(|(p, v)| p * v)
                .sum();
            mdp.reward(h, s, a) + expect
        })
        .collect()
}

/// Optimal values by backward induction from `V_{H+1} = 0`.
pub fn exact_optimal_values(mdp: &Mdp) -> ValueTable {
    let (horizon, ns, na) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut v = vec![vec![0.0; ns]; horizon + 1];
    let mut q = vec![Vec::new(); horizon];
    for h in (0..horizon).rev() {
        q[h] = backup(mdp, h, &v[h + 1]);
        v[h] = q[h]
            .chunks(na)
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
    }
    ValueTable { v, q, num_actions: na }
}

/// Exact value of a deterministic policy.
pub fn evaluate_policy(mdp: &Mdp, policy: &Policy) -> Result<ValueTable> {
    policy.check(mdp)?;
    let (horizon, ns, na) = (mdp.horizon(), mdp.num_states(), mdp.num_actions());
    let mut v = vec![vec![0.0; ns]; horizon + 1];
    let mut q = vec![Vec::new(); horizon];
    for h in (0..horizon).rev() {
        q[h] = backup(mdp, h, &v[h + 1]);
        v[h] = (0..ns).map(|s| q[h][s * na + policy.action(h, s)]).collect();
    }
    Ok(ValueTable { v, q, num_actions: na })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::hand_mdp;
    use super::*;
    use crate::kernel::{KernelSpec, Point};

    #[test]
    fn hand_mdp_optimal_values() {
        let mdp = hand_mdp();
        let vt = exact_optimal_values(&mdp);
        assert!((vt.value(0, 0) - 2.0).abs() <= 1e-12);
        assert!(vt.value(0, 1).abs() <= 1e-12);
        assert_eq!(vt.v[2], vec![0.0, 0.0]);
        assert_eq!(vt.greedy_policy(), Policy::constant(2, 2, 0));
    }

    #[test]
    fn hand_mdp_always_move_policy() {
        let mdp = hand_mdp();
        let vt = evaluate_policy(&mdp, &Policy::constant(2, 2, 1)).unwrap();
        assert_eq!(vt.value(0, 0), 0.0);
    }

    #[test]
    fn greedy_policy_attains_optimum() {
        let mdp = hand_mdp();
        let opt = exact_optimal_values(&mdp);
        let vt = evaluate_policy(&mdp, &opt.greedy_policy()).unwrap();
        assert_eq!(vt.v, opt.v);
    }

    #[test]
    fn unit_rewards_telescope() {
        let pts = |n: usize| -> Vec<Point> {
            (0..n).map(|i| Point::new(vec![i as f64 / 2.0]).unwrap()).collect()
        };
        let row = vec![0.2, 0.5, 0.3];
        let mdp = Mdp::from_tables(
            pts(3),
            pts(2),
            2,
            vec![vec![1.0; 6]; 2],
            vec![vec![row; 6]; 2],
            KernelSpec::default(),
        )
        .unwrap();
        let vt = exact_optimal_values(&mdp);
        for s in 0..3 {
            assert!((vt.value(0, s) - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn argmax_ties_pick_first() {
        assert_eq!(argmax_first(&[0.2, 0.9, 0.9]), 1);
        assert_eq!(argmax_first(&[0.5]), 0);
        assert_eq!(argmax_first(&[1.0, 1.0, 1.0]), 0);
    }

    #[test]
    fn malformed_policy_rejected() {
        let mdp = hand_mdp();
        assert!(evaluate_policy(&mdp, &Policy::constant(1, 2, 0)).is_err());
        assert!(evaluate_policy(&mdp, &Policy::constant(2, 2, 5)).is_err());
    }
}

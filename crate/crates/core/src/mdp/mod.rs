//! Finite episodic MDPs on embedded grids.
//!
//! Steps are zero-based throughout the API: step `h` in `0..horizon`
//! is the `(h + 1)`-th decision of an episode. State-action pairs are
//! flattened as `s * num_actions + a`.

pub(crate) mod dp;
mod generate;
mod verify;

pub use dp::{evaluate_policy, exact_optimal_values, Policy, ValueTable};
pub use generate::{lattice, make_random_rkhs_mdp, GeneratorConfig};
pub use verify::{verify_assumption, AssumptionReport, CertificateCheck};

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Point, RepresenterFunction};

/// Row-sum and nonnegativity tolerance for transition tables.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    states: Vec<Point>,
    actions: Vec<Point>,
    horizon: usize,
    /// `[h][s * A + a]`
    rewards: Vec<Vec<f64>>,
    /// `[h][s * A + a][s']`
    transitions: Vec<Vec<Vec<f64>>>,
    spec: KernelSpec,
    norm_bound: Option<f64>,
    /// `[h][s']`: certificate for `z -> P_h(s' | z)`.
    certificates: Option<Vec<Vec<RepresenterFunction>>>,
    seed: Option<u64>,
}

impl Mdp {
    /// Builds an MDP from explicit tables. No RKHS certificate is attached.
    pub fn from_tables(
        states: Vec<Point>,
        actions: Vec<Point>,
        horizon: usize,
        rewards: Vec<Vec<f64>>,
        transitions: Vec<Vec<Vec<f64>>>,
        spec: KernelSpec,
    ) -> Result<Self> {
        let mdp = Mdp {
            states,
            actions,
            horizon,
            rewards,
            transitions,
            spec,
            norm_bound: None,
            certificates: None,
            seed: None,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub(crate) fn with_certificates(
        mut self,
        certificates: Vec<Vec<RepresenterFunction>>,
        norm_bound: f64,
        seed: u64,
    ) -> Result<Self> {
        self.certificates = Some(certificates);
        self.norm_bound = Some(norm_bound);
        self.seed = Some(seed);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.horizon == 0 {
            return Err(Error::input("horizon must be at least 1"));
        }
        if self.states.is_empty() || self.actions.is_empty() {
            return Err(Error::input("state and action sets must be nonempty"));
        }
        for set in [&self.states, &self.actions] {
            let d = set[0].dim();
            if let Some(p) = set.iter().find(|p| p.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.dim(),
                });
            }
        }
        let (ns, pairs) = (self.num_states(), self.num_pairs());
        if self.rewards.len() != self.horizon || self.transitions.len() != self.horizon {
            return Err(Error::input("reward and transition tables need one entry per step"));
        }
        for h in 0..self.horizon {
            if self.rewards[h].len() != pairs || self.transitions[h].len() != pairs {
                return Err(Error::input(format!(
                    "step {h}: tables must have one row per state-action pair ({pairs})"
                )));
            }
            if let Some(r) = self.rewards[h].iter().find(|r| !(0.0..=1.0).contains(*r)) {
                return Err(Error::input(format!("step {h}: reward {r} outside [0, 1]")));
            }
            for (z, row) in self.transitions[h].iter().enumerate() {
                if row.len() != ns {
                    return Err(Error::input(format!(
                        "step {h}, pair {z}: transition row has {} entries, expected {ns}",
                        row.len()
                    )));
                }
                if row.iter().any(|p| !p.is_finite() || *p < -STOCHASTIC_TOL) {
                    return Err(Error::input(format!(
                        "step {h}, pair {z}: negative or non-finite transition probability"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(Error::input(format!(
                        "step {h}, pair {z}: transition row sums to {sum}"
                    )));
                }
            }
        }
        if let Some(certs) = &self.certificates {
            if certs.len() != self.horizon || certs.iter().any(|c| c.len() != ns) {
                return Err(Error::input("certificates need one function per (step, next state)"));
            }
        }
        if let Some(u) = self.norm_bound {
            if !(u.is_finite() && u > 0.0) {
                return Err(Error::input(format!("norm bound must be positive, got {u}")));
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.states.len() * self.actions.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> &[Point] {
        &self.states
    }

    pub fn actions(&self) -> &[Point] {
        &self.actions
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn norm_bound(&self) -> Option<f64> {
        self.norm_bound
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn certificates(&self) -> Option<&[Vec<RepresenterFunction>]> {
        self.certificates.as_deref()
    }

    pub fn pair_index(&self, s: usize, a: usize) -> usize {
        s * self.actions.len() + a
    }

    pub fn reward(&self, h: usize, s: usize, a: usize) -> f64 {
        self.rewards[h][self.pair_index(s, a)]
    }

    pub fn rewards(&self, h: usize) -> &[f64] {
        &self.rewards[h]
    }

    pub fn transition_row(&self, h: usize, s: usize, a: usize) -> &[f64] {
        &self.transitions[h][self.pair_index(s, a)]
    }

    /// Embedding of the state-action pair `(s, a)`.
    pub fn pair_point(&self, s: usize, a: usize) -> Point {
        Point::join(&self.states[s], &self.actions[a])
    }

    /// Embeddings of every state-action pair, in flattened order.
    pub fn pair_points(&self) -> Vec<Point> {
        (0..self.num_states())
            .flat_map(|s| (0..self.num_actions()).map(move |a| (s, a)))
            .map(|(s, a)| self.pair_point(s, a))
            .collect()
    }

    /// The part of the MDP an agent is allowed to see.
    pub fn view(&self) -> MdpView<'_> {
        MdpView {
            spec: &self.spec,
            states: &self.states,
            actions: &self.actions,
            horizon: self.horizon,
            rewards: &self.rewards,
        }
    }

    /// Mutable access to a transition entry, for fault-injection tests.
    #[doc(hidden)]
    pub fn transition_entry_mut(&mut self, h: usize, s: usize, a: usize, next: usize) -> &mut f64 {
        let z = self.pair_index(s, a);
        &mut self.transitions[h][z][next]
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        crate::harness::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mdp: Mdp = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        mdp.validate()?;
        Ok(mdp)
    }
}

/// Grids, known rewards, horizon, and kernel; no transitions.
#[derive(Debug, Clone, Copy)]
pub struct MdpView<'a> {
    pub spec: &'a KernelSpec,
    pub states: &'a [Point],
    pub actions: &'a [Point],
    pub horizon: usize,
    pub rewards: &'a [Vec<f64>],
}

impl MdpView<'_> {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn pair_points(&self) -> Vec<Point> {
        self.states
            .iter()
            .flat_map(|s| self.actions.iter().map(move |a| Point::join(s, a)))
            .collect()
    }
}

/// Draws `s'` from `P_h(. | s, a)` by inverting the row's CDF.
pub fn transition_sample<R: Rng + ?Sized>(
    mdp: &Mdp,
    h: usize,
    s: usize,
    a: usize,
    rng: &mut R,
) -> usize {
    sample_index(mdp.transition_row(h, s, a), rng)
}

pub(crate) fn sample_index<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, p) in row.iter().enumerate() {
        if *p > 0.0 {
            last_positive = i;
        }
        cum += p;
        if u < cum {
            return i;
        }
    }
    // u landed in the rounding gap above the final cumulative sum
    last_positive
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub episode: usize,
    pub initial_state: usize,
    pub steps: Vec<Step>,
}

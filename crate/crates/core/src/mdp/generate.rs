use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Mdp;
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Point, RepresenterFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub state_dim: usize,
    pub action_dim: usize,
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Largest allowed deviation of any transition probability from `1/|S|`.
    pub perturbation: f64,
    /// Kernel centers per step.
    pub centers: usize,
    pub seed: u64,
    /// Required RKHS norm bound; when `None` the largest certificate norm is used.
    pub norm_bound: Option<f64>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            state_dim: 1,
            action_dim: 1,
            num_states: 16,
            num_actions: 4,
            horizon: 3,
            perturbation: 0.05,
            centers: 8,
            seed: 0,
            norm_bound: None,
        }
    }
}

/// `count` points of the regular lattice on `[0, 1]^dim` with the smallest
/// side length that fits them, in lexicographic order.
pub fn lattice(count: usize, dim: usize) -> Result<Vec<Point>> {
    if count == 0 || dim == 0 {
        return Err(Error::input("lattice needs a positive count and dimension"));
    }
    let mut side = 1usize;
    while side.checked_pow(dim as u32).is_some_and(|c| c < count) {
        side += 1;
    }
    let coord = |i: usize| {
        if side == 1 {
            0.5
        } else {
            i as f64 / (side - 1) as f64
        }
    };
    (0..count)
        .map(|mut idx| {
            let mut coords = vec![0.0; dim];
            for c in coords.iter_mut().rev() {
                *c = coord(idx % side);
                idx /= side;
            }
            Point::new(coords)
        })
        .collect()
}

/// Random MDP whose transition functions are certified RKHS members.
///
/// For each step, `P_h(s' | z) = 1/|S| + sum_j w[j][s'] k_base(z, c_j)` with
/// random centers `c_j`, weights summing to zero over `s'` for every center
/// (so rows are stochastic), and `sum_j |w[j][s']| sup k_base <= perturbation`
/// (so entries stay nonnegative). Rewards are uniform on `[0, 1]`.
pub fn make_random_rkhs_mdp(spec: KernelSpec, cfg: &GeneratorConfig) -> Result<Mdp> {
    spec.validate()?;
    if spec.offset <= 0.0 {
        return Err(Error::input(
            "kernel offset must be positive so the uniform baseline lies in the RKHS",
        ));
    }
    if cfg.horizon == 0 || cfg.num_states == 0 || cfg.num_actions == 0 {
        return Err(Error::input("horizon, state count, and action count must be positive"));
    }
    let ns = cfg.num_states;
    let uniform = 1.0 / ns as f64;
    if !(cfg.perturbation >= 0.0 && cfg.perturbation.is_finite()) {
        return Err(Error::input("perturbation must be finite and nonnegative"));
    }
    if cfg.perturbation > uniform {
        return Err(Error::input(format!(
            "perturbation {} exceeds 1/|S| = {uniform}; rows could go negative",
            cfg.perturbation
        )));
    }
    let states = lattice(ns, cfg.state_dim)?;
    let actions = lattice(cfg.num_actions, cfg.action_dim)?;
    let dz = cfg.state_dim + cfg.action_dim;
    let pairs: Vec<Point> = states
        .iter()
        .flat_map(|s| actions.iter().map(move |a| Point::join(s, a)))
        .collect();
    let sup = spec.base_sup(dz);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rewards = Vec::with_capacity(cfg.horizon);
    let mut transitions = Vec::with_capacity(cfg.horizon);
    let mut certificates = Vec::with_capacity(cfg.horizon);
    for _ in 0..cfg.horizon {
        rewards.push((0..pairs.len()).map(|_| rng.random::<f64>()).collect::<Vec<_>>());

        let centers: Vec<Point> = (0..cfg.centers)
            .map(|_| Point::new((0..dz).map(|_| rng.random::<f64>()).collect()))
            .collect::<Result<_>>()?;
        // weights[j][s'], zero-sum across s' for each center
        let mut weights: Vec<Vec<f64>> = (0..cfg.centers)
            .map(|_| {
                let raw: Vec<f64> = (0..ns).map(|_| rng.random_range(-1.0..1.0)).collect();
                let mean = raw.iter().sum::<f64>() / ns as f64;
                raw.into_iter().map(|x| x - mean).collect()
            })
            .collect();
        let column_mass = (0..ns)
            .map(|sp| weights.iter().map(|w| w[sp].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let factor = if column_mass > 0.0 {
            cfg.perturbation / (column_mass * sup)
        } else {
            0.0
        };
        for w in weights.iter_mut().flatten() {
            *w *= factor;
        }

        let table: Vec<Vec<f64>> = pairs
            .iter()
            .map(|z| {
                let k: Vec<f64> = centers
                    .iter()
                    .map(|c| spec.base_unchecked(z.coords(), c.coords()))
                    .collect();
                (0..ns)
                    .map(|sp| {
                        uniform + weights.iter().zip(&k).map(|(w, kj)| w[sp] * kj).sum::<f64>()
                    })
                    .collect()
            })
            .collect();
        transitions.push(table);

        let certs = (0..ns)
            .map(|sp| {
                let alpha: Vec<f64> = weights.iter().map(|w| w[sp]).collect();
                let bias = uniform - spec.offset * alpha.iter().sum::<f64>();
                RepresenterFunction::with_bias(spec, centers.clone(), alpha, bias)
            })
            .collect::<Result<Vec<_>>>()?;
        certificates.push(certs);
    }

    let max_norm = certificates
        .iter()
        .flatten()
        .map(RepresenterFunction::rkhs_norm)
        .fold(0.0, f64::max);
    let norm_bound = match cfg.norm_bound {
        Some(u) if max_norm > u => {
            return Err(Error::input(format!(
                "generated transitions have RKHS norm {max_norm}, above the requested bound {u}"
            )))
        }
        Some(u) => u,
        None => max_norm,
    };

    Mdp::from_tables(states, actions, cfg.horizon, rewards, transitions, spec)?
        .with_certificates(certificates, norm_bound, cfg.seed)
}

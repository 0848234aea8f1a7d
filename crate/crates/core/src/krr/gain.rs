use super::{GridPosterior, Posterior};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Point};

pub fn info_gain(post: &Posterior) -> f64 {
    post.info_gain()
}

/// Greedy surrogate for the maximum information gain over `n` points.
///
/// Repeatedly adds the candidate with the largest posterior variance
/// (lowest index on ties, repeats allowed); each pick maximizes the marginal
/// gain `1/2 ln(1 + var / rho)`, so by submodularity the result is within a
/// factor `1 - 1/e` of the best `n`-point multiset.
pub fn max_info_gain_greedy(
    spec: &KernelSpec,
    rho: f64,
    candidates: &[Point],
    n: usize,
) -> Result<f64> {
    Ok(*greedy_info_gain_curve(spec, rho, candidates, n)?
        .last()
        .expect("n >= 1"))
}

/// Greedy information gain after each of the first `n` picks.
pub fn greedy_info_gain_curve(
    spec: &KernelSpec,
    rho: f64,
    candidates: &[Point],
    n: usize,
) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::input("greedy information gain needs candidates"));
    }
    if n == 0 {
        return Err(Error::input("greedy information gain needs n >= 1"));
    }
    let mut grid = GridPosterior::new(Posterior::empty(*spec, rho)?, candidates.to_vec())?;
    let mut curve = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best = 0;
        let mut best_sd = f64::NEG_INFINITY;
        for i in 0..candidates.len() {
            let sd = grid.predict(i)?.1;
            if sd > best_sd {
                best_sd = sd;
                best = i;
            }
        }
        grid.push_observation(candidates[best].clone(), 0.0)?;
        curve.push(grid.posterior().info_gain());
    }
    Ok(curve)
}

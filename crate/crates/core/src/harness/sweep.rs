use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::output::{format_float, CsvRecords};
use super::{run_experiment, RegretLedger, RunConfig};
use crate::agents::SimRng;
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Point};
use crate::krr::{greedy_info_gain_curve, Posterior};
use crate::mdp::Mdp;

/// Mean and standard error across replications at one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub episode: usize,
    pub mean_cum_regret: f64,
    pub se_cum_regret: f64,
    pub mean_gap: f64,
    pub se_gap: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub seeds: Vec<u64>,
    pub ledgers: Vec<RegretLedger>,
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    /// Mean cumulative regret after `t` episodes.
    pub fn mean_regret_at(&self, t: usize) -> f64 {
        self.ledgers.iter().map(|l| l.regret_at(t)).sum::<f64>() / self.ledgers.len() as f64
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs one replication per seed in parallel on the same MDP and aggregates
/// per episode. Results do not depend on thread scheduling.
pub fn run_sweep(mdp: &Mdp, cfg: &RunConfig, seeds: &[u64]) -> Result<SweepSummary> {
    if seeds.is_empty() {
        return Err(Error::input("a sweep needs at least one seed"));
    }
    let ledgers = seeds
        .par_iter()
        .map(|&seed| run_experiment(mdp, &RunConfig { seed, ..cfg.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..cfg.episodes)
        .map(|i| {
            let cum: Vec<f64> = ledgers.iter().map(|l| l.records[i].cum_regret).collect();
            let gaps: Vec<f64> = ledgers.iter().map(|l| l.records[i].gap).collect();
            let (mean_cum_regret, se_cum_regret) = mean_se(&cum);
            let (mean_gap, se_gap) = mean_se(&gaps);
            SweepRow {
                episode: i + 1,
                mean_cum_regret,
                se_cum_regret,
                mean_gap,
                se_gap,
                replications: ledgers.len(),
            }
        })
        .collect();
    Ok(SweepSummary {
        seeds: seeds.to_vec(),
        ledgers,
        rows,
    })
}

impl CsvRecords for SweepSummary {
    fn header(&self) -> Vec<String> {
        ["episode", "mean_cum_regret", "se_cum_regret", "mean_gap", "se_gap", "replications"]
            .iter()
            .map(|c| c.to_string())
            .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.episode.to_string(),
                    format_float(r.mean_cum_regret),
                    format_float(r.se_cum_regret),
                    format_float(r.mean_gap),
                    format_float(r.se_gap),
                    r.replications.to_string(),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoGainRow {
    pub n: usize,
    /// Gain of the first `n` points of a seeded uniform sequence from the grid.
    pub realized: f64,
    /// Greedy surrogate for the supremum over `n` grid points.
    pub greedy_sup: f64,
}

/// Realized and greedy-sup information gain for `n = 1..=max_n` on `grid`.
pub fn info_gain_table(
    spec: &KernelSpec,
    rho: f64,
    grid: &[Point],
    max_n: usize,
    seed: u64,
) -> Result<Vec<InfoGainRow>> {
    let greedy = greedy_info_gain_curve(spec, rho, grid, max_n)?;
    let mut rng = SimRng::seed_from_u64(seed);
    let mut post = Posterior::empty(*spec, rho)?;
    greedy
        .into_iter()
        .enumerate()
        .map(|(i, greedy_sup)| {
            post.push_observation(grid[rng.random_range(0..grid.len())].clone(), 0.0)?;
            Ok(InfoGainRow {
                n: i + 1,
                realized: post.info_gain(),
                greedy_sup,
            })
        })
        .collect()
}

impl CsvRecords for Vec<InfoGainRow> {
    fn header(&self) -> Vec<String> {
        vec!["n".into(), "realized_gamma".into(), "greedy_sup_gamma".into()]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.iter()
            .map(|r| vec![r.n.to_string(), format_float(r.realized), format_float(r.greedy_sup)])
            .collect()
    }
}

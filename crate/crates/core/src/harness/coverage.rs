use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use super::output::{format_float, CsvRecords};
use crate::agents::SimRng;
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Point, RepresenterFunction};
use crate::krr::{fit_posterior, BetaKind, BetaSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub spec: KernelSpec,
    pub rho: f64,
    /// RKHS norm of every sampled target function.
    pub c_f: f64,
    /// Standard deviation of the Gaussian observation noise.
    pub sigma: f64,
    pub delta: f64,
    /// Design points per trial.
    pub n: usize,
    pub dim: usize,
    /// Kernel centers of each sampled function.
    pub centers: usize,
    pub test_points: usize,
    pub trials: usize,
    /// Multiplier applied to the fixed-design width.
    pub width_scale: f64,
    pub seed: u64,
}

impl Default for CoverageConfig {
    fn default() -> Self {
        CoverageConfig {
            spec: KernelSpec::new(crate::kernel::KernelFamily::SquaredExponential, 0.2, 1.0, 0.0)
                .expect("valid default kernel"),
            rho: 1.0,
            c_f: 1.0,
            sigma: 0.1,
            delta: 0.05,
            n: 30,
            dim: 1,
            centers: 10,
            test_points: 20,
            trials: 500,
            width_scale: 1.0,
            seed: 0,
        }
    }
}

impl CoverageConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::input("coverage rho must be positive"));
        }
        if !(self.c_f >= 0.0 && self.sigma >= 0.0 && self.width_scale >= 0.0) {
            return Err(Error::input("c_f, sigma, and width scale must be nonnegative"));
        }
        if self.n == 0 || self.dim == 0 || self.centers == 0 || self.test_points == 0 {
            return Err(Error::input("coverage sizes must be positive"));
        }
        self.schedule().validate()
    }

    fn schedule(&self) -> BetaSchedule {
        BetaSchedule::new(BetaKind::FixedDesign, self.c_f, self.sigma, self.delta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTrial {
    pub trial: usize,
    pub max_abs_err: f64,
    /// Largest `beta * stddev` over the test points.
    pub max_width: f64,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub config: CoverageConfig,
    pub beta: f64,
    pub trials: Vec<CoverageTrial>,
}

impl CoverageReport {
    pub fn hits(&self) -> usize {
        self.trials.iter().filter(|t| t.hit).count()
    }

    /// `hits / trials`; zero when no trials ran.
    pub fn coverage(&self) -> f64 {
        if self.trials.is_empty() {
            0.0
        } else {
            self.hits() as f64 / self.trials.len() as f64
        }
    }
}

fn uniform_points(rng: &mut SimRng, count: usize, dim: usize) -> Result<Vec<Point>> {
    (0..count)
        .map(|_| Point::new((0..dim).map(|_| rng.random::<f64>()).collect()))
        .collect()
}

/// Random RKHS function with norm exactly `c_f` (zero if the draw degenerates).
fn sample_function(rng: &mut SimRng, cfg: &CoverageConfig) -> Result<RepresenterFunction> {
    let centers = uniform_points(rng, cfg.centers, cfg.dim)?;
    let weights = (0..cfg.centers).map(|_| rng.sample(StandardNormal)).collect();
    let f = RepresenterFunction::new(cfg.spec, centers, weights)?;
    let norm = f.rkhs_norm();
    Ok(if norm > 0.0 { f.scaled(cfg.c_f / norm) } else { f })
}

/// Empirical coverage of the fixed-design confidence band.
///
/// Design and test points are drawn once, before any noise, and reused by
/// every trial. A trial is a hit when `|f - mean| <= beta * stddev` at every
/// test point.
pub fn coverage_experiment(cfg: &CoverageConfig) -> Result<CoverageReport> {
    cfg.validate()?;
    let mut design_rng = SimRng::seed_from_u64(cfg.seed);
    let design = uniform_points(&mut design_rng, cfg.n, cfg.dim)?;
    let tests = uniform_points(&mut design_rng, cfg.test_points, cfg.dim)?;
    let mut fn_rng = SimRng::seed_from_u64(cfg.seed);
    fn_rng.set_stream(1);
    let mut noise_rng = SimRng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(2);

    let gamma = fit_posterior(cfg.spec, cfg.rho, design.clone(), vec![0.0; cfg.n])?.info_gain();
    let beta = cfg.schedule().width(cfg.rho, cfg.n, gamma)? * cfg.width_scale;

    let mut trials = Vec::with_capacity(cfg.trials);
    for trial in 1..=cfg.trials {
        let f = sample_function(&mut fn_rng, cfg)?;
        let ys = design
            .iter()
            .map(|z| Ok(f.eval(z)? + cfg.sigma * noise_rng.sample::<f64, _>(StandardNormal)))
            .collect::<Result<Vec<f64>>>()?;
        let post = fit_posterior(cfg.spec, cfg.rho, design.clone(), ys)?;
        let mut max_abs_err: f64 = 0.0;
        let mut max_width: f64 = 0.0;
        let mut hit = true;
        for z in &tests {
            let (mean, sd) = post.predict(z)?;
            let err = (f.eval(z)? - mean).abs();
            let width = beta * sd;
            hit &= err <= width;
            max_abs_err = max_abs_err.max(err);
            max_width = max_width.max(width);
        }
        trials.push(CoverageTrial {
            trial,
            max_abs_err,
            max_width,
            hit,
        });
    }
    Ok(CoverageReport {
        config: cfg.clone(),
        beta,
        trials,
    })
}

impl CsvRecords for CoverageReport {
    fn header(&self) -> Vec<String> {
        ["trial", "max_abs_err", "max_width", "hit"]
            .iter()
            .map(|c| c.to_string())
            .collect()
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.trials
            .iter()
            .map(|t| {
                vec![
                    t.trial.to_string(),
                    format_float(t.max_abs_err),
                    format_float(t.max_width),
                    u8::from(t.hit).to_string(),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(trials: usize) -> CoverageConfig {
        CoverageConfig {
            trials,
            n: 12,
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_is_always_covered() {
        let cfg = CoverageConfig { sigma: 0.0, ..small(50) };
        let report = coverage_experiment(&cfg).unwrap();
        assert_eq!(report.coverage(), 1.0);
    }

    #[test]
    fn zero_width_misses() {
        let cfg = CoverageConfig { width_scale: 0.0, ..small(50) };
        assert!(coverage_experiment(&cfg).unwrap().coverage() <= 0.05);
    }

    #[test]
    fn wider_bands_never_lose_hits() {
        let narrow = coverage_experiment(&CoverageConfig { width_scale: 0.3, ..small(80) }).unwrap();
        let wide = coverage_experiment(&CoverageConfig { width_scale: 0.6, ..small(80) }).unwrap();
        for (a, b) in narrow.trials.iter().zip(&wide.trials) {
            assert_eq!(a.max_abs_err, b.max_abs_err);
            assert!(b.hit || !a.hit);
        }
    }

    #[test]
    fn bad_delta_rejected() {
        let cfg = CoverageConfig { delta: 1.5, ..small(1) };
        assert!(matches!(coverage_experiment(&cfg), Err(Error::Input(_))));
    }
}

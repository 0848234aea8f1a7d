//! Kernel ridge regression with posterior uncertainty.
//!
//! For data `(z_i, v_i)`, `i = 1..n`, and regularizer `rho > 0`:
//!
//! ```text
//! mean(z)     = k_n(z)^T (K_n + rho I)^{-1} v_n
//! variance(z) = k(z, z) - k_n(z)^T (K_n + rho I)^{-1} k_n(z)
//! ```
//!
//! Both are evaluated through a lower-triangular factor `L L^T = K_n + rho I`
//! that grows by one bordered row per observation.

mod beta;
mod chol;
mod gain;
mod grid;

pub use beta::{beta_width, BetaKind, BetaSchedule, CoverTerm};
pub use chol::LowerTriangular;
pub use gain::{greedy_info_gain_curve, info_gain, max_info_gain_greedy};
pub use grid::GridPosterior;

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, Point};

pub(crate) use chol::dot;

/// Variances below zero but above this are rounding noise and clamp to zero.
pub const VARIANCE_FLOOR: f64 = -1e-10;

/// Fitted kernel ridge regression state.
#[derive(Debug, Clone)]
pub struct Posterior {
    spec: KernelSpec,
    rho: f64,
    points: Vec<Point>,
    targets: Vec<f64>,
    chol: LowerTriangular,
    /// `L^{-1} v`
    whitened_targets: Vec<f64>,
}

impl Posterior {
    pub fn empty(spec: KernelSpec, rho: f64) -> Result<Self> {
        spec.validate()?;
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::input(format!("rho must be positive, got {rho}")));
        }
        Ok(Posterior {
            spec,
            rho,
            points: Vec::new(),
            targets: Vec::new(),
            chol: LowerTriangular::default(),
            whitened_targets: Vec::new(),
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn chol(&self) -> &LowerTriangular {
        &self.chol
    }

    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(Point::dim)
    }

    fn check_dim(&self, z: &Point) -> Result<()> {
        match self.dim() {
            Some(d) if d != z.dim() => Err(Error::DimensionMismatch {
                expected: d,
                found: z.dim(),
            }),
            _ => Ok(()),
        }
    }

    fn cross_kernel(&self, z: &[f64]) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| self.spec.eval_unchecked(z, p.coords()))
            .collect()
    }

    /// Adds one observation in place, extending the factor by one row.
    pub fn push_observation(&mut self, z: Point, v: f64) -> Result<()> {
        self.check_dim(&z)?;
        if !v.is_finite() {
            return Err(Error::input(format!("observation target {v} is not finite")));
        }
        let k = self.cross_kernel(z.coords());
        let cross = self.chol.forward_solve(&k);
        let d2 = self.spec.eval_unchecked(z.coords(), z.coords()) + self.rho - dot(&cross, &cross);
        if d2.is_nan() || d2 <= 0.0 {
            return Err(Error::Numerical(format!(
                "kernel matrix plus ridge is not positive definite (pivot {d2:e})"
            )));
        }
        let n = self.chol.len();
        self.chol.push_row(&cross, d2.sqrt());
        let u = self.chol.next_entry(n, v, &self.whitened_targets);
        self.whitened_targets.push(u);
        self.points.push(z);
        self.targets.push(v);
        Ok(())
    }

    /// Value-semantics append: returns the extended posterior, leaving `self` intact.
    pub fn append_observation(&self, z: Point, v: f64) -> Result<Posterior> {
        let mut next = self.clone();
        next.push_observation(z, v)?;
        Ok(next)
    }

    /// Replaces the targets while keeping the factor.
    pub fn set_targets(&mut self, targets: Vec<f64>) -> Result<()> {
        if targets.len() != self.points.len() {
            return Err(Error::input(format!(
                "{} targets for {} points",
                targets.len(),
                self.points.len()
            )));
        }
        self.whitened_targets = self.chol.forward_solve(&targets);
        self.targets = targets;
        Ok(())
    }

    /// `L^{-1} k_n(z)`
    pub fn whiten(&self, z: &Point) -> Result<Vec<f64>> {
        self.check_dim(z)?;
        Ok(self.chol.forward_solve(&self.cross_kernel(z.coords())))
    }

    pub fn predict(&self, z: &Point) -> Result<(f64, f64)> {
        let w = self.whiten(z)?;
        let mean = dot(&w, &self.whitened_targets);
        let var = clamp_variance(self.spec.eval_unchecked(z.coords(), z.coords()) - dot(&w, &w))?;
        Ok((mean, var.sqrt()))
    }

    pub fn predict_mean(&self, z: &Point) -> Result<f64> {
        let w = self.whiten(z)?;
        Ok(dot(&w, &self.whitened_targets))
    }

    pub fn predict_stddev(&self, z: &Point) -> Result<f64> {
        Ok(self.predict(z)?.1)
    }

    /// Realized information gain `1/2 log det(I + K_n / rho)`.
    pub fn info_gain(&self) -> f64 {
        let half_log_rho = 0.5 * self.rho.ln();
        (0..self.chol.len())
            .map(|i| self.chol.diag(i).ln() - half_log_rho)
            .fold(0.0, |acc, x| acc + x)
    }
}

pub(crate) fn clamp_variance(var: f64) -> Result<f64> {
    if var < VARIANCE_FLOOR {
        return Err(Error::Numerical(format!("negative posterior variance {var:e}")));
    }
    Ok(var.max(0.0))
}

pub fn fit_posterior(
    spec: KernelSpec,
    rho: f64,
    points: Vec<Point>,
    targets: Vec<f64>,
) -> Result<Posterior> {
    if points.len() != targets.len() {
        return Err(Error::input(format!(
            "{} points but {} targets",
            points.len(),
            targets.len()
        )));
    }
    let mut post = Posterior::empty(spec, rho)?;
    for (z, v) in points.into_iter().zip(targets) {
        post.push_observation(z, v)?;
    }
    Ok(post)
}

pub fn append_observation(post: &Posterior, z: Point, v: f64) -> Result<Posterior> {
    post.append_observation(z, v)
}

pub fn predict_mean(post: &Posterior, z: &Point) -> Result<f64> {
    post.predict_mean(z)
}

pub fn predict_stddev(post: &Posterior, z: &Point) -> Result<f64> {
    post.predict_stddev(z)
}

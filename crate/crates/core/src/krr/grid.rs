use super::{clamp_variance, dot, Posterior};
use crate::error::{Error, Result};
use crate::kernel::Point;

/// A posterior tracked on a fixed set of query points.
///
/// Each query keeps its whitened cross-covariance `L^{-1} k_n(q)`, extended by
/// one entry per observation, so a push costs `O(n)` per query instead of a
/// fresh triangular solve. Predictions are bit-identical to
/// [`Posterior::predict`] on the same query.
#[derive(Debug, Clone)]
pub struct GridPosterior {
    post: Posterior,
    queries: Vec<Point>,
    prior_var: Vec<f64>,
    whitened: Vec<Vec<f64>>,
}

impl GridPosterior {
    pub fn new(post: Posterior, queries: Vec<Point>) -> Result<Self> {
        if let Some(d) = post.dim() {
            if let Some(q) = queries.iter().find(|q| q.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: q.dim(),
                });
            }
        }
        let spec = *post.spec();
        let prior_var = queries
            .iter()
            .map(|q| spec.eval_unchecked(q.coords(), q.coords()))
            .collect();
        let whitened = queries
            .iter()
            .map(|q| post.whiten(q))
            .collect::<Result<Vec<_>>>()?;
        Ok(GridPosterior {
            post,
            queries,
            prior_var,
            whitened,
        })
    }

    pub fn posterior(&self) -> &Posterior {
        &self.post
    }

    pub fn queries(&self) -> &[Point] {
        &self.queries
    }

    pub fn push_observation(&mut self, z: Point, v: f64) -> Result<()> {
        if let Some(q) = self.queries.first() {
            if q.dim() != z.dim() {
                return Err(Error::DimensionMismatch {
                    expected: q.dim(),
                    found: z.dim(),
                });
            }
        }
        let spec = *self.post.spec();
        let row = self.post.len();
        let coords = z.coords().to_vec();
        self.post.push_observation(z, v)?;
        let chol = self.post.chol();
        for (q, w) in self.queries.iter().zip(self.whitened.iter_mut()) {
            let k = spec.eval_unchecked(q.coords(), &coords);
            let next = chol.next_entry(row, k, w);
            w.push(next);
        }
        Ok(())
    }

    pub fn set_targets(&mut self, targets: Vec<f64>) -> Result<()> {
        self.post.set_targets(targets)
    }

    pub fn predict(&self, query: usize) -> Result<(f64, f64)> {
        let w = &self.whitened[query];
        let mean = dot(w, &self.post.whitened_targets);
        let var = clamp_variance(self.prior_var[query] - dot(w, w))?;
        Ok((mean, var.sqrt()))
    }
}

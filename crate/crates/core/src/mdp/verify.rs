use super::{Mdp, STOCHASTIC_TOL};
use crate::error::{Error, Result};

/// Largest tolerated gap between a certificate and its table column.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCheck {
    pub step: usize,
    pub next_state: usize,
    pub norm: f64,
    /// `max_z |certificate(z) - P_h(s' | z)|` over the state-action grid.
    pub max_reconstruction_error: f64,
    /// `min_z P_h(s' | z)`
    pub min_entry: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub norm_bound: f64,
    pub checks: Vec<CertificateCheck>,
    /// `max_{h, z} |sum_s' P_h(s' | z) - 1|`
    pub max_row_sum_error: f64,
    pub min_entry: f64,
}

impl AssumptionReport {
    pub fn max_norm(&self) -> f64 {
        self.checks.iter().map(|c| c.norm).fold(0.0, f64::max)
    }

    pub fn max_reconstruction_error(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_reconstruction_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_norm() <= self.norm_bound
            && self.max_reconstruction_error() <= RECONSTRUCTION_TOL
            && self.max_row_sum_error <= STOCHASTIC_TOL
            && self.min_entry >= -STOCHASTIC_TOL
    }
}

/// Rechecks every stored certificate against the transition tables.
pub fn verify_assumption(mdp: &Mdp) -> Result<AssumptionReport> {
    let certs = mdp
        .certificates()
        .ok_or_else(|| Error::input("MDP carries no RKHS certificates"))?;
    let norm_bound = mdp
        .norm_bound()
        .ok_or_else(|| Error::input("MDP carries no norm bound"))?;
    let pairs = mdp.pair_points();
    let na = mdp.num_actions();

    let mut checks = Vec::new();
    let mut max_row_sum_error: f64 = 0.0;
    let mut min_entry = f64::INFINITY;
    for (h, step_certs) in certs.iter().enumerate() {
        for (z, _) in pairs.iter().enumerate() {
            let row = mdp.transition_row(h, z / na, z % na);
            max_row_sum_error = max_row_sum_error.max((row.iter().sum::<f64>() - 1.0).abs());
        }
        for (sp, cert) in step_certs.iter().enumerate() {
            let mut err: f64 = 0.0;
            let mut col_min = f64::INFINITY;
            for (z, point) in pairs.iter().enumerate() {
                let entry = mdp.transition_row(h, z / na, z % na)[sp];
                err = err.max((cert.eval(point)? - entry).abs());
                col_min = col_min.min(entry);
            }
            min_entry = min_entry.min(col_min);
            checks.push(CertificateCheck {
                step: h,
                next_state: sp,
                norm: cert.rkhs_norm(),
                max_reconstruction_error: err,
                min_entry: col_min,
            });
        }
    }
    Ok(AssumptionReport {
        norm_bound,
        checks,
        max_row_sum_error,
        min_entry,
    })
}

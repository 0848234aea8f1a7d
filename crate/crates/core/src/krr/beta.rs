use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaKind {
    /// `constant_value`, independent of the data.
    Constant,
    /// `c_f + sigma / sqrt(rho) * sqrt(2 ln(1/delta))`: design points fixed in advance.
    FixedDesign,
    /// `c_f + sigma / sqrt(rho) * sqrt(2 ln(1/delta) + gamma)`: adaptively chosen points.
    SelfNormalized,
    /// Self-normalized width with an additional covering-number term under the root.
    Covering,
}

impl BetaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BetaKind::Constant => "constant",
            BetaKind::FixedDesign => "fixed-design",
            BetaKind::SelfNormalized => "self-normalized",
            BetaKind::Covering => "covering",
        }
    }
}

impl fmt::Display for BetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BetaKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "constant" => Ok(BetaKind::Constant),
            "fixed-design" => Ok(BetaKind::FixedDesign),
            "self-normalized" => Ok(BetaKind::SelfNormalized),
            "covering" => Ok(BetaKind::Covering),
            other => Err(format!(
                "unknown beta kind `{other}` (expected constant, fixed-design, self-normalized, covering)"
            )),
        }
    }
}

/// Stand-in for the log covering number of the proxy value class at scale `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverTerm {
    Fixed(f64),
    /// `dim * ln(1 + n)`
    LogN { dim: f64 },
}

impl CoverTerm {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            CoverTerm::Fixed(v) => v,
            CoverTerm::LogN { dim } => dim * (1.0 + n as f64).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub kind: BetaKind,
    pub c_f: f64,
    pub sigma: f64,
    pub delta: f64,
    pub cover_term: CoverTerm,
    pub constant_value: f64,
}

impl BetaSchedule {
    pub fn constant(value: f64) -> Self {
        BetaSchedule {
            kind: BetaKind::Constant,
            c_f: 0.0,
            sigma: 0.0,
            delta: 0.05,
            cover_term: CoverTerm::Fixed(0.0),
            constant_value: value,
        }
    }

    pub fn new(kind: BetaKind, c_f: f64, sigma: f64, delta: f64) -> Self {
        BetaSchedule {
            kind,
            c_f,
            sigma,
            delta,
            cover_term: CoverTerm::Fixed(0.0),
            constant_value: 0.0,
        }
    }

    pub fn with_cover_term(mut self, cover_term: CoverTerm) -> Self {
        self.cover_term = cover_term;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::input(format!(
                "beta delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        let cover = match self.cover_term {
            CoverTerm::Fixed(v) => v,
            CoverTerm::LogN { dim } => dim,
        };
        for (name, v) in [
            ("c_f", self.c_f),
            ("sigma", self.sigma),
            ("cover_term", cover),
            ("constant_value", self.constant_value),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::input(format!(
                    "beta {name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Confidence width for `n` observations with realized information gain `gamma`.
    pub fn width(&self, rho: f64, n: usize, gamma: f64) -> Result<f64> {
        self.validate()?;
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::input(format!("rho must be positive, got {rho}")));
        }
        if gamma < -1e-12 || !gamma.is_finite() {
            return Err(Error::input(format!("information gain must be nonnegative, got {gamma}")));
        }
        let gamma = gamma.max(0.0);
        let log_term = 2.0 * (1.0 / self.delta).ln();
        let under_root = match self.kind {
            BetaKind::Constant => return Ok(self.constant_value),
            BetaKind::FixedDesign => log_term,
            BetaKind::SelfNormalized => log_term + gamma,
            BetaKind::Covering => log_term + gamma + self.cover_term.value(n),
        };
        Ok(self.c_f + self.sigma / rho.sqrt() * under_root.sqrt())
    }
}

pub fn beta_width(sched: &BetaSchedule, rho: f64, n: usize, gamma: f64) -> Result<f64> {
    sched.width(rho, n, gamma)
}

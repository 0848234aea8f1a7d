//! Positive definite kernels on embedded state-action points, Gram matrices,
//! and RKHS elements written as weighted kernel sections.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An embedded state, action, or state-action pair with coordinates in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(c) = coords
            .iter()
            .find(|c| !c.is_finite() || **c < 0.0 || **c > 1.0)
        {
            return Err(Error::input(format!(
                "point coordinate {c} is not a finite value in [0, 1]"
            )));
        }
        Ok(Point(coords))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Concatenates a state embedding with an action embedding.
    pub fn join(state: &Point, action: &Point) -> Point {
        let mut coords = Vec::with_capacity(state.dim() + action.dim());
        coords.extend_from_slice(&state.0);
        coords.extend_from_slice(&action.0);
        Point(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    #[serde(rename = "linear")]
    Linear,
    #[serde(rename = "se")]
    SquaredExponential,
    #[serde(rename = "matern-1/2")]
    Matern12,
    #[serde(rename = "matern-3/2")]
    Matern32,
    #[serde(rename = "matern-5/2")]
    Matern52,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 5] = [
        KernelFamily::Linear,
        KernelFamily::SquaredExponential,
        KernelFamily::Matern12,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
    ];

    pub fn is_stationary(self) -> bool {
        !matches!(self, KernelFamily::Linear)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Linear => "linear",
            KernelFamily::SquaredExponential => "se",
            KernelFamily::Matern12 => "matern-1/2",
            KernelFamily::Matern32 => "matern-3/2",
            KernelFamily::Matern52 => "matern-5/2",
        }
    }

    /// Unit-variance profile of a stationary family at scaled distance `r`.
    fn profile(self, r: f64) -> f64 {
        match self {
            KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
            KernelFamily::Matern12 => (-r).exp(),
            KernelFamily::Matern32 => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
            KernelFamily::Linear => unreachable!("linear kernel has no radial profile"),
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelFamily {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "linear" => Ok(KernelFamily::Linear),
            "se" | "squared-exponential" => Ok(KernelFamily::SquaredExponential),
            "matern-1/2" => Ok(KernelFamily::Matern12),
            "matern-3/2" => Ok(KernelFamily::Matern32),
            "matern-5/2" => Ok(KernelFamily::Matern52),
            other => Err(format!(
                "unknown kernel family `{other}` (expected linear, se, matern-1/2, matern-3/2, matern-5/2)"
            )),
        }
    }
}

/// A kernel family together with its hyperparameters.
///
/// Stationary families evaluate to `offset + scale * profile(|z - z'| / lengthscale)`;
/// the linear family evaluates to `offset + scale * <z, z'> / lengthscale^2`.
/// A positive `offset` puts the constant functions in the RKHS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
    pub scale: f64,
    pub offset: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            family: KernelFamily::SquaredExponential,
            lengthscale: 1.0,
            scale: 1.0,
            offset: 0.0,
        }
    }
}

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64, scale: f64, offset: f64) -> Result<Self> {
        let spec = KernelSpec {
            family,
            lengthscale,
            scale,
            offset,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lengthscale.is_finite() && self.lengthscale > 0.0) {
            return Err(Error::input(format!(
                "kernel lengthscale must be positive, got {}",
                self.lengthscale
            )));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::input(format!(
                "kernel scale must be positive, got {}",
                self.scale
            )));
        }
        if !(self.offset.is_finite() && self.offset >= 0.0) {
            return Err(Error::input(format!(
                "kernel offset must be nonnegative, got {}",
                self.offset
            )));
        }
        Ok(())
    }

    pub fn eval(&self, a: &Point, b: &Point) -> Result<f64> {
        check_dims(a.dim(), b.dim())?;
        Ok(self.eval_unchecked(a.coords(), b.coords()))
    }

    /// Kernel without the constant offset.
    pub fn eval_base(&self, a: &Point, b: &Point) -> Result<f64> {
        check_dims(a.dim(), b.dim())?;
        Ok(self.base_unchecked(a.coords(), b.coords()))
    }

    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        self.offset + self.base_unchecked(a, b)
    }

    pub(crate) fn base_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.family.is_stationary() {
            let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            self.scale * self.family.profile(sq.sqrt() / self.lengthscale)
        } else {
            let ip: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            self.scale * ip / (self.lengthscale * self.lengthscale)
        }
    }

    /// Supremum of the offset-free kernel over `[0, 1]^dim`.
    pub fn base_sup(&self, dim: usize) -> f64 {
        if self.family.is_stationary() {
            self.scale
        } else {
            self.scale * dim as f64 / (self.lengthscale * self.lengthscale)
        }
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub fn eval_kernel(spec: &KernelSpec, z: &Point, z2: &Point) -> Result<f64> {
    spec.eval(z, z2)
}

pub fn gram_matrix(spec: &KernelSpec, points: &[Point]) -> Result<DMatrix<f64>> {
    let first = points
        .first()
        .ok_or_else(|| Error::input("gram matrix of an empty point set"))?;
    for p in points {
        check_dims(first.dim(), p.dim())?;
    }
    let n = points.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = spec.eval_unchecked(points[i].coords(), points[j].coords());
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    Ok(gram)
}

/// An RKHS element `f(z) = bias + sum_i weights[i] * k(z, centers[i])`.
///
/// The `bias` term is carried by the constant component of the kernel
/// (`spec.offset`) and is only representable when the offset is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresenterFunction {
    pub centers: Vec<Point>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub bias: f64,
    pub spec: KernelSpec,
}

impl RepresenterFunction {
    pub fn new(spec: KernelSpec, centers: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        Self::with_bias(spec, centers, weights, 0.0)
    }

    pub fn with_bias(
        spec: KernelSpec,
        centers: Vec<Point>,
        weights: Vec<f64>,
        bias: f64,
    ) -> Result<Self> {
        if centers.len() != weights.len() {
            return Err(Error::input(format!(
                "{} centers but {} weights",
                centers.len(),
                weights.len()
            )));
        }
        if let Some(first) = centers.first() {
            for c in &centers {
                check_dims(first.dim(), c.dim())?;
            }
        }
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(Error::input("representer weights must be finite"));
        }
        Ok(RepresenterFunction {
            centers,
            weights,
            bias,
            spec,
        })
    }

    pub fn zero(spec: KernelSpec) -> Self {
        RepresenterFunction {
            centers: Vec::new(),
            weights: Vec::new(),
            bias: 0.0,
            spec,
        }
    }

    pub fn eval(&self, z: &Point) -> Result<f64> {
        if let Some(c) = self.centers.first() {
            check_dims(c.dim(), z.dim())?;
        }
        Ok(self.eval_unchecked(z.coords()))
    }

    pub(crate) fn eval_unchecked(&self, z: &[f64]) -> f64 {
        self.bias
            + self
                .centers
                .iter()
                .zip(&self.weights)
                .map(|(c, w)| w * self.spec.eval_unchecked(z, c.coords()))
                .sum::<f64>()
    }

    /// RKHS norm. Equals `sqrt(a^T K a)` when `bias == 0`; otherwise the norm
    /// of the split into a constant part and an offset-free part, which bounds
    /// the true norm from above. Infinite when a bias is present but the
    /// kernel has no constant component.
    pub fn rkhs_norm(&self) -> f64 {
        let n = self.centers.len();
        let quad = |k: &dyn Fn(&[f64], &[f64]) -> f64| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                let ci = self.centers[i].coords();
                acc += self.weights[i] * self.weights[i] * k(ci, ci);
                for j in 0..i {
                    acc += 2.0 * self.weights[i] * self.weights[j] * k(ci, self.centers[j].coords());
                }
            }
            acc
        };
        if self.bias == 0.0 {
            return quad(&|a, b| self.spec.eval_unchecked(a, b)).max(0.0).sqrt();
        }
        if self.spec.offset == 0.0 {
            return f64::INFINITY;
        }
        let constant = self.bias + self.spec.offset * self.weights.iter().sum::<f64>();
        let varying = quad(&|a, b| self.spec.base_unchecked(a, b)).max(0.0);
        (constant * constant / self.spec.offset + varying).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        RepresenterFunction {
            centers: self.centers.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
            bias: self.bias * factor,
            spec: self.spec,
        }
    }

    /// Pointwise sum of two elements of the same RKHS.
    pub fn add(&self, other: &RepresenterFunction) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::input("cannot add functions from different kernels"));
        }
        let mut centers = self.centers.clone();
        centers.extend(other.centers.iter().cloned());
        let mut weights = self.weights.clone();
        weights.extend_from_slice(&other.weights);
        Self::with_bias(self.spec, centers, weights, self.bias + other.bias)
    }
}

pub fn rkhs_eval(f: &RepresenterFunction, z: &Point) -> Result<f64> {
    f.eval(z)
}

pub fn rkhs_norm(f: &RepresenterFunction) -> f64 {
    f.rkhs_norm()
}

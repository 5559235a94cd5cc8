//! Vector similarity and distance metrics.
//!
//! Every reduction accumulates in `f64` in ascending component order, so a
//! given pair of inputs always produces the same bits.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceMethod, CovarianceModel};
use crate::data::{EmbeddingSet, Vector};
use crate::error::{Error, Result};

/// Minkowski order used when none is configured.
pub const DEFAULT_MINKOWSKI_P: f64 = 3.0;

/// Whether larger or smaller scores mean "closer".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Predict the label with the largest score.
    Similarity,
    /// Predict the label with the smallest score.
    Distance,
}

/// A metric as configured, before any data-dependent state is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricKind {
    Cosine,
    Euclidean,
    Manhattan,
    Minkowski { p: f64 },
    BrayCurtis,
    Mahalanobis { method: CovarianceMethod },
}

impl MetricKind {
    pub fn direction(&self) -> Direction {
        match self {
            MetricKind::Cosine => Direction::Similarity,
            _ => Direction::Distance,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Cosine => "cosine",
            MetricKind::Euclidean => "euclidean",
            MetricKind::Manhattan => "manhattan",
            MetricKind::Minkowski { .. } => "minkowski",
            MetricKind::BrayCurtis => "bray_curtis",
            MetricKind::Mahalanobis { .. } => "mahalanobis",
        }
    }

    /// Parses a metric name; `p` and `method` fill in the parameters of the
    /// kinds that take one.
    pub fn from_name(name: &str, p: f64, method: CovarianceMethod) -> Result<Self> {
        let kind = match name.trim().to_lowercase().replace('-', "_").as_str() {
            "cosine" => MetricKind::Cosine,
            "euclidean" => MetricKind::Euclidean,
            "manhattan" | "cityblock" => MetricKind::Manhattan,
            "minkowski" => MetricKind::Minkowski { p },
            "bray_curtis" | "braycurtis" => MetricKind::BrayCurtis,
            "mahalanobis" => MetricKind::Mahalanobis { method },
            other => return Err(Error::Param(format!("unknown metric '{other}'"))),
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MetricKind::Minkowski { p } => check_p(p),
            MetricKind::Mahalanobis { method } => method.validate(),
            _ => Ok(()),
        }
    }

    /// Fits the metric. Only Mahalanobis uses `sample`, which must hold at
    /// least two vectors.
    pub fn fit<'a, I>(&self, sample: I) -> Result<MetricSpec>
    where
        I: IntoIterator<Item = &'a Vector>,
    {
        self.validate()?;
        Ok(match *self {
            MetricKind::Cosine => MetricSpec::Cosine,
            MetricKind::Euclidean => MetricSpec::Euclidean,
            MetricKind::Manhattan => MetricSpec::Manhattan,
            MetricKind::Minkowski { p } => MetricSpec::Minkowski { p },
            MetricKind::BrayCurtis => MetricSpec::BrayCurtis,
            MetricKind::Mahalanobis { method } => {
                let sample: Vec<&Vector> = sample.into_iter().collect();
                MetricSpec::Mahalanobis(Arc::new(CovarianceModel::estimate(&sample, method)?))
            }
        })
    }

    pub fn is_fitted(&self) -> bool {
        matches!(self, MetricKind::Mahalanobis { .. })
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Minkowski { p } => write!(f, "minkowski(p={p})"),
            other => f.write_str(other.name()),
        }
    }
}

/// A ready-to-evaluate metric.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Cosine,
    Euclidean,
    Manhattan,
    Minkowski { p: f64 },
    BrayCurtis,
    /// Quadratic form of the difference vector under the model's inverse
    /// covariance.
    Mahalanobis(Arc<CovarianceModel>),
}

impl MetricSpec {
    pub fn direction(&self) -> Direction {
        match self {
            MetricSpec::Cosine => Direction::Similarity,
            _ => Direction::Distance,
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        match self {
            MetricSpec::Cosine => cosine(a, b),
            MetricSpec::Euclidean => euclidean(a, b),
            MetricSpec::Manhattan => manhattan(a, b),
            MetricSpec::Minkowski { p } => minkowski(a, b, *p),
            MetricSpec::BrayCurtis => bray_curtis(a, b),
            MetricSpec::Mahalanobis(model) => model.distance_between(a, b),
        }
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dim {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::Param(format!("minkowski order p must be finite and > 0, got {p}")));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Scales `v` to unit Euclidean length.
pub fn l2_normalize(v: &Vector) -> Result<Vector> {
    let n = v.norm();
    if n == 0.0 {
        return Err(Error::ZeroNorm { id: None });
    }
    Vector::new(v.as_slice().iter().map(|x| x / n).collect())
}

/// Cosine of the angle between `a` and `b`, clamped to [-1, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm { id: None });
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| {
            let d = x - y;
            acc + d * d
        })
        .sqrt())
}

pub fn manhattan(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + (x - y).abs()))
}

/// `(Σ|aᵢ − bᵢ|^p)^(1/p)`.
pub fn minkowski(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    check_dims(a, b)?;
    check_p(p)?;
    // Exact special cases keep the p=1 and p=2 reductions bit-compatible.
    if p == 1.0 {
        return manhattan(a, b);
    }
    if p == 2.0 {
        return euclidean(a, b);
    }
    let sum = a
        .iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc + (x - y).abs().powf(p));
    Ok(sum.powf(1.0 / p))
}

/// `Σ|aᵢ − bᵢ| / Σ|aᵢ + bᵢ|`.
///
/// The denominator sums absolute values of the element sums, which differs
/// from `|Σ(aᵢ + bᵢ)|` when components can be negative.
pub fn bray_curtis(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a, b)?;
    let (num, den) = a.iter().zip(b).fold((0.0, 0.0), |(n, d), (x, y)| {
        (n + (x - y).abs(), d + (x + y).abs())
    });
    if den == 0.0 {
        return Err(Error::Degenerate(
            "bray-curtis denominator is zero (a = -b)".into(),
        ));
    }
    Ok(num / den)
}

/// Distance from `x` to the distribution described by `model`.
pub fn mahalanobis(x: &[f64], model: &CovarianceModel) -> Result<f64> {
    model.distance_between(x, model.mean().as_slice())
}

/// Matrix of `metric(aᵢ, bⱼ)` for every record pair, rows following `set_a`.
pub fn pairwise(set_a: &EmbeddingSet, set_b: &EmbeddingSet, metric: &MetricSpec) -> Result<Vec<Vec<f64>>> {
    if set_a.dim() != set_b.dim() {
        return Err(Error::Dim {
            expected: set_a.dim(),
            actual: set_b.dim(),
        });
    }
    set_a
        .records()
        .iter()
        .map(|ra| {
            set_b
                .records()
                .iter()
                .map(|rb| {
                    metric
                        .eval(ra.vector.as_slice(), rb.vector.as_slice())
                        .map_err(|e| e.with_item(&ra.id))
                })
                .collect()
        })
        .collect()
}

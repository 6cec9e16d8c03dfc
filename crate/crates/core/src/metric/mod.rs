//! Dimension reduction, metric learning and set-to-set distances.
//!
//! Descriptors are projected with [`PcaModel`], compared with a
//! [`Distance`] (plain Euclidean or a learned [`MahalanobisModel`]) and
//! whole descriptor sets are compared with [`set_distance_min`] or
//! [`set_distance_avg`].

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub mod kissme;
pub mod model_file;
pub mod pca;

pub use kissme::{fit_kissme, MahalanobisModel, PairSet};
pub use model_file::{decode_model, encode_model, read_model, write_model, ReidModel};
pub use pca::{fit_pca, PcaModel, RankReduced, DEFAULT_PCA_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("descriptor set is empty")]
    EmptySet,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("need at least {needed} samples, got {available}")]
    InsufficientSamples { needed: usize, available: usize },
    #[error("pair set has no {0} pairs")]
    InsufficientPairs(&'static str),
    #[error("{0} covariance is singular after regularization")]
    SingularCovariance(&'static str),
    #[error("malformed model file: {0}")]
    FormatError(String),
    #[error("model checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("I/O error: {0}")]
    Io(String),
}

impl MetricError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::EmptySet => "EmptySet",
            Self::DimMismatch { .. } => "DimMismatch",
            Self::InsufficientSamples { .. } => "InsufficientSamples",
            Self::InsufficientPairs(_) => "InsufficientPairs",
            Self::SingularCovariance(_) => "SingularCovariance",
            Self::FormatError(_) => "FormatError",
            Self::ChecksumMismatch { .. } => "ChecksumMismatch",
            Self::Io(_) => "IoError",
        }
    }
}

/// Pairwise distance between two vectors.
pub trait Distance: Sync {
    /// Required input dimension, if the distance fixes one.
    fn dim(&self) -> Option<usize> {
        None
    }

    /// Distance between `a` and `b`, which have already been checked to share
    /// a valid dimension.
    fn eval(&self, a: &[f64], b: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Euclidean;

impl Distance for Euclidean {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        euclidean(a, b)
    }
}

impl Distance for MahalanobisModel {
    fn dim(&self) -> Option<usize> {
        Some(MahalanobisModel::dim(self))
    }

    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.quadratic(a, b).max(0.0).sqrt()
    }
}

/// Wraps a closure as a [`Distance`].
pub struct FnDistance<F>(pub F);

impl<F: Fn(&[f64], &[f64]) -> f64 + Sync> Distance for FnDistance<F> {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        (self.0)(a, b)
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `sqrt(max(0, (a-b)ᵀ M (a-b)))`.
pub fn maha_dist(model: &MahalanobisModel, a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    check_dim(model.dim(), a.len())?;
    check_dim(model.dim(), b.len())?;
    Ok(Distance::eval(model, a, b))
}

fn check_dim(expected: usize, actual: usize) -> Result<(), MetricError> {
    if expected == actual {
        Ok(())
    } else {
        Err(MetricError::DimMismatch { expected, actual })
    }
}

fn check_sets<T: AsRef<[f64]>>(x: &[T], y: &[T], dist: &(impl Distance + ?Sized)) -> Result<(), MetricError> {
    let first = x.first().ok_or(MetricError::EmptySet)?;
    if y.is_empty() {
        return Err(MetricError::EmptySet);
    }
    let dim = dist.dim().unwrap_or(first.as_ref().len());
    for v in x.iter().chain(y) {
        check_dim(dim, v.as_ref().len())?;
    }
    Ok(())
}

/// Smallest distance over all cross-set pairs.
pub fn set_distance_min<T: AsRef<[f64]>>(
    x: &[T],
    y: &[T],
    dist: &(impl Distance + ?Sized),
) -> Result<f64, MetricError> {
    check_sets(x, y, dist)?;
    let mut best = f64::INFINITY;
    for a in x {
        for b in y {
            best = best.min(dist.eval(a.as_ref(), b.as_ref()));
        }
    }
    Ok(best)
}

/// Symmetric average of nearest-neighbour distances:
/// `Σ_i min_j d(x_i, y_j) / 2|x| + Σ_j min_i d(x_i, y_j) / 2|y|`.
pub fn set_distance_avg<T: AsRef<[f64]>>(
    x: &[T],
    y: &[T],
    dist: &(impl Distance + ?Sized),
) -> Result<f64, MetricError> {
    check_sets(x, y, dist)?;
    let mut row_min = vec![f64::INFINITY; x.len()];
    let mut col_min = vec![f64::INFINITY; y.len()];
    for (i, a) in x.iter().enumerate() {
        for (j, b) in y.iter().enumerate() {
            let d = dist.eval(a.as_ref(), b.as_ref());
            row_min[i] = row_min[i].min(d);
            col_min[j] = col_min[j].min(d);
        }
    }
    let sx: f64 = row_min.iter().sum();
    let sy: f64 = col_min.iter().sum();
    Ok(sx / (2.0 * x.len() as f64) + sy / (2.0 * y.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SetMeasure {
    Min,
    #[default]
    Avg,
}

impl SetMeasure {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Min => "min",
            Self::Avg => "avg",
        }
    }

    pub fn apply<T: AsRef<[f64]>>(
        self,
        x: &[T],
        y: &[T],
        dist: &(impl Distance + ?Sized),
    ) -> Result<f64, MetricError> {
        match self {
            Self::Min => set_distance_min(x, y, dist),
            Self::Avg => set_distance_avg(x, y, dist),
        }
    }
}

impl fmt::Display for SetMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SetMeasure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "min" => Ok(Self::Min),
            "avg" | "average" => Ok(Self::Avg),
            other => Err(format!("unknown set measure {other:?}")),
        }
    }
}

/// Which distance is applied in the projected space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricKind {
    Euclidean,
    #[default]
    Kissme,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::Kissme => "kissme",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "kissme" => Ok(Self::Kissme),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

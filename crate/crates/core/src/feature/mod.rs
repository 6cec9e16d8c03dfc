//! Per-frame features and their pooling into one descriptor per cycle.
//!
//! Frames are turned into vectors by an [`Extractor`] (the built-in
//! [`Handcrafted`] descriptor) or looked up in an imported FVEC file
//! ([`ExternalFeatures`]). The vectors of one sampled frame group are then
//! pooled element-wise into a [`CycleDescriptor`]; max pooling keeps the
//! strongest response of each feature across the group.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::cycle::{self, CycleError, Regulation, SamplingStrategy};
use crate::frame::{Frame, FrameSequence};
use crate::rng::RngHandle;

pub mod fvec;
pub mod handcrafted;

pub use fvec::{load_external_features, ExternalFeatures, FeatureKey};
pub use handcrafted::{extract_handcrafted, Handcrafted};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("cannot pool an empty set of features")]
    EmptyPool,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("malformed feature file: {0}")]
    FormatError(String),
    #[error("no feature for person {person}, camera {camera}, frame {frame}")]
    MissingFeature {
        person: String,
        camera: String,
        frame: u64,
    },
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error("I/O error: {0}")]
    Io(String),
}

impl FeatureError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::EmptyPool => "EmptyPool",
            Self::DimMismatch { .. } => "DimMismatch",
            Self::FormatError(_) => "FormatError",
            Self::MissingFeature { .. } => "MissingFeature",
            Self::Cycle(e) => e.kind(),
            Self::Io(_) => "IoError",
        }
    }
}

/// Feature vector of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f32>);

impl FeatureVector {
    pub fn new(values: Vec<f32>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn values(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_values(self) -> Vec<f32> {
        self.0
    }
}

impl From<Vec<f32>> for FeatureVector {
    fn from(v: Vec<f32>) -> Self {
        Self::new(v)
    }
}

/// Deterministic, stateless frame-to-vector map.
pub trait Extractor: Sync {
    fn dim(&self) -> usize;
    fn extract(&self, frame: &Frame) -> FeatureVector;
}

/// Where per-frame features come from during sequence description.
pub trait FeatureSource: Sync {
    fn dim(&self) -> usize;
    fn frame_features(&self, seq: &FrameSequence, frame_index: usize) -> Result<FeatureVector, FeatureError>;
}

impl<E: Extractor> FeatureSource for E {
    fn dim(&self) -> usize {
        Extractor::dim(self)
    }

    fn frame_features(&self, seq: &FrameSequence, frame_index: usize) -> Result<FeatureVector, FeatureError> {
        Ok(self.extract(&seq.frames()[frame_index]))
    }
}

impl FeatureSource for ExternalFeatures {
    fn dim(&self) -> usize {
        ExternalFeatures::dim(self)
    }

    fn frame_features(&self, seq: &FrameSequence, frame_index: usize) -> Result<FeatureVector, FeatureError> {
        let key = FeatureKey::new(seq.person_id(), seq.camera_id(), frame_index as u64);
        self.get(&key).cloned().ok_or(FeatureError::MissingFeature {
            person: key.person,
            camera: key.camera,
            frame: key.index,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolingMode {
    #[default]
    Max,
    Average,
    FirstFrame,
}

impl PoolingMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Max => "max",
            Self::Average => "avg",
            Self::FirstFrame => "first",
        }
    }
}

impl fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoolingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Self::Max),
            "avg" | "average" => Ok(Self::Average),
            "first" | "first-frame" => Ok(Self::FirstFrame),
            other => Err(format!("unknown pooling mode {other:?}")),
        }
    }
}

/// Identifies the walking cycle (or frame group) a descriptor came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DescriptorSource {
    pub person: String,
    pub camera: String,
    pub ordinal: usize,
}

/// Pooled descriptor of one frame group.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleDescriptor {
    pub values: Vec<f32>,
    pub source: DescriptorSource,
}

impl CycleDescriptor {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Element-wise pooling of same-length vectors.
pub fn pool(features: &[FeatureVector], mode: PoolingMode) -> Result<Vec<f32>, FeatureError> {
    let first = features.first().ok_or(FeatureError::EmptyPool)?;
    let dim = first.dim();
    if let Some(bad) = features.iter().find(|f| f.dim() != dim) {
        return Err(FeatureError::DimMismatch {
            expected: dim,
            actual: bad.dim(),
        });
    }
    Ok(match mode {
        PoolingMode::Max => {
            let mut out = first.values().to_vec();
            for f in &features[1..] {
                for (o, &v) in out.iter_mut().zip(f.values()) {
                    *o = o.max(v);
                }
            }
            out
        }
        PoolingMode::Average => {
            let mut sum = vec![0.0f64; dim];
            for f in features {
                for (s, &v) in sum.iter_mut().zip(f.values()) {
                    *s += f64::from(v);
                }
            }
            let n = features.len() as f64;
            sum.into_iter().map(|s| (s / n) as f32).collect()
        }
        PoolingMode::FirstFrame => first.values().to_vec(),
    })
}

/// Parameters of sequence description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DescribeOptions {
    pub strategy: SamplingStrategy,
    pub pooling: PoolingMode,
    pub regulation: Regulation,
    /// Dominant frequencies kept when regulating the motion profile.
    pub keep: usize,
}

impl Default for DescribeOptions {
    fn default() -> Self {
        Self {
            strategy: SamplingStrategy::default(),
            pooling: PoolingMode::default(),
            regulation: Regulation::default(),
            keep: DEFAULT_KEEP,
        }
    }
}

/// Dominant frequencies kept by default when regulating the motion profile.
pub const DEFAULT_KEEP: usize = 1;

/// Frame-index groups chosen for `seq` under `opts.strategy`.
pub fn sample_sequence(
    seq: &FrameSequence,
    opts: &DescribeOptions,
    rng: &mut RngHandle,
) -> Result<Vec<Vec<usize>>, CycleError> {
    let cycles = if opts.strategy.uses_cycles() {
        cycle::analyze_sequence(seq, opts.regulation, opts.keep)?.1
    } else {
        Vec::new()
    };
    cycle::sample_frames(seq.len(), &cycles, opts.strategy, rng)
}

/// Pools each frame group of `seq` into a descriptor, in group order.
pub fn describe_groups(
    seq: &FrameSequence,
    groups: &[Vec<usize>],
    source: &dyn FeatureSource,
    pooling: PoolingMode,
) -> Result<Vec<CycleDescriptor>, FeatureError> {
    groups
        .iter()
        .enumerate()
        .map(|(ordinal, group)| {
            let feats = group
                .iter()
                .map(|&i| source.frame_features(seq, i))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CycleDescriptor {
                values: pool(&feats, pooling)?,
                source: DescriptorSource {
                    person: seq.person_id().to_string(),
                    camera: seq.camera_id().to_string(),
                    ordinal,
                },
            })
        })
        .collect()
}

/// Motion profile, cycle detection, sampling, extraction and pooling.
pub fn describe_sequence(
    seq: &FrameSequence,
    opts: &DescribeOptions,
    source: &dyn FeatureSource,
    rng: &mut RngHandle,
) -> Result<Vec<CycleDescriptor>, FeatureError> {
    let groups = sample_sequence(seq, opts, rng)?;
    describe_groups(seq, &groups, source, opts.pooling)
}

/// Like [`describe_sequence`], but when no usable walking cycle is found it
/// samples with `RandomHalves(K)` instead. The flag reports the fallback.
pub fn describe_sequence_or_fallback(
    seq: &FrameSequence,
    opts: &DescribeOptions,
    source: &dyn FeatureSource,
    rng: &mut RngHandle,
) -> Result<(Vec<CycleDescriptor>, bool), FeatureError> {
    match sample_sequence(seq, opts, rng) {
        Ok(groups) => Ok((describe_groups(seq, &groups, source, opts.pooling)?, false)),
        Err(CycleError::NoCycleFound | CycleError::InsufficientFrames { .. } | CycleError::SignalTooShort(_))
            if opts.strategy.uses_cycles() =>
        {
            let k = opts.strategy.frames().unwrap_or(4);
            let groups = cycle::sample_frames(seq.len(), &[], SamplingStrategy::RandomHalves(k), rng)?;
            Ok((describe_groups(seq, &groups, source, opts.pooling)?, true))
        }
        Err(e) => Err(e.into()),
    }
}

//! Video-based person re-identification from walking-cycle frame sampling.
//!
//! A sequence's lower-body motion profile is smoothed to a sinusoid whose
//! extrema delimit walking cycles. A few frames per cycle are described and
//! pooled into one descriptor, descriptors are projected with PCA, and
//! identities are matched across cameras with a learned Mahalanobis metric
//! and a set-to-set distance.

pub mod cycle;
pub mod dataset;
pub mod eval;
pub mod feature;
pub mod frame;
pub mod metric;
pub mod rng;
pub mod synth;

pub use cycle::{CycleError, FepSignal, Regulation, SamplingStrategy, WalkingCycle};
pub use dataset::{load_dataset, Dataset, DatasetError};
pub use eval::{run_evaluation, CmcCurve, EvalConfig, EvalError, SplitPlan, TrialReport};
pub use feature::{
    CycleDescriptor, DescribeOptions, Extractor, FeatureError, FeatureSource, FeatureVector, Handcrafted,
    PoolingMode,
};
pub use frame::{Frame, FrameError, FrameSequence};
pub use metric::{MahalanobisModel, MetricError, MetricKind, PcaModel, ReidModel, SetMeasure};
pub use rng::RngHandle;
pub use synth::{generate_synthetic, SynthSpec};

use std::fmt;

use reid_core::cycle::CycleError;
use reid_core::synth::SynthError;
use reid_core::{DatasetError, EvalError, FeatureError, MetricError};

/// Exit status 2 for usage errors, 1 for pipeline errors.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Pipeline { kind: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Pipeline { .. } => 1,
        }
    }

    pub fn io(context: impl fmt::Display, e: std::io::Error) -> Self {
        Self::Pipeline {
            kind: "IoError",
            message: format!("{context}: {e}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Pipeline { kind, message } => write!(f, "{kind}: {message}"),
        }
    }
}

macro_rules! pipeline_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::Pipeline { kind: e.kind(), message: e.to_string() }
            }
        })*
    };
}

pipeline_from!(CycleError, DatasetError, EvalError, FeatureError, MetricError);

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(m) => Self::Usage(m),
        }
    }
}

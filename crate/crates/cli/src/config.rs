//! Flat `key = value` configuration files and their merge with flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use reid_core::cycle::{Regulation, SamplingStrategy};
use reid_core::{EvalConfig, MetricKind, PoolingMode, SetMeasure};

use crate::error::CliError;

/// Keys accepted in a config file; each mirrors the flag of the same name.
pub const KEYS: [&str; 13] = [
    "data",
    "out",
    "seed",
    "trials",
    "frames",
    "strategy",
    "pooling",
    "pca-dim",
    "metric",
    "measure",
    "features-file",
    "regulation",
    "keep",
];

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// later lines override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key = value", i + 1)));
        };
        let key = key.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key {key:?}", i + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub features_file: Option<PathBuf>,
    /// Whether a seed came from a flag or the config file.
    pub seed_given: bool,
    pub eval: EvalConfig,
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("{key}: {value:?} is not a valid number")))
}

impl Settings {
    /// Builds settings from merged `key -> value` pairs.
    pub fn from_values(values: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let get = |k: &str| values.get(k).map(String::as_str);
        let usage = |k: &str, e: String| CliError::Usage(format!("{k}: {e}"));
        let mut eval = EvalConfig::default();

        let k = match get("frames") {
            Some(v) => parse_num::<usize>("frames", v)?,
            None => eval.strategy.frames().unwrap_or(4),
        };
        let strategy = get("strategy").unwrap_or(eval.strategy.name());
        eval.strategy = SamplingStrategy::parse(strategy, k).map_err(|e| usage("strategy", e.to_string()))?;
        if let Some(v) = get("pooling") {
            eval.pooling = v.parse::<PoolingMode>().map_err(|e| usage("pooling", e))?;
        }
        if let Some(v) = get("pca-dim") {
            eval.pca_dim = parse_num("pca-dim", v)?;
            if eval.pca_dim == 0 {
                return Err(usage("pca-dim", "must be at least 1".into()));
            }
        }
        if let Some(v) = get("metric") {
            eval.metric = v.parse::<MetricKind>().map_err(|e| usage("metric", e))?;
        }
        if let Some(v) = get("measure") {
            eval.measure = v.parse::<SetMeasure>().map_err(|e| usage("measure", e))?;
        }
        if let Some(v) = get("regulation") {
            eval.regulation = v.parse::<Regulation>().map_err(|e| usage("regulation", e.to_string()))?;
        }
        if let Some(v) = get("keep") {
            eval.keep = parse_num("keep", v)?;
        }
        if let Some(v) = get("trials") {
            eval.trials = parse_num("trials", v)?;
        }
        if let Some(v) = get("seed") {
            eval.seed = parse_num("seed", v)?;
        }
        let features_file = get("features-file").map(PathBuf::from);
        if let Some(f) = &features_file {
            eval.extractor = f.display().to_string();
        }
        Ok(Self {
            data: get("data").map(PathBuf::from),
            out: get("out").map(PathBuf::from),
            features_file,
            seed_given: get("seed").is_some(),
            eval,
        })
    }

    pub fn require_data(&self) -> Result<&PathBuf, CliError> {
        self.data
            .as_ref()
            .ok_or_else(|| CliError::Usage("--data is required".into()))
    }

    pub fn require_out(&self) -> Result<&PathBuf, CliError> {
        self.out
            .as_ref()
            .ok_or_else(|| CliError::Usage("--out is required".into()))
    }
}

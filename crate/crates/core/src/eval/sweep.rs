//! One-axis configuration sweeps.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{run_evaluation, EvalConfig, EvalError};
use crate::cycle::SamplingStrategy;
use crate::dataset::Dataset;
use crate::feature::{FeatureSource, PoolingMode};
use crate::metric::{MetricKind, SetMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Frames,
    Pooling,
    PcaDim,
    Measure,
    Strategy,
    Metric,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Frames => "frames",
            Self::Pooling => "pooling",
            Self::PcaDim => "pca-dim",
            Self::Measure => "measure",
            Self::Strategy => "strategy",
            Self::Metric => "metric",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(&self, base: &EvalConfig, value: &str) -> Result<EvalConfig, EvalError> {
        let bad = |e: String| EvalError::InvalidSweep(format!("{}={value}: {e}", self.name()));
        let mut cfg = base.clone();
        match self {
            Self::Frames => {
                let k: usize = value.parse().map_err(|_| bad("not a count".into()))?;
                if k == 0 {
                    return Err(bad("must be at least 1".into()));
                }
                cfg.strategy = cfg.strategy.with_frames(k);
            }
            Self::Pooling => cfg.pooling = PoolingMode::from_str(value).map_err(bad)?,
            Self::PcaDim => {
                cfg.pca_dim = value.parse().map_err(|_| bad("not a count".into()))?;
                if cfg.pca_dim == 0 {
                    return Err(bad("must be at least 1".into()));
                }
            }
            Self::Measure => cfg.measure = SetMeasure::from_str(value).map_err(bad)?,
            Self::Strategy => {
                let k = base.strategy.frames().unwrap_or(4);
                cfg.strategy = SamplingStrategy::parse(value, k).map_err(|e| bad(e.to_string()))?;
            }
            Self::Metric => cfg.metric = MetricKind::from_str(value).map_err(bad)?,
        }
        Ok(cfg)
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "frames" => Ok(Self::Frames),
            "pooling" => Ok(Self::Pooling),
            "pca-dim" => Ok(Self::PcaDim),
            "measure" => Ok(Self::Measure),
            "strategy" => Ok(Self::Strategy),
            "metric" => Ok(Self::Metric),
            other => Err(format!("unknown sweep axis {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub rank1: f64,
    pub rank5: f64,
    pub rank20: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl SweepGrid {
    /// `<axis>,R-1,R-5` header and one row per value.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},R-1,R-5\n", self.axis.name());
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.value, r.rank1, r.rank5);
        }
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<16} {:>7} {:>7}\n", self.axis.name(), "R-1", "R-5");
        for r in &self.rows {
            let _ = writeln!(s, "{:<16} {:>7.4} {:>7.4}", r.value, r.rank1, r.rank5);
        }
        s
    }
}

/// Evaluates `base` once per value of `axis`, on the same splits.
pub fn run_sweep(
    dataset: &Dataset,
    base: &EvalConfig,
    axis: SweepAxis,
    values: &[String],
    source: &dyn FeatureSource,
) -> Result<SweepGrid, EvalError> {
    if values.is_empty() {
        return Err(EvalError::InvalidSweep("no values given".into()));
    }
    let configs = values
        .iter()
        .map(|v| axis.apply(base, v))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::with_capacity(values.len());
    for (value, cfg) in values.iter().zip(&configs) {
        let report = run_evaluation(dataset, cfg, source)?;
        rows.push(SweepRow {
            value: value.clone(),
            rank1: report.average.rate_at(1),
            rank5: report.average.rate_at(5),
            rank20: report.average.rate_at(20),
        });
    }
    Ok(SweepGrid { axis, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_application() {
        let base = EvalConfig::default();
        assert_eq!(
            SweepAxis::Frames.apply(&base, "6").unwrap().strategy,
            SamplingStrategy::Representative(6)
        );
        assert_eq!(SweepAxis::Pooling.apply(&base, "avg").unwrap().pooling, PoolingMode::Average);
        assert_eq!(SweepAxis::PcaDim.apply(&base, "50").unwrap().pca_dim, 50);
        assert_eq!(SweepAxis::Measure.apply(&base, "min").unwrap().measure, SetMeasure::Min);
        assert_eq!(
            SweepAxis::Strategy.apply(&base, "random-whole").unwrap().strategy,
            SamplingStrategy::RandomWhole(4)
        );
        assert!(matches!(SweepAxis::Frames.apply(&base, "0"), Err(EvalError::InvalidSweep(_))));
        assert!(matches!(SweepAxis::Pooling.apply(&base, "median"), Err(EvalError::InvalidSweep(_))));
    }

    #[test]
    fn grid_csv_shape() {
        let grid = SweepGrid {
            axis: SweepAxis::Frames,
            rows: ["1", "2"]
                .iter()
                .map(|v| SweepRow {
                    value: v.to_string(),
                    rank1: 0.5,
                    rank5: 1.0,
                    rank20: 1.0,
                })
                .collect(),
        };
        assert_eq!(grid.to_csv(), "frames,R-1,R-5\n1,0.5,1\n2,0.5,1\n");
        assert_eq!(grid.to_table().lines().count(), 3);
    }

    #[test]
    fn axis_names_round_trip() {
        for a in [
            SweepAxis::Frames,
            SweepAxis::Pooling,
            SweepAxis::PcaDim,
            SweepAxis::Measure,
            SweepAxis::Strategy,
            SweepAxis::Metric,
        ] {
            assert_eq!(a.name().parse::<SweepAxis>(), Ok(a));
        }
    }
}

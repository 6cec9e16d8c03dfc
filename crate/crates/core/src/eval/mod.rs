//! Train/test protocol, ranking and CMC evaluation.
//!
//! Each trial splits the cross-camera identities in half, learns the
//! projection and metric from the training half only, then ranks every
//! first-camera identity of the test half against the second-camera gallery.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::cycle::{Regulation, SamplingStrategy};
use crate::dataset::Dataset;
use crate::feature::{self, DescribeOptions, FeatureError, FeatureSource, PoolingMode, DEFAULT_KEEP};
use crate::metric::{
    fit_kissme, fit_pca, Distance, MahalanobisModel, MetricError, MetricKind, PairSet, PcaModel, ReidModel,
    SetMeasure, DEFAULT_PCA_DIM,
};
use crate::rng::{derive_seed, label_tag, RngHandle};

pub mod report;
pub mod sweep;

pub use report::{cmc_csv, cmc_svg, report_text, write_report_bundle};
pub use sweep::{run_sweep, SweepAxis, SweepGrid, SweepRow};

/// Dissimilar training pairs drawn per similar pair.
pub const DISSIMILAR_RATIO: usize = 10;

/// Ranks reported in summaries.
pub const SUMMARY_RANKS: [usize; 3] = [1, 5, 20];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least 2 identities seen by two cameras, found {0}")]
    TooFewIdentities(usize),
    #[error("query identity {0} has no gallery entry")]
    MissingGalleryEntry(String),
    #[error("dataset needs a query and a gallery camera, found {0}")]
    MissingCamera(usize),
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("I/O error: {0}")]
    Io(String),
}

impl EvalError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::TooFewIdentities(_) => "TooFewIdentities",
            Self::MissingGalleryEntry(_) => "MissingGalleryEntry",
            Self::MissingCamera(_) => "MissingCamera",
            Self::NoTrials => "NoTrials",
            Self::InvalidSweep(_) => "InvalidSweep",
            Self::Feature(e) => e.kind(),
            Self::Metric(e) => e.kind(),
            Self::Io(_) => "IoError",
        }
    }
}

/// One random halving of the identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub trial_seed: u64,
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
}

/// `trials` independent splits; trial `t` shuffles with a sub-seed of
/// `(seed, t)` and puts the first `⌈n/2⌉` identities in training.
pub fn make_splits(ids: &BTreeSet<String>, trials: usize, seed: u64) -> Result<Vec<SplitPlan>, EvalError> {
    if ids.len() < 2 {
        return Err(EvalError::TooFewIdentities(ids.len()));
    }
    let n_train = ids.len().div_ceil(2);
    Ok((0..trials)
        .map(|t| {
            let trial_seed = derive_seed(seed, &[label_tag("trial"), t as u64]);
            let mut order: Vec<&String> = ids.iter().collect();
            RngHandle::new(trial_seed).shuffle(&mut order);
            SplitPlan {
                trial_seed,
                train_ids: order[..n_train].iter().map(|s| (*s).clone()).collect(),
                test_ids: order[n_train..].iter().map(|s| (*s).clone()).collect(),
            }
        })
        .collect())
}

/// All descriptors of one identity under one camera.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySet {
    pub id: String,
    pub descriptors: Vec<Vec<f64>>,
}

/// Gallery identities of one query, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedQuery {
    pub query: String,
    pub ranking: Vec<(String, f64)>,
}

impl RankedQuery {
    pub fn ids(&self) -> Vec<String> {
        self.ranking.iter().map(|(id, _)| id.clone()).collect()
    }

    /// 1-based rank of the query's own identity.
    pub fn true_rank(&self) -> Option<usize> {
        self.ranking.iter().position(|(id, _)| *id == self.query).map(|p| p + 1)
    }
}

/// Sorts the gallery for each query by ascending set distance, ties by
/// ascending identity label.
pub fn rank_queries(
    queries: &[IdentitySet],
    gallery: &[IdentitySet],
    measure: SetMeasure,
    dist: &(impl Distance + ?Sized),
) -> Result<Vec<RankedQuery>, EvalError> {
    for q in queries {
        if !gallery.iter().any(|g| g.id == q.id) {
            return Err(EvalError::MissingGalleryEntry(q.id.clone()));
        }
    }
    queries
        .par_iter()
        .map(|q| {
            let mut ranking = gallery
                .iter()
                .map(|g| Ok((g.id.clone(), measure.apply(&q.descriptors, &g.descriptors, dist)?)))
                .collect::<Result<Vec<_>, MetricError>>()?;
            ranking.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
            Ok(RankedQuery {
                query: q.id.clone(),
                ranking,
            })
        })
        .collect()
}

/// Cumulative matching rates; `rates[r - 1]` is the rank-`r` rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcCurve {
    pub rates: Vec<f64>,
}

impl CmcCurve {
    pub fn gallery_size(&self) -> usize {
        self.rates.len()
    }

    /// Rate at 1-based rank `r`; ranks past the gallery size read the last
    /// value.
    pub fn rate_at(&self, r: usize) -> f64 {
        match self.rates.len() {
            0 => 0.0,
            g => self.rates[r.clamp(1, g) - 1],
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.rates.windows(2).all(|w| w[0] <= w[1])
    }
}

/// `rates[r]` = fraction of queries whose true identity is within the first
/// `r` entries of its ranked list.
pub fn compute_cmc<S: AsRef<str>>(ranked: &[Vec<S>], truth: &[S]) -> CmcCurve {
    let g = ranked.iter().map(Vec::len).max().unwrap_or(0);
    let mut hits = vec![0usize; g];
    for (list, t) in ranked.iter().zip(truth) {
        if let Some(pos) = list.iter().position(|id| id.as_ref() == t.as_ref()) {
            hits[pos] += 1;
        }
    }
    let n = ranked.len().max(1) as f64;
    let mut acc = 0;
    let rates = hits
        .into_iter()
        .map(|h| {
            acc += h;
            acc as f64 / n
        })
        .collect();
    CmcCurve { rates }
}

/// Per-rank arithmetic mean; shorter curves are extended with their last value.
pub fn average_cmc(curves: &[CmcCurve]) -> CmcCurve {
    let g = curves.iter().map(CmcCurve::gallery_size).max().unwrap_or(0);
    let n = curves.len().max(1) as f64;
    CmcCurve {
        rates: (1..=g)
            .map(|r| curves.iter().map(|c| c.rate_at(r)).sum::<f64>() / n)
            .collect(),
    }
}

/// Resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub strategy: SamplingStrategy,
    pub pooling: PoolingMode,
    pub regulation: Regulation,
    pub keep: usize,
    /// `handcrafted` or the path of an imported feature file.
    pub extractor: String,
    pub pca_dim: usize,
    pub metric: MetricKind,
    pub measure: SetMeasure,
    pub trials: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            strategy: SamplingStrategy::default(),
            pooling: PoolingMode::default(),
            regulation: Regulation::default(),
            keep: DEFAULT_KEEP,
            extractor: "handcrafted".into(),
            pca_dim: DEFAULT_PCA_DIM,
            metric: MetricKind::default(),
            measure: SetMeasure::default(),
            trials: 10,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn describe_options(&self) -> DescribeOptions {
        DescribeOptions {
            strategy: self.strategy,
            pooling: self.pooling,
            regulation: self.regulation,
            keep: self.keep,
        }
    }

    /// `key = value` lines, readable back as a config file.
    pub fn lock_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "strategy = {}", self.strategy.name());
        if let Some(k) = self.strategy.frames() {
            let _ = writeln!(s, "frames = {k}");
        }
        let _ = writeln!(s, "pooling = {}", self.pooling);
        let _ = writeln!(s, "regulation = {}", self.regulation.name());
        let _ = writeln!(s, "keep = {}", self.keep);
        let _ = writeln!(s, "extractor = {}", self.extractor);
        let _ = writeln!(s, "pca-dim = {}", self.pca_dim);
        let _ = writeln!(s, "metric = {}", self.metric);
        let _ = writeln!(s, "measure = {}", self.measure);
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        s
    }

    /// Hex digest of [`lock_text`](Self::lock_text).
    pub fn fingerprint(&self) -> String {
        format!("{:016x}", label_tag(&self.lock_text()))
    }
}

/// A sequence that was sampled with the random-halves fallback.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fallback {
    pub trial: usize,
    pub camera: String,
    pub person: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub index: usize,
    pub plan: SplitPlan,
    pub cmc: CmcCurve,
    pub fallbacks: Vec<Fallback>,
    /// PCA dimension actually used.
    pub pca_dim: usize,
    /// Identities whose descriptors entered PCA and metric fitting.
    pub fit_identities: BTreeSet<String>,
    pub similar_pairs: usize,
    pub dissimilar_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub config: EvalConfig,
    pub query_camera: String,
    pub gallery_camera: String,
    pub trials: Vec<TrialResult>,
    pub average: CmcCurve,
}

impl TrialReport {
    /// `(rank, averaged rate)` for each summary rank.
    pub fn summary(&self) -> Vec<(usize, f64)> {
        SUMMARY_RANKS.iter().map(|&r| (r, self.average.rate_at(r))).collect()
    }

    pub fn rank1(&self) -> f64 {
        self.average.rate_at(1)
    }

    pub fn fallbacks(&self) -> impl Iterator<Item = &Fallback> {
        self.trials.iter().flat_map(|t| &t.fallbacks)
    }
}

struct Described {
    person: String,
    camera: String,
    values: Vec<f64>,
}

/// Describes every sequence of `ids`, in dataset order.
fn describe_identities(
    dataset: &Dataset,
    ids: &BTreeSet<String>,
    opts: &DescribeOptions,
    source: &dyn FeatureSource,
    trial: usize,
    trial_seed: u64,
) -> Result<(Vec<Described>, Vec<Fallback>), EvalError> {
    let per_seq = dataset
        .sequences()
        .par_iter()
        .enumerate()
        .filter(|(_, s)| ids.contains(s.person_id()))
        .map(|(i, seq)| {
            let mut rng = RngHandle::new(derive_seed(
                trial_seed,
                &[label_tag(seq.camera_id()), label_tag(seq.person_id()), i as u64],
            ));
            feature::describe_sequence_or_fallback(seq, opts, source, &mut rng).map(|(d, fb)| (seq, d, fb))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = Vec::new();
    let mut fallbacks = Vec::new();
    for (seq, descs, fell_back) in per_seq {
        if fell_back {
            fallbacks.push(Fallback {
                trial,
                camera: seq.camera_id().to_string(),
                person: seq.person_id().to_string(),
            });
        }
        out.extend(descs.into_iter().map(|d| Described {
            person: d.source.person,
            camera: d.source.camera,
            values: d.values.iter().map(|&v| f64::from(v)).collect(),
        }));
    }
    Ok((out, fallbacks))
}

/// Similar pairs: every cross-camera same-identity pair. Dissimilar pairs: a
/// seeded sample of cross-camera different-identity pairs,
/// `DISSIMILAR_RATIO` times as many (or all of them if fewer exist).
pub fn training_pairs<'a>(
    samples: &'a [(String, String, Vec<f64>)],
    rng: &mut RngHandle,
) -> PairSet<'a> {
    let mut similar = Vec::new();
    let mut candidates = Vec::new();
    for (i, a) in samples.iter().enumerate() {
        for (j, b) in samples.iter().enumerate().skip(i + 1) {
            if a.1 == b.1 {
                continue;
            }
            if a.0 == b.0 {
                similar.push((a.2.as_slice(), b.2.as_slice()));
            } else {
                candidates.push((i, j));
            }
        }
    }
    let want = (similar.len() * DISSIMILAR_RATIO).min(candidates.len());
    let dissimilar = rng
        .sample_distinct(candidates.len(), want)
        .into_iter()
        .map(|k| {
            let (i, j) = candidates[k];
            (samples[i].2.as_slice(), samples[j].2.as_slice())
        })
        .collect();
    PairSet { similar, dissimilar }
}

/// Fits the projection and metric on `(person, camera, descriptor)` samples.
pub fn fit_model(
    samples: &[(String, String, Vec<f64>)],
    pca_dim: usize,
    metric: MetricKind,
    rng: &mut RngHandle,
) -> Result<(ReidModel, usize, usize), EvalError> {
    let raw: Vec<&[f64]> = samples.iter().map(|s| s.2.as_slice()).collect();
    let (pca, _) = fit_pca(&raw, pca_dim)?;
    let projected: Vec<(String, String, Vec<f64>)> = samples
        .iter()
        .map(|(p, c, v)| Ok((p.clone(), c.clone(), pca.project(v)?)))
        .collect::<Result<_, MetricError>>()?;
    let pairs = training_pairs(&projected, rng);
    let counts = (pairs.similar.len(), pairs.dissimilar.len());
    let m = match metric {
        MetricKind::Kissme => fit_kissme(&pairs)?,
        MetricKind::Euclidean => MahalanobisModel::identity(pca.output_dim()),
    };
    Ok((ReidModel::new(pca, m)?, counts.0, counts.1))
}

fn identity_sets(
    described: &[Described],
    camera: &str,
    pca: &PcaModel,
) -> Result<Vec<IdentitySet>, EvalError> {
    let mut by_id: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
    for d in described.iter().filter(|d| d.camera == camera) {
        by_id.entry(&d.person).or_default().push(pca.project(&d.values)?);
    }
    Ok(by_id
        .into_iter()
        .map(|(id, descriptors)| IdentitySet {
            id: id.to_string(),
            descriptors,
        })
        .collect())
}

fn run_trial(
    dataset: &Dataset,
    config: &EvalConfig,
    source: &dyn FeatureSource,
    index: usize,
    plan: &SplitPlan,
    cameras: (&str, &str),
) -> Result<TrialResult, EvalError> {
    let opts = config.describe_options();
    let (train, mut fallbacks) = describe_identities(dataset, &plan.train_ids, &opts, source, index, plan.trial_seed)?;
    let samples: Vec<(String, String, Vec<f64>)> = train
        .into_iter()
        .map(|d| (d.person, d.camera, d.values))
        .collect();
    let fit_identities = samples.iter().map(|s| s.0.clone()).collect();
    let mut pair_rng = RngHandle::new(derive_seed(plan.trial_seed, &[label_tag("pairs")]));
    let (model, similar_pairs, dissimilar_pairs) = fit_model(&samples, config.pca_dim, config.metric, &mut pair_rng)?;

    let (test, test_fallbacks) = describe_identities(dataset, &plan.test_ids, &opts, source, index, plan.trial_seed)?;
    fallbacks.extend(test_fallbacks);
    let queries = identity_sets(&test, cameras.0, &model.pca)?;
    let gallery = identity_sets(&test, cameras.1, &model.pca)?;
    let ranked = rank_queries(&queries, &gallery, config.measure, &model.metric)?;
    let lists: Vec<Vec<String>> = ranked.iter().map(RankedQuery::ids).collect();
    let truth: Vec<String> = ranked.iter().map(|r| r.query.clone()).collect();

    Ok(TrialResult {
        index,
        plan: plan.clone(),
        cmc: compute_cmc(&lists, &truth),
        fallbacks,
        pca_dim: model.pca.output_dim(),
        fit_identities,
        similar_pairs,
        dissimilar_pairs,
    })
}

/// A model fitted on every cross-camera identity of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: ReidModel,
    pub identities: usize,
    pub descriptors: usize,
    pub similar_pairs: usize,
    pub dissimilar_pairs: usize,
    pub fallbacks: Vec<Fallback>,
}

/// Describes every cross-camera identity under `config` and fits the
/// projection and metric on all of them.
pub fn train_model(
    dataset: &Dataset,
    config: &EvalConfig,
    source: &dyn FeatureSource,
) -> Result<TrainedModel, EvalError> {
    let ids = dataset.cross_camera_identities();
    if ids.len() < 2 {
        return Err(EvalError::TooFewIdentities(ids.len()));
    }
    let (described, fallbacks) =
        describe_identities(dataset, &ids, &config.describe_options(), source, 0, config.seed)?;
    let samples: Vec<(String, String, Vec<f64>)> = described
        .into_iter()
        .map(|d| (d.person, d.camera, d.values))
        .collect();
    let mut pair_rng = RngHandle::new(derive_seed(config.seed, &[label_tag("pairs")]));
    let (model, similar_pairs, dissimilar_pairs) = fit_model(&samples, config.pca_dim, config.metric, &mut pair_rng)?;
    Ok(TrainedModel {
        model,
        identities: ids.len(),
        descriptors: samples.len(),
        similar_pairs,
        dissimilar_pairs,
        fallbacks,
    })
}

/// Runs `config.trials` independent trials and averages their CMC curves.
///
/// The first camera (in sorted order) supplies the queries and the second the
/// gallery. Only identities seen by both take part.
pub fn run_evaluation(
    dataset: &Dataset,
    config: &EvalConfig,
    source: &dyn FeatureSource,
) -> Result<TrialReport, EvalError> {
    if config.trials == 0 {
        return Err(EvalError::NoTrials);
    }
    let cams = dataset.cameras();
    if cams.len() < 2 {
        return Err(EvalError::MissingCamera(cams.len()));
    }
    let ids = dataset.cross_camera_identities();
    let plans = make_splits(&ids, config.trials, config.seed)?;
    let trials = plans
        .par_iter()
        .enumerate()
        .map(|(i, plan)| run_trial(dataset, config, source, i, plan, (&cams[0], &cams[1])))
        .collect::<Result<Vec<_>, _>>()?;
    let curves: Vec<CmcCurve> = trials.iter().map(|t| t.cmc.clone()).collect();
    Ok(TrialReport {
        config: config.clone(),
        query_camera: cams[0].clone(),
        gallery_camera: cams[1].clone(),
        average: average_cmc(&curves),
        trials,
    })
}

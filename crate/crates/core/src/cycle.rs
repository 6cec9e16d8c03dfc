//! Walking-cycle detection and representative frame sampling.
//!
//! The motion signal is a Flow Energy Profile (FEP): for each pair of
//! consecutive frames, the summed absolute luma difference over the lower
//! half of the frame, where leg motion dominates. The raw profile is noisy,
//! so it is regulated in the frequency domain by keeping only its dominant
//! frequencies. Local maxima of the regulated profile correspond to the legs
//! crossing and minima to the legs farthest apart; each adjacent max/min
//! pair delimits one walking cycle (a single step).
//!
//! Index convention: `raw[t]` measures the transition from frame `t` to
//! frame `t + 1` and is attributed to frame `t`.

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::frame::FrameSequence;
use crate::rng::RngHandle;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CycleError {
    #[error("signal of length {0} is too short to regulate (need at least 4)")]
    SignalTooShort(usize),
    #[error("no max/min pair found in the regulated signal")]
    NoCycleFound,
    #[error("need {needed} frames but only {available} are available")]
    InsufficientFrames { needed: usize, available: usize },
    #[error("invalid sampling parameter: {0}")]
    InvalidStrategy(String),
}

impl CycleError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::SignalTooShort(_) => "SignalTooShort",
            Self::NoCycleFound => "NoCycleFound",
            Self::InsufficientFrames { .. } => "InsufficientFrames",
            Self::InvalidStrategy(_) => "InvalidStrategy",
        }
    }
}

/// Per-transition motion energy, raw and (optionally) regulated.
#[derive(Debug, Clone, PartialEq)]
pub struct FepSignal {
    pub raw: Vec<f64>,
    pub regulated: Option<Vec<f64>>,
}

/// Raw FEP of a sequence; length is `frames - 1`.
pub fn compute_fep(seq: &FrameSequence) -> FepSignal {
    let w = seq.width();
    let h = seq.height();
    let start = (h / 2) * w;
    let lumas: Vec<Vec<f64>> = seq
        .frames()
        .iter()
        .map(|f| {
            f.pixels()[start * 3..]
                .chunks_exact(3)
                .map(|p| crate::frame::luma(p[0], p[1], p[2]))
                .collect()
        })
        .collect();
    let raw = lumas
        .windows(2)
        .map(|pair| {
            pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(a, b)| (b - a).abs())
                .sum()
        })
        .collect();
    FepSignal {
        raw,
        regulated: None,
    }
}

/// Keeps the `keep` strongest positive-frequency components of `raw` (and
/// their conjugates) after removing the mean, then transforms back and
/// restores the mean.
///
/// Ties in magnitude go to the lower frequency. A constant signal is
/// returned unchanged.
pub fn regulate_fep(raw: &[f64], keep: usize) -> Result<Vec<f64>, CycleError> {
    let n = raw.len();
    if n < 4 {
        return Err(CycleError::SignalTooShort(n));
    }
    if keep == 0 {
        return Err(CycleError::InvalidStrategy("keep must be at least 1".into()));
    }
    if raw.iter().all(|&v| v == raw[0]) {
        return Ok(raw.to_vec());
    }
    let mean = raw.iter().sum::<f64>() / n as f64;
    let mut spectrum: Vec<Complex<f64>> = raw.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut spectrum);

    // Positive frequencies 1..=n/2; bin n/2 (even n) is its own conjugate.
    let mut bins: Vec<usize> = (1..=n / 2).collect();
    bins.sort_by(|&a, &b| spectrum[b].norm().total_cmp(&spectrum[a].norm()).then(a.cmp(&b)));
    let mut kept = vec![false; n];
    for &k in bins.iter().take(keep) {
        kept[k] = true;
        kept[n - k] = true;
    }
    for (k, c) in spectrum.iter_mut().enumerate() {
        if !kept[k] {
            *c = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut spectrum);
    let scale = 1.0 / n as f64;
    Ok(spectrum.iter().map(|c| c.re * scale + mean).collect())
}

/// Zero-padding factor used to locate spectral peaks between DFT bins.
const PEAK_SEARCH_PADDING: usize = 16;

/// Frequency-refined regulation.
///
/// The dominant frequencies are located on a zero-padded DFT of the
/// mean-removed profile (restricted to at least one full cycle over the
/// window), each is refined to the frequency whose sinusoid explains the
/// most energy, and the output is the least-squares fit of a constant plus
/// one sinusoid per kept frequency.
///
/// On short profiles the native bins of [`regulate_fep`] sit up to half a bin
/// away from the walking frequency, which shifts the regulated extrema by
/// several frames toward the ends of the sequence; the refined frequencies do
/// not have that bias. The constant term keeps the signal mean. If `keep`
/// covers every positive bin the result equals [`regulate_fep`].
pub fn regulate_fep_refined(raw: &[f64], keep: usize) -> Result<Vec<f64>, CycleError> {
    let n = raw.len();
    if n < 4 {
        return Err(CycleError::SignalTooShort(n));
    }
    if keep == 0 {
        return Err(CycleError::InvalidStrategy("keep must be at least 1".into()));
    }
    if keep >= n / 2 || raw.iter().all(|&v| v == raw[0]) {
        return regulate_fep(raw, keep);
    }
    let mean = raw.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();

    let padded_len = n * PEAK_SEARCH_PADDING;
    let mut spectrum: Vec<Complex<f64>> = centered
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(padded_len)
        .collect();
    FftPlanner::new()
        .plan_fft_forward(padded_len)
        .process(&mut spectrum);
    let mag: Vec<f64> = spectrum.iter().map(|c| c.norm()).collect();
    let mut peaks: Vec<usize> = (PEAK_SEARCH_PADDING..padded_len / 2)
        .filter(|&q| mag[q] > mag[q - 1] && mag[q] >= mag[q + 1])
        .collect();
    peaks.sort_by(|&a, &b| mag[b].total_cmp(&mag[a]).then(a.cmp(&b)));
    peaks.truncate(keep);
    if peaks.is_empty() {
        return regulate_fep(raw, keep);
    }
    let step = 1.0 / padded_len as f64;
    let freqs: Vec<f64> = peaks
        .iter()
        .map(|&q| refine_frequency(&centered, q as f64 * step, step))
        .collect();
    Ok(fit_sinusoids(raw, &freqs))
}

/// Energy of `signal` captured by its least-squares projection onto
/// `cos(2π f t)` and `sin(2π f t)`.
fn explained_energy(signal: &[f64], f: f64) -> f64 {
    let (mut cc, mut ss, mut cs, mut xc, mut xs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, &x) in signal.iter().enumerate() {
        let (s, c) = (std::f64::consts::TAU * f * t as f64).sin_cos();
        cc += c * c;
        ss += s * s;
        cs += c * s;
        xc += x * c;
        xs += x * s;
    }
    let det = cc * ss - cs * cs;
    if det.abs() < 1e-12 {
        return if cc > 0.0 { xc * xc / cc } else { 0.0 };
    }
    (xc * xc * ss - 2.0 * xc * xs * cs + xs * xs * cc) / det
}

/// Golden-section search for the best-fitting frequency within `±width` of `f0`.
fn refine_frequency(signal: &[f64], f0: f64, width: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((f0 - width).max(1e-9), (f0 + width).min(0.5));
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut ea, mut eb) = (explained_energy(signal, a), explained_energy(signal, b));
    for _ in 0..80 {
        if ea < eb {
            lo = a;
            a = b;
            ea = eb;
            b = lo + inv_phi * (hi - lo);
            eb = explained_energy(signal, b);
        } else {
            hi = b;
            b = a;
            eb = ea;
            a = hi - inv_phi * (hi - lo);
            ea = explained_energy(signal, a);
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    (lo + hi) / 2.0
}

/// Least-squares fit of `c0 + Σ (a_i cos 2π f_i t + b_i sin 2π f_i t)`.
fn fit_sinusoids(raw: &[f64], freqs: &[f64]) -> Vec<f64> {
    let n = raw.len();
    let cols = 1 + 2 * freqs.len();
    let basis = nalgebra::DMatrix::from_fn(n, cols, |t, j| {
        if j == 0 {
            1.0
        } else {
            let f = freqs[(j - 1) / 2];
            let (s, c) = (std::f64::consts::TAU * f * t as f64).sin_cos();
            if j % 2 == 1 {
                c
            } else {
                s
            }
        }
    });
    let y = nalgebra::DVector::from_column_slice(raw);
    let coef = basis
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .expect("SVD with both factors computed");
    (basis * coef).iter().copied().collect()
}

/// How the raw profile is regulated before cycle detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Regulation {
    /// [`regulate_fep`]: keep native DFT bins.
    Dft,
    /// [`regulate_fep_refined`]: refined dominant frequencies.
    #[default]
    Refined,
}

impl Regulation {
    pub fn apply(self, raw: &[f64], keep: usize) -> Result<Vec<f64>, CycleError> {
        match self {
            Self::Dft => regulate_fep(raw, keep),
            Self::Refined => regulate_fep_refined(raw, keep),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Dft => "dft",
            Self::Refined => "refined",
        }
    }
}

impl FromStr for Regulation {
    type Err = CycleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dft" => Ok(Self::Dft),
            "refined" => Ok(Self::Refined),
            other => Err(CycleError::InvalidStrategy(format!("unknown regulation {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extremum {
    pub index: usize,
    pub kind: ExtremumKind,
}

/// Interior local extrema, in time order. A flat run counts once, at its
/// midpoint, if both neighbouring runs lie on the same side of it.
pub fn local_extrema(signal: &[f64]) -> Vec<Extremum> {
    // (start, end, value) runs of equal values
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &v) in signal.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.2 == v => r.1 = i,
            _ => runs.push((i, i, v)),
        }
    }
    runs.windows(3)
        .filter_map(|w| {
            let (prev, (s, e, v), next) = (w[0].2, w[1], w[2].2);
            let kind = if v > prev && v > next {
                ExtremumKind::Max
            } else if v < prev && v < next {
                ExtremumKind::Min
            } else {
                return None;
            };
            Some(Extremum {
                index: (s + e) / 2,
                kind,
            })
        })
        .collect()
}

/// One step: the interval between a regulated-FEP maximum and the adjacent
/// minimum (which may come before or after it).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkingCycle {
    pub max_index: usize,
    pub min_index: usize,
}

impl WalkingCycle {
    /// Inclusive frame interval `(first, last)`.
    pub fn span(&self) -> (usize, usize) {
        (
            self.max_index.min(self.min_index),
            self.max_index.max(self.min_index),
        )
    }

    /// Number of frames in the inclusive span.
    pub fn span_len(&self) -> usize {
        let (a, b) = self.span();
        b - a + 1
    }
}

/// Walking cycles from adjacent max/min pairs of the regulated profile,
/// ordered by time. Neighbouring cycles share their common extremum.
pub fn detect_cycles(regulated: &[f64]) -> Result<Vec<WalkingCycle>, CycleError> {
    let extrema = local_extrema(regulated);
    let cycles: Vec<WalkingCycle> = extrema
        .windows(2)
        .filter_map(|w| match (w[0].kind, w[1].kind) {
            (ExtremumKind::Max, ExtremumKind::Min) => Some(WalkingCycle {
                max_index: w[0].index,
                min_index: w[1].index,
            }),
            (ExtremumKind::Min, ExtremumKind::Max) => Some(WalkingCycle {
                max_index: w[1].index,
                min_index: w[0].index,
            }),
            _ => None,
        })
        .collect();
    if cycles.is_empty() {
        Err(CycleError::NoCycleFound)
    } else {
        Ok(cycles)
    }
}

/// How frames are picked from a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    /// `K` frames equally spaced from each cycle's maximum to its minimum.
    Representative(usize),
    /// Per detected cycle, `K` frames drawn from the whole sequence.
    RandomWhole(usize),
    /// Per detected cycle, one draw from each of `K` equal segments.
    EqualSegments(usize),
    /// Every frame, in one group.
    AllFrames,
    /// Split at the midpoint; `ceil(K / 2)` draws from each half, one group per half.
    RandomHalves(usize),
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        Self::Representative(4)
    }
}

impl SamplingStrategy {
    pub fn frames(&self) -> Option<usize> {
        match *self {
            Self::Representative(k)
            | Self::RandomWhole(k)
            | Self::EqualSegments(k)
            | Self::RandomHalves(k) => Some(k),
            Self::AllFrames => None,
        }
    }

    /// Same variant with a different `K`; `AllFrames` is unchanged.
    pub fn with_frames(self, k: usize) -> Self {
        match self {
            Self::Representative(_) => Self::Representative(k),
            Self::RandomWhole(_) => Self::RandomWhole(k),
            Self::EqualSegments(_) => Self::EqualSegments(k),
            Self::RandomHalves(_) => Self::RandomHalves(k),
            Self::AllFrames => Self::AllFrames,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Representative(_) => "representative",
            Self::RandomWhole(_) => "random-whole",
            Self::EqualSegments(_) => "equal-segments",
            Self::AllFrames => "all",
            Self::RandomHalves(_) => "random-halves",
        }
    }

    /// Whether sampling needs detected cycles.
    pub fn uses_cycles(&self) -> bool {
        matches!(
            self,
            Self::Representative(_) | Self::RandomWhole(_) | Self::EqualSegments(_)
        )
    }

    /// Parses a strategy name with frame count `k`.
    pub fn parse(name: &str, k: usize) -> Result<Self, CycleError> {
        let s = match name {
            "representative" => Self::Representative(k),
            "random-whole" => Self::RandomWhole(k),
            "equal-segments" => Self::EqualSegments(k),
            "all" => Self::AllFrames,
            "random-halves" => Self::RandomHalves(k),
            other => return Err(CycleError::InvalidStrategy(format!("unknown strategy {other:?}"))),
        };
        if s.frames() == Some(0) {
            return Err(CycleError::InvalidStrategy("K must be at least 1".into()));
        }
        Ok(s)
    }
}

impl fmt::Display for SamplingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frames() {
            Some(k) => write!(f, "{}({k})", self.name()),
            None => f.write_str(self.name()),
        }
    }
}

impl FromStr for SamplingStrategy {
    type Err = CycleError;

    /// Accepts `name` (K = 4) or `name(K)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('(') {
            Some((name, rest)) => {
                let k = rest
                    .strip_suffix(')')
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(|| CycleError::InvalidStrategy(s.to_string()))?;
                Self::parse(name, k)
            }
            None => Self::parse(s, 4),
        }
    }
}

/// `k` indices equally spaced on the inclusive interval from `max_index` to
/// `min_index`, sorted ascending. `k == 1` yields `max_index` alone.
pub fn representative_indices(cycle: &WalkingCycle, k: usize) -> Result<Vec<usize>, CycleError> {
    let available = cycle.span_len();
    if k == 0 || k > available {
        return Err(CycleError::InsufficientFrames {
            needed: k,
            available,
        });
    }
    if k == 1 {
        return Ok(vec![cycle.max_index]);
    }
    let from = cycle.max_index as f64;
    let step = (cycle.min_index as f64 - from) / (k - 1) as f64;
    let mut idx: Vec<usize> = (0..k).map(|i| (from + step * i as f64).round() as usize).collect();
    idx.sort_unstable();
    Ok(idx)
}

/// Frame-index groups for `strategy`: one group per cycle for the
/// cycle-driven strategies, one group for `AllFrames`, two for
/// `RandomHalves`. Indices within a group are sorted.
///
/// `RandomWhole` and `EqualSegments` produce `max(cycles.len(), 1)` groups so
/// that they spend the same frame budget as `Representative`.
pub fn sample_frames(
    frame_count: usize,
    cycles: &[WalkingCycle],
    strategy: SamplingStrategy,
    rng: &mut RngHandle,
) -> Result<Vec<Vec<usize>>, CycleError> {
    let insufficient = |needed, available| CycleError::InsufficientFrames { needed, available };
    match strategy {
        SamplingStrategy::Representative(k) => {
            if cycles.is_empty() {
                return Err(CycleError::NoCycleFound);
            }
            cycles
                .iter()
                .map(|c| {
                    if c.span().1 >= frame_count {
                        return Err(insufficient(c.span().1 + 1, frame_count));
                    }
                    representative_indices(c, k)
                })
                .collect()
        }
        SamplingStrategy::RandomWhole(k) => {
            if k == 0 || k > frame_count {
                return Err(insufficient(k, frame_count));
            }
            Ok((0..cycles.len().max(1))
                .map(|_| rng.sample_distinct(frame_count, k))
                .collect())
        }
        SamplingStrategy::EqualSegments(k) => {
            if k == 0 || k > frame_count {
                return Err(insufficient(k, frame_count));
            }
            Ok((0..cycles.len().max(1))
                .map(|_| {
                    (0..k)
                        .map(|s| {
                            let lo = s * frame_count / k;
                            let hi = (s + 1) * frame_count / k;
                            lo + rng.below(hi - lo)
                        })
                        .collect()
                })
                .collect())
        }
        SamplingStrategy::AllFrames => Ok(vec![(0..frame_count).collect()]),
        SamplingStrategy::RandomHalves(k) => {
            let per_half = k.div_ceil(2);
            let mid = frame_count / 2;
            if k == 0 || per_half > mid {
                return Err(insufficient(2 * per_half, frame_count));
            }
            let first = rng.sample_distinct(mid, per_half);
            let second = rng
                .sample_distinct(frame_count - mid, per_half)
                .into_iter()
                .map(|i| i + mid)
                .collect();
            Ok(vec![first, second])
        }
    }
}

/// FEP, regulation and cycle detection for one sequence.
pub fn analyze_sequence(
    seq: &FrameSequence,
    regulation: Regulation,
    keep: usize,
) -> Result<(FepSignal, Vec<WalkingCycle>), CycleError> {
    let raw = compute_fep(seq).raw;
    let regulated = regulation.apply(&raw, keep)?;
    let cycles = detect_cycles(&regulated)?;
    Ok((
        FepSignal {
            raw,
            regulated: Some(regulated),
        },
        cycles,
    ))
}

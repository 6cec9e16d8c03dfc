//! Principal component analysis by thin SVD of the centered data.

use nalgebra::DMatrix;

use super::MetricError;

/// Default number of retained components.
pub const DEFAULT_PCA_DIM: usize = 100;

/// Reported when the data supports fewer components than requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankReduced(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `p × d`, row-major, rows orthonormal.
    components: Vec<f64>,
    p: usize,
}

impl PcaModel {
    /// Builds a model from stored parts. Rows of `components` must be
    /// orthonormal; only the shape is checked here.
    pub fn from_parts(mean: Vec<f64>, components: Vec<f64>, p: usize) -> Result<Self, MetricError> {
        let d = mean.len();
        if components.len() != p * d {
            return Err(MetricError::DimMismatch {
                expected: p * d,
                actual: components.len(),
            });
        }
        Ok(Self { mean, components, p })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.p
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &[f64] {
        let d = self.input_dim();
        &self.components[k * d..(k + 1) * d]
    }

    /// `components · (v − mean)`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>, MetricError> {
        let d = self.input_dim();
        if v.len() != d {
            return Err(MetricError::DimMismatch {
                expected: d,
                actual: v.len(),
            });
        }
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok((0..self.p)
            .map(|k| self.component(k).iter().zip(&centered).map(|(c, x)| c * x).sum())
            .collect())
    }

    pub fn project_f32(&self, v: &[f32]) -> Result<Vec<f64>, MetricError> {
        let v: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
        self.project(&v)
    }

    pub fn project_batch<T: AsRef<[f64]>>(&self, vs: &[T]) -> Result<Vec<Vec<f64>>, MetricError> {
        vs.iter().map(|v| self.project(v.as_ref())).collect()
    }

    /// `mean + componentsᵀ · y`.
    pub fn reconstruct(&self, y: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (k, &c) in y.iter().enumerate().take(self.p) {
            for (o, &w) in out.iter_mut().zip(self.component(k)) {
                *o += c * w;
            }
        }
        out
    }
}

/// Top-`p` principal axes of `samples`, ordered by descending variance.
///
/// Each component's largest-magnitude entry is made positive. When the
/// centered data has rank below `p`, only the non-degenerate directions are
/// kept and the effective dimension is reported.
pub fn fit_pca<T: AsRef<[f64]>>(
    samples: &[T],
    p: usize,
) -> Result<(PcaModel, Option<RankReduced>), MetricError> {
    let n = samples.len();
    if n < 2 {
        return Err(MetricError::InsufficientSamples { needed: 2, available: n });
    }
    let d = samples[0].as_ref().len();
    for s in samples {
        if s.as_ref().len() != d {
            return Err(MetricError::DimMismatch {
                expected: d,
                actual: s.as_ref().len(),
            });
        }
    }

    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, &x) in mean.iter_mut().zip(s.as_ref()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| samples[i].as_ref()[j] - mean[j]);

    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let top = order.first().map_or(0.0, |&i| svd.singular_values[i]);
    let tol = top * (n.max(d) as f64) * f64::EPSILON * 16.0;
    let rank = order.iter().filter(|&&i| svd.singular_values[i] > tol).count();
    let p_eff = p.min(rank);

    let mut components = Vec::with_capacity(p_eff * d);
    for &i in order.iter().take(p_eff) {
        let row: Vec<f64> = v_t.row(i).iter().copied().collect();
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        components.extend(row.iter().map(|x| x * sign));
    }
    let notice = (p_eff < p).then_some(RankReduced(p_eff));
    Ok((PcaModel { mean, components, p: p_eff }, notice))
}

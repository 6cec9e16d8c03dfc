//! KISSME: a Mahalanobis matrix from the inverse covariances of similar and
//! dissimilar pair differences.

use nalgebra::{DMatrix, SymmetricEigen};

use super::MetricError;

/// Relative ridge added to each pair covariance, as a fraction of its mean
/// diagonal entry.
pub const COVARIANCE_RIDGE: f64 = 1e-4;

/// Pairs of vectors whose difference statistics define the metric.
#[derive(Debug, Clone, Default)]
pub struct PairSet<'a> {
    pub similar: Vec<(&'a [f64], &'a [f64])>,
    pub dissimilar: Vec<(&'a [f64], &'a [f64])>,
}

/// Symmetric positive-semidefinite matrix defining
/// `d(a, b) = sqrt((a−b)ᵀ M (a−b))`.
#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisModel {
    dim: usize,
    /// Row-major `dim × dim`.
    m: Vec<f64>,
}

impl MahalanobisModel {
    pub fn identity(dim: usize) -> Self {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1.0;
        }
        Self { dim, m }
    }

    pub fn from_row_major(dim: usize, m: Vec<f64>) -> Result<Self, MetricError> {
        if m.len() != dim * dim {
            return Err(MetricError::DimMismatch {
                expected: dim * dim,
                actual: m.len(),
            });
        }
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[i * self.dim + j]
    }

    /// `(a−b)ᵀ M (a−b)` without dimension checks.
    pub fn quadratic(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let mut total = 0.0;
        for (i, di) in diff.iter().enumerate() {
            let row = &self.m[i * self.dim..(i + 1) * self.dim];
            total += di * row.iter().zip(&diff).map(|(m, dj)| m * dj).sum::<f64>();
        }
        total
    }

    /// Smallest eigenvalue of `M`.
    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 0 {
            return 0.0;
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(self.dim, self.dim, &self.m));
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn difference_covariance(pairs: &[(&[f64], &[f64])], dim: usize) -> Result<DMatrix<f64>, MetricError> {
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    let mut diff = vec![0.0; dim];
    for (a, b) in pairs {
        for v in [a, b] {
            if v.len() != dim {
                return Err(MetricError::DimMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
        }
        for ((d, x), y) in diff.iter_mut().zip(a.iter()).zip(b.iter()) {
            *d = x - y;
        }
        for i in 0..dim {
            let di = diff[i];
            if di == 0.0 {
                continue;
            }
            for j in i..dim {
                cov[(i, j)] += di * diff[j];
            }
        }
    }
    let n = pairs.len() as f64;
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

fn regularized_inverse(mut cov: DMatrix<f64>, which: &'static str) -> Result<DMatrix<f64>, MetricError> {
    let dim = cov.nrows();
    let ridge = COVARIANCE_RIDGE * cov.trace() / dim as f64;
    for i in 0..dim {
        cov[(i, i)] += ridge;
    }
    let inv = cov
        .cholesky()
        .ok_or(MetricError::SingularCovariance(which))?
        .inverse();
    if inv.iter().all(|v| v.is_finite()) {
        Ok(inv)
    } else {
        Err(MetricError::SingularCovariance(which))
    }
}

/// Learns `M = PSD(Σ_S⁻¹ − Σ_D⁻¹)` from pair differences.
///
/// Each covariance is the second moment of `a − b` over its pair set, with a
/// ridge of `1e-4 · trace / dim` added before inversion. Negative
/// eigenvalues of the difference are clipped to zero.
pub fn fit_kissme(pairs: &PairSet<'_>) -> Result<MahalanobisModel, MetricError> {
    let first = pairs.similar.first().ok_or(MetricError::InsufficientPairs("similar"))?;
    if pairs.dissimilar.is_empty() {
        return Err(MetricError::InsufficientPairs("dissimilar"));
    }
    let dim = first.0.len();
    if dim == 0 {
        return Ok(MahalanobisModel::identity(0));
    }
    let s_inv = regularized_inverse(difference_covariance(&pairs.similar, dim)?, "similar")?;
    let d_inv = regularized_inverse(difference_covariance(&pairs.dissimilar, dim)?, "dissimilar")?;
    let m0 = s_inv - d_inv;
    let m0 = (&m0 + m0.transpose()) * 0.5;

    let eig = SymmetricEigen::new(m0);
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let m = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let m = (&m + m.transpose()) * 0.5;

    let mut rows = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            rows.push(m[(i, j)]);
        }
    }
    Ok(MahalanobisModel { dim, m: rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::maha_dist;
    use crate::rng::RngHandle;
    use proptest::prelude::*;

    fn pairs_from(diffs: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
        diffs.iter().map(|d| (d.clone(), vec![0.0; d.len()])).collect()
    }

    fn as_refs(v: &[(Vec<f64>, Vec<f64>)]) -> Vec<(&[f64], &[f64])> {
        v.iter().map(|(a, b)| (a.as_slice(), b.as_slice())).collect()
    }

    fn gaussian_diffs(n: usize, sigmas: &[f64], rng: &mut RngHandle) -> Vec<Vec<f64>> {
        (0..n).map(|_| sigmas.iter().map(|s| s * rng.normal()).collect()).collect()
    }

    #[test]
    fn same_distribution_gives_zero_metric() {
        let mut rng = RngHandle::new(1);
        let sim = pairs_from(&gaussian_diffs(50, &[1.0, 2.0, 0.5], &mut rng));
        let refs = as_refs(&sim);
        let model = fit_kissme(&PairSet {
            similar: refs.clone(),
            dissimilar: refs,
        })
        .unwrap();
        assert!(model.matrix().iter().all(|v| v.abs() < 1e-9));
        assert_eq!(maha_dist(&model, &[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn isotropic_closed_form() {
        let mut rng = RngHandle::new(2);
        let (ss, sd) = (0.5, 2.0);
        let sim = pairs_from(&gaussian_diffs(20_000, &[ss; 3], &mut rng));
        let dis = pairs_from(&gaussian_diffs(20_000, &[sd; 3], &mut rng));
        let model = fit_kissme(&PairSet {
            similar: as_refs(&sim),
            dissimilar: as_refs(&dis),
        })
        .unwrap();
        let want = 1.0 / (ss * ss) - 1.0 / (sd * sd);
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { want } else { 0.0 };
                assert!((model.entry(i, j) - target).abs() < 0.05 * want);
            }
        }
    }

    #[test]
    fn diagonal_ratio_matches_closed_form() {
        let mut rng = RngHandle::new(3);
        let sim = pairs_from(&gaussian_diffs(10_000, &[0.1, 0.0], &mut rng));
        let dis = pairs_from(&gaussian_diffs(10_000, &[1.0, 1.0], &mut rng));
        let model = fit_kissme(&PairSet {
            similar: as_refs(&sim),
            dissimilar: as_refs(&dis),
        })
        .unwrap();
        // Closed form along axis 1: sqrt(1/0.01 − 1/1).
        let ratio = maha_dist(&model, &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let want = (1.0f64 / 0.01 - 1.0).sqrt();
        assert!((ratio - want).abs() < 0.05 * want, "{ratio} vs {want}");
        assert!(model.entry(1, 1) > 1e4 * model.entry(0, 0));
    }

    #[test]
    fn errors() {
        let a = [1.0, 2.0];
        let b = [0.0, 0.0];
        let one = vec![(&a[..], &b[..])];
        assert_eq!(
            fit_kissme(&PairSet {
                similar: vec![],
                dissimilar: one.clone()
            }),
            Err(MetricError::InsufficientPairs("similar"))
        );
        assert_eq!(
            fit_kissme(&PairSet {
                similar: one.clone(),
                dissimilar: vec![]
            }),
            Err(MetricError::InsufficientPairs("dissimilar"))
        );
        let zero = vec![(&b[..], &b[..])];
        assert_eq!(
            fit_kissme(&PairSet {
                similar: zero,
                dissimilar: one
            }),
            Err(MetricError::SingularCovariance("similar"))
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn learned_metric_is_psd(seed in any::<u64>(), dim in 1usize..6, n in 2usize..20) {
            let mut rng = RngHandle::new(seed);
            let sig_s: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.1, 3.0)).collect();
            let sig_d: Vec<f64> = (0..dim).map(|_| rng.uniform_in(0.1, 3.0)).collect();
            let sim = pairs_from(&gaussian_diffs(n + dim, &sig_s, &mut rng));
            let dis = pairs_from(&gaussian_diffs(n + dim, &sig_d, &mut rng));
            let model = fit_kissme(&PairSet { similar: as_refs(&sim), dissimilar: as_refs(&dis) }).unwrap();
            let scale = model.matrix().iter().fold(1.0f64, |a, v| a.max(v.abs()));
            for i in 0..dim {
                for j in 0..dim {
                    prop_assert!((model.entry(i, j) - model.entry(j, i)).abs() <= 1e-10 * scale);
                }
            }
            prop_assert!(model.min_eigenvalue() >= -1e-10 * scale);
            for _ in 0..10 {
                let v: Vec<f64> = (0..dim).map(|_| rng.normal()).collect();
                let norm2: f64 = v.iter().map(|x| x * x).sum();
                prop_assert!(model.quadratic(&v, &vec![0.0; dim]) >= -1e-9 * norm2 * scale);
            }
        }
    }
}

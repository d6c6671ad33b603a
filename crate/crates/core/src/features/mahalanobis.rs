use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class centroids and pooled within-class covariance of the training embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub class_count: usize,
    /// `C x D`, row per class.
    pub centroids: Vec<Vec<f64>>,
    /// Regularized pooled covariance, `D x D`.
    pub covariance: Vec<Vec<f64>>,
    /// Inverse of `covariance`.
    pub precision: Vec<Vec<f64>>,
    pub epsilon: f64,
}

const MAX_RIDGE_RETRIES: usize = 3;

fn check_rectangular(rows: &[Vec<f64>]) -> Result<usize> {
    let dim = rows.first().map(Vec::len).ok_or_else(|| Error::invalid("empty training set"))?;
    if dim == 0 {
        return Err(Error::invalid("zero-dimensional embeddings"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != dim) {
        return Err(Error::invalid(format!(
            "embedding {i} has dimension {}, expected {dim}",
            rows[i].len()
        )));
    }
    Ok(dim)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TrainStats {
    /// Per-class means and `Σ = (1/N) Σ_i (h_i - μ_{y_i})(h_i - μ_{y_i})ᵀ + εI`
    /// with `ε = max(1e-10, 1e-6 · tr(Σ_raw)/D)`, escalated tenfold up to three
    /// times if the Cholesky factorization fails.
    pub fn fit(embeddings: &[Vec<f64>], labels: &[usize], class_count: usize) -> Result<Self> {
        let dim = check_rectangular(embeddings)?;
        if labels.len() != embeddings.len() {
            return Err(Error::invalid(format!(
                "{} embeddings but {} labels",
                embeddings.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::invalid(format!("label {bad} out of range for {class_count} classes")));
        }
        let n = embeddings.len();

        let mut sums = vec![vec![0.0; dim]; class_count];
        let mut counts = vec![0usize; class_count];
        for (h, &y) in embeddings.iter().zip(labels) {
            counts[y] += 1;
            sums[y].iter_mut().zip(h).for_each(|(s, v)| *s += v);
        }
        if let Some(c) = counts.iter().position(|&k| k == 0) {
            return Err(Error::invalid(format!("class {c} has no training samples")));
        }
        let centroids: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &k)| s.into_iter().map(|v| v / k as f64).collect())
            .collect();

        let mut raw = DMatrix::<f64>::zeros(dim, dim);
        for (h, &y) in embeddings.iter().zip(labels) {
            let d = DVector::from_iterator(dim, h.iter().zip(&centroids[y]).map(|(a, b)| a - b));
            raw.ger(1.0, &d, &d, 1.0);
        }
        raw /= n as f64;
        // Symmetrize against accumulated rounding.
        let raw = (&raw + raw.transpose()) * 0.5;

        let mut epsilon = (1e-6 * raw.trace() / dim as f64).max(1e-10);
        for attempt in 0..=MAX_RIDGE_RETRIES {
            let cov = &raw + DMatrix::<f64>::identity(dim, dim) * epsilon;
            if let Some(chol) = cov.clone().cholesky() {
                let precision = chol.inverse();
                let precision = (&precision + precision.transpose()) * 0.5;
                return Ok(Self {
                    class_count,
                    centroids,
                    covariance: to_rows(&cov),
                    precision: to_rows(&precision),
                    epsilon,
                });
            }
            if attempt < MAX_RIDGE_RETRIES {
                epsilon *= 10.0;
            }
        }
        Err(Error::Factorization { epsilon })
    }

    pub fn dim(&self) -> usize {
        self.precision.len()
    }

    /// `(h - μ_c)ᵀ Σ⁻¹ (h - μ_c)` for one class.
    pub fn quadratic_form(&self, h: &[f64], class: usize) -> f64 {
        let mu = &self.centroids[class];
        let d: Vec<f64> = h.iter().zip(mu).map(|(a, b)| a - b).collect();
        let mut acc = 0.0;
        for (i, row) in self.precision.iter().enumerate() {
            let pd: f64 = row.iter().zip(&d).map(|(p, x)| p * x).sum();
            acc += d[i] * pd;
        }
        acc
    }

    /// Squared Mahalanobis distance to the nearest class centroid.
    pub fn mahalanobis(&self, h: &[f64]) -> Result<f64> {
        if h.len() != self.dim() {
            return Err(Error::invalid(format!(
                "embedding dimension {} does not match statistics dimension {}",
                h.len(),
                self.dim()
            )));
        }
        let best = (0..self.class_count)
            .map(|c| self.quadratic_form(h, c))
            .fold(f64::INFINITY, f64::min);
        Ok(best.max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_point_classes_fall_back_to_ridge() {
        let stats = TrainStats::fit(&[vec![0.0, 0.0], vec![1.0, 2.0]], &[0, 1], 2).unwrap();
        assert_eq!(stats.epsilon, 1e-10);
        assert_eq!(stats.covariance, vec![vec![1e-10, 0.0], vec![0.0, 1e-10]]);
        assert!((stats.precision[0][0] - 1e10).abs() < 1e-2);
        assert_eq!(stats.precision[0][1], 0.0);
    }

    #[test]
    fn pooled_variance_in_one_dimension() {
        // Class 0 at {-1, 1}, class 1 at {3, 5}: within-class deviations ±1.
        let x = [vec![-1.0], vec![1.0], vec![3.0], vec![5.0]];
        let stats = TrainStats::fit(&x, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(stats.centroids, vec![vec![0.0], vec![4.0]]);
        assert!((stats.epsilon - 1e-6).abs() < 1e-18);
        assert!((stats.covariance[0][0] - (1.0 + 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_and_missing_classes() {
        let x = [vec![0.0], vec![1.0]];
        assert!(TrainStats::fit(&x, &[0, 3], 3).is_err());
        assert!(TrainStats::fit(&x, &[0, 0], 2).is_err());
        assert!(TrainStats::fit(&[], &[], 2).is_err());
    }

    #[test]
    fn distance_examples() {
        let stats = TrainStats {
            class_count: 2,
            centroids: vec![vec![0.0], vec![4.0]],
            covariance: vec![vec![1.0]],
            precision: vec![vec![1.0]],
            epsilon: 1e-10,
        };
        assert_eq!(stats.mahalanobis(&[0.0]).unwrap(), 0.0);
        assert_eq!(stats.mahalanobis(&[1.0]).unwrap(), 1.0);
        assert!(stats.mahalanobis(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn identity_precision_is_squared_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let centroids: Vec<Vec<f64>> =
            (0..3).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let eye = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let stats = TrainStats {
            class_count: 3,
            centroids: centroids.clone(),
            covariance: eye.clone(),
            precision: eye,
            epsilon: 1e-10,
        };
        for _ in 0..50 {
            let h: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let brute = centroids
                .iter()
                .map(|m| m.iter().zip(&h).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert!((stats.mahalanobis(&h).unwrap() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn precision_inverts_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<Vec<f64>> = (0..60).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let s = TrainStats::fit(&x, &y, 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((s.covariance[i][j] - s.covariance[j][i]).abs() < 1e-9);
                let prod: f64 = (0..4).map(|k| s.precision[i][k] * s.covariance[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod - expect).abs() < 1e-6);
            }
        }
    }
}

//! Score, confidence and correctness vectors, plus the uncertainty→confidence map.
//!
//! Scores are always oriented "higher = more uncertain". Confidence is derived
//! per evaluation set as `1 - minmax(u)`, so raw scores from different
//! (split, fold) sets are never compared directly.

use crate::error::{Error, Result};

/// Raw per-instance uncertainties of one method over one evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub method: String,
    pub values: Vec<f64>,
}

impl ScoreVector {
    pub fn new(method: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite score at index {i}")));
        }
        Ok(Self { method: method.into(), values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceVector(Vec<f64>);

impl ConfidenceVector {
    /// Wraps values that must already lie in `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!(
                "confidence at index {i} outside [0, 1]: {}",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Instance indices sorted by confidence descending, ties by input order.
    pub fn descending_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.0.len()).collect();
        order.sort_by(|&a, &b| self.0[b].total_cmp(&self.0[a]).then(a.cmp(&b)));
        order
    }
}

/// Binary correctness indicators, `true` when the prediction matches the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectnessVector(Vec<bool>);

impl CorrectnessVector {
    pub fn new(values: Vec<bool>) -> Self {
        Self(values)
    }

    pub fn from_labels(preds: &[usize], labels: &[usize]) -> Self {
        Self(preds.iter().zip(labels).map(|(p, l)| p == l).collect())
    }

    pub fn values(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn correct_count(&self) -> usize {
        self.0.iter().filter(|&&c| c).count()
    }

    pub fn error_count(&self) -> usize {
        self.0.len() - self.correct_count()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct_count() as f64 / self.0.len() as f64
    }

    /// Risk indicator `r_i = 1 - y_i`.
    pub fn risk(&self, i: usize) -> f64 {
        if self.0[i] {
            0.0
        } else {
            1.0
        }
    }
}

/// `(v - min) / (max - min)`; a constant vector maps to 0.5 everywhere.
pub fn minmax_normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid("cannot normalize an empty score vector"));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi == lo {
        return Ok(vec![0.5; values.len()]);
    }
    let range = hi - lo;
    Ok(values.iter().map(|&v| ((v - lo) / range).clamp(0.0, 1.0)).collect())
}

/// Normalizes the uncertainties within the set, then `c = 1 - u`.
pub fn to_confidence(scores: &ScoreVector) -> Result<ConfidenceVector> {
    let norm = minmax_normalize(&scores.values)?;
    Ok(ConfidenceVector(norm.into_iter().map(|u| 1.0 - u).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minmax_examples() {
        assert_eq!(minmax_normalize(&[2.0, 4.0, 6.0]).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(minmax_normalize(&[7.0, 7.0, 7.0]).unwrap(), vec![0.5; 3]);
        assert_eq!(minmax_normalize(&[-1.0, 0.0, 3.0]).unwrap(), vec![0.0, 0.25, 1.0]);
        assert!(minmax_normalize(&[]).is_err());
    }

    #[test]
    fn confidence_examples() {
        let s = |v: Vec<f64>| ScoreVector::new("x", v).unwrap();
        assert_eq!(to_confidence(&s(vec![0.0, 0.5, 1.0])).unwrap().values(), &[1.0, 0.5, 0.0]);
        assert_eq!(to_confidence(&s(vec![2.0, 4.0, 6.0])).unwrap().values(), &[1.0, 0.5, 0.0]);
        assert_eq!(to_confidence(&s(vec![3.3; 4])).unwrap().values(), &[0.5; 4]);
        assert!(to_confidence(&s(vec![])).is_err());
    }

    #[test]
    fn rejects_non_finite_scores() {
        assert!(ScoreVector::new("x", vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn descending_order_is_stable() {
        let c = ConfidenceVector::new(vec![0.5, 0.9, 0.5, 0.1]).unwrap();
        assert_eq!(c.descending_order(), vec![1, 0, 2, 3]);
    }
}

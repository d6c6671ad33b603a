//! Risk–coverage analysis and selective-prediction metrics.
//!
//! Instances are always ordered by confidence descending with ties broken by
//! input order, so every quantity here is deterministic.

use crate::confidence::{ConfidenceVector, CorrectnessVector};
use crate::error::{Error, Result};
use crate::f1::ConfusionCounts;

pub const DEFAULT_THRESHOLDS: [f64; 4] = [0.01, 0.05, 0.10, 0.15];

/// Coverage used for the fixed-coverage trust index.
pub const TI95_COVERAGE: f64 = 0.95;

// Guards floor() against products such as 0.7 * 10 = 6.9999999999999991.
const FLOOR_SLACK: f64 = 1e-9;

fn floor_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 + FLOOR_SLACK).floor() as usize).min(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskCoverageCurve {
    /// Instance indices by confidence descending.
    pub order: Vec<usize>,
    /// `prefix_risk[k-1]` is the error rate among the `k` most confident instances.
    pub prefix_risk: Vec<f64>,
}

impl RiskCoverageCurve {
    fn from_order(order: Vec<usize>, correct: &CorrectnessVector) -> Self {
        let mut errors = 0usize;
        let prefix_risk = order
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                errors += usize::from(!correct.values()[i]);
                errors as f64 / (k + 1) as f64
            })
            .collect();
        Self { order, prefix_risk }
    }

    pub fn len(&self) -> usize {
        self.prefix_risk.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix_risk.is_empty()
    }

    /// `(coverage, risk)` points for plotting.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        self.prefix_risk
            .iter()
            .enumerate()
            .map(|(k, &r)| ((k + 1) as f64 / n, r))
            .collect()
    }
}

pub fn rc_curve(confidence: &ConfidenceVector, correct: &CorrectnessVector) -> Result<RiskCoverageCurve> {
    if confidence.is_empty() {
        return Err(Error::invalid("risk-coverage curve of an empty set"));
    }
    if confidence.len() != correct.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} confidences vs {} correctness values",
            confidence.len(),
            correct.len()
        )));
    }
    Ok(RiskCoverageCurve::from_order(confidence.descending_order(), correct))
}

/// Coverage-averaged risk `(1/n) Σ_k prefix_risk[k]`.
pub fn rc_auc(curve: &RiskCoverageCurve) -> f64 {
    curve.prefix_risk.iter().sum::<f64>() / curve.len() as f64
}

/// Best-case and random-ordering RC-AUC for a correctness vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcBaselines {
    /// Every correct instance ranked ahead of every error.
    pub oracle: f64,
    /// Expected RC-AUC under a uniformly random order (the overall error rate).
    pub random: f64,
}

pub fn rc_auc_baselines(correct: &CorrectnessVector) -> Result<RcBaselines> {
    if correct.is_empty() {
        return Err(Error::invalid("baselines of an empty set"));
    }
    let y = correct.values();
    let order: Vec<usize> = (0..y.len()).filter(|&i| y[i]).chain((0..y.len()).filter(|&i| !y[i])).collect();
    let oracle = rc_auc(&RiskCoverageCurve::from_order(order, correct));
    Ok(RcBaselines { oracle, random: 1.0 - correct.accuracy() })
}

/// `(model - random) / (oracle - random)`: 1 at the oracle, 0 at random.
pub fn nrc_auc(model: f64, baselines: RcBaselines) -> Result<f64> {
    let span = baselines.oracle - baselines.random;
    if span == 0.0 {
        return Err(Error::Undefined("normalised RC-AUC needs both correct and incorrect predictions"));
    }
    Ok((model - baselines.random) / span)
}

/// Area under the risk–coverage curve up to coverage `full_set_macro_f1`.
pub fn e_auoptrc(curve: &RiskCoverageCurve, full_set_macro_f1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&full_set_macro_f1) {
        return Err(Error::invalid(format!("coverage {full_set_macro_f1} outside [0, 1]")));
    }
    let n = curve.len();
    let k = floor_count(full_set_macro_f1, n);
    Ok(curve.prefix_risk[..k].iter().sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrustMode {
    /// Best macro-F1 over all confidence prefixes (largest coverage on ties).
    Optimal,
    /// Macro-F1 on the top `floor(coverage · n)` instances (at least one).
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustIndex {
    pub f1: f64,
    pub coverage_used: f64,
}

fn check_labels(confidence: &ConfidenceVector, preds: &[usize], labels: &[usize], classes: usize) -> Result<()> {
    let n = confidence.len();
    if n == 0 {
        return Err(Error::invalid("empty input"));
    }
    if preds.len() != n || labels.len() != n {
        return Err(Error::invalid(format!(
            "length mismatch: {n} confidences, {} predictions, {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.iter().chain(labels).any(|&c| c >= classes) {
        return Err(Error::invalid(format!("class index out of range for {classes} classes")));
    }
    Ok(())
}

pub fn trust_index(
    confidence: &ConfidenceVector,
    preds: &[usize],
    labels: &[usize],
    class_count: usize,
    mode: TrustMode,
) -> Result<TrustIndex> {
    check_labels(confidence, preds, labels, class_count)?;
    let n = confidence.len();
    let order = confidence.descending_order();
    let mut counts = ConfusionCounts::new(class_count);
    match mode {
        TrustMode::Fixed(cov) => {
            if !(cov > 0.0 && cov <= 1.0) {
                return Err(Error::invalid(format!("coverage {cov} outside (0, 1]")));
            }
            let k = floor_count(cov, n).max(1);
            for &i in &order[..k] {
                counts.add(preds[i], labels[i]);
            }
            Ok(TrustIndex { f1: counts.macro_f1(), coverage_used: k as f64 / n as f64 })
        }
        TrustMode::Optimal => {
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (k, &i) in order.iter().enumerate() {
                counts.add(preds[i], labels[i]);
                let f = counts.macro_f1();
                if f >= best.0 {
                    best = (f, k + 1);
                }
            }
            Ok(TrustIndex { f1: best.0, coverage_used: best.1 as f64 / n as f64 })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub threshold: f64,
    pub rejected_count: usize,
    pub retained_f1: f64,
    /// Percentage points relative to the full set.
    pub delta_f1: f64,
    pub pct_incorrect_rejected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub full_f1: f64,
    pub rows: Vec<SweepRow>,
}

/// Rejects the `floor(θ · n)` least-confident instances at each threshold and
/// reports the macro-F1 change on what remains.
pub fn abstention_sweep(
    confidence: &ConfidenceVector,
    preds: &[usize],
    labels: &[usize],
    class_count: usize,
    thresholds: &[f64],
) -> Result<SweepReport> {
    check_labels(confidence, preds, labels, class_count)?;
    if let Some(t) = thresholds.iter().find(|t| !(0.0..1.0).contains(*t)) {
        return Err(Error::invalid(format!("rejection threshold {t} outside [0, 1)")));
    }
    let n = confidence.len();
    let order = confidence.descending_order();
    let mut all = ConfusionCounts::new(class_count);
    for &i in &order {
        all.add(preds[i], labels[i]);
    }
    let full_f1 = all.macro_f1();
    let rows = thresholds
        .iter()
        .map(|&threshold| {
            let rejected_count = floor_count(threshold, n);
            let mut kept = all.clone();
            let mut wrong = 0usize;
            for &i in &order[n - rejected_count..] {
                kept.remove(preds[i], labels[i]);
                wrong += usize::from(preds[i] != labels[i]);
            }
            let retained_f1 = kept.macro_f1();
            SweepRow {
                threshold,
                rejected_count,
                retained_f1,
                delta_f1: 100.0 * (retained_f1 - full_f1),
                pct_incorrect_rejected: 100.0 * wrong as f64 / rejected_count.max(1) as f64,
            }
        })
        .collect();
    Ok(SweepReport { full_f1, rows })
}

//! Discrimination (ROC-AUC, AU-PRC) and calibration (slope, CITL, ECE) of
//! uncertainty scores against prediction correctness.
//!
//! Undefined cases (single-class correctness, constant confidence) return
//! [`Error::Undefined`]; callers record them as NA.

use crate::confidence::{ConfidenceVector, CorrectnessVector};
use crate::error::{Error, Result};

pub const DEFAULT_ECE_BINS: usize = 15;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("length mismatch: {a} vs {b}")));
    }
    if a == 0 {
        return Err(Error::invalid("empty input"));
    }
    Ok(())
}

/// Probability that a random correct instance is more confident than a random
/// incorrect one; ties earn half credit.
pub fn roc_auc(correct: &CorrectnessVector, confidence: &ConfidenceVector) -> Result<f64> {
    let y = correct.values();
    let c = confidence.values();
    check_lengths(y.len(), c.len())?;
    let pos = correct.correct_count() as u64;
    let neg = y.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("ROC-AUC needs both correct and incorrect predictions"));
    }
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[a].total_cmp(&c[b]));
    // Twice the Mann–Whitney U, kept integral.
    let mut u2: u64 = 0;
    let mut neg_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && c[order[j + 1]] == c[order[i]] {
            j += 1;
        }
        let (mut p, mut q) = (0u64, 0u64);
        for &k in &order[i..=j] {
            if y[k] {
                p += 1;
            } else {
                q += 1;
            }
        }
        u2 += p * (2 * neg_below + q);
        neg_below += q;
        i = j + 1;
    }
    Ok(u2 as f64 / (2 * pos * neg) as f64)
}

/// Average precision with errors as the positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecallArea {
    pub value: f64,
    /// Whether any uncertainty values were tied (ordering then follows input order).
    pub ties: bool,
}

/// Step-wise average precision of ranking instances by descending uncertainty,
/// errors positive: `Σ_k P(k) ΔR(k)`.
pub fn au_prc(correct: &CorrectnessVector, uncertainty: &[f64]) -> Result<PrecisionRecallArea> {
    let y = correct.values();
    check_lengths(y.len(), uncertainty.len())?;
    let errors = correct.error_count();
    if errors == 0 {
        return Err(Error::Undefined("AU-PRC needs at least one incorrect prediction"));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| uncertainty[b].total_cmp(&uncertainty[a]).then(a.cmp(&b)));
    let ties = order.windows(2).any(|w| uncertainty[w[0]] == uncertainty[w[1]]);
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if !y[i] {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(PrecisionRecallArea { value: total / errors as f64, ties })
}

/// OLS fit of correctness on confidence: `y = intercept + slope · c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationFit {
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

pub fn c_slope(correct: &CorrectnessVector, confidence: &ConfidenceVector) -> Result<CalibrationFit> {
    let y = correct.values();
    let c = confidence.values();
    check_lengths(y.len(), c.len())?;
    let n = c.len();
    let (lo, hi) = c
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if n < 2 || lo == hi {
        return Err(Error::Undefined("calibration slope needs varying confidence"));
    }
    let nf = n as f64;
    let c_mean = c.iter().sum::<f64>() / nf;
    let y_mean = correct.accuracy();
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (&ci, &yi) in c.iter().zip(y) {
        let dx = ci - c_mean;
        sxy += dx * (f64::from(u8::from(yi)) - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(CalibrationFit { slope, intercept: y_mean - slope * c_mean, n })
}

/// Calibration-in-the-large: mean confidence minus accuracy.
pub fn citl(correct: &CorrectnessVector, confidence: &ConfidenceVector) -> Result<f64> {
    check_lengths(correct.len(), confidence.len())?;
    let mean_c = confidence.values().iter().sum::<f64>() / confidence.len() as f64;
    Ok(mean_c - correct.accuracy())
}

/// Equal-width binning of `[0, 1]`; bins are `[lo, hi)` except the last, which is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinningConfig {
    pub bin_count: usize,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self { bin_count: DEFAULT_ECE_BINS }
    }
}

impl BinningConfig {
    pub fn new(bin_count: usize) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::invalid("bin count must be at least 1"));
        }
        Ok(Self { bin_count })
    }

    pub fn bin_of(&self, c: f64) -> usize {
        ((c * self.bin_count as f64) as usize).min(self.bin_count - 1)
    }
}

/// One reliability-diagram bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
}

/// Per-bin counts, mean confidence and accuracy (empty bins included with count 0).
pub fn reliability_bins(
    correct: &CorrectnessVector,
    confidence: &ConfidenceVector,
    bins: BinningConfig,
) -> Result<Vec<ReliabilityBin>> {
    check_lengths(correct.len(), confidence.len())?;
    let m = bins.bin_count;
    let mut count = vec![0usize; m];
    let mut conf = vec![0.0; m];
    let mut hits = vec![0usize; m];
    for (&c, &y) in confidence.values().iter().zip(correct.values()) {
        let b = bins.bin_of(c);
        count[b] += 1;
        conf[b] += c;
        hits[b] += usize::from(y);
    }
    Ok((0..m)
        .map(|b| {
            let k = count[b];
            let (mean_confidence, accuracy) = if k == 0 {
                (0.0, 0.0)
            } else {
                (conf[b] / k as f64, hits[b] as f64 / k as f64)
            };
            ReliabilityBin {
                lower: b as f64 / m as f64,
                upper: (b + 1) as f64 / m as f64,
                count: k,
                mean_confidence,
                accuracy,
            }
        })
        .collect())
}

/// Expected calibration error: sample-weighted mean |accuracy − confidence| over non-empty bins.
pub fn ece(correct: &CorrectnessVector, confidence: &ConfidenceVector, bins: BinningConfig) -> Result<f64> {
    let n = correct.len() as f64;
    Ok(reliability_bins(correct, confidence, bins)?
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| b.count as f64 / n * (b.accuracy - b.mean_confidence).abs())
        .sum())
}

//! Macro-averaged F1, the quality measure behind every selective-prediction metric.

use crate::error::{Error, Result};

/// Per-class true-positive / false-positive / false-negative counts that can be
/// grown one instance at a time (used for prefix scans over confidence order).
#[derive(Debug, Clone)]
pub struct ConfusionCounts {
    tp: Vec<u64>,
    fp: Vec<u64>,
    fn_: Vec<u64>,
}

impl ConfusionCounts {
    pub fn new(class_count: usize) -> Self {
        Self {
            tp: vec![0; class_count],
            fp: vec![0; class_count],
            fn_: vec![0; class_count],
        }
    }

    pub fn add(&mut self, pred: usize, label: usize) {
        if pred == label {
            self.tp[pred] += 1;
        } else {
            self.fp[pred] += 1;
            self.fn_[label] += 1;
        }
    }

    pub fn remove(&mut self, pred: usize, label: usize) {
        if pred == label {
            self.tp[pred] -= 1;
        } else {
            self.fp[pred] -= 1;
            self.fn_[label] -= 1;
        }
    }

    /// Unweighted mean of per-class F1 over the classes that occur among the
    /// predictions or the labels. A class that is predicted but never true
    /// (or true but never predicted) scores 0. Returns 0 for an empty set.
    pub fn macro_f1(&self) -> f64 {
        let mut sum = 0.0;
        let mut present = 0usize;
        for c in 0..self.tp.len() {
            let denom = 2 * self.tp[c] + self.fp[c] + self.fn_[c];
            if denom == 0 {
                continue;
            }
            present += 1;
            sum += (2 * self.tp[c]) as f64 / denom as f64;
        }
        if present == 0 {
            0.0
        } else {
            sum / present as f64
        }
    }
}

pub fn macro_f1(preds: &[usize], labels: &[usize], class_count: usize) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::invalid("macro-F1 of an empty set"));
    }
    if preds.len() != labels.len() {
        return Err(Error::invalid(format!(
            "prediction/label length mismatch: {} vs {}",
            preds.len(),
            labels.len()
        )));
    }
    let mut counts = ConfusionCounts::new(class_count);
    for (&p, &l) in preds.iter().zip(labels) {
        if p >= class_count || l >= class_count {
            return Err(Error::invalid(format!(
                "class index {} out of range for {class_count} classes",
                p.max(l)
            )));
        }
        counts.add(p, l);
    }
    Ok(counts.macro_f1())
}

//! Per-instance classifier outputs and evaluation splits.

use serde::{Deserialize, Serialize};

use crate::confidence::CorrectnessVector;

/// One test instance as exported by a classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub split: String,
    pub fold: u32,
    #[serde(rename = "label")]
    pub true_label: usize,
    /// Deterministic forward-pass class probabilities.
    #[serde(rename = "probs")]
    pub det_probs: Vec<f64>,
    /// One row of class probabilities per stochastic pass.
    pub mc_probs: Vec<Vec<f64>>,
    pub embedding: Vec<f64>,
}

impl PredictionRecord {
    pub fn class_count(&self) -> usize {
        self.det_probs.len()
    }

    pub fn passes(&self) -> usize {
        self.mc_probs.len()
    }

    pub fn dim(&self) -> usize {
        self.embedding.len()
    }

    pub fn predicted_label(&self) -> usize {
        predicted_label(&self.det_probs)
    }
}

/// Argmax of a probability vector; ties go to the lowest class index.
pub fn predicted_label(probs: &[f64]) -> usize {
    let mut best = 0;
    for (c, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = c;
        }
    }
    best
}

/// All records of one (split, fold) evaluation set, in ingestion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSplit {
    pub split: String,
    pub fold: u32,
    pub class_count: usize,
    pub records: Vec<PredictionRecord>,
}

impl EvalSplit {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn predictions(&self) -> Vec<usize> {
        self.records.iter().map(PredictionRecord::predicted_label).collect()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.true_label).collect()
    }

    pub fn correctness(&self) -> CorrectnessVector {
        CorrectnessVector::from_labels(&self.predictions(), &self.labels())
    }

    pub fn embeddings(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.embedding.clone()).collect()
    }
}

/// A labelled training embedding (probability fields are not needed for fitting).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    pub id: String,
    pub split: String,
    pub fold: u32,
    pub label: usize,
    pub embedding: Vec<f64>,
}

/// Training embeddings of one (split, fold) group.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    pub split: String,
    pub fold: u32,
    pub embeddings: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl TrainSet {
    /// Class count implied by the labels (max label + 1).
    pub fn implied_class_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }
}

//! Cross-method aggregation, metric correlation and significance marking.
//!
//! NA values are dropped and counted, never imputed.

mod kendall;

use std::collections::HashSet;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::registry::{Metric, Orientation};

pub use kendall::{kendall_tau, KendallTau};

/// Two-sided significance level used to mark "near best" methods.
pub const NEAR_BEST_ALPHA: f64 = 0.05;

/// A metric value, or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricValue {
    Value(f64),
    Na(String),
}

impl MetricValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            MetricValue::Value(v) => Some(*v),
            MetricValue::Na(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricEntry {
    pub split: String,
    pub fold: u32,
    pub method: String,
    pub metric: String,
    pub value: MetricValue,
}

/// Metric values keyed by (split, fold, method, metric), kept in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    entries: Vec<MetricEntry>,
    keys: HashSet<(String, u32, String, String)>,
}

impl MetricReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: MetricEntry) -> Result<()> {
        let key = (entry.split.clone(), entry.fold, entry.method.clone(), entry.metric.clone());
        if !self.keys.insert(key) {
            return Err(Error::invalid(format!(
                "duplicate metric entry ({}, {}, {}, {})",
                entry.split, entry.fold, entry.method, entry.metric
            )));
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[MetricEntry] {
        &self.entries
    }

    /// Distinct values of a key component, in first-seen order.
    fn distinct<'a>(&'a self, f: impl Fn(&'a MetricEntry) -> &'a str) -> Vec<String> {
        let mut seen = HashSet::new();
        self.entries
            .iter()
            .map(f)
            .filter(|s| seen.insert(*s))
            .map(str::to_string)
            .collect()
    }

    pub fn splits(&self) -> Vec<String> {
        self.distinct(|e| &e.split)
    }

    pub fn methods(&self) -> Vec<String> {
        self.distinct(|e| &e.method)
    }

    pub fn metrics(&self) -> Vec<String> {
        self.distinct(|e| &e.metric)
    }

    pub fn folds(&self, split: &str) -> Vec<u32> {
        let mut f: Vec<u32> = self.entries.iter().filter(|e| e.split == split).map(|e| e.fold).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub fn get(&self, split: &str, fold: u32, method: &str, metric: &str) -> Option<&MetricValue> {
        self.entries
            .iter()
            .find(|e| e.split == split && e.fold == fold && e.method == method && e.metric == metric)
            .map(|e| &e.value)
    }

    /// Per-fold values of one (split, method, metric) in fold order.
    pub fn fold_values(&self, split: &str, method: &str, metric: &str) -> Vec<Option<f64>> {
        let mut v: Vec<(u32, Option<f64>)> = self
            .entries
            .iter()
            .filter(|e| e.split == split && e.method == method && e.metric == metric)
            .map(|e| (e.fold, e.value.value()))
            .collect();
        v.sort_by_key(|p| p.0);
        v.into_iter().map(|p| p.1).collect()
    }
}

/// Maps a metric onto a shared higher-is-better axis: identity, negation, or
/// negative distance to the target.
pub fn benefit_transform(values: &[f64], orientation: Orientation) -> Vec<f64> {
    values
        .iter()
        .map(|&v| match orientation {
            Orientation::HigherBetter => v,
            Orientation::LowerBetter => -v,
            Orientation::Target(t) => -(v - t).abs(),
        })
        .collect()
}

/// [`benefit_transform`] looked up by registry identifier.
pub fn benefit_transform_named(metric: &str, values: &[f64]) -> Result<Vec<f64>> {
    let m: Metric = metric.parse()?;
    Ok(benefit_transform(values, m.orientation()))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Standardizes benefits across methods with the population standard deviation.
/// Fewer than two valid values gives all-NA; zero spread gives zeros.
pub fn zscore_methods(benefits: &[Option<f64>]) -> Vec<Option<f64>> {
    let valid: Vec<f64> = benefits.iter().flatten().copied().collect();
    if valid.len() < 2 {
        return vec![None; benefits.len()];
    }
    let (mean, std) = mean_std(&valid);
    benefits
        .iter()
        .map(|b| b.map(|v| if std == 0.0 { 0.0 } else { (v - mean) / std }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateCell {
    pub mean_z: Option<f64>,
    pub std_z: Option<f64>,
    /// Splits contributing a value.
    pub n_languages: usize,
    /// Splits skipped as NA.
    pub skipped: usize,
}

/// Mean and population standard deviation of z-scores across splits.
pub fn aggregate_cross_language(z: &[Option<f64>]) -> AggregateCell {
    let valid: Vec<f64> = z.iter().flatten().copied().collect();
    let skipped = z.len() - valid.len();
    if valid.is_empty() {
        return AggregateCell { mean_z: None, std_z: None, n_languages: 0, skipped };
    }
    let (mean, std) = mean_std(&valid);
    AggregateCell { mean_z: Some(mean), std_z: Some(std), n_languages: valid.len(), skipped }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Standing {
    Best,
    NearBest,
    Other,
}

impl Standing {
    pub fn label(self) -> &'static str {
        match self {
            Standing::Best => "best",
            Standing::NearBest => "near_best",
            Standing::Other => "other",
        }
    }
}

/// Two-sided paired t-test p-value for fold-wise differences; `None` when the
/// differences have zero variance.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("paired t-test needs at least two folds"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        return Ok(None);
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(Some((2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)))
}

/// Labels the method with the highest mean benefit `Best`, and every other
/// method whose fold-paired difference from it is not significant at 5% `NearBest`.
pub fn near_best(per_fold: &[(String, Vec<f64>)], orientation: Orientation) -> Result<Vec<(String, Standing)>> {
    let Some(folds) = per_fold.first().map(|p| p.1.len()) else {
        return Ok(Vec::new());
    };
    if let Some((name, v)) = per_fold.iter().find(|p| p.1.len() != folds) {
        return Err(Error::invalid(format!("method `{name}` has {} folds, expected {folds}", v.len())));
    }
    if folds < 2 {
        return Err(Error::invalid("near-best marking needs at least two folds"));
    }
    let benefits: Vec<Vec<f64>> = per_fold.iter().map(|p| benefit_transform(&p.1, orientation)).collect();
    let means: Vec<f64> = benefits.iter().map(|b| b.iter().sum::<f64>() / folds as f64).collect();
    let mut best = 0;
    for (i, &m) in means.iter().enumerate() {
        if m > means[best] {
            best = i;
        }
    }
    per_fold
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            let standing = if i == best {
                Standing::Best
            } else {
                match paired_t_test(&benefits[best], &benefits[i])? {
                    None if means[i] == means[best] => Standing::NearBest,
                    None => Standing::Other,
                    Some(p) if p >= NEAR_BEST_ALPHA => Standing::NearBest,
                    Some(_) => Standing::Other,
                }
            };
            Ok((name.clone(), standing))
        })
        .collect()
}

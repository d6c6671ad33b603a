//! Batch stages over grouped data: score, evaluate, sweep, correlate,
//! aggregate. Groups are processed in (split, fold) order and every stage is
//! deterministic given its inputs and seed.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{
    aggregate_cross_language, benefit_transform, kendall_tau, near_best, zscore_methods, AggregateCell, MetricEntry,
    MetricReport, MetricValue, Standing,
};
use crate::confidence::{to_confidence, ConfidenceVector, CorrectnessVector, ScoreVector};
use crate::error::{Error, Result};
use crate::f1::macro_f1;
use crate::features::{IsofModel, LofModel, TrainStats, DEFAULT_LOF_K, DEFAULT_SUBSAMPLE, DEFAULT_TREES};
use crate::hybrid::{huq, DEFAULT_ALPHA};
use crate::metrics::{au_prc, c_slope, citl, ece, roc_auc, BinningConfig};
use crate::prob_scores::ProbabilityProfile;
use crate::record::{EvalSplit, TrainSet};
use crate::registry::{Method, Metric};
use crate::selective::{
    abstention_sweep, e_auoptrc, nrc_auc, rc_auc, rc_auc_baselines, rc_curve, trust_index, TrustMode, TI95_COVERAGE,
};
use crate::synth::derive_seed;

pub const STATS_SCHEMA: &str = "ue-trainstats/1";

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreConfig {
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub lof_k: usize,
    pub isof_trees: usize,
    pub isof_subsample: usize,
    pub seed: u64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            alpha: DEFAULT_ALPHA,
            lof_k: DEFAULT_LOF_K,
            isof_trees: DEFAULT_TREES,
            isof_subsample: DEFAULT_SUBSAMPLE,
            seed: 0,
        }
    }
}

/// Fitted training statistics for one (split, fold).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsEntry {
    pub split: String,
    pub fold: u32,
    #[serde(flatten)]
    pub stats: TrainStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub schema: String,
    pub entries: Vec<StatsEntry>,
}

impl StatsFile {
    pub fn find(&self, split: &str, fold: u32) -> Option<&TrainStats> {
        self.entries.iter().find(|e| e.split == split && e.fold == fold).map(|e| &e.stats)
    }
}

/// Fits class centroids and the pooled covariance for every training group.
pub fn fit_stats(train: &[TrainSet]) -> Result<StatsFile> {
    let entries = train
        .iter()
        .map(|t| {
            let stats = TrainStats::fit(&t.embeddings, &t.labels, t.implied_class_count())?;
            Ok(StatsEntry { split: t.split.clone(), fold: t.fold, stats })
        })
        .collect::<Result<_>>()?;
    Ok(StatsFile { schema: STATS_SCHEMA.to_string(), entries })
}

/// Per-instance scores for one (split, fold).
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub split: String,
    pub fold: u32,
    pub class_count: usize,
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub preds: Vec<usize>,
    pub columns: Vec<ScoreVector>,
    /// Milliseconds spent per method, when measured.
    pub timings: Vec<(String, f64)>,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn correctness(&self) -> CorrectnessVector {
        CorrectnessVector::from_labels(&self.preds, &self.labels)
    }

    pub fn column(&self, method: &str) -> Option<&ScoreVector> {
        self.columns.iter().find(|c| c.method == method)
    }
}

/// Training data available to the scorer.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainingSource<'a> {
    pub sets: &'a [TrainSet],
    pub stats: Option<&'a StatsFile>,
}

impl<'a> TrainingSource<'a> {
    /// Training group with the same (split, fold), or the only group when there is exactly one.
    fn set_for(&self, split: &str, fold: u32) -> Result<&'a TrainSet> {
        if let Some(t) = self.sets.iter().find(|t| t.split == split && t.fold == fold) {
            return Ok(t);
        }
        match self.sets {
            [only] => Ok(only),
            [] => Err(Error::invalid("training embeddings are required for md, huq_md, lof and isof")),
            _ => Err(Error::invalid(format!("no training embeddings for split `{split}` fold {fold}"))),
        }
    }

    fn stats_for(&self, split: &str, fold: u32, class_count: usize) -> Result<TrainStats> {
        let stats = match self.stats {
            Some(file) => match file.find(split, fold).or(match file.entries.as_slice() {
                [only] => Some(&only.stats),
                _ => None,
            }) {
                Some(s) => s.clone(),
                None => return Err(Error::invalid(format!("no training statistics for split `{split}` fold {fold}"))),
            },
            None => {
                let t = self.set_for(split, fold)?;
                TrainStats::fit(&t.embeddings, &t.labels, class_count)?
            }
        };
        if stats.class_count != class_count {
            return Err(Error::invalid(format!(
                "training statistics have {} classes, predictions have {class_count}",
                stats.class_count
            )));
        }
        Ok(stats)
    }
}

fn timed<T>(timing: &mut Vec<(String, f64)>, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f()?;
    timing.push((name.to_string(), start.elapsed().as_secs_f64() * 1e3));
    Ok(out)
}

/// Scores one (split, fold) group with the configured methods.
pub fn score_group(
    group: &EvalSplit,
    train: TrainingSource<'_>,
    config: &ScoreConfig,
    isof_seed: u64,
) -> Result<ScoreTable> {
    if group.is_empty() {
        return Err(Error::invalid(format!("split `{}` fold {} has no records", group.split, group.fold)));
    }
    let profiles: Vec<ProbabilityProfile> = group
        .records
        .iter()
        .map(|r| ProbabilityProfile::new(r.det_probs.clone(), r.mc_probs.clone()))
        .collect();
    let embeddings = group.embeddings();
    let wants = |m: Method| config.methods.contains(&m);
    let needs_stats = wants(Method::Md) || wants(Method::HuqMd);

    let mut timings = Vec::new();
    let mut raw: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    let prob_method = |m: Method| -> fn(&ProbabilityProfile) -> f64 {
        match m {
            Method::Sr => ProbabilityProfile::sr,
            Method::Smp => ProbabilityProfile::smp,
            Method::Ent => ProbabilityProfile::ent,
            Method::EntMc => ProbabilityProfile::ent_mc,
            Method::Pv => ProbabilityProfile::pv,
            _ => ProbabilityProfile::bald,
        }
    };
    for m in [Method::Sr, Method::Smp, Method::Ent, Method::EntMc, Method::Pv, Method::Bald] {
        if wants(m) || (m == Method::Sr && wants(Method::HuqMd)) {
            let f = prob_method(m);
            let v = timed(&mut timings, m.id(), || Ok(profiles.iter().map(f).collect()))?;
            raw.insert(m, v);
        }
    }
    if needs_stats {
        let v = timed(&mut timings, Method::Md.id(), || {
            let stats = train.stats_for(&group.split, group.fold, group.class_count)?;
            embeddings.iter().map(|h| stats.mahalanobis(h)).collect()
        })?;
        raw.insert(Method::Md, v);
    }
    if wants(Method::HuqMd) {
        let v = timed(&mut timings, Method::HuqMd.id(), || huq(&raw[&Method::Md], &raw[&Method::Sr], config.alpha))?;
        raw.insert(Method::HuqMd, v);
    }
    if wants(Method::Lof) {
        let v = timed(&mut timings, Method::Lof.id(), || {
            let t = train.set_for(&group.split, group.fold)?;
            let model = LofModel::fit(&t.embeddings, config.lof_k)?;
            embeddings.iter().map(|h| model.score(h)).collect()
        })?;
        raw.insert(Method::Lof, v);
    }
    if wants(Method::Isof) {
        let v = timed(&mut timings, Method::Isof.id(), || {
            let t = train.set_for(&group.split, group.fold)?;
            let psi = config.isof_subsample.min(t.embeddings.len());
            let model = IsofModel::fit(&t.embeddings, config.isof_trees, psi, isof_seed)?;
            embeddings.iter().map(|h| model.score(h)).collect()
        })?;
        raw.insert(Method::Isof, v);
    }

    let columns = config
        .methods
        .iter()
        .map(|&m| ScoreVector::new(m.id(), raw[&m].clone()))
        .collect::<Result<_>>()?;
    timings.retain(|(name, _)| config.methods.iter().any(|m| m.id() == name));
    Ok(ScoreTable {
        split: group.split.clone(),
        fold: group.fold,
        class_count: group.class_count,
        ids: group.records.iter().map(|r| r.id.clone()).collect(),
        labels: group.labels(),
        preds: group.predictions(),
        columns,
        timings,
    })
}

/// Scores every group; the isolation-forest seed is derived from the global
/// seed, the split's position among distinct splits, and the fold.
pub fn score_all(groups: &[EvalSplit], train: TrainingSource<'_>, config: &ScoreConfig) -> Result<Vec<ScoreTable>> {
    let mut splits: Vec<&str> = groups.iter().map(|g| g.split.as_str()).collect();
    splits.sort_unstable();
    splits.dedup();
    groups
        .iter()
        .map(|g| {
            let si = splits.binary_search(&g.split.as_str()).unwrap_or(0);
            score_group(g, train, config, derive_seed(config.seed, si, g.fold))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub metrics: Vec<Metric>,
    pub bins: BinningConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { metrics: Metric::ALL.to_vec(), bins: BinningConfig::default() }
    }
}

fn as_metric_value(r: Result<f64>) -> Result<MetricValue> {
    match r {
        Ok(v) => Ok(MetricValue::Value(v)),
        Err(Error::Undefined(reason)) => Ok(MetricValue::Na(reason.to_string())),
        Err(e) => Err(e),
    }
}

/// One metric on one score column.
pub fn metric_value(
    metric: Metric,
    table: &ScoreTable,
    scores: &ScoreVector,
    confidence: &ConfidenceVector,
    bins: BinningConfig,
) -> Result<MetricValue> {
    let correct = table.correctness();
    let value = match metric {
        Metric::RocAuc => roc_auc(&correct, confidence),
        Metric::AuPrc => au_prc(&correct, &scores.values).map(|a| a.value),
        Metric::CSlope => c_slope(&correct, confidence).map(|f| f.slope),
        Metric::Citl => citl(&correct, confidence),
        Metric::Ece => ece(&correct, confidence, bins),
        Metric::RcAuc => rc_curve(confidence, &correct).map(|c| rc_auc(&c)),
        Metric::NrcAuc => rc_curve(confidence, &correct)
            .and_then(|c| nrc_auc(rc_auc(&c), rc_auc_baselines(&correct)?)),
        Metric::EAuoptrc => {
            let f1 = macro_f1(&table.preds, &table.labels, table.class_count)?;
            rc_curve(confidence, &correct).and_then(|c| e_auoptrc(&c, f1))
        }
        Metric::Ti => trust_index(confidence, &table.preds, &table.labels, table.class_count, TrustMode::Optimal)
            .map(|t| t.f1),
        Metric::Ti95 => trust_index(
            confidence,
            &table.preds,
            &table.labels,
            table.class_count,
            TrustMode::Fixed(TI95_COVERAGE),
        )
        .map(|t| t.f1),
    };
    as_metric_value(value)
}

/// Every configured metric for every score column of every table.
pub fn evaluate(tables: &[ScoreTable], config: &EvalConfig) -> Result<MetricReport> {
    let mut report = MetricReport::new();
    for table in tables {
        for scores in &table.columns {
            let confidence = to_confidence(scores)?;
            for &metric in &config.metrics {
                report.insert(MetricEntry {
                    split: table.split.clone(),
                    fold: table.fold,
                    method: scores.method.clone(),
                    metric: metric.id().to_string(),
                    value: metric_value(metric, table, scores, &confidence, config.bins)?,
                })?;
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub split: String,
    pub fold: u32,
    pub method: String,
    pub threshold: f64,
    pub rejected_count: usize,
    pub full_f1: f64,
    pub retained_f1: f64,
    pub delta_f1: f64,
    pub pct_incorrect_rejected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub split: String,
    pub fold: u32,
    pub method: String,
    pub coverage: f64,
    pub risk: f64,
}

/// Abstention sweep and risk–coverage points for every score column.
pub fn sweep_all(tables: &[ScoreTable], thresholds: &[f64]) -> Result<(Vec<SweepRecord>, Vec<CurvePoint>)> {
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for t in tables {
        let correct = t.correctness();
        for scores in &t.columns {
            let confidence = to_confidence(scores)?;
            let report = abstention_sweep(&confidence, &t.preds, &t.labels, t.class_count, thresholds)?;
            rows.extend(report.rows.iter().map(|r| SweepRecord {
                split: t.split.clone(),
                fold: t.fold,
                method: scores.method.clone(),
                threshold: r.threshold,
                rejected_count: r.rejected_count,
                full_f1: report.full_f1,
                retained_f1: r.retained_f1,
                delta_f1: r.delta_f1,
                pct_incorrect_rejected: r.pct_incorrect_rejected,
            }));
            let curve = rc_curve(&confidence, &correct)?;
            points.extend(curve.points().into_iter().map(|(coverage, risk)| CurvePoint {
                split: t.split.clone(),
                fold: t.fold,
                method: scores.method.clone(),
                coverage,
                risk,
            }));
        }
    }
    Ok((rows, points))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub language: String,
    pub metric_a: String,
    pub metric_b: String,
    /// Pairs left after dropping NA cells.
    pub n: usize,
    pub tau: Option<f64>,
    pub p: Option<f64>,
}

impl CorrelationRow {
    pub fn significance(&self) -> &'static str {
        match self.p {
            Some(p) if p < 0.01 => "p<0.01",
            Some(p) if p < 0.05 => "p<0.05",
            Some(_) => "ns",
            None => "na",
        }
    }
}

/// Kendall τ between every pair of metrics within each split, over all
/// (method, fold) cells of that split.
pub fn correlate(report: &MetricReport) -> Result<Vec<CorrelationRow>> {
    let metrics = report.metrics();
    let methods = report.methods();
    let mut rows = Vec::new();
    for split in report.splits() {
        let folds = report.folds(&split);
        let cell = |metric: &str| -> Vec<Option<f64>> {
            methods
                .iter()
                .flat_map(|m| folds.iter().map(move |&f| (m, f)))
                .map(|(m, f)| report.get(&split, f, m, metric).and_then(MetricValue::value))
                .collect()
        };
        let columns: Vec<Vec<Option<f64>>> = metrics.iter().map(|m| cell(m)).collect();
        for a in 0..metrics.len() {
            for b in a + 1..metrics.len() {
                let (x, y): (Vec<f64>, Vec<f64>) = columns[a]
                    .iter()
                    .zip(&columns[b])
                    .filter_map(|(u, v)| Some(((*u)?, (*v)?)))
                    .unzip();
                let (tau, p) = match kendall_tau(&x, &y) {
                    Ok(k) => (Some(k.tau_b), Some(k.p_value)),
                    Err(Error::Undefined(_)) | Err(Error::InvalidInput(_)) => (None, None),
                    Err(e) => return Err(e),
                };
                rows.push(CorrelationRow {
                    language: split.clone(),
                    metric_a: metrics[a].clone(),
                    metric_b: metrics[b].clone(),
                    n: x.len(),
                    tau,
                    p,
                });
            }
        }
    }
    Ok(rows)
}

fn orientation_of(metric: &str) -> Result<crate::registry::Orientation> {
    Ok(metric.parse::<Metric>()?.orientation())
}

fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZScoreRow {
    pub split: String,
    pub metric: String,
    pub method: String,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: String,
    pub metric: String,
    pub cell: AggregateCell,
}

/// Per-split z-scores of fold-mean benefits across methods, then their mean
/// and spread across splits for every (method, metric).
pub fn aggregate(report: &MetricReport) -> Result<(Vec<ZScoreRow>, Vec<AggregateRow>)> {
    let methods = report.methods();
    let metrics = report.metrics();
    let splits = report.splits();
    let mut z_rows = Vec::new();
    let mut z_by_cell: BTreeMap<(usize, usize), Vec<Option<f64>>> = BTreeMap::new();
    for split in &splits {
        for (mi, metric) in metrics.iter().enumerate() {
            let orientation = orientation_of(metric)?;
            let benefits: Vec<Option<f64>> = methods
                .iter()
                .map(|m| {
                    mean_of(&report.fold_values(split, m, metric))
                        .map(|v| benefit_transform(&[v], orientation)[0])
                })
                .collect();
            for (ki, z) in zscore_methods(&benefits).into_iter().enumerate() {
                z_by_cell.entry((ki, mi)).or_default().push(z);
                z_rows.push(ZScoreRow {
                    split: split.clone(),
                    metric: metric.clone(),
                    method: methods[ki].clone(),
                    z,
                });
            }
        }
    }
    let mut cells = Vec::new();
    for (ki, method) in methods.iter().enumerate() {
        for (mi, metric) in metrics.iter().enumerate() {
            let z = z_by_cell.get(&(ki, mi)).map(Vec::as_slice).unwrap_or(&[]);
            cells.push(AggregateRow {
                method: method.clone(),
                metric: metric.clone(),
                cell: aggregate_cross_language(z),
            });
        }
    }
    Ok((z_rows, cells))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StandingRow {
    pub split: String,
    pub metric: String,
    pub method: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    /// `None` when the method has NA folds or fewer than two folds exist.
    pub standing: Option<Standing>,
}

/// Fold mean and spread of every (split, metric, method), marked best /
/// near-best against the other methods with complete folds.
pub fn near_best_table(report: &MetricReport) -> Result<Vec<StandingRow>> {
    let methods = report.methods();
    let mut rows = Vec::new();
    for split in report.splits() {
        for metric in report.metrics() {
            let orientation = orientation_of(&metric)?;
            let per_method: Vec<(String, Vec<Option<f64>>)> =
                methods.iter().map(|m| (m.clone(), report.fold_values(&split, m, &metric))).collect();
            let complete: Vec<(String, Vec<f64>)> = per_method
                .iter()
                .filter_map(|(m, v)| Some((m.clone(), v.iter().copied().collect::<Option<Vec<f64>>>()?)))
                .collect();
            let folds = complete.first().map_or(0, |c| c.1.len());
            let standings = if folds >= 2 && complete.iter().all(|c| c.1.len() == folds) {
                near_best(&complete, orientation)?
            } else {
                Vec::new()
            };
            for (method, values) in &per_method {
                let valid: Vec<f64> = values.iter().flatten().copied().collect();
                let mean = mean_of(values);
                let std = mean.map(|mu| {
                    (valid.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / valid.len() as f64).sqrt()
                });
                rows.push(StandingRow {
                    split: split.clone(),
                    metric: metric.clone(),
                    method: method.clone(),
                    mean,
                    std,
                    standing: standings.iter().find(|s| &s.0 == method).map(|s| s.1),
                });
            }
        }
    }
    Ok(rows)
}

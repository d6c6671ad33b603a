//! Interchange file ingestion and serialization.
//!
//! One JSON object per line:
//! `{"id", "split", "fold", "label", "probs", "mc_probs", "embedding"}`,
//! optionally preceded by a header `{"schema": "ue-interchange/1", "C", "T", "D"}`.
//! Training files use the same layout; `probs` and `mc_probs` may be omitted.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::record::{EvalSplit, PredictionRecord, TrainRecord, TrainSet};

pub const SCHEMA_VERSION: &str = "ue-interchange/1";

/// Probability rows within this distance of 1 are renormalized, beyond it rejected.
pub const PROB_SUM_TOLERANCE: f64 = 1e-3;

// Rows already within float noise of 1 are left bit-identical so that
// write → read cycles are lossless.
const RENORMALIZE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    #[serde(rename = "C")]
    pub class_count: usize,
    #[serde(rename = "T")]
    pub passes: usize,
    #[serde(rename = "D")]
    pub dim: usize,
}

#[derive(Serialize)]
struct HeaderLine<'a> {
    schema: &'a str,
    #[serde(flatten)]
    header: Header,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    split: String,
    fold: u32,
    label: usize,
    #[serde(default)]
    probs: Option<Vec<f64>>,
    #[serde(default)]
    mc_probs: Option<Vec<Vec<f64>>>,
    embedding: Vec<f64>,
}

#[derive(Serialize)]
struct TrainLine<'a> {
    id: &'a str,
    split: &'a str,
    fold: u32,
    label: usize,
    embedding: &'a [f64],
}

enum Line {
    Header(Option<Header>),
    Record(RawRecord),
}

fn parse_line(text: &str, line: usize) -> Result<Line> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Malformed {
        line,
        message: e.to_string(),
    })?;
    if let Some(schema) = value.get("schema") {
        let schema = schema.as_str().unwrap_or_default();
        if schema != SCHEMA_VERSION {
            return Err(Error::Schema(schema.to_string()));
        }
        let has_dims = value.get("C").is_some() || value.get("T").is_some() || value.get("D").is_some();
        let header = if has_dims {
            Some(serde_json::from_value::<Header>(value).map_err(|e| Error::Malformed {
                line,
                message: format!("header: {e}"),
            })?)
        } else {
            None
        };
        return Ok(Line::Header(header));
    }
    serde_json::from_value::<RawRecord>(value)
        .map(Line::Record)
        .map_err(|e| Error::Malformed { line, message: e.to_string() })
}

fn check_finite(values: &[f64], line: usize, field: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { line, field })
    }
}

fn normalize_row(row: &mut [f64], line: usize, field: &'static str) -> Result<()> {
    check_finite(row, line, field)?;
    if let Some(&v) = row.iter().find(|&&v| v < 0.0) {
        return Err(Error::Malformed {
            line,
            message: format!("negative probability {v} in `{field}`"),
        });
    }
    let sum: f64 = row.iter().sum();
    let dev = (sum - 1.0).abs();
    if dev > PROB_SUM_TOLERANCE {
        return Err(Error::ProbabilitySum { line, sum });
    }
    if dev > RENORMALIZE_EPS {
        row.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(())
}

#[derive(Clone, Copy)]
struct Dims {
    classes: usize,
    passes: usize,
    dim: usize,
}

/// Records tagged with their 1-based line number.
type NumberedRecords = Vec<(usize, RawRecord)>;

fn read_lines<R: BufRead>(reader: R) -> Result<(Option<Header>, NumberedRecords)> {
    let mut header = None;
    let mut records = Vec::new();
    let mut first = true;
    for (idx, text) in reader.lines().enumerate() {
        let line = idx + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        match parse_line(&text, line)? {
            Line::Header(h) => {
                if !first {
                    return Err(Error::Malformed {
                        line,
                        message: "header must be the first line".into(),
                    });
                }
                header = h;
            }
            Line::Record(r) => records.push((line, r)),
        }
        first = false;
    }
    Ok((header, records))
}

fn check_header(header: Option<Header>, dims: Dims, line: usize) -> Result<()> {
    if let Some(h) = header {
        if (h.class_count, h.passes, h.dim) != (dims.classes, dims.passes, dims.dim) {
            return Err(Error::Dimension {
                line,
                message: format!(
                    "record has C={} T={} D={}, header declares C={} T={} D={}",
                    dims.classes, dims.passes, dims.dim, h.class_count, h.passes, h.dim
                ),
            });
        }
    }
    Ok(())
}

fn check_split_dims(
    seen: &mut HashMap<String, Dims>,
    split: &str,
    dims: Dims,
    line: usize,
    check_probs: bool,
) -> Result<()> {
    let first = *seen.entry(split.to_string()).or_insert(dims);
    let same = first.dim == dims.dim
        && (!check_probs || (first.classes == dims.classes && first.passes == dims.passes));
    if !same {
        return Err(Error::Dimension {
            line,
            message: format!(
                "split `{split}` mixes shapes (C={} T={} D={} vs C={} T={} D={})",
                first.classes, first.passes, first.dim, dims.classes, dims.passes, dims.dim
            ),
        });
    }
    Ok(())
}

fn validate_prediction(line: usize, raw: RawRecord, header: Option<Header>) -> Result<PredictionRecord> {
    let mut probs = raw.probs.ok_or_else(|| Error::Malformed {
        line,
        message: "missing field `probs`".into(),
    })?;
    let mut passes = raw.mc_probs.ok_or_else(|| Error::Malformed {
        line,
        message: "missing field `mc_probs`".into(),
    })?;
    check_finite(&raw.embedding, line, "embedding")?;
    let classes = probs.len();
    if classes < 2 {
        return Err(Error::Dimension { line, message: format!("need at least 2 classes, got {classes}") });
    }
    if passes.is_empty() {
        return Err(Error::Dimension { line, message: "need at least one stochastic pass".into() });
    }
    if raw.embedding.is_empty() {
        return Err(Error::Dimension { line, message: "empty embedding".into() });
    }
    if let Some(row) = passes.iter().find(|r| r.len() != classes) {
        return Err(Error::Dimension {
            line,
            message: format!("mc_probs row has {} entries, probs has {classes}", row.len()),
        });
    }
    if raw.label >= classes {
        return Err(Error::Dimension {
            line,
            message: format!("label {} out of range for {classes} classes", raw.label),
        });
    }
    normalize_row(&mut probs, line, "probs")?;
    for row in &mut passes {
        normalize_row(row, line, "mc_probs")?;
    }
    check_header(
        header,
        Dims { classes, passes: passes.len(), dim: raw.embedding.len() },
        line,
    )?;
    Ok(PredictionRecord {
        id: raw.id,
        split: raw.split,
        fold: raw.fold,
        true_label: raw.label,
        det_probs: probs,
        mc_probs: passes,
        embedding: raw.embedding,
    })
}

/// Reads prediction records, grouped by (split, fold) in key order with
/// ingestion order preserved inside each group.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<EvalSplit>> {
    let (header, raw) = read_lines(reader)?;
    let mut dims_by_split = HashMap::new();
    let mut ids: HashSet<(String, u32, String)> = HashSet::new();
    let mut groups: BTreeMap<(String, u32), Vec<PredictionRecord>> = BTreeMap::new();
    for (line, raw) in raw {
        let record = validate_prediction(line, raw, header)?;
        let dims = Dims { classes: record.class_count(), passes: record.passes(), dim: record.dim() };
        check_split_dims(&mut dims_by_split, &record.split, dims, line, true)?;
        if !ids.insert((record.split.clone(), record.fold, record.id.clone())) {
            return Err(Error::Malformed {
                line,
                message: format!("duplicate id `{}` in split `{}` fold {}", record.id, record.split, record.fold),
            });
        }
        groups.entry((record.split.clone(), record.fold)).or_default().push(record);
    }
    Ok(groups
        .into_iter()
        .map(|((split, fold), records)| EvalSplit {
            class_count: records[0].class_count(),
            split,
            fold,
            records,
        })
        .collect())
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<EvalSplit>> {
    read_records(BufReader::new(File::open(path)?))
}

/// Reads training embeddings. Probability fields are validated when present
/// but not retained.
pub fn read_training<R: BufRead>(reader: R) -> Result<Vec<TrainSet>> {
    let (header, raw) = read_lines(reader)?;
    let mut dims_by_split = HashMap::new();
    let mut groups: BTreeMap<(String, u32), Vec<TrainRecord>> = BTreeMap::new();
    for (line, raw) in raw {
        check_finite(&raw.embedding, line, "embedding")?;
        if raw.embedding.is_empty() {
            return Err(Error::Dimension { line, message: "empty embedding".into() });
        }
        if let Some(mut probs) = raw.probs {
            normalize_row(&mut probs, line, "probs")?;
        }
        if let Some(h) = header {
            if raw.embedding.len() != h.dim {
                return Err(Error::Dimension {
                    line,
                    message: format!("embedding has D={}, header declares D={}", raw.embedding.len(), h.dim),
                });
            }
            if raw.label >= h.class_count {
                return Err(Error::Dimension {
                    line,
                    message: format!("label {} out of range for {} classes", raw.label, h.class_count),
                });
            }
        }
        let dims = Dims { classes: 0, passes: 0, dim: raw.embedding.len() };
        check_split_dims(&mut dims_by_split, &raw.split, dims, line, false)?;
        groups.entry((raw.split.clone(), raw.fold)).or_default().push(TrainRecord {
            id: raw.id,
            split: raw.split,
            fold: raw.fold,
            label: raw.label,
            embedding: raw.embedding,
        });
    }
    Ok(groups
        .into_iter()
        .map(|((split, fold), records)| TrainSet {
            split,
            fold,
            labels: records.iter().map(|r| r.label).collect(),
            embeddings: records.into_iter().map(|r| r.embedding).collect(),
        })
        .collect())
}

pub fn load_training(path: impl AsRef<Path>) -> Result<Vec<TrainSet>> {
    read_training(BufReader::new(File::open(path)?))
}

/// Writes prediction records with a header derived from the first record.
pub fn write_records<W: Write>(mut out: W, records: &[PredictionRecord]) -> Result<()> {
    if let Some(first) = records.first() {
        let header = Header { class_count: first.class_count(), passes: first.passes(), dim: first.dim() };
        serde_json::to_writer(&mut out, &HeaderLine { schema: SCHEMA_VERSION, header })?;
        out.write_all(b"\n")?;
    }
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_records(path: impl AsRef<Path>, records: &[PredictionRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_records(&mut w, records)?;
    w.flush()?;
    Ok(())
}

pub fn write_training<W: Write>(mut out: W, records: &[TrainRecord]) -> Result<()> {
    for r in records {
        let line = TrainLine { id: &r.id, split: &r.split, fold: r.fold, label: r.label, embedding: &r.embedding };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_training(path: impl AsRef<Path>, records: &[TrainRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_training(&mut w, records)?;
    w.flush()?;
    Ok(())
}

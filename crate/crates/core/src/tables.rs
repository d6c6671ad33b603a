//! CSV serialization of pipeline outputs. Every file starts with a provenance
//! comment (`# uekit <version> seed=<seed> config=<sha256>`) followed by a
//! header row. Floats use the shortest round-trip representation.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use crate::analysis::{MetricEntry, MetricReport, MetricValue};
use crate::confidence::ScoreVector;
use crate::error::{Error, Result};
use crate::pipeline::{AggregateRow, CorrelationRow, CurvePoint, ScoreTable, StandingRow, SweepRecord, ZScoreRow};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const SCORE_KEYS: [&str; 6] = ["split", "fold", "id", "label", "pred", "class_count"];
const TIMING_PREFIX: &str = "wall_ms_";

/// Seed and configuration fingerprint stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    /// Hashes `key=value` lines in the given order.
    pub fn new(seed: u64, params: &[(&str, String)]) -> Self {
        let mut h = Sha256::new();
        for (k, v) in params {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        Self { seed, config_hash: hex::encode(h.finalize()) }
    }

    pub fn line(&self) -> String {
        format!("# uekit {TOOL_VERSION} seed={} config={}", self.seed, self.config_hash)
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

fn writer<W: Write>(mut out: W, prov: &Provenance, header: &[&str]) -> Result<csv::Writer<W>> {
    writeln!(out, "{}", prov.line())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    Ok(w)
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| Error::Csv(e.to_string()))?.flush()?;
    Ok(())
}

/// Header names and string rows of a provenance-stamped CSV.
pub fn read_table<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let headers = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()).map_err(csv_err))
        .collect::<Result<_>>()?;
    Ok((headers, rows))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Csv(format!("row {line}: invalid {what} `{s}`")))
}

fn parse_opt(s: &str, what: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse(s, what, line).map(Some)
    }
}

fn column(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Csv(format!("missing column `{name}`")))
}

pub fn write_scores<W: Write>(out: W, tables: &[ScoreTable], prov: &Provenance, timing: bool) -> Result<()> {
    let Some(first) = tables.first() else {
        return Err(Error::invalid("no score tables to write"));
    };
    let methods: Vec<&str> = first.columns.iter().map(|c| c.method.as_str()).collect();
    let timing_names: Vec<String> = methods.iter().map(|m| format!("{TIMING_PREFIX}{m}")).collect();
    let mut header: Vec<&str> = SCORE_KEYS.to_vec();
    header.extend(&methods);
    if timing {
        header.extend(timing_names.iter().map(String::as_str));
    }
    let mut w = writer(out, prov, &header)?;
    for t in tables {
        let names: Vec<&str> = t.columns.iter().map(|c| c.method.as_str()).collect();
        if names != methods {
            return Err(Error::invalid("score tables disagree on method columns"));
        }
        let times: Vec<String> = methods
            .iter()
            .map(|m| fmt_opt(t.timings.iter().find(|(n, _)| n == m).map(|p| p.1)))
            .collect();
        for i in 0..t.len() {
            let mut row = vec![
                t.split.clone(),
                t.fold.to_string(),
                t.ids[i].clone(),
                t.labels[i].to_string(),
                t.preds[i].to_string(),
                t.class_count.to_string(),
            ];
            row.extend(t.columns.iter().map(|c| fmt_f64(c.values[i])));
            if timing {
                row.extend(times.iter().cloned());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    finish(w)
}

/// Reads a score CSV back into per-(split, fold) tables, ordered by key.
pub fn read_scores<R: Read>(input: R) -> Result<Vec<ScoreTable>> {
    let (headers, rows) = read_table(input)?;
    let keys: Vec<usize> = SCORE_KEYS.iter().map(|k| column(&headers, k)).collect::<Result<_>>()?;
    let method_cols: Vec<(usize, &String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !SCORE_KEYS.contains(&h.as_str()) && !h.starts_with(TIMING_PREFIX))
        .collect();
    let mut groups: BTreeMap<(String, u32), ScoreTable> = BTreeMap::new();
    for (n, row) in rows.iter().enumerate() {
        let line = n + 1;
        let split = row[keys[0]].clone();
        let fold: u32 = parse(&row[keys[1]], "fold", line)?;
        let class_count: usize = parse(&row[keys[5]], "class_count", line)?;
        let t = groups.entry((split.clone(), fold)).or_insert_with(|| ScoreTable {
            split,
            fold,
            class_count,
            ids: Vec::new(),
            labels: Vec::new(),
            preds: Vec::new(),
            columns: method_cols
                .iter()
                .map(|(_, m)| ScoreVector { method: m.to_string(), values: Vec::new() })
                .collect(),
            timings: Vec::new(),
        });
        if t.class_count != class_count {
            return Err(Error::Csv(format!("row {line}: class count changes within a group")));
        }
        t.ids.push(row[keys[2]].clone());
        t.labels.push(parse(&row[keys[3]], "label", line)?);
        t.preds.push(parse(&row[keys[4]], "pred", line)?);
        for (c, (idx, name)) in method_cols.iter().enumerate() {
            let v: f64 = parse(&row[*idx], name, line)?;
            if !v.is_finite() {
                return Err(Error::Csv(format!("row {line}: non-finite score in `{name}`")));
            }
            t.columns[c].values.push(v);
        }
    }
    Ok(groups.into_values().collect())
}

pub fn write_report<W: Write>(out: W, report: &MetricReport, prov: &Provenance) -> Result<()> {
    let mut w = writer(out, prov, &["split", "fold", "method", "metric", "value", "note"])?;
    for e in report.entries() {
        let (value, note) = match &e.value {
            MetricValue::Value(v) => (fmt_f64(*v), String::new()),
            MetricValue::Na(reason) => (String::new(), reason.clone()),
        };
        w.write_record([e.split.as_str(), &e.fold.to_string(), &e.method, &e.metric, &value, &note])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn read_report<R: Read>(input: R) -> Result<MetricReport> {
    let (headers, rows) = read_table(input)?;
    let idx: Vec<usize> = ["split", "fold", "method", "metric", "value", "note"]
        .iter()
        .map(|k| column(&headers, k))
        .collect::<Result<_>>()?;
    let mut report = MetricReport::new();
    for (n, row) in rows.iter().enumerate() {
        let value = match parse_opt(&row[idx[4]], "value", n + 1)? {
            Some(v) => MetricValue::Value(v),
            None => MetricValue::Na(row[idx[5]].clone()),
        };
        report.insert(MetricEntry {
            split: row[idx[0]].clone(),
            fold: parse(&row[idx[1]], "fold", n + 1)?,
            method: row[idx[2]].clone(),
            metric: row[idx[3]].clone(),
            value,
        })?;
    }
    Ok(report)
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRecord], prov: &Provenance) -> Result<()> {
    let mut w = writer(
        out,
        prov,
        &[
            "split",
            "fold",
            "method",
            "threshold",
            "rejected_count",
            "full_f1",
            "retained_f1",
            "delta_f1",
            "pct_incorrect_rejected",
        ],
    )?;
    for r in rows {
        w.write_record([
            r.split.clone(),
            r.fold.to_string(),
            r.method.clone(),
            fmt_f64(r.threshold),
            r.rejected_count.to_string(),
            fmt_f64(r.full_f1),
            fmt_f64(r.retained_f1),
            fmt_f64(r.delta_f1),
            fmt_f64(r.pct_incorrect_rejected),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_curves<W: Write>(out: W, points: &[CurvePoint], prov: &Provenance) -> Result<()> {
    let mut w = writer(out, prov, &["split", "fold", "method", "coverage", "risk"])?;
    for p in points {
        w.write_record([p.split.clone(), p.fold.to_string(), p.method.clone(), fmt_f64(p.coverage), fmt_f64(p.risk)])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_correlations<W: Write>(out: W, rows: &[CorrelationRow], prov: &Provenance) -> Result<()> {
    let mut w = writer(out, prov, &["language", "metric_a", "metric_b", "n", "tau", "p", "significance"])?;
    for r in rows {
        w.write_record([
            r.language.clone(),
            r.metric_a.clone(),
            r.metric_b.clone(),
            r.n.to_string(),
            fmt_opt(r.tau),
            fmt_opt(r.p),
            r.significance().to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_aggregate<W: Write>(out: W, rows: &[AggregateRow], prov: &Provenance) -> Result<()> {
    let mut w = writer(out, prov, &["method", "metric", "mean_z", "std_z", "n_languages", "skipped"])?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.metric.clone(),
            fmt_opt(r.cell.mean_z),
            fmt_opt(r.cell.std_z),
            r.cell.n_languages.to_string(),
            r.cell.skipped.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_zscores<W: Write>(out: W, rows: &[ZScoreRow], prov: &Provenance) -> Result<()> {
    let mut w = writer(out, prov, &["split", "metric", "method", "z"])?;
    for r in rows {
        w.write_record([r.split.clone(), r.metric.clone(), r.method.clone(), fmt_opt(r.z)])
            .map_err(csv_err)?;
    }
    finish(w)
}

pub fn write_near_best<W: Write>(out: W, rows: &[StandingRow], prov: &Provenance) -> Result<()> {
    let mut w = writer(out, prov, &["split", "metric", "method", "mean", "std", "standing"])?;
    for r in rows {
        w.write_record([
            r.split.clone(),
            r.metric.clone(),
            r.method.clone(),
            fmt_opt(r.mean),
            fmt_opt(r.std),
            r.standing.map_or("na", |s| s.label()).to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance::new(3, &[("alpha", "0.5".to_string())])
    }

    fn table() -> ScoreTable {
        ScoreTable {
            split: "en".into(),
            fold: 1,
            class_count: 2,
            ids: vec!["a".into(), "b".into()],
            labels: vec![0, 1],
            preds: vec![0, 0],
            columns: vec![
                ScoreVector::new("sr", vec![0.1, 0.30000000000000004]).unwrap(),
                ScoreVector::new("md", vec![1e-300, 12.5]).unwrap(),
            ],
            timings: vec![("sr".into(), 0.25), ("md".into(), 1.5)],
        }
    }

    #[test]
    fn provenance_line_shape() {
        let line = prov().line();
        assert!(line.starts_with(&format!("# uekit {TOOL_VERSION} seed=3 config=")));
        assert_eq!(prov().config_hash.len(), 64);
        assert_ne!(prov(), Provenance::new(3, &[("alpha", "0.6".to_string())]));
    }

    #[test]
    fn scores_round_trip_exactly() {
        let mut buf = Vec::new();
        write_scores(&mut buf, &[table()], &prov(), true).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1).unwrap().ends_with("wall_ms_sr,wall_ms_md"));
        let back = read_scores(buf.as_slice()).unwrap();
        let mut expected = table();
        expected.timings.clear();
        assert_eq!(back, vec![expected]);
    }

    #[test]
    fn report_round_trip_keeps_na() {
        let mut report = MetricReport::new();
        for (metric, value) in [
            ("roc_auc", MetricValue::Value(0.75)),
            ("c_slope", MetricValue::Na("constant confidence".into())),
        ] {
            report
                .insert(MetricEntry {
                    split: "en".into(),
                    fold: 0,
                    method: "sr".into(),
                    metric: metric.into(),
                    value,
                })
                .unwrap();
        }
        let mut buf = Vec::new();
        write_report(&mut buf, &report, &prov()).unwrap();
        assert_eq!(read_report(buf.as_slice()).unwrap(), report);
    }

    #[test]
    fn malformed_score_rows_are_rejected() {
        let text = "split,fold,id,label,pred,class_count,sr\nen,x,a,0,0,2,0.1\n";
        assert!(matches!(read_scores(text.as_bytes()), Err(Error::Csv(_))));
        let text = "split,fold,id,label,class_count,sr\nen,0,a,0,2,0.1\n";
        assert!(read_scores(text.as_bytes()).is_err());
    }
}

//! Markdown summary assembled from the CSV outputs in one directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use crate::error::Result;
use crate::registry::{Method, Metric};
use crate::tables::read_table;

/// Parsed CSV keyed by column name.
struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn load(path: &Path) -> Result<Option<Self>> {
        if !path.exists() {
            return Ok(None);
        }
        let (headers, rows) = read_table(File::open(path)?)?;
        Ok(Some(Self { headers, rows }))
    }

    fn get<'a>(&self, row: &'a [String], name: &str) -> &'a str {
        self.headers.iter().position(|h| h == name).map_or("", |i| row[i].as_str())
    }
}

/// Registry order first, unknown names after in first-seen order.
fn ordered(names: impl IntoIterator<Item = String>, registry: &[&str]) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for n in names {
        if !seen.contains(&n) {
            seen.push(n);
        }
    }
    seen.sort_by_key(|n| registry.iter().position(|r| r == n).unwrap_or(usize::MAX));
    seen
}

fn short(v: &str) -> String {
    v.parse::<f64>().map_or_else(|_| "NA".to_string(), |x| format!("{x:.3}"))
}

fn methods_registry() -> Vec<&'static str> {
    Method::ALL.map(Method::id).to_vec()
}

fn metrics_registry() -> Vec<&'static str> {
    Metric::ALL.map(Metric::id).to_vec()
}

fn standings_section(out: &mut String, t: &Table) {
    let methods = ordered(t.rows.iter().map(|r| t.get(r, "method").to_string()), &methods_registry());
    let metrics = ordered(t.rows.iter().map(|r| t.get(r, "metric").to_string()), &metrics_registry());
    let mut by_split: BTreeMap<String, BTreeMap<(String, String), String>> = BTreeMap::new();
    for r in &t.rows {
        let mark = match t.get(r, "standing") {
            "best" => "**",
            "near_best" => "*",
            _ => "",
        };
        let cell = format!("{mark}{} ± {}{mark}", short(t.get(r, "mean")), short(t.get(r, "std")));
        by_split
            .entry(t.get(r, "split").to_string())
            .or_default()
            .insert((t.get(r, "metric").to_string(), t.get(r, "method").to_string()), cell);
    }
    out.push_str("## Per-split fold mean ± std\n\n");
    out.push_str("Bold: best. Italic: not significantly different from the best (paired t-test, p ≥ 0.05).\n\n");
    for (split, cells) in by_split {
        let _ = writeln!(out, "### {split}\n");
        let _ = writeln!(out, "| metric | {} |", methods.join(" | "));
        let _ = writeln!(out, "|---|{}", "---|".repeat(methods.len()));
        for metric in &metrics {
            let row: Vec<String> = methods
                .iter()
                .map(|m| cells.get(&(metric.clone(), m.clone())).cloned().unwrap_or_default())
                .collect();
            let _ = writeln!(out, "| {metric} | {} |", row.join(" | "));
        }
        out.push('\n');
    }
}

fn aggregate_section(out: &mut String, t: &Table) {
    let methods = ordered(t.rows.iter().map(|r| t.get(r, "method").to_string()), &methods_registry());
    let metrics = ordered(t.rows.iter().map(|r| t.get(r, "metric").to_string()), &metrics_registry());
    let cells: BTreeMap<(String, String), String> = t
        .rows
        .iter()
        .map(|r| {
            (
                (t.get(r, "method").to_string(), t.get(r, "metric").to_string()),
                format!("{} ({})", short(t.get(r, "mean_z")), short(t.get(r, "std_z"))),
            )
        })
        .collect();
    out.push_str("## Cross-split z-scores\n\n");
    out.push_str("Mean z of the direction-aware benefit (std across splits in parentheses). Higher is better.\n\n");
    let _ = writeln!(out, "| method | {} |", metrics.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(metrics.len()));
    for m in &methods {
        let row: Vec<String> = metrics
            .iter()
            .map(|k| cells.get(&(m.clone(), k.clone())).cloned().unwrap_or_default())
            .collect();
        let _ = writeln!(out, "| {m} | {} |", row.join(" | "));
    }
    out.push('\n');
}

fn sweep_section(out: &mut String, t: &Table) {
    let methods = ordered(t.rows.iter().map(|r| t.get(r, "method").to_string()), &methods_registry());
    let mut thresholds: Vec<String> = Vec::new();
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for r in &t.rows {
        let th = t.get(r, "threshold").to_string();
        if !thresholds.contains(&th) {
            thresholds.push(th.clone());
        }
        if let Ok(v) = t.get(r, "delta_f1").parse::<f64>() {
            let e = sums.entry((t.get(r, "method").to_string(), th)).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    out.push_str("## Abstention sweep\n\n");
    out.push_str("Mean macro-F1 change (percentage points) after rejecting the least confident fraction.\n\n");
    let header: Vec<String> = thresholds.iter().map(|t| format!("θ={t}")).collect();
    let _ = writeln!(out, "| method | {} |", header.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(thresholds.len()));
    for m in &methods {
        let row: Vec<String> = thresholds
            .iter()
            .map(|th| {
                sums.get(&(m.clone(), th.clone()))
                    .map_or_else(String::new, |(s, n)| format!("{:+.2}", s / *n as f64))
            })
            .collect();
        let _ = writeln!(out, "| {m} | {} |", row.join(" | "));
    }
    out.push('\n');
}

fn correlation_section(out: &mut String, t: &Table) {
    out.push_str("## Metric correlations\n\n");
    out.push_str("Kendall τ over all (method, fold) cells of each split. Only pairs with p < 0.05 are listed.\n\n");
    out.push_str("| split | metric a | metric b | τ | p |\n|---|---|---|---|---|\n");
    let mut any = false;
    for r in &t.rows {
        if matches!(t.get(r, "significance"), "p<0.01" | "p<0.05") {
            any = true;
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                t.get(r, "language"),
                t.get(r, "metric_a"),
                t.get(r, "metric_b"),
                short(t.get(r, "tau")),
                t.get(r, "significance")
            );
        }
    }
    if !any {
        out.push_str("| | | | | |\n");
    }
    out.push('\n');
}

fn eval_section(out: &mut String, t: &Table) {
    let na: Vec<&Vec<String>> = t.rows.iter().filter(|r| t.get(r, "value").is_empty()).collect();
    let _ = writeln!(out, "## Evaluation\n\n{} metric values, {} NA.\n", t.rows.len(), na.len());
    for r in na {
        let _ = writeln!(
            out,
            "- {} fold {} {} {}: {}",
            t.get(r, "split"),
            t.get(r, "fold"),
            t.get(r, "method"),
            t.get(r, "metric"),
            t.get(r, "note")
        );
    }
    if !out.ends_with("\n\n") {
        out.push('\n');
    }
}

/// Renders whichever of `eval.csv`, `near_best.csv`, `aggregate.csv`,
/// `sweep.csv` and `correlations.csv` exist in `dir`.
pub fn render(dir: &Path, provenance: &str) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "<!-- {} -->\n", provenance.trim_start_matches("# "));
    out.push_str("# Uncertainty estimation report\n\n");
    out.push_str(
        "C-Slope is the fitted slope of correctness on confidence (ideal 1). Its over/underconfidence reading \
         is reported inconsistently in the literature, so only distance from 1 is scored.\n\n",
    );
    if let Some(t) = Table::load(&dir.join("eval.csv"))? {
        eval_section(&mut out, &t);
    }
    if let Some(t) = Table::load(&dir.join("near_best.csv"))? {
        standings_section(&mut out, &t);
    }
    if let Some(t) = Table::load(&dir.join("aggregate.csv"))? {
        aggregate_section(&mut out, &t);
    }
    if let Some(t) = Table::load(&dir.join("sweep.csv"))? {
        sweep_section(&mut out, &t);
    }
    if let Some(t) = Table::load(&dir.join("correlations.csv"))? {
        correlation_section(&mut out, &t);
    }
    Ok(out)
}

//! One line per acceptance criterion. Runs as a plain binary so the lines are
//! always visible in `cargo test` output.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use uekit::analysis::kendall_tau;
use uekit::confidence::{to_confidence, ConfidenceVector, CorrectnessVector, ScoreVector};
use uekit::features::{LofModel, TrainStats};
use uekit::metrics::{self, BinningConfig};
use uekit::prob_scores::{bald, bald_raw, ent, pv, smp, sr};
use uekit::selective::{abstention_sweep, nrc_auc, rc_auc, rc_auc_baselines, rc_curve};
use uekit::synth::{derive_seed, generate, SynthConfig};
use uekit::tables::read_table;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg.into()) }
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((got - want).abs() <= tol, format!("{what}: {got} vs {want}"))
}

fn closed_form_scores() -> Check {
    let start = Instant::now();
    for c in 2..=10 {
        close(ent(&vec![1.0 / c as f64; c]), (c as f64).ln(), 1e-12, "ent(uniform)")?;
    }
    let two = vec![vec![0.9, 0.1], vec![0.5, 0.5]];
    let flip = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    close(sr(&[0.7, 0.3]), 0.3, 1e-12, "sr")?;
    close(sr(&[0.25; 4]), 0.75, 1e-12, "sr uniform")?;
    close(smp(&two), 0.3, 1e-12, "smp")?;
    close(smp(&flip), 0.5, 1e-12, "smp symmetric")?;
    close(pv(&flip), 0.25, 1e-12, "pv")?;
    close(pv(&two[..1]), 0.0, 1e-12, "pv single pass")?;
    close(ent(&[0.7, 0.2, 0.1]), 0.801_818_552_543_337_3, 1e-12, "ent")?;
    close(bald(&flip), std::f64::consts::LN_2, 1e-12, "bald flip")?;
    close(bald(&two), 0.101_749_225_079_196_7, 1e-12, "bald")?;
    close(bald(&vec![vec![0.3, 0.7]; 5]), 0.0, 1e-12, "bald identical")?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let c = rng.random_range(2..=5);
        let t = rng.random_range(1..=10);
        let passes: Vec<Vec<f64>> = (0..t)
            .map(|_| {
                let raw: Vec<f64> = (0..c).map(|_| rng.random::<f64>().powi(3)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        worst = worst.min(bald_raw(&passes));
    }
    ensure(worst >= -1e-12, format!("bald before clamping reached {worst}"))?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(1), format!("took {took:?}"))?;
    Ok(format!("min raw bald {worst:.2e}, {took:.2?}"))
}

fn brute_force_equivalence() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    let correct: Vec<bool> = (0..300).map(|_| rng.random_bool(0.7)).collect();
    let conf: Vec<f64> = (0..300).map(|_| f64::from(rng.random_range(0..40u8)) / 40.0).collect();
    let auc = metrics::roc_auc(&CorrectnessVector::new(correct.clone()), &ConfidenceVector::new(conf.clone()).unwrap())
        .map_err(|e| e.to_string())?;
    ensure(auc == roc_pairs(&correct, &conf), format!("roc {auc} vs {}", roc_pairs(&correct, &conf)))?;

    let x: Vec<f64> = (0..300).map(|_| f64::from(rng.random_range(0..30u8))).collect();
    let y: Vec<f64> = x.iter().map(|v| (v + f64::from(rng.random_range(0..25u8))).floor()).collect();
    let k = kendall_tau(&x, &y).map_err(|e| e.to_string())?;
    let (tau, p) = kendall_pairs(&x, &y);
    close(k.tau_b, tau, 1e-15, "kendall tau")?;
    close(k.p_value, p, 1e-6, "kendall p")?;

    let train: Vec<Vec<f64>> = (0..200).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let queries: Vec<Vec<f64>> = (0..10).map(|_| (0..3).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    for kk in [5, 20] {
        let model = LofModel::fit(&train, kk).map_err(|e| e.to_string())?;
        for q in &queries {
            let got = model.score(q).map_err(|e| e.to_string())?;
            let want = lof_direct(&train, kk, q);
            ensure(relative_error(got, want) < 1e-9, format!("lof k={kk}: {got} vs {want}"))?;
        }
    }

    for d in 1..=5 {
        let pts: Vec<Vec<f64>> = (0..80).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let labels: Vec<usize> = (0..80).map(|i| i % 3).collect();
        let stats = TrainStats::fit(&pts, &labels, 3).map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let h: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
            let got = stats.mahalanobis(&h).map_err(|e| e.to_string())?;
            let want = md_explicit(&pts, &labels, 3, &h);
            ensure(relative_error(got, want) < 1e-8, format!("md D={d}: {got} vs {want}"))?;
        }
    }

    let correct: Vec<bool> = (0..500).map(|_| rng.random_bool(0.8)).collect();
    let conf: Vec<f64> = (0..500).map(|_| f64::from(rng.random_range(0..50u8)) / 50.0).collect();
    let curve = rc_curve(&ConfidenceVector::new(conf.clone()).unwrap(), &CorrectnessVector::new(correct.clone()))
        .map_err(|e| e.to_string())?;
    close(rc_auc(&curve), rc_auc_double_sum(&conf, &correct), 1e-12, "rc_auc")?;

    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), format!("took {took:?}"))?;
    Ok(format!("roc, kendall, lof, md, rc_auc agree; {took:.2?}"))
}

fn max_prob_confidence(config: &SynthConfig) -> (CorrectnessVector, ConfidenceVector) {
    let eval = generate(config, "cal", 0).unwrap().eval;
    let conf = eval.records.iter().map(|r| r.det_probs.iter().copied().fold(0.0, f64::max)).collect();
    (eval.correctness(), ConfidenceVector::new(conf).unwrap())
}

fn calibration() -> Check {
    let base = SynthConfig { per_class: 50_000, train_per_class: 10, label_noise: 0.0, passes: 1, ..SynthConfig::default() };
    let bins = BinningConfig::default();
    let (y, c) = max_prob_confidence(&base);
    let e1 = metrics::ece(&y, &c, bins).map_err(|e| e.to_string())?;
    let citl = metrics::citl(&y, &c).map_err(|e| e.to_string())?;
    let slope = metrics::c_slope(&y, &c).map_err(|e| e.to_string())?.slope;
    ensure(e1 < 0.01, format!("ECE {e1}"))?;
    ensure(citl.abs() < 0.005, format!("CITL {citl}"))?;
    ensure((0.9..=1.1).contains(&slope), format!("C-Slope {slope}"))?;
    for seed in 0..5 {
        let cold = SynthConfig { seed, ..base.clone() };
        let hot = SynthConfig { temperature: 4.0, ..cold.clone() };
        let (y1, c1) = max_prob_confidence(&cold);
        let (y4, c4) = max_prob_confidence(&hot);
        let a = metrics::ece(&y1, &c1, bins).map_err(|e| e.to_string())?;
        let b = metrics::ece(&y4, &c4, bins).map_err(|e| e.to_string())?;
        ensure(b > a, format!("seed {seed}: ECE τ=4 {b} not above τ=1 {a}"))?;
    }
    Ok(format!("ECE {e1:.4}, CITL {citl:+.4}, slope {slope:.3}"))
}

fn selective() -> Check {
    let config = SynthConfig { per_class: 500, passes: 1, seed: 9, ..SynthConfig::default() };
    let eval = generate(&config, "sel", 0).unwrap().eval;
    let y = eval.correctness();
    let (preds, labels) = (eval.predictions(), eval.labels());
    let n = y.len();
    ensure(y.error_count() > n / 10, "fixture needs more than 10% errors")?;
    let baselines = rc_auc_baselines(&y).map_err(|e| e.to_string())?;

    let oracle = ConfidenceVector::new(y.values().iter().map(|&b| f64::from(u8::from(b))).collect()).unwrap();
    let nrc = nrc_auc(rc_auc(&rc_curve(&oracle, &y).unwrap()), baselines).map_err(|e| e.to_string())?;
    close(nrc, 1.0, 1e-9, "oracle NRC-AUC")?;
    let sweep = abstention_sweep(&oracle, &preds, &labels, 2, &[0.10]).map_err(|e| e.to_string())?;
    let pct = sweep.rows[0].pct_incorrect_rejected;
    ensure(pct == 100.0, format!("oracle rejects {pct}% incorrect"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut total = 0.0;
    for _ in 0..100 {
        let mut ranks: Vec<f64> = (0..n).map(|i| i as f64).collect();
        ranks.shuffle(&mut rng);
        let c = ConfidenceVector::new(ranks.iter().map(|r| r / n as f64).collect()).unwrap();
        total += nrc_auc(rc_auc(&rc_curve(&c, &y).unwrap()), baselines).map_err(|e| e.to_string())?;
    }
    let mean = total / 100.0;
    ensure(mean.abs() <= 0.05, format!("random mean NRC-AUC {mean}"))?;
    Ok(format!("oracle NRC {nrc:.9}, pct {pct}, random mean NRC {mean:+.4}"))
}

fn anchor() -> Check {
    // Separation and label noise tuned so macro-F1 sits near 0.81 and SR
    // discriminates correctness with ROC-AUC in the 0.6 to 0.7 range.
    let (mut f1s, mut aucs, mut gains) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..100 {
        let config = SynthConfig { per_class: 500, passes: 1, seed: derive_seed(17, 0, seed), ..SynthConfig::default() };
        let eval = generate(&config, "anchor", 0).unwrap().eval;
        let u = ScoreVector::new("sr", eval.records.iter().map(|r| sr(&r.det_probs)).collect()).unwrap();
        let c = to_confidence(&u).map_err(|e| e.to_string())?;
        aucs.push(metrics::roc_auc(&eval.correctness(), &c).map_err(|e| e.to_string())?);
        let sweep = abstention_sweep(&c, &eval.predictions(), &eval.labels(), 2, &[0.10]).map_err(|e| e.to_string())?;
        f1s.push(sweep.full_f1);
        gains.push(sweep.rows[0].delta_f1);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (f1, auc) = (mean(&f1s), mean(&aucs));
    let positive = gains.iter().filter(|g| **g > 0.0).count();
    gains.sort_by(f64::total_cmp);
    let median = (gains[49] + gains[50]) / 2.0;
    ensure((f1 - 0.81).abs() <= 0.01, format!("mean macro-F1 {f1}"))?;
    ensure((0.6..=0.7).contains(&auc), format!("mean SR ROC-AUC {auc}"))?;
    ensure(positive >= 95, format!("ΔF1 > 0 in {positive}/100 seeds"))?;
    ensure((1.0..=5.0).contains(&median), format!("median ΔF1 {median} pp"))?;
    Ok(format!("F1 {f1:.4}, SR AUC {auc:.3}, ΔF1>0 in {positive}/100, median {median:+.2} pp"))
}

const OUTPUTS: [&str; 11] = [
    "predictions.jsonl",
    "train.jsonl",
    "stats.json",
    "scores.csv",
    "eval.csv",
    "sweep.csv",
    "curves.csv",
    "correlations.csv",
    "aggregate.csv",
    "zscores.csv",
    "near_best.csv",
];

fn pipeline(dir: &Path) -> Result<(), String> {
    let steps: [&[&str]; 7] = [
        &["synth", "--seed", "42"],
        &["fit-stats", "--train", "train.jsonl", "--seed", "42"],
        &["score", "--input", "predictions.jsonl", "--train", "train.jsonl", "--stats", "stats.json", "--seed", "42"],
        &["eval", "--input", "scores.csv", "--seed", "42"],
        &["sweep", "--input", "scores.csv", "--seed", "42"],
        &["correlate", "--input", "eval.csv", "--seed", "42"],
        &["aggregate", "--input", "eval.csv", "--seed", "42"],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_uekit")).current_dir(dir).args(args).output().map_err(|e| e.to_string())?;
        ensure(out.status.success(), format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    }
    Ok(())
}

fn rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    read_table(std::fs::File::open(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn end_to_end(dirs: &[tempfile::TempDir; 2]) -> Check {
    let start = Instant::now();
    pipeline(dirs[0].path())?;
    let took = start.elapsed();
    pipeline(dirs[1].path())?;
    for name in OUTPUTS {
        let a = std::fs::read(dirs[0].path().join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(name)).map_err(|e| e.to_string())?;
        ensure(a == b, format!("{name} differs between runs"))?;
    }
    let (header, eval) = rows(&dirs[0].path().join("eval.csv"))?;
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let cells: std::collections::BTreeSet<(String, String)> =
        eval.iter().map(|r| (r[col("method")].clone(), r[col("metric")].clone())).collect();
    let groups: std::collections::BTreeSet<(String, String)> =
        eval.iter().map(|r| (r[col("split")].clone(), r[col("fold")].clone())).collect();
    ensure(cells.len() == 100, format!("{} method × metric cells", cells.len()))?;
    ensure(groups.len() == 15, format!("{} split × fold groups", groups.len()))?;
    ensure(eval.len() == 1500, format!("{} eval rows", eval.len()))?;
    let na = eval.iter().filter(|r| r[col("value")].is_empty()).count();
    ensure(took < Duration::from_secs(60), format!("took {took:?}"))?;
    Ok(format!("{} files identical, 1500 values ({na} NA), {took:.2?}", OUTPUTS.len()))
}

fn aggregation_shape(dir: &Path) -> Check {
    let (header, agg) = rows(&dir.join("aggregate.csv"))?;
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    ensure(agg.len() == 100, format!("{} aggregate cells", agg.len()))?;
    for r in &agg {
        let z: f64 = r[col("mean_z")].parse().map_err(|_| format!("mean_z missing for {r:?}"))?;
        ensure((-3.0..=3.0).contains(&z), format!("mean_z {z} for {r:?}"))?;
        let s: f64 = r[col("std_z")].parse().map_err(|_| format!("std_z missing for {r:?}"))?;
        ensure(s >= 0.0, format!("std_z {s}"))?;
    }
    let (header, z) = rows(&dir.join("zscores.csv"))?;
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let mut groups: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for r in &z {
        if let Ok(v) = r[col("z")].parse::<f64>() {
            groups.entry((r[col("split")].clone(), r[col("metric")].clone())).or_default().push(v);
        }
    }
    let mut checked = 0;
    for (key, v) in &groups {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        close(mean, 0.0, 1e-9, &format!("z mean {key:?}"))?;
        close(std, 1.0, 1e-9, &format!("z std {key:?}"))?;
        checked += 1;
    }
    ensure(checked > 0, "no non-degenerate z rows")?;
    Ok(format!("100 cells, {checked} standardized (split, metric) rows"))
}

fn run(name: &str, f: impl FnOnce() -> Check) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
    match outcome {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL  {name}: {why}");
            false
        }
    }
}

fn main() -> ExitCode {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let results = [
        run("closed-form score oracles", closed_form_scores),
        run("brute-force equivalence", brute_force_equivalence),
        run("calibration fixture", calibration),
        run("selective-prediction fixture", selective),
        run("abstention anchor", anchor),
        run("end-to-end determinism", || end_to_end(&dirs)),
        run("aggregation shape", || aggregation_shape(dirs[0].path())),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

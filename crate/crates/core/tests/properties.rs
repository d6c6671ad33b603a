mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use uekit::analysis::{kendall_tau, near_best, Standing};
use uekit::confidence::{minmax_normalize, to_confidence, ConfidenceVector, CorrectnessVector, ScoreVector};
use uekit::features::{LofModel, TrainStats};
use uekit::hybrid::huq;
use uekit::io::{read_records, write_records};
use uekit::metrics::{self, BinningConfig};
use uekit::selective::{abstention_sweep, rc_auc, rc_curve, trust_index, TrustMode};
use uekit::synth::{generate, SynthConfig};
use uekit::{Orientation, PredictionRecord};

fn cloud(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect()
}

#[test]
fn kendall_reference_values() {
    let x = [1.0, 2.0, 2.0, 3.0, 4.0, 4.0, 4.0, 5.0, 6.0, 7.0, 7.0, 8.0];
    let y = [2.0, 1.0, 3.0, 3.0, 5.0, 4.0, 6.0, 6.0, 8.0, 7.0, 9.0, 9.0];
    let k = kendall_tau(&x, &y).unwrap();
    assert!((k.tau_b - 0.8710810532924891).abs() < 1e-12);
    assert!((k.p_value - 0.00015767962747712257).abs() < 1e-9);

    let x = [3., 1., 4., 1., 5., 9., 2., 6., 5., 3., 5., 8., 9., 7., 9.];
    let y = [2., 7., 1., 8., 2., 8., 1., 8., 2., 8., 4., 5., 9., 0., 4.];
    let k = kendall_tau(&x, &y).unwrap();
    assert!((k.tau_b - 0.1570874410539306).abs() < 1e-12);
    assert!((k.p_value - 0.44489368769586524).abs() < 1e-9);
}

#[test]
fn lof_matches_direct_definition_with_duplicates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut train = cloud(&mut rng, 40, 3);
    train.push(train[0].clone());
    train.push(train[0].clone());
    let model = LofModel::fit(&train, 4).unwrap();
    for q in cloud(&mut rng, 10, 3).iter().chain([&train[0], &train[5]]) {
        let got = model.score(q).unwrap();
        assert!(relative_error(got, lof_direct(&train, 4, q)) < 1e-9);
    }
}

#[test]
fn mahalanobis_is_invariant_under_similarity_maps() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let train = cloud(&mut rng, 60, 2);
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let q = vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
        let (theta, scale): (f64, f64) = (rng.random_range(0.0..std::f64::consts::TAU), rng.random_range(0.2..5.0));
        let shift = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
        let map = |p: &Vec<f64>| {
            vec![
                scale * (theta.cos() * p[0] - theta.sin() * p[1]) + shift[0],
                scale * (theta.sin() * p[0] + theta.cos() * p[1]) + shift[1],
            ]
        };
        let before = TrainStats::fit(&train, &labels, 3).unwrap().mahalanobis(&q).unwrap();
        let moved: Vec<Vec<f64>> = train.iter().map(map).collect();
        let after = TrainStats::fit(&moved, &labels, 3).unwrap().mahalanobis(&map(&q)).unwrap();
        assert!(relative_error(after, before) < 1e-6, "{before} vs {after}");
    }
}

#[test]
fn synth_ece_grows_with_temperature() {
    let ece_at = |temperature: f64| {
        let config = SynthConfig {
            per_class: 50_000,
            train_per_class: 10,
            temperature,
            label_noise: 0.0,
            passes: 1,
            seed: 3,
            ..SynthConfig::default()
        };
        let eval = generate(&config, "s", 0).unwrap().eval;
        let conf: Vec<f64> = eval.records.iter().map(|r| r.det_probs.iter().copied().fold(0.0, f64::max)).collect();
        metrics::ece(&eval.correctness(), &ConfidenceVector::new(conf).unwrap(), BinningConfig::default()).unwrap()
    };
    let (e1, e2, e4) = (ece_at(1.0), ece_at(2.0), ece_at(4.0));
    assert!(e1 < 0.01 && e1 < e2 && e2 < e4, "{e1} {e2} {e4}");
}

fn probs(c: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, c).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn record() -> impl Strategy<Value = PredictionRecord> {
    (0usize..3, probs(3), prop::collection::vec(probs(3), 2), prop::collection::vec(-1e6f64..1e6, 4)).prop_map(
        |(label, det, mc, emb)| PredictionRecord {
            id: String::new(),
            split: "xx".into(),
            fold: 1,
            true_label: label,
            det_probs: det,
            mc_probs: mc,
            embedding: emb,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interchange_round_trip_is_bitwise(mut recs in prop::collection::vec(record(), 1..20)) {
        for (i, r) in recs.iter_mut().enumerate() {
            r.id = format!("r{i}");
        }
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let first = read_records(&buf[..]).unwrap();
        let mut again = Vec::new();
        write_records(&mut again, &first[0].records).unwrap();
        let second = read_records(&again[..]).unwrap();
        prop_assert_eq!(&first, &second);
        for (a, b) in first[0].records.iter().zip(&recs) {
            prop_assert_eq!(a.true_label, b.true_label);
            for (x, y) in a.embedding.iter().zip(&b.embedding) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn confidence_is_antitone_and_minmax_keeps_order(u in prop::collection::vec(-50.0f64..50.0, 2..40)) {
        let norm = minmax_normalize(&u).unwrap();
        let c = to_confidence(&ScoreVector::new("m", u.clone()).unwrap()).unwrap();
        for i in 0..u.len() {
            for j in 0..u.len() {
                if u[i] < u[j] {
                    prop_assert!(norm[i] < norm[j]);
                    prop_assert!(c.values()[i] > c.values()[j]);
                }
            }
        }
    }

    #[test]
    fn roc_matches_pair_counting_and_monotone_maps(
        pairs in prop::collection::vec((any::<bool>(), 0u8..20), 2..80)
    ) {
        prop_assume!(pairs.iter().any(|p| p.0) && pairs.iter().any(|p| !p.0));
        let correct: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let conf: Vec<f64> = pairs.iter().map(|p| f64::from(p.1) / 20.0).collect();
        let y = CorrectnessVector::new(correct.clone());
        let auc = metrics::roc_auc(&y, &ConfidenceVector::new(conf.clone()).unwrap()).unwrap();
        prop_assert_eq!(auc, roc_pairs(&correct, &conf));
        let squashed: Vec<f64> = conf.iter().map(|c| c.powi(3)).collect();
        prop_assert_eq!(auc, metrics::roc_auc(&y, &ConfidenceVector::new(squashed).unwrap()).unwrap());
    }

    #[test]
    fn kendall_matches_pair_counting_and_is_rank_invariant(
        xy in prop::collection::vec((0u8..8, 0u8..8), 3..60)
    ) {
        let x: Vec<f64> = xy.iter().map(|p| f64::from(p.0)).collect();
        let y: Vec<f64> = xy.iter().map(|p| f64::from(p.1)).collect();
        prop_assume!(x.iter().any(|v| *v != x[0]) && y.iter().any(|v| *v != y[0]));
        let k = kendall_tau(&x, &y).unwrap();
        let (tau, p) = kendall_pairs(&x, &y);
        prop_assert!((k.tau_b - tau).abs() < 1e-12);
        prop_assert!((k.p_value - p).abs() < 1e-6);
        let ex: Vec<f64> = x.iter().map(|v| v.exp() - 7.0).collect();
        let k2 = kendall_tau(&ex, &y).unwrap();
        prop_assert_eq!(k.tau_b, k2.tau_b);
        prop_assert_eq!(k.p_value, k2.p_value);
    }

    #[test]
    fn rc_auc_matches_double_sum(pairs in prop::collection::vec((any::<bool>(), 0u8..10), 1..120)) {
        let correct: Vec<bool> = pairs.iter().map(|p| p.0).collect();
        let conf: Vec<f64> = pairs.iter().map(|p| f64::from(p.1) / 10.0).collect();
        let curve = rc_curve(&ConfidenceVector::new(conf.clone()).unwrap(), &CorrectnessVector::new(correct.clone())).unwrap();
        prop_assert!((rc_auc(&curve) - rc_auc_double_sum(&conf, &correct)).abs() < 1e-12);
        let oracle: Vec<f64> = correct.iter().map(|&c| f64::from(u8::from(c))).collect();
        let best = rc_curve(&ConfidenceVector::new(oracle).unwrap(), &CorrectnessVector::new(correct)).unwrap();
        prop_assert!(rc_auc(&best) <= rc_auc(&curve) + 1e-12);
    }

    #[test]
    fn oracle_sweep_is_monotone_and_optimal_ti_dominates(
        pl in prop::collection::vec((0usize..3, 0usize..3), 10..80),
        cov in 0.05f64..1.0,
    ) {
        let preds: Vec<usize> = pl.iter().map(|p| p.0).collect();
        let labels: Vec<usize> = pl.iter().map(|p| p.1).collect();
        let conf: Vec<f64> = pl.iter().map(|p| f64::from(u8::from(p.0 == p.1))).collect();
        let c = ConfidenceVector::new(conf).unwrap();
        let errors = pl.iter().filter(|p| p.0 != p.1).count();
        let thresholds: Vec<f64> = (0..20).map(|i| f64::from(i) * 0.05).collect();
        let sweep = abstention_sweep(&c, &preds, &labels, 3, &thresholds).unwrap();
        let live: Vec<_> = sweep.rows.iter().filter(|r| r.rejected_count <= errors).collect();
        for w in live.windows(2) {
            prop_assert!(w[1].delta_f1 >= w[0].delta_f1 - 1e-9);
        }
        let best = trust_index(&c, &preds, &labels, 3, TrustMode::Optimal).unwrap();
        let fixed = trust_index(&c, &preds, &labels, 3, TrustMode::Fixed(cov)).unwrap();
        prop_assert!(best.f1 >= fixed.f1);
    }

    #[test]
    fn huq_keeps_a_shared_ordering(v in prop::collection::vec(-10.0f64..10.0, 2..30), alpha in 0.0f64..=1.0) {
        let a: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        let h = huq(&v, &a, alpha).unwrap();
        for i in 0..v.len() {
            for j in 0..v.len() {
                if v[i] < v[j] {
                    prop_assert!(h[i] < h[j]);
                }
            }
        }
    }

    #[test]
    fn near_best_has_exactly_one_best(
        folds in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 5), 2..8),
        lower in any::<bool>(),
    ) {
        let per: Vec<(String, Vec<f64>)> = folds.into_iter().enumerate().map(|(i, f)| (format!("m{i}"), f)).collect();
        let o = if lower { Orientation::LowerBetter } else { Orientation::HigherBetter };
        let marks = near_best(&per, o).unwrap();
        prop_assert_eq!(marks.iter().filter(|m| m.1 == Standing::Best).count(), 1);
    }
}

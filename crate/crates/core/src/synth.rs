//! Synthetic classifier outputs with known ground truth.
//!
//! Class-conditional embeddings are unit-variance Gaussians around means
//! placed on scaled simplex vertices (`μ_c = s/√2 · e_c`, pairwise distance
//! `s`). The deterministic probabilities come from the Bayes posterior of the
//! unshifted mixture, so with temperature 1 and no label noise they are
//! calibrated by construction. Stochastic passes add Gaussian noise to the
//! logits before the softmax.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{EvalSplit, PredictionRecord, TrainRecord, TrainSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub class_count: usize,
    pub dim: usize,
    /// Test instances per class.
    pub per_class: usize,
    /// Training instances per class.
    pub train_per_class: usize,
    /// Distance between class means.
    pub separation: f64,
    /// Logits are divided by this before the softmax.
    pub temperature: f64,
    /// Standard deviation of per-pass logit noise.
    pub mc_noise: f64,
    /// Test-time translation of every embedding along the all-ones direction.
    pub shift: f64,
    /// Probability that a test label is replaced by a different class, independently of its features.
    pub label_noise: f64,
    pub passes: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            class_count: 2,
            dim: 8,
            per_class: 150,
            train_per_class: 200,
            separation: 2.45,
            temperature: 1.0,
            mc_noise: 0.5,
            shift: 0.0,
            label_noise: 0.1,
            passes: 20,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::invalid("synthetic data needs at least two classes"));
        }
        if self.dim < self.class_count {
            return Err(Error::invalid(format!(
                "dimension {} must be at least the class count {}",
                self.dim, self.class_count
            )));
        }
        if self.per_class == 0 || self.train_per_class == 0 || self.passes == 0 {
            return Err(Error::invalid("instance counts and passes must be at least 1"));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(Error::invalid("temperature must be positive"));
        }
        if !(self.mc_noise >= 0.0 && self.shift >= 0.0 && self.separation >= 0.0) {
            return Err(Error::invalid("noise, shift and separation must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::invalid("label noise must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn class_means(&self) -> Vec<Vec<f64>> {
        let scale = self.separation / std::f64::consts::SQRT_2;
        (0..self.class_count)
            .map(|c| {
                let mut m = vec![0.0; self.dim];
                m[c] = scale;
                m
            })
            .collect()
    }
}

/// Training embeddings and an evaluation split drawn from one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub train: Vec<TrainRecord>,
    pub eval: EvalSplit,
}

impl SynthData {
    pub fn train_set(&self) -> TrainSet {
        TrainSet {
            split: self.eval.split.clone(),
            fold: self.eval.fold,
            embeddings: self.train.iter().map(|r| r.embedding.clone()).collect(),
            labels: self.train.iter().map(|r| r.label).collect(),
        }
    }
}

fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|l| ((l - max) / temperature).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn sample_point<R: Rng>(rng: &mut R, mean: &[f64]) -> Vec<f64> {
    mean.iter().map(|m| {
        let z: f64 = StandardNormal.sample(rng);
        m + z
    })
    .collect()
}

/// Generates one (split, fold) dataset; identical configs give identical output.
pub fn generate(config: &SynthConfig, split: &str, fold: u32) -> Result<SynthData> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let means = config.class_means();
    let half_sq: Vec<f64> = means.iter().map(|m| 0.5 * m.iter().map(|v| v * v).sum::<f64>()).collect();
    let logits = |x: &[f64]| -> Vec<f64> {
        means
            .iter()
            .zip(&half_sq)
            .map(|(m, h)| m.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() - h)
            .collect()
    };

    let mut train_labels: Vec<usize> = (0..config.class_count)
        .flat_map(|c| std::iter::repeat_n(c, config.train_per_class))
        .collect();
    shuffle(&mut train_labels, &mut rng);
    let train = train_labels
        .iter()
        .enumerate()
        .map(|(i, &label)| TrainRecord {
            id: format!("{split}-{fold}-train-{i}"),
            split: split.to_string(),
            fold,
            label,
            embedding: sample_point(&mut rng, &means[label]),
        })
        .collect();

    let mut labels: Vec<usize> = (0..config.class_count)
        .flat_map(|c| std::iter::repeat_n(c, config.per_class))
        .collect();
    shuffle(&mut labels, &mut rng);
    let offset = config.shift / (config.dim as f64).sqrt();
    let noise = Normal::new(0.0, config.mc_noise).map_err(|e| Error::invalid(e.to_string()))?;
    let records = labels
        .iter()
        .enumerate()
        .map(|(i, &source)| {
            let mut x = sample_point(&mut rng, &means[source]);
            x.iter_mut().for_each(|v| *v += offset);
            let z = logits(&x);
            let det_probs = softmax(&z, config.temperature);
            let mc_probs = (0..config.passes)
                .map(|_| {
                    let noisy: Vec<f64> = z.iter().map(|l| l + noise.sample(&mut rng)).collect();
                    softmax(&noisy, config.temperature)
                })
                .collect();
            let mut true_label = source;
            if config.label_noise > 0.0 && rng.random::<f64>() < config.label_noise {
                let k = rng.random_range(0..config.class_count - 1);
                true_label = if k >= source { k + 1 } else { k };
            }
            PredictionRecord {
                id: format!("{split}-{fold}-{i}"),
                split: split.to_string(),
                fold,
                true_label,
                det_probs,
                mc_probs,
                embedding: x,
            }
        })
        .collect();

    Ok(SynthData {
        train,
        eval: EvalSplit { split: split.to_string(), fold, class_count: config.class_count, records },
    })
}

fn shuffle<T, R: Rng>(v: &mut [T], rng: &mut R) {
    for i in (1..v.len()).rev() {
        v.swap(i, rng.random_range(0..=i));
    }
}

/// Derives a per-(split, fold) seed from a base seed.
pub fn derive_seed(base: u64, split_index: usize, fold: u32) -> u64 {
    // splitmix64 finalizer over a packed key.
    let mut z = base
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(split_index as u64 + 1))
        .wrapping_add(u64::from(fold).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generates every (split, fold) combination, each with its own derived seed.
pub fn generate_suite(config: &SynthConfig, splits: &[String], folds: u32) -> Result<Vec<SynthData>> {
    let mut out = Vec::new();
    for (si, split) in splits.iter().enumerate() {
        for fold in 0..folds {
            let cfg = SynthConfig { seed: derive_seed(config.seed, si, fold), ..config.clone() };
            out.push(generate(&cfg, split, fold)?);
        }
    }
    Ok(out)
}

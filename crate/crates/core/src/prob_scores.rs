//! Class-probability uncertainty scores: softmax response, sampled max
//! probability, entropy, MC entropy, probability variance and BALD.
//!
//! Natural logarithms throughout, with `0 * ln 0 = 0`.

/// Floor applied before taking logarithms so denormals never produce `-inf`.
const LOG_FLOOR: f64 = 1e-300;

/// Negative BALD values within this distance of zero are rounding noise.
pub const BALD_CLAMP: f64 = 1e-12;

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        let q = p.clamp(LOG_FLOOR, 1.0);
        q * q.ln()
    }
}

fn max_prob(p: &[f64]) -> f64 {
    p.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Per-class mean over stochastic passes.
pub fn mean_passes(passes: &[Vec<f64>]) -> Vec<f64> {
    let classes = passes.first().map_or(0, Vec::len);
    let t = passes.len() as f64;
    (0..classes)
        .map(|c| passes.iter().map(|row| row[c]).sum::<f64>() / t)
        .collect()
}

/// Deterministic and stochastic probabilities of one instance with the
/// pass-mean cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityProfile {
    pub det: Vec<f64>,
    pub passes: Vec<Vec<f64>>,
    pub mean_passes: Vec<f64>,
}

impl ProbabilityProfile {
    pub fn new(det: Vec<f64>, passes: Vec<Vec<f64>>) -> Self {
        let mean_passes = mean_passes(&passes);
        Self { det, passes, mean_passes }
    }

    pub fn sr(&self) -> f64 {
        sr(&self.det)
    }

    pub fn smp(&self) -> f64 {
        sr(&self.mean_passes)
    }

    pub fn ent(&self) -> f64 {
        ent(&self.det)
    }

    pub fn ent_mc(&self) -> f64 {
        ent(&self.mean_passes)
    }

    pub fn pv(&self) -> f64 {
        pv_with_mean(&self.passes, &self.mean_passes)
    }

    pub fn bald(&self) -> f64 {
        clamp_bald(self.ent_mc() - expected_entropy(&self.passes))
    }
}

/// Softmax response: `1 - max_c p_c`.
pub fn sr(det: &[f64]) -> f64 {
    1.0 - max_prob(det)
}

/// Sampled maximum probability: `1 - max_c mean_t p_tc`.
pub fn smp(passes: &[Vec<f64>]) -> f64 {
    sr(&mean_passes(passes))
}

/// Shannon entropy (nats).
pub fn ent(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| plogp(p)).sum::<f64>()
}

/// Entropy of the pass-mean distribution.
pub fn ent_mc(passes: &[Vec<f64>]) -> f64 {
    ent(&mean_passes(passes))
}

fn pv_with_mean(passes: &[Vec<f64>], mean: &[f64]) -> f64 {
    let t = passes.len() as f64;
    let total: f64 = mean
        .iter()
        .enumerate()
        .map(|(c, &m)| passes.iter().map(|row| (row[c] - m).powi(2)).sum::<f64>() / t)
        .sum();
    total / mean.len() as f64
}

/// Probability variance: class-averaged population variance across passes.
pub fn pv(passes: &[Vec<f64>]) -> f64 {
    pv_with_mean(passes, &mean_passes(passes))
}

fn expected_entropy(passes: &[Vec<f64>]) -> f64 {
    passes.iter().map(|row| ent(row)).sum::<f64>() / passes.len() as f64
}

/// Mutual information before the rounding clamp.
pub fn bald_raw(passes: &[Vec<f64>]) -> f64 {
    ent_mc(passes) - expected_entropy(passes)
}

fn clamp_bald(v: f64) -> f64 {
    if (-BALD_CLAMP..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// BALD: entropy of the mean minus mean per-pass entropy.
pub fn bald(passes: &[Vec<f64>]) -> f64 {
    clamp_bald(bald_raw(passes))
}

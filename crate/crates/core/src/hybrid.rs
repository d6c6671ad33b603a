//! Rank-based hybrid of an epistemic and an aleatoric score.

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Ascending fractional ranks rescaled to `[0, 1]` by `(r - 1) / (n - 1)`;
/// a single element maps to 0.5.
pub fn rank_transform(values: &[f64]) -> Result<Vec<f64>> {
    match values.len() {
        0 => Err(Error::invalid("cannot rank an empty score vector")),
        1 => Ok(vec![0.5]),
        n => {
            let denom = (n - 1) as f64;
            Ok(average_ranks(values).into_iter().map(|r| (r - 1.0) / denom).collect())
        }
    }
}

/// `(1 - α) R(epistemic) + α R(aleatoric)`.
pub fn huq(epistemic: &[f64], aleatoric: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if epistemic.len() != aleatoric.len() {
        return Err(Error::invalid(format!(
            "hybrid inputs differ in length: {} vs {}",
            epistemic.len(),
            aleatoric.len()
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha {alpha} outside [0, 1]")));
    }
    let e = rank_transform(epistemic)?;
    let a = rank_transform(aleatoric)?;
    Ok(e.iter().zip(&a).map(|(x, y)| (1.0 - alpha) * x + alpha * y).collect())
}

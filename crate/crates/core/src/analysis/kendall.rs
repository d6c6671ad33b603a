use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Kendall rank correlation with tie correction and its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KendallTau {
    pub tau_b: f64,
    pub p_value: f64,
    /// Concordant minus discordant pairs.
    pub score: i64,
    pub n: usize,
}

/// Sizes of runs of equal values in an already sorted slice.
fn tie_groups(sorted: &[f64]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > 1 {
            out.push((j - i) as u64);
        }
        i = j;
    }
    out
}

fn pairs(t: u64) -> u64 {
    t * (t - 1) / 2
}

/// Merge sort by value, returning the number of strict inversions removed.
fn sort_count_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count_swaps(&mut v[..mid], &mut buf[..mid]) + sort_count_swaps(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Tau-b in `O(n log n)` with the normal-approximation p-value using the
/// tie-adjusted variance of the concordance score.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<KendallTau> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::invalid("Kendall tau needs at least two pairs"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("Kendall tau inputs must be finite"));
    }

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let xs: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();

    let x_ties = tie_groups(&xs);
    // Joint ties: equal x and equal y, adjacent after the lexicographic sort.
    let mut joint = 0u64;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && xs[j] == xs[i] && ys[j] == ys[i] {
            j += 1;
        }
        joint += pairs((j - i) as u64);
        i = j;
    }
    let mut buf = vec![0.0; n];
    let swaps = sort_count_swaps(&mut ys, &mut buf);
    let y_ties = tie_groups(&ys);

    let n0 = pairs(n as u64);
    let n1: u64 = x_ties.iter().map(|&t| pairs(t)).sum();
    let n2: u64 = y_ties.iter().map(|&t| pairs(t)).sum();
    if n1 == n0 || n2 == n0 {
        return Err(Error::Undefined("Kendall tau is undefined when one side is constant"));
    }
    let score = n0 as i64 - n1 as i64 - n2 as i64 + joint as i64 - 2 * swaps as i64;
    let tau_b = score as f64 / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();

    let p_value = normal_p_value(score, n as u64, &x_ties, &y_ties);
    Ok(KendallTau { tau_b: tau_b.clamp(-1.0, 1.0), p_value, score, n })
}

/// Two-sided p-value of a concordance score under independence.
pub(crate) fn normal_p_value(score: i64, n: u64, x_ties: &[u64], y_ties: &[u64]) -> f64 {
    let nf = n as f64;
    let v = |t: u64| {
        let t = t as f64;
        t * (t - 1.0) * (2.0 * t + 5.0)
    };
    let s1 = |ts: &[u64]| ts.iter().map(|&t| (t * (t - 1)) as f64).sum::<f64>();
    let s2 = |ts: &[u64]| ts.iter().map(|&t| (t * (t - 1) * (t - 2)) as f64).sum::<f64>();
    let mut var = (v(n) - x_ties.iter().map(|&t| v(t)).sum::<f64>() - y_ties.iter().map(|&t| v(t)).sum::<f64>())
        / 18.0
        + s1(x_ties) * s1(y_ties) / (2.0 * nf * (nf - 1.0));
    if n > 2 {
        var += s2(x_ties) * s2(y_ties) / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    }
    if var <= 0.0 {
        return 1.0;
    }
    let z = score as f64 / var.sqrt();
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

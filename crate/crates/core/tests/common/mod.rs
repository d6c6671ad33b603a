//! Direct-definition reference implementations shared by the integration suites.
#![allow(dead_code)]

use statrs::distribution::{ContinuousCDF, Normal};

/// Pairwise ROC-AUC: correct-vs-incorrect pairs, half credit for ties.
pub fn roc_pairs(correct: &[bool], conf: &[f64]) -> f64 {
    let (mut wins, mut ties, mut pairs) = (0u64, 0u64, 0u64);
    for i in 0..correct.len() {
        for j in 0..correct.len() {
            if correct[i] && !correct[j] {
                pairs += 1;
                if conf[i] > conf[j] {
                    wins += 1;
                } else if conf[i] == conf[j] {
                    ties += 1;
                }
            }
        }
    }
    (wins as f64 + 0.5 * ties as f64) / pairs as f64
}

/// Tau-b and its normal-approximation p-value by enumerating all pairs.
pub fn kendall_pairs(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len();
    let (mut s, mut tx, mut ty) = (0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).signum() * f64::from(u8::from(x[i] != x[j]));
            let b = (y[i] - y[j]).signum() * f64::from(u8::from(y[i] != y[j]));
            s += (a * b) as i64;
            tx += u64::from(x[i] == x[j]);
            ty += u64::from(y[i] == y[j]);
        }
    }
    let n0 = (n * (n - 1) / 2) as u64;
    let tau = s as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt();

    let groups = |v: &[f64]| -> Vec<f64> {
        let mut sorted = v.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut out = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let j = sorted[i..].iter().take_while(|&&w| w == sorted[i]).count();
            out.push(j as f64);
            i += j;
        }
        out
    };
    let (gx, gy) = (groups(x), groups(y));
    let nf = n as f64;
    let f = |t: f64| t * (t - 1.0) * (2.0 * t + 5.0);
    let sum = |g: &[f64], h: &dyn Fn(f64) -> f64| g.iter().map(|&t| h(t)).sum::<f64>();
    let v1x = sum(&gx, &|t| t * (t - 1.0));
    let v1y = sum(&gy, &|t| t * (t - 1.0));
    let v2x = sum(&gx, &|t| t * (t - 1.0) * (t - 2.0));
    let v2y = sum(&gy, &|t| t * (t - 1.0) * (t - 2.0));
    let var = (f(nf) - sum(&gx, &f) - sum(&gy, &f)) / 18.0
        + v1x * v1y / (2.0 * nf * (nf - 1.0))
        + v2x * v2y / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
    let z = s as f64 / var.sqrt();
    let p = 2.0 * Normal::standard().sf(z.abs());
    (tau, p)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
}

/// Neighbour indices of `q` among `train` excluding `skip`, sorted by (distance, index), first `k`.
fn knn(train: &[Vec<f64>], q: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..train.len()).filter(|&i| Some(i) != skip).collect();
    idx.sort_by(|&a, &b| dist(&train[a], q).total_cmp(&dist(&train[b], q)).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// LOF straight from the textbook definition, recomputing every neighbourhood.
pub fn lof_direct(train: &[Vec<f64>], k: usize, q: &[f64]) -> f64 {
    let kdist = |o: usize| {
        let nb = knn(train, &train[o], k, Some(o));
        dist(&train[o], &train[*nb.last().unwrap()])
    };
    let lrd = |p: &[f64], skip: Option<usize>| {
        let nb = knn(train, p, k, skip);
        let s: f64 = nb.iter().map(|&o| kdist(o).max(dist(p, &train[o])).max(1e-12)).sum();
        nb.len() as f64 / s
    };
    let nb = knn(train, q, k, None);
    let mean: f64 = nb.iter().map(|&o| lrd(&train[o], Some(o))).sum::<f64>() / nb.len() as f64;
    mean / lrd(q, None)
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let pivot = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= pivot);
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                let pivot_row = a[c].clone();
                a[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Minimum squared Mahalanobis distance with an independently computed pooled
/// covariance, the same ridge rule, and an explicit inverse.
pub fn md_explicit(train: &[Vec<f64>], labels: &[usize], classes: usize, h: &[f64]) -> f64 {
    let d = train[0].len();
    let n = train.len() as f64;
    let mut mu = vec![vec![0.0; d]; classes];
    let mut cnt = vec![0.0; classes];
    for (x, &y) in train.iter().zip(labels) {
        cnt[y] += 1.0;
        for j in 0..d {
            mu[y][j] += x[j];
        }
    }
    for (m, c) in mu.iter_mut().zip(&cnt) {
        m.iter_mut().for_each(|v| *v /= c);
    }
    let mut cov = vec![vec![0.0; d]; d];
    for (x, &y) in train.iter().zip(labels) {
        for a in 0..d {
            for b in 0..d {
                cov[a][b] += (x[a] - mu[y][a]) * (x[b] - mu[y][b]) / n;
            }
        }
    }
    let trace: f64 = (0..d).map(|i| cov[i][i]).sum();
    let eps = (1e-6 * trace / d as f64).max(1e-10);
    for (i, row) in cov.iter_mut().enumerate() {
        row[i] += eps;
    }
    let inv = invert(&cov);
    (0..classes)
        .map(|c| {
            let diff: Vec<f64> = (0..d).map(|j| h[j] - mu[c][j]).collect();
            (0..d).map(|a| (0..d).map(|b| diff[a] * inv[a][b] * diff[b]).sum::<f64>()).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// `(1/n) Σ_k (1/k) Σ_{i≤k} r_(i)` with instances sorted by confidence descending, ties by index.
pub fn rc_auc_double_sum(conf: &[f64], correct: &[bool]) -> f64 {
    let n = conf.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| conf[b].total_cmp(&conf[a]).then(a.cmp(&b)));
    let mut total = 0.0;
    for k in 1..=n {
        let errors: f64 = order[..k].iter().map(|&i| f64::from(u8::from(!correct[i]))).sum();
        total += errors / k as f64;
    }
    total / n as f64
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

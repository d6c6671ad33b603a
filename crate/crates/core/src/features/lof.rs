use crate::error::{Error, Result};

/// Reachability distances are floored here so duplicated points keep a finite density.
pub const DISTANCE_FLOOR: f64 = 1e-12;

pub const DEFAULT_K: usize = 20;

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The `k` nearest training points to `query` as `(distance, index)`, nearest
/// first, ties broken by training index. `skip` excludes one index (the point itself).
fn nearest(points: &[Vec<f64>], query: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| (euclidean(p, query), i))
        .collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d
}

/// Local Outlier Factor fitted on a training embedding set.
#[derive(Debug, Clone, PartialEq)]
pub struct LofModel {
    pub k: usize,
    pub train_points: Vec<Vec<f64>>,
    /// Distance from each training point to its k-th nearest other training point.
    pub k_distances: Vec<f64>,
    /// Local reachability density of each training point.
    pub lrd: Vec<f64>,
}

impl LofModel {
    pub fn fit(train: &[Vec<f64>], k: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid("LOF needs a non-empty training set"));
        }
        if k == 0 || k >= train.len() {
            return Err(Error::invalid(format!(
                "LOF neighbour count {k} must satisfy 1 <= k < {}",
                train.len()
            )));
        }
        let dim = train[0].len();
        if train.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("LOF training embeddings differ in dimension"));
        }
        let neighbours: Vec<Vec<(f64, usize)>> =
            (0..train.len()).map(|i| nearest(train, &train[i], k, Some(i))).collect();
        let k_distances: Vec<f64> = neighbours.iter().map(|nb| nb[k - 1].0).collect();
        let lrd = neighbours
            .iter()
            .map(|nb| reach_density(nb, &k_distances))
            .collect();
        Ok(Self { k, train_points: train.to_vec(), k_distances, lrd })
    }

    /// Mean neighbour density over the query's density; > 1 means sparser than
    /// its neighbourhood.
    pub fn score(&self, h: &[f64]) -> Result<f64> {
        if h.len() != self.train_points[0].len() {
            return Err(Error::invalid(format!(
                "query dimension {} does not match LOF training dimension {}",
                h.len(),
                self.train_points[0].len()
            )));
        }
        let nb = nearest(&self.train_points, h, self.k, None);
        let own = reach_density(&nb, &self.k_distances);
        let mean_lrd = nb.iter().map(|&(_, o)| self.lrd[o]).sum::<f64>() / nb.len() as f64;
        Ok(mean_lrd / own)
    }
}

fn reach_density(neighbours: &[(f64, usize)], k_distances: &[f64]) -> f64 {
    let total: f64 = neighbours
        .iter()
        .map(|&(d, o)| k_distances[o].max(d).max(DISTANCE_FLOOR))
        .sum();
    neighbours.len() as f64 / total
}

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_SUBSAMPLE: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split { dim: usize, value: f64, left: usize, right: usize },
    Leaf { size: usize },
}

/// One isolation tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationTree {
    pub nodes: Vec<Node>,
}

impl IsolationTree {
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Edges traversed plus the unresolved-subtree correction at the leaf.
    fn path_length(&self, h: &[f64], c_table: &[f64]) -> f64 {
        let mut i = 0;
        let mut edges = 0usize;
        loop {
            match self.nodes[i] {
                Node::Split { dim, value, left, right } => {
                    i = if h[dim] < value { left } else { right };
                    edges += 1;
                }
                Node::Leaf { size } => return edges as f64 + c_table[size],
            }
        }
    }
}

/// Average unsuccessful-search path length in a binary search tree of `n`
/// points: `2 H(n-1) - 2 (n-1) / n`, zero for `n <= 1`.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let harmonic: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * harmonic - 2.0 * (n - 1) as f64 / n as f64
}

/// Isolation forest over training embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct IsofModel {
    pub tree_count: usize,
    pub subsample: usize,
    pub seed: u64,
    pub dim: usize,
    pub trees: Vec<IsolationTree>,
    /// `c(ψ)`, the path-length normalizer.
    pub c_norm: f64,
    c_table: Vec<f64>,
}

struct Builder<'a> {
    points: &'a [Vec<f64>],
    height_limit: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { size: idx.len() });
        if depth >= self.height_limit || idx.len() <= 1 {
            return slot;
        }
        let dim = self.points[0].len();
        // Split only on coordinates that still vary inside this node.
        let ranges: Vec<(usize, f64, f64)> = (0..dim)
            .filter_map(|d| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = self.points[i][d];
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((d, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return slot;
        }
        let (d, lo, hi) = ranges[self.rng.random_range(0..ranges.len())];
        let value = self.rng.random_range(lo..hi);
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| self.points[i][d] < value);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[slot] = Node::Split { dim: d, value, left, right };
        slot
    }
}

impl IsofModel {
    /// Builds `tree_count` trees, each on an independent subsample of `subsample`
    /// points drawn without replacement, with height limit `ceil(log2 ψ)`.
    pub fn fit(train: &[Vec<f64>], tree_count: usize, subsample: usize, seed: u64) -> Result<Self> {
        if tree_count == 0 {
            return Err(Error::invalid("isolation forest needs at least one tree"));
        }
        if subsample < 2 {
            return Err(Error::invalid(format!("subsample size {subsample} must be at least 2")));
        }
        if subsample > train.len() {
            return Err(Error::invalid(format!(
                "subsample size {subsample} exceeds training size {}",
                train.len()
            )));
        }
        let dim = train[0].len();
        if train.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("isolation forest training embeddings differ in dimension"));
        }
        let height_limit = (subsample as f64).log2().ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trees = Vec::with_capacity(tree_count);
        for _ in 0..tree_count {
            let idx = index::sample(&mut rng, train.len(), subsample).into_vec();
            let mut b = Builder { points: train, height_limit, rng, nodes: Vec::new() };
            b.grow(idx, 0);
            rng = b.rng;
            trees.push(IsolationTree { nodes: b.nodes });
        }
        let c_table: Vec<f64> = (0..=subsample).map(average_path_length).collect();
        Ok(Self {
            tree_count,
            subsample,
            seed,
            dim,
            trees,
            c_norm: c_table[subsample],
            c_table,
        })
    }

    pub fn mean_path_length(&self, h: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(h, &self.c_table)).sum::<f64>() / self.trees.len() as f64
    }

    /// `2^(-E[path] / c(ψ))`, in `(0, 1]`; higher is more anomalous.
    pub fn score(&self, h: &[f64]) -> Result<f64> {
        if h.len() != self.dim {
            return Err(Error::invalid(format!(
                "query dimension {} does not match forest dimension {}",
                h.len(),
                self.dim
            )));
        }
        Ok(2f64.powf(-self.mean_path_length(h) / self.c_norm))
    }
}

//! Growth generators for BA and GMG random graphs.
//!
//! Both start from a complete graph on `m + 1` nodes. Each arriving node
//! attaches `m` edges to distinct existing nodes. The BA generator picks
//! targets with probability proportional to degree; the GMG generator uses
//! `d_i (1 + γ_i)^α`, where γ_i is the clustering coefficient at the moment
//! the edge is placed. Degrees used as attachment weights are refreshed once
//! the arriving node has placed all of its edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub alpha: f64,
    pub seed: u64,
}

impl SynthesisConfig {
    pub fn new(n: usize, m: usize, alpha: f64, seed: u64) -> Self {
        SynthesisConfig { n, m, alpha, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.n < self.m + 1 {
            return Err(Error::Config(format!(
                "n = {} is smaller than m + 1 = {}",
                self.n,
                self.m + 1
            )));
        }
        if !self.alpha.is_finite() {
            return Err(Error::Config("alpha must be finite".into()));
        }
        Ok(())
    }

    /// C(m+1, 2) + (n − m − 1)·m.
    pub fn expected_edge_count(&self) -> usize {
        self.m * (self.m + 1) / 2 + (self.n - self.m - 1) * self.m
    }
}

pub fn synthesize_ba(config: &SynthesisConfig) -> Result<Graph> {
    config.validate()?;
    grow(config, None)
}

pub fn synthesize_gmg(config: &SynthesisConfig) -> Result<Graph> {
    config.validate()?;
    grow(config, Some(config.alpha))
}

/// Fenwick tree over non-negative weights with prefix-sum sampling.
struct WeightTree {
    tree: Vec<f64>,
    leaves: Vec<f64>,
}

impl WeightTree {
    fn new(len: usize) -> Self {
        WeightTree {
            tree: vec![0.0; len + 1],
            leaves: vec![0.0; len],
        }
    }

    fn set(&mut self, i: usize, value: f64) {
        let delta = value - self.leaves[i];
        self.leaves[i] = value;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    fn get(&self, i: usize) -> f64 {
        self.leaves[i]
    }

    fn total(&self) -> f64 {
        let mut k = self.leaves.len();
        let mut sum = 0.0;
        while k > 0 {
            sum += self.tree[k];
            k &= k - 1;
        }
        sum
    }

    /// Index `i` such that the prefix sum before `i` is ≤ `target` < prefix through `i`.
    fn find(&self, mut target: f64) -> usize {
        let len = self.leaves.len();
        let mut pos = 0;
        let mut step = len.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= len && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(len - 1)
    }

    fn sample<R: rand::Rng>(&self, rng: &mut R, limit: usize) -> usize {
        let total = self.total();
        let idx = self.find(rng.gen::<f64>() * total);
        if idx < limit && self.leaves[idx] > 0.0 {
            return idx;
        }
        // rounding drift landed on an excluded slot; fall back to the nearest positive weight
        let below = (0..idx.min(limit)).rev().find(|&i| self.leaves[i] > 0.0);
        below
            .or_else(|| (idx..limit).find(|&i| self.leaves[i] > 0.0))
            .expect("at least one candidate carries positive weight")
    }
}

struct Growth {
    adjacency: Vec<Vec<usize>>,
    triangles: Vec<usize>,
    alpha: Option<f64>,
}

impl Growth {
    fn clustering(&self, i: usize) -> f64 {
        let d = self.adjacency[i].len();
        if d <= 1 {
            0.0
        } else {
            2.0 * self.triangles[i] as f64 / (d * (d - 1)) as f64
        }
    }

    fn weight(&self, i: usize, degree: usize) -> f64 {
        match self.alpha {
            None => degree as f64,
            Some(alpha) => degree as f64 * (1.0 + self.clustering(i)).powf(alpha),
        }
    }

    /// Insert `u–v` and update triangle counts; returns the common neighbors.
    fn connect(&mut self, u: usize, v: usize) -> Vec<usize> {
        let common: Vec<usize> = self.adjacency[u]
            .iter()
            .copied()
            .filter(|w| self.adjacency[v].contains(w))
            .collect();
        self.triangles[u] += common.len();
        self.triangles[v] += common.len();
        for &w in &common {
            self.triangles[w] += 1;
        }
        self.adjacency[u].push(v);
        self.adjacency[v].push(u);
        common
    }
}

fn grow(config: &SynthesisConfig, alpha: Option<f64>) -> Result<Graph> {
    let (n, m) = (config.n, config.m);
    let mut rng = seed::rng(config.seed);
    let mut growth = Growth {
        adjacency: vec![Vec::new(); n],
        triangles: vec![0; n],
        alpha,
    };
    for u in 0..=m {
        for v in (u + 1)..=m {
            growth.connect(u, v);
        }
    }
    // attachment degrees, refreshed per arriving node
    let mut snapshot: Vec<usize> = growth.adjacency.iter().map(Vec::len).collect();
    let mut weights = WeightTree::new(n);
    for i in 0..=m {
        weights.set(i, growth.weight(i, snapshot[i]));
    }

    let mut targets = Vec::with_capacity(m);
    for new in (m + 1)..n {
        targets.clear();
        for _ in 0..m {
            let target = weights.sample(&mut rng, new);
            weights.set(target, 0.0);
            let common = growth.connect(new, target);
            targets.push(target);
            if growth.alpha.is_some() {
                // clustering of the common neighbors changed; chosen nodes stay excluded
                for w in common {
                    if weights.get(w) > 0.0 {
                        weights.set(w, growth.weight(w, snapshot[w]));
                    }
                }
            }
        }
        for &t in &targets {
            snapshot[t] = growth.adjacency[t].len();
        }
        snapshot[new] = growth.adjacency[new].len();
        for &t in targets.iter().chain(std::iter::once(&new)) {
            weights.set(t, growth.weight(t, snapshot[t]));
        }
    }
    Ok(Graph::from_adjacency(growth.adjacency))
}

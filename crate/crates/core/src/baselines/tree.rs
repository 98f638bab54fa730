//! CART regression trees with squared-error splits.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_leaf: 2,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub width: usize,
    pub nodes: Vec<Node>,
}

struct Builder<'a, R> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: TreeParams,
    rng: Option<&'a mut R>,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let n = samples.len();
        let sum: f64 = samples.iter().map(|&i| self.y[i]).sum();
        let mean = sum / n as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean });

        let constant = samples.iter().all(|&i| self.y[i] == self.y[samples[0]]);
        if depth >= self.params.max_depth || n < 2 * self.params.min_leaf.max(1) || constant {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(samples, sum) else {
            return id;
        };
        let (mut left, mut right): (Vec<usize>, Vec<usize>) =
            samples.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let l = self.build(&mut left, depth + 1);
        let r = self.build(&mut right, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left: l,
            right: r,
        };
        id
    }

    fn features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = index::sample(rng, d, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    /// Best `(feature, threshold)` by squared-error reduction. Ties keep the
    /// lowest feature index, then the lowest threshold.
    fn best_split(&mut self, samples: &mut [usize], sum: f64) -> Option<(usize, f64)> {
        let n = samples.len();
        let min_leaf = self.params.min_leaf.max(1);
        let parent = sum * sum / n as f64;
        let mut best: Option<(usize, f64, f64)> = None;
        for f in self.features() {
            let x = self.x;
            samples.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.y[samples[k]];
                let (nl, nr) = (k + 1, n - k - 1);
                let (lo, hi) = (x[samples[k]][f], x[samples[k + 1]][f]);
                if nl < min_leaf || nr < min_leaf || lo == hi {
                    continue;
                }
                let right_sum = sum - left_sum;
                let score = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64;
                if best.is_none_or(|(_, _, s)| score > s) {
                    best = Some((f, 0.5 * (lo + hi), score));
                }
            }
        }
        best.filter(|&(_, _, s)| s > parent + 1e-12 * parent.abs().max(1e-300))
            .map(|(f, t, _)| (f, t))
    }
}

impl RegressionTree {
    /// Fits on the rows listed in `samples` (duplicates allowed, as in a
    /// bootstrap draw). `rng` is only consulted when `max_features` limits
    /// the candidate features.
    pub fn fit_on<R: Rng>(
        x: &[Vec<f64>],
        y: &[f64],
        samples: &[usize],
        params: TreeParams,
        rng: Option<&mut R>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("tree training set"));
        }
        let width = x[0].len();
        let mut builder = Builder {
            x,
            y,
            params,
            rng,
            nodes: Vec::new(),
        };
        let mut s = samples.to_vec();
        builder.build(&mut s, 0);
        Ok(RegressionTree {
            width,
            nodes: builder.nodes,
        })
    }

    pub fn fit(x: &[Vec<f64>], y: &[f64], params: TreeParams) -> Result<Self> {
        let all: Vec<usize> = (0..x.len()).collect();
        Self::fit_on::<rand_chacha::ChaCha8Rng>(x, y, &all, params, None)
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            match self.nodes[id] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], id: usize) -> usize {
            match nodes[id] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::tree::{RegressionTree, TreeParams};
use crate::error::Result;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<RegressionTree>,
}

impl RandomForest {
    /// Tree `t` draws its bootstrap sample and feature subsets from
    /// `derive(seed, t)`, so the fit does not depend on thread scheduling.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: ForestParams, seed: u64) -> Result<Self> {
        let n = x.len();
        let trees = (0..params.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed, t as u64));
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                RegressionTree::fit_on(x, y, &samples, params.tree, Some(&mut rng))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomForest { trees })
    }

    pub fn tree_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.tree_predictions(row).iter().sum::<f64>() / self.trees.len() as f64
    }
}

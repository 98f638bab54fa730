use serde::{Deserialize, Serialize};

use crate::baselines::tree::{RegressionTree, TreeParams};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

/// Least-squares gradient boosting: each round fits a shallow tree to the
/// current residuals and adds a shrunken copy of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Training MSE after the initial constant and after every round.
    pub train_loss: Vec<f64>,
}

fn mse(residual: &[f64]) -> f64 {
    residual.iter().map(|r| r * r).sum::<f64>() / residual.len() as f64
}

impl GradientBoosting {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: BoostingParams) -> Result<Self> {
        let init = y.iter().sum::<f64>() / y.len() as f64;
        let mut residual: Vec<f64> = y.iter().map(|v| v - init).collect();
        let mut train_loss = vec![mse(&residual)];
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: 1,
            max_features: None,
        };
        let mut trees = Vec::with_capacity(params.rounds);
        for _ in 0..params.rounds {
            let tree = RegressionTree::fit(x, &residual, tree_params)?;
            for (r, row) in residual.iter_mut().zip(x) {
                *r -= params.learning_rate * tree.predict_row(row);
            }
            train_loss.push(mse(&residual));
            trees.push(tree);
        }
        Ok(GradientBoosting {
            init,
            learning_rate: params.learning_rate,
            trees,
            train_loss,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.init
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict_row(row))
                .sum::<f64>()
    }
}

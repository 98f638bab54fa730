//! The six classical comparison regressors behind one fit/predict surface.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod rbf;
pub mod ridge;
pub mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svr::SvrParams;

pub use boosting::{BoostingParams, GradientBoosting};
pub use forest::{ForestParams, RandomForest};
pub use knn::KNearest;
pub use rbf::RbfSvr;
pub use ridge::Ridge;
pub use tree::{RegressionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    RidgeLinear,
    KNearest,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    RbfSvr,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::RidgeLinear,
        BaselineKind::KNearest,
        BaselineKind::DecisionTree,
        BaselineKind::RandomForest,
        BaselineKind::GradientBoosting,
        BaselineKind::RbfSvr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::RidgeLinear => "ridge",
            BaselineKind::KNearest => "knn",
            BaselineKind::DecisionTree => "tree",
            BaselineKind::RandomForest => "forest",
            BaselineKind::GradientBoosting => "boosting",
            BaselineKind::RbfSvr => "rbf_svr",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    pub ridge_lambda: f64,
    pub knn_k: usize,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
    pub forest_trees: usize,
    /// `None` means `floor(sqrt(d))`.
    pub forest_max_features: Option<usize>,
    pub boosting_rounds: usize,
    pub boosting_depth: usize,
    pub boosting_learning_rate: f64,
    pub rbf_c: f64,
    pub rbf_epsilon: f64,
    /// `None` means `1 / d`.
    pub rbf_gamma: Option<f64>,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            ridge_lambda: 1.0,
            knn_k: 5,
            tree_max_depth: 8,
            tree_min_leaf: 2,
            forest_trees: 100,
            forest_max_features: None,
            boosting_rounds: 200,
            boosting_depth: 3,
            boosting_learning_rate: 0.05,
            rbf_c: 1.0,
            rbf_epsilon: 0.1,
            rbf_gamma: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineModel {
    RidgeLinear(Ridge),
    KNearest(KNearest),
    DecisionTree(RegressionTree),
    RandomForest(RandomForest),
    GradientBoosting(GradientBoosting),
    RbfSvr(RbfSvr),
}

fn check_xy(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "baselines need at least two rows, got {}",
            x.len()
        )));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::InvalidArgument("baselines need at least one feature".into()));
    }
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("baseline training data".into()));
    }
    Ok(d)
}

pub fn fit_baseline(
    kind: BaselineKind,
    x: &[Vec<f64>],
    y: &[f64],
    params: &BaselineParams,
    seed: u64,
) -> Result<BaselineModel> {
    let d = check_xy(x, y)?;
    let tree = TreeParams {
        max_depth: params.tree_max_depth,
        min_leaf: params.tree_min_leaf,
        max_features: None,
    };
    Ok(match kind {
        BaselineKind::RidgeLinear => BaselineModel::RidgeLinear(Ridge::fit(x, y, params.ridge_lambda)?),
        BaselineKind::KNearest => BaselineModel::KNearest(KNearest::fit(x, y, params.knn_k)?),
        BaselineKind::DecisionTree => BaselineModel::DecisionTree(RegressionTree::fit(x, y, tree)?),
        BaselineKind::RandomForest => {
            let max_features = params
                .forest_max_features
                .unwrap_or(((d as f64).sqrt().floor() as usize).max(1));
            let fp = ForestParams {
                n_trees: params.forest_trees,
                tree: TreeParams {
                    max_features: Some(max_features),
                    ..tree
                },
                bootstrap: true,
            };
            BaselineModel::RandomForest(RandomForest::fit(x, y, fp, seed)?)
        }
        BaselineKind::GradientBoosting => BaselineModel::GradientBoosting(GradientBoosting::fit(
            x,
            y,
            BoostingParams {
                rounds: params.boosting_rounds,
                max_depth: params.boosting_depth,
                learning_rate: params.boosting_learning_rate,
            },
        )?),
        BaselineKind::RbfSvr => {
            let gamma = params.rbf_gamma.unwrap_or(1.0 / d as f64);
            let svr = SvrParams {
                c: params.rbf_c,
                epsilon: params.rbf_epsilon,
                ..SvrParams::default()
            };
            BaselineModel::RbfSvr(RbfSvr::fit(x, y, gamma, &svr)?)
        }
    })
}

impl BaselineModel {
    pub fn kind(&self) -> BaselineKind {
        match self {
            BaselineModel::RidgeLinear(_) => BaselineKind::RidgeLinear,
            BaselineModel::KNearest(_) => BaselineKind::KNearest,
            BaselineModel::DecisionTree(_) => BaselineKind::DecisionTree,
            BaselineModel::RandomForest(_) => BaselineKind::RandomForest,
            BaselineModel::GradientBoosting(_) => BaselineKind::GradientBoosting,
            BaselineModel::RbfSvr(_) => BaselineKind::RbfSvr,
        }
    }

    pub fn width(&self) -> usize {
        match self {
            BaselineModel::RidgeLinear(m) => m.coefficients.len(),
            BaselineModel::KNearest(m) => m.x[0].len(),
            BaselineModel::DecisionTree(m) => m.width,
            BaselineModel::RandomForest(m) => m.trees[0].width,
            BaselineModel::GradientBoosting(m) => m.trees.first().map_or(0, |t| t.width),
            BaselineModel::RbfSvr(m) => m.x[0].len(),
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let d = self.width();
        for row in x {
            // Boosting with zero rounds has no recorded width.
            if d != 0 && row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
        }
        Ok(match self {
            BaselineModel::RidgeLinear(m) => x.iter().map(|r| m.predict_row(r)).collect(),
            BaselineModel::KNearest(m) => x.iter().map(|r| m.predict_row(r)).collect(),
            BaselineModel::DecisionTree(m) => x.iter().map(|r| m.predict_row(r)).collect(),
            BaselineModel::RandomForest(m) => x.iter().map(|r| m.predict_row(r)).collect(),
            BaselineModel::GradientBoosting(m) => x.iter().map(|r| m.predict_row(r)).collect(),
            BaselineModel::RbfSvr(m) => m.predict(x),
        })
    }
}

pub fn predict_baseline(model: &BaselineModel, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_xy(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = crate::seed::rng(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>() * 3.0).collect()).collect();
        let y = x.iter().map(|r| r[0].sin() + 0.5 * r[1] + 0.1 * rng.random::<f64>()).collect();
        (x, y)
    }

    #[test]
    fn ridge_recovers_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.3]).collect();
        let y: Vec<f64> = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let p = BaselineParams {
            ridge_lambda: 1e-12,
            ..Default::default()
        };
        let BaselineModel::RidgeLinear(m) = fit_baseline(BaselineKind::RidgeLinear, &x, &y, &p, 0).unwrap()
        else {
            unreachable!()
        };
        assert!((m.coefficients[0] - 2.0).abs() < 1e-6);
        assert!((m.intercept - 1.0).abs() < 1e-6);
    }

    #[test]
    fn one_nn_memorizes() {
        let (x, y) = random_xy(20, 3, 1);
        let p = BaselineParams { knn_k: 1, ..Default::default() };
        let m = fit_baseline(BaselineKind::KNearest, &x, &y, &p, 0).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
        let big = BaselineParams { knn_k: 21, ..Default::default() };
        assert!(fit_baseline(BaselineKind::KNearest, &x, &y, &big, 0).is_err());
    }

    #[test]
    fn constant_labels_every_kind() {
        let (x, _) = random_xy(30, 4, 2);
        let y = vec![0.7; 30];
        for kind in BaselineKind::ALL {
            let m = fit_baseline(kind, &x, &y, &BaselineParams::default(), 3).unwrap();
            for v in m.predict(&x).unwrap() {
                assert!((v - 0.7).abs() < 1e-9, "{kind}: {v}");
            }
        }
    }

    #[test]
    fn single_tree_forest_equals_tree() {
        let (x, y) = random_xy(40, 3, 4);
        let tp = TreeParams::default();
        let forest = RandomForest::fit(
            &x,
            &y,
            ForestParams {
                n_trees: 1,
                tree: tp,
                bootstrap: false,
            },
            9,
        )
        .unwrap();
        let tree = RegressionTree::fit(&x, &y, tp).unwrap();
        for r in &x {
            assert_eq!(forest.predict_row(r), tree.predict_row(r));
        }
    }

    #[test]
    fn forest_is_mean_of_trees() {
        let (x, y) = random_xy(40, 3, 5);
        let m = fit_baseline(BaselineKind::RandomForest, &x, &y, &BaselineParams::default(), 1).unwrap();
        let BaselineModel::RandomForest(f) = &m else { unreachable!() };
        for r in &x {
            let tp = f.tree_predictions(r);
            let mean = tp.iter().sum::<f64>() / tp.len() as f64;
            assert!((f.predict_row(r) - mean).abs() < 1e-10);
        }
    }

    #[test]
    fn boosting_loss_non_increasing() {
        let (x, y) = random_xy(50, 3, 6);
        let m = fit_baseline(BaselineKind::GradientBoosting, &x, &y, &BaselineParams::default(), 0).unwrap();
        let BaselineModel::GradientBoosting(g) = &m else { unreachable!() };
        assert_eq!(g.train_loss.len(), 201);
        assert!(g.train_loss.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn flat_rbf_gives_flat_predictions() {
        let (x, y) = random_xy(20, 2, 7);
        let p = BaselineParams {
            rbf_gamma: Some(1e-12),
            ..Default::default()
        };
        let m = fit_baseline(BaselineKind::RbfSvr, &x, &y, &p, 0).unwrap();
        let (test, _) = random_xy(10, 2, 8);
        let pred = m.predict(&test).unwrap();
        assert!(pred.iter().all(|v| (v - pred[0]).abs() < 1e-6));
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = random_xy(30, 3, 9);
        for kind in BaselineKind::ALL {
            let a = fit_baseline(kind, &x, &y, &BaselineParams::default(), 4).unwrap();
            let b = fit_baseline(kind, &x, &y, &BaselineParams::default(), 4).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn width_mismatch_on_predict() {
        let (x, y) = random_xy(10, 3, 10);
        let m = fit_baseline(BaselineKind::DecisionTree, &x, &y, &BaselineParams::default(), 0).unwrap();
        assert!(m.predict(&[vec![1.0, 2.0]]).is_err());
        assert!(fit_baseline(BaselineKind::RidgeLinear, &x[..1], &y[..1], &BaselineParams::default(), 0).is_err());
    }
}

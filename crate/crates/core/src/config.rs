//! Flat JSON pipeline configuration. Every key is optional and unknown keys
//! are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineParams;
use crate::error::{Error, Result};
use crate::feature_map::{Entanglement, Family, FeatureMapSpec};
use crate::qkernel::KernelMode;
use crate::seed;
use crate::svr::SvrParams;
use crate::vae::VaeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Exact,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Feature map family, `"z"` or `"zz"`. Default `"zz"`.
    pub feature_map: Family,
    /// `"none"`, `"linear"` or `"full"`. Default `"full"`.
    pub entanglement: Entanglement,
    /// Feature map repetitions. Default 2.
    pub reps: usize,

    /// SVR box constraint. Default 1.0.
    pub svr_c: f64,
    /// Width of the insensitive tube. Default 0.1.
    pub svr_epsilon: f64,
    /// KKT tolerance. Default 1e-3.
    pub svr_tol: f64,

    pub vae_hidden: usize,
    pub vae_latent: usize,
    pub vae_epochs: usize,
    pub vae_learning_rate: f64,
    pub vae_batch_size: usize,
    pub vae_kl_weight: f64,
    pub vae_warmup_fraction: f64,
    /// Augmented training size as a multiple of the real training size.
    /// Default 3.
    pub augment_factor: usize,

    /// Min-max scale the raw encoded columns to `[0, 1]` before PCA, so the
    /// reduction is not dominated by the columns with the largest units.
    /// Default true.
    pub raw_scale: bool,
    /// Principal components kept, which is also the qubit count. Default 5.
    pub pca_components: usize,
    /// Fit PCA separately on the test set instead of reusing the training fit.
    pub pca_per_set: bool,

    pub kernel: KernelKind,
    /// Shots per kernel entry in sampled mode. Default 1024.
    pub shots: u64,

    /// Master seed for splits, augmentation, sampling and baselines.
    pub seed: u64,
    pub train_fraction: f64,

    pub ridge_lambda: f64,
    pub knn_k: usize,
    pub tree_max_depth: usize,
    pub tree_min_leaf: usize,
    pub forest_trees: usize,
    pub forest_max_features: Option<usize>,
    pub boosting_rounds: usize,
    pub boosting_depth: usize,
    pub boosting_learning_rate: f64,
    pub rbf_c: f64,
    pub rbf_epsilon: f64,
    pub rbf_gamma: Option<f64>,

    /// Optional default dataset path used when no path is given on the
    /// command line.
    pub data_path: Option<String>,
    /// Optional default output directory.
    pub out_dir: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let vae = VaeConfig::default();
        let svr = SvrParams::default();
        let b = BaselineParams::default();
        PipelineConfig {
            feature_map: Family::Zz,
            entanglement: Entanglement::Full,
            reps: 2,
            svr_c: svr.c,
            svr_epsilon: svr.epsilon,
            svr_tol: svr.tol,
            vae_hidden: vae.hidden,
            vae_latent: vae.latent,
            vae_epochs: vae.epochs,
            vae_learning_rate: vae.learning_rate,
            vae_batch_size: vae.batch_size,
            vae_kl_weight: vae.kl_weight,
            vae_warmup_fraction: vae.warmup_fraction,
            augment_factor: 3,
            raw_scale: true,
            pca_components: 5,
            pca_per_set: false,
            kernel: KernelKind::Exact,
            shots: 1024,
            seed: 0,
            train_fraction: 0.8,
            ridge_lambda: b.ridge_lambda,
            knn_k: b.knn_k,
            tree_max_depth: b.tree_max_depth,
            tree_min_leaf: b.tree_min_leaf,
            forest_trees: b.forest_trees,
            forest_max_features: b.forest_max_features,
            boosting_rounds: b.boosting_rounds,
            boosting_depth: b.boosting_depth,
            boosting_learning_rate: b.boosting_learning_rate,
            rbf_c: b.rbf_c,
            rbf_epsilon: b.rbf_epsilon,
            rbf_gamma: b.rbf_gamma,
            data_path: None,
            out_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| e.context(format!("config {}", path.display())))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_map_spec()?;
        self.vae_config(0).validate()?;
        let positive = [
            ("svr_c", self.svr_c),
            ("svr_tol", self.svr_tol),
            ("boosting_learning_rate", self.boosting_learning_rate),
            ("rbf_c", self.rbf_c),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite")));
            }
        }
        let non_negative = [
            ("svr_epsilon", self.svr_epsilon),
            ("ridge_lambda", self.ridge_lambda),
            ("rbf_epsilon", self.rbf_epsilon),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative and finite")));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.augment_factor == 0 {
            return Err(Error::InvalidArgument("augment_factor must be at least 1".into()));
        }
        if self.kernel == KernelKind::Sampled && self.shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        let counts = [
            ("knn_k", self.knn_k),
            ("tree_min_leaf", self.tree_min_leaf),
            ("forest_trees", self.forest_trees),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if let Some(g) = self.rbf_gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidArgument("rbf_gamma must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn feature_map_spec(&self) -> Result<FeatureMapSpec> {
        FeatureMapSpec::new(self.feature_map, self.entanglement, self.reps, self.pca_components)
    }

    pub fn svr_params(&self) -> SvrParams {
        SvrParams {
            c: self.svr_c,
            epsilon: self.svr_epsilon,
            tol: self.svr_tol,
            max_iter: None,
        }
    }

    pub fn vae_config(&self, seed: u64) -> VaeConfig {
        VaeConfig {
            hidden: self.vae_hidden,
            latent: self.vae_latent,
            epochs: self.vae_epochs,
            learning_rate: self.vae_learning_rate,
            batch_size: self.vae_batch_size,
            kl_weight: self.vae_kl_weight,
            warmup_fraction: self.vae_warmup_fraction,
            seed,
        }
    }

    pub fn kernel_mode(&self, seed: u64) -> KernelMode {
        match self.kernel {
            KernelKind::Exact => KernelMode::Exact,
            KernelKind::Sampled => KernelMode::Sampled {
                shots: self.shots,
                seed,
            },
        }
    }

    pub fn baseline_params(&self) -> BaselineParams {
        BaselineParams {
            ridge_lambda: self.ridge_lambda,
            knn_k: self.knn_k,
            tree_max_depth: self.tree_max_depth,
            tree_min_leaf: self.tree_min_leaf,
            forest_trees: self.forest_trees,
            forest_max_features: self.forest_max_features,
            boosting_rounds: self.boosting_rounds,
            boosting_depth: self.boosting_depth,
            boosting_learning_rate: self.boosting_learning_rate,
            rbf_c: self.rbf_c,
            rbf_epsilon: self.rbf_epsilon,
            rbf_gamma: self.rbf_gamma,
        }
    }
}

/// Seeds for the independent random streams of one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub split: u64,
    pub vae: u64,
    pub kernel: u64,
    pub baselines: u64,
}

impl RunSeeds {
    pub fn from_master(master: u64) -> Self {
        RunSeeds {
            split: seed::derive(master, 0),
            vae: seed::derive(master, 1),
            kernel: seed::derive(master, 2),
            baselines: seed::derive(master, 3),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(PipelineConfig::from_json_str("{}").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn default_round_trips() {
        let cfg = PipelineConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json_str(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = PipelineConfig::from_json_str(r#"{"svr_cc": 2.0}"#).unwrap_err();
        assert!(err.to_string().contains("svr_cc"), "{err}");
    }

    #[test]
    fn partial_override() {
        let cfg = PipelineConfig::from_json_str(
            r#"{"feature_map": "z", "entanglement": "none", "reps": 1, "kernel": "sampled", "shots": 500}"#,
        )
        .unwrap();
        assert_eq!(cfg.feature_map_spec().unwrap().gate_count(), 10);
        assert_eq!(cfg.kernel_mode(3), KernelMode::Sampled { shots: 500, seed: 3 });
        assert_eq!(cfg.svr_c, 1.0);
    }

    #[test]
    fn invalid_values_rejected() {
        for text in [
            r#"{"svr_c": 0}"#,
            r#"{"train_fraction": 1.0}"#,
            r#"{"pca_components": 0}"#,
            r#"{"feature_map": "z"}"#,
            r#"{"knn_k": 0}"#,
            r#"{"vae_epochs": 0}"#,
        ] {
            assert!(PipelineConfig::from_json_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn seeds_are_distinct() {
        let s = RunSeeds::from_master(7);
        let all = [s.split, s.vae, s.kernel, s.baselines];
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(all[i], all[j]);
            }
        }
    }
}

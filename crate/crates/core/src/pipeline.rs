//! End-to-end pipeline: split, encode, reduce, scale, augment, embed, fit.
//! A trained pipeline freezes into a JSON bundle.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{metrics, MetricSet};
use crate::config::{PipelineConfig, RunSeeds};
use crate::error::{Error, Result};
use crate::feature_map::FeatureMapSpec;
use crate::preprocess::{
    self, DeviceRecord, EncodedDataset, PcaModel, ScalerModel, FEATURE_WIDTH, SCHEMA_VERSION,
};
use crate::qkernel::{cross_matrix, gram_matrix, psd_project, KernelMode};
use crate::svr::{self, SvrModel, SvrParams};
use crate::vae::{self, TrainTrace, VaeModel};

/// Version of the bundle and report layouts.
pub const ARTIFACT_VERSION: u32 = 1;

/// Train and test sets in the kernel's input space.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Experimental training rows followed by synthesized ones.
    pub train: EncodedDataset,
    /// Experimental rows only.
    pub test: EncodedDataset,
    /// Column scaler applied to the encoded rows before PCA, if enabled.
    pub raw_scaler: Option<ScalerModel>,
    pub pca: PcaModel,
    pub scaler: ScalerModel,
    pub vae: Option<VaeModel>,
    pub vae_trace: Option<TrainTrace>,
}

impl Prepared {
    pub fn real_train_len(&self) -> usize {
        self.train.count(preprocess::Provenance::Experimental)
    }
}

/// Encodes, reduces, scales and augments an existing split. Scalers and PCA
/// are fit on the training rows; with `pca_per_set` the test rows get their
/// own PCA fit.
pub fn prepare(
    train_records: &[DeviceRecord],
    test_records: &[DeviceRecord],
    config: &PipelineConfig,
    vae_seed: u64,
) -> Result<Prepared> {
    let train = EncodedDataset::from_records(train_records)?;
    let test = EncodedDataset::from_records(test_records)?;
    train.assert_experimental()?;
    test.assert_experimental()?;
    let raw_scaler = if config.raw_scale {
        Some(ScalerModel::fit_range(&train.x, 0.0, 1.0)?)
    } else {
        None
    };
    let (train_raw, test_raw) = match &raw_scaler {
        Some(s) => (s.transform(&train.x)?, s.transform(&test.x)?),
        None => (train.x.clone(), test.x.clone()),
    };
    let k = config.pca_components;
    let pca = PcaModel::fit(&train_raw, k).map_err(|e| e.context("PCA on training set"))?;
    let train_reduced = pca.transform(&train_raw)?;
    let test_reduced = if config.pca_per_set {
        PcaModel::fit(&test_raw, k)
            .map_err(|e| e.context("PCA on test set"))?
            .transform(&test_raw)?
    } else {
        pca.transform(&test_raw)?
    };
    let scaler = ScalerModel::fit(&train_reduced)?;
    let train = train.with_features(scaler.transform(&train_reduced)?);
    let test = test.with_features(scaler.transform(&test_reduced)?);
    let target = train.len() * config.augment_factor;
    let augmented = vae::augment(&train, target, &config.vae_config(vae_seed))?;
    augmented.data.assert_disjoint(&test)?;
    Ok(Prepared {
        train: augmented.data,
        test,
        raw_scaler,
        pca,
        scaler,
        vae: augmented.model,
        vae_trace: augmented.trace,
    })
}

/// Fidelity-kernel SVR together with the rows it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkrModel {
    pub feature_map: FeatureMapSpec,
    pub kernel_mode: KernelMode,
    pub svr: SvrModel,
    pub train_x: Vec<Vec<f64>>,
}

impl QkrModel {
    /// Sampled Gram matrices are projected onto the PSD cone before fitting.
    pub fn fit(
        spec: FeatureMapSpec,
        data: &EncodedDataset,
        params: &SvrParams,
        mode: KernelMode,
    ) -> Result<Self> {
        let mut gram = gram_matrix(&spec, &data.x, &data.ids, mode)?;
        if matches!(mode, KernelMode::Sampled { .. }) {
            gram = psd_project(&gram)?;
        }
        let svr = svr::fit(&gram, &data.y, params)?;
        Ok(QkrModel {
            feature_map: spec,
            kernel_mode: mode,
            svr,
            train_x: data.x.clone(),
        })
    }

    pub fn predict(&self, x: &[Vec<f64>], ids: &[String]) -> Result<Vec<f64>> {
        let cross = cross_matrix(
            &self.feature_map,
            x,
            ids,
            &self.train_x,
            &self.svr.train_ids,
            self.kernel_mode,
        )?;
        self.svr.predict(&cross)
    }

    fn validate(&self) -> Result<()> {
        self.feature_map.validate()?;
        let n = self.svr.train_ids.len();
        if self.train_x.len() != n || self.svr.beta.len() != n {
            return Err(Error::Schema(format!(
                "model has {} rows, {} coefficients and {} ids",
                self.train_x.len(),
                self.svr.beta.len(),
                n
            )));
        }
        let d = self.feature_map.n_features;
        if let Some(row) = self.train_x.iter().find(|r| r.len() != d) {
            return Err(Error::Schema(format!(
                "training row has width {}, feature map expects {d}",
                row.len()
            )));
        }
        if self
            .train_x
            .iter()
            .flatten()
            .chain(&self.svr.beta)
            .chain(std::iter::once(&self.svr.bias))
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("bundle model".into()));
        }
        Ok(())
    }
}

/// Frozen pipeline: everything needed to predict from raw records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineBundle {
    pub artifact_version: u32,
    pub schema_version: u32,
    pub feature_width: usize,
    pub config: PipelineConfig,
    pub raw_scaler: Option<ScalerModel>,
    pub pca: PcaModel,
    pub scaler: ScalerModel,
    pub vae: Option<VaeModel>,
    pub model: QkrModel,
}

impl PipelineBundle {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let bundle: PipelineBundle = serde_json::from_str(text)?;
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::from(e).context(format!("reading {}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| e.context(format!("bundle {}", path.display())))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string()?)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.artifact_version != ARTIFACT_VERSION {
            return Err(Error::Schema(format!(
                "bundle artifact version {} is not supported (expected {ARTIFACT_VERSION})",
                self.artifact_version
            )));
        }
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "bundle schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.feature_width != FEATURE_WIDTH || self.pca.input_width() != FEATURE_WIDTH {
            return Err(Error::Schema(format!(
                "bundle expects feature width {}, records encode to width {FEATURE_WIDTH}",
                self.pca.input_width()
            )));
        }
        let k = self.pca.n_components();
        let rows_ok = self.pca.components.iter().all(|c| c.len() == FEATURE_WIDTH)
            && self.pca.mean.len() == FEATURE_WIDTH;
        if !rows_ok || self.scaler.width() != k || self.model.feature_map.n_features != k {
            return Err(Error::Schema(format!(
                "bundle widths disagree: pca {k}, scaler {}, feature map {}",
                self.scaler.width(),
                self.model.feature_map.n_features
            )));
        }
        if !scaler_consistent(&self.scaler, k) {
            return Err(Error::Schema("scaler bounds are inconsistent".into()));
        }
        if let Some(raw) = &self.raw_scaler {
            if !scaler_consistent(raw, FEATURE_WIDTH) {
                return Err(Error::Schema(format!(
                    "raw scaler must have {FEATURE_WIDTH} consistent columns"
                )));
            }
        }
        self.model.validate()
    }

    /// Applies the frozen encoding, PCA and scaling.
    pub fn transform(&self, records: &[DeviceRecord]) -> Result<Vec<Vec<f64>>> {
        let rows = records
            .iter()
            .map(|r| preprocess::encode_record(r).map(|v| v.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let rows = match &self.raw_scaler {
            Some(s) => s.transform(&rows)?,
            None => rows,
        };
        self.scaler.transform(&self.pca.transform(&rows)?)
    }

    pub fn predict(&self, records: &[DeviceRecord]) -> Result<Vec<f64>> {
        if records.is_empty() {
            return Err(Error::Empty("prediction records"));
        }
        let x = self.transform(records)?;
        let ids: Vec<String> = records.iter().map(|r| r.record_id.clone()).collect();
        self.model.predict(&x, &ids)
    }
}

fn scaler_consistent(s: &ScalerModel, width: usize) -> bool {
    s.min.len() == width
        && s.max.len() == width
        && s.lo.is_finite()
        && s.hi.is_finite()
        && s.lo < s.hi
        && s.min.iter().zip(&s.max).all(|(a, b)| a.is_finite() && b.is_finite() && a <= b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub id: String,
    pub measured: f64,
    pub predicted: f64,
    pub residual: f64,
}

pub fn residual_rows(ids: &[String], measured: &[f64], predicted: &[f64]) -> Vec<ResidualRow> {
    ids.iter()
        .zip(measured)
        .zip(predicted)
        .map(|((id, &m), &p)| ResidualRow {
            id: id.clone(),
            measured: m,
            predicted: p,
            residual: m - p,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub artifact_version: u32,
    pub n_train_experimental: usize,
    pub n_train_augmented: usize,
    pub n_test: usize,
    pub explained_variance_ratio: Vec<f64>,
    pub support_vectors: usize,
    pub smo_iterations: usize,
    pub test_metrics: MetricSet,
    pub residuals: Vec<ResidualRow>,
    pub vae_final_loss: Option<f64>,
    pub config: PipelineConfig,
}

/// Runs the whole training workflow on an all-experimental dataset.
pub fn train_pipeline(
    records: &[DeviceRecord],
    config: &PipelineConfig,
) -> Result<(PipelineBundle, TrainReport)> {
    config.validate()?;
    let seeds = RunSeeds::from_master(config.seed);
    let (train_records, test_records) =
        preprocess::split(records, config.train_fraction, seeds.split)?;
    let prep = prepare(&train_records, &test_records, config, seeds.vae)?;
    let model = QkrModel::fit(
        config.feature_map_spec()?,
        &prep.train,
        &config.svr_params(),
        config.kernel_mode(seeds.kernel),
    )?;
    let predicted = model.predict(&prep.test.x, &prep.test.ids)?;
    let test_metrics = metrics(&prep.test.y, &predicted)?;
    let report = TrainReport {
        artifact_version: ARTIFACT_VERSION,
        n_train_experimental: prep.real_train_len(),
        n_train_augmented: prep.train.len(),
        n_test: prep.test.len(),
        explained_variance_ratio: prep.pca.explained_variance_ratio.clone(),
        support_vectors: model.svr.support.len(),
        smo_iterations: model.svr.iterations,
        test_metrics,
        residuals: residual_rows(&prep.test.ids, &prep.test.y, &predicted),
        vae_final_loss: prep.vae_trace.as_ref().and_then(|t| t.loss.last().copied()),
        config: config.clone(),
    };
    let bundle = PipelineBundle {
        artifact_version: ARTIFACT_VERSION,
        schema_version: SCHEMA_VERSION,
        feature_width: FEATURE_WIDTH,
        config: config.clone(),
        raw_scaler: prep.raw_scaler,
        pca: prep.pca,
        scaler: prep.scaler,
        vae: prep.vae,
        model,
    };
    Ok((bundle, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{synth_dataset, Provenance, SynthConfig};

    fn small_config() -> PipelineConfig {
        PipelineConfig {
            vae_epochs: 30,
            reps: 1,
            ..PipelineConfig::default()
        }
    }

    fn records(n: usize) -> Vec<DeviceRecord> {
        synth_dataset(&SynthConfig {
            n,
            seed: 3,
            noise_sd: 0.05,
        })
        .unwrap()
    }

    #[test]
    fn prepare_shapes() {
        let recs = records(40);
        let (tr, te) = preprocess::split(&recs, 0.8, 1).unwrap();
        let p = prepare(&tr, &te, &small_config(), 2).unwrap();
        assert_eq!(p.train.len(), 96);
        assert_eq!(p.real_train_len(), 32);
        assert_eq!(p.test.len(), 8);
        assert_eq!(p.test.count(Provenance::Synthesized), 0);
        for row in p.train.x.iter().chain(&p.test.x) {
            assert_eq!(row.len(), 5);
            assert!(row.iter().all(|v| (0.0..=std::f64::consts::PI).contains(v)));
        }
    }

    #[test]
    fn per_set_pca_changes_test_rows_only() {
        let recs = records(40);
        let (tr, te) = preprocess::split(&recs, 0.8, 1).unwrap();
        let a = prepare(&tr, &te, &small_config(), 2).unwrap();
        let cfg = PipelineConfig {
            pca_per_set: true,
            ..small_config()
        };
        let b = prepare(&tr, &te, &cfg, 2).unwrap();
        assert_eq!(a.train, b.train);
        assert_ne!(a.test.x, b.test.x);
    }

    #[test]
    fn bundle_round_trip_and_prediction() {
        let recs = records(40);
        let (bundle, report) = train_pipeline(&recs, &small_config()).unwrap();
        assert_eq!(report.n_test, 8);
        assert_eq!(report.residuals.len(), 8);
        let text = bundle.to_json_string().unwrap();
        let back = PipelineBundle::from_json_str(&text).unwrap();
        assert_eq!(back, bundle);
        let seeds = RunSeeds::from_master(0);
        let (_, te) = preprocess::split(&recs, 0.8, seeds.split).unwrap();
        let pred = back.predict(&te).unwrap();
        for (row, p) in report.residuals.iter().zip(&pred) {
            assert_eq!(row.predicted, *p);
        }
    }

    #[test]
    fn bundle_rejects_inconsistent_widths() {
        let (bundle, _) = train_pipeline(&records(30), &small_config()).unwrap();
        let mut bad = bundle.clone();
        bad.model.train_x[0].pop();
        assert!(PipelineBundle::from_json_str(&bad.to_json_string().unwrap()).is_err());
        let mut bad = bundle.clone();
        bad.artifact_version = 99;
        assert!(PipelineBundle::from_json_str(&bad.to_json_string().unwrap()).is_err());
        let mut bad = bundle;
        bad.pca.mean.push(0.0);
        bad.feature_width = 38;
        let err = PipelineBundle::from_json_str(&bad.to_json_string().unwrap()).unwrap_err();
        assert!(err.to_string().contains("width"), "{err}");
    }

    #[test]
    fn raw_scale_off_round_trips() {
        let cfg = PipelineConfig {
            raw_scale: false,
            ..small_config()
        };
        let (bundle, _) = train_pipeline(&records(30), &cfg).unwrap();
        assert!(bundle.raw_scaler.is_none());
        let back = PipelineBundle::from_json_str(&bundle.to_json_string().unwrap()).unwrap();
        assert_eq!(back, bundle);
    }

    #[test]
    fn sampled_training_runs() {
        let cfg = PipelineConfig {
            kernel: crate::config::KernelKind::Sampled,
            shots: 256,
            ..small_config()
        };
        let (_, report) = train_pipeline(&records(30), &cfg).unwrap();
        assert!(report.test_metrics.mae.is_finite());
    }
}

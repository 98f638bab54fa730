use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{advantage_ratio, metrics, reference_metrics, Metric, MetricSet, Summary};
use crate::baselines::{fit_baseline, BaselineKind};
use crate::config::{PipelineConfig, RunSeeds};
use crate::error::{Error, Result};
use crate::feature_map::FeatureMapSpec;
use crate::pipeline::{prepare, Prepared, QkrModel, ARTIFACT_VERSION};
use crate::preprocess::{self, DeviceRecord, Provenance};
use crate::seed;

pub const QKR: &str = "qkr";
pub const REFERENCE: &str = "reference";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub mae: Summary,
    pub mse: Summary,
    pub rmse: Summary,
    /// One entry per repetition, in repetition order.
    pub runs: Vec<MetricSet>,
}

impl ModelSummary {
    fn from_runs(model: &str, runs: Vec<MetricSet>) -> Result<Self> {
        let col = |m: Metric| Summary::of(&runs.iter().map(|r| r.get(m)).collect::<Vec<_>>());
        Ok(ModelSummary {
            model: model.to_string(),
            mae: col(Metric::Mae)?,
            mse: col(Metric::Mse)?,
            rmse: col(Metric::Rmse)?,
            runs,
        })
    }

    pub fn summary(&self, metric: Metric) -> Summary {
        match metric {
            Metric::Mae => self.mae,
            Metric::Mse => self.mse,
            Metric::Rmse => self.rmse,
        }
    }
}

/// Advantage of the quantum model over one classical model, per metric.
/// `None` where the classical mean is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageRow {
    pub model: String,
    pub mae: Option<f64>,
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub repetition: usize,
    pub model: String,
    pub id: String,
    pub measured: f64,
    pub predicted: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapRow {
    pub name: String,
    pub spec: FeatureMapSpec,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapComparison {
    pub seed: u64,
    pub rows: Vec<FeatureMapRow>,
    pub winner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub artifact_version: u32,
    pub repetitions: usize,
    pub master_seed: u64,
    pub seeds: Vec<u64>,
    /// The quantum model first, then the classical models.
    pub models: Vec<ModelSummary>,
    pub reference: ModelSummary,
    pub advantage: Vec<AdvantageRow>,
    pub feature_maps: Option<FeatureMapComparison>,
    pub predictions: Vec<PredictionRow>,
    pub config: PipelineConfig,
}

impl BenchmarkReport {
    pub fn model(&self, name: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == name)
    }
}

struct Evaluation {
    model: String,
    metrics: MetricSet,
    predicted: Vec<f64>,
}

fn evaluate(prep: &Prepared, model: &str, predicted: Vec<f64>) -> Result<Evaluation> {
    Ok(Evaluation {
        model: model.to_string(),
        metrics: metrics(&prep.test.y, &predicted)?,
        predicted,
    })
}

fn run_qkr(prep: &Prepared, spec: FeatureMapSpec, config: &PipelineConfig, kernel_seed: u64) -> Result<Vec<f64>> {
    let model = QkrModel::fit(spec, &prep.train, &config.svr_params(), config.kernel_mode(kernel_seed))?;
    model.predict(&prep.test.x, &prep.test.ids)
}

/// Repeats split, preprocessing, augmentation and fitting `repetitions`
/// times. Within a repetition every model sees the same rows.
pub fn run_benchmark(
    records: &[DeviceRecord],
    config: &PipelineConfig,
    repetitions: usize,
    master_seed: u64,
) -> Result<BenchmarkReport> {
    config.validate()?;
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
    }
    let spec = config.feature_map_spec()?;
    let baseline_params = config.baseline_params();
    let seeds: Vec<u64> = (0..repetitions as u64).map(|r| seed::derive(master_seed, r)).collect();
    let names: Vec<&str> = std::iter::once(QKR)
        .chain(BaselineKind::ALL.iter().map(|k| k.name()))
        .collect();
    let mut runs: Vec<Vec<MetricSet>> = vec![Vec::with_capacity(repetitions); names.len()];
    let mut reference_runs = Vec::with_capacity(repetitions);
    let mut predictions = Vec::new();

    for (r, &seed_r) in seeds.iter().enumerate() {
        let at = |what: &str| format!("repetition {r}, {what}");
        let s = RunSeeds::from_master(seed_r);
        let (train, test) = preprocess::split(records, config.train_fraction, s.split)
            .map_err(|e| e.context(at("split")))?;
        let prep = prepare(&train, &test, config, s.vae).map_err(|e| e.context(at("preprocessing")))?;

        let qkr = run_qkr(&prep, spec, config, s.kernel)
            .and_then(|p| evaluate(&prep, QKR, p))
            .map_err(|e| e.context(at("model qkr")))?;
        let classical: Vec<Evaluation> = BaselineKind::ALL
            .par_iter()
            .enumerate()
            .map(|(i, &kind)| {
                fit_baseline(
                    kind,
                    &prep.train.x,
                    &prep.train.y,
                    &baseline_params,
                    seed::derive(s.baselines, i as u64),
                )
                .and_then(|m| m.predict(&prep.test.x))
                .and_then(|p| evaluate(&prep, kind.name(), p))
                .map_err(|e| e.context(at(&format!("model {kind}"))))
            })
            .collect::<Result<_>>()?;

        let (real_y, real_p): (Vec<f64>, Vec<Provenance>) = prep
            .train
            .y
            .iter()
            .zip(&prep.train.provenance)
            .filter(|(_, &p)| p == Provenance::Experimental)
            .map(|(&y, &p)| (y, p))
            .unzip();
        reference_runs.push(
            reference_metrics(&real_y, &real_p, &prep.test.y).map_err(|e| e.context(at("reference")))?,
        );

        for (slot, eval) in std::iter::once(qkr).chain(classical).enumerate() {
            debug_assert_eq!(eval.model, names[slot]);
            runs[slot].push(eval.metrics);
            for ((id, &measured), &predicted) in prep.test.ids.iter().zip(&prep.test.y).zip(&eval.predicted) {
                predictions.push(PredictionRow {
                    repetition: r,
                    model: eval.model.clone(),
                    id: id.clone(),
                    measured,
                    predicted,
                    residual: measured - predicted,
                });
            }
        }
    }

    let models = names
        .iter()
        .zip(runs)
        .map(|(name, runs)| ModelSummary::from_runs(name, runs))
        .collect::<Result<Vec<_>>>()?;
    let reference = ModelSummary::from_runs(REFERENCE, reference_runs)?;
    let qkr = &models[0];
    let advantage = models[1..]
        .iter()
        .map(|m| {
            let ratio = |metric: Metric| {
                advantage_ratio(qkr.summary(metric).mean, m.summary(metric).mean).ok()
            };
            AdvantageRow {
                model: m.model.clone(),
                mae: ratio(Metric::Mae),
                mse: ratio(Metric::Mse),
                rmse: ratio(Metric::Rmse),
            }
        })
        .collect();
    Ok(BenchmarkReport {
        artifact_version: ARTIFACT_VERSION,
        repetitions,
        master_seed,
        seeds,
        models,
        reference,
        advantage,
        feature_maps: None,
        predictions,
        config: config.clone(),
    })
}

/// Lowest MAE wins; ties go to lower RMSE, then to the smaller name.
pub fn pick_winner(rows: &[(String, MetricSet)]) -> Option<String> {
    rows.iter()
        .min_by(|a, b| {
            a.1.mae
                .total_cmp(&b.1.mae)
                .then(a.1.rmse.total_cmp(&b.1.rmse))
                .then(a.0.cmp(&b.0))
        })
        .map(|(name, _)| name.clone())
}

/// Fits one quantum model per feature map on a single shared split and
/// augmentation.
pub fn compare_feature_maps(
    records: &[DeviceRecord],
    config: &PipelineConfig,
    specs: &[FeatureMapSpec],
    master_seed: u64,
) -> Result<FeatureMapComparison> {
    config.validate()?;
    if specs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "feature map comparison needs at least two specs, got {}",
            specs.len()
        )));
    }
    let mut seen = HashSet::new();
    for spec in specs {
        spec.validate()?;
        if !seen.insert(*spec) {
            return Err(Error::InvalidArgument(format!("duplicate feature map {}", spec.name())));
        }
        if spec.n_features != config.pca_components {
            return Err(Error::DimensionMismatch {
                expected: config.pca_components,
                got: spec.n_features,
            });
        }
    }
    let s = RunSeeds::from_master(master_seed);
    let (train, test) = preprocess::split(records, config.train_fraction, s.split)?;
    let prep = prepare(&train, &test, config, s.vae)?;
    let rows = specs
        .iter()
        .map(|&spec| {
            let predicted =
                run_qkr(&prep, spec, config, s.kernel).map_err(|e| e.context(format!("feature map {}", spec.name())))?;
            Ok(FeatureMapRow {
                name: spec.name(),
                spec,
                metrics: metrics(&prep.test.y, &predicted)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let table: Vec<(String, MetricSet)> = rows.iter().map(|r| (r.name.clone(), r.metrics)).collect();
    let winner = pick_winner(&table).expect("at least two rows");
    Ok(FeatureMapComparison {
        seed: master_seed,
        rows,
        winner,
    })
}

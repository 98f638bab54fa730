use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Provenance;

/// Regression error summary over one evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// `None` when either vector is constant.
    pub pearson_r: Option<f64>,
    pub n: usize,
}

impl MetricSet {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Mae => self.mae,
            Metric::Mse => self.mse,
            Metric::Rmse => self.rmse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mae,
    Mse,
    Rmse,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mae, Metric::Mse, Metric::Rmse];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mae => "mae",
            Metric::Mse => "mse",
            Metric::Rmse => "rmse",
        }
    }
}

pub fn metrics(y_true: &[f64], y_pred: &[f64]) -> Result<MetricSet> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty("metric inputs"));
    }
    if y_true.iter().chain(y_pred).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("metric inputs".into()));
    }
    let n = y_true.len() as f64;
    let mae = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    let mse = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n;
    // sqrt(mse) can land one ulp under mae when every error has the same size.
    let rmse = mse.sqrt().max(mae);
    Ok(MetricSet {
        mae,
        mse,
        rmse,
        pearson_r: pearson(y_true, y_pred),
        n: y_true.len(),
    })
}

/// Pearson correlation, or `None` if either side has zero variance or the
/// lengths differ.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(a) || constant(b) {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Metrics of the predictor that always answers the mean experimental
/// training label.
pub fn reference_metrics(
    train_labels: &[f64],
    train_provenance: &[Provenance],
    test_labels: &[f64],
) -> Result<MetricSet> {
    if train_labels.len() != train_provenance.len() {
        return Err(Error::DimensionMismatch {
            expected: train_labels.len(),
            got: train_provenance.len(),
        });
    }
    if let Some(i) = train_provenance
        .iter()
        .position(|&p| p != Provenance::Experimental)
    {
        return Err(Error::Contamination(format!("reference label at index {i}")));
    }
    if train_labels.is_empty() {
        return Err(Error::Empty("reference training labels"));
    }
    let mean = train_labels.iter().sum::<f64>() / train_labels.len() as f64;
    metrics(test_labels, &vec![mean; test_labels.len()])
}

/// Relative improvement of the quantum model over a classical one,
/// `(cml - qkr) / cml`.
pub fn advantage_ratio(qkr_mean: f64, cml_mean: f64) -> Result<f64> {
    if !(cml_mean > 0.0) || !qkr_mean.is_finite() || !cml_mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "advantage ratio needs a positive finite denominator, got {cml_mean}"
        )));
    }
    Ok((cml_mean - qkr_mean) / cml_mean)
}

/// Mean and sample standard deviation. A single value has spread zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Summary> {
        if values.is_empty() {
            return Err(Error::Empty("summary values"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Ok(Summary { mean, std })
    }
}

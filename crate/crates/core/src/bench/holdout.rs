use serde::{Deserialize, Serialize};

use super::metrics::{metrics, MetricSet};
use crate::error::{Error, Result};
use crate::pipeline::PipelineBundle;
use crate::preprocess::DeviceRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutRow {
    pub id: String,
    pub measured: f64,
    pub predicted: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub rows: Vec<HoldoutRow>,
    pub mae: f64,
    pub metrics: MetricSet,
}

/// Predicts labelled external records through a frozen bundle.
pub fn verify_holdout(bundle: &PipelineBundle, records: &[DeviceRecord]) -> Result<HoldoutReport> {
    if records.is_empty() {
        return Err(Error::Empty("external records"));
    }
    let measured = records
        .iter()
        .map(|r| {
            r.r_c
                .ok_or_else(|| Error::Schema(format!("external record {} has no r_c label", r.record_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    let predicted = bundle.predict(records)?;
    let metrics = metrics(&measured, &predicted)?;
    let rows = records
        .iter()
        .zip(&measured)
        .zip(&predicted)
        .map(|((r, &m), &p)| HoldoutRow {
            id: r.record_id.clone(),
            measured: m,
            predicted: p,
            abs_error: (m - p).abs(),
        })
        .collect();
    Ok(HoldoutReport {
        rows,
        mae: metrics.mae,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use crate::pipeline::train_pipeline;
    use crate::preprocess::{synth_dataset, SynthConfig};

    fn bundle() -> (PipelineBundle, Vec<DeviceRecord>) {
        let recs = synth_dataset(&SynthConfig { n: 30, seed: 5, noise_sd: 0.05 }).unwrap();
        let cfg = PipelineConfig {
            vae_epochs: 20,
            reps: 1,
            ..PipelineConfig::default()
        };
        (train_pipeline(&recs, &cfg).unwrap().0, recs)
    }

    #[test]
    fn five_row_table() {
        let (b, recs) = bundle();
        let external = synth_dataset(&SynthConfig { n: 5, seed: 99, noise_sd: 0.05 }).unwrap();
        let report = verify_holdout(&b, &external).unwrap();
        assert_eq!(report.rows.len(), 5);
        let mean = report.rows.iter().map(|r| r.abs_error).sum::<f64>() / 5.0;
        assert!((report.mae - mean).abs() < 1e-12);
        assert_eq!(verify_holdout(&b, &external).unwrap(), report);
        assert!(verify_holdout(&b, &recs[..0]).is_err());
    }

    #[test]
    fn missing_label_rejected() {
        let (b, mut recs) = bundle();
        recs[0].r_c = None;
        let err = verify_holdout(&b, &recs[..3]).unwrap_err();
        assert!(err.to_string().contains(&recs[0].record_id));
    }
}

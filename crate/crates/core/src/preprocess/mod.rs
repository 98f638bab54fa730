//! Tabular data model, encoding, scaling, PCA and splitting.

pub mod io;
pub mod pca;
pub mod record;
pub mod scaler;
pub mod split;
pub mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_records, read_records_path, write_records, write_records_path, CSV_HEADER};
pub use pca::PcaModel;
pub use record::{
    encode_record, Ambient, DeviceRecord, Material, Provenance, FEATURE_WIDTH, SCHEMA_VERSION,
};
pub use scaler::ScalerModel;
pub use split::{split, split_indices};
pub use synth::{ground_truth, synth_dataset, SynthConfig};

/// Numeric feature rows with labels, ids and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub ids: Vec<String>,
    pub provenance: Vec<Provenance>,
    pub schema_version: u32,
}

impl EncodedDataset {
    /// Encodes labelled records to the 37-wide layout.
    pub fn from_records(records: &[DeviceRecord]) -> Result<Self> {
        let mut out = EncodedDataset {
            x: Vec::with_capacity(records.len()),
            y: Vec::with_capacity(records.len()),
            ids: Vec::with_capacity(records.len()),
            provenance: Vec::with_capacity(records.len()),
            schema_version: SCHEMA_VERSION,
        };
        for r in records {
            let label = r
                .r_c
                .ok_or_else(|| Error::Schema(format!("record {} has no r_c label", r.record_id)))?;
            out.x.push(encode_record(r)?.to_vec());
            out.y.push(label);
            out.ids.push(r.record_id.clone());
            out.provenance.push(r.provenance);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn width(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn with_features(&self, x: Vec<Vec<f64>>) -> Self {
        EncodedDataset {
            x,
            ..self.clone()
        }
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.provenance.iter().filter(|&&q| q == p).count()
    }

    /// Fails if any row is synthesized. Every evaluation set goes through
    /// this check.
    pub fn assert_experimental(&self) -> Result<()> {
        match self.provenance.iter().position(|&p| p != Provenance::Experimental) {
            Some(i) => Err(Error::Contamination(self.ids[i].clone())),
            None => Ok(()),
        }
    }

    /// Fails if any id occurs in both sets.
    pub fn assert_disjoint(&self, other: &EncodedDataset) -> Result<()> {
        let mine: std::collections::HashSet<&str> = self.ids.iter().map(String::as_str).collect();
        match other.ids.iter().find(|id| mine.contains(id.as_str())) {
            Some(id) => Err(Error::Schema(format!("record {id} appears in both train and test"))),
            None => Ok(()),
        }
    }

    /// Labels of the experimental rows only.
    pub fn experimental_labels(&self) -> Vec<f64> {
        self.y
            .iter()
            .zip(&self.provenance)
            .filter(|(_, &p)| p == Provenance::Experimental)
            .map(|(&y, _)| y)
            .collect()
    }
}

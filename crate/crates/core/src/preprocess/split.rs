use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::preprocess::record::{DeviceRecord, Provenance};
use crate::seed;

/// Seeded random partition of `0..n` into sorted train and test index sets.
/// The train side holds `round(train_fraction * n)` items.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cannot split {n} items")));
    }
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidArgument(format!(
            "fraction {train_fraction} of {n} items leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits experimental records. Synthesized records are rejected so they
/// can never land in a test set.
pub fn split(
    records: &[DeviceRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<DeviceRecord>, Vec<DeviceRecord>)> {
    if let Some(r) = records.iter().find(|r| r.provenance != Provenance::Experimental) {
        return Err(Error::Contamination(r.record_id.clone()));
    }
    let (train, test) = split_indices(records.len(), train_fraction, seed)?;
    Ok((
        train.iter().map(|&i| records[i].clone()).collect(),
        test.iter().map(|&i| records[i].clone()).collect(),
    ))
}

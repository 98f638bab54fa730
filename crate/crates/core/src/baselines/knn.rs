use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inverse-distance-weighted k nearest neighbours. Exact matches take the
/// plain mean of the matching labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNearest {
    pub k: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl KNearest {
    pub fn fit(x: &[Vec<f64>], y: &[f64], k: usize) -> Result<Self> {
        if k == 0 || k > x.len() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} neighbours requested from {} training rows",
                x.len()
            )));
        }
        Ok(KNearest {
            k,
            x: x.to_vec(),
            y: y.to_vec(),
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let near = &dist[..self.k];
        let exact: Vec<f64> = near.iter().filter(|(d, _)| *d == 0.0).map(|&(_, i)| self.y[i]).collect();
        if !exact.is_empty() {
            return exact.iter().sum::<f64>() / exact.len() as f64;
        }
        let (num, den) = near
            .iter()
            .fold((0.0, 0.0), |(n, d), &(dist, i)| (n + self.y[i] / dist, d + 1.0 / dist));
        num / den
    }
}

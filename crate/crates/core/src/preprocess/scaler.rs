use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-column min-max map onto `[lo, hi]` (default `[0, pi]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerModel {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl ScalerModel {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        Self::fit_range(x, 0.0, PI)
    }

    pub fn fit_range(x: &[Vec<f64>], lo: f64, hi: f64) -> Result<Self> {
        let first = x.first().ok_or(Error::Empty("scaler input"))?;
        let d = first.len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in x {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite("scaler input".into()));
                }
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(ScalerModel { min, max, lo, hi })
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        let span = self.max[j] - self.min[j];
        if span <= 0.0 {
            return 0.5 * (self.lo + self.hi);
        }
        let t = ((v - self.min[j]) / span).clamp(0.0, 1.0);
        self.lo + t * (self.hi - self.lo)
    }

    pub fn inverse_value(&self, j: usize, v: f64) -> f64 {
        let span = self.max[j] - self.min[j];
        if span <= 0.0 {
            return self.min[j];
        }
        self.min[j] + (v - self.lo) / (self.hi - self.lo) * span
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.width() {
            return Err(Error::DimensionMismatch {
                expected: self.width(),
                got: row.len(),
            });
        }
        Ok(row.iter().enumerate().map(|(j, &v)| self.transform_value(j, v)).collect())
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn inverse_transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|r| r.iter().enumerate().map(|(j, &v)| self.inverse_value(j, v)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn endpoints_constant_and_clamp() {
        let s = ScalerModel::fit(&col(&[830.0, 850.0, 870.0])).unwrap();
        let t = s.transform(&col(&[830.0, 850.0, 870.0])).unwrap();
        assert_eq!(t, col(&[0.0, PI / 2.0, PI]));
        assert_eq!(s.transform_row(&[700.0]).unwrap(), vec![0.0]);
        assert_eq!(s.transform_row(&[900.0]).unwrap(), vec![PI]);

        let c = ScalerModel::fit(&col(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(c.transform(&col(&[5.0, 5.0, 5.0])).unwrap(), col(&[PI / 2.0; 3]));
    }

    #[test]
    fn errors() {
        assert!(ScalerModel::fit(&[]).is_err());
        assert!(ScalerModel::fit(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let s = ScalerModel::fit(&col(&[0.0, 1.0])).unwrap();
        assert!(s.transform_row(&[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(values in prop::collection::vec(-1e3f64..1e3, 2..30)) {
            let x = col(&values);
            let s = ScalerModel::fit(&x).unwrap();
            let back = s.inverse_transform(&s.transform(&x).unwrap());
            for (a, b) in back.iter().zip(&x) {
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if hi > lo {
                    prop_assert!((a[0] - b[0]).abs() <= 1e-10);
                }
            }
        }
    }
}

//! Principal component analysis by eigendecomposition of the covariance.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k x d`, orthonormal rows, largest-magnitude coordinate positive.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues of the kept components (population
    /// normalization, divide by `n`).
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

fn to_matrix(x: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let first = x.first().ok_or(Error::Empty("PCA input"))?;
    let d = first.len();
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("PCA input".into()));
        }
    }
    Ok(DMatrix::from_fn(x.len(), d, |i, j| x[i][j]))
}

impl PcaModel {
    pub fn fit(x: &[Vec<f64>], k: usize) -> Result<Self> {
        let m = to_matrix(x)?;
        let (n, d) = m.shape();
        if n < 2 {
            return Err(Error::InvalidArgument("PCA needs at least two rows".into()));
        }
        if k == 0 || k > (n - 1).min(d) {
            return Err(Error::InvalidArgument(format!(
                "cannot keep {k} components from {n} rows of width {d}"
            )));
        }
        let mean: Vec<f64> = (0..d).map(|j| m.column(j).mean()).collect();
        let mut centered = m;
        for j in 0..d {
            centered.column_mut(j).add_scalar_mut(-mean[j]);
        }
        let cov = (centered.transpose() * &centered) / n as f64;
        let cov = (&cov + cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(cov);
        let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("PCA input has zero variance".into()));
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut components = Vec::with_capacity(k);
        let mut explained_variance = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
            let pivot = v
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, &c)| if c.abs() > best.1 { (i, c.abs()) } else { best })
                .0;
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            components.push(v);
            explained_variance.push(eig.eigenvalues[idx].max(0.0));
        }
        let explained_variance_ratio = explained_variance.iter().map(|l| l / total).collect();
        Ok(PcaModel {
            mean,
            components,
            explained_variance,
            explained_variance_ratio,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_width(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_width() {
            return Err(Error::DimensionMismatch {
                expected: self.input_width(),
                got: row.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(row).zip(&self.mean).map(|((w, x), m)| w * (x - m)).sum())
            .collect())
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn inverse_transform_row(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &zi) in self.components.iter().zip(z) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += zi * w;
            }
        }
        out
    }
}

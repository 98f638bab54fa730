use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qkernel::{KernelMatrix, KernelMode};
use crate::svr::{self, SvrModel, SvrParams};

/// Epsilon-SVR on the Gaussian kernel `exp(-gamma |x - x'|^2)`, solved by the
/// same SMO engine as the quantum model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfSvr {
    pub gamma: f64,
    pub x: Vec<Vec<f64>>,
    pub model: SvrModel,
}

pub fn rbf_kernel(a: &[Vec<f64>], b: &[Vec<f64>], gamma: f64) -> KernelMatrix {
    let values = DMatrix::from_fn(a.len(), b.len(), |i, j| {
        let d2: f64 = a[i].iter().zip(&b[j]).map(|(u, v)| (u - v) * (u - v)).sum();
        (-gamma * d2).exp()
    });
    KernelMatrix {
        values,
        row_ids: (0..a.len()).map(|i| i.to_string()).collect(),
        col_ids: (0..b.len()).map(|i| i.to_string()).collect(),
        mode: KernelMode::Exact,
    }
}

impl RbfSvr {
    pub fn fit(x: &[Vec<f64>], y: &[f64], gamma: f64, params: &SvrParams) -> Result<Self> {
        let k = rbf_kernel(x, x, gamma);
        let model = svr::fit(&k, y, params)?;
        Ok(RbfSvr {
            gamma,
            x: x.to_vec(),
            model,
        })
    }

    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        self.model.predict_values(&rbf_kernel(rows, &self.x, self.gamma))
    }
}

//! Fidelity quantum kernels.
//!
//! Exact mode computes `|<phi(x)|phi(y)>|^2` from statevectors. Sampled mode
//! runs the compute-uncompute circuit `U(x) U(y)^dagger` on `|0...0>` and
//! reports the observed all-zero frequency, with a per-entry seed derived
//! from the master seed and the entry position so results do not depend on
//! evaluation order.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_map::FeatureMapSpec;
use crate::seed;
use crate::statevector::QuantumState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum KernelMode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub mode: KernelMode,
}

impl KernelMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Writes the matrix as CSV with column ids in the header and row ids in
    /// the first column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = Vec::with_capacity(self.ncols() + 1);
        header.push("id".to_string());
        header.extend(self.col_ids.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (i, id) in self.row_ids.iter().enumerate() {
            let mut row = Vec::with_capacity(self.ncols() + 1);
            row.push(id.clone());
            row.extend((0..self.ncols()).map(|j| format!("{}", self.values[(i, j)])));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn check_widths(spec: &FeatureMapSpec, rows: &[Vec<f64>]) -> Result<()> {
    for row in rows {
        if row.len() != spec.n_features {
            return Err(Error::DimensionMismatch {
                expected: spec.n_features,
                got: row.len(),
            });
        }
    }
    Ok(())
}

fn check_ids(rows: &[Vec<f64>], ids: &[String]) -> Result<()> {
    if rows.len() != ids.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: ids.len(),
        });
    }
    Ok(())
}

pub fn kernel_entry_exact(spec: &FeatureMapSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let a = spec.encode(x)?;
    let b = spec.encode(y)?;
    fidelity(&a, &b)
}

fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok(a.inner_product(b)?.norm_sqr().min(1.0))
}

/// Shot-based estimate of the fidelity via the compute-uncompute circuit.
pub fn kernel_entry_sampled(
    spec: &FeatureMapSpec,
    x: &[f64],
    y: &[f64],
    shots: u64,
    seed: u64,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let circuit = spec.build_circuit(x)?.then(&spec.build_circuit(y)?.adjoint())?;
    let state = circuit.run()?;
    let counts = state.sample(shots, seed)?;
    Ok(counts.get(&0).copied().unwrap_or(0) as f64 / shots as f64)
}

/// Symmetric Gram matrix over `rows`. Only the upper triangle is evaluated.
pub fn gram_matrix(
    spec: &FeatureMapSpec,
    rows: &[Vec<f64>],
    ids: &[String],
    mode: KernelMode,
) -> Result<KernelMatrix> {
    if rows.is_empty() {
        return Err(Error::Empty("kernel dataset"));
    }
    check_ids(rows, ids)?;
    check_widths(spec, rows)?;
    let n = rows.len();
    let upper: Vec<Vec<f64>> = match mode {
        KernelMode::Exact => {
            let states = encode_all(spec, rows)?;
            (0..n)
                .into_par_iter()
                .map(|i| {
                    (i..n)
                        .map(|j| {
                            if i == j {
                                Ok(1.0)
                            } else {
                                fidelity(&states[i], &states[j])
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<_>>()?
        }
        KernelMode::Sampled { shots, seed } => (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| {
                        let s = seed::derive2(seed, i as u64, j as u64);
                        kernel_entry_sampled(spec, &rows[i], &rows[j], shots, s)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?,
    };
    let mut values = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (offset, &v) in row.iter().enumerate() {
            let j = i + offset;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(KernelMatrix {
        values,
        row_ids: ids.to_vec(),
        col_ids: ids.to_vec(),
        mode,
    })
}

/// Kernel between prediction rows and training rows.
pub fn cross_matrix(
    spec: &FeatureMapSpec,
    test_rows: &[Vec<f64>],
    test_ids: &[String],
    train_rows: &[Vec<f64>],
    train_ids: &[String],
    mode: KernelMode,
) -> Result<KernelMatrix> {
    if test_rows.is_empty() || train_rows.is_empty() {
        return Err(Error::Empty("kernel dataset"));
    }
    check_ids(test_rows, test_ids)?;
    check_ids(train_rows, train_ids)?;
    check_widths(spec, test_rows)?;
    check_widths(spec, train_rows)?;
    let (n, m) = (test_rows.len(), train_rows.len());
    let rows: Vec<Vec<f64>> = match mode {
        KernelMode::Exact => {
            let test_states = encode_all(spec, test_rows)?;
            let train_states = encode_all(spec, train_rows)?;
            test_states
                .par_iter()
                .map(|a| train_states.iter().map(|b| fidelity(a, b)).collect())
                .collect::<Result<_>>()?
        }
        KernelMode::Sampled { shots, seed } => (0..n)
            .into_par_iter()
            .map(|i| {
                (0..m)
                    .map(|j| {
                        let s = seed::derive2(seed ^ 0x5eed_c0de, i as u64, j as u64);
                        kernel_entry_sampled(spec, &test_rows[i], &train_rows[j], shots, s)
                    })
                    .collect()
            })
            .collect::<Result<_>>()?,
    };
    let values = DMatrix::from_fn(n, m, |i, j| rows[i][j]);
    Ok(KernelMatrix {
        values,
        row_ids: test_ids.to_vec(),
        col_ids: train_ids.to_vec(),
        mode,
    })
}

fn encode_all(spec: &FeatureMapSpec, rows: &[Vec<f64>]) -> Result<Vec<QuantumState>> {
    rows.par_iter().map(|r| spec.encode(r)).collect()
}

pub fn min_eigenvalue(values: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(values.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues are clipped to
/// zero. Matrices that are already PSD are returned unchanged.
pub fn psd_project(k: &KernelMatrix) -> Result<KernelMatrix> {
    if !k.is_square() {
        return Err(Error::InvalidArgument(format!(
            "psd_project needs a square matrix, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    let eig = SymmetricEigen::new(k.values.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return Ok(k.clone());
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let vecs = &eig.eigenvectors;
    let rebuilt = vecs * DMatrix::from_diagonal(&clipped) * vecs.transpose();
    let values = (&rebuilt + rebuilt.transpose()) * 0.5;
    Ok(KernelMatrix {
        values,
        ..k.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_map::Entanglement;
    use std::f64::consts::PI;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i}")).collect()
    }

    fn zz2(n: usize) -> FeatureMapSpec {
        FeatureMapSpec::zz(Entanglement::Full, 2, n).unwrap()
    }

    #[test]
    fn self_fidelity_is_one() {
        let spec = zz2(3);
        let x = [0.3, 1.7, 2.2];
        assert!((kernel_entry_exact(&spec, &x, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_z_kernel() {
        // |cos(x - y)|^2 for a one-qubit Z map.
        let spec = FeatureMapSpec::z(1, 1).unwrap();
        assert!(kernel_entry_exact(&spec, &[0.0], &[PI / 2.0]).unwrap() < 1e-15);
        let k = kernel_entry_exact(&spec, &[0.0], &[PI]).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
        let k = kernel_entry_exact(&spec, &[0.4], &[1.1]).unwrap();
        assert!((k - (0.7f64).cos().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn sampled_identity_and_single_shot() {
        let spec = zz2(3);
        let x = [0.3, 1.7, 2.2];
        assert_eq!(kernel_entry_sampled(&spec, &x, &x, 500, 1).unwrap(), 1.0);
        let y = [2.0, 0.1, 0.9];
        for s in 0..10 {
            let v = kernel_entry_sampled(&spec, &x, &y, 1, s).unwrap();
            assert!(v == 0.0 || v == 1.0);
        }
        assert!(kernel_entry_sampled(&spec, &x, &y, 0, 1).is_err());
    }

    #[test]
    fn gram_duplicates_and_errors() {
        let spec = zz2(2);
        let rows = vec![vec![0.5, 1.5], vec![0.5, 1.5]];
        let k = gram_matrix(&spec, &rows, &ids(2), KernelMode::Exact).unwrap();
        assert!(k.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(gram_matrix(&spec, &[], &[], KernelMode::Exact).is_err());
        assert!(gram_matrix(&spec, &[vec![1.0]], &ids(1), KernelMode::Exact).is_err());
    }

    #[test]
    fn cross_matrix_matches_entries() {
        let spec = zz2(2);
        let train = vec![vec![0.1, 2.0], vec![1.0, 1.0], vec![3.0, 0.2]];
        let test = vec![vec![1.0, 1.0]];
        let k = cross_matrix(&spec, &test, &ids(1), &train, &ids(3), KernelMode::Exact).unwrap();
        assert!((k.get(0, 1) - 1.0).abs() < 1e-12);
        for j in 0..3 {
            let e = kernel_entry_exact(&spec, &test[0], &train[j]).unwrap();
            assert!((k.get(0, j) - e).abs() < 1e-15);
        }
        let g = gram_matrix(&spec, &train, &ids(3), KernelMode::Exact).unwrap();
        let c = cross_matrix(&spec, &train, &ids(3), &train, &ids(3), KernelMode::Exact).unwrap();
        assert!((&g.values - &c.values).amax() < 1e-12);
    }

    #[test]
    fn psd_projection_examples() {
        let eye = KernelMatrix {
            values: DMatrix::identity(3, 3),
            row_ids: ids(3),
            col_ids: ids(3),
            mode: KernelMode::Exact,
        };
        assert_eq!(psd_project(&eye).unwrap(), eye);

        let bad = KernelMatrix {
            values: DMatrix::from_row_slice(2, 2, &[1.0, 1.2, 1.2, 1.0]),
            row_ids: ids(2),
            col_ids: ids(2),
            mode: KernelMode::Exact,
        };
        let fixed = psd_project(&bad).unwrap();
        for v in fixed.values.iter() {
            assert!((v - 1.1).abs() < 1e-12, "{v}");
        }

        let rect = KernelMatrix {
            values: DMatrix::zeros(2, 3),
            row_ids: ids(2),
            col_ids: ids(3),
            mode: KernelMode::Exact,
        };
        assert!(psd_project(&rect).is_err());
    }

    #[test]
    fn csv_export_layout() {
        let spec = zz2(2);
        let rows = vec![vec![0.5, 1.5], vec![2.5, 0.5]];
        let k = gram_matrix(&spec, &rows, &["a".into(), "b".into()], KernelMode::Exact).unwrap();
        let mut buf = Vec::new();
        k.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id,a,b");
        assert!(lines[1].starts_with("a,1,"));
        assert!(lines[2].starts_with("b,") && lines[2].ends_with(",1"));
    }
}

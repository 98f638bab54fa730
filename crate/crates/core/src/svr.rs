//! Epsilon-insensitive support vector regression on a precomputed kernel.
//!
//! The dual is solved by SMO over the usual `2n`-variable form: for each
//! training point `i` there is an `alpha_i` (sign +1) and an `alpha*_i`
//! (sign -1), both boxed in `[0, C]`, with `sum(alpha) = sum(alpha*)`. The
//! returned coefficients are `beta_i = alpha_i - alpha*_i`. Working pairs are
//! the maximal KKT-violating pair with ties going to the lowest index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qkernel::{self, KernelMatrix};

/// Floor for the curvature of a working pair.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    /// Hard cap on pair updates. `None` means `10 n^2`.
    pub max_iter: Option<usize>,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_iter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub beta: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub support: Vec<usize>,
    pub train_ids: Vec<String>,
    pub iterations: usize,
}

impl SvrModel {
    /// `y_hat_i = sum_j beta_j K[i][j] + bias`. Columns of `cross` must be
    /// the training points in fit order.
    pub fn predict(&self, cross: &KernelMatrix) -> Result<Vec<f64>> {
        if cross.col_ids != self.train_ids {
            return Err(Error::Schema(format!(
                "kernel columns do not match the {} training ids of the model",
                self.train_ids.len()
            )));
        }
        Ok(self.predict_values(cross))
    }

    /// Same as [`predict`](Self::predict) without the id check; used for
    /// kernels built from anonymous rows.
    pub fn predict_values(&self, cross: &KernelMatrix) -> Vec<f64> {
        (0..cross.nrows())
            .map(|i| {
                self.support
                    .iter()
                    .map(|&j| self.beta[j] * cross.values[(i, j)])
                    .sum::<f64>()
                    + self.bias
            })
            .collect()
    }
}

/// `y^T beta - eps sum|beta| - 1/2 beta^T K beta`, the quantity SMO maximizes.
pub fn dual_objective(k: &KernelMatrix, y: &[f64], epsilon: f64, beta: &[f64]) -> f64 {
    let n = beta.len();
    let mut quad = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += k.values[(i, j)] * beta[j];
        }
        quad += beta[i] * row;
    }
    let lin: f64 = y.iter().zip(beta).map(|(yi, bi)| yi * bi).sum();
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    lin - epsilon * l1 - 0.5 * quad
}

struct Smo<'a> {
    k: &'a KernelMatrix,
    n: usize,
    c: f64,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    p: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn new(k: &'a KernelMatrix, y: &[f64], c: f64, epsilon: f64) -> Self {
        let n = y.len();
        let p: Vec<f64> = y
            .iter()
            .map(|yi| epsilon - yi)
            .chain(y.iter().map(|yi| epsilon + yi))
            .collect();
        Smo {
            k,
            n,
            c,
            alpha: vec![0.0; 2 * n],
            grad: p.clone(),
            p,
        }
    }

    fn sign(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    fn q(&self, t: usize, s: usize) -> f64 {
        self.sign(t) * self.sign(s) * self.k.values[(t % self.n, s % self.n)]
    }

    fn in_up(&self, t: usize) -> bool {
        if t < self.n {
            self.alpha[t] < self.c
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if t < self.n {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.c
        }
    }

    /// Working pair by second-order selection, and the maximal violation
    /// `m - M` used for stopping.
    fn select(&self) -> Option<(usize, usize, f64)> {
        let mut best_up: Option<(usize, f64)> = None;
        let mut big_m = f64::INFINITY;
        for t in 0..2 * self.n {
            let v = -self.sign(t) * self.grad[t];
            if self.in_up(t) && best_up.is_none_or(|(_, b)| v > b) {
                best_up = Some((t, v));
            }
            if self.in_low(t) {
                big_m = big_m.min(v);
            }
        }
        let (i, m) = best_up?;
        if !big_m.is_finite() {
            return None;
        }
        let kii = self.k.values[(i % self.n, i % self.n)];
        let mut best: Option<(usize, f64)> = None;
        for t in 0..2 * self.n {
            if !self.in_low(t) {
                continue;
            }
            let b = m + self.sign(t) * self.grad[t];
            if b <= 0.0 {
                continue;
            }
            let (ti, tt) = (t % self.n, i % self.n);
            let a = (kii + self.k.values[(ti, ti)] - 2.0 * self.k.values[(tt, ti)]).max(TAU);
            let score = -b * b / a;
            if best.is_none_or(|(_, s)| score < s) {
                best = Some((t, score));
            }
        }
        let j = best.map_or_else(
            || {
                (0..2 * self.n)
                    .filter(|&t| self.in_low(t))
                    .min_by(|&a, &b| {
                        let va = -self.sign(a) * self.grad[a];
                        let vb = -self.sign(b) * self.grad[b];
                        va.total_cmp(&vb)
                    })
                    .expect("low set is non-empty")
            },
            |(t, _)| t,
        );
        Some((i, j, m - big_m))
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (qii, qjj, qij) = (self.q(i, i), self.q(j, j), self.q(i, j));
        let (mut ai, mut aj) = (old_i, old_j);
        if self.sign(i) != self.sign(j) {
            let quad = (qii + qjj + 2.0 * qij).max(TAU);
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (qii + qjj - 2.0 * qij).max(TAU);
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        if di == 0.0 && dj == 0.0 {
            return;
        }
        for t in 0..2 * self.n {
            self.grad[t] += self.q(t, i) * di + self.q(t, j) * dj;
        }
    }

    /// Minimized form `1/2 a^T Q a + p^T a`; the dual objective is its negation.
    fn objective(&self) -> f64 {
        self.alpha
            .iter()
            .zip(&self.grad)
            .zip(&self.p)
            .map(|((a, g), p)| 0.5 * a * (g + p))
            .sum()
    }

    /// When both `alpha_i` and `alpha*_i` are positive, lowering both by the
    /// smaller one keeps beta and the gradient fixed and improves the dual.
    fn cancel_pairs(&mut self) {
        for i in 0..self.n {
            let m = self.alpha[i].min(self.alpha[i + self.n]);
            if m > 0.0 {
                self.alpha[i] -= m;
                self.alpha[i + self.n] -= m;
            }
        }
    }

    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..2 * self.n {
            let yg = self.sign(t) * self.grad[t];
            let pos = self.sign(t) > 0.0;
            if self.alpha[t] >= self.c {
                if pos {
                    lb = lb.max(yg);
                } else {
                    ub = ub.min(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if pos {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        let rho = if free > 0 {
            sum_free / free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }

    fn beta(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.alpha[i] - self.alpha[i + self.n])
            .collect()
    }
}

fn validate(k: &KernelMatrix, y: &[f64], params: &SvrParams) -> Result<()> {
    if y.is_empty() {
        return Err(Error::Empty("SVR training set"));
    }
    if !k.is_square() || k.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: k.nrows(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVR labels".into()));
    }
    if k.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel matrix".into()));
    }
    if !(params.c > 0.0) || !params.c.is_finite() {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", params.c)));
    }
    if !(params.epsilon >= 0.0) || !params.epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be non-negative, got {}",
            params.epsilon
        )));
    }
    if !(params.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {}", params.tol)));
    }
    let n = y.len();
    let scale = k.values.amax().max(1.0);
    let asym = (&k.values - k.values.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(Error::InvalidArgument(format!(
            "kernel matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let min_eig = qkernel::min_eigenvalue(&k.values);
    if min_eig < -1e-9 * scale * n as f64 {
        return Err(Error::NotPsd(min_eig));
    }
    Ok(())
}

pub fn fit(k: &KernelMatrix, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    fit_inner(k, y, params, None)
}

/// Like [`fit`], also returning the dual objective after every pair update
/// (index 0 is the starting point).
pub fn fit_traced(k: &KernelMatrix, y: &[f64], params: &SvrParams) -> Result<(SvrModel, Vec<f64>)> {
    let mut trace = Vec::new();
    let model = fit_inner(k, y, params, Some(&mut trace))?;
    Ok((model, trace))
}

fn fit_inner(
    k: &KernelMatrix,
    y: &[f64],
    params: &SvrParams,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<SvrModel> {
    validate(k, y, params)?;
    let n = y.len();
    let max_iter = params.max_iter.unwrap_or(10 * n * n);
    let mut smo = Smo::new(k, y, params.c, params.epsilon);
    if let Some(t) = trace.as_deref_mut() {
        t.push(-smo.objective());
    }
    let mut iterations = 0;
    loop {
        let Some((i, j, gap)) = smo.select() else {
            break;
        };
        if gap <= params.tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::NotConverged { iterations, gap });
        }
        smo.update(i, j);
        iterations += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(-smo.objective());
        }
    }
    smo.cancel_pairs();
    let beta = smo.beta();
    let support = beta
        .iter()
        .enumerate()
        .filter(|(_, b)| b.abs() > 1e-9)
        .map(|(i, _)| i)
        .collect();
    Ok(SvrModel {
        bias: smo.bias(),
        beta,
        c: params.c,
        epsilon: params.epsilon,
        tol: params.tol,
        support,
        train_ids: k.row_ids.clone(),
        iterations,
    })
}

/// Largest KKT violation `max(0, m - M)` of the model's dual point on
/// `(k, y)`.
pub fn kkt_report(model: &SvrModel, k: &KernelMatrix, y: &[f64]) -> f64 {
    let n = y.len();
    let mut smo = Smo::new(k, y, model.c, model.epsilon);
    for (i, &b) in model.beta.iter().enumerate().take(n) {
        smo.alpha[i] = b.max(0.0);
        smo.alpha[i + n] = (-b).max(0.0);
    }
    for i in 0..n {
        let kb: f64 = (0..n).map(|j| k.values[(i, j)] * model.beta[j]).sum();
        smo.grad[i] = kb + smo.p[i];
        smo.grad[i + n] = -kb + smo.p[i + n];
    }
    smo.select().map_or(0.0, |(_, _, gap)| gap.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkernel::KernelMode;
    use nalgebra::DMatrix;

    fn km(values: DMatrix<f64>) -> KernelMatrix {
        let ids: Vec<String> = (0..values.nrows()).map(|i| i.to_string()).collect();
        KernelMatrix {
            values,
            row_ids: ids.clone(),
            col_ids: ids,
            mode: KernelMode::Exact,
        }
    }

    #[test]
    fn constant_labels_give_constant_model() {
        let k = km(DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.3 }));
        let y = [2.5; 4];
        for eps in [0.0, 0.1] {
            let p = SvrParams {
                epsilon: eps,
                ..Default::default()
            };
            let m = fit(&k, &y, &p).unwrap();
            assert!(m.beta.iter().all(|&b| b == 0.0));
            assert!((m.bias - 2.5).abs() < 1e-12);
            assert!(m.predict(&k).unwrap().iter().all(|&v| (v - 2.5).abs() < 1e-12));
        }
    }

    #[test]
    fn identity_kernel_alternating_labels() {
        // With K = I the dual separates: beta_i = clip(y_i - eps - b) etc.
        // For y = (1,-1,1,-1), eps = 0, C = 10 the optimum is beta = y, bias 0.
        let k = km(DMatrix::identity(4, 4));
        let y = [1.0, -1.0, 1.0, -1.0];
        let p = SvrParams {
            c: 10.0,
            epsilon: 0.0,
            tol: 1e-8,
            max_iter: None,
        };
        let m = fit(&k, &y, &p).unwrap();
        for (b, yi) in m.beta.iter().zip(&y) {
            assert!((b - yi).abs() < 1e-6);
        }
        let best = dual_objective(&k, &y, 0.0, &y);
        assert!((dual_objective(&k, &y, 0.0, &m.beta) - best).abs() < 1e-4);
    }

    #[test]
    fn single_support_vector_prediction() {
        let m = SvrModel {
            beta: vec![1.0],
            bias: 0.0,
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            support: vec![0],
            train_ids: vec!["a".into()],
            iterations: 0,
        };
        let cross = KernelMatrix {
            values: DMatrix::from_element(1, 1, 0.5),
            row_ids: vec!["q".into()],
            col_ids: vec!["a".into()],
            mode: KernelMode::Exact,
        };
        assert_eq!(m.predict(&cross).unwrap(), vec![0.5]);
        let wrong = KernelMatrix {
            col_ids: vec!["b".into()],
            ..cross
        };
        assert!(m.predict(&wrong).is_err());
    }

    #[test]
    fn zero_beta_violates_kkt_on_spread_labels() {
        let k = km(DMatrix::identity(3, 3));
        let y = [0.0, 1.0, 2.0];
        let m = SvrModel {
            beta: vec![0.0; 3],
            bias: 1.0,
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            support: vec![],
            train_ids: k.row_ids.clone(),
            iterations: 0,
        };
        // m = max y - eps, M = min y + eps.
        assert!((kkt_report(&m, &k, &y) - (2.0 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn two_point_kkt_by_hand() {
        // K = [[1, .5], [.5, 1]], y = (0, 1), eps = .1, beta = (-.2, .2).
        // K beta = (-.1, .1).
        // alpha* = (.2, 0), alpha = (0, .2); C = 1 so both are free.
        // -sG: t0 (alpha_0, up only): -(-.1 + .1 - 0) = 0
        //      t1 (alpha_1, up+low):  -(.1 + .1 - 1) = .8
        //      t2 (alpha*_0, up+low): -(.1 + .1 + 0) ... sign -1: +G = -(-.1)+.1+0 = .2
        //      t3 (alpha*_1, low only): G = -.1 + .1 + 1 = 1
        // m = max(0, .8, .2) = .8 ; M = min(.8, .2, 1) = .2 ; gap = .6
        let k = km(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        let y = [0.0, 1.0];
        let m = SvrModel {
            beta: vec![-0.2, 0.2],
            bias: 0.0,
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-3,
            support: vec![0, 1],
            train_ids: k.row_ids.clone(),
            iterations: 0,
        };
        assert!((kkt_report(&m, &k, &y) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let k = km(DMatrix::identity(2, 2));
        assert!(fit(&k, &[1.0, f64::NAN], &SvrParams::default()).is_err());
        assert!(fit(&k, &[1.0], &SvrParams::default()).is_err());
        let bad_c = SvrParams {
            c: 0.0,
            ..Default::default()
        };
        assert!(fit(&k, &[1.0, 2.0], &bad_c).is_err());
        let indefinite = km(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(matches!(
            fit(&indefinite, &[0.0, 1.0], &SvrParams::default()),
            Err(Error::NotPsd(_))
        ));
        let empty = km(DMatrix::zeros(0, 0));
        assert!(matches!(fit(&empty, &[], &SvrParams::default()), Err(Error::Empty(_))));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let k = km(DMatrix::from_fn(6, 6, |i, j| (-((i as f64 - j as f64).powi(2)) / 4.0).exp()));
        let y = [0.0, 3.0, -1.0, 4.0, 0.5, 2.0];
        let p = SvrParams {
            c: 100.0,
            epsilon: 0.0,
            tol: 1e-12,
            max_iter: Some(2),
        };
        assert!(matches!(fit(&k, &y, &p), Err(Error::NotConverged { iterations: 2, .. })));
    }
}

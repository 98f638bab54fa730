//! A small variational auto-encoder trained by plain gradient descent, used
//! to synthesize extra training rows in the reduced feature space.
//!
//! Architecture: `D -> H (tanh) -> (mu, log var) in R^L`, then
//! `z = mu + exp(log var / 2) * eta` and `L -> H (tanh) -> D (linear)`.
//! The loss is `mse(x, x_hat) + kl_weight * KL(q(z|x) || N(0, I))`, with the
//! reconstruction averaged over all entries and KL averaged over rows.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{EncodedDataset, Provenance, ScalerModel};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaeConfig {
    pub hidden: usize,
    pub latent: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub kl_weight: f64,
    /// Fraction of epochs over which the KL weight ramps linearly to
    /// `kl_weight`.
    pub warmup_fraction: f64,
    pub seed: u64,
}

impl Default for VaeConfig {
    fn default() -> Self {
        VaeConfig {
            hidden: 16,
            latent: 3,
            epochs: 200,
            learning_rate: 1e-2,
            batch_size: 16,
            kl_weight: 1.0,
            warmup_fraction: 0.1,
            seed: 0,
        }
    }
}

impl VaeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("VAE config: {m}")));
        if self.hidden == 0 || self.latent == 0 {
            return bad("hidden and latent sizes must be positive");
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return bad("kl weight must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            return bad("warm-up fraction must lie in [0, 1]");
        }
        Ok(())
    }

    /// KL weight used in 1-based `epoch`.
    pub fn kl_weight_at(&self, epoch: usize) -> f64 {
        let warm = (self.warmup_fraction * self.epochs as f64).ceil() as usize;
        if warm == 0 || epoch >= warm {
            self.kl_weight
        } else {
            self.kl_weight * epoch as f64 / warm as f64
        }
    }
}

/// Weights are row-major `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeParams {
    pub input: usize,
    pub hidden: usize,
    pub latent: usize,
    pub enc_w: Vec<f64>,
    pub enc_b: Vec<f64>,
    pub mu_w: Vec<f64>,
    pub mu_b: Vec<f64>,
    pub logvar_w: Vec<f64>,
    pub logvar_b: Vec<f64>,
    pub dec_w: Vec<f64>,
    pub dec_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
}

impl VaeParams {
    pub fn zeros(input: usize, hidden: usize, latent: usize) -> Self {
        VaeParams {
            input,
            hidden,
            latent,
            enc_w: vec![0.0; hidden * input],
            enc_b: vec![0.0; hidden],
            mu_w: vec![0.0; latent * hidden],
            mu_b: vec![0.0; latent],
            logvar_w: vec![0.0; latent * hidden],
            logvar_b: vec![0.0; latent],
            dec_w: vec![0.0; hidden * latent],
            dec_b: vec![0.0; hidden],
            out_w: vec![0.0; input * hidden],
            out_b: vec![0.0; input],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(input: usize, hidden: usize, latent: usize, seed: u64) -> Self {
        let mut p = Self::zeros(input, hidden, latent);
        let mut rng = seed::rng(seed);
        let mut fill = |w: &mut Vec<f64>, fan_in: usize, fan_out: usize| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.iter_mut().for_each(|v| *v = rng.random_range(-a..a));
        };
        fill(&mut p.enc_w, input, hidden);
        fill(&mut p.mu_w, hidden, latent);
        fill(&mut p.logvar_w, hidden, latent);
        fill(&mut p.dec_w, latent, hidden);
        fill(&mut p.out_w, hidden, input);
        p
    }

    pub fn tensors(&self) -> [&Vec<f64>; 10] {
        [
            &self.enc_w,
            &self.enc_b,
            &self.mu_w,
            &self.mu_b,
            &self.logvar_w,
            &self.logvar_b,
            &self.dec_w,
            &self.dec_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 10] {
        [
            &mut self.enc_w,
            &mut self.enc_b,
            &mut self.mu_w,
            &mut self.mu_b,
            &mut self.logvar_w,
            &mut self.logvar_b,
            &mut self.dec_w,
            &mut self.dec_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_shapes(&self) -> Result<()> {
        let (d, h, l) = (self.input, self.hidden, self.latent);
        let want = [h * d, h, l * h, l, l * h, l, h * l, h, d * h, d];
        for (t, &n) in self.tensors().iter().zip(&want) {
            if t.len() != n {
                return Err(Error::Schema(format!(
                    "VAE tensor has {} entries, expected {n}",
                    t.len()
                )));
            }
        }
        Ok(())
    }

    /// Decoder forward pass for one latent vector.
    pub fn decode(&self, z: &[f64]) -> Vec<f64> {
        let h = affine(&self.dec_w, &self.dec_b, z).into_iter().map(f64::tanh).collect::<Vec<_>>();
        affine(&self.out_w, &self.out_b, &h)
    }

    /// Encoder forward pass, returning `(mu, log var)`.
    pub fn encode(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h: Vec<f64> = affine(&self.enc_w, &self.enc_b, x).into_iter().map(f64::tanh).collect();
        (affine(&self.mu_w, &self.mu_b, &h), affine(&self.logvar_w, &self.logvar_b, &h))
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    b.iter()
        .enumerate()
        .map(|(o, &bo)| bo + w[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

/// `out += W^T d`.
fn affine_back(w: &[f64], d: &[f64], n_in: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_in];
    for (o, &dv) in d.iter().enumerate() {
        for (i, acc) in out.iter_mut().enumerate() {
            *acc += w[o * n_in + i] * dv;
        }
    }
    out
}

fn outer_acc(g: &mut [f64], d: &[f64], x: &[f64]) {
    let n_in = x.len();
    for (o, &dv) in d.iter().enumerate() {
        for (i, &xv) in x.iter().enumerate() {
            g[o * n_in + i] += dv * xv;
        }
    }
}

fn add_acc(g: &mut [f64], d: &[f64]) {
    g.iter_mut().zip(d).for_each(|(a, b)| *a += b);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub loss: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

/// `-1/2 sum_j (1 + log var_j - mu_j^2 - exp(log var_j))` for one row.
pub fn kl_term(mu: &[f64], logvar: &[f64]) -> f64 {
    -0.5 * mu
        .iter()
        .zip(logvar)
        .map(|(m, lv)| 1.0 + lv - m * m - lv.exp())
        .sum::<f64>()
}

/// Mean squared error over all entries.
pub fn reconstruction_term(input: &[Vec<f64>], output: &[Vec<f64>]) -> f64 {
    let count: usize = input.iter().map(Vec::len).sum();
    let sse: f64 = input
        .iter()
        .zip(output)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
        .sum();
    sse / count as f64
}

fn check_batch(params: &VaeParams, batch: &[Vec<f64>], noise: &[Vec<f64>]) -> Result<()> {
    params.check_shapes()?;
    if batch.is_empty() {
        return Err(Error::Empty("VAE batch"));
    }
    if noise.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            got: noise.len(),
        });
    }
    for (x, e) in batch.iter().zip(noise) {
        if x.len() != params.input {
            return Err(Error::DimensionMismatch {
                expected: params.input,
                got: x.len(),
            });
        }
        if e.len() != params.latent {
            return Err(Error::DimensionMismatch {
                expected: params.latent,
                got: e.len(),
            });
        }
    }
    Ok(())
}

/// Loss for a batch with the reparameterization noise given explicitly.
pub fn loss_with_noise(
    params: &VaeParams,
    batch: &[Vec<f64>],
    noise: &[Vec<f64>],
    kl_weight: f64,
) -> Result<LossParts> {
    Ok(loss_and_gradient(params, batch, noise, kl_weight)?.0)
}

/// Loss for a batch with noise drawn from `seed`.
pub fn vae_loss(params: &VaeParams, batch: &[Vec<f64>], kl_weight: f64, seed: u64) -> Result<LossParts> {
    let mut rng = seed::rng(seed);
    let noise = draw_noise(&mut rng, batch.len(), params.latent);
    loss_with_noise(params, batch, &noise, kl_weight)
}

fn draw_noise<R: Rng>(rng: &mut R, rows: usize, latent: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..latent).map(|_| StandardNormal.sample(rng)).collect())
        .collect()
}

/// Loss and its exact gradient with respect to every parameter.
pub fn loss_and_gradient(
    params: &VaeParams,
    batch: &[Vec<f64>],
    noise: &[Vec<f64>],
    kl_weight: f64,
) -> Result<(LossParts, VaeParams)> {
    check_batch(params, batch, noise)?;
    let (d, hd, l) = (params.input, params.hidden, params.latent);
    let b = batch.len() as f64;
    let recon_scale = 1.0 / (b * d as f64);
    let kl_scale = kl_weight / b;
    let mut grad = VaeParams::zeros(d, hd, l);
    let (mut sse, mut kl_sum) = (0.0, 0.0);

    for (x, eta) in batch.iter().zip(noise) {
        let h1: Vec<f64> = affine(&params.enc_w, &params.enc_b, x).into_iter().map(f64::tanh).collect();
        let mu = affine(&params.mu_w, &params.mu_b, &h1);
        let lv = affine(&params.logvar_w, &params.logvar_b, &h1);
        let sd: Vec<f64> = lv.iter().map(|v| (0.5 * v).exp()).collect();
        let z: Vec<f64> = (0..l).map(|j| mu[j] + sd[j] * eta[j]).collect();
        let h3: Vec<f64> = affine(&params.dec_w, &params.dec_b, &z).into_iter().map(f64::tanh).collect();
        let out = affine(&params.out_w, &params.out_b, &h3);

        sse += out.iter().zip(x).map(|(o, t)| (o - t) * (o - t)).sum::<f64>();
        kl_sum += kl_term(&mu, &lv);

        let d_out: Vec<f64> = out.iter().zip(x).map(|(o, t)| 2.0 * (o - t) * recon_scale).collect();
        outer_acc(&mut grad.out_w, &d_out, &h3);
        add_acc(&mut grad.out_b, &d_out);

        let d_a3: Vec<f64> = affine_back(&params.out_w, &d_out, hd)
            .into_iter()
            .zip(&h3)
            .map(|(g, h)| g * (1.0 - h * h))
            .collect();
        outer_acc(&mut grad.dec_w, &d_a3, &z);
        add_acc(&mut grad.dec_b, &d_a3);

        let d_z = affine_back(&params.dec_w, &d_a3, l);
        let d_mu: Vec<f64> = (0..l).map(|j| d_z[j] + kl_scale * mu[j]).collect();
        let d_lv: Vec<f64> = (0..l)
            .map(|j| d_z[j] * eta[j] * 0.5 * sd[j] + kl_scale * 0.5 * (lv[j].exp() - 1.0))
            .collect();
        outer_acc(&mut grad.mu_w, &d_mu, &h1);
        add_acc(&mut grad.mu_b, &d_mu);
        outer_acc(&mut grad.logvar_w, &d_lv, &h1);
        add_acc(&mut grad.logvar_b, &d_lv);

        let mut d_h1 = affine_back(&params.mu_w, &d_mu, hd);
        add_acc(&mut d_h1, &affine_back(&params.logvar_w, &d_lv, hd));
        let d_a1: Vec<f64> = d_h1.iter().zip(&h1).map(|(g, h)| g * (1.0 - h * h)).collect();
        outer_acc(&mut grad.enc_w, &d_a1, x);
        add_acc(&mut grad.enc_b, &d_a1);
    }

    let reconstruction = sse * recon_scale;
    let kl = kl_sum / b;
    Ok((
        LossParts {
            loss: reconstruction + kl_weight * kl,
            reconstruction,
            kl,
        },
        grad,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub loss: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub kl: Vec<f64>,
    pub kl_weight: Vec<f64>,
}

/// Trains on `rows` (each of width `D`). Per-epoch trace values are the
/// row-weighted means over that epoch's mini-batches.
pub fn vae_train(rows: &[Vec<f64>], config: &VaeConfig) -> Result<(VaeParams, TrainTrace)> {
    config.validate()?;
    let input = rows.first().ok_or(Error::Empty("VAE training set"))?.len();
    if input == 0 {
        return Err(Error::InvalidArgument("VAE rows have zero width".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("VAE training set".into()));
    }
    let mut params = VaeParams::init(input, config.hidden, config.latent, seed::derive(config.seed, 0));
    let mut rng = seed::rng(seed::derive(config.seed, 1));
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut trace = TrainTrace {
        loss: Vec::with_capacity(config.epochs),
        reconstruction: Vec::with_capacity(config.epochs),
        kl: Vec::with_capacity(config.epochs),
        kl_weight: Vec::with_capacity(config.epochs),
    };
    let n = rows.len() as f64;
    for epoch in 1..=config.epochs {
        let w = config.kl_weight_at(epoch);
        order.shuffle(&mut rng);
        let (mut rec, mut kl) = (0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Vec<f64>> = chunk.iter().map(|&i| rows[i].clone()).collect();
            let noise = draw_noise(&mut rng, batch.len(), config.latent);
            let (parts, grad) = loss_and_gradient(&params, &batch, &noise, w)?;
            if !parts.loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            rec += parts.reconstruction * batch.len() as f64;
            kl += parts.kl * batch.len() as f64;
            for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
                p.iter_mut().zip(g).for_each(|(pv, gv)| *pv -= config.learning_rate * gv);
            }
            if !params.is_finite() {
                return Err(Error::Diverged { epoch });
            }
        }
        let (rec, kl) = (rec / n, kl / n);
        trace.reconstruction.push(rec);
        trace.kl.push(kl);
        trace.kl_weight.push(w);
        trace.loss.push(rec + w * kl);
    }
    Ok((params, trace))
}

/// Decodes `n` draws from the prior, clamping every column into `[0, pi]`.
pub fn vae_generate(params: &VaeParams, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed);
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..params.latent).map(|_| StandardNormal.sample(&mut rng)).collect();
            params.decode(&z).into_iter().map(|v| v.clamp(0.0, PI)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VaeModel {
    pub params: VaeParams,
    /// Maps labels onto `[0, pi]` so they share the feature range.
    pub label_scaler: ScalerModel,
}

#[derive(Debug, Clone)]
pub struct Augmented {
    pub data: EncodedDataset,
    pub model: Option<VaeModel>,
    pub trace: Option<TrainTrace>,
}

/// Extends an all-experimental training set to `target_size` rows by
/// appending VAE samples. Features are expected in the `[0, pi]` range;
/// generated labels stay within the observed label range.
pub fn augment(train: &EncodedDataset, target_size: usize, config: &VaeConfig) -> Result<Augmented> {
    train.assert_experimental()?;
    if train.is_empty() {
        return Err(Error::Empty("augmentation input"));
    }
    if target_size < train.len() {
        return Err(Error::InvalidArgument(format!(
            "target size {target_size} is smaller than the training set ({})",
            train.len()
        )));
    }
    if target_size == train.len() {
        return Ok(Augmented {
            data: train.clone(),
            model: None,
            trace: None,
        });
    }
    let labels: Vec<Vec<f64>> = train.y.iter().map(|&v| vec![v]).collect();
    let label_scaler = ScalerModel::fit(&labels)?;
    let rows: Vec<Vec<f64>> = train
        .x
        .iter()
        .zip(&train.y)
        .map(|(x, &y)| {
            let mut r = x.clone();
            r.push(label_scaler.transform_value(0, y));
            r
        })
        .collect();
    let (params, trace) = vae_train(&rows, config)?;
    let extra = target_size - train.len();
    let generated = vae_generate(&params, extra, seed::derive(config.seed, 2));
    let width = train.width();
    let (lo, hi) = (label_scaler.min[0], label_scaler.max[0]);
    let mut data = train.clone();
    for (k, row) in generated.into_iter().enumerate() {
        let label = label_scaler.inverse_value(0, row[width]).clamp(lo, hi);
        data.x.push(row[..width].to_vec());
        data.y.push(label);
        data.ids.push(format!("vae{:04}", k + 1));
        data.provenance.push(Provenance::Synthesized);
    }
    Ok(Augmented {
        data,
        model: Some(VaeModel {
            params,
            label_scaler,
        }),
        trace: Some(trace),
    })
}

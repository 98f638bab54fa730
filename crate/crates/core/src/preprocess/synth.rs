//! Synthetic device-recipe generator with a known ground-truth label.
//!
//! Recipes are drawn uniformly from: Al content 0.15-0.35, barrier
//! thickness 5-30 nm, anneal temperature 400-900 C, anneal time 30-120 s,
//! ambient N2 with probability 0.85, and one of six metal stacks. The label
//! is
//!
//! ```text
//! r_c = 0.25
//!     + 1.2 * ((T - T_opt) / 250)^2
//!     + 0.03 * (thickness - 10)
//!     - 1.5 * (al - 0.25)
//!     + 0.25 * ln(time / 60)^2
//!     + 0.2 * [ambient != N2]
//!     + stack_offset
//!     + noise
//! ```
//!
//! where `T_opt` is 850 C for Au-capped Ti/Al stacks and 600 C for the
//! Au-free low-temperature stacks, `stack_offset` is listed in
//! [`STACKS`], and `noise ~ N(0, noise_sd)`. The result is floored at
//! 0.01 ohm-mm.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::record::{Ambient, DeviceRecord, Material, Provenance};
use crate::seed;

use Material::*;

/// `(layers, T_opt in C, offset in ohm-mm)`.
pub const STACKS: [(&[Material], f64, f64); 6] = [
    (&[Ti, Al, Ni, Au], 850.0, 0.0),
    (&[Ti, Al, Ti, TiN], 600.0, 0.1),
    (&[Ti, Al, Mo, Au], 850.0, -0.05),
    (&[Ta, Al, Ta], 600.0, 0.15),
    (&[Ti, Al, Pt, Au], 850.0, 0.05),
    (&[Ti, Al, Ti, Au], 850.0, 0.1),
];

const R_C_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    /// Standard deviation of the additive label noise, ohm-mm.
    pub noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 159,
            seed: 7,
            noise_sd: 0.05,
        }
    }
}

fn stack_params(stack: &[Material]) -> (f64, f64) {
    STACKS
        .iter()
        .find(|(layers, _, _)| *layers == stack)
        .map(|&(_, t_opt, offset)| (t_opt, offset))
        .unwrap_or_else(|| {
            let au_free = !stack.contains(&Au);
            (if au_free { 600.0 } else { 850.0 }, 0.1)
        })
}

/// Noise-free contact resistance for a recipe.
pub fn ground_truth(rec: &DeviceRecord) -> f64 {
    let (t_opt, offset) = stack_params(&rec.metal_stack);
    let dt = (rec.anneal_temp_c - t_opt) / 250.0;
    let lt = (rec.anneal_time_s / 60.0).ln();
    let ambient = if rec.anneal_ambient == Ambient::N2 { 0.0 } else { 0.2 };
    let r = 0.25 + 1.2 * dt * dt + 0.03 * (rec.barrier_thickness_nm - 10.0)
        - 1.5 * (rec.al_content - 0.25)
        + 0.25 * lt * lt
        + ambient
        + offset;
    r.max(R_C_FLOOR)
}

pub fn synth_dataset(config: &SynthConfig) -> Result<Vec<DeviceRecord>> {
    if config.n == 0 {
        return Err(Error::InvalidArgument("synthetic dataset size must be at least 1".into()));
    }
    if !(config.noise_sd >= 0.0 && config.noise_sd.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise sd {} must be non-negative",
            config.noise_sd
        )));
    }
    let mut rng = seed::rng(config.seed);
    let noise = Normal::new(0.0, config.noise_sd).expect("validated sd");
    let width = (config.n as f64).log10().floor() as usize + 1;
    let records = (0..config.n)
        .map(|i| {
            let stack = STACKS[rng.random_range(0..STACKS.len())].0;
            let mut rec = DeviceRecord {
                record_id: format!("syn{:0width$}", i + 1),
                al_content: round_to(rng.random_range(0.15..=0.35), 3),
                barrier_thickness_nm: round_to(rng.random_range(5.0..=30.0), 1),
                anneal_temp_c: round_to(rng.random_range(400.0..=900.0), 0),
                anneal_time_s: round_to(rng.random_range(30.0..=120.0), 0),
                anneal_ambient: if rng.random_bool(0.85) {
                    Ambient::N2
                } else {
                    Ambient::Other
                },
                metal_stack: stack.to_vec(),
                r_c: None,
                provenance: Provenance::Experimental,
            };
            let eps = noise.sample(&mut rng);
            let r = ground_truth(&rec);
            rec.r_c = Some(if config.noise_sd == 0.0 {
                r
            } else {
                (r + eps).max(R_C_FLOOR)
            });
            rec
        })
        .collect();
    Ok(records)
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (v * scale).round() / scale
}

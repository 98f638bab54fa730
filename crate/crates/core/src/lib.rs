//! Quantum-kernel regression for small tabular process datasets.
//!
//! The pipeline encodes device recipes into 37 features, reduces them to a
//! handful of principal components, augments the training set with a small
//! VAE, embeds every point with a ZZ feature map, and fits an epsilon-SVR on
//! the resulting fidelity kernel. Six classical regressors and a benchmark
//! harness sit alongside for comparison.

pub mod baselines;
pub mod bench;
pub mod config;
pub mod error;
pub mod feature_map;
pub mod pipeline;
pub mod preprocess;
pub mod qkernel;
pub mod seed;
pub mod statevector;
pub mod svr;
pub mod vae;

pub use error::{Error, Result};

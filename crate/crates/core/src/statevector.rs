//! Dense statevector simulation for small registers.
//!
//! Basis index bit `k` holds qubit `k`, so qubit 0 is the least significant
//! bit. Gates are applied in place by striding over amplitude pairs; no gate
//! matrix is ever materialized.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 24;

/// A single gate from the encoding-circuit vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Gate {
    Hadamard { target: usize },
    /// `diag(1, e^{i angle})` on the target qubit.
    Phase { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn h(target: usize) -> Self {
        Gate::Hadamard { target }
    }

    pub fn phase(target: usize, angle: f64) -> Self {
        Gate::Phase { target, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    /// The inverse gate. H and CNOT are self-inverse.
    pub fn adjoint(self) -> Self {
        match self {
            Gate::Phase { target, angle } => Gate::Phase {
                target,
                angle: -angle,
            },
            g => g,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        match *self {
            Gate::Hadamard { target } | Gate::Phase { target, .. } if target >= n_qubits => Err(
                Error::InvalidGate(format!("target {target} out of range for {n_qubits} qubits")),
            ),
            Gate::Phase { angle, .. } if !angle.is_finite() => {
                Err(Error::NonFinite("phase angle".into()))
            }
            Gate::Cnot { control, target } => {
                if target >= n_qubits || control >= n_qubits {
                    Err(Error::InvalidGate(format!(
                        "cnot({control}->{target}) out of range for {n_qubits} qubits"
                    )))
                } else if control == target {
                    Err(Error::InvalidGate(format!(
                        "cnot control and target are both {target}"
                    )))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(QuantumState {
            n_qubits,
            amplitudes,
        })
    }

    /// Wraps raw amplitudes. The length must be a power of two; the caller is
    /// responsible for normalization.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        Ok(QuantumState {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match gate {
            Gate::Hadamard { target } => self.apply_hadamard(target),
            Gate::Phase { target, angle } => self.apply_phase(target, angle),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.apply(*g))
    }

    fn apply_hadamard(&mut self, target: usize) {
        let bit = 1usize << target;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | bit];
                self.amplitudes[i] = (a0 + a1) * s;
                self.amplitudes[i | bit] = (a0 - a1) * s;
            }
        }
    }

    fn apply_phase(&mut self, target: usize, angle: f64) {
        let bit = 1usize << target;
        let factor = Complex64::from_polar(1.0, angle);
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= factor;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amplitudes.swap(i, i | tbit);
            }
        }
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner_product(&self, other: &QuantumState) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn probability_all_zero(&self) -> f64 {
        self.amplitudes[0].norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Draws `shots` computational-basis measurements. Returns counts for the
    /// outcomes that occurred, keyed by basis index.
    ///
    /// The multinomial is sampled as a chain of conditional binomials, which
    /// costs one draw per basis state regardless of the shot count.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<BTreeMap<usize, u64>> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        let mut rng = seed::rng(seed);
        let probs = self.probabilities();
        let mut mass: f64 = probs.iter().sum();
        let mut remaining = shots;
        let mut counts = BTreeMap::new();
        let last = probs.len() - 1;
        for (k, &p) in probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            let drawn = if k == last || p >= mass {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                let q = (p / mass).clamp(0.0, 1.0);
                Binomial::new(remaining, q)
                    .expect("binomial parameters are clamped")
                    .sample(&mut rng)
            };
            if drawn > 0 {
                counts.insert(k, drawn);
            }
            remaining -= drawn;
            mass -= p;
        }
        Ok(counts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn zero_state_layout() {
        let s = QuantumState::zero(2).unwrap();
        assert_eq!(s.amplitudes(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let s = QuantumState::zero(1).unwrap();
        assert_eq!(s.amplitudes(), &[c(1., 0.), c(0., 0.)]);
        let s = QuantumState::zero(5).unwrap();
        assert_eq!(s.amplitudes().len(), 32);
        assert_eq!(s.amplitudes()[0], c(1., 0.));
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_state_rejects_bad_sizes() {
        assert!(matches!(QuantumState::zero(0), Err(Error::QubitCount(0))));
        assert!(matches!(QuantumState::zero(25), Err(Error::QubitCount(25))));
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = QuantumState::zero(1).unwrap();
        s.apply(Gate::h(0)).unwrap();
        assert!(close(s.amplitudes(), &[c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)], 1e-15));
    }

    #[test]
    fn cnot_truth_table() {
        // |01> means qubit 0 set: index 1.
        let mut amps = vec![c(0., 0.); 4];
        amps[1] = c(1., 0.);
        let mut s = QuantumState::from_amplitudes(amps).unwrap();
        s.apply(Gate::cnot(0, 1)).unwrap();
        assert_eq!(s.amplitudes()[3], c(1., 0.));
        assert_eq!(s.amplitudes()[1], c(0., 0.));
    }

    #[test]
    fn phase_pi_is_z() {
        let mut s = QuantumState::zero(1).unwrap();
        s.apply(Gate::h(0)).unwrap();
        s.apply(Gate::phase(0, PI)).unwrap();
        assert!(close(s.amplitudes(), &[c(FRAC_1_SQRT_2, 0.), c(-FRAC_1_SQRT_2, 0.)], 1e-15));
    }

    #[test]
    fn gate_validation() {
        let mut s = QuantumState::zero(2).unwrap();
        assert!(s.apply(Gate::h(2)).is_err());
        assert!(s.apply(Gate::cnot(1, 1)).is_err());
        assert!(s.apply(Gate::cnot(0, 5)).is_err());
        assert!(s.apply(Gate::phase(0, f64::NAN)).is_err());
    }

    #[test]
    fn inner_products() {
        let zero = QuantumState::zero(1).unwrap();
        let mut one = zero.clone();
        one.apply(Gate::h(0)).unwrap();
        one.apply(Gate::phase(0, PI)).unwrap();
        one.apply(Gate::h(0)).unwrap();
        assert!(zero.inner_product(&one).unwrap().norm() < 1e-15);
        let mut plus = zero.clone();
        plus.apply(Gate::h(0)).unwrap();
        let ip = zero.inner_product(&plus).unwrap();
        assert!((ip - c(FRAC_1_SQRT_2, 0.)).norm() < 1e-15);
        let self_ip = plus.inner_product(&plus).unwrap();
        assert!((self_ip - c(1., 0.)).norm() < 1e-12);
        let two = QuantumState::zero(2).unwrap();
        assert!(zero.inner_product(&two).is_err());
    }

    #[test]
    fn all_zero_probability() {
        assert_eq!(QuantumState::zero(5).unwrap().probability_all_zero(), 1.0);
        let mut s = QuantumState::zero(1).unwrap();
        s.apply(Gate::h(0)).unwrap();
        assert!((s.probability_all_zero() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_zero_probability_matches_distribution() {
        let mut s = QuantumState::zero(3).unwrap();
        for g in [
            Gate::h(0),
            Gate::h(2),
            Gate::phase(0, 0.7),
            Gate::cnot(0, 1),
            Gate::phase(1, -1.3),
            Gate::h(1),
            Gate::cnot(2, 0),
            Gate::h(0),
        ] {
            s.apply(g).unwrap();
        }
        // Enumerate each outcome's probability from the amplitudes directly.
        let mut total = 0.0;
        let mut p0 = f64::NAN;
        for k in 0..8 {
            let a = s.amplitudes()[k];
            let p = a.re * a.re + a.im * a.im;
            if k == 0 {
                p0 = p;
            }
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
        assert!((s.probability_all_zero() - p0).abs() < 1e-15);
    }

    #[test]
    fn sampling_basics() {
        let s = QuantumState::zero(1).unwrap();
        let counts = s.sample(100, 3).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[&0], 100);
        assert!(s.sample(0, 3).is_err());

        let mut h = QuantumState::zero(1).unwrap();
        h.apply(Gate::h(0)).unwrap();
        let counts = h.sample(1_000_000, 11).unwrap();
        let f0 = counts[&0] as f64 / 1e6;
        assert!((f0 - 0.5).abs() < 0.002, "{f0}");
        assert_eq!(counts.values().sum::<u64>(), 1_000_000);
        assert_eq!(h.sample(1000, 5).unwrap(), h.sample(1000, 5).unwrap());
    }
}

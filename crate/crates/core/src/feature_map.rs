//! Z and ZZ data-encoding circuits.
//!
//! One repetition applies H to every qubit, then `Phase(2 x_i)` on qubit `i`,
//! then for each entangled pair `(i, j)` the block
//! `CNOT(i->j) . Phase(2 (pi - x_i)(pi - x_j)) on j . CNOT(i->j)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{Gate, QuantumState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Z,
    Zz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entanglement {
    None,
    Linear,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureMapSpec {
    pub family: Family,
    pub entanglement: Entanglement,
    pub reps: usize,
    pub n_features: usize,
}

impl FeatureMapSpec {
    pub fn new(
        family: Family,
        entanglement: Entanglement,
        reps: usize,
        n_features: usize,
    ) -> Result<Self> {
        let spec = FeatureMapSpec {
            family,
            entanglement,
            reps,
            n_features,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn z(reps: usize, n_features: usize) -> Result<Self> {
        Self::new(Family::Z, Entanglement::None, reps, n_features)
    }

    pub fn zz(entanglement: Entanglement, reps: usize, n_features: usize) -> Result<Self> {
        Self::new(Family::Zz, entanglement, reps, n_features)
    }

    /// The four comparison variants, in order: Z/1, ZZ-linear/1, ZZ-full/1,
    /// ZZ-full/2.
    pub fn benchmark_variants(n_features: usize) -> Result<Vec<Self>> {
        Ok(vec![
            Self::z(1, n_features)?,
            Self::zz(Entanglement::Linear, 1, n_features)?,
            Self::zz(Entanglement::Full, 1, n_features)?,
            Self::zz(Entanglement::Full, 2, n_features)?,
        ])
    }

    pub fn validate(&self) -> Result<()> {
        if self.family == Family::Z && self.entanglement != Entanglement::None {
            return Err(Error::InvalidArgument(
                "Z feature maps cannot be entangled".into(),
            ));
        }
        if self.n_features == 0 {
            return Err(Error::InvalidArgument("feature map needs at least one feature".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidArgument("feature map needs at least one repetition".into()));
        }
        if self.n_features > crate::statevector::MAX_QUBITS {
            return Err(Error::QubitCount(self.n_features));
        }
        Ok(())
    }

    /// Qubit pairs coupled in every repetition, in application order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_features;
        match (self.family, self.entanglement) {
            (Family::Z, _) | (_, Entanglement::None) => Vec::new(),
            (Family::Zz, Entanglement::Linear) => (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
            (Family::Zz, Entanglement::Full) => (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect(),
        }
    }

    /// Closed-form gate count of the circuit this spec builds.
    pub fn gate_count(&self) -> usize {
        self.reps * (2 * self.n_features + 3 * self.pairs().len())
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Z => format!("z-r{}", self.reps),
            Family::Zz => {
                let e = match self.entanglement {
                    Entanglement::None => "none",
                    Entanglement::Linear => "linear",
                    Entanglement::Full => "full",
                };
                format!("zz-{e}-r{}", self.reps)
            }
        }
    }

    pub fn build_circuit(&self, x: &[f64]) -> Result<Circuit> {
        self.validate()?;
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector".into()));
        }
        let n = self.n_features;
        let pairs = self.pairs();
        let mut gates = Vec::with_capacity(self.gate_count());
        for _ in 0..self.reps {
            gates.extend((0..n).map(Gate::h));
            gates.extend(x.iter().enumerate().map(|(i, &xi)| Gate::phase(i, 2.0 * xi)));
            for &(i, j) in &pairs {
                gates.push(Gate::cnot(i, j));
                gates.push(Gate::phase(j, 2.0 * (PI - x[i]) * (PI - x[j])));
                gates.push(Gate::cnot(i, j));
            }
        }
        Ok(Circuit { n_qubits: n, gates })
    }

    pub fn encode(&self, x: &[f64]) -> Result<QuantumState> {
        self.build_circuit(x)?.run()
    }
}

impl fmt::Display for FeatureMapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    /// Reversed gate list with negated phases.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(|g| g.adjoint()).collect(),
        }
    }

    pub fn then(mut self, other: &Circuit) -> Result<Circuit> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(self)
    }

    /// Applies the circuit to `|0...0>`.
    pub fn run(&self) -> Result<QuantumState> {
        let mut state = QuantumState::zero(self.n_qubits)?;
        state.apply_all(&self.gates)?;
        Ok(state)
    }
}

/// Reduced single-qubit Bloch vector of one qubit in a register.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn length(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Angle from +Z, in `[0, pi]`.
    pub fn polar(&self) -> f64 {
        (self.x.hypot(self.y)).atan2(self.z)
    }

    /// Angle from +X in the XY plane, in `(-pi, pi]`.
    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }
}

pub fn bloch_vector(state: &QuantumState, qubit: usize) -> Result<BlochVector> {
    if qubit >= state.n_qubits() {
        return Err(Error::InvalidArgument(format!(
            "qubit {qubit} out of range for {} qubits",
            state.n_qubits()
        )));
    }
    let bit = 1usize << qubit;
    let amps = state.amplitudes();
    let (mut p0, mut p1) = (0.0, 0.0);
    let mut coherence = num_complex::Complex64::new(0.0, 0.0);
    for i in (0..amps.len()).filter(|i| i & bit == 0) {
        let a0 = amps[i];
        let a1 = amps[i | bit];
        p0 += a0.norm_sqr();
        p1 += a1.norm_sqr();
        coherence += a0 * a1.conj();
    }
    Ok(BlochVector {
        x: 2.0 * coherence.re,
        y: -2.0 * coherence.im,
        z: p0 - p1,
    })
}

/// `(polar, azimuth)` of the reduced Bloch vector of `qubit`.
pub fn bloch_angles(state: &QuantumState, qubit: usize) -> Result<(f64, f64)> {
    let v = bloch_vector(state, qubit)?;
    Ok((v.polar(), v.azimuth()))
}

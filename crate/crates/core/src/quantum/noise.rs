use serde::{Deserialize, Serialize};

use super::density::{unitary_1q, DensityMatrix};
use super::QuantumError;
use crate::ir::Gate;

/// Gate, memory and entanglement noise. Gate durations live in
/// [`crate::TimingParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub f1: f64,
    pub f2: f64,
    /// Dephasing time in seconds; `inf` disables memory noise.
    pub t2_s: f64,
    pub pair_fidelity: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { f1: 0.99, f2: 0.95, t2_s: 10.0, pair_fidelity: 0.95 }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { f1: 1.0, f2: 1.0, t2_s: f64::INFINITY, pair_fidelity: 1.0 }
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        let bad = |what: &str| Err(QuantumError::BadParameter(what.to_string()));
        if !(0.5..=1.0).contains(&self.f1) {
            return bad("single-qubit gate fidelity must lie in [0.5, 1]");
        }
        if !(0.25..=1.0).contains(&self.f2) {
            return bad("two-qubit gate fidelity must lie in [0.25, 1]");
        }
        if !(self.pair_fidelity > 0.0 && self.pair_fidelity <= 1.0) {
            return bad("pair fidelity must lie in (0, 1]");
        }
        if self.t2_s.is_nan() || self.t2_s <= 0.0 {
            return bad("T2 must be positive");
        }
        Ok(())
    }

    /// Depolarizing probability giving average gate fidelity `f1`
    /// (F_avg = 1 − p/2).
    pub fn p1(&self) -> f64 {
        2.0 * (1.0 - self.f1)
    }

    /// Depolarizing probability giving average gate fidelity `f2`
    /// (F_avg = 1 − 3p/4 on two qubits).
    pub fn p2(&self) -> f64 {
        4.0 * (1.0 - self.f2) / 3.0
    }

    /// Coherence scaling after `dt_ns` idle nanoseconds.
    pub fn dephase_factor(&self, dt_ns: u64) -> f64 {
        if self.t2_s.is_infinite() || dt_ns == 0 {
            1.0
        } else {
            (-(dt_ns as f64) * 1e-9 / self.t2_s).exp()
        }
    }
}

/// Ideal gate followed by depolarizing noise on the acted qubits.
pub fn apply_gate(
    rho: &mut DensityMatrix,
    gate: &Gate,
    angle: f64,
    qubits: &[u32],
    noise: &NoiseModel,
) -> Result<(), QuantumError> {
    for &q in qubits {
        if !rho.contains(q) {
            return Err(QuantumError::DeadQubit(q));
        }
    }
    match (gate, qubits) {
        (Gate::CZ, &[a, b]) => {
            rho.apply_cz(a, b);
            rho.depolarize(&[a, b], noise.p2());
        }
        (Gate::CZ, _) => return Err(QuantumError::BadParameter("CZ needs two qubits".into())),
        (g, &[q]) => {
            rho.apply_1q(q, &unitary_1q(g, angle));
            rho.depolarize(&[q], noise.p1());
        }
        _ => return Err(QuantumError::BadParameter(format!("{} needs one qubit", gate.name()))),
    }
    Ok(())
}

pub fn idle_dephase(rho: &mut DensityMatrix, qubit: u32, dt_ns: i64, noise: &NoiseModel) -> Result<(), QuantumError> {
    if dt_ns < 0 {
        return Err(QuantumError::NegativeTime(dt_ns));
    }
    if !rho.contains(qubit) {
        return Err(QuantumError::DeadQubit(qubit));
    }
    rho.dephase(qubit, noise.dephase_factor(dt_ns as u64));
    Ok(())
}

pub fn make_epr(a: u32, b: u32, noise: &NoiseModel) -> DensityMatrix {
    DensityMatrix::werner(a, b, noise.pair_fidelity)
}

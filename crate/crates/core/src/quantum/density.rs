use num_complex::Complex64 as C;

use crate::ir::{Basis, Gate, InitState};

pub type Mat2 = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Mixed state of a handful of labelled qubits.
///
/// Label `labels[k]` occupies bit `k` of the basis index (little-endian),
/// and `data` is the row-major `dim × dim` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    labels: Vec<u32>,
    data: Vec<C>,
}

impl Default for DensityMatrix {
    fn default() -> Self {
        Self::empty()
    }
}

impl DensityMatrix {
    /// Zero-qubit state (the scalar 1).
    pub fn empty() -> Self {
        Self { labels: Vec::new(), data: vec![ONE] }
    }

    pub fn single(label: u32, init: InitState) -> Self {
        let mut m = Self::empty();
        m.add_qubit(label, init);
        m
    }

    /// Werner state F·|Φ+⟩⟨Φ+| + (1−F)/3·(I − |Φ+⟩⟨Φ+|) on labels (a, b).
    pub fn werner(a: u32, b: u32, fidelity: f64) -> Self {
        let off = (1.0 - fidelity) / 3.0;
        let mut data = vec![ZERO; 16];
        for i in 0..4 {
            data[i * 4 + i] = C::new(off, 0.0);
        }
        // |Φ+⟩ = (|00⟩ + |11⟩)/√2 ; indices 0 and 3
        let w = (fidelity - off) / 2.0;
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            data[i * 4 + j] += C::new(w, 0.0);
        }
        Self { labels: vec![a, b], data }
    }

    pub fn from_pure(labels: Vec<u32>, psi: &[C]) -> Self {
        let d = psi.len();
        assert_eq!(d, 1 << labels.len());
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = psi[i] * psi[j].conj();
            }
        }
        Self { labels, data }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.data[i * self.dim() + j]
    }

    pub fn contains(&self, label: u32) -> bool {
        self.labels.contains(&label)
    }

    fn bit(&self, label: u32) -> usize {
        self.labels
            .iter()
            .position(|&l| l == label)
            .unwrap_or_else(|| panic!("qubit {label} is not part of this state"))
    }

    /// Tensor product `self ⊗ other`; other's qubits take the higher bits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let (da, db) = (self.dim(), other.dim());
        let d = da * db;
        let mut data = vec![ZERO; d * d];
        for ib in 0..db {
            for jb in 0..db {
                let y = other.data[ib * db + jb];
                if y == ZERO {
                    continue;
                }
                for ia in 0..da {
                    for ja in 0..da {
                        data[(ib * da + ia) * d + jb * da + ja] = self.data[ia * da + ja] * y;
                    }
                }
            }
        }
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        DensityMatrix { labels, data }
    }

    pub fn add_qubit(&mut self, label: u32, init: InitState) {
        assert!(!self.contains(label), "qubit {label} already present");
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = match init {
            InitState::PlusZ => [ONE, ZERO],
            InitState::MinusZ => [ZERO, ONE],
            InitState::PlusX => [C::new(s, 0.0), C::new(s, 0.0)],
            InitState::MinusX => [C::new(s, 0.0), C::new(-s, 0.0)],
            InitState::PlusY => [C::new(s, 0.0), C::new(0.0, s)],
            InitState::MinusY => [C::new(s, 0.0), C::new(0.0, -s)],
        };
        *self = self.tensor(&DensityMatrix::from_pure(vec![label], &psi));
    }

    /// ρ → U ρ U† on one qubit.
    pub fn apply_1q(&mut self, label: u32, u: &Mat2) {
        let k = self.bit(label);
        let d = self.dim();
        let m = 1 << k;
        // rows: ρ ← U ρ
        for i0 in (0..d).filter(|i| i & m == 0) {
            let i1 = i0 | m;
            for j in 0..d {
                let a = self.data[i0 * d + j];
                let b = self.data[i1 * d + j];
                self.data[i0 * d + j] = u[0][0] * a + u[0][1] * b;
                self.data[i1 * d + j] = u[1][0] * a + u[1][1] * b;
            }
        }
        // columns: ρ ← ρ U†
        for j0 in (0..d).filter(|j| j & m == 0) {
            let j1 = j0 | m;
            for i in 0..d {
                let a = self.data[i * d + j0];
                let b = self.data[i * d + j1];
                self.data[i * d + j0] = a * u[0][0].conj() + b * u[0][1].conj();
                self.data[i * d + j1] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }

    pub fn apply_cz(&mut self, a: u32, b: u32) {
        let m = (1 << self.bit(a)) | (1 << self.bit(b));
        let d = self.dim();
        let sign = |i: usize| if i & m == m { -1.0 } else { 1.0 };
        for i in 0..d {
            for j in 0..d {
                let s = sign(i) * sign(j);
                if s < 0.0 {
                    self.data[i * d + j] = -self.data[i * d + j];
                }
            }
        }
    }

    /// ρ → (1−p)ρ + p·Tr_S(ρ) ⊗ I/2^|S| for the qubits in `labels`.
    pub fn depolarize(&mut self, labels: &[u32], p: f64) {
        if p == 0.0 {
            return;
        }
        let mask: usize = labels.iter().map(|&l| 1usize << self.bit(l)).sum();
        let d = self.dim();
        let subs: Vec<usize> = (0..d).filter(|s| s & !mask == 0).collect();
        let norm = 1.0 / subs.len() as f64;
        let old = self.data.clone();
        for i in 0..d {
            for j in 0..d {
                let mut v = old[i * d + j] * (1.0 - p);
                if i & mask == j & mask {
                    let (ri, rj) = (i & !mask, j & !mask);
                    let mut acc = ZERO;
                    for &s in &subs {
                        acc += old[(ri | s) * d + (rj | s)];
                    }
                    v += acc * (p * norm);
                }
                self.data[i * d + j] = v;
            }
        }
    }

    /// Scales the qubit's Z-basis coherences by `factor`.
    pub fn dephase(&mut self, label: u32, factor: f64) {
        if factor == 1.0 {
            return;
        }
        let m = 1 << self.bit(label);
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                if (i ^ j) & m != 0 {
                    self.data[i * d + j] *= factor;
                }
            }
        }
    }

    /// Rotates `basis` onto Z so that a Z measurement reads it out.
    fn rotate_to_z(&mut self, label: u32, basis: Basis) {
        match basis {
            Basis::Z => {}
            Basis::X => self.apply_1q(label, &hadamard()),
            Basis::Y => {
                let s_dag = [[ONE, ZERO], [ZERO, C::new(0.0, -1.0)]];
                self.apply_1q(label, &s_dag);
                self.apply_1q(label, &hadamard());
            }
        }
    }

    /// Probability of outcome 1 when measuring `label` in `basis`.
    pub fn prob_one(&self, label: u32, basis: Basis) -> f64 {
        let mut r = self.clone();
        r.rotate_to_z(label, basis);
        let m = 1 << r.bit(label);
        let d = r.dim();
        (0..d).filter(|i| i & m != 0).map(|i| r.data[i * d + i].re).sum::<f64>().clamp(0.0, 1.0)
    }

    /// Projects onto `outcome` in `basis`, removes the qubit and renormalizes.
    /// Returns the outcome probability and the post-measurement state.
    pub fn project(&self, label: u32, basis: Basis, outcome: u8) -> (f64, DensityMatrix) {
        let mut r = self.clone();
        r.rotate_to_z(label, basis);
        let k = r.bit(label);
        let d = r.dim();
        let nd = d / 2;
        let lift = |a: usize| {
            let low = a & ((1 << k) - 1);
            let high = (a >> k) << (k + 1);
            high | ((outcome as usize) << k) | low
        };
        let mut data = vec![ZERO; nd * nd];
        let mut prob = 0.0;
        for a in 0..nd {
            prob += r.data[lift(a) * d + lift(a)].re;
        }
        if prob > 0.0 {
            for a in 0..nd {
                for b in 0..nd {
                    data[a * nd + b] = r.data[lift(a) * d + lift(b)] / prob;
                }
            }
        }
        let mut labels = r.labels.clone();
        labels.remove(k);
        (prob.clamp(0.0, 1.0), DensityMatrix { labels, data })
    }

    /// Measures with a caller-provided uniform draw `u ∈ [0,1)`: outcome 1
    /// iff `u < P(1)`.
    pub fn measure(&self, label: u32, basis: Basis, u: f64) -> (u8, DensityMatrix) {
        let p1 = self.prob_one(label, basis);
        let outcome = u8::from(u < p1);
        let (_, post) = self.project(label, basis, outcome);
        (outcome, post)
    }

    /// Traces out one qubit.
    pub fn trace_out(&self, label: u32) -> DensityMatrix {
        let (p0, r0) = self.project(label, Basis::Z, 0);
        let (p1, r1) = self.project(label, Basis::Z, 1);
        let data = r0.data.iter().zip(&r1.data).map(|(a, b)| a * p0 + b * p1).collect();
        DensityMatrix { labels: r0.labels, data }
    }

    pub fn trace(&self) -> C {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// ⟨ψ|ρ|ψ⟩ for a pure state in this matrix's label order.
    pub fn fidelity_pure(&self, psi: &[C]) -> f64 {
        let d = self.dim();
        assert_eq!(psi.len(), d);
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += psi[i].conj() * self.data[i * d + j] * psi[j];
            }
        }
        acc.re
    }

    /// Largest |ρ_ij − conj(ρ_ji)|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Reorders qubits so that labels appear in `order` (bit k = order[k]).
    pub fn permuted(&self, order: &[u32]) -> DensityMatrix {
        assert_eq!(order.len(), self.labels.len());
        let pos: Vec<usize> = order.iter().map(|&l| self.bit(l)).collect();
        let d = self.dim();
        let map = |new: usize| -> usize {
            pos.iter().enumerate().fold(0, |acc, (k, &old_bit)| acc | (((new >> k) & 1) << old_bit))
        };
        let idx: Vec<usize> = (0..d).map(map).collect();
        let mut data = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = self.data[idx[i] * d + idx[j]];
            }
        }
        DensityMatrix { labels: order.to_vec(), data }
    }

    pub fn data(&self) -> &[C] {
        &self.data
    }
}

pub fn hadamard() -> Mat2 {
    let s = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

/// Ideal 2×2 unitary of a single-qubit gate with its angle already evaluated.
pub fn unitary_1q(gate: &Gate, angle: f64) -> Mat2 {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    match gate {
        Gate::X => [[ZERO, ONE], [ONE, ZERO]],
        Gate::Z => [[ONE, ZERO], [ZERO, -ONE]],
        Gate::H => hadamard(),
        Gate::RX(_) => [[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]],
        Gate::RY(_) => [[C::new(c, 0.0), C::new(-s, 0.0)], [C::new(s, 0.0), C::new(c, 0.0)]],
        Gate::RZ(_) => [[C::from_polar(1.0, -angle / 2.0), ZERO], [ZERO, C::from_polar(1.0, angle / 2.0)]],
        Gate::CZ => panic!("CZ is a two-qubit gate"),
    }
}

pub fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut r = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// Distance between two unitaries modulo a global phase:
/// `1 − |Tr(A†B)|/2`.
pub fn phase_distance(a: &Mat2, b: &Mat2) -> f64 {
    let mut tr = ZERO;
    for i in 0..2 {
        for k in 0..2 {
            tr += a[k][i].conj() * b[k][i];
        }
    }
    1.0 - tr.norm() / 2.0
}

/// State vector of a single-qubit Pauli eigenstate.
pub fn init_vector(init: InitState) -> [C; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match init {
        InitState::PlusZ => [ONE, ZERO],
        InitState::MinusZ => [ZERO, ONE],
        InitState::PlusX => [C::new(s, 0.0), C::new(s, 0.0)],
        InitState::MinusX => [C::new(s, 0.0), C::new(-s, 0.0)],
        InitState::PlusY => [C::new(s, 0.0), C::new(0.0, s)],
        InitState::MinusY => [C::new(s, 0.0), C::new(0.0, -s)],
    }
}

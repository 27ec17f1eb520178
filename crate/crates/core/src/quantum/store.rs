use std::collections::BTreeMap;

use super::density::DensityMatrix;
use super::noise::{apply_gate, NoiseModel};
use super::QuantumError;
use crate::ir::{Basis, Gate, InitState};

/// All live qubits of a simulation, kept as independent groups that are
/// only merged when a two-qubit gate (or an EPR pair) entangles them.
#[derive(Clone, Debug, Default)]
pub struct QubitStore {
    groups: BTreeMap<usize, DensityMatrix>,
    owner: BTreeMap<u32, usize>,
    next_group: usize,
}

impl QubitStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_live(&self, q: u32) -> bool {
        self.owner.contains_key(&q)
    }

    pub fn live_count(&self) -> usize {
        self.owner.len()
    }

    /// Size of the largest entangled group.
    pub fn max_group_size(&self) -> usize {
        self.groups.values().map(DensityMatrix::num_qubits).max().unwrap_or(0)
    }

    fn insert_group(&mut self, m: DensityMatrix) {
        let g = self.next_group;
        self.next_group += 1;
        for &l in m.labels() {
            self.owner.insert(l, g);
        }
        self.groups.insert(g, m);
    }

    fn group(&self, q: u32) -> Result<usize, QuantumError> {
        self.owner.get(&q).copied().ok_or(QuantumError::DeadQubit(q))
    }

    pub fn state_of(&self, q: u32) -> Result<&DensityMatrix, QuantumError> {
        Ok(&self.groups[&self.group(q)?])
    }

    pub fn alloc(&mut self, q: u32, init: InitState) -> Result<(), QuantumError> {
        if self.is_live(q) {
            return Err(QuantumError::AlreadyLive(q));
        }
        self.insert_group(DensityMatrix::single(q, init));
        Ok(())
    }

    pub fn add_pair(&mut self, a: u32, b: u32, fidelity: f64) -> Result<(), QuantumError> {
        for q in [a, b] {
            if self.is_live(q) {
                return Err(QuantumError::AlreadyLive(q));
            }
        }
        self.insert_group(DensityMatrix::werner(a, b, fidelity));
        Ok(())
    }

    fn merge(&mut self, a: u32, b: u32) -> Result<usize, QuantumError> {
        let (ga, gb) = (self.group(a)?, self.group(b)?);
        if ga == gb {
            return Ok(ga);
        }
        let mb = self.groups.remove(&gb).expect("group exists");
        let ma = self.groups.get_mut(&ga).expect("group exists");
        *ma = ma.tensor(&mb);
        for &l in mb.labels() {
            self.owner.insert(l, ga);
        }
        Ok(ga)
    }

    pub fn apply_gate(&mut self, gate: &Gate, angle: f64, qs: &[u32], noise: &NoiseModel) -> Result<(), QuantumError> {
        let g = match qs {
            [a, b] => self.merge(*a, *b)?,
            [a] => self.group(*a)?,
            _ => return Err(QuantumError::BadParameter("gate needs one or two qubits".into())),
        };
        apply_gate(self.groups.get_mut(&g).unwrap(), gate, angle, qs, noise)
    }

    pub fn dephase(&mut self, q: u32, factor: f64) -> Result<(), QuantumError> {
        let g = self.group(q)?;
        self.groups.get_mut(&g).unwrap().dephase(q, factor);
        Ok(())
    }

    pub fn prob_one(&self, q: u32, basis: Basis) -> Result<f64, QuantumError> {
        Ok(self.state_of(q)?.prob_one(q, basis))
    }

    fn replace(&mut self, g: usize, q: u32, post: DensityMatrix) {
        self.owner.remove(&q);
        if post.num_qubits() == 0 {
            self.groups.remove(&g);
        } else {
            self.groups.insert(g, post);
        }
    }

    /// Measures and frees `q` using the uniform draw `u`.
    pub fn measure(&mut self, q: u32, basis: Basis, u: f64) -> Result<u8, QuantumError> {
        let g = self.group(q)?;
        let (bit, post) = self.groups[&g].measure(q, basis, u);
        self.replace(g, q, post);
        Ok(bit)
    }

    /// Forces `outcome`, frees `q` and returns the outcome's probability.
    pub fn collapse(&mut self, q: u32, basis: Basis, outcome: u8) -> Result<f64, QuantumError> {
        let g = self.group(q)?;
        let (p, post) = self.groups[&g].project(q, basis, outcome);
        self.replace(g, q, post);
        Ok(p)
    }

    pub fn free(&mut self, q: u32) -> Result<(), QuantumError> {
        let g = self.group(q)?;
        let post = self.groups[&g].trace_out(q);
        self.replace(g, q, post);
        Ok(())
    }
}

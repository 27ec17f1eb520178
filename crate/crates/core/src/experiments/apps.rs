//! Program builders for the rotation application, BQC and the server-local
//! workloads.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::compiler::hybrid_optimize;
use crate::ir::{
    estimate_block_duration, AngleExpr, Basis, BlockType, Gate, InitState, Instruction, NodeId, Program, QubitId, Var,
};
use crate::quantum::{unitary_1q, DensityMatrix};
use crate::runtime::OutcomeCheck;
use crate::timing::TimingParams;

fn ql(p: &mut Program, instrs: Vec<Instruction>) {
    p.push_block(BlockType::QL, instrs);
}

fn cc(p: &mut Program, instrs: Vec<Instruction>) {
    p.push_block(BlockType::CC, instrs);
}

fn send(peer: &NodeId, v: &Var) -> Instruction {
    Instruction::SendMsg { peer: peer.clone(), payload: v.clone() }
}

fn recv(peer: &NodeId, v: &Var) -> Instruction {
    Instruction::RecvMsg { peer: peer.clone(), dest: v.clone() }
}

fn assign(v: &Var, e: AngleExpr) -> Instruction {
    Instruction::ClassicalCompute { ops: 1, assign: Some((v.clone(), e)) }
}

fn measure(q: u32, basis: Basis, dest: &Var) -> Instruction {
    Instruction::QMeasure { qubit: QubitId(q), basis, dest: dest.clone() }
}

#[derive(Clone, Debug)]
pub struct RotationApp {
    pub client: Program,
    pub server: Program,
    pub init: InitState,
    pub angles: Vec<f64>,
    /// Checks for the server instance.
    pub checks: Vec<OutcomeCheck>,
}

/// Client sends `n` random angles summing to 2π; the server rotates a qubit
/// prepared in `init` about X by each and measures it in the basis of
/// `init`.
pub fn build_rotation_app<R: Rng + ?Sized>(
    n: usize,
    optimized: bool,
    init: InitState,
    client_node: &NodeId,
    server_node: &NodeId,
    rng: &mut R,
) -> RotationApp {
    assert!(n >= 1, "rotation app needs at least one angle");
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut angles: Vec<f64> = weights.iter().map(|w| w / total * TAU).collect();
    let head: f64 = angles[..n - 1].iter().sum();
    angles[n - 1] = TAU - head;

    let mut client = Program::new("rotation_client", client_node.clone());
    for (k, a) in angles.iter().enumerate() {
        let v = client.declare(&format!("t{}", k + 1), Some(*a));
        cc(&mut client, vec![send(server_node, &v)]);
    }

    let mut server = Program::new("rotation_server", server_node.clone());
    let m = server.declare("m", None);
    ql(&mut server, vec![Instruction::QAlloc { qubit: QubitId(0), init }]);
    for k in 1..=n {
        let v = server.declare(&format!("t{k}"), None);
        cc(&mut server, vec![recv(client_node, &v)]);
        let mut body = vec![Instruction::gate(Gate::RX(AngleExpr::var(v)), &[0])];
        if k == n {
            body.push(measure(0, init.basis(), &m));
        }
        ql(&mut server, body);
    }
    if optimized {
        server = hybrid_optimize(&server);
    }
    RotationApp { client, server, init, angles, checks: vec![OutcomeCheck::new(m, init.outcome())] }
}

#[derive(Clone, Debug)]
pub struct BqcApp {
    pub client: Program,
    pub server: Program,
    /// Computation angles; the ideal final outcome is deterministic.
    pub phi: Vec<f64>,
    /// Blinding angles and outcome-flip bits.
    pub theta: Vec<f64>,
    pub r: Vec<u8>,
    pub expected: u8,
    /// Checks for the client instance.
    pub checks: Vec<OutcomeCheck>,
}

/// Measurement angle actually used for qubit `j` given the logical outcomes
/// of earlier qubits on the line: `(-1)^s[j-1]·φ_j + s[j-2]·π`.
pub fn adapted_angle(phi: &[f64], s: &[u8], j: usize) -> f64 {
    let x = if j >= 1 && s[j - 1] == 1 { -phi[j] } else { phi[j] };
    let z = if j >= 2 && s[j - 2] == 1 { PI } else { 0.0 };
    x + z
}

/// Probability that the last qubit of the line-graph pattern with angles
/// `phi` reads 1, computed on one branch of the earlier outcomes.
pub fn bqc_ideal_p1(phi: &[f64]) -> f64 {
    let n = phi.len();
    let mut rho = DensityMatrix::empty();
    for q in 0..n as u32 {
        rho.add_qubit(q, InitState::PlusX);
    }
    for q in 1..n as u32 {
        rho.apply_cz(q - 1, q);
    }
    let mut s = vec![0u8; n];
    for j in 0..n {
        let delta = -adapted_angle(phi, &s, j);
        rho.apply_1q(j as u32, &unitary_1q(&Gate::RZ(AngleExpr::constant(0.0)), delta));
        if j + 1 == n {
            return rho.prob_one(j as u32, Basis::X);
        }
        let (p0, post) = rho.project(j as u32, Basis::X, 0);
        debug_assert!(p0 > 1e-9);
        rho = post;
        s[j] = 0;
    }
    unreachable!()
}

/// Clifford computation angles whose ideal final outcome is deterministic,
/// with that outcome.
pub fn choose_bqc_angles<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (Vec<f64>, u8) {
    let quarter = |k: usize| k as f64 * FRAC_PI_2;
    let mut phi: Vec<f64> = (0..n).map(|_| quarter(rng.random_range(0..4))).collect();
    let free = n.min(2);
    let mut combos: Vec<Vec<usize>> =
        (0..4usize.pow(free as u32)).map(|c| (0..free).map(|d| (c >> (2 * d)) & 3).collect()).collect();
    combos.shuffle(rng);
    for combo in combos {
        for (d, k) in combo.iter().enumerate() {
            phi[n - free + d] = quarter(*k);
        }
        let p1 = bqc_ideal_p1(&phi);
        if p1 < 1e-9 || p1 > 1.0 - 1e-9 {
            return (phi, u8::from(p1 > 0.5));
        }
    }
    unreachable!("some Clifford choice of the last two angles is deterministic")
}

/// Blind computation on a line of `n` qubits.
///
/// The client prepares each server qubit remotely by measuring its half of
/// an EPR pair after `RZ(θ_i)` and sends the Z correction `π·rsp_i`. It then
/// sends the blinded angles `δ_i`, adapting them to the reported outcomes
/// `m_i`.
pub fn build_bqc_app<R: Rng + ?Sized>(
    n: usize,
    optimized: bool,
    client_node: &NodeId,
    server_node: &NodeId,
    rng: &mut R,
) -> BqcApp {
    assert!(n >= 1, "BQC needs at least one qubit");
    let (phi, expected) = choose_bqc_angles(n, rng);
    let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0..8) as f64 * PI / 4.0).collect();
    let r: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();

    let mut client = Program::new("bqc_client", client_node.clone());
    for i in 0..n {
        client.push_block(
            BlockType::QC,
            vec![Instruction::EprRequest { peer: server_node.clone(), count: 1, qubits: vec![QubitId(0)] }],
        );
        let rsp = client.declare(&format!("rsp{i}"), None);
        ql(
            &mut client,
            vec![Instruction::gate(Gate::RZ(AngleExpr::constant(theta[i])), &[0]), measure(0, Basis::X, &rsp)],
        );
        let corr = client.declare(&format!("corr{i}"), None);
        cc(&mut client, vec![assign(&corr, AngleExpr::scaled(PI, rsp)), send(server_node, &corr)]);
    }
    let m: Vec<Var> = (0..n).map(|i| client.declare(&format!("m{i}"), None)).collect();
    for j in 0..n {
        // δ_j = -(φ'_j + θ_j + r_j π), with s_k = m_k XOR r_k written as
        // an affine function of m_k
        let mut e = AngleExpr::constant(-(theta[j] + f64::from(r[j]) * PI));
        if j >= 1 {
            let sign = if r[j - 1] == 1 { -1.0 } else { 1.0 };
            // (-1)^s φ = σφ - 2σφ·m with σ = (-1)^r
            e = e.add_constant(-sign * phi[j]).add_term(2.0 * sign * phi[j], m[j - 1].clone());
        } else {
            e = e.add_constant(-phi[j]);
        }
        if j >= 2 {
            // s π = π m (r = 0) or π - π m (r = 1)
            if r[j - 2] == 1 {
                e = e.add_constant(-PI).add_term(PI, m[j - 2].clone());
            } else {
                e = e.add_term(-PI, m[j - 2].clone());
            }
        }
        let delta = client.declare(&format!("delta{j}"), None);
        cc(&mut client, vec![assign(&delta, e), send(server_node, &delta)]);
        cc(&mut client, vec![recv(server_node, &m[j])]);
    }

    let mut server = Program::new("bqc_server", server_node.clone());
    for i in 0..n as u32 {
        server.push_block(
            BlockType::QC,
            vec![Instruction::EprRequest { peer: client_node.clone(), count: 1, qubits: vec![QubitId(i)] }],
        );
        let corr = server.declare(&format!("corr{i}"), None);
        cc(&mut server, vec![recv(client_node, &corr)]);
        ql(&mut server, vec![Instruction::gate(Gate::RZ(AngleExpr::var(corr)), &[i])]);
    }
    for i in 1..n as u32 {
        ql(&mut server, vec![Instruction::gate(Gate::CZ, &[i - 1, i])]);
    }
    for j in 0..n as u32 {
        let delta = server.declare(&format!("delta{j}"), None);
        let mj = server.declare(&format!("m{j}"), None);
        cc(&mut server, vec![recv(client_node, &delta)]);
        ql(&mut server, vec![Instruction::gate(Gate::RZ(AngleExpr::var(delta)), &[j]), measure(j, Basis::X, &mj)]);
        cc(&mut server, vec![send(client_node, &mj)]);
    }
    if optimized {
        server = hybrid_optimize(&server);
    }

    let last = n - 1;
    let checks = vec![OutcomeCheck { var: m[last].clone(), flip: r[last] == 1, expected }];
    BqcApp { client, server, phi, theta, r, expected, checks }
}

/// Gates of the server-local workloads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LocalGate {
    H,
    X,
    Z,
}

impl LocalGate {
    fn gate(self) -> Gate {
        match self {
            LocalGate::H => Gate::H,
            LocalGate::X => Gate::X,
            LocalGate::Z => Gate::Z,
        }
    }
}

/// `iterations` × [alloc |0⟩; `gates` × `gate`; measure Z] in one QL block.
/// `gate` applied `gates` times must be the identity (even counts of H, X
/// or Z), so every outcome is 0. The run is judged on the final outcome.
pub fn build_scenario1_local(iterations: usize, gates: usize, gate: LocalGate) -> (Program, Vec<OutcomeCheck>) {
    let mut p = Program::new("local", "server");
    let mut body = Vec::new();
    let mut last = None;
    for k in 0..iterations {
        let m = p.declare(&format!("m{k}"), None);
        body.push(Instruction::QAlloc { qubit: QubitId(0), init: InitState::PlusZ });
        body.extend((0..gates).map(|_| Instruction::gate(gate.gate(), &[0])));
        body.push(measure(0, Basis::Z, &m));
        last = Some(m);
    }
    ql(&mut p, body);
    (p, last.map(|m| vec![OutcomeCheck::new(m, 0)]).unwrap_or_default())
}

/// One qubit kept live for `iterations × gates` gates and measured once.
/// The qubit is moved to |+⟩ by the first gate, stays on the equator under
/// Z gates and is rotated back by the last, so memory dephasing shows up
/// in the outcome.
pub fn build_scenario2_local(iterations: usize, gates: usize) -> (Program, Vec<OutcomeCheck>) {
    let total = iterations * gates;
    assert!(total >= 2 && total % 2 == 0, "needs an even number of at least two gates");
    let mut p = Program::new("local", "server");
    let m = p.declare("m", None);
    let mut body = vec![Instruction::QAlloc { qubit: QubitId(0), init: InitState::PlusZ }];
    body.push(Instruction::gate(Gate::H, &[0]));
    body.extend((0..total - 2).map(|_| Instruction::gate(Gate::Z, &[0])));
    body.push(Instruction::gate(Gate::H, &[0]));
    body.push(measure(0, Basis::Z, &m));
    ql(&mut p, body);
    (p, vec![OutcomeCheck::new(m, 0)])
}

/// Appends to every QL block an allocate / H gates / free sequence on a
/// scratch qubit so that the block's estimated duration is a uniformly
/// drawn fraction in `[lo, hi]` of `expected_epr_ns`. Returns the padded
/// program and the number of gates added per block.
pub fn pad_ql_blocks<R: Rng + ?Sized>(
    p: &Program,
    lo: f64,
    hi: f64,
    expected_epr_ns: f64,
    timing: &TimingParams,
    rng: &mut R,
) -> (Program, Vec<usize>) {
    let scratch = p.blocks.iter().flat_map(|b| b.qubits()).map(|q| q.0 + 1).max().unwrap_or(0);
    let per_gate = (timing.quantum_instr_ns + timing.gate_1q_ns) as f64;
    let frame = 2.0 * timing.quantum_instr_ns as f64;
    let mut out = p.clone();
    let mut added = Vec::new();
    for b in out.blocks.iter_mut().filter(|b| b.btype == BlockType::QL) {
        let target = rng.random_range(lo..=hi) * expected_epr_ns;
        let cur = estimate_block_duration(b, timing, false).unwrap_or(0) as f64;
        let g = ((target - cur - frame) / per_gate).round().max(0.0) as usize;
        b.instrs.push(Instruction::QAlloc { qubit: QubitId(scratch), init: InitState::PlusZ });
        b.instrs.extend((0..g).map(|_| Instruction::gate(Gate::H, &[scratch])));
        b.instrs.push(Instruction::QFree { qubit: QubitId(scratch) });
        added.push(g);
    }
    (out, added)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::block_cooperative;
    use crate::ir::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn nodes() -> (NodeId, NodeId) {
        (NodeId::from("client"), NodeId::from("server"))
    }

    fn rz_count(p: &Program) -> usize {
        p.blocks
            .iter()
            .flat_map(|b| &b.instrs)
            .filter(|i| matches!(i, Instruction::QGate { gate: Gate::RZ(_), .. }))
            .count()
    }

    #[test]
    fn rotation_structure() {
        let (c, s) = nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = build_rotation_app(2, false, InitState::PlusY, &c, &s, &mut rng);
        assert_eq!(a.server.count_blocks(BlockType::QL), 3);
        assert_eq!(a.server.count_blocks(BlockType::CC), 2);
        let o = build_rotation_app(2, true, InitState::PlusY, &c, &s, &mut rng);
        assert_eq!(o.server.count_blocks(BlockType::QL), 1);
        assert_eq!(o.server.count_blocks(BlockType::CC), 2);
        for n in 1..=10 {
            let a = build_rotation_app(n, n % 2 == 0, InitState::MinusX, &c, &s, &mut rng);
            assert!((a.angles.iter().sum::<f64>() - TAU).abs() < 1e-12);
            assert!(a.angles.iter().all(|&x| x > 0.0));
            assert!(validate(&a.client).is_ok() && validate(&a.server).is_ok());
        }
    }

    #[test]
    fn bqc_structure() {
        let (c, s) = nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = build_bqc_app(3, false, &c, &s, &mut rng);
        let o = build_bqc_app(3, true, &c, &s, &mut rng);
        assert_eq!(rz_count(&u.server), 6);
        assert_eq!(rz_count(&o.server), 3);
        for p in [&u.client, &u.server, &o.client, &o.server] {
            assert!(validate(p).is_ok(), "{:?}", validate(p));
        }
        let one = build_bqc_app(1, false, &c, &s, &mut rng);
        let cz = one
            .server
            .blocks
            .iter()
            .flat_map(|b| &b.instrs)
            .filter(|i| matches!(i, Instruction::QGate { gate: Gate::CZ, .. }));
        assert_eq!(cz.count(), 0);
    }

    #[test]
    fn chosen_angles_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=5 {
            for _ in 0..10 {
                let (phi, out) = choose_bqc_angles(n, &mut rng);
                let p1 = bqc_ideal_p1(&phi);
                assert!((p1 - f64::from(out)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn local_programs() {
        let (p, checks) = build_scenario1_local(200, 8, LocalGate::H);
        assert_eq!(p.blocks.len(), 1);
        assert_eq!(p.gate_count(), 1600);
        assert_eq!(checks.len(), 1);
        let coop = block_cooperative(&p, 8).unwrap();
        assert_eq!(coop.blocks.len(), 200);
        assert_eq!(coop.gate_count(), 1600);
        assert!(validate(&coop).is_ok());

        let (p2, checks2) = build_scenario2_local(200, 8);
        assert_eq!(checks2.len(), 1);
        let coop2 = block_cooperative(&p2, 8).unwrap();
        assert_eq!(coop2.blocks.len(), 200);
        assert!(coop2.blocks[1..].iter().all(|b| b.load == vec![QubitId(0)]));
        assert!(validate(&coop2).is_ok());
    }

    #[test]
    fn padding_lands_in_range() {
        let (c, s) = nodes();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let app = build_bqc_app(3, true, &c, &s, &mut rng);
        let t = TimingParams::default();
        let e = 15_384_615.0;
        let (padded, added) = pad_ql_blocks(&app.server, 0.12, 0.18, e, &t, &mut rng);
        assert!(added.iter().all(|&g| g > 10));
        assert!(validate(&padded).is_ok());
        for b in padded.blocks.iter().filter(|b| b.btype == BlockType::QL) {
            let d = estimate_block_duration(b, &t, false).unwrap() as f64 / e;
            assert!((0.115..=0.185).contains(&d), "{d}");
        }
    }
}

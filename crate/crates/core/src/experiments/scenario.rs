use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::apps::{
    build_bqc_app, build_rotation_app, build_scenario1_local, build_scenario2_local, pad_ql_blocks, LocalGate,
};
use super::ExperimentError;
use crate::compiler::{compile, parse_pipeline, pipeline_name, Strategy};
use crate::ir::{InitState, NodeId};
use crate::network::{build_schedule, classical_latency_ns, AppId, LinkParams, Topology};
use crate::quantum::NoiseModel;
use crate::runtime::{derive_seed, run_simulation, InstanceSpec, NetworkConfig, NodeConfig, SimOptions, Trace};
use crate::timing::TimingParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Rotation,
    Bqc,
    BlockScen1,
    BlockScen2,
    BlockScen3,
    Deadline,
    Critical,
    CriticalLargeBlocks,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::Rotation,
        ScenarioKind::Bqc,
        ScenarioKind::BlockScen1,
        ScenarioKind::BlockScen2,
        ScenarioKind::BlockScen3,
        ScenarioKind::Deadline,
        ScenarioKind::Critical,
        ScenarioKind::CriticalLargeBlocks,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Rotation => "rotation",
            ScenarioKind::Bqc => "bqc",
            ScenarioKind::BlockScen1 => "block-scen1",
            ScenarioKind::BlockScen2 => "block-scen2",
            ScenarioKind::BlockScen3 => "block-scen3",
            ScenarioKind::Deadline => "deadline",
            ScenarioKind::Critical => "critical",
            ScenarioKind::CriticalLargeBlocks => "critical-large-blocks",
        }
    }

    fn has_local(self) -> bool {
        matches!(self, ScenarioKind::BlockScen1 | ScenarioKind::BlockScen2)
    }

    pub fn single_app(self) -> bool {
        matches!(self, ScenarioKind::Rotation | ScenarioKind::Bqc)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    GateFidelity,
    /// Classical latency as a fraction of T2.
    CcLatency,
    BinMultiple,
    /// Row index into the topology table.
    Topology,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::GateFidelity => "gate-fidelity",
            SweepParam::CcLatency => "cc-latency",
            SweepParam::BinMultiple => "bin-multiple",
            SweepParam::Topology => "topology",
        }
    }
}

impl FromStr for SweepParam {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [SweepParam::GateFidelity, SweepParam::CcLatency, SweepParam::BinMultiple, SweepParam::Topology]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown sweep parameter `{s}`")))
    }
}

/// Fixed hardware and workload parameters of a scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Hardware {
    pub timing: TimingParams,
    pub noise: NoiseModel,
    pub link: LinkParams,
    pub hops: u32,
    /// Overrides the latency derived from the link distance and hops.
    pub latency_ns: Option<u64>,
    pub bin_multiple: f64,
    pub local_iterations: usize,
    pub local_gates: usize,
    pub local_gate: LocalGate,
    pub pad_range: (f64, f64),
    pub topology: Topology,
}

impl Default for Hardware {
    fn default() -> Self {
        Self {
            timing: TimingParams::default(),
            noise: NoiseModel::default(),
            link: LinkParams::lab(),
            hops: 0,
            latency_ns: None,
            bin_multiple: 1.0,
            local_iterations: 200,
            local_gates: 8,
            local_gate: LocalGate::H,
            pad_range: (0.12, 0.18),
            topology: Topology::surfnet(),
        }
    }
}

/// Compilation pipelines per program role. `c1` applies to the first
/// client's server program and defaults to `server`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Pipelines {
    pub server: Vec<Strategy>,
    pub c1: Option<Vec<Strategy>>,
    pub local: Vec<Strategy>,
}

impl Pipelines {
    pub fn c1(&self) -> &[Strategy] {
        self.c1.as_deref().unwrap_or(&self.server)
    }

    /// Applies `role=pipeline` overrides, e.g. `local=coop:8`.
    pub fn set(&mut self, assignment: &str) -> Result<(), ExperimentError> {
        let (role, pipe) = assignment
            .split_once('=')
            .ok_or_else(|| ExperimentError::Config(format!("expected role=pipeline, got `{assignment}`")))?;
        let pipe = parse_pipeline(pipe)?;
        match role.trim() {
            "server" => self.server = pipe,
            "c1" => self.c1 = Some(pipe),
            "local" => self.local = pipe,
            other => return Err(ExperimentError::Config(format!("unknown program role `{other}`"))),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n: usize,
    pub c: usize,
    pub pipelines: Pipelines,
    pub sweep: SweepParam,
    pub values: Vec<f64>,
    pub runs_per_seed: usize,
    pub seeds: Vec<u64>,
    pub hw: Hardware,
}

pub const DEFAULT_SEEDS: [u64; 10] = [
    0x5eed_0001,
    0x5eed_0002,
    0x5eed_0003,
    0x5eed_0004,
    0x5eed_0005,
    0x5eed_0006,
    0x5eed_0007,
    0x5eed_0008,
    0x5eed_0009,
    0x5eed_000a,
];

pub const FIDELITY_SWEEP: [f64; 7] = [0.95, 0.96, 0.97, 0.98, 0.99, 0.995, 0.999];

impl ScenarioSpec {
    /// The published configuration of `kind`. `treatment` selects the
    /// second compilation choice of the comparison the scenario is about:
    /// optimized programs, a cooperative local program, 1-cooperative
    /// server programs, selfish deadlines or a critical section for the
    /// first client.
    pub fn paper(kind: ScenarioKind, n: usize, c: usize, treatment: bool) -> Self {
        use Strategy::*;
        let mut hw = Hardware::default();
        let base = vec![HybridOptimize, BlockSelfish];
        let (pipelines, sweep, values, runs) = match kind {
            ScenarioKind::Rotation | ScenarioKind::Bqc => {
                let server = if treatment { vec![HybridOptimize] } else { vec![] };
                let p = Pipelines { server, ..Default::default() };
                (p, SweepParam::GateFidelity, FIDELITY_SWEEP.to_vec(), 1000)
            }
            ScenarioKind::BlockScen1 | ScenarioKind::BlockScen2 => {
                if kind == ScenarioKind::BlockScen2 {
                    hw.noise.f1 = 1.0;
                }
                let local = if treatment { vec![BlockCooperative(8)] } else { vec![] };
                (Pipelines { server: base, c1: None, local }, SweepParam::BinMultiple, bins(), 100)
            }
            ScenarioKind::BlockScen3 => {
                let server = if treatment { vec![HybridOptimize, BlockCooperative(1)] } else { base };
                (Pipelines { server, ..Default::default() }, SweepParam::BinMultiple, bins(), 100)
            }
            ScenarioKind::Deadline => {
                let mut others = base.clone();
                others.push(DeadlineCooperative(100));
                let mut c1 = base;
                c1.push(if treatment { DeadlineSelfish } else { DeadlineCooperative(100) });
                (Pipelines { server: others, c1: Some(c1), local: vec![] }, SweepParam::BinMultiple, bins(), 100)
            }
            ScenarioKind::Critical | ScenarioKind::CriticalLargeBlocks => {
                let mut c1 = base.clone();
                if treatment {
                    c1.push(CriticalSection);
                }
                (Pipelines { server: base, c1: Some(c1), local: vec![] }, SweepParam::BinMultiple, bins(), 100)
            }
        };
        Self { kind, n, c, pipelines, sweep, values, runs_per_seed: runs, seeds: DEFAULT_SEEDS.to_vec(), hw }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n == 0 || self.c == 0 || self.values.is_empty() || self.seeds.is_empty() || self.runs_per_seed == 0 {
            return Err(ExperimentError::Config(
                "n, c, runs and seeds must be positive and the sweep non-empty".into(),
            ));
        }
        if self.kind.single_app() && self.c != 1 {
            return Err(ExperimentError::Config(format!("{} uses exactly one client", self.kind)));
        }
        Ok(())
    }

    /// Program roles reported for this scenario, with their pipelines.
    pub fn roles(&self) -> Vec<(&'static str, String)> {
        let mut r = Vec::new();
        if self.kind.single_app() {
            r.push(("app", pipeline_name(&self.pipelines.server)));
            return r;
        }
        r.push(("bqc", pipeline_name(&self.pipelines.server)));
        r.push(("c1", pipeline_name(self.pipelines.c1())));
        if self.c > 1 {
            r.push(("others", pipeline_name(&self.pipelines.server)));
        }
        if self.kind.has_local() {
            r.push(("local", pipeline_name(&self.pipelines.local)));
        }
        r
    }
}

fn bins() -> Vec<f64> {
    (1..=10).map(f64::from).collect()
}

/// Everything needed for one simulation run.
pub struct RunSetup {
    pub nodes: Vec<NodeConfig>,
    pub instances: Vec<InstanceSpec>,
    pub net: NetworkConfig,
    local: Option<usize>,
    apps: Vec<AppId>,
}

fn apply_sweep(spec: &ScenarioSpec, value: f64) -> Result<Hardware, ExperimentError> {
    let mut hw = spec.hw.clone();
    match spec.sweep {
        SweepParam::GateFidelity => {
            hw.noise.f1 = value;
            hw.noise.f2 = 1.0;
            hw.noise.pair_fidelity = 1.0;
            hw.noise.t2_s = f64::INFINITY;
        }
        SweepParam::CcLatency => {
            if !hw.noise.t2_s.is_finite() {
                return Err(ExperimentError::Config("latency as a fraction of T2 needs a finite T2".into()));
            }
            hw.latency_ns = Some((value * hw.noise.t2_s * 1e9).round() as u64);
        }
        SweepParam::BinMultiple => hw.bin_multiple = value,
        SweepParam::Topology => {
            let row = hw
                .topology
                .entries()
                .get(value as usize)
                .ok_or_else(|| ExperimentError::Config(format!("no topology row {value}")))?
                .clone();
            hw.link = hw.link.at_distance(row.distance_km);
            hw.hops = row.hops;
        }
    }
    hw.noise.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
    Ok(hw)
}

/// Builds programs, compiles them and assembles nodes and network for one
/// run of `spec` at sweep value `value`.
pub fn build_run(spec: &ScenarioSpec, value: f64, seed: u64) -> Result<RunSetup, ExperimentError> {
    spec.validate()?;
    let hw = apply_sweep(spec, value)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let timing = hw.timing;
    let server = NodeId::from("server");
    let mut instances = Vec::new();
    let mut local = None;
    let apps: Vec<AppId> = (1..=spec.c as AppId).collect();

    if spec.kind.has_local() {
        let (prog, checks) = if spec.kind == ScenarioKind::BlockScen1 {
            build_scenario1_local(hw.local_iterations, hw.local_gates, hw.local_gate)
        } else {
            build_scenario2_local(hw.local_iterations, hw.local_gates)
        };
        let prog = compile(&prog, &spec.pipelines.local, &timing)?;
        local = Some(instances.len());
        instances.push(InstanceSpec::new(prog, None).with_checks(checks));
    }
    let expected = hw.link.expected_epr_ns()?;
    for &app in &apps {
        let client = NodeId::new(if spec.kind.single_app() { "client".to_string() } else { format!("client{app}") });
        let pipeline = if app == 1 { spec.pipelines.c1() } else { &spec.pipelines.server };
        let (client_prog, server_prog, client_checks, server_checks) = if spec.kind == ScenarioKind::Rotation {
            let init = *InitState::ALL.choose(&mut rng).expect("non-empty");
            let a = build_rotation_app(spec.n, false, init, &client, &server, &mut rng);
            (a.client, a.server, vec![], a.checks)
        } else {
            let a = build_bqc_app(spec.n, false, &client, &server, &mut rng);
            (a.client, a.server, a.checks, vec![])
        };
        let mut server_prog = compile(&server_prog, pipeline, &timing)?;
        if spec.kind == ScenarioKind::CriticalLargeBlocks {
            let (lo, hi) = hw.pad_range;
            server_prog = pad_ql_blocks(&server_prog, lo, hi, expected, &timing, &mut rng).0;
        }
        server_prog.name = format!("{}_{app}", server_prog.name);
        let mut client_prog = client_prog;
        client_prog.name = format!("{}_{app}", client_prog.name);
        instances.push(InstanceSpec::new(client_prog, Some(app)).with_checks(client_checks));
        instances.push(InstanceSpec::new(server_prog, Some(app)).with_checks(server_checks));
    }

    let mut nodes: Vec<NodeConfig> = Vec::new();
    for inst in &instances {
        let id = &inst.program.node;
        let need = inst.program.max_live_qubits();
        match nodes.iter_mut().find(|n| &n.id == id) {
            Some(n) => n.num_qubits += need,
            None => nodes.push(NodeConfig { id: id.clone(), num_qubits: need, timing, noise: hw.noise }),
        }
    }
    let latency_ns = hw.latency_ns.unwrap_or_else(|| classical_latency_ns(hw.link.distance_km, hw.hops));
    let schedule = build_schedule(&apps, 1, hw.bin_multiple * expected, &mut rng)?;
    let net = NetworkConfig { link: hw.link, schedule, latency_ns };
    Ok(RunSetup { nodes, instances, net, local, apps })
}

impl RunSetup {
    pub fn simulate(&self, seed: u64, record_trace: bool) -> Result<Trace, ExperimentError> {
        let opts = SimOptions { seed, record_trace, ..SimOptions::default() };
        Ok(run_simulation(&self.nodes, &self.instances, &self.net, &opts)?)
    }

    fn app_success(&self, trace: &Trace, app: AppId) -> Option<f64> {
        let flags: Vec<bool> =
            trace.instances.iter().filter(|r| r.app == Some(app)).filter_map(|r| r.success).collect();
        (!flags.is_empty()).then(|| f64::from(u8::from(flags.iter().all(|&s| s))))
    }

    /// (execution time, success) per role of `spec.roles()`.
    fn metrics(&self, spec: &ScenarioSpec, trace: &Trace) -> Vec<(f64, Option<f64>)> {
        let group = |apps: &[AppId]| -> (f64, Option<f64>) {
            let exec: f64 =
                apps.iter().map(|&a| trace.app_exec_time_ns(a).unwrap_or(0) as f64).sum::<f64>() / apps.len() as f64;
            let succ: Vec<f64> = apps.iter().filter_map(|&a| self.app_success(trace, a)).collect();
            let succ = (!succ.is_empty()).then(|| succ.iter().sum::<f64>() / succ.len() as f64);
            (exec, succ)
        };
        spec.roles()
            .iter()
            .map(|(role, _)| match *role {
                "app" | "bqc" => group(&self.apps),
                "c1" => group(&self.apps[..1]),
                "others" => group(&self.apps[1..]),
                "local" => {
                    let r = &trace.instances[self.local.expect("scenario has a local program")];
                    (r.exec_time_ns() as f64, r.success.map(|s| f64::from(u8::from(s))))
                }
                _ => unreachable!(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoleStats {
    pub role: String,
    pub strategy: String,
    pub mean_exec_ns: f64,
    pub se_exec_ns: f64,
    pub mean_success: Option<f64>,
    pub se_success: Option<f64>,
    /// Per-seed means, in seed order.
    pub seed_exec: Vec<f64>,
    pub seed_success: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub roles: Vec<RoleStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub scenario: ScenarioKind,
    pub sweep: SweepParam,
    pub n: usize,
    pub c: usize,
    pub seeds: usize,
    pub runs_per_seed: usize,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn role(&self, point: usize, role: &str) -> Option<&RoleStats> {
        self.points.get(point)?.roles.iter().find(|r| r.role == role)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every sweep value × seed × run, in parallel. Run `r` of seed `s`
/// uses `derive_seed(s, r)` for both program construction and simulation,
/// so the same runs are paired across compilation choices and sweep values.
pub fn run_sweep(spec: &ScenarioSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let roles = spec.roles();
    let jobs: Vec<(usize, usize, usize)> = (0..spec.values.len())
        .flat_map(|v| (0..spec.seeds.len()).flat_map(move |s| (0..spec.runs_per_seed).map(move |r| (v, s, r))))
        .collect();
    let results: Vec<Vec<(f64, Option<f64>)>> = jobs
        .par_iter()
        .map(|&(v, s, r)| {
            let value = spec.values[v];
            let seed = derive_seed(spec.seeds[s], r as u64);
            let annotate =
                |e: ExperimentError| ExperimentError::Run { value, seed: spec.seeds[s], run: r, source: Box::new(e) };
            let setup = build_run(spec, value, seed).map_err(annotate)?;
            let trace = setup.simulate(derive_seed(seed, 1), false).map_err(annotate)?;
            Ok(setup.metrics(spec, &trace))
        })
        .collect::<Result<_, ExperimentError>>()?;

    let per_point = spec.seeds.len() * spec.runs_per_seed;
    let mut points = Vec::with_capacity(spec.values.len());
    for (v, &value) in spec.values.iter().enumerate() {
        let chunk = &results[v * per_point..(v + 1) * per_point];
        let mut stats = Vec::new();
        for (k, (role, strategy)) in roles.iter().enumerate() {
            let mut seed_exec = Vec::new();
            let mut seed_success = Vec::new();
            for s in 0..spec.seeds.len() {
                let runs = &chunk[s * spec.runs_per_seed..(s + 1) * spec.runs_per_seed];
                seed_exec.push(runs.iter().map(|m| m[k].0).sum::<f64>() / runs.len() as f64);
                let succ: Vec<f64> = runs.iter().filter_map(|m| m[k].1).collect();
                if !succ.is_empty() {
                    seed_success.push(succ.iter().sum::<f64>() / succ.len() as f64);
                }
            }
            let (mean_exec_ns, se_exec_ns) = mean_se(&seed_exec);
            let (ms, ses) = if seed_success.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_se(&seed_success);
                (Some(m), Some(s))
            };
            stats.push(RoleStats {
                role: role.to_string(),
                strategy: strategy.clone(),
                mean_exec_ns,
                se_exec_ns,
                mean_success: ms,
                se_success: ses,
                seed_exec,
                seed_success,
            });
        }
        points.push(SweepPoint { value, roles: stats });
    }
    Ok(SweepResult {
        scenario: spec.kind,
        sweep: spec.sweep,
        n: spec.n,
        c: spec.c,
        seeds: spec.seeds.len(),
        runs_per_seed: spec.runs_per_seed,
        points,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointDelta {
    pub value: f64,
    /// Treatment minus baseline success probability.
    pub success_delta: Option<f64>,
    pub success_se: Option<f64>,
    /// (treatment − baseline) / baseline execution time.
    pub exec_rel: f64,
    pub exec_delta_ns: f64,
    pub exec_se_ns: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub role: String,
    pub points: Vec<PointDelta>,
    /// Mean over points of the relative success change.
    pub aggregate_success_rel: Option<f64>,
    /// Mean over points of `exec_rel`.
    pub aggregate_exec_rel: f64,
}

/// Per-point differences between `treat` and `base` for `role`.
pub fn success_improvement(treat: &SweepResult, base: &SweepResult, role: &str) -> Result<Comparison, ExperimentError> {
    let same_grid = treat.points.len() == base.points.len()
        && treat.points.iter().zip(&base.points).all(|(a, b)| a.value == b.value);
    if !same_grid {
        return Err(ExperimentError::GridMismatch);
    }
    let mut points = Vec::new();
    let mut succ_rel = Vec::new();
    for (i, (a, b)) in treat.points.iter().zip(&base.points).enumerate() {
        let (Some(ra), Some(rb)) = (treat.role(i, role), base.role(i, role)) else {
            return Err(ExperimentError::GridMismatch);
        };
        let (success_delta, success_se) = match (ra.mean_success, rb.mean_success) {
            (Some(x), Some(y)) => {
                if y > 0.0 {
                    succ_rel.push((x - y) / y);
                }
                let se = ra.se_success.unwrap_or(0.0).hypot(rb.se_success.unwrap_or(0.0));
                (Some(x - y), Some(se))
            }
            _ => (None, None),
        };
        debug_assert_eq!(a.value, b.value);
        points.push(PointDelta {
            value: a.value,
            success_delta,
            success_se,
            exec_rel: (ra.mean_exec_ns - rb.mean_exec_ns) / rb.mean_exec_ns,
            exec_delta_ns: ra.mean_exec_ns - rb.mean_exec_ns,
            exec_se_ns: ra.se_exec_ns.hypot(rb.se_exec_ns),
        });
    }
    let aggregate_exec_rel = points.iter().map(|p| p.exec_rel).sum::<f64>() / points.len() as f64;
    let aggregate_success_rel = (!succ_rel.is_empty()).then(|| succ_rel.iter().sum::<f64>() / succ_rel.len() as f64);
    Ok(Comparison { role: role.to_string(), points, aggregate_success_rel, aggregate_exec_rel })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    sweep_param: &'a str,
    sweep_value: f64,
    n: usize,
    c: usize,
    program_role: &'a str,
    strategy: &'a str,
    mean_exec_time_ns: f64,
    stderr_exec_time_ns: f64,
    mean_success_prob: Option<f64>,
    stderr_success_prob: Option<f64>,
    seeds: usize,
    runs_per_seed: usize,
}

pub fn write_csv<W: std::io::Write>(results: &[SweepResult], w: W) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    for res in results {
        for p in &res.points {
            for r in &p.roles {
                out.serialize(CsvRow {
                    scenario: res.scenario.name(),
                    sweep_param: res.sweep.name(),
                    sweep_value: p.value,
                    n: res.n,
                    c: res.c,
                    program_role: &r.role,
                    strategy: &r.strategy,
                    mean_exec_time_ns: r.mean_exec_ns,
                    stderr_exec_time_ns: r.se_exec_ns,
                    mean_success_prob: r.mean_success,
                    stderr_success_prob: r.se_success,
                    seeds: res.seeds,
                    runs_per_seed: res.runs_per_seed,
                })?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ScenarioKind, treatment: bool) -> ScenarioSpec {
        let mut s = ScenarioSpec::paper(kind, 3, if kind.single_app() { 1 } else { 2 }, treatment);
        s.values.truncate(2);
        s.seeds.truncate(2);
        s.runs_per_seed = 3;
        s
    }

    #[test]
    fn every_scenario_runs() {
        for kind in ScenarioKind::ALL {
            for t in [false, true] {
                let res = run_sweep(&small(kind, t)).unwrap_or_else(|e| panic!("{kind} {t}: {e}"));
                for p in &res.points {
                    for r in &p.roles {
                        assert!(r.mean_exec_ns > 0.0, "{kind} {}", r.role);
                        if let Some(s) = r.mean_success {
                            assert!((0.0..=1.0).contains(&s));
                        }
                        assert!(r.se_exec_ns >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn sweep_is_reproducible() {
        let s = small(ScenarioKind::BlockScen1, true);
        assert_eq!(run_sweep(&s).unwrap(), run_sweep(&s).unwrap());
    }

    #[test]
    fn identical_inputs_compare_to_zero() {
        let s = small(ScenarioKind::Deadline, false);
        let r = run_sweep(&s).unwrap();
        let c = success_improvement(&r, &r, "c1").unwrap();
        assert!(c.points.iter().all(|p| p.exec_rel == 0.0 && p.success_delta == Some(0.0)));
        let mut other = s.clone();
        other.values = vec![7.0, 8.0];
        assert!(success_improvement(&run_sweep(&other).unwrap(), &r, "c1").is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let r = run_sweep(&small(ScenarioKind::Rotation, true)).unwrap();
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scenario,sweep_param,sweep_value,n,c,program_role,strategy,mean_exec_time_ns,stderr_exec_time_ns,\
             mean_success_prob,stderr_success_prob,seeds,runs_per_seed"
        );
        assert_eq!(lines.count(), 2);
    }
}

use proptest::prelude::*;

use qoalac::compiler::parse_pipeline;
use qoalac::experiments::{build_run, ScenarioKind, ScenarioSpec};
use qoalac::runtime::check::check_all;

const SERVER_PIPES: &[&str] = &[
    "none",
    "hybrid",
    "hybrid+block-selfish",
    "hybrid+block-coop:1",
    "block-coop:2",
    "hybrid+block-selfish+deadline-coop:100",
    "hybrid+block-selfish+deadline-selfish",
    "hybrid+block-selfish+critical",
    "block-coop:1+critical",
];

#[derive(Clone, Debug)]
struct Case {
    kind: ScenarioKind,
    n: usize,
    c: usize,
    bin: f64,
    latency_us: Option<u64>,
    server: usize,
    c1: usize,
    coop_local: bool,
    iterations: usize,
    seed: u64,
}

fn case() -> impl Strategy<Value = Case> {
    (
        prop::sample::select(ScenarioKind::ALL.to_vec()),
        1usize..=4,
        1usize..=3,
        0.3..4.0f64,
        prop::option::of(1u64..3000),
        0..SERVER_PIPES.len(),
        0..SERVER_PIPES.len(),
        any::<bool>(),
        2usize..=30,
        any::<u64>(),
    )
        .prop_map(|(kind, n, c, bin, latency_us, server, c1, coop_local, iterations, seed)| Case {
            kind,
            n,
            c: if matches!(kind, ScenarioKind::Rotation | ScenarioKind::Bqc) { 1 } else { c },
            bin,
            latency_us,
            server,
            c1,
            coop_local,
            iterations,
            seed,
        })
}

fn spec(c: &Case) -> ScenarioSpec {
    let mut s = ScenarioSpec::paper(c.kind, c.n, c.c, false);
    s.values = vec![c.bin];
    s.sweep = qoalac::experiments::SweepParam::BinMultiple;
    s.hw.latency_ns = c.latency_us.map(|u| u * 1000);
    s.hw.local_iterations = c.iterations;
    // Rotation servers never entangle, so they have no critical section.
    let pick = |k: usize| {
        let p = SERVER_PIPES[k];
        parse_pipeline(if c.kind == ScenarioKind::Rotation && p.contains("critical") { "hybrid" } else { p }).unwrap()
    };
    s.pipelines.server = pick(c.server);
    s.pipelines.c1 = Some(pick(c.c1));
    s.pipelines.local = parse_pipeline(if c.coop_local { "block-coop:8" } else { "none" }).unwrap();
    s
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn random_runs_satisfy_every_invariant(c in case()) {
        let s = spec(&c);
        let setup = build_run(&s, c.bin, c.seed).unwrap();
        let trace = setup.simulate(c.seed ^ 1, true).unwrap();
        let violations = check_all(&trace, &setup.instances, &setup.net.schedule);
        prop_assert!(violations.is_empty(), "{c:?}: {:#?}", &violations[..violations.len().min(5)]);
        for r in &trace.instances {
            prop_assert!(r.last_end_ns >= r.first_start_ns);
        }
        let blocks: usize = setup.instances.iter().map(|i| i.program.blocks.len()).sum();
        let ends = trace.events.iter().filter(|e| e.kind == qoalac::runtime::EventKind::End).count();
        prop_assert_eq!(ends, blocks);
    }

    #[test]
    fn traces_are_byte_identical_per_seed(c in case()) {
        let s = spec(&c);
        let a = build_run(&s, c.bin, c.seed).unwrap().simulate(c.seed, true).unwrap();
        let b = build_run(&s, c.bin, c.seed).unwrap().simulate(c.seed, true).unwrap();
        prop_assert_eq!(a.to_jsonl(), b.to_jsonl());
        prop_assert_eq!(a.instances, b.instances);
    }
}

#[test]
fn different_seeds_give_different_traces() {
    let s = ScenarioSpec::paper(ScenarioKind::Bqc, 2, 1, false);
    let run = |seed| build_run(&s, 1.0, seed).unwrap().simulate(seed, true).unwrap().to_jsonl();
    assert_ne!(run(1), run(2));
}

#[test]
fn checker_catches_overlap() {
    let s = ScenarioSpec::paper(ScenarioKind::Critical, 2, 2, true);
    let setup = build_run(&s, 1.0, 5).unwrap();
    let mut trace = setup.simulate(5, true).unwrap();
    assert!(check_all(&trace, &setup.instances, &setup.net.schedule).is_empty());
    // Shift one end event so two blocks overlap on a processor.
    let i = trace.events.iter().position(|e| e.kind == qoalac::runtime::EventKind::End).unwrap();
    trace.events[i].t += 1_000_000_000;
    trace.events.sort_by_key(|e| e.t);
    assert!(!check_all(&trace, &setup.instances, &setup.net.schedule).is_empty());
}

mod common;

use common::{distance, enumerate_outcomes, paper_programs, semantic_preservation};

#[test]
fn every_strategy_preserves_outcome_distributions() {
    let (worst, at, count) = semantic_preservation();
    assert!(count > 400);
    assert!(worst < 1e-9, "{worst} at {at}");
}

#[test]
fn reference_interpreter_sees_the_expected_outcomes() {
    for (label, progs) in paper_programs() {
        let out = enumerate_outcomes(&progs);
        if label.starts_with("rotation") || label.starts_with("local") {
            // Ideal runs of these applications are deterministic.
            assert_eq!(out.len(), 1, "{label}: {out:?}");
            let (key, p) = out.iter().next().unwrap();
            assert!((p - 1.0).abs() < 1e-9);
            assert!(key.iter().all(|(_, b)| *b == 0) || label.starts_with("rotation"), "{label}");
        }
    }
}

#[test]
fn a_broken_compilation_is_detected() {
    let (_, progs) =
        paper_programs().into_iter().find(|(l, _)| l.starts_with("rotation n=2") && l.contains('z')).unwrap();
    let mut bad = progs.clone();
    // Drop the first of the two rotations, which sum to a full turn.
    let server = &mut bad[1];
    let b = server.blocks.iter().position(|b| b.instrs.iter().any(|i| i.is_gate())).unwrap();
    server.blocks.remove(b);
    let d = distance(&enumerate_outcomes(&progs), &enumerate_outcomes(&bad));
    assert!(d > 0.01, "{d}");
}

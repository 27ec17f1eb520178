use std::process::Command;

use qoalac::ir::{parse_programs, validate};

const SERVER: &str = "PROGRAM s node=server
BLOCK 1 QL
 QALLOC q0 +z
BLOCK 2 CC
 RECV client t1
BLOCK 3 QL
 GATE RX q0 t1
BLOCK 4 CC
 RECV client t2
BLOCK 5 QL
 GATE RX q0 t2
 MEASURE q0 Z m
";

fn qoalac() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qoalac"))
}

#[test]
fn compile_writes_a_valid_program() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("s.qoala");
    let dst = dir.path().join("out.qoala");
    std::fs::write(&src, SERVER).unwrap();
    let st = qoalac()
        .args(["compile", "--strategy", "hybrid+block-coop:1", "--in"])
        .arg(&src)
        .arg("--out")
        .arg(&dst)
        .status()
        .unwrap();
    assert!(st.success());
    let progs = parse_programs(&std::fs::read_to_string(&dst).unwrap()).unwrap();
    assert_eq!(progs.len(), 1);
    assert!(validate(&progs[0]).is_ok());
    assert_eq!(progs[0].blocks[0].btype.to_string(), "CC");
}

#[test]
fn simulate_writes_csv_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let trace = dir.path().join("t.jsonl");
    let st = qoalac()
        .args(["simulate", "--scenario", "critical", "--n", "2", "--c", "2", "--values", "1,2", "--seeds", "2"])
        .args(["--runs", "3", "--out"])
        .arg(&csv)
        .arg("--trace-out")
        .arg(&trace)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("scenario,sweep_param,sweep_value"));
    // two points, three roles each
    assert_eq!(lines.count(), 6);
    let events = std::fs::read_to_string(&trace).unwrap();
    assert!(events.lines().count() > 10);
    for l in events.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert!(v.get("t").is_some());
    }
}

#[test]
fn formulas_check_and_bad_input_exit_codes() {
    assert_eq!(qoalac().args(["formulas", "--check"]).output().unwrap().status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qoala");
    std::fs::write(&bad, "PROGRAM x node=a\nBLOCK 1 QL\n GATE H q0\n").unwrap();
    let code = qoalac().args(["compile", "--strategy", "hybrid", "--in"]).arg(&bad).output().unwrap().status.code();
    assert_eq!(code, Some(2));
}

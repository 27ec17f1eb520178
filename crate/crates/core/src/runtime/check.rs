//! Trace invariant checks. Each returns human-readable violations; an empty
//! list means the trace is consistent.

use std::collections::BTreeMap;

use super::trace::{EventKind, Proc, Trace};
use super::InstanceSpec;
use crate::network::NetworkSchedule;

pub fn check_all(trace: &Trace, instances: &[InstanceSpec], schedule: &NetworkSchedule) -> Vec<String> {
    let mut v = time_ordered(trace);
    v.extend(processors(trace, instances));
    v.extend(precedence(trace, instances));
    v.extend(bin_discipline(trace, instances, schedule));
    v.extend(critical_sections(trace, instances));
    v
}

pub fn time_ordered(trace: &Trace) -> Vec<String> {
    trace
        .events
        .windows(2)
        .filter(|w| w[1].t < w[0].t)
        .map(|w| format!("event at {} listed after event at {}", w[1].t, w[0].t))
        .collect()
}

/// Block types run on the right processor, every start is closed by an end
/// or yield of the same block, and busy intervals on a processor are
/// disjoint (which is also non-preemption).
pub fn processors(trace: &Trace, instances: &[InstanceSpec]) -> Vec<String> {
    let mut v = Vec::new();
    let mut open: BTreeMap<(usize, Proc), (usize, u32, u64)> = BTreeMap::new();
    for e in &trace.events {
        let closing = match e.kind {
            EventKind::Start => false,
            EventKind::End | EventKind::Yield => true,
            _ => continue,
        };
        let prog = &instances[e.instance].program;
        let Some(block) = prog.block(crate::ir::BlockId(e.block)) else {
            v.push(format!("unknown block {} of instance {}", e.block, e.instance));
            continue;
        };
        let want = if block.btype.is_quantum() { Proc::Qps } else { Proc::Cps };
        if e.proc != want {
            v.push(format!("{} block {} of instance {} ran on {:?}", block.btype, e.block, e.instance, e.proc));
        }
        let key = (e.node, e.proc);
        if closing {
            match open.remove(&key) {
                Some((i, b, _)) if i == e.instance && b == e.block => {}
                other => v.push(format!(
                    "end of instance {} block {} at {} does not close the running block {other:?}",
                    e.instance, e.block, e.t
                )),
            }
        } else if let Some((i, b, s)) = open.insert(key, (e.instance, e.block, e.t)) {
            v.push(format!(
                "instance {} block {} started at {} on node {} {:?} while instance {i} block {b} (since {s}) runs",
                e.instance, e.block, e.t, e.node, e.proc
            ));
        }
    }
    for ((node, proc), (i, b, s)) in open {
        v.push(format!("instance {i} block {b} started at {s} on node {node} {proc:?} never ended"));
    }
    v
}

fn final_ends(trace: &Trace) -> BTreeMap<(usize, u32), u64> {
    trace.events.iter().filter(|e| e.kind == EventKind::End).map(|e| ((e.instance, e.block), e.t)).collect()
}

pub fn precedence(trace: &Trace, instances: &[InstanceSpec]) -> Vec<String> {
    let ends = final_ends(trace);
    let mut v = Vec::new();
    for e in trace.events.iter().filter(|e| e.kind == EventKind::Start) {
        let prog = &instances[e.instance].program;
        let Some(idx) = prog.index_of(crate::ir::BlockId(e.block)) else {
            continue;
        };
        for p in &prog.predecessor_indices()[idx] {
            let pid = prog.blocks[*p].id.0;
            match ends.get(&(e.instance, pid)) {
                Some(&end) if end <= e.t => {}
                other => v.push(format!(
                    "instance {} block {} starts at {} but predecessor {pid} ends at {other:?}",
                    e.instance, e.block, e.t
                )),
            }
        }
    }
    v
}

pub fn bin_discipline(trace: &Trace, instances: &[InstanceSpec], schedule: &NetworkSchedule) -> Vec<String> {
    let mut v = Vec::new();
    for e in &trace.events {
        let EventKind::EprAttempt { until, .. } = e.kind else {
            continue;
        };
        let app = instances[e.instance].app;
        let owner = schedule.owner_at(e.t);
        if app != Some(owner) || until > schedule.bin_end(e.t) {
            v.push(format!(
                "instance {} (app {app:?}) attempts in [{}, {until}] but bin belongs to app {owner} and ends at {}",
                e.instance,
                e.t,
                schedule.bin_end(e.t)
            ));
        }
    }
    v
}

/// After the first start of a section's first block and before the end of
/// its last block, the node starts no block of another instance.
pub fn critical_sections(trace: &Trace, instances: &[InstanceSpec]) -> Vec<String> {
    let ends = final_ends(trace);
    let mut v = Vec::new();
    for (i, spec) in instances.iter().enumerate() {
        for s in &spec.program.critical_sections {
            let begin =
                trace.events.iter().position(|e| e.instance == i && e.block == s.first.0 && e.kind == EventKind::Start);
            let (Some(begin), Some(&end)) = (begin, ends.get(&(i, s.last.0))) else {
                continue;
            };
            let first = &trace.events[begin];
            // Events are in dispatch order, so a block dispatched at the same
            // instant but listed before the section start is not inside it.
            for e in &trace.events[begin + 1..] {
                if e.node == first.node && e.instance != i && e.kind == EventKind::Start && e.t < end {
                    v.push(format!(
                        "instance {} block {} starts at {} inside the critical section of instance {i} [{}, {end}]",
                        e.instance, e.block, e.t, first.t
                    ));
                }
            }
        }
    }
    v
}

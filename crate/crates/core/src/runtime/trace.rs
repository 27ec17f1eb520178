use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::network::AppId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Proc {
    #[serde(rename = "CPS")]
    Cps,
    #[serde(rename = "QPS")]
    Qps,
}

/// What happened. A QC block that runs out of bin time without getting its
/// pairs emits `Yield` instead of `End` and is dispatched again later.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Start,
    End,
    Yield,
    EprAttempt { until: u64, attempts: u64, success: bool },
    MsgSend { to: usize, arrival: u64 },
    MsgRecv { from: usize },
}

/// One line of the JSON-lines trace:
///
/// ```text
/// {"t":60,"node":0,"proc":"QPS","instance":2,"block":1,"kind":"start"}
/// {"t":200060,"node":0,"proc":"QPS","instance":2,"block":1,"kind":"epr_attempt","until":400060,"attempts":1,"success":true}
/// ```
///
/// `node` and `instance` index the node list and instance list passed to
/// the simulation; `block` is the block id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t: u64,
    pub node: usize,
    pub proc: Proc,
    pub instance: usize,
    pub block: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub name: String,
    pub node: String,
    pub app: Option<AppId>,
    pub first_start_ns: u64,
    pub last_end_ns: u64,
    /// `None` when the instance carries no outcome checks.
    pub success: Option<bool>,
}

impl InstanceReport {
    pub fn exec_time_ns(&self) -> u64 {
        self.last_end_ns - self.first_start_ns
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
    pub instances: Vec<InstanceReport>,
}

impl Trace {
    /// Span from the earliest first start to the latest last end over the
    /// instances of `app`.
    pub fn app_exec_time_ns(&self, app: AppId) -> Option<u64> {
        let mine = self.instances.iter().filter(|r| r.app == Some(app));
        let start = mine.clone().map(|r| r.first_start_ns).min()?;
        let end = mine.map(|r| r.last_end_ns).max()?;
        Some(end - start)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_shape() {
        let t = Trace {
            events: vec![TraceEvent {
                t: 5,
                node: 0,
                proc: Proc::Qps,
                instance: 1,
                block: 3,
                kind: EventKind::EprAttempt { until: 9, attempts: 2, success: false },
            }],
            instances: vec![],
        };
        let line = t.to_jsonl();
        assert_eq!(
            line,
            "{\"t\":5,\"node\":0,\"proc\":\"QPS\",\"instance\":1,\"block\":3,\"kind\":\"epr_attempt\",\"until\":9,\"attempts\":2,\"success\":false}\n"
        );
        let back: TraceEvent = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, t.events[0]);
    }
}

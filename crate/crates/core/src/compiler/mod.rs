//! Program-to-program passes: hybrid optimization, block, deadline and
//! critical-section compilation.

mod blocks;
mod deadlines;
mod reorder;
mod rotations;

use std::fmt;
use std::str::FromStr;

pub use blocks::{block_cooperative, block_selfish};
pub use deadlines::{add_critical_section, assign_deadlines, DeadlinePolicy};
pub use reorder::reorder_blocks;
pub use rotations::merge_rotations;

use crate::ir::Program;
use crate::timing::TimingParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    HybridOptimize,
    BlockSelfish,
    BlockCooperative(u32),
    DeadlineFree,
    DeadlineSelfish,
    DeadlineCooperative(u32),
    CriticalSection,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassConfig {
    pub strategy: Strategy,
    pub timing: TimingParams,
}

/// Reorder, fuse rotations, then merge the QL blocks the first two steps
/// brought next to each other. Repeated until nothing changes, since a
/// merge can open up a further deferral.
pub fn hybrid_optimize(p: &Program) -> Program {
    let mut cur = p.clone();
    for _ in 0..MAX_HYBRID_ROUNDS {
        let next = hybrid_round(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

const MAX_HYBRID_ROUNDS: usize = 32;

fn hybrid_round(p: &Program) -> Program {
    let (r, marks) = reorder::reorder_marked(p);
    let (m, marks) = rotations::merge_marked(&r, &marks);
    blocks::coalesce_marked(&m, &marks)
}

pub fn apply(p: &Program, cfg: &PassConfig) -> Result<Program, CompileError> {
    match cfg.strategy {
        Strategy::HybridOptimize => Ok(hybrid_optimize(p)),
        Strategy::BlockSelfish => Ok(block_selfish(p)),
        Strategy::BlockCooperative(n) => block_cooperative(p, n),
        Strategy::DeadlineFree => assign_deadlines(p, DeadlinePolicy::Free, &cfg.timing),
        Strategy::DeadlineSelfish => assign_deadlines(p, DeadlinePolicy::Selfish, &cfg.timing),
        Strategy::DeadlineCooperative(m) => assign_deadlines(p, DeadlinePolicy::Cooperative(m), &cfg.timing),
        Strategy::CriticalSection => add_critical_section(p),
    }
}

/// Applies `pipeline` left to right.
pub fn compile(p: &Program, pipeline: &[Strategy], timing: &TimingParams) -> Result<Program, CompileError> {
    let mut cur = p.clone();
    for &strategy in pipeline {
        cur = apply(&cur, &PassConfig { strategy, timing: *timing })?;
    }
    Ok(cur)
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::HybridOptimize => f.write_str("hybrid"),
            Strategy::BlockSelfish => f.write_str("block-selfish"),
            Strategy::BlockCooperative(n) => write!(f, "block-coop:{n}"),
            Strategy::DeadlineFree => f.write_str("deadline-free"),
            Strategy::DeadlineSelfish => f.write_str("deadline-selfish"),
            Strategy::DeadlineCooperative(m) => write!(f, "deadline-coop:{m}"),
            Strategy::CriticalSection => f.write_str("critical"),
        }
    }
}

impl FromStr for Strategy {
    type Err = CompileError;

    /// Accepts the `Display` forms plus a few aliases
    /// (`selfish`, `coop:N`, `cooperative:N`, `critical-section`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.as_str(), None),
        };
        let num = |what: &str| -> Result<u32, CompileError> {
            let a = arg.ok_or_else(|| CompileError::Parameter(format!("{what} needs a parameter, e.g. {what}:8")))?;
            let v: u32 = a.parse().map_err(|_| CompileError::Parameter(format!("bad {what} parameter `{a}`")))?;
            if v == 0 {
                return Err(CompileError::Parameter(format!("{what} parameter must be at least 1")));
            }
            Ok(v)
        };
        Ok(match name {
            "hybrid" | "hybrid-optimize" => Strategy::HybridOptimize,
            "block-selfish" | "selfish" => Strategy::BlockSelfish,
            "block-coop" | "coop" | "cooperative" | "block-cooperative" => Strategy::BlockCooperative(num(name)?),
            "deadline-free" => Strategy::DeadlineFree,
            "deadline-selfish" => Strategy::DeadlineSelfish,
            "deadline-coop" | "deadline-cooperative" => Strategy::DeadlineCooperative(num(name)?),
            "critical" | "critical-section" => Strategy::CriticalSection,
            _ => return Err(CompileError::UnknownStrategy(s.clone())),
        })
    }
}

/// Parses `a+b+c` into a pipeline; `none` or the empty string is the empty
/// pipeline.
pub fn parse_pipeline(s: &str) -> Result<Vec<Strategy>, CompileError> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("none") || s.eq_ignore_ascii_case("baseline") {
        return Ok(Vec::new());
    }
    s.split('+').map(str::parse).collect()
}

pub fn pipeline_name(p: &[Strategy]) -> String {
    if p.is_empty() {
        "none".to_string()
    } else {
        p.iter().map(Strategy::to_string).collect::<Vec<_>>().join("+")
    }
}

/// A dispatchable block as seen by a node scheduler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub instance: usize,
    pub block_index: usize,
    /// Absolute deadline in ns, if the block has one.
    pub deadline: Option<u64>,
    pub ready_ns: u64,
}

impl Candidate {
    /// Deadline-bearing blocks first by deadline, then the rest; ties go to
    /// the earlier-ready block, then the lower instance id.
    fn key(&self) -> (bool, u64, u64, usize, usize) {
        (self.deadline.is_none(), self.deadline.unwrap_or(0), self.ready_ns, self.instance, self.block_index)
    }
}

pub fn edf_select(candidates: &[Candidate]) -> Option<Candidate> {
    candidates.iter().min_by_key(|c| c.key()).copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(instance: usize, deadline: Option<u64>, ready_ns: u64) -> Candidate {
        Candidate { instance, block_index: 0, deadline, ready_ns }
    }

    #[test]
    fn earliest_deadline_wins() {
        assert_eq!(edf_select(&[c(0, Some(105), 0), c(1, Some(103), 0)]).unwrap().instance, 1);
        assert_eq!(edf_select(&[]), None);
    }

    #[test]
    fn two_candidate_case_table() {
        // (a, b, expected winner) over every deadline presence combination
        let cases = [
            (c(0, Some(5), 2), c(1, None, 0), 0),
            (c(0, None, 0), c(1, Some(50), 9), 1),
            (c(0, None, 3), c(1, None, 2), 1),
            (c(0, None, 2), c(1, None, 2), 0),
            (c(0, Some(7), 4), c(1, Some(7), 1), 1),
            (c(0, Some(7), 1), c(1, Some(7), 1), 0),
            (c(0, Some(6), 9), c(1, Some(7), 0), 0),
        ];
        for (a, b, want) in cases {
            assert_eq!(edf_select(&[a, b]).unwrap().instance, want, "{a:?} vs {b:?}");
            assert_eq!(edf_select(&[b, a]).unwrap().instance, want, "order independent");
        }
    }
}

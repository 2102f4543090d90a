//! Explicit-state breadth-first reachability, the ground truth for
//! differential tests on small systems.

use std::collections::{HashMap, VecDeque};

use crate::aiger::{Step, TransitionSystem};
use crate::ic3::Trace;
use crate::logic::State;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_latches: usize,
    pub max_inputs: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_latches: 20, max_inputs: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    /// Number of reachable states.
    Safe(usize),
    /// A counterexample of minimal length.
    Unsafe(Trace),
    TooLarge,
}

fn unpack(bits: u64, len: usize) -> Vec<bool> {
    (0..len).map(|i| bits >> i & 1 == 1).collect()
}

fn pack(bits: &[bool]) -> u64 {
    bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | (b as u64) << i)
}

pub fn bfs_check(sys: &TransitionSystem, limits: OracleLimits) -> OracleResult {
    let (nl, ni) = (sys.num_latches(), sys.num_inputs());
    if nl > limits.max_latches || ni > limits.max_inputs || nl > 63 || ni > 63 {
        return OracleResult::TooLarge;
    }
    // state -> (parent, inputs taken from the parent)
    let mut parent: HashMap<u64, Option<(u64, u64)>> = HashMap::new();
    let mut queue = VecDeque::new();
    parent.insert(0, None);
    queue.push_back(0u64);

    while let Some(cur) = queue.pop_front() {
        let state = State::new(unpack(cur, nl));
        for inp in 0..1u64 << ni {
            let step = Step::new(unpack(inp, ni));
            if sys.eval_bad(&state, &step) {
                return OracleResult::Unsafe(trace_to(&parent, cur, step, nl, ni));
            }
            let next = pack(sys.simulate_step(&state, &step).bits());
            if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(next) {
                e.insert(Some((cur, inp)));
                queue.push_back(next);
            }
        }
    }
    OracleResult::Safe(parent.len())
}

fn trace_to(parent: &HashMap<u64, Option<(u64, u64)>>, end: u64, final_inputs: Step, nl: usize, ni: usize) -> Trace {
    let mut steps = Vec::new();
    let mut cur = end;
    while let Some((prev, inp)) = parent[&cur] {
        steps.push(Step::new(unpack(inp, ni)));
        cur = prev;
    }
    steps.reverse();
    Trace { init: State::zeros(nl), steps, final_inputs }
}

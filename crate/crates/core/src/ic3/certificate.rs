//! Independent checks of the engine's answers: inductive invariants are
//! re-proved with fresh solvers, counterexamples are replayed on the circuit.

use std::fmt;

use thiserror::Error;

use crate::aiger::{Step, TransitionSystem};
use crate::encoder::EncodedSystem;
use crate::logic::{Clause, State};
use crate::sat::{SatResult, Solver};

/// A counterexample: the initial state, one input vector per transition, and
/// the inputs under which the bad signal is raised in the last state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub init: State,
    pub steps: Vec<Step>,
    pub final_inputs: Step,
}

impl Trace {
    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Visited states, `len() + 1` of them.
    pub fn states(&self, sys: &TransitionSystem) -> Vec<State> {
        let mut out = vec![self.init.clone()];
        for step in &self.steps {
            let next = sys.simulate_step(out.last().unwrap(), step);
            out.push(next);
        }
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("trace does not start in the initial state")]
    NotInitial,
    #[error("trace input vector has {found} bits, expected {expected}")]
    Width { expected: usize, found: usize },
    #[error("bad signal is not raised at the end of the trace")]
    NotBad,
}

/// Simulates the trace and checks that it ends in a bad valuation.
pub fn replay(sys: &TransitionSystem, trace: &Trace) -> Result<(), ReplayError> {
    if trace.init.len() != sys.num_latches() || !trace.init.is_all_zero() {
        return Err(ReplayError::NotInitial);
    }
    for step in trace.steps.iter().chain(std::iter::once(&trace.final_inputs)) {
        if step.inputs.len() != sys.num_inputs() {
            return Err(ReplayError::Width { expected: sys.num_inputs(), found: step.inputs.len() });
        }
    }
    let mut s = trace.init.clone();
    for step in &trace.steps {
        s = sys.simulate_step(&s, step);
    }
    if sys.eval_bad(&s, &trace.final_inputs) {
        Ok(())
    } else {
        Err(ReplayError::NotBad)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantCheck {
    /// `I ⇒ φ`
    Initiation,
    /// `φ ∧ T ⇒ φ'`
    Consecution,
    /// `φ ⇒ P`
    Safety,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyFailure {
    pub check: InvariantCheck,
    pub clause: Option<Clause>,
    pub state: State,
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} check failed at state {:?}", self.check, self.state)?;
        if let Some(c) = &self.clause {
            write!(f, " for {c:?}")?;
        }
        Ok(())
    }
}

impl std::error::Error for VerifyFailure {}

/// Checks that `phi` (clauses over latch positions) is an inductive
/// invariant proving the property, using solvers that share nothing with the
/// engine.
pub fn verify_invariant(enc: &EncodedSystem, phi: &[Clause]) -> Result<(), VerifyFailure> {
    let fail = |check, clause: Option<&Clause>, model: &crate::sat::Model| VerifyFailure {
        check,
        clause: clause.cloned(),
        state: enc.latch_state(|v| model.value(v)),
    };

    let mut init = Solver::new(0);
    init.reserve_vars(enc.var_count);
    for c in &enc.init_clauses {
        init.add_clause(c);
    }
    for c in phi {
        let negated = enc.current_cube(&c.negate());
        if let SatResult::Sat(m) = init.solve(&negated) {
            return Err(fail(InvariantCheck::Initiation, Some(c), &m));
        }
    }

    let mut step = Solver::new(0);
    step.reserve_vars(enc.var_count);
    for c in &enc.trans_clauses {
        step.add_clause(c);
    }
    for c in phi {
        step.add_clause(&enc.current_cube(&c.negate()).iter().map(|&l| !l).collect::<Vec<_>>());
    }
    for c in phi {
        let primed = enc.prime_cube(&c.negate()).expect("clause over latches");
        if let SatResult::Sat(m) = step.solve(&primed) {
            return Err(fail(InvariantCheck::Consecution, Some(c), &m));
        }
    }
    if let SatResult::Sat(m) = step.solve(&[enc.bad]) {
        return Err(fail(InvariantCheck::Safety, None, &m));
    }
    Ok(())
}

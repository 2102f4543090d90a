//! CNF encoding of a transition system.
//!
//! Solver variables reuse the AIGER numbering for everything combinational:
//! variable 0 is the constant (fixed to false by a unit clause whenever it is
//! referenced), inputs, latches and gates keep their AIGER index. One
//! next-state variable per latch is appended after `max_var`.
//!
//! Gate clauses follow Plaisted-Greenbaum: a gate only gets the implication
//! directions demanded by the polarities in which it is reached from the
//! roots. Latch update functions are tied to their next-state variables by
//! full equivalences, so their cones are encoded in both polarities.

use std::fmt::Write as _;

use thiserror::Error;

use crate::aiger::{Step, TransitionSystem};
use crate::logic::{Cube, Lit, State, Var};

const POS: u8 = 1;
const NEG: u8 = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("variable {0} has no next-state image")]
    NoPrimeImage(u32),
}

#[derive(Debug, Clone)]
pub struct EncodedSystem {
    /// The circuit this encoding was built from.
    pub system: TransitionSystem,
    pub trans_clauses: Vec<Vec<Lit>>,
    pub init_clauses: Vec<Vec<Lit>>,
    pub bad: Lit,
    /// Current-state solver variable of each latch.
    pub latch_vars: Vec<Var>,
    /// Next-state solver variable of each latch.
    pub next_vars: Vec<Var>,
    pub input_vars: Vec<Var>,
    pub var_count: usize,
    first_next: u32,
}

/// Marks `lit` as required in the given usage polarity.
fn demand(flags: &mut [u8], lit: Lit, positive_use: bool) {
    let bit = if lit.is_negated() == positive_use { NEG } else { POS };
    flags[lit.var().index()] |= bit;
}

pub fn encode(sys: &TransitionSystem) -> EncodedSystem {
    let n = sys.max_var as usize + 1;
    let mut flags = vec![0u8; n];
    demand(&mut flags, sys.bad, true);
    for l in &sys.latches {
        demand(&mut flags, l.next, true);
        demand(&mut flags, l.next, false);
    }
    for g in sys.gates.iter().rev() {
        let f = flags[g.out.var().index()];
        for op in [g.a, g.b] {
            if f & POS != 0 {
                demand(&mut flags, op, true);
            }
            if f & NEG != 0 {
                demand(&mut flags, op, false);
            }
        }
    }

    let mut trans = Vec::new();
    if flags[0] != 0 {
        trans.push(vec![Var(0).neg()]);
    }
    for g in &sys.gates {
        let f = flags[g.out.var().index()];
        if f & POS != 0 {
            trans.push(vec![!g.out, g.a]);
            trans.push(vec![!g.out, g.b]);
        }
        if f & NEG != 0 {
            trans.push(vec![g.out, !g.a, !g.b]);
        }
    }
    let first_next = n as u32;
    let next_vars: Vec<Var> = (0..sys.latches.len()).map(|i| Var(first_next + i as u32)).collect();
    for (l, &nv) in sys.latches.iter().zip(&next_vars) {
        trans.push(vec![nv.neg(), l.next]);
        trans.push(vec![nv.pos(), !l.next]);
    }

    let latch_vars: Vec<Var> = sys.latches.iter().map(|l| l.lit.var()).collect();
    EncodedSystem {
        system: sys.clone(),
        trans_clauses: trans,
        init_clauses: latch_vars.iter().map(|v| vec![v.neg()]).collect(),
        bad: sys.bad,
        input_vars: sys.inputs.iter().map(|l| l.var()).collect(),
        var_count: n + sys.latches.len(),
        latch_vars,
        next_vars,
        first_next,
    }
}

impl EncodedSystem {
    pub fn num_latches(&self) -> usize {
        self.latch_vars.len()
    }

    /// Maps a cube over latch positions onto next-state solver literals.
    pub fn prime_cube(&self, c: &Cube) -> Result<Vec<Lit>, EncodeError> {
        c.iter()
            .map(|l| {
                self.next_vars
                    .get(l.var().index())
                    .map(|v| v.lit(l.is_negated()))
                    .ok_or(EncodeError::NoPrimeImage(l.var().0))
            })
            .collect()
    }

    /// Maps a latch-position literal onto its current-state solver literal.
    pub fn current_lit(&self, l: Lit) -> Lit {
        self.latch_vars[l.var().index()].lit(l.is_negated())
    }

    pub fn current_cube(&self, c: &Cube) -> Vec<Lit> {
        c.iter().map(|l| self.current_lit(l)).collect()
    }

    /// Inverse of priming: a next-state solver literal back to its latch
    /// position literal.
    pub fn unprime(&self, l: Lit) -> Option<Lit> {
        let v = l.var().0;
        if v >= self.first_next && ((v - self.first_next) as usize) < self.next_vars.len() {
            Some(Var(v - self.first_next).lit(l.is_negated()))
        } else {
            None
        }
    }

    pub fn latch_state(&self, value: impl Fn(Var) -> bool) -> State {
        State::new(self.latch_vars.iter().map(|&v| value(v)).collect())
    }

    pub fn next_state(&self, value: impl Fn(Var) -> bool) -> State {
        State::new(self.next_vars.iter().map(|&v| value(v)).collect())
    }

    pub fn input_step(&self, value: impl Fn(Var) -> bool) -> Step {
        Step::new(self.input_vars.iter().map(|&v| value(v)).collect())
    }

    /// DIMACS text of the transition clauses. Solver variable `v` is written
    /// as DIMACS variable `v + 1`.
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "c next-state variables start at {}", self.first_next + 1);
        let _ = writeln!(out, "p cnf {} {}", self.var_count, self.trans_clauses.len());
        for c in &self.trans_clauses {
            for l in c {
                let v = l.var().0 as i64 + 1;
                let _ = write!(out, "{} ", if l.is_negated() { -v } else { v });
            }
            out.push_str("0\n");
        }
        out
    }
}

//! ASCII AIGER front end.
//!
//! Supports the `aag` header `M I L O A` and the 1.9 extension `M I L O A B C
//! J F` as far as bad-state properties go. The tracked property is either one
//! of the `b` lines (when `B > 0`) or one of the outputs. All latches reset to
//! zero; other reset values are rejected.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::logic::{Lit, State, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Latch {
    pub lit: Lit,
    pub next: Lit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub out: Lit,
    pub a: Lit,
    pub b: Lit,
}

/// A parsed circuit: latches, inputs, topologically ordered AND gates and
/// the single tracked bad literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSystem {
    pub max_var: u32,
    pub inputs: Vec<Lit>,
    pub latches: Vec<Latch>,
    pub gates: Vec<Gate>,
    pub bad: Lit,
}

/// Input valuation for one time step, in input declaration order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Step {
    pub inputs: Vec<bool>,
}

impl Step {
    pub fn new(inputs: Vec<bool>) -> Step {
        Step { inputs }
    }

    pub fn zeros(len: usize) -> Step {
        Step { inputs: vec![false; len] }
    }
}

impl std::fmt::Debug for Step {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.inputs {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AigerErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("expected {expected} but found {found:?}")]
    Malformed { expected: &'static str, found: String },
    #[error("literal {lit} exceeds maximum {max}")]
    LiteralOutOfRange { lit: u64, max: u64 },
    #[error("cannot define literal {0}: must be a positive non-constant literal")]
    InvalidDefinition(u32),
    #[error("variable {0} defined more than once")]
    DuplicateDefinition(u32),
    #[error("variable {0} is used but never defined")]
    Undefined(u32),
    #[error("combinational cycle through variable {0}")]
    Cycle(u32),
    #[error("latch {lit} has reset value {reset}; only zero-initialized latches are supported")]
    UnsupportedReset { lit: u32, reset: u32 },
    #[error("missing property line {0}")]
    MissingProperty(usize),
    #[error("unexpected end of file")]
    UnexpectedEof,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct AigerError {
    pub line: usize,
    pub kind: AigerErrorKind,
}

fn err<T>(line: usize, kind: AigerErrorKind) -> Result<T, AigerError> {
    Err(AigerError { line, kind })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Def {
    Input,
    Latch,
    Gate(usize),
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_numbers(&mut self, expected: &'static str, count: std::ops::RangeInclusive<usize>) -> Result<(usize, Vec<u64>), AigerError> {
        let Some((idx, text)) = self.inner.next() else {
            return err(self.last + 1, AigerErrorKind::UnexpectedEof);
        };
        let line = idx + 1;
        self.last = line;
        let nums: Option<Vec<u64>> = text.split_whitespace().map(|t| t.parse().ok()).collect();
        match nums {
            Some(n) if count.contains(&n.len()) => Ok((line, n)),
            _ => err(line, AigerErrorKind::Malformed { expected, found: text.to_string() }),
        }
    }
}

/// Parses an ASCII AIGER file tracking property 0.
pub fn parse_aag(text: &str) -> Result<TransitionSystem, AigerError> {
    parse_aag_with_property(text, 0)
}

/// Parses an ASCII AIGER file tracking the `property`-th bad line (or output
/// when the file has no bad lines).
pub fn parse_aag_with_property(text: &str, property: usize) -> Result<TransitionSystem, AigerError> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let Some((_, header)) = lines.inner.next() else {
        return err(1, AigerErrorKind::MalformedHeader("empty file".into()));
    };
    lines.last = 1;
    let mut tokens = header.split_whitespace();
    match tokens.next() {
        Some("aag") => {}
        Some("aig") => {
            return err(1, AigerErrorKind::Unsupported("binary AIGER; convert with aigtoaig first".into()))
        }
        _ => return err(1, AigerErrorKind::MalformedHeader(header.to_string())),
    }
    let fields: Option<Vec<u64>> = tokens.map(|t| t.parse().ok()).collect();
    let fields = match fields {
        Some(f) if (5..=9).contains(&f.len()) => f,
        _ => return err(1, AigerErrorKind::MalformedHeader(header.to_string())),
    };
    let field = |i: usize| fields.get(i).copied().unwrap_or(0);
    let (m, ni, nl, no, na) = (field(0), field(1), field(2), field(3), field(4));
    let (nb, nc, nj, nf) = (field(5), field(6), field(7), field(8));
    if m > (u32::MAX as u64 - 1) / 2 {
        return err(1, AigerErrorKind::MalformedHeader("maximum variable index too large".into()));
    }
    if nc > 0 || nj > 0 || nf > 0 {
        return err(1, AigerErrorKind::Unsupported("constraint, justice and fairness sections".into()));
    }
    let max_lit = 2 * m + 1;
    let check = |line: usize, lit: u64| -> Result<Lit, AigerError> {
        if lit > max_lit {
            return err(line, AigerErrorKind::LiteralOutOfRange { lit, max: max_lit });
        }
        Ok(Lit::from_code(lit as u32))
    };

    let mut defs: HashMap<u32, Def> = HashMap::new();
    let mut define = |line: usize, lit: Lit, def: Def| -> Result<(), AigerError> {
        if lit.is_negated() || lit.var().0 == 0 {
            return err(line, AigerErrorKind::InvalidDefinition(lit.code()));
        }
        if defs.insert(lit.var().0, def).is_some() {
            return err(line, AigerErrorKind::DuplicateDefinition(lit.var().0));
        }
        Ok(())
    };

    let mut inputs = Vec::with_capacity(ni as usize);
    for _ in 0..ni {
        let (line, n) = lines.next_numbers("input literal", 1..=1)?;
        let lit = check(line, n[0])?;
        define(line, lit, Def::Input)?;
        inputs.push(lit);
    }

    let mut latches = Vec::with_capacity(nl as usize);
    for _ in 0..nl {
        let (line, n) = lines.next_numbers("latch definition", 2..=3)?;
        let lit = check(line, n[0])?;
        let next = check(line, n[1])?;
        if let Some(&reset) = n.get(2) {
            if reset != 0 {
                return err(line, AigerErrorKind::UnsupportedReset { lit: lit.code(), reset: reset as u32 });
            }
        }
        define(line, lit, Def::Latch)?;
        latches.push((line, Latch { lit, next }));
    }

    let mut outputs = Vec::with_capacity(no as usize);
    for _ in 0..no {
        let (line, n) = lines.next_numbers("output literal", 1..=1)?;
        outputs.push((line, check(line, n[0])?));
    }

    let mut bads = Vec::with_capacity(nb as usize);
    for _ in 0..nb {
        let (line, n) = lines.next_numbers("bad literal", 1..=1)?;
        bads.push((line, check(line, n[0])?));
    }

    let mut raw_gates = Vec::with_capacity(na as usize);
    for i in 0..na as usize {
        let (line, n) = lines.next_numbers("and gate", 3..=3)?;
        let out = check(line, n[0])?;
        let a = check(line, n[1])?;
        let b = check(line, n[2])?;
        define(line, out, Def::Gate(i))?;
        raw_gates.push((line, Gate { out, a, b }));
    }
    let header_line_count = lines.last;

    let (bad_line, bad) = if nb > 0 {
        match bads.get(property) {
            Some(&b) => b,
            None => return err(header_line_count, AigerErrorKind::MissingProperty(property)),
        }
    } else {
        match outputs.get(property) {
            Some(&o) => o,
            None => return err(header_line_count, AigerErrorKind::MissingProperty(property)),
        }
    };

    let defined = |line: usize, lit: Lit| -> Result<(), AigerError> {
        let v = lit.var().0;
        if v != 0 && !defs.contains_key(&v) {
            return err(line, AigerErrorKind::Undefined(v));
        }
        Ok(())
    };
    for &(line, l) in &latches {
        defined(line, l.next)?;
    }
    for &(line, g) in &raw_gates {
        defined(line, g.a)?;
        defined(line, g.b)?;
    }
    for &(line, o) in outputs.iter().chain(bads.iter()) {
        defined(line, o)?;
    }
    let _ = bad_line;

    let gates = topological_order(&raw_gates, &defs)?;
    Ok(TransitionSystem {
        max_var: m as u32,
        inputs,
        latches: latches.into_iter().map(|(_, l)| l).collect(),
        gates,
        bad,
    })
}

/// Orders gates so that every operand gate precedes its user.
fn topological_order(raw: &[(usize, Gate)], defs: &HashMap<u32, Def>) -> Result<Vec<Gate>, AigerError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; raw.len()];
    let mut order = Vec::with_capacity(raw.len());
    let gate_of = |lit: Lit| match defs.get(&lit.var().0) {
        Some(Def::Gate(i)) => Some(*i),
        _ => None,
    };
    for root in 0..raw.len() {
        if mark[root] != Mark::New {
            continue;
        }
        // explicit stack of (gate, operands expanded)
        let mut stack = vec![(root, false)];
        while let Some((g, expanded)) = stack.pop() {
            if expanded {
                mark[g] = Mark::Done;
                order.push(raw[g].1);
                continue;
            }
            match mark[g] {
                Mark::Done => continue,
                Mark::Active => return err(raw[g].0, AigerErrorKind::Cycle(raw[g].1.out.var().0)),
                Mark::New => {}
            }
            mark[g] = Mark::Active;
            stack.push((g, true));
            for op in [raw[g].1.a, raw[g].1.b] {
                if let Some(h) = gate_of(op) {
                    match mark[h] {
                        Mark::New => stack.push((h, false)),
                        Mark::Active => return err(raw[h].0, AigerErrorKind::Cycle(raw[h].1.out.var().0)),
                        Mark::Done => {}
                    }
                }
            }
        }
    }
    Ok(order)
}

impl TransitionSystem {
    pub fn num_latches(&self) -> usize {
        self.latches.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn initial_state(&self) -> State {
        State::zeros(self.latches.len())
    }

    /// Values of all variables (index = AIGER variable) under `(s, step)`.
    pub fn evaluate(&self, s: &State, step: &Step) -> Vec<bool> {
        debug_assert_eq!(s.len(), self.latches.len());
        debug_assert_eq!(step.inputs.len(), self.inputs.len());
        let mut vals = vec![false; self.max_var as usize + 1];
        for (i, l) in self.inputs.iter().enumerate() {
            vals[l.var().index()] = step.inputs[i];
        }
        for (i, l) in self.latches.iter().enumerate() {
            vals[l.lit.var().index()] = s.get(i);
        }
        for g in &self.gates {
            vals[g.out.var().index()] = lit_value(&vals, g.a) && lit_value(&vals, g.b);
        }
        vals
    }

    pub fn simulate_step(&self, s: &State, step: &Step) -> State {
        let vals = self.evaluate(s, step);
        State::new(self.latches.iter().map(|l| lit_value(&vals, l.next)).collect())
    }

    pub fn eval_bad(&self, s: &State, step: &Step) -> bool {
        lit_value(&self.evaluate(s, step), self.bad)
    }

    /// Serializes as AIGER 1.0 with the bad literal as the single output.
    pub fn to_aag(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "aag {} {} {} 1 {}",
            self.max_var,
            self.inputs.len(),
            self.latches.len(),
            self.gates.len()
        );
        for i in &self.inputs {
            let _ = writeln!(out, "{}", i.code());
        }
        for l in &self.latches {
            let _ = writeln!(out, "{} {}", l.lit.code(), l.next.code());
        }
        let _ = writeln!(out, "{}", self.bad.code());
        for g in &self.gates {
            let _ = writeln!(out, "{} {} {}", g.out.code(), g.a.code(), g.b.code());
        }
        out
    }

    /// Latch position of an AIGER variable, if it is a latch.
    pub fn latch_position(&self, v: Var) -> Option<usize> {
        self.latches.iter().position(|l| l.lit.var() == v)
    }
}

#[inline]
fn lit_value(vals: &[bool], l: Lit) -> bool {
    l.eval(vals[l.var().index()])
}

//! Literals, cubes, clauses and total states.
//!
//! Literals use the AIGER convention: variable `v` is encoded as `2v`
//! (positive) or `2v + 1` (negated). Cubes and clauses keep their literals
//! strictly sorted by code and carry a 64-bit signature with bit `v mod 64`
//! set for every variable they mention, so that subset tests can be rejected
//! early with a single mask operation.

use std::fmt;
use std::ops::Not;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn lit(self, negated: bool) -> Lit {
        Lit(self.0 * 2 + negated as u32)
    }

    #[inline]
    pub fn pos(self) -> Lit {
        self.lit(false)
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Lit {
        self.lit(true)
    }
}

/// A variable or its negation, stored as `2v + sign`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(pub u32);

impl Lit {
    #[inline]
    pub fn from_code(code: u32) -> Lit {
        Lit(code)
    }

    #[inline]
    pub fn code(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    #[inline]
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Value of this literal when its variable takes `value`.
    #[inline]
    pub fn eval(self, value: bool) -> bool {
        value != self.is_negated()
    }

    /// Negates the literal when `flip` is set.
    #[inline]
    pub fn xor(self, flip: bool) -> Lit {
        Lit(self.0 ^ flip as u32)
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_negated() {
            write!(f, "!x{}", self.var().0)
        } else {
            write!(f, "x{}", self.var().0)
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LogicError {
    #[error("variable {0} occurs in both polarities")]
    Inconsistent(u32),
}

/// OR of bit `v mod 64` over every variable occurring in `lits`.
pub fn signature<'a>(lits: impl IntoIterator<Item = &'a Lit>) -> u64 {
    lits.into_iter()
        .fold(0u64, |acc, l| acc | 1u64 << (l.var().0 % 64))
}

/// Sorts and deduplicates, rejecting any variable seen in both polarities.
fn canonical(mut lits: Vec<Lit>) -> Result<Vec<Lit>, LogicError> {
    lits.sort_unstable();
    lits.dedup();
    for pair in lits.windows(2) {
        if pair[0].var() == pair[1].var() {
            return Err(LogicError::Inconsistent(pair[0].var().0));
        }
    }
    Ok(lits)
}

/// Merge-style subset test on two sorted literal slices.
fn sorted_subset(small: &[Lit], large: &[Lit]) -> bool {
    if small.len() > large.len() {
        return false;
    }
    let mut j = 0;
    for &l in small {
        loop {
            if j == large.len() {
                return false;
            }
            let m = large[j];
            j += 1;
            if m == l {
                break;
            }
            if m > l {
                return false;
            }
        }
    }
    true
}

macro_rules! literal_set {
    ($name:ident) => {
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name {
            lits: Vec<Lit>,
            sig: u64,
        }

        impl $name {
            pub fn new(lits: Vec<Lit>) -> Result<Self, LogicError> {
                let lits = canonical(lits)?;
                let sig = signature(&lits);
                Ok(Self { lits, sig })
            }

            /// Caller guarantees `lits` is strictly sorted and consistent.
            pub(crate) fn from_sorted(lits: Vec<Lit>) -> Self {
                debug_assert!(lits.windows(2).all(|w| w[0].var() < w[1].var()));
                let sig = signature(&lits);
                Self { lits, sig }
            }

            pub fn empty() -> Self {
                Self { lits: Vec::new(), sig: 0 }
            }

            #[inline]
            pub fn lits(&self) -> &[Lit] {
                &self.lits
            }

            #[inline]
            pub fn signature(&self) -> u64 {
                self.sig
            }

            #[inline]
            pub fn len(&self) -> usize {
                self.lits.len()
            }

            #[inline]
            pub fn is_empty(&self) -> bool {
                self.lits.is_empty()
            }

            pub fn iter(&self) -> impl Iterator<Item = Lit> + '_ {
                self.lits.iter().copied()
            }

            pub fn contains(&self, l: Lit) -> bool {
                self.lits.binary_search(&l).is_ok()
            }

            /// Copy without `l`; the result stays sorted.
            pub fn without(&self, l: Lit) -> Self {
                Self::from_sorted(self.lits.iter().copied().filter(|&m| m != l).collect())
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{:?}", stringify!($name), self.lits)
            }
        }
    };
}

literal_set!(Cube);
literal_set!(Clause);

impl Cube {
    /// The clause excluding exactly the states of this cube.
    pub fn negate(&self) -> Clause {
        Clause::from_sorted(self.lits.iter().map(|&l| !l).collect())
    }
}

impl Clause {
    pub fn negate(&self) -> Cube {
        Cube::from_sorted(self.lits.iter().map(|&l| !l).collect())
    }

    /// True iff every literal of `self` occurs in `other`.
    #[inline]
    pub fn subsumes(&self, other: &Clause) -> bool {
        subsumes(self, other)
    }

    /// True iff `state` falsifies every literal, i.e. the clause excludes it.
    pub fn covers(&self, state: &State) -> bool {
        clause_covers_state(self, state)
    }

    /// Evaluates the clause under a total state.
    pub fn eval(&self, state: &State) -> bool {
        !self.covers(state)
    }
}

pub fn negate_cube(c: &Cube) -> Clause {
    c.negate()
}

pub fn negate_clause(c: &Clause) -> Cube {
    c.negate()
}

/// Subset test behind a signature pre-filter.
pub fn subsumes(c: &Clause, d: &Clause) -> bool {
    if c.sig & !d.sig != 0 {
        return false;
    }
    sorted_subset(&c.lits, &d.lits)
}

/// True iff every literal of `c` is false under `w`.
pub fn clause_covers_state(c: &Clause, w: &State) -> bool {
    c.lits.iter().all(|l| !l.eval(w.get(l.var().index())))
}

/// A total assignment over the latch variables `0..len`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    bits: Vec<bool>,
}

impl State {
    pub fn new(bits: Vec<bool>) -> State {
        State { bits }
    }

    pub fn zeros(len: usize) -> State {
        State { bits: vec![false; len] }
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// The cube mentioning every variable with its value in this state.
    pub fn to_cube(&self) -> Cube {
        Cube::from_sorted(
            self.bits
                .iter()
                .enumerate()
                .map(|(i, &b)| Var(i as u32).lit(!b))
                .collect(),
        )
    }

    pub fn satisfies_cube(&self, c: &Cube) -> bool {
        c.iter().all(|l| l.eval(self.get(l.var().index())))
    }

    pub fn is_all_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

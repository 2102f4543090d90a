//! Test-only oracles shared by the integration suites.

#![allow(dead_code)]

use pushd::logic::{Lit, Var};
use rand::Rng;

/// A clause over at most 32 variables as (positive mask, negative mask).
#[derive(Clone, Copy, Debug)]
pub struct MaskClause {
    pub pos: u32,
    pub neg: u32,
}

impl MaskClause {
    pub fn from_lits(lits: &[Lit]) -> MaskClause {
        let mut c = MaskClause { pos: 0, neg: 0 };
        for l in lits {
            let bit = 1u32 << l.var().0;
            if l.is_negated() {
                c.neg |= bit;
            } else {
                c.pos |= bit;
            }
        }
        c
    }

    fn vars(&self) -> u32 {
        self.pos | self.neg
    }

    fn falsified(&self, assigned: u32, values: u32) -> bool {
        self.vars() & !assigned == 0 && self.pos & values == 0 && self.neg & !values == 0
    }
}

/// Exhaustive search over assignments in variable order 0..n, cutting a
/// branch only when some clause is fully assigned and false. No inference.
pub fn brute_force_sat(num_vars: u32, clauses: &[MaskClause]) -> Option<u32> {
    assert!(num_vars <= 31);
    // clauses bucketed by their highest variable
    let mut by_top: Vec<Vec<MaskClause>> = vec![Vec::new(); num_vars as usize + 1];
    for c in clauses {
        if c.vars() == 0 {
            return None;
        }
        let top = 31 - c.vars().leading_zeros();
        by_top[top as usize].push(*c);
    }
    fn go(v: u32, n: u32, values: u32, by_top: &[Vec<MaskClause>]) -> Option<u32> {
        if v == n {
            return Some(values);
        }
        let assigned = if v == 31 { u32::MAX } else { (1u32 << (v + 1)) - 1 };
        for bit in [0u32, 1] {
            let vals = values | (bit << v);
            if by_top[v as usize].iter().all(|c| !c.falsified(assigned, vals)) {
                if let Some(m) = go(v + 1, n, vals, by_top) {
                    return Some(m);
                }
            }
        }
        None
    }
    go(0, num_vars, 0, &by_top)
}

pub fn random_cnf<R: Rng>(rng: &mut R, num_vars: u32, num_clauses: usize, width: usize) -> Vec<Vec<Lit>> {
    (0..num_clauses)
        .map(|_| {
            (0..width)
                .map(|_| Var(rng.gen_range(0..num_vars)).lit(rng.gen()))
                .collect()
        })
        .collect()
}

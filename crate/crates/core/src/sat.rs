//! Incremental CDCL solver with assumptions.
//!
//! Two-watched-literal propagation, first-UIP learning, VSIDS branching with
//! a fixed `false` phase, Luby restarts and activity-based reduction of
//! learnt clauses. Problem clauses are never removed. Assumptions occupy the
//! first decision levels; when one of them is refuted, the subset of
//! assumptions responsible is read off the implication graph.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::logic::{Lit, Var};

const L_FALSE: u8 = 0;
const L_TRUE: u8 = 1;
const L_UNDEF: u8 = 2;

const VAR_DECAY: f64 = 0.95;
const CLA_DECAY: f64 = 0.999;
const RESTART_BASE: u64 = 100;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("conflict budget exhausted")]
pub struct ResourceOut;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum SatError {
    #[error("no model: the last result was unsatisfiable")]
    NotSat,
}

/// Total assignment over the solver variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    /// Variables the solver never saw read as `false`.
    #[inline]
    pub fn value(&self, v: Var) -> bool {
        self.values.get(v.index()).copied().unwrap_or(false)
    }

    #[inline]
    pub fn lit(&self, l: Lit) -> bool {
        l.eval(self.value(l.var()))
    }

    pub fn satisfies(&self, clause: &[Lit]) -> bool {
        clause.iter().any(|&l| self.lit(l))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    /// Subset of the assumptions used to refute them.
    Unsat(Vec<Lit>),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn model_value(&self, v: Var) -> Result<bool, SatError> {
        match self {
            SatResult::Sat(m) => Ok(m.value(v)),
            SatResult::Unsat(_) => Err(SatError::NotSat),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
}

type ClauseRef = u32;

struct ClauseData {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy)]
struct Watcher {
    cref: ClauseRef,
    blocker: Lit,
}

/// Max-heap of variables keyed by activity, ties broken by lower index.
#[derive(Default)]
struct VarOrder {
    heap: Vec<u32>,
    pos: Vec<Option<usize>>,
}

impl VarOrder {
    fn better(act: &[f64], a: u32, b: u32) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn grow(&mut self, n: usize) {
        if self.pos.len() < n {
            self.pos.resize(n, None);
        }
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize].is_some()
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = Some(i);
        self.sift_up(i, act);
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if let Some(i) = self.pos[v as usize] {
            self.sift_up(i, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = None;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = Some(0);
            self.sift_down(0, act);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !Self::better(act, v, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = Some(i);
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && Self::better(act, self.heap[r], self.heap[l]) { r } else { l };
            if !Self::better(act, self.heap[c], v) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = Some(i);
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = Some(i);
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq as i32)
}

enum SearchOutcome {
    Sat,
    Unsat(Vec<Lit>),
    Restart,
    Budget,
}

pub struct Solver {
    clauses: Vec<ClauseData>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<Option<ClauseRef>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    order: VarOrder,
    seen: Vec<bool>,
    ok: bool,
    num_learnts: usize,
    max_learnts: f64,
    rng: ChaCha8Rng,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new(0)
    }
}

impl Solver {
    pub fn new(seed: u64) -> Solver {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            order: VarOrder::default(),
            seen: Vec::new(),
            ok: true,
            num_learnts: 0,
            max_learnts: 2000.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            stats: SolverStats::default(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// False once the clause database alone is unsatisfiable.
    pub fn is_ok(&self) -> bool {
        self.ok
    }

    /// Makes variables `0..n` available.
    pub fn reserve_vars(&mut self, n: usize) {
        let old = self.assigns.len();
        if n <= old {
            return;
        }
        self.assigns.resize(n, L_UNDEF);
        self.level.resize(n, 0);
        self.reason.resize(n, None);
        self.seen.resize(n, false);
        self.watches.resize(2 * n, Vec::new());
        self.order.grow(n);
        for _ in old..n {
            // tiny seeded perturbation of the initial branching order
            let a = self.rng.gen::<f64>() * 1e-5;
            self.activity.push(a);
        }
        for v in old..n {
            self.order.insert(v as u32, &self.activity);
        }
    }

    #[inline]
    fn value(&self, l: Lit) -> u8 {
        let a = self.assigns[l.var().index()];
        if a == L_UNDEF {
            L_UNDEF
        } else {
            a ^ l.is_negated() as u8
        }
    }

    #[inline]
    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, from: Option<ClauseRef>) {
        let v = l.var().index();
        debug_assert_eq!(self.assigns[v], L_UNDEF);
        self.assigns[v] = !l.is_negated() as u8;
        self.level[v] = self.decision_level();
        self.reason[v] = from;
        self.trail.push(l);
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let stop = self.trail_lim[lvl as usize];
        for i in (stop..self.trail.len()).rev() {
            let v = self.trail[i].var();
            self.assigns[v.index()] = L_UNDEF;
            self.reason[v.index()] = None;
            self.order.insert(v.0, &self.activity);
        }
        self.trail.truncate(stop);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = stop;
    }

    fn attach(&mut self, cref: ClauseRef) {
        let c = &self.clauses[cref as usize].lits;
        let (a, b) = (c[0], c[1]);
        self.watches[a.code() as usize].push(Watcher { cref, blocker: b });
        self.watches[b.code() as usize].push(Watcher { cref, blocker: a });
    }

    /// Adds a clause permanently. Returns false when the database became
    /// unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        if let Some(max) = lits.iter().map(|l| l.var().index()).max() {
            self.reserve_vars(max + 1);
        }
        let mut c = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        if c.iter().any(|&l| self.value(l) == L_TRUE) {
            return true;
        }
        c.retain(|&l| self.value(l) != L_FALSE);
        match c.len() {
            0 => {
                self.ok = false;
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let cref = self.clauses.len() as ClauseRef;
                self.clauses.push(ClauseData { lits: c, learnt: false, deleted: false, activity: 0.0 });
                self.attach(cref);
            }
        }
        self.ok
    }

    fn propagate(&mut self) -> Option<ClauseRef> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.code() as usize]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == L_TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cd = &mut self.clauses[w.cref as usize];
                if cd.deleted {
                    continue;
                }
                let c = &mut cd.lits;
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                let first_val = {
                    let a = self.assigns[first.var().index()];
                    if a == L_UNDEF { L_UNDEF } else { a ^ first.is_negated() as u8 }
                };
                if first != w.blocker && first_val == L_TRUE {
                    ws[j] = Watcher { cref: w.cref, blocker: first };
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    let a = self.assigns[l.var().index()];
                    if a == L_UNDEF || (a ^ l.is_negated() as u8) == L_TRUE {
                        c.swap(1, k);
                        let nw = c[1];
                        self.watches[nw.code() as usize].push(Watcher { cref: w.cref, blocker: first });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watcher { cref: w.cref, blocker: first };
                j += 1;
                if first_val == L_FALSE {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                    self.qhead = self.trail.len();
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[false_lit.code() as usize] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: Var) {
        let a = &mut self.activity[v.index()];
        *a += self.var_inc;
        if *a > 1e100 {
            for x in self.activity.iter_mut() {
                *x *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v.0, &self.activity);
    }

    fn bump_clause(&mut self, cref: ClauseRef) {
        let c = &mut self.clauses[cref as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis; returns the learnt clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut confl: ClauseRef) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let dl = self.decision_level();
        loop {
            self.bump_clause(confl);
            let start = if p.is_none() { 0 } else { 1 };
            let n = self.clauses[confl as usize].lits.len();
            for k in start..n {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var().index();
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(q.var());
                    self.seen[v] = true;
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().index()] {
                    break;
                }
            }
            let lit = self.trail[index];
            p = Some(lit);
            self.seen[lit.var().index()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[lit.var().index()].expect("implied literal has a reason");
        }
        learnt[0] = !p.unwrap();

        // drop literals whose reason is already covered by the clause
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                if i == 0 {
                    return true;
                }
                match self.reason[l.var().index()] {
                    None => true,
                    Some(r) => self.clauses[r as usize].lits[1..].iter().any(|q| {
                        let v = q.var().index();
                        !self.seen[v] && self.level[v] > 0
                    }),
                }
            })
            .collect();
        for l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        let mut learnt: Vec<Lit> = learnt.into_iter().zip(keep).filter(|(_, k)| *k).map(|(l, _)| l).collect();

        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()];
        }
        (learnt, bt)
    }

    /// Assumptions responsible for `p` being false, `p` included.
    fn analyze_final(&mut self, p: Lit) -> Vec<Lit> {
        let mut used = vec![p];
        if self.decision_level() == 0 || self.level[p.var().index()] == 0 {
            return used;
        }
        self.seen[p.var().index()] = true;
        for i in (self.trail_lim[0]..self.trail.len()).rev() {
            let x = self.trail[i].var().index();
            if !self.seen[x] {
                continue;
            }
            match self.reason[x] {
                None => used.push(self.trail[i]),
                Some(r) => {
                    for k in 1..self.clauses[r as usize].lits.len() {
                        let q = self.clauses[r as usize].lits[k];
                        if self.level[q.var().index()] > 0 {
                            self.seen[q.var().index()] = true;
                        }
                    }
                }
            }
            self.seen[x] = false;
        }
        self.seen[p.var().index()] = false;
        used
    }

    fn reduce_db(&mut self) {
        let mut learnts: Vec<ClauseRef> = (0..self.clauses.len() as ClauseRef)
            .filter(|&c| {
                let cd = &self.clauses[c as usize];
                cd.learnt && !cd.deleted && cd.lits.len() > 2
            })
            .collect();
        learnts.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .partial_cmp(&self.clauses[b as usize].activity)
                .unwrap()
                .then(a.cmp(&b))
        });
        let half = learnts.len() / 2;
        for &c in &learnts[..half] {
            let first = self.clauses[c as usize].lits[0];
            let locked = self.reason[first.var().index()] == Some(c) && self.value(first) == L_TRUE;
            if !locked {
                let cd = &mut self.clauses[c as usize];
                cd.deleted = true;
                cd.lits = Vec::new();
                self.num_learnts -= 1;
            }
        }
        // watchers of deleted clauses are dropped lazily during propagation,
        // but they must not be dereferenced before that
        for ws in self.watches.iter_mut() {
            ws.retain(|w| !self.clauses[w.cref as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.order.pop(&self.activity) {
            if self.assigns[v as usize] == L_UNDEF {
                return Some(Var(v).neg());
            }
        }
        None
    }

    fn search(&mut self, assumptions: &[Lit], conflict_limit: u64, budget: &mut Option<u64>) -> SearchOutcome {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if let Some(b) = budget {
                    if *b == 0 {
                        return SearchOutcome::Budget;
                    }
                    *b -= 1;
                }
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SearchOutcome::Unsat(Vec::new());
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let cref = self.clauses.len() as ClauseRef;
                    self.clauses.push(ClauseData {
                        lits: learnt,
                        learnt: true,
                        deleted: false,
                        activity: 0.0,
                    });
                    self.num_learnts += 1;
                    self.attach(cref);
                    self.bump_clause(cref);
                    let first = self.clauses[cref as usize].lits[0];
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= VAR_DECAY;
                self.cla_inc /= CLA_DECAY;
            } else {
                if conflicts >= conflict_limit {
                    self.cancel_until(0);
                    return SearchOutcome::Restart;
                }
                if self.num_learnts as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    match self.value(a) {
                        L_TRUE => self.trail_lim.push(self.trail.len()),
                        L_FALSE => {
                            let used = self.analyze_final(a);
                            return SearchOutcome::Unsat(used);
                        }
                        _ => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(l) => l,
                    None => {
                        self.stats.decisions += 1;
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return SearchOutcome::Sat,
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, None);
            }
        }
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> SatResult {
        self.solve_limited(assumptions, None).expect("unbounded solve")
    }

    /// Solves under `assumptions`, giving up after `budget` conflicts.
    pub fn solve_limited(&mut self, assumptions: &[Lit], budget: Option<u64>) -> Result<SatResult, ResourceOut> {
        self.stats.solves += 1;
        if !self.ok {
            return Ok(SatResult::Unsat(Vec::new()));
        }
        if let Some(max) = assumptions.iter().map(|l| l.var().index()).max() {
            self.reserve_vars(max + 1);
        }
        self.cancel_until(0);
        let mut budget = budget;
        let mut restarts = 0u64;
        let result = loop {
            let limit = (luby(2.0, restarts) * RESTART_BASE as f64) as u64;
            restarts += 1;
            match self.search(assumptions, limit, &mut budget) {
                SearchOutcome::Restart => continue,
                SearchOutcome::Sat => {
                    let values = self.assigns.iter().map(|&a| a == L_TRUE).collect();
                    break Ok(SatResult::Sat(Model { values }));
                }
                SearchOutcome::Unsat(used) => break Ok(SatResult::Unsat(used)),
                SearchOutcome::Budget => break Err(ResourceOut),
            }
        };
        self.cancel_until(0);
        result
    }
}

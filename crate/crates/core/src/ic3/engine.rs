use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::certificate::{replay, verify_invariant, Trace};
use super::frames::{Attachment, Frames, RecordId, Witness};
use super::stats::Stats;
use super::{
    CheckOutcome, CheckRun, EngineConfig, EngineError, Event, Mode, Observer, Origin, RequestCause, ResourceKind,
};
use crate::aiger::Step;
use crate::encoder::EncodedSystem;
use crate::logic::{Clause, Cube, Lit, State};
use crate::sat::{Model, SatResult, Solver};

type ObligationId = usize;

#[derive(Debug, Clone)]
struct Obligation {
    state: State,
    index: usize,
    successor: Option<ObligationId>,
    inputs_to_successor: Option<Step>,
    /// Inputs raising the bad signal; set on the obligation a chain starts from.
    bad_inputs: Option<Step>,
}

enum Interrupt {
    Resource(ResourceKind),
    Counterexample(ObligationId),
    Converged(Vec<Clause>),
    Internal(String),
}

#[derive(Clone, Copy)]
enum Query {
    Bad,
    Block,
    Minimize,
    Push,
    Convergence,
}

fn has_positive(c: &Cube) -> bool {
    c.iter().any(|l| !l.is_negated())
}

/// Runs the engine to completion.
pub fn check(enc: &EncodedSystem, cfg: &EngineConfig) -> Result<CheckRun, EngineError> {
    cfg.validate()?;
    Engine::new(enc, cfg.clone(), None).run()
}

/// Like [`check`], reporting every engine event to `observer`.
pub fn check_observed(
    enc: &EncodedSystem,
    cfg: &EngineConfig,
    observer: &mut dyn Observer,
) -> Result<CheckRun, EngineError> {
    cfg.validate()?;
    Engine::new(enc, cfg.clone(), Some(observer)).run()
}

/// Literal order for cube minimization that tries first to drop the
/// literals keeping the learnt clause away from the most witnesses of
/// `Δ_level`. A witness `w` can only be covered by `¬cube` if `w` satisfies
/// every literal of `cube`, so a literal scores one point per witness that
/// falsifies it. Ties go to the lower literal code.
pub fn minimize_order_by_witnesses(frames: &Frames, cube: &Cube, level: usize) -> Vec<Lit> {
    let mut scored: Vec<(usize, Lit)> = cube
        .iter()
        .map(|m| {
            let score = frames
                .witnesses(level)
                .filter(|(_, w)| !m.eval(w.state.get(m.var().index())))
                .count();
            (score, m)
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, l)| l).collect()
}

pub struct Engine<'a> {
    enc: &'a EncodedSystem,
    cfg: EngineConfig,
    frames: Frames,
    solvers: Vec<Solver>,
    obligations: Vec<Obligation>,
    queues: Vec<Vec<ObligationId>>,
    rng: ChaCha8Rng,
    stats: Stats,
    budget: Option<u64>,
    /// Levels that lost their last clause since the last convergence check.
    emptied: Vec<usize>,
    /// Highest `k` with `L_k ∧ bad` known to be unsatisfiable.
    safe_upto: Option<usize>,
    observer: Option<&'a mut dyn Observer>,
}

impl<'a> Engine<'a> {
    pub fn new(enc: &'a EncodedSystem, cfg: EngineConfig, observer: Option<&'a mut dyn Observer>) -> Engine<'a> {
        let mut e = Engine {
            enc,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            budget: cfg.sat_step_limit,
            cfg,
            frames: Frames::new(),
            solvers: Vec::new(),
            obligations: Vec::new(),
            queues: vec![Vec::new(), Vec::new()],
            stats: Stats::default(),
            emptied: Vec::new(),
            safe_upto: None,
            observer,
        };
        e.solvers.push(e.new_solver(0));
        e.solvers.push(e.new_solver(1));
        e
    }

    pub fn frames(&self) -> &Frames {
        &self.frames
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    fn new_solver(&self, level: usize) -> Solver {
        let mut s = Solver::new(self.cfg.seed ^ level as u64);
        s.reserve_vars(self.enc.var_count);
        for c in &self.enc.trans_clauses {
            s.add_clause(c);
        }
        if level == 0 {
            for c in &self.enc.init_clauses {
                s.add_clause(c);
            }
        }
        for j in level.max(1)..self.frames.top() + 1 {
            for (_, r) in self.frames.delta(j) {
                s.add_clause(&self.current_clause(&r.clause));
            }
        }
        s
    }

    fn current_clause(&self, c: &Clause) -> Vec<Lit> {
        c.iter().map(|l| self.enc.current_lit(l)).collect()
    }

    fn emit(&mut self, event: impl FnOnce() -> Event) {
        if let Some(obs) = self.observer.as_deref_mut() {
            obs.event(&event(), &self.frames);
        }
    }

    fn observing(&self) -> bool {
        self.observer.is_some()
    }

    fn solve(&mut self, level: usize, assumptions: &[Lit], query: Query) -> Result<SatResult, Interrupt> {
        let calls = &mut self.stats.sat_calls;
        match query {
            Query::Bad => calls.bad += 1,
            Query::Block => calls.block += 1,
            Query::Minimize => calls.minimize += 1,
            Query::Push => calls.push += 1,
            Query::Convergence => calls.convergence += 1,
        }
        let solver = &mut self.solvers[level];
        let before = solver.stats().conflicts;
        let result = solver.solve_limited(assumptions, self.budget);
        let spent = solver.stats().conflicts - before;
        self.stats.conflicts += spent;
        if let Some(b) = self.budget.as_mut() {
            *b = b.saturating_sub(spent);
        }
        let result = result.map_err(|_| Interrupt::Resource(ResourceKind::SatStepLimit))?;
        if self.cfg.debug_checks {
            if let SatResult::Unsat(used) = &result {
                if !used.iter().all(|l| assumptions.contains(l)) {
                    return Err(Interrupt::Internal("used assumptions outside the assumption set".into()));
                }
                self.stats.sat_calls.debug += 1;
                let used = used.clone();
                if self.solvers[level].solve(&used).is_sat() {
                    return Err(Interrupt::Internal(format!("used assumptions {used:?} are satisfiable")));
                }
            }
        }
        Ok(result)
    }

    fn model_state(&self, m: &Model) -> (State, Step) {
        (self.enc.latch_state(|v| m.value(v)), self.enc.input_step(|v| m.value(v)))
    }

    fn prime(&self, c: &Cube) -> Vec<Lit> {
        self.enc.prime_cube(c).expect("cube over latches")
    }

    fn unprime_used(&self, used: &[Lit]) -> Cube {
        Cube::new(used.iter().filter_map(|&l| self.enc.unprime(l)).collect()).expect("subset of a consistent cube")
    }

    /// Restores I-disjointness of `sub ⊆ sup` by re-adding a positive literal
    /// of `sup`.
    fn keep_off_init(sub: Cube, sup: &Cube) -> Option<Cube> {
        if has_positive(&sub) {
            return Some(sub);
        }
        let p = sup.iter().find(|l| !l.is_negated())?;
        let mut lits = sub.lits().to_vec();
        lits.push(p);
        Some(Cube::new(lits).expect("subset of a consistent cube"))
    }

    fn run(mut self) -> Result<CheckRun, EngineError> {
        let outcome = match self.main_loop() {
            Interrupt::Resource(kind) => CheckOutcome::ResourceOut { kind },
            Interrupt::Converged(invariant) => CheckOutcome::Safe { invariant },
            Interrupt::Counterexample(ob) => {
                let trace = self.reconstruct_trace(ob);
                replay(&self.enc.system, &trace)
                    .map_err(|e| EngineError::Internal(format!("counterexample does not replay: {e}")))?;
                CheckOutcome::Unsafe { trace }
            }
            Interrupt::Internal(msg) => return Err(EngineError::Internal(msg)),
        };
        self.stats.frames = self.frames.frontier();
        Ok(CheckRun { outcome, stats: self.stats })
    }

    fn main_loop(&mut self) -> Interrupt {
        loop {
            if let Err(stop) = self.step() {
                return stop;
            }
        }
    }

    /// Drains all pending work, then either starts a new obligation from a
    /// bad state at the frontier or closes the frontier.
    fn step(&mut self) -> Result<(), Interrupt> {
        self.drain()?;
        self.emit(|| Event::Quiescent);
        if self.cfg.debug_checks {
            self.audit().map_err(Interrupt::Internal)?;
        }
        let k = self.frames.frontier();
        match self.get_bad_state(k)? {
            Some((state, inputs)) => {
                let id = self.new_obligation(Obligation {
                    state,
                    index: k,
                    successor: None,
                    inputs_to_successor: None,
                    bad_inputs: Some(inputs),
                });
                self.queues[k].push(id);
                Ok(())
            }
            None => self.close_frontier(),
        }
    }

    fn new_obligation(&mut self, ob: Obligation) -> ObligationId {
        self.stats.obligations_created += 1;
        self.obligations.push(ob);
        self.obligations.len() - 1
    }

    /// Handles obligations and push requests, lowest index first and
    /// obligations before requests, until none is left at or below the
    /// frontier.
    fn drain(&mut self) -> Result<(), Interrupt> {
        loop {
            self.check_convergence()?;
            let triggered = self.cfg.mode == Mode::Triggered;
            let next = (0..=self.frames.frontier())
                .find(|&i| !self.queues[i].is_empty() || (triggered && self.frames.has_requests(i)));
            let Some(i) = next else {
                return Ok(());
            };
            if let Some(ob) = self.queues[i].pop() {
                self.handle_obligation(ob)?;
            } else if let Some(id) = self.frames.pop_request(i) {
                self.handle_push_request(id)?;
            }
        }
    }

    fn get_bad_state(&mut self, k: usize) -> Result<Option<(State, Step)>, Interrupt> {
        match self.solve(k, &[self.enc.bad], Query::Bad)? {
            SatResult::Sat(m) => Ok(Some(self.model_state(&m))),
            SatResult::Unsat(_) => Ok(None),
        }
    }

    fn handle_obligation(&mut self, ob: ObligationId) -> Result<(), Interrupt> {
        let i = self.obligations[ob].index;
        if i == 0 {
            return Err(Interrupt::Counterexample(ob));
        }
        let cube = self.obligations[ob].state.to_cube();
        let assumptions = self.prime(&cube);
        match self.solve(i - 1, &assumptions, Query::Block)? {
            SatResult::Sat(m) => {
                let (pred, inputs) = self.model_state(&m);
                if self.cfg.debug_checks && self.enc.system.simulate_step(&pred, &inputs) != self.obligations[ob].state {
                    return Err(Interrupt::Internal("predecessor does not step into its obligation".into()));
                }
                let t = self.new_obligation(Obligation {
                    state: pred,
                    index: i - 1,
                    successor: Some(ob),
                    inputs_to_successor: Some(inputs),
                    bad_inputs: None,
                });
                self.queues[i].push(ob);
                self.queues[i - 1].push(t);
            }
            SatResult::Unsat(used) => {
                let s0 = Self::keep_off_init(self.unprime_used(&used), &cube)
                    .ok_or_else(|| Interrupt::Internal("blocked obligation is an initial state".into()))?;
                let s0 = self.minimize_cube(s0, i)?;
                self.stats.clauses_learned += 1;
                self.add_clause_cascade(s0.negate(), i, Origin::Blocking)?;
                if self.cfg.reschedule && i < self.frames.frontier() {
                    self.obligations[ob].index = i + 1;
                    self.queues[i + 1].push(ob);
                    self.stats.obligations_rescheduled += 1;
                }
            }
        }
        Ok(())
    }

    /// One greedy pass dropping literals in the configured order while the
    /// blocking query at `level - 1` stays unsatisfiable and the cube keeps a
    /// positive literal.
    fn minimize_cube(&mut self, s0: Cube, level: usize) -> Result<Cube, Interrupt> {
        let order = if self.cfg.wdm {
            minimize_order_by_witnesses(&self.frames, &s0, level)
        } else {
            let mut order = s0.lits().to_vec();
            order.shuffle(&mut self.rng);
            order
        };
        self.minimize_cube_in_order(s0, level, &order)
    }

    fn minimize_cube_in_order(&mut self, s0: Cube, level: usize, order: &[Lit]) -> Result<Cube, Interrupt> {
        let mut cube = s0;
        for &m in order {
            if !cube.contains(m) {
                continue;
            }
            let candidate = cube.without(m);
            if !has_positive(&candidate) {
                continue;
            }
            let assumptions = self.prime(&candidate);
            if let SatResult::Unsat(used) = self.solve(level - 1, &assumptions, Query::Minimize)? {
                let shrunk = self.unprime_used(&used);
                cube = Self::keep_off_init(shrunk, &candidate).expect("candidate has a positive literal");
            }
        }
        Ok(cube)
    }

    /// Tries to push the clause of `id` one level up. Returns whether it moved.
    fn try_push(&mut self, id: RecordId, keep_witness: bool) -> Result<bool, Interrupt> {
        let rec = self.frames.record(id).expect("live record");
        let (clause, level) = (rec.clause.clone(), rec.level);
        let assumptions = self.prime(&clause.negate());
        match self.solve(level, &assumptions, Query::Push)? {
            SatResult::Sat(m) => {
                if keep_witness {
                    let (state, inputs) = self.model_state(&m);
                    if self.cfg.debug_checks && !clause.covers(&self.enc.system.simulate_step(&state, &inputs)) {
                        return Err(Interrupt::Internal("witness successor satisfies its clause".into()));
                    }
                    self.frames.set_witness(id, Witness { state, inputs });
                    self.stats.witnesses_created += 1;
                    self.emit(|| Event::WitnessStored { record: id, level });
                }
                Ok(false)
            }
            SatResult::Unsat(_) => {
                self.frames.remove(id);
                self.note_removal(level);
                self.stats.clauses_pushed += 1;
                if self.observing() {
                    let c = clause.clone();
                    self.emit(|| Event::Pushed { clause: c, from: level });
                }
                self.add_clause_cascade(clause, level + 1, Origin::Push)?;
                Ok(true)
            }
        }
    }

    fn handle_push_request(&mut self, id: RecordId) -> Result<(), Interrupt> {
        self.try_push(id, true).map(|_| ())
    }

    fn note_removal(&mut self, level: usize) {
        if self.frames.delta_len(level) == 0 {
            self.emptied.push(level);
        }
    }

    /// Inserts `clause` into `Δ_level` and restores the layer invariants:
    /// clauses it subsumes disappear, witnesses it covers turn into push
    /// requests and obligations it covers move one index up. A clause learnt
    /// by blocking strengthens all lower layers too, so the clause and
    /// witness steps repeat downwards until a layer already implies it.
    fn add_clause_cascade(&mut self, clause: Clause, level: usize, origin: Origin) -> Result<(), Interrupt> {
        if !clause.iter().any(|l| l.is_negated()) {
            return Err(Interrupt::Internal(format!("{clause:?} excludes the initial state")));
        }
        for j in level..=self.frames.top() {
            if self.frames.delta(j).any(|(_, r)| r.clause.subsumes(&clause)) {
                self.stats.insertions_skipped += 1;
                return Ok(());
            }
        }
        let attachment = if self.cfg.mode == Mode::Triggered { Attachment::Pending } else { Attachment::Detached };
        let pending = attachment == Attachment::Pending;
        let id = self.frames.insert(clause.clone(), level, attachment);
        if self.observing() {
            let c = clause.clone();
            self.emit(|| Event::Inserted { record: id, level, clause: c, origin });
            if pending {
                self.emit(|| Event::RequestFiled { record: id, level, cause: RequestCause::Inserted });
            }
        }
        let lits = self.current_clause(&clause);
        for s in &mut self.solvers[..=level] {
            s.add_clause(&lits);
        }

        self.remove_subsumed(&clause, level, id);
        self.kill_witnesses(&clause, level);

        let frontier = self.frames.frontier();
        if level <= frontier {
            let queue = std::mem::take(&mut self.queues[level]);
            let (covered, kept): (Vec<_>, Vec<_>) =
                queue.into_iter().partition(|&ob| clause.covers(&self.obligations[ob].state));
            self.queues[level] = kept;
            for ob in covered {
                self.stats.obligations_subsumed += 1;
                if self.cfg.reschedule && level < frontier {
                    self.obligations[ob].index = level + 1;
                    self.queues[level + 1].push(ob);
                }
            }
        }

        if origin == Origin::Blocking {
            for j in (1..level).rev() {
                let implied = self.frames.delta(j).any(|(_, r)| r.clause.subsumes(&clause));
                // an equal copy is dropped here as well; the clause now lives higher up
                self.remove_subsumed(&clause, j, usize::MAX);
                if implied {
                    break;
                }
                self.kill_witnesses(&clause, j);
            }
        }
        self.emit(|| Event::CascadeDone { level });
        Ok(())
    }

    fn remove_subsumed(&mut self, clause: &Clause, level: usize, except: RecordId) {
        let victims: Vec<RecordId> = self
            .frames
            .delta(level)
            .filter(|&(id, r)| id != except && clause.subsumes(&r.clause))
            .map(|(id, _)| id)
            .collect();
        if victims.is_empty() {
            return;
        }
        for id in victims {
            self.frames.remove(id);
            self.stats.clauses_subsumed += 1;
        }
        self.note_removal(level);
    }

    fn kill_witnesses(&mut self, clause: &Clause, level: usize) {
        let covered: Vec<RecordId> = self
            .frames
            .witnesses(level)
            .filter(|(_, w)| clause.covers(&w.state))
            .map(|(id, _)| id)
            .collect();
        for id in covered {
            let old = self.frames.set_pending(id);
            self.stats.witnesses_killed += 1;
            if self.observing() {
                let witness = old.map(|w| w.state).expect("record had a witness");
                let by = clause.clone();
                self.emit(|| Event::RequestFiled { record: id, level, cause: RequestCause::Covered { witness, by } });
            }
        }
    }

    fn check_convergence(&mut self) -> Result<(), Interrupt> {
        while let Some(j) = self.emptied.pop() {
            if j >= 1 && j <= self.frames.frontier() && self.frames.delta_len(j) == 0 {
                self.detect_convergence(j)?;
            }
        }
        Ok(())
    }

    /// `Δ_j` is empty, so `L_j = L_{j+1}` is inductive relative to itself.
    /// It is an invariant proving the property once `L_j ∧ bad` is known to
    /// be unsatisfiable.
    fn detect_convergence(&mut self, j: usize) -> Result<(), Interrupt> {
        if self.safe_upto.is_none_or(|k| j > k) {
            if let SatResult::Sat(_) = self.solve(j, &[self.enc.bad], Query::Convergence)? {
                return Ok(());
            }
        }
        let invariant: Vec<Clause> = self.frames.layer(j + 1).into_iter().cloned().collect();
        if self.cfg.verify_certificates && verify_invariant(self.enc, &invariant).is_err() {
            self.stats.convergence_rejected += 1;
            return Ok(());
        }
        Err(Interrupt::Converged(invariant))
    }

    /// The frontier has no bad state left. Propagate (iteration mode), look
    /// for a repeated layer, then open the next frame.
    fn close_frontier(&mut self) -> Result<(), Interrupt> {
        let k = self.frames.frontier();
        self.safe_upto = Some(k);
        if self.cfg.mode == Mode::Iteration {
            for i in 1..=k {
                let ids = self.frames.delta_ids(i).to_vec();
                for id in ids {
                    if self.frames.record(id).is_some() {
                        self.try_push(id, false)?;
                    }
                }
                self.check_convergence()?;
                if self.frames.delta_len(i) == 0 {
                    self.detect_convergence(i)?;
                }
            }
        }
        for j in 1..=k + 1 {
            if self.frames.delta_len(j) == 0 {
                self.detect_convergence(j)?;
            }
        }
        if k + 1 > self.cfg.max_frames {
            return Err(Interrupt::Resource(ResourceKind::MaxFrames));
        }
        self.frames.advance();
        self.queues.push(Vec::new());
        let solver = self.new_solver(k + 2);
        self.solvers.push(solver);
        self.stats.frames = k + 1;
        self.emit(|| Event::FrontierAdvanced { frontier: k + 1 });
        Ok(())
    }

    fn reconstruct_trace(&self, start: ObligationId) -> Trace {
        let mut cur = &self.obligations[start];
        let init = cur.state.clone();
        let mut steps = Vec::new();
        while let Some(next) = cur.successor {
            steps.push(cur.inputs_to_successor.clone().expect("linked obligation records its inputs"));
            cur = &self.obligations[next];
        }
        let final_inputs = cur.bad_inputs.clone().expect("chain ends at a bad state");
        Trace { init, steps, final_inputs }
    }

    /// Layer invariants expected whenever no work is pending.
    fn audit(&self) -> Result<(), String> {
        let sys = &self.enc.system;
        for j in 1..=self.frames.top() {
            let recs: Vec<_> = self.frames.delta(j).collect();
            for (a, ra) in &recs {
                for (b, rb) in &recs {
                    if a != b && ra.clause.subsumes(&rb.clause) {
                        return Err(format!("Δ_{j}: {:?} subsumes {:?}", ra.clause, rb.clause));
                    }
                }
            }
            if self.cfg.mode != Mode::Triggered || j > self.frames.frontier() {
                continue;
            }
            let layer = self.frames.layer(j);
            for (_, r) in &recs {
                let Some(w) = r.witness() else {
                    return Err(format!("Δ_{j}: {:?} has no witness at quiescence", r.clause));
                };
                if let Some(c) = layer.iter().find(|c| c.covers(&w.state)) {
                    return Err(format!("Δ_{j}: witness of {:?} covered by {c:?}", r.clause));
                }
                if !r.clause.covers(&sys.simulate_step(&w.state, &w.inputs)) {
                    return Err(format!("Δ_{j}: witness of {:?} does not leave the clause", r.clause));
                }
            }
        }
        Ok(())
    }
}

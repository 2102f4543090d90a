//! Acceptance suite. Each test covers one criterion and prints a single
//! PASS/FAIL line (written to stdout directly so it survives output capture).

mod common;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::time::{Duration, Instant};

use common::{brute_force_sat, random_cnf, MaskClause};
use pushd::aiger::{Step, TransitionSystem};
use pushd::cli::{run_bench, BenchMode};
use pushd::corpus::{handcrafted, random_system, RandomParams};
use pushd::encoder::{encode, EncodedSystem};
use pushd::ic3::{
    check, check_observed, replay, verify_invariant, CheckOutcome, EngineConfig, Event, Frames, Mode, Observer,
    RecordId, RequestCause, Verdict,
};
use pushd::logic::{signature, Clause, Lit, State, Var};
use pushd::oracle::{bfs_check, OracleLimits, OracleResult};
use pushd::sat::{SatResult, Solver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, ok: bool, detail: &str) {
    let line = format!("criterion {id} {name}: {} ({detail})\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().write_all(line.as_bytes());
}

struct Instance {
    name: String,
    sys: TransitionSystem,
    enc: EncodedSystem,
    oracle: OracleResult,
}

fn corpus() -> Vec<Instance> {
    let mut systems = handcrafted();
    for seed in 0..200 {
        systems.push((format!("random{seed:03}"), random_system(seed, RandomParams::default())));
    }
    systems
        .into_iter()
        .map(|(name, sys)| {
            let oracle = bfs_check(&sys, OracleLimits::default());
            assert_ne!(oracle, OracleResult::TooLarge, "{name}");
            Instance { name, enc: encode(&sys), sys, oracle }
        })
        .collect()
}

fn configs() -> Vec<EngineConfig> {
    BenchMode::ALL
        .iter()
        .map(|m| EngineConfig { mode: m.mode, wdm: m.wdm, debug_checks: true, ..EngineConfig::default() })
        .collect()
}

fn label(cfg: &EngineConfig) -> String {
    BenchMode { mode: cfg.mode, wdm: cfg.wdm }.label()
}

fn oracle_verdict(o: &OracleResult) -> Verdict {
    match o {
        OracleResult::Safe(_) => Verdict::Safe,
        OracleResult::Unsafe(_) => Verdict::Unsafe,
        OracleResult::TooLarge => Verdict::Unknown,
    }
}

#[test]
fn criterion_1_differential_verdicts() {
    let start = Instant::now();
    let corpus = corpus();
    let handmade = handcrafted().len();
    let (mut safe, mut unsafe_) = (0, 0);
    let mut disagreements = Vec::new();
    for inst in &corpus {
        let expected = oracle_verdict(&inst.oracle);
        if expected == Verdict::Safe {
            safe += 1;
        } else {
            unsafe_ += 1;
        }
        for cfg in configs() {
            let got = check(&inst.enc, &cfg).map(|r| r.outcome.verdict());
            if got.as_ref().ok() != Some(&expected) {
                disagreements.push(format!("{} {}: {got:?} vs {expected:?}", inst.name, label(&cfg)));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = disagreements.is_empty() && elapsed < Duration::from_secs(300) && handmade >= 10;
    report(
        1,
        "differential verdict agreement",
        ok,
        &format!(
            "{} systems ({handmade} handcrafted, {safe} safe, {unsafe_} unsafe) x 4 modes, {} disagreements, {:.1}s",
            corpus.len(),
            disagreements.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok, "{disagreements:#?}");
}

/// Explicit-state re-check of an invariant over all states and inputs.
fn explicit_invariant_check(sys: &TransitionSystem, inv: &[Clause]) -> bool {
    let (nl, ni) = (sys.num_latches(), sys.num_inputs());
    let holds = |s: &State| inv.iter().all(|c| c.eval(s));
    let unpack = |bits: u64, len: usize| (0..len).map(|i| bits >> i & 1 == 1).collect::<Vec<_>>();
    if !holds(&State::zeros(nl)) {
        return false;
    }
    for sb in 0..1u64 << nl {
        let s = State::new(unpack(sb, nl));
        if !holds(&s) {
            continue;
        }
        for ib in 0..1u64 << ni {
            let step = Step::new(unpack(ib, ni));
            if sys.eval_bad(&s, &step) || !holds(&sys.simulate_step(&s, &step)) {
                return false;
            }
        }
    }
    true
}

#[test]
fn criterion_2_certificate_soundness() {
    let corpus = corpus();
    let (mut invariants, mut traces) = (0, 0);
    let mut failures = Vec::new();
    for inst in &corpus {
        for cfg in configs() {
            match check(&inst.enc, &cfg).map(|r| r.outcome) {
                Ok(CheckOutcome::Safe { invariant }) => {
                    invariants += 1;
                    if let Err(e) = verify_invariant(&inst.enc, &invariant) {
                        failures.push(format!("{} {}: {e}", inst.name, label(&cfg)));
                    } else if !explicit_invariant_check(&inst.sys, &invariant) {
                        failures.push(format!("{} {}: explicit invariant check failed", inst.name, label(&cfg)));
                    }
                }
                Ok(CheckOutcome::Unsafe { trace }) => {
                    traces += 1;
                    if let Err(e) = replay(&inst.sys, &trace) {
                        failures.push(format!("{} {}: {e}", inst.name, label(&cfg)));
                    }
                }
                other => failures.push(format!("{} {}: {other:?}", inst.name, label(&cfg))),
            }
        }
    }
    let ok = failures.is_empty();
    report(
        2,
        "certificate soundness",
        ok,
        &format!("{invariants} invariants verified, {traces} traces replayed, {} failures", failures.len()),
    );
    assert!(ok, "{failures:#?}");
}

/// Checks stored witnesses at every quiescence point.
struct WitnessAudit<'a> {
    sys: &'a TransitionSystem,
    quiescent: usize,
    witnesses: usize,
    violations: Vec<String>,
}

impl Observer for WitnessAudit<'_> {
    fn event(&mut self, event: &Event, frames: &Frames) {
        if *event != Event::Quiescent {
            return;
        }
        self.quiescent += 1;
        for i in 1..=frames.frontier() {
            let layer = frames.layer(i);
            for (id, rec) in frames.delta(i) {
                let Some(w) = rec.witness() else {
                    self.violations.push(format!("Δ_{i} record {id:?} has no witness at quiescence"));
                    continue;
                };
                self.witnesses += 1;
                if !layer.iter().all(|c| c.eval(&w.state)) {
                    self.violations.push(format!("Δ_{i} record {id:?}: witness leaves L_{i}"));
                }
                if rec.clause.eval(&self.sys.simulate_step(&w.state, &w.inputs)) {
                    self.violations.push(format!("Δ_{i} record {id:?}: successor satisfies the clause"));
                }
            }
        }
    }
}

fn triggered_configs() -> Vec<EngineConfig> {
    configs().into_iter().filter(|c| c.mode == Mode::Triggered).collect()
}

#[test]
fn criterion_3_witness_validity() {
    let corpus = corpus();
    let (mut points, mut checked, mut violations) = (0, 0, Vec::new());
    for inst in &corpus {
        for cfg in triggered_configs() {
            let mut audit = WitnessAudit { sys: &inst.sys, quiescent: 0, witnesses: 0, violations: Vec::new() };
            check_observed(&inst.enc, &cfg, &mut audit).unwrap();
            points += audit.quiescent;
            checked += audit.witnesses;
            violations.extend(audit.violations.into_iter().map(|v| format!("{} {}: {v}", inst.name, label(&cfg))));
        }
    }
    let ok = violations.is_empty() && checked > 0;
    report(
        3,
        "witness validity",
        ok,
        &format!("{points} quiescence points, {checked} witnesses checked, {} violations", violations.len()),
    );
    assert!(ok, "{violations:#?}");
}

/// Replays the event stream with its own record of witnesses.
#[derive(Default)]
struct TriggerAudit {
    witness_of: HashMap<RecordId, State>,
    current_insert: Option<Clause>,
    /// Records whose witness the last insertions covered, awaiting a request.
    owed: HashSet<RecordId>,
    requests: usize,
    covered_requests: usize,
    violations: Vec<String>,
}

impl Observer for TriggerAudit {
    fn event(&mut self, event: &Event, frames: &Frames) {
        match event {
            Event::Inserted { level, clause, .. } => {
                self.current_insert = Some(clause.clone());
                for j in 1..=*level {
                    for (id, _) in frames.delta(j) {
                        if self.witness_of.get(&id).is_some_and(|w| clause.covers(w)) {
                            self.owed.insert(id);
                        }
                    }
                }
            }
            Event::CascadeDone { .. } => self.current_insert = None,
            Event::WitnessStored { record, .. } => {
                let w = frames.record(*record).and_then(|r| r.witness()).expect("stored witness");
                self.witness_of.insert(*record, w.state.clone());
            }
            Event::RequestFiled { record, cause, .. } => {
                self.requests += 1;
                if let RequestCause::Covered { witness, by } = cause {
                    self.covered_requests += 1;
                    let inserted = self.current_insert.as_ref();
                    if inserted != Some(by) {
                        self.violations.push(format!("request for {record:?} not preceded by the insertion of {by:?}"));
                    }
                    if self.witness_of.get(record) != Some(witness) || !by.covers(witness) {
                        self.violations.push(format!("request for {record:?}: witness not covered by {by:?}"));
                    }
                    self.witness_of.remove(record);
                    self.owed.remove(record);
                }
            }
            Event::Quiescent => {
                for id in self.owed.drain() {
                    if frames.record(id).is_some() {
                        self.violations.push(format!("record {id:?} lost its witness without a request"));
                    }
                }
            }
            Event::Pushed { .. } | Event::FrontierAdvanced { .. } => {}
        }
    }
}

#[test]
fn criterion_4_trigger_correctness() {
    let corpus = corpus();
    let (mut requests, mut covered, mut violations) = (0, 0, Vec::new());
    for inst in &corpus {
        for cfg in triggered_configs() {
            let mut audit = TriggerAudit::default();
            check_observed(&inst.enc, &cfg, &mut audit).unwrap();
            requests += audit.requests;
            covered += audit.covered_requests;
            violations.extend(audit.violations.into_iter().map(|v| format!("{} {}: {v}", inst.name, label(&cfg))));
        }
    }
    let ok = violations.is_empty() && covered > 0;
    report(
        4,
        "trigger correctness",
        ok,
        &format!("{requests} requests, {covered} triggered by coverage, {} violations", violations.len()),
    );
    assert!(ok, "{violations:#?}");
}

fn random_clause(rng: &mut ChaCha8Rng, max_var: u32, max_len: usize) -> Clause {
    let len = rng.gen_range(0..=max_len);
    let mut lits: Vec<Lit> = Vec::new();
    while lits.len() < len {
        let v = Var(rng.gen_range(0..max_var));
        if !lits.iter().any(|l| l.var() == v) {
            lits.push(v.lit(rng.gen()));
        }
    }
    Clause::new(lits).unwrap()
}

/// Intra-delta irredundancy after every completed insertion.
#[derive(Default)]
struct Irredundancy {
    insertions: usize,
    violations: Vec<String>,
}

impl Observer for Irredundancy {
    fn event(&mut self, event: &Event, frames: &Frames) {
        if !matches!(event, Event::CascadeDone { .. }) {
            return;
        }
        self.insertions += 1;
        for j in 1..=frames.top() {
            let recs: Vec<_> = frames.delta(j).collect();
            for (a, ra) in &recs {
                for (b, rb) in &recs {
                    if a != b && ra.clause.lits().iter().all(|l| rb.clause.lits().contains(l)) {
                        self.violations.push(format!("Δ_{j}: {:?} subsumes {:?}", ra.clause, rb.clause));
                    }
                }
            }
        }
    }
}

#[test]
fn criterion_5_subsumption() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pairs = 200_000;
    let (mut subsuming, mut violations) = (0, Vec::new());
    for k in 0..pairs {
        // small variable ranges so that subsumption actually occurs
        let max_var = if k % 2 == 0 { 8 } else { 200 };
        let c = random_clause(&mut rng, max_var, 5);
        let mut d = random_clause(&mut rng, max_var, 8);
        if k % 3 == 0 {
            let mut lits: Vec<Lit> = c.lits().to_vec();
            lits.extend(d.lits().iter().filter(|l| !c.lits().iter().any(|m| m.var() == l.var())));
            d = Clause::new(lits).unwrap();
        }
        let naive = c.lits().iter().all(|l| d.lits().contains(l));
        let fast = c.subsumes(&d);
        subsuming += naive as usize;
        if naive != fast {
            violations.push(format!("subsumes({c:?}, {d:?}) = {fast}, expected {naive}"));
        }
        let sig_ok = signature(c.lits()) & !signature(d.lits()) == 0;
        if naive && !sig_ok {
            violations.push(format!("pre-filter rejects {c:?} against {d:?}"));
        }
    }

    let corpus = corpus();
    let mut insertions = 0;
    for inst in &corpus {
        for cfg in configs() {
            let mut audit = Irredundancy::default();
            check_observed(&inst.enc, &cfg, &mut audit).unwrap();
            insertions += audit.insertions;
            violations.extend(audit.violations.into_iter().map(|v| format!("{} {}: {v}", inst.name, label(&cfg))));
        }
    }
    let ok = violations.is_empty() && subsuming > 1000;
    report(
        5,
        "subsumption machinery",
        ok,
        &format!(
            "{pairs} pairs ({subsuming} subsuming), {insertions} insertions audited, {} violations",
            violations.len()
        ),
    );
    assert!(ok, "{:#?}", &violations[..violations.len().min(20)]);
}

#[test]
fn criterion_6_sat_core() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let instances = 10_000;
    let (mut sat, mut unsat, mut core_checks, mut violations) = (0, 0, 0, Vec::new());
    for k in 0..instances {
        let n = rng.gen_range(1..=30u32);
        let width = rng.gen_range(2..=4);
        let ratio = match width {
            2 => rng.gen_range(0.5..1.5),
            3 => rng.gen_range(3.0..5.5),
            _ => rng.gen_range(8.0..12.0),
        };
        let m = ((n as f64 * ratio) as usize).max(1);
        let cnf = random_cnf(&mut rng, n, m, width);
        let masks: Vec<MaskClause> = cnf.iter().map(|c| MaskClause::from_lits(c)).collect();
        let mut solver = Solver::new(k as u64);
        for c in &cnf {
            solver.add_clause(c);
        }
        let expected = brute_force_sat(n, &masks).is_some();
        match solver.solve(&[]) {
            SatResult::Sat(model) => {
                sat += 1;
                if !expected || !cnf.iter().all(|c| model.satisfies(c)) {
                    violations.push(format!("instance {k}: bad Sat answer"));
                }
            }
            SatResult::Unsat(_) => {
                unsat += 1;
                if expected {
                    violations.push(format!("instance {k}: Unsat but satisfiable"));
                }
                continue;
            }
        }
        // assumption queries on satisfiable formulas
        for _ in 0..3 {
            let mut vars: Vec<u32> = (0..n).collect();
            let count = rng.gen_range(1..=n.min(8)) as usize;
            let assumptions: Vec<Lit> = (0..count)
                .map(|_| Var(vars.swap_remove(rng.gen_range(0..vars.len()))).lit(rng.gen()))
                .collect();
            let mut with_units = masks.clone();
            with_units.extend(assumptions.iter().map(|&l| MaskClause::from_lits(&[l])));
            let expected = brute_force_sat(n, &with_units).is_some();
            match solver.solve(&assumptions) {
                SatResult::Sat(model) => {
                    if !expected || !cnf.iter().all(|c| model.satisfies(c)) || !assumptions.iter().all(|&l| model.lit(l)) {
                        violations.push(format!("instance {k}: bad Sat answer under {assumptions:?}"));
                    }
                }
                SatResult::Unsat(used) => {
                    core_checks += 1;
                    if expected || !used.iter().all(|l| assumptions.contains(l)) {
                        violations.push(format!("instance {k}: bad Unsat answer under {assumptions:?}"));
                    }
                    if solver.solve(&used).is_sat() {
                        violations.push(format!("instance {k}: used subset {used:?} is satisfiable"));
                    }
                }
            }
        }
    }
    let ok = violations.is_empty() && sat > 0 && unsat > 0 && core_checks > 0;
    report(
        6,
        "SAT core",
        ok,
        &format!(
            "{instances} CNFs ({sat} sat, {unsat} unsat), {core_checks} used-subset re-solves, {} violations",
            violations.len()
        ),
    );
    assert!(ok, "{violations:#?}");
}

#[test]
fn criterion_7_minimal_counterexamples() {
    let corpus = corpus();
    let (mut compared, mut mismatches) = (0, Vec::new());
    for inst in &corpus {
        let OracleResult::Unsafe(expected) = &inst.oracle else { continue };
        for cfg in configs() {
            let cfg = EngineConfig { reschedule: false, ..cfg };
            compared += 1;
            match check(&inst.enc, &cfg).map(|r| r.outcome) {
                Ok(CheckOutcome::Unsafe { trace }) if trace.len() == expected.len() => {}
                other => mismatches.push(format!("{} {}: {other:?}, oracle length {}", inst.name, label(&cfg), expected.len())),
            }
        }
    }
    let ok = mismatches.is_empty() && compared > 0;
    report(
        7,
        "minimal counterexamples",
        ok,
        &format!("{compared} unsafe runs without rescheduling, {} length mismatches", mismatches.len()),
    );
    assert!(ok, "{mismatches:#?}");
}

/// Frame budget of the ablation run.
const ABLATION_MAX_FRAMES: usize = 8;

#[test]
fn criterion_8_ablation_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut safe = HashSet::new();
    for inst in corpus() {
        std::fs::write(dir.path().join(format!("{}.aag", inst.name)), inst.sys.to_aag()).unwrap();
        if matches!(inst.oracle, OracleResult::Safe(_)) {
            safe.insert(format!("{}.aag", inst.name));
        }
    }
    let base = EngineConfig { max_frames: ABLATION_MAX_FRAMES, ..EngineConfig::default() };
    let report_data = run_bench(dir.path(), &BenchMode::ALL, &base).unwrap();
    let text = report_data.to_text();
    let summary_start = text.find("\nmode ").unwrap_or(0);
    let _ = std::io::stdout().write_all(text[summary_start..].trim_start().as_bytes());

    let verdict = |file: &str, mode: &str| {
        report_data.rows.iter().find(|r| r.file == file && r.mode == mode).and_then(|r| r.verdict)
    };
    let separating: Vec<&String> = safe
        .iter()
        .filter(|f| {
            verdict(f, "none") == Some(Verdict::Unknown)
                && verdict(f, "iteration") == Some(Verdict::Safe)
                && verdict(f, "triggered") == Some(Verdict::Safe)
        })
        .collect();
    let has_totals = report_data.summary.len() == 4 && report_data.summary.iter().all(|s| s.sat_calls > 0);
    let ok = has_totals && !separating.is_empty() && report_data.inconsistent.is_empty();
    let mut names: Vec<&str> = separating.iter().map(|s| s.as_str()).collect();
    names.sort();
    report(
        8,
        "ablation direction",
        ok,
        &format!(
            "{} rows, max-frames {ABLATION_MAX_FRAMES}, none hits the frame limit on {} safe instances solved by iteration and triggered: {}",
            report_data.rows.len(),
            names.len(),
            names.join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_9_encoding_faithfulness() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (circuits, fixings) = (50, 1000);
    let mut violations = Vec::new();
    for seed in 0..circuits {
        let sys = random_system(10_000 + seed, RandomParams::default());
        let enc = encode(&sys);
        let mut solver = Solver::new(seed);
        solver.reserve_vars(enc.var_count);
        for c in &enc.trans_clauses {
            solver.add_clause(c);
        }
        for _ in 0..fixings {
            let state = State::new((0..sys.num_latches()).map(|_| rng.gen()).collect());
            let step = Step::new((0..sys.num_inputs()).map(|_| rng.gen()).collect());
            let mut fixing: Vec<Lit> = enc.latch_vars.iter().zip(state.bits()).map(|(v, &b)| v.lit(!b)).collect();
            fixing.extend(enc.input_vars.iter().zip(&step.inputs).map(|(v, &b)| v.lit(!b)));
            let next = sys.simulate_step(&state, &step);
            let bad = sys.eval_bad(&state, &step);
            match solver.solve(&fixing) {
                SatResult::Sat(m) => {
                    if enc.next_state(|v| m.value(v)) != next {
                        violations.push(format!("circuit {seed}: next state differs at {state:?}"));
                    }
                }
                SatResult::Unsat(_) => violations.push(format!("circuit {seed}: fixing {state:?} unsatisfiable")),
            }
            let mut with_bad = fixing.clone();
            with_bad.push(enc.bad);
            if solver.solve(&with_bad).is_sat() != bad {
                violations.push(format!("circuit {seed}: bad differs at {state:?}"));
            }
        }
    }
    let ok = violations.is_empty();
    report(
        9,
        "encoding faithfulness",
        ok,
        &format!("{circuits} circuits x {fixings} fixings, {} disagreements", violations.len()),
    );
    assert!(ok, "{violations:#?}");
}

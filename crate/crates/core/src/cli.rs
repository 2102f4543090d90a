//! Command-line front end.
//!
//! `pushd check FILE` prints an HWMCC-style status block and exits with 10
//! (unsafe), 20 (safe), 0 (unknown) or 1 (usage or input error).
//! `pushd bench DIR` runs every `.aag` file of a directory under several
//! engine configurations and prints a comparison table.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::aiger::{parse_aag_with_property, Step, TransitionSystem};
use crate::encoder::{encode, EncodedSystem};
use crate::ic3::{check, CheckOutcome, EngineConfig, Mode, Stats, Trace, Verdict};
use crate::logic::{Clause, State};

pub const EXIT_UNSAFE: i32 = 10;
pub const EXIT_SAFE: i32 = 20;
pub const EXIT_UNKNOWN: i32 = 0;
pub const EXIT_ERROR: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "pushd", version, about = "IC3 safety checking for AIGER circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check one ASCII AIGER file.
    Check(CheckArgs),
    /// Run every .aag file of a directory under several configurations.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[arg(long, default_value_t = 1000)]
    max_frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total conflict budget over all SAT calls.
    #[arg(long)]
    sat_step_limit: Option<u64>,
    /// Never move blocked obligations to the next index.
    #[arg(long)]
    no_reschedule: bool,
    /// Skip re-verification of invariants.
    #[arg(long)]
    no_verify: bool,
}

impl EngineArgs {
    fn config(&self, mode: Mode, wdm: bool) -> EngineConfig {
        EngineConfig {
            mode,
            wdm,
            max_frames: self.max_frames,
            sat_step_limit: self.sat_step_limit,
            seed: self.seed,
            verify_certificates: !self.no_verify,
            reschedule: !self.no_reschedule,
            debug_checks: false,
        }
    }
}

#[derive(Debug, Args)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, default_value = "triggered")]
    mode: Mode,
    /// Witness-directed literal order for cube minimization.
    #[arg(long)]
    wdm: bool,
    /// Index of the property (AIGER "b" section, or output when there is none).
    #[arg(long, default_value_t = 0)]
    property: usize,
    #[command(flatten)]
    engine: EngineArgs,
    /// Write the transition relation as DIMACS CNF.
    #[arg(long, value_name = "PATH")]
    dump_cnf: Option<PathBuf>,
    /// Print engine statistics to stderr.
    #[arg(long, value_name = "FORMAT")]
    stats: Option<OutputFormat>,
    /// Write the witness block to a file.
    #[arg(long, value_name = "PATH")]
    witness: Option<PathBuf>,
    /// Write the inductive invariant of a safe result.
    #[arg(long, value_name = "PATH")]
    invariant: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    dir: PathBuf,
    /// Comma-separated configurations out of none, iteration, triggered, triggered-wdm.
    #[arg(long, value_delimiter = ',', default_value = "none,iteration,triggered,triggered-wdm")]
    modes: Vec<BenchMode>,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, default_value = "text")]
    format: OutputFormat,
}

/// One engine configuration compared by `bench`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BenchMode {
    pub mode: Mode,
    pub wdm: bool,
}

impl BenchMode {
    pub const ALL: [BenchMode; 4] = [
        BenchMode { mode: Mode::None, wdm: false },
        BenchMode { mode: Mode::Iteration, wdm: false },
        BenchMode { mode: Mode::Triggered, wdm: false },
        BenchMode { mode: Mode::Triggered, wdm: true },
    ];

    pub fn label(&self) -> String {
        if self.wdm {
            format!("{}-wdm", self.mode)
        } else {
            self.mode.to_string()
        }
    }
}

impl std::str::FromStr for BenchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<BenchMode, String> {
        match s.strip_suffix("-wdm") {
            Some(m) => Ok(BenchMode { mode: m.parse()?, wdm: true }),
            None => Ok(BenchMode { mode: s.parse()?, wdm: false }),
        }
    }
}

/// HWMCC witness for a counterexample: status, property, initial latch
/// values, then one input vector per time frame, the last one raising the
/// bad signal.
pub fn format_witness(trace: &Trace, property: usize) -> String {
    let bits = |b: &[bool]| b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>();
    let mut out = format!("1\nb{property}\n{}\n", bits(trace.init.bits()));
    for step in trace.steps.iter().chain(std::iter::once(&trace.final_inputs)) {
        out += &bits(&step.inputs);
        out.push('\n');
    }
    out.push_str(".\n");
    out
}

/// Status-only witness of a safe result.
pub fn format_safe(property: usize) -> String {
    format!("0\nb{property}\n.\n")
}

/// Parses a counterexample witness produced by [`format_witness`].
pub fn parse_witness(text: &str, sys: &TransitionSystem) -> Result<Trace, String> {
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("1") {
        return Err("witness does not start with status 1".into());
    }
    match lines.next() {
        Some(p) if p.starts_with('b') => {}
        _ => return Err("missing property line".into()),
    }
    let parse_bits = |line: &str, width: usize| -> Result<Vec<bool>, String> {
        if line.len() != width {
            return Err(format!("expected {width} bits, got {line:?}"));
        }
        line.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(format!("bad bit {c:?}")),
            })
            .collect()
    };
    let init = State::new(parse_bits(lines.next().ok_or("missing latch line")?, sys.num_latches())?);
    let mut frames = Vec::new();
    for line in lines.by_ref() {
        if line == "." {
            break;
        }
        frames.push(Step::new(parse_bits(line, sys.num_inputs())?));
    }
    let final_inputs = frames.pop().ok_or("witness has no input frame")?;
    Ok(Trace { init, steps: frames, final_inputs })
}

/// Invariant certificate: one clause per line, literals as signed AIGER
/// latch variables, each line terminated by 0.
pub fn format_invariant(sys: &TransitionSystem, invariant: &[Clause]) -> String {
    let mut out = String::new();
    for c in invariant {
        for l in c.iter() {
            let var = sys.latches[l.var().index()].lit.var().0 as i64;
            let _ = write!(out, "{} ", if l.is_negated() { -var } else { var });
        }
        out.push_str("0\n");
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub file: String,
    pub mode: String,
    pub verdict: Option<Verdict>,
    pub seconds: f64,
    pub frames: usize,
    pub sat_calls: u64,
    pub conflicts: u64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSummary {
    pub mode: String,
    pub solved: usize,
    pub safe: usize,
    #[serde(rename = "unsafe")]
    pub unsafe_: usize,
    pub unknown: usize,
    pub errors: usize,
    pub sat_calls: u64,
    pub frames: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<ModeSummary>,
    /// Files on which two configurations returned opposite verdicts.
    pub inconsistent: Vec<String>,
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:<32} {:<14} {:<8} {:>9} {:>7} {:>10}\n",
            "file", "mode", "verdict", "seconds", "frames", "sat calls"
        );
        for r in &self.rows {
            let verdict = match (&r.verdict, &r.error) {
                (Some(v), _) => v.to_string(),
                (None, Some(e)) => format!("error: {e}"),
                (None, None) => "-".into(),
            };
            let _ = writeln!(
                out,
                "{:<32} {:<14} {:<8} {:>9.3} {:>7} {:>10}",
                r.file, r.mode, verdict, r.seconds, r.frames, r.sat_calls
            );
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<14} {:>6} {:>5} {:>7} {:>8} {:>7} {:>10} {:>7} {:>9}",
            "mode", "solved", "safe", "unsafe", "unknown", "errors", "sat calls", "frames", "seconds"
        );
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{:<14} {:>6} {:>5} {:>7} {:>8} {:>7} {:>10} {:>7} {:>9.3}",
                s.mode, s.solved, s.safe, s.unsafe_, s.unknown, s.errors, s.sat_calls, s.frames, s.seconds
            );
        }
        for f in &self.inconsistent {
            let _ = writeln!(out, "inconsistent verdicts: {f}");
        }
        out
    }
}

fn load(path: &Path, property: usize) -> Result<TransitionSystem, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_aag_with_property(&text, property).map_err(|e| format!("{}: {e}", path.display()))
}

/// Runs every `.aag` file of `dir` (sorted by name) under each configuration
/// of `modes`, starting from `base`.
pub fn run_bench(dir: &Path, modes: &[BenchMode], base: &EngineConfig) -> io::Result<BenchReport> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "aag"))
        .collect();
    files.sort();

    let mut rows = Vec::new();
    let mut inconsistent = Vec::new();
    for path in &files {
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let enc = load(path, 0).map(|sys| encode(&sys));
        let mut verdicts = Vec::new();
        for m in modes {
            let mut row = BenchRow {
                file: name.clone(),
                mode: m.label(),
                verdict: None,
                seconds: 0.0,
                frames: 0,
                sat_calls: 0,
                conflicts: 0,
                error: None,
            };
            match &enc {
                Err(e) => row.error = Some(e.clone()),
                Ok(enc) => {
                    let cfg = EngineConfig { mode: m.mode, wdm: m.wdm, ..base.clone() };
                    let start = Instant::now();
                    match check(enc, &cfg) {
                        Ok(run) => {
                            row.verdict = Some(run.outcome.verdict());
                            row.frames = run.stats.frames;
                            row.sat_calls = run.stats.sat_calls.total();
                            row.conflicts = run.stats.conflicts;
                            verdicts.push(run.outcome.verdict());
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    row.seconds = start.elapsed().as_secs_f64();
                }
            }
            rows.push(row);
        }
        if verdicts.contains(&Verdict::Safe) && verdicts.contains(&Verdict::Unsafe) {
            inconsistent.push(name);
        }
    }

    let summary = modes
        .iter()
        .map(|m| {
            let label = m.label();
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.mode == label).collect();
            let count = |v: Verdict| mine.iter().filter(|r| r.verdict == Some(v)).count();
            ModeSummary {
                solved: count(Verdict::Safe) + count(Verdict::Unsafe),
                safe: count(Verdict::Safe),
                unsafe_: count(Verdict::Unsafe),
                unknown: count(Verdict::Unknown),
                errors: mine.iter().filter(|r| r.error.is_some()).count(),
                sat_calls: mine.iter().map(|r| r.sat_calls).sum(),
                frames: mine.iter().map(|r| r.frames).sum(),
                seconds: mine.iter().fold(0.0, |acc, r| acc + r.seconds),
                mode: label,
            }
        })
        .collect();
    Ok(BenchReport { rows, summary, inconsistent })
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Check(a) => run_check(&a, out, err),
        Command::Bench(a) => run_bench_command(&a, out),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_ERROR
    })
}

pub fn run_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn run_check(a: &CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let sys = load(&a.file, a.property)?;
    let cfg = a.engine.config(a.mode, a.wdm);
    cfg.validate().map_err(|e| e.to_string())?;
    let enc: EncodedSystem = encode(&sys);
    if let Some(p) = &a.dump_cnf {
        write_file(p, &enc.to_dimacs())?;
    }
    let run = check(&enc, &cfg).map_err(|e| e.to_string())?;

    let (text, code) = match &run.outcome {
        CheckOutcome::Unsafe { trace } => (format_witness(trace, a.property), EXIT_UNSAFE),
        CheckOutcome::Safe { invariant } => {
            if let Some(p) = &a.invariant {
                write_file(p, &format_invariant(&sys, invariant))?;
            }
            (format_safe(a.property), EXIT_SAFE)
        }
        CheckOutcome::ResourceOut { kind } => {
            let _ = writeln!(err, "resource limit reached: {kind:?}");
            ("unknown\n".to_string(), EXIT_UNKNOWN)
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    if let Some(p) = &a.witness {
        if code != EXIT_UNKNOWN {
            write_file(p, &text)?;
        }
    }
    if let Some(fmt) = a.stats {
        print_stats(&run.stats, fmt, err)?;
    }
    Ok(code)
}

fn print_stats(stats: &Stats, fmt: OutputFormat, err: &mut dyn Write) -> Result<(), String> {
    let text = match fmt {
        OutputFormat::Json => serde_json::to_string_pretty(stats).map_err(|e| e.to_string())?,
        OutputFormat::Text => stats.to_string(),
    };
    writeln!(err, "{text}").map_err(|e| e.to_string())
}

fn run_bench_command(a: &BenchArgs, out: &mut dyn Write) -> Result<i32, String> {
    for m in &a.modes {
        if m.wdm && m.mode != Mode::Triggered {
            return Err(format!("configuration {} is not supported", m.label()));
        }
    }
    let base = a.engine.config(Mode::Triggered, false);
    let report = run_bench(&a.dir, &a.modes, &base).map_err(|e| format!("{}: {e}", a.dir.display()))?;
    let text = match a.format {
        OutputFormat::Json => serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n",
        OutputFormat::Text => report.to_text(),
    };
    out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    Ok(0)
}

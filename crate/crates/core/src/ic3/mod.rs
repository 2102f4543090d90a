//! The IC3 engine.
//!
//! Three scheduling modes share one data model (delta-encoded layers,
//! per-index obligation stacks, one solver per time index):
//!
//! * [`Mode::Iteration`]: blocking until no bad state is left at the
//!   frontier, then one propagation pass over all layers.
//! * [`Mode::Triggered`]: every clause carries either the witness of its
//!   last failed push or a pending push request. A request is re-filed only
//!   when a new clause covers the witness, so clauses stay pushed as far as
//!   possible while blocking proceeds.
//! * [`Mode::None`]: no propagation at all; convergence is only noticed when
//!   subsumption empties a layer.

mod certificate;
mod engine;
mod frames;
mod stats;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use certificate::{replay, verify_invariant, InvariantCheck, ReplayError, Trace, VerifyFailure};
pub use engine::{check, check_observed, minimize_order_by_witnesses, Engine};
pub use frames::{Attachment, ClauseRecord, Frames, RecordId, Witness};
pub use stats::{SatCalls, Stats};

use crate::logic::{Clause, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    None,
    Iteration,
    Triggered,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::None => "none",
            Mode::Iteration => "iteration",
            Mode::Triggered => "triggered",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "none" => Ok(Mode::None),
            "iteration" => Ok(Mode::Iteration),
            "triggered" => Ok(Mode::Triggered),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub mode: Mode,
    /// Order literal-drop attempts by witness coverage (triggered mode only).
    pub wdm: bool,
    /// Highest frontier the engine may reach.
    pub max_frames: usize,
    /// Total conflict budget over all SAT calls.
    pub sat_step_limit: Option<u64>,
    pub seed: u64,
    pub verify_certificates: bool,
    /// Move blocked obligations one index up. Disabling it makes every
    /// counterexample minimal in length.
    pub reschedule: bool,
    /// Re-check used assumptions, models and witnesses as they are produced.
    pub debug_checks: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            mode: Mode::Triggered,
            wdm: false,
            max_frames: 1000,
            sat_step_limit: None,
            seed: 0,
            verify_certificates: true,
            reschedule: true,
            debug_checks: false,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.wdm && self.mode != Mode::Triggered {
            return Err(EngineError::Config("witness-directed minimization requires mode triggered".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    MaxFrames,
    SatStepLimit,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckOutcome {
    /// Inductive invariant over latch positions.
    Safe { invariant: Vec<Clause> },
    Unsafe { trace: Trace },
    ResourceOut { kind: ResourceKind },
}

impl CheckOutcome {
    pub fn verdict(&self) -> Verdict {
        match self {
            CheckOutcome::Safe { .. } => Verdict::Safe,
            CheckOutcome::Unsafe { .. } => Verdict::Unsafe,
            CheckOutcome::ResourceOut { .. } => Verdict::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Safe,
    Unsafe,
    Unknown,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Safe => "safe",
            Verdict::Unsafe => "unsafe",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CheckRun {
    pub outcome: CheckOutcome,
    pub stats: Stats,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Blocking,
    Push,
}

/// What caused a push request to be filed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequestCause {
    /// The clause just entered its layer.
    Inserted,
    /// The clause `by` covers the previous witness.
    Covered { witness: State, by: Clause },
}

/// Engine events for instrumentation. Emitted only when an observer is
/// attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    /// `clause` entered `Δ_level`; the cascade that follows belongs to it.
    Inserted { record: RecordId, level: usize, clause: Clause, origin: Origin },
    /// The cascade of the last insertion finished.
    CascadeDone { level: usize },
    RequestFiled { record: RecordId, level: usize, cause: RequestCause },
    WitnessStored { record: RecordId, level: usize },
    Pushed { clause: Clause, from: usize },
    /// No obligation or request is pending at or below the frontier.
    Quiescent,
    FrontierAdvanced { frontier: usize },
}

pub trait Observer {
    fn event(&mut self, event: &Event, frames: &Frames);
}

//! Delta-encoded layers.
//!
//! `Δ_j` holds the clauses whose last layer is `j`, so `L_i` is the union of
//! `Δ_j` for `j >= i`. Every record owns its attachment: the witness of its
//! last failed push, a pending push request, or nothing when the engine does
//! not push clauses on its own. Pending records are also indexed per level
//! so that the scheduler can find the lowest level with work.

use std::collections::BTreeSet;

use crate::aiger::Step;
use crate::logic::{Clause, State};

pub type RecordId = usize;

/// A state of layer `i` with a transition, under `inputs`, into the
/// complement of the record's clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub state: State,
    pub inputs: Step,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attachment {
    Witness(Witness),
    Pending,
    Detached,
}

#[derive(Debug, Clone)]
pub struct ClauseRecord {
    pub clause: Clause,
    pub level: usize,
    pub attachment: Attachment,
}

impl ClauseRecord {
    pub fn witness(&self) -> Option<&Witness> {
        match &self.attachment {
            Attachment::Witness(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Debug)]
pub struct Frames {
    records: Vec<Option<ClauseRecord>>,
    deltas: Vec<Vec<RecordId>>,
    requests: Vec<BTreeSet<RecordId>>,
    frontier: usize,
}

impl Default for Frames {
    fn default() -> Self {
        Frames::new()
    }
}

impl Frames {
    /// Frontier 0 with empty `Δ_1`. `Δ_0` exists only to keep indices aligned
    /// and never receives clauses.
    pub fn new() -> Frames {
        Frames {
            records: Vec::new(),
            deltas: vec![Vec::new(), Vec::new()],
            requests: vec![BTreeSet::new(), BTreeSet::new()],
            frontier: 0,
        }
    }

    pub fn frontier(&self) -> usize {
        self.frontier
    }

    /// Highest level that can hold clauses, `frontier + 1`.
    pub fn top(&self) -> usize {
        self.deltas.len() - 1
    }

    pub fn advance(&mut self) {
        self.frontier += 1;
        self.deltas.push(Vec::new());
        self.requests.push(BTreeSet::new());
    }

    pub fn record(&self, id: RecordId) -> Option<&ClauseRecord> {
        self.records.get(id).and_then(|r| r.as_ref())
    }

    fn rec(&self, id: RecordId) -> &ClauseRecord {
        self.records[id].as_ref().expect("live record")
    }

    pub fn delta_ids(&self, j: usize) -> &[RecordId] {
        &self.deltas[j]
    }

    pub fn delta(&self, j: usize) -> impl Iterator<Item = (RecordId, &ClauseRecord)> + '_ {
        self.deltas[j].iter().map(move |&id| (id, self.rec(id)))
    }

    pub fn delta_len(&self, j: usize) -> usize {
        self.deltas[j].len()
    }

    /// Clauses of `L_i`.
    pub fn layer(&self, i: usize) -> Vec<&Clause> {
        (i.max(1)..=self.top())
            .flat_map(|j| self.delta(j).map(|(_, r)| &r.clause))
            .collect()
    }

    pub fn witnesses(&self, j: usize) -> impl Iterator<Item = (RecordId, &Witness)> + '_ {
        self.delta(j).filter_map(|(id, r)| r.witness().map(|w| (id, w)))
    }

    pub fn has_requests(&self, j: usize) -> bool {
        !self.requests[j].is_empty()
    }

    pub fn num_clauses(&self) -> usize {
        self.deltas.iter().map(Vec::len).sum()
    }

    pub(crate) fn insert(&mut self, clause: Clause, level: usize, attachment: Attachment) -> RecordId {
        let id = self.records.len();
        if attachment == Attachment::Pending {
            self.requests[level].insert(id);
        }
        self.records.push(Some(ClauseRecord { clause, level, attachment }));
        self.deltas[level].push(id);
        id
    }

    pub(crate) fn remove(&mut self, id: RecordId) -> ClauseRecord {
        let rec = self.records[id].take().expect("live record");
        self.deltas[rec.level].retain(|&r| r != id);
        self.requests[rec.level].remove(&id);
        rec
    }

    pub(crate) fn set_witness(&mut self, id: RecordId, w: Witness) {
        let rec = self.records[id].as_mut().expect("live record");
        self.requests[rec.level].remove(&id);
        rec.attachment = Attachment::Witness(w);
    }

    /// Replaces a witness by a pending request; returns the dropped witness.
    pub(crate) fn set_pending(&mut self, id: RecordId) -> Option<Witness> {
        let rec = self.records[id].as_mut().expect("live record");
        self.requests[rec.level].insert(id);
        match std::mem::replace(&mut rec.attachment, Attachment::Pending) {
            Attachment::Witness(w) => Some(w),
            _ => None,
        }
    }

    pub(crate) fn pop_request(&mut self, j: usize) -> Option<RecordId> {
        self.requests[j].pop_first()
    }
}

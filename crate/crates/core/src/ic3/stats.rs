use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SatCalls {
    pub bad: u64,
    pub block: u64,
    pub minimize: u64,
    pub push: u64,
    pub convergence: u64,
    pub debug: u64,
}

impl SatCalls {
    pub fn total(&self) -> u64 {
        self.bad + self.block + self.minimize + self.push + self.convergence + self.debug
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub sat_calls: SatCalls,
    pub conflicts: u64,
    pub clauses_learned: u64,
    pub clauses_pushed: u64,
    pub clauses_subsumed: u64,
    pub insertions_skipped: u64,
    pub witnesses_created: u64,
    pub witnesses_killed: u64,
    pub obligations_created: u64,
    pub obligations_rescheduled: u64,
    pub obligations_subsumed: u64,
    pub convergence_rejected: u64,
    pub frames: usize,
}

impl fmt::Display for Stats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.sat_calls;
        writeln!(f, "frames               {}", self.frames)?;
        writeln!(
            f,
            "sat calls            {} (bad {}, block {}, minimize {}, push {}, convergence {}, debug {})",
            s.total(),
            s.bad,
            s.block,
            s.minimize,
            s.push,
            s.convergence,
            s.debug
        )?;
        writeln!(f, "conflicts            {}", self.conflicts)?;
        writeln!(f, "clauses learned      {}", self.clauses_learned)?;
        writeln!(f, "clauses pushed       {}", self.clauses_pushed)?;
        writeln!(f, "clauses subsumed     {}", self.clauses_subsumed)?;
        writeln!(f, "insertions skipped   {}", self.insertions_skipped)?;
        writeln!(f, "witnesses created    {}", self.witnesses_created)?;
        writeln!(f, "witnesses killed     {}", self.witnesses_killed)?;
        writeln!(f, "obligations created  {}", self.obligations_created)?;
        writeln!(f, "obligations moved    {}", self.obligations_rescheduled)?;
        writeln!(f, "obligations subsumed {}", self.obligations_subsumed)?;
        write!(f, "convergence rejected {}", self.convergence_rejected)
    }
}

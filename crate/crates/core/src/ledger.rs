//! Instrumented cost accounting.
//!
//! The ledger mirrors the two switches of the cost recursion: `count_draws`
//! tallies scalar random variables, `count_evals` tallies drift evaluations.
//! Tallies only ever grow and stay zero while their switch is off.

use std::collections::BTreeSet;
use std::ops::AddAssign;

use crate::rng::{IndexKey, Tag};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostTally {
    pub scalar_draws: u64,
    pub drift_evals: u64,
}

impl CostTally {
    pub fn total(&self) -> u64 {
        self.scalar_draws + self.drift_evals
    }
}

impl AddAssign for CostTally {
    fn add_assign(&mut self, rhs: Self) {
        self.scalar_draws += rhs.scalar_draws;
        self.drift_evals += rhs.drift_evals;
    }
}

#[derive(Clone, Debug, Default)]
pub struct CostLedger {
    count_draws: bool,
    count_evals: bool,
    tally: CostTally,
    trace: Option<BTreeSet<(Vec<u64>, u64, Tag)>>,
}

impl CostLedger {
    pub fn new(count_draws: bool, count_evals: bool) -> Self {
        CostLedger {
            count_draws,
            count_evals,
            ..Default::default()
        }
    }

    /// Counts both kinds of cost.
    pub fn full() -> Self {
        CostLedger::new(true, true)
    }

    /// Counts nothing.
    pub fn disabled() -> Self {
        CostLedger::new(false, false)
    }

    /// Also records every `(key, tag)` address from which randomness is drawn.
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(BTreeSet::new());
        self
    }

    pub fn flags(&self) -> (bool, bool) {
        (self.count_draws, self.count_evals)
    }

    pub fn charge_draws(&mut self, n: u64) {
        if self.count_draws {
            self.tally.scalar_draws += n;
        }
    }

    pub fn charge_evals(&mut self, n: u64) {
        if self.count_evals {
            self.tally.drift_evals += n;
        }
    }

    pub(crate) fn record(&mut self, key: &IndexKey, tag: Tag) {
        if let Some(trace) = self.trace.as_mut() {
            trace.insert((key.path().to_vec(), key.seed(), tag));
        }
    }

    pub fn snapshot(&self) -> CostTally {
        self.tally
    }

    pub fn scalar_draws(&self) -> u64 {
        self.tally.scalar_draws
    }

    pub fn drift_evals(&self) -> u64 {
        self.tally.drift_evals
    }

    /// Recorded addresses as `(path, seed, tag)`, if tracing is on.
    pub fn addresses(&self) -> Option<&BTreeSet<(Vec<u64>, u64, Tag)>> {
        self.trace.as_ref()
    }

    /// Folds another ledger in. Addition is commutative, so the merge order
    /// of parallel branches never changes the totals.
    pub fn merge(&mut self, other: &CostLedger) {
        self.tally += other.tally;
        if let (Some(mine), Some(theirs)) = (self.trace.as_mut(), other.trace.as_ref()) {
            mine.extend(theirs.iter().cloned());
        }
    }
}

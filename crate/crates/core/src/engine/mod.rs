//! Exact event-driven simulation.
//!
//! Between two consecutive events every job holds a constant allocation, so
//! every active phase progresses at a constant rate and the next event time
//! is computed in closed form. Policies see only an [`ObservableState`]:
//! the clock and the ids of the jobs that are still alive.

mod format;

mod sim;
mod trace;

use thiserror::Error;

use crate::model::{Instance, JobRef, Rational, Violation};

pub use format::TraceFormatError;
pub use sim::{simulate, simulate_clairvoyant, SimOptions, DEFAULT_MAX_EVENTS};
pub use trace::{
    compute_metrics, replay_job, validate_trace, Event, EventKind, Infeasible, Metrics, Piece,
    ProgressSegment, Replay, ScheduleTrace, Subject, TraceViolation,
};

#[derive(Debug, Clone, Copy)]
pub struct AliveJob<'a> {
    pub job: JobRef,
    pub id: &'a str,
}

#[derive(Debug, Clone)]
pub struct AliveSet<'a> {
    pub index: usize,
    pub id: &'a str,
    /// Alive jobs of the set, in instance order.
    pub jobs: Vec<AliveJob<'a>>,
}

/// Everything a non-clairvoyant policy is allowed to see. Phase, work and
/// speed-up data are deliberately absent.
#[derive(Debug, Clone)]
pub struct ObservableState<'a> {
    pub now: &'a Rational,
    /// Sets with at least one alive job, in instance order.
    pub alive_sets: Vec<AliveSet<'a>>,
}

impl ObservableState<'_> {
    pub fn alive_job_count(&self) -> usize {
        self.alive_sets.iter().map(|s| s.jobs.len()).sum()
    }

    pub fn alive_set_count(&self) -> usize {
        self.alive_sets.len()
    }

    pub fn alive_jobs(&self) -> impl Iterator<Item = &AliveJob<'_>> {
        self.alive_sets.iter().flat_map(|s| s.jobs.iter())
    }
}

/// Processor shares handed out by a policy. Alive jobs without a share get
/// nothing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Allocation {
    shares: Vec<(JobRef, Rational)>,
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, job: JobRef, rho: Rational) {
        self.shares.push((job, rho));
    }

    pub fn iter(&self) -> impl Iterator<Item = &(JobRef, Rational)> {
        self.shares.iter()
    }

    pub fn len(&self) -> usize {
        self.shares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn get(&self, job: JobRef) -> Option<&Rational> {
        self.shares.iter().find(|(j, _)| *j == job).map(|(_, r)| r)
    }

    pub fn total(&self) -> Rational {
        self.shares.iter().map(|(_, r)| r).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("no alive jobs to allocate to")]
    NoAliveJobs,
    #[error("{0}")]
    Other(String),
}

/// A non-clairvoyant policy: a pure function of the observable state.
pub trait Policy: Send + Sync {
    fn name(&self) -> &str;

    /// Splits `budget` processors among the alive jobs.
    fn allocate(
        &self,
        state: &ObservableState<'_>,
        budget: &Rational,
    ) -> Result<Allocation, PolicyError>;
}

/// Hidden progress of one job, visible to clairvoyant policies only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobProgress {
    /// Index of the current phase; equals the phase count once done.
    pub phase: usize,
    pub done: bool,
}

pub struct ClairvoyantView<'a> {
    pub instance: &'a Instance,
    pub state: &'a ObservableState<'a>,
    progress: &'a [JobProgress],
    offsets: &'a [usize],
    remaining: &'a dyn Fn(usize) -> Rational,
}

impl ClairvoyantView<'_> {
    pub fn progress(&self, job: JobRef) -> JobProgress {
        self.progress[self.offsets[job.set] + job.job]
    }

    /// Work left in the job's current phase.
    pub fn remaining(&self, job: JobRef) -> Rational {
        (self.remaining)(self.offsets[job.set] + job.job)
    }
}

/// A policy that may read the full instance and every job's progress.
pub trait ClairvoyantPolicy: Send + Sync {
    fn name(&self) -> &str;

    fn allocate(
        &self,
        view: &ClairvoyantView<'_>,
        budget: &Rational,
    ) -> Result<Allocation, PolicyError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid instance: {} violation(s), first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
    #[error("speed must be positive, got {0}")]
    BadSpeed(Rational),
    #[error("policy failed at t={time}: {source}")]
    Policy { time: Rational, source: PolicyError },
    #[error("negative allocation to {job} at t={time}")]
    NegativeAllocation { time: Rational, job: String },
    #[error("allocation to {job} at t={time}, which is not an alive job")]
    NotAlive { time: Rational, job: String },
    #[error("{job} allocated twice at t={time}")]
    DuplicateShare { time: Rational, job: String },
    #[error("capacity exceeded at t={time}: allocated {total} of {budget}")]
    Capacity {
        time: Rational,
        total: Rational,
        budget: Rational,
    },
    #[error("stall at t={time}: no alive job makes progress")]
    Stall { time: Rational },
    #[error("runaway simulation: more than {limit} events")]
    Runaway { limit: usize },
}

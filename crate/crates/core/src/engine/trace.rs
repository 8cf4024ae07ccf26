use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::{Instance, JobRef, Phase, Rational};

/// Constant allocation over `[grid[start], grid[end])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub start: usize,
    pub end: usize,
    pub rho: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    PhaseComplete,
    JobComplete,
    SetComplete,
}

impl EventKind {
    pub fn tag(self) -> &'static str {
        match self {
            EventKind::PhaseComplete => "phase-complete",
            EventKind::JobComplete => "job-complete",
            EventKind::SetComplete => "set-complete",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Subject {
    /// Zero-based phase index.
    Phase(JobRef, usize),
    Job(JobRef),
    Set(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub time: Rational,
    pub subject: Subject,
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self.subject {
            Subject::Phase(..) => EventKind::PhaseComplete,
            Subject::Job(_) => EventKind::JobComplete,
            Subject::Set(_) => EventKind::SetComplete,
        }
    }

    fn order_key(&self) -> (EventKind, Subject) {
        (self.kind(), self.subject)
    }
}

fn event_order(a: &Event, b: &Event) -> Ordering {
    a.time
        .cmp(&b.time)
        .then_with(|| a.order_key().cmp(&b.order_key()))
}

/// Per-job piecewise-constant allocations on a shared time grid, plus the
/// event log and completion times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleTrace {
    pub(crate) grid: Vec<Rational>,
    pub(crate) offsets: Vec<usize>,
    pub(crate) pieces: Vec<Vec<Piece>>,
    pub(crate) events: Vec<Event>,
    pub(crate) job_completions: Vec<Rational>,
    pub(crate) set_completions: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metrics {
    pub flowtime: Rational,
    pub makespan: Rational,
    pub setflowtime: Rational,
    pub per_set: Vec<Rational>,
    /// Flat, in instance order.
    pub per_job: Vec<Rational>,
}

pub fn compute_metrics(trace: &ScheduleTrace) -> Metrics {
    Metrics {
        flowtime: trace.job_completions.iter().sum(),
        makespan: trace
            .job_completions
            .iter()
            .max()
            .cloned()
            .unwrap_or_default(),
        setflowtime: trace.set_completions.iter().sum(),
        per_set: trace.set_completions.clone(),
        per_job: trace.job_completions.clone(),
    }
}

pub(crate) fn offsets_of(shape: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(shape.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for n in shape {
        acc += n;
        offsets.push(acc);
    }
    offsets
}

impl ScheduleTrace {
    /// Builds a trace from explicit `(from, to, rho)` pieces, one list per
    /// job in flat instance order. Nothing is checked here; see
    /// [`validate_trace`].
    pub fn from_parts(
        shape: &[usize],
        pieces: Vec<Vec<(Rational, Rational, Rational)>>,
        mut events: Vec<Event>,
        job_completions: Vec<Rational>,
        set_completions: Vec<Rational>,
    ) -> ScheduleTrace {
        let mut grid: Vec<Rational> = vec![Rational::zero()];
        for (a, b, _) in pieces.iter().flatten() {
            grid.push(a.clone());
            grid.push(b.clone());
        }
        grid.extend(job_completions.iter().cloned());
        grid.extend(set_completions.iter().cloned());
        grid.extend(events.iter().map(|e| e.time.clone()));
        grid.sort();
        grid.dedup();
        let index = |t: &Rational| grid.binary_search(t).expect("grid holds every endpoint");
        let pieces = pieces
            .iter()
            .map(|list| {
                list.iter()
                    .map(|(a, b, rho)| Piece {
                        start: index(a),
                        end: index(b),
                        rho: rho.clone(),
                    })
                    .collect()
            })
            .collect();
        events.sort_by(event_order);
        ScheduleTrace {
            offsets: offsets_of(shape),
            grid,
            pieces,
            events,
            job_completions,
            set_completions,
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn set_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn job_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn flat(&self, job: JobRef) -> usize {
        self.offsets[job.set] + job.job
    }

    pub fn job_refs(&self) -> impl Iterator<Item = JobRef> + '_ {
        (0..self.set_count())
            .flat_map(move |s| (0..self.offsets[s + 1] - self.offsets[s]).map(move |j| JobRef::new(s, j)))
    }

    /// Breakpoints shared by all pieces, strictly increasing from zero.
    pub fn grid(&self) -> &[Rational] {
        &self.grid
    }

    pub fn pieces(&self, job: JobRef) -> &[Piece] {
        &self.pieces[self.flat(job)]
    }

    /// Pieces of `job` as `(from, to, rho)`.
    pub fn timed_pieces(
        &self,
        job: JobRef,
    ) -> impl Iterator<Item = (&Rational, &Rational, &Rational)> + '_ {
        self.pieces(job)
            .iter()
            .map(move |p| (&self.grid[p.start], &self.grid[p.end], &p.rho))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn job_completion(&self, job: JobRef) -> &Rational {
        &self.job_completions[self.flat(job)]
    }

    pub fn set_completion(&self, set: usize) -> &Rational {
        &self.set_completions[set]
    }

    pub fn metrics(&self) -> Metrics {
        compute_metrics(self)
    }

    /// Pieces with zero-length and zero-allocation spans dropped and equal
    /// neighbours merged. Gaps mean "no processors".
    pub fn canonical_pieces(&self, job: JobRef) -> Vec<(Rational, Rational, Rational)> {
        let mut out: Vec<(Rational, Rational, Rational)> = Vec::new();
        for (a, b, rho) in self.timed_pieces(job) {
            if a >= b || rho.is_zero() {
                continue;
            }
            match out.last_mut() {
                Some(last) if &last.1 == a && &last.2 == rho => last.1 = b.clone(),
                _ => out.push((a.clone(), b.clone(), rho.clone())),
            }
        }
        out
    }

    /// Same allocation functions and same job and set completion times.
    /// Phase-level events are not compared: they depend on the hidden phase
    /// structure.
    pub fn same_schedule(&self, other: &ScheduleTrace) -> bool {
        self.offsets == other.offsets
            && self.job_completions == other.job_completions
            && self.set_completions == other.set_completions
            && self
                .job_refs()
                .all(|j| self.canonical_pieces(j) == other.canonical_pieces(j))
    }

    /// Largest total allocation over any grid segment.
    pub fn peak_allocation(&self) -> Rational {
        segment_totals(self)
            .into_iter()
            .max()
            .unwrap_or_default()
    }

    /// Whether every job's allocation is non-decreasing over its lifetime.
    pub fn allocations_non_decreasing(&self) -> bool {
        self.job_refs().all(|j| {
            let c = self.job_completion(j);
            let mut prev = Rational::zero();
            let mut t = Rational::zero();
            for (a, b, rho) in self.timed_pieces(j) {
                if a >= c {
                    break;
                }
                // a gap before this piece means zero allocation
                if a > &t && prev.is_positive() {
                    return false;
                }
                if rho < &prev {
                    return false;
                }
                prev = rho.clone();
                t = b.clone();
            }
            true
        })
    }

    /// Alive job count on each grid segment `[grid[k], grid[k+1])`.
    pub fn alive_counts(&self) -> Vec<usize> {
        let segments = self.grid.len().saturating_sub(1);
        let mut delta = vec![0i64; segments + 1];
        for c in &self.job_completions {
            let end = self.grid.partition_point(|g| g < c);
            if end > 0 {
                delta[0] += 1;
                delta[end.min(segments)] -= 1;
            }
        }
        let mut acc = 0i64;
        (0..segments)
            .map(|k| {
                acc += delta[k];
                acc as usize
            })
            .collect()
    }
}

/// A job whose phases do not fit the allocation it was given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("job {0:?} does not complete within its allocation")]
pub struct Infeasible(pub JobRef);

impl ScheduleTrace {
    /// Runs every job of `inst` against the given allocations (flat
    /// instance order) and records the resulting completions and events.
    /// Allocation after a job completes is cut off.
    pub fn from_allocations(
        inst: &Instance,
        pieces: Vec<Vec<(Rational, Rational, Rational)>>,
    ) -> Result<ScheduleTrace, Infeasible> {
        let mut kept = Vec::with_capacity(pieces.len());
        let mut events = Vec::new();
        let mut completions = Vec::with_capacity(pieces.len());
        for (job, list) in inst.job_refs().zip(pieces) {
            let replay = replay_job(&inst.job(job).phases, list.iter().map(|(a, b, r)| (a, b, r)));
            let Some(c) = replay.completion else {
                return Err(Infeasible(job));
            };
            for (k, t) in replay.phase_ends.iter().enumerate() {
                events.push(Event {
                    time: t.clone(),
                    subject: Subject::Phase(job, k),
                });
            }
            events.push(Event {
                time: c.clone(),
                subject: Subject::Job(job),
            });
            kept.push(
                list.into_iter()
                    .filter(|(a, _, _)| a < &c)
                    .map(|(a, b, r)| if b > c { (a, c.clone(), r) } else { (a, b, r) })
                    .collect(),
            );
            completions.push(c);
        }
        let shape = inst.shape();
        let offsets = offsets_of(&shape);
        let sets: Vec<Rational> = (0..shape.len())
            .map(|s| {
                completions[offsets[s]..offsets[s + 1]]
                    .iter()
                    .max()
                    .cloned()
                    .unwrap_or_default()
            })
            .collect();
        for (s, c) in sets.iter().enumerate() {
            events.push(Event {
                time: c.clone(),
                subject: Subject::Set(s),
            });
        }
        Ok(ScheduleTrace::from_parts(&shape, kept, events, completions, sets))
    }
}

fn segment_totals(trace: &ScheduleTrace) -> Vec<Rational> {
    let segments = trace.grid.len().saturating_sub(1);
    let mut totals = vec![Rational::zero(); segments];
    for list in &trace.pieces {
        for p in list {
            for total in totals.iter_mut().take(p.end.min(segments)).skip(p.start) {
                *total += &p.rho;
            }
        }
    }
    totals
}

/// One stretch of a job's life with constant phase and allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgressSegment {
    pub from: Rational,
    pub to: Rational,
    pub rho: Rational,
    pub phase: usize,
    pub rate: Rational,
    /// Work already done inside `phase` at `from`.
    pub done_before: Rational,
}

/// Result of running a job's phases against a fixed allocation function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub segments: Vec<ProgressSegment>,
    /// Completion time of each phase reached.
    pub phase_ends: Vec<Rational>,
    pub completion: Option<Rational>,
    /// Positive allocation after completion.
    pub overrun: bool,
}

struct Replayer<'a> {
    phases: &'a [Phase],
    t: Rational,
    k: usize,
    done: Rational,
    out: Replay,
}

impl Replayer<'_> {
    fn skip_finished(&mut self) {
        while self.k < self.phases.len() && self.done == self.phases[self.k].work {
            self.out.phase_ends.push(self.t.clone());
            self.k += 1;
            self.done = Rational::zero();
        }
        if self.k == self.phases.len() && self.out.completion.is_none() {
            self.out.completion = Some(self.t.clone());
        }
    }

    /// Runs `[t, to)` at allocation `rho`; `to = None` means forever.
    /// Returns false if the job can never finish.
    fn run(&mut self, to: Option<&Rational>, rho: &Rational) -> bool {
        while self.k < self.phases.len() && to.is_none_or(|to| &self.t < to) {
            let phase = &self.phases[self.k];
            let rate = phase.speedup.rate(rho);
            let need = &phase.work - &self.done;
            if rate.is_positive() {
                let finish = &self.t + &need / &rate;
                if to.is_none_or(|to| &finish <= to) {
                    self.push(finish.clone(), rho, rate);
                    self.t = finish;
                    self.done = phase.work.clone();
                    self.skip_finished();
                    continue;
                }
            } else if to.is_none() {
                return false;
            }
            let to = to.expect("bounded here").clone();
            let progress = &rate * (&to - &self.t);
            self.push(to.clone(), rho, rate);
            self.done += progress;
            self.t = to;
        }
        if self.k == self.phases.len() && rho.is_positive() && to.is_none_or(|to| &self.t < to) {
            self.out.overrun = true;
        }
        true
    }

    fn push(&mut self, to: Rational, rho: &Rational, rate: Rational) {
        if to > self.t {
            self.out.segments.push(ProgressSegment {
                from: self.t.clone(),
                to,
                rho: rho.clone(),
                phase: self.k,
                rate,
                done_before: self.done.clone(),
            });
        }
    }
}

/// Runs `phases` against time-sorted, non-overlapping `(from, to, rho)`
/// pieces starting at time zero. Gaps and the time after the last piece
/// count as zero allocation, where sequential work still progresses.
pub fn replay_job<'p>(
    phases: &[Phase],
    pieces: impl IntoIterator<Item = (&'p Rational, &'p Rational, &'p Rational)>,
) -> Replay {
    let mut r = Replayer {
        phases,
        t: Rational::zero(),
        k: 0,
        done: Rational::zero(),
        out: Replay {
            segments: Vec::new(),
            phase_ends: Vec::new(),
            completion: None,
            overrun: false,
        },
    };
    r.skip_finished();
    let zero = Rational::zero();
    for (a, b, rho) in pieces {
        if a >= b {
            continue;
        }
        if r.k == phases.len() {
            if rho.is_positive() {
                r.out.overrun = true;
            }
            continue;
        }
        if a > &r.t {
            r.run(Some(a), &zero);
        }
        if r.k < phases.len() {
            r.run(Some(b), rho);
        } else if rho.is_positive() {
            r.out.overrun = true;
        }
    }
    if r.k < phases.len() {
        r.run(None, &zero);
    }
    r.out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceViolation {
    #[error("trace shape {trace:?} does not match instance shape {instance:?}")]
    Shape {
        trace: Vec<usize>,
        instance: Vec<usize>,
    },
    #[error("{job}: empty or reversed piece #{index}")]
    BadPiece { job: String, index: usize },
    #[error("{job}: piece #{index} overlaps its predecessor")]
    Overlap { job: String, index: usize },
    #[error("{job}: negative allocation in piece #{index}")]
    NegativeAllocation { job: String, index: usize },
    #[error("capacity exceeded on [{from}, {to}): {total} > {budget}")]
    Capacity {
        from: Rational,
        to: Rational,
        total: Rational,
        budget: Rational,
    },
    #[error("{job}: phase {phase} never completes")]
    Incomplete { job: String, phase: usize },
    #[error("{job}: recorded completion {recorded}, executed work completes at {replayed}")]
    CompletionMismatch {
        job: String,
        recorded: Rational,
        replayed: Rational,
    },
    #[error("{job}: processors allotted after completion")]
    AfterCompletion { job: String },
    #[error("set {set}: recorded completion {recorded}, jobs complete by {expected}")]
    SetCompletion {
        set: String,
        recorded: Rational,
        expected: Rational,
    },
    #[error("event log does not match the executed work ({detail})")]
    Events { detail: String },
}

/// Checks capacity at every breakpoint, executed work per phase, phase
/// order, recorded completions and the event log.
pub fn validate_trace(
    inst: &Instance,
    trace: &ScheduleTrace,
    budget: &Rational,
) -> Vec<TraceViolation> {
    let mut out = Vec::new();
    if trace.shape() != inst.shape() {
        out.push(TraceViolation::Shape {
            trace: trace.shape(),
            instance: inst.shape(),
        });
        return out;
    }
    for (k, total) in segment_totals(trace).iter().enumerate() {
        if total > budget {
            out.push(TraceViolation::Capacity {
                from: trace.grid[k].clone(),
                to: trace.grid[k + 1].clone(),
                total: total.clone(),
                budget: budget.clone(),
            });
        }
    }
    let mut expected_events = Vec::new();
    let mut replayed_completion = Vec::with_capacity(trace.job_count());
    for job in inst.job_refs() {
        let path = inst.job_path(job);
        let pieces = trace.pieces(job);
        let mut sound = true;
        for (i, p) in pieces.iter().enumerate() {
            if p.start >= p.end {
                out.push(TraceViolation::BadPiece {
                    job: path.clone(),
                    index: i,
                });
                sound = false;
            }
            if p.rho.is_negative() {
                out.push(TraceViolation::NegativeAllocation {
                    job: path.clone(),
                    index: i,
                });
                sound = false;
            }
            if i > 0 && p.start < pieces[i - 1].end {
                out.push(TraceViolation::Overlap {
                    job: path.clone(),
                    index: i,
                });
                sound = false;
            }
        }
        if !sound {
            replayed_completion.push(None);
            continue;
        }
        let phases = &inst.job(job).phases;
        let replay = replay_job(phases, trace.timed_pieces(job));
        match &replay.completion {
            None => out.push(TraceViolation::Incomplete {
                job: path.clone(),
                phase: replay.phase_ends.len(),
            }),
            Some(c) => {
                let recorded = trace.job_completion(job);
                if c != recorded {
                    out.push(TraceViolation::CompletionMismatch {
                        job: path.clone(),
                        recorded: recorded.clone(),
                        replayed: c.clone(),
                    });
                }
                if replay.overrun {
                    out.push(TraceViolation::AfterCompletion { job: path.clone() });
                }
            }
        }
        for (k, t) in replay.phase_ends.iter().enumerate() {
            expected_events.push(Event {
                time: t.clone(),
                subject: Subject::Phase(job, k),
            });
        }
        if let Some(c) = &replay.completion {
            expected_events.push(Event {
                time: c.clone(),
                subject: Subject::Job(job),
            });
        }
        replayed_completion.push(replay.completion);
    }
    for (s, set) in inst.sets.iter().enumerate() {
        let expected = (trace.offsets[s]..trace.offsets[s + 1])
            .map(|f| trace.job_completions[f].clone())
            .max()
            .unwrap_or_default();
        if trace.set_completions[s] != expected {
            out.push(TraceViolation::SetCompletion {
                set: set.id.clone(),
                recorded: trace.set_completions[s].clone(),
                expected: expected.clone(),
            });
        }
        let replayed: Option<Vec<&Rational>> = (trace.offsets[s]..trace.offsets[s + 1])
            .map(|f| replayed_completion[f].as_ref())
            .collect();
        if let Some(max) = replayed.and_then(|v| v.into_iter().max().cloned()) {
            expected_events.push(Event {
                time: max,
                subject: Subject::Set(s),
            });
        }
    }
    expected_events.sort_by(event_order);
    let mut recorded = trace.events.clone();
    recorded.sort_by(event_order);
    if recorded != expected_events {
        let detail = recorded
            .iter()
            .zip(&expected_events)
            .find(|(a, b)| a != b)
            .map(|(a, b)| {
                format!(
                    "recorded {} {} at {}, expected {} {} at {}",
                    a.kind(),
                    super::format::subject_name(inst, &a.subject),
                    a.time,
                    b.kind(),
                    super::format::subject_name(inst, &b.subject),
                    b.time
                )
            })
            .unwrap_or_else(|| {
                format!(
                    "{} events recorded, {} expected",
                    recorded.len(),
                    expected_events.len()
                )
            });
        out.push(TraceViolation::Events { detail });
    }
    out
}

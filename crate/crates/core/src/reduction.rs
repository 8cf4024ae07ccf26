//! Instance transformations and schedule substitution.
//!
//! * [`frontload`] moves all parallel work of a job ahead of its sequential
//!   work.
//! * [`reduce_to_parseq`] turns any instance into a (Par-Seq)* one that
//!   behaves identically under one schedule and still fits another.
//! * [`collapse_sets_to_jobs`] replaces each set by one job that fits the
//!   processors its set receives under Equi∘Equi.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    replay_job, simulate, validate_trace, Infeasible, ScheduleTrace, SimError, SimOptions,
};
use crate::model::{Instance, Job, JobRef, ModelError, Phase, Rational};
use crate::schedulers::{Equi, EquiEqui};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("infeasible substitution: {0}")]
    Infeasible(#[from] Infeasible),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("trace was not produced by equi-equi on this instance")]
    NotEquiEqui,
    #[error("postcondition violated: {0}")]
    Postcondition(String),
}

/// Each job becomes `[par par(J), seq seq(J)]` with empty phases dropped.
pub fn frontload(inst: &Instance) -> Result<Instance, ModelError> {
    inst.require_par_seq_star()?;
    Ok(inst.map_jobs(|_, job| {
        let phases = vec![
            Phase::par(job.par().expect("class checked")),
            Phase::seq(job.seq().expect("class checked")),
        ];
        Job::new(job.id.clone(), phases).normalize().phases
    }))
}

/// Which old jobs feed each new job. Allocations of several old jobs are
/// summed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobMapping {
    sources: Vec<Vec<usize>>,
}

impl JobMapping {
    pub fn identity(job_count: usize) -> Self {
        JobMapping {
            sources: (0..job_count).map(|f| vec![f]).collect(),
        }
    }

    /// One new job per set, fed by all jobs of that set.
    pub fn collapse_sets(shape: &[usize]) -> Self {
        let mut start = 0;
        let sources = shape
            .iter()
            .map(|&n| {
                let v = (start..start + n).collect();
                start += n;
                v
            })
            .collect();
        JobMapping { sources }
    }

    pub fn sources(&self) -> &[Vec<usize>] {
        &self.sources
    }
}

fn flat_refs(trace: &ScheduleTrace) -> Vec<JobRef> {
    trace.job_refs().collect()
}

/// Runs the jobs of `new_inst` on the allocations of `trace`, as given by
/// `mapping` (flat instance order on both sides).
pub fn substitute(
    trace: &ScheduleTrace,
    new_inst: &Instance,
    mapping: &JobMapping,
) -> Result<ScheduleTrace, ReductionError> {
    if mapping.sources.len() != new_inst.job_count() {
        return Err(ReductionError::InvalidTrace(format!(
            "mapping has {} targets for {} jobs",
            mapping.sources.len(),
            new_inst.job_count()
        )));
    }
    let refs = flat_refs(trace);
    if mapping.sources.iter().flatten().any(|&f| f >= refs.len()) {
        return Err(ReductionError::InvalidTrace(
            "mapping refers to a job outside the trace".into(),
        ));
    }
    let grid = trace.grid();
    let pieces = mapping
        .sources
        .iter()
        .map(|src| {
            if let [f] = src.as_slice() {
                return trace
                    .timed_pieces(refs[*f])
                    .map(|(a, b, r)| (a.clone(), b.clone(), r.clone()))
                    .collect();
            }
            let mut delta: BTreeMap<usize, Rational> = BTreeMap::new();
            for &f in src {
                for p in trace.pieces(refs[f]) {
                    *delta.entry(p.start).or_default() += &p.rho;
                    *delta.entry(p.end).or_default() -= &p.rho;
                }
            }
            let mut out: Vec<(Rational, Rational, Rational)> = Vec::new();
            let mut level = Rational::zero();
            let mut prev: Option<usize> = None;
            for (g, d) in delta {
                if let Some(p) = prev {
                    if level.is_positive() {
                        match out.last_mut() {
                            Some(last) if last.1 == grid[p] && last.2 == level => {
                                last.1 = grid[g].clone()
                            }
                            _ => out.push((grid[p].clone(), grid[g].clone(), level.clone())),
                        }
                    }
                }
                level += d;
                prev = Some(g);
            }
            out
        })
        .collect();
    Ok(ScheduleTrace::from_allocations(new_inst, pieces)?)
}

/// Outcome of [`reduce_to_parseq`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubstitutionReport {
    /// The reduced jobs on the first schedule's allocations complete
    /// exactly like the original jobs.
    pub preserved_schedule: bool,
    /// The reduced jobs fit the second schedule's allocations on `p`
    /// processors.
    pub reference_valid: bool,
    /// Reduced phase lists keyed by job path.
    pub per_job_phase_lists: BTreeMap<String, serde_json::Value>,
    /// Reasons for any `false` above.
    pub notes: Vec<String>,
}

impl SubstitutionReport {
    pub fn holds(&self) -> bool {
        self.preserved_schedule && self.reference_valid
    }
}

/// Work-coordinate view of one replayed job: positive-length stretches and
/// the time spent at a standstill at a given amount of work.
struct WorkProfile {
    /// `(x0, x1, rho, rate)` with `x1 > x0`.
    runs: Vec<(Rational, Rational, Rational, Rational)>,
    /// `(x, duration, rho)` for stretches with zero progress.
    flats: Vec<(Rational, Rational, Rational)>,
}

fn profile(job: &Job, trace: &ScheduleTrace, r: JobRef, side: &str) -> Result<WorkProfile, ReductionError> {
    let replay = replay_job(&job.phases, trace.timed_pieces(r));
    if replay.completion.is_none() {
        return Err(ReductionError::InvalidTrace(format!(
            "{side} schedule does not complete job {}",
            job.id
        )));
    }
    let mut start = Vec::with_capacity(job.phases.len());
    let mut acc = Rational::zero();
    for p in &job.phases {
        start.push(acc.clone());
        acc += &p.work;
    }
    let mut runs = Vec::new();
    let mut flats = Vec::new();
    for seg in replay.segments {
        let x0 = &start[seg.phase] + &seg.done_before;
        let dt = &seg.to - &seg.from;
        if seg.rate.is_zero() {
            flats.push((x0, dt, seg.rho));
        } else {
            let x1 = &x0 + &seg.rate * &dt;
            runs.push((x0, x1, seg.rho, seg.rate));
        }
    }
    Ok(WorkProfile { runs, flats })
}

/// Phases of the reduced job for one original job.
fn reduce_job(job: &Job, a: &WorkProfile, o: &WorkProfile) -> Vec<Phase> {
    let mut out = Vec::new();
    let total: Rational = job.total_work();
    let mut bounds: Vec<Rational> = a
        .runs
        .iter()
        .chain(&o.runs)
        .flat_map(|r| [r.0.clone(), r.1.clone()])
        .chain(job.phases.iter().scan(Rational::zero(), |acc, p| {
            *acc += &p.work;
            Some(acc.clone())
        }))
        .collect();
    bounds.push(Rational::zero());
    bounds.retain(|x| x <= &total);
    bounds.sort();
    bounds.dedup();
    let flat_time = |p: &WorkProfile, x: &Rational| -> Rational {
        p.flats.iter().filter(|f| &f.0 == x).map(|f| &f.1).sum()
    };
    let run_at = |p: &WorkProfile, x: &Rational| -> Option<(Rational, Rational)> {
        let i = p.runs.partition_point(|r| &r.1 <= x);
        p.runs
            .get(i)
            .filter(|r| &r.0 <= x)
            .map(|r| (r.2.clone(), r.3.clone()))
    };
    let mut phase_end = Vec::new();
    let mut acc = Rational::zero();
    for p in &job.phases {
        acc += &p.work;
        phase_end.push(acc.clone());
    }
    for (i, x) in bounds.iter().enumerate() {
        // standstill of the first schedule at x: absorb it into a
        // sequential phase only if the second schedule waits as long
        let wait_a = flat_time(a, x);
        if wait_a.is_positive() && flat_time(o, x) >= wait_a {
            out.push(Phase::seq(wait_a));
        }
        let Some(next) = bounds.get(i + 1) else {
            break;
        };
        let (Some((rho_a, rate_a)), Some((rho_o, rate_o))) = (run_at(a, x), run_at(o, x)) else {
            continue;
        };
        let dx = next - x;
        let dt_a = &dx / &rate_a;
        let phase = &job.phases[phase_end.partition_point(|e| e <= x)];
        let sequential = match rate_o.cmp(&rate_a) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                if phase.speedup.is_sequential() {
                    true
                } else if phase.speedup.is_fully_parallel() {
                    false
                } else {
                    rho_o <= rho_a || rho_a.is_zero()
                }
            }
        };
        if sequential {
            out.push(Phase::seq(dt_a));
        } else {
            out.push(Phase::par(&rho_a * &dt_a));
        }
    }
    Job::new(job.id.clone(), out).normalize().phases
}

/// Builds a (Par-Seq)* instance that behaves exactly like `inst` on the
/// allocations of `trace_a` and fits the allocations of `trace_o`.
///
/// Both traces must complete every job. The report re-runs both
/// substitutions and validates them.
pub fn reduce_to_parseq(
    inst: &Instance,
    trace_a: &ScheduleTrace,
    trace_o: &ScheduleTrace,
) -> Result<(Instance, SubstitutionReport), ReductionError> {
    inst.check()?;
    for (name, t) in [("first", trace_a), ("second", trace_o)] {
        if t.shape() != inst.shape() {
            return Err(ReductionError::InvalidTrace(format!(
                "{name} trace shape does not match the instance"
            )));
        }
    }
    let mut reduced = Vec::with_capacity(inst.job_count());
    for r in inst.job_refs() {
        let job = inst.job(r);
        let a = profile(job, trace_a, r, "first")?;
        let o = profile(job, trace_o, r, "second")?;
        reduced.push(reduce_job(job, &a, &o));
    }
    let mut it = reduced.into_iter();
    let j_prime = inst.map_jobs(|_, _| it.next().expect("one list per job"));

    let mut notes = Vec::new();
    let identity = JobMapping::identity(inst.job_count());
    let preserved_schedule = match substitute(trace_a, &j_prime, &identity) {
        Ok(sub) => {
            let budget = trace_a.peak_allocation();
            let same = sub.same_schedule(trace_a);
            let violations = validate_trace(&j_prime, &sub, &budget);
            if !same {
                notes.push("first schedule: completions or allocations differ".into());
            }
            notes.extend(violations.iter().map(|v| format!("first schedule: {v}")));
            same && violations.is_empty()
        }
        Err(e) => {
            notes.push(format!("first schedule: {e}"));
            false
        }
    };
    let reference_valid = match substitute(trace_o, &j_prime, &identity) {
        Ok(sub) => {
            let violations = validate_trace(&j_prime, &sub, &inst.processors);
            notes.extend(violations.iter().map(|v| format!("second schedule: {v}")));
            violations.is_empty()
        }
        Err(e) => {
            notes.push(format!("second schedule: {e}"));
            false
        }
    };
    let per_job_phase_lists = j_prime
        .job_refs()
        .map(|r| {
            (
                j_prime.job_path(r),
                crate::model::phases_to_value(&j_prime.job(r).phases),
            )
        })
        .collect();
    Ok((
        j_prime,
        SubstitutionReport {
            preserved_schedule,
            reference_valid,
            per_job_phase_lists,
            notes,
        },
    ))
}

/// Smallest `q` with `alpha^q * n < 1`, that is `1 + max{k : alpha^k n >= 1}`.
/// Bounds how many length-`seq` windows can cover the times where most
/// alive jobs of a set are sequential.
pub fn covering_limit(n: usize, alpha: &Rational) -> u64 {
    let n = Rational::from_integer(n.into());
    let mut q = 0u64;
    let mut level = n;
    while level >= Rational::one() {
        level *= alpha;
        q += 1;
    }
    q
}

/// Per grid segment of a trace of a Par-Seq instance: alive jobs and alive
/// jobs in a sequential phase, for each set.
pub(crate) struct PhaseCounts {
    /// `[set][segment]`
    pub alive: Vec<Vec<usize>>,
    pub sequential: Vec<Vec<usize>>,
}

pub(crate) fn phase_counts(inst: &Instance, trace: &ScheduleTrace) -> PhaseCounts {
    let grid = trace.grid();
    let segs = grid.len().saturating_sub(1);
    let idx = |t: &Rational| grid.partition_point(|g| g < t);
    let mut alive = vec![vec![0i64; segs + 1]; inst.sets.len()];
    let mut sequential = vec![vec![0i64; segs + 1]; inst.sets.len()];
    // sequential phase starts at the last phase-complete event before it
    let mut seq_start: BTreeMap<JobRef, Rational> = BTreeMap::new();
    for e in trace.events() {
        if let crate::engine::Subject::Phase(r, k) = e.subject {
            if inst.job(r).phases.get(k + 1).is_some_and(|p| p.speedup.is_sequential()) {
                seq_start.insert(r, e.time.clone());
            }
        }
    }
    for r in inst.job_refs() {
        let c = idx(trace.job_completion(r)).min(segs);
        alive[r.set][0] += 1;
        alive[r.set][c] -= 1;
        let first = &inst.job(r).phases[0];
        let start = if first.speedup.is_sequential() {
            Some(0)
        } else {
            seq_start.get(&r).map(|t| idx(t).min(segs))
        };
        if let Some(s) = start {
            if s < c {
                sequential[r.set][s] += 1;
                sequential[r.set][c] -= 1;
            }
        }
    }
    let sweep = |rows: Vec<Vec<i64>>| -> Vec<Vec<usize>> {
        rows.into_iter()
            .map(|row| {
                let mut acc = 0i64;
                row[..segs]
                    .iter()
                    .map(|d| {
                        acc += d;
                        acc as usize
                    })
                    .collect()
            })
            .collect()
    };
    PhaseCounts {
        alive: sweep(alive),
        sequential: sweep(sequential),
    }
}

/// Whether a segment with `seq` of `alive` jobs sequential counts as
/// "mostly sequential" for threshold `alpha`.
pub(crate) fn mostly_sequential(seq: usize, alive: usize, alpha: &Rational) -> bool {
    let seq = Rational::from_integer(seq.into());
    let alive = Rational::from_integer(alive.into());
    seq >= (Rational::one() - alpha) * alive
}

/// One job per set of the Par-Seq instance `s_prime`, built from its
/// Equi∘Equi trace: a mostly sequential stretch of the set becomes a
/// sequential phase of the same length, any other stretch becomes a fully
/// parallel phase equal to the processors the set received.
///
/// Checks that Equi on the result reproduces the set completions, that
/// `par(J_i) <= par(S'_i) / alpha` and that `seq(J_i) <= q * seq(S'_i)` with
/// `q` from [`covering_limit`].
pub fn collapse_sets_to_jobs(
    s_prime: &Instance,
    trace: &ScheduleTrace,
    alpha: &Rational,
) -> Result<Instance, ReductionError> {
    if !alpha.is_positive() || alpha >= &Rational::one() {
        return Err(ModelError::Domain(format!("alpha must lie in (0, 1), got {alpha}")).into());
    }
    s_prime.check()?;
    s_prime.require_par_seq()?;
    if trace.shape() != s_prime.shape() {
        return Err(ReductionError::NotEquiEqui);
    }
    let speed = trace.peak_allocation() / &s_prime.processors;
    if !speed.is_positive() && s_prime.job_refs().any(|r| trace.job_completion(r).is_positive()) {
        return Err(ReductionError::NotEquiEqui);
    }
    let speed = if speed.is_positive() { speed } else { Rational::one() };
    let expected = simulate(s_prime, &EquiEqui, &speed, &SimOptions::default())?;
    if !expected.same_schedule(trace) {
        return Err(ReductionError::NotEquiEqui);
    }
    let budget = &speed * &s_prime.processors;
    let grid = trace.grid();
    let counts = phase_counts(s_prime, trace);
    let alive_sets: Vec<usize> = (0..grid.len().saturating_sub(1))
        .map(|k| counts.alive.iter().filter(|row| row[k] > 0).count())
        .collect();
    let sets = s_prime
        .sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let mut phases = Vec::new();
            for k in 0..grid.len().saturating_sub(1) {
                let alive = counts.alive[i][k];
                if alive == 0 {
                    continue;
                }
                let dt = &grid[k + 1] - &grid[k];
                if mostly_sequential(counts.sequential[i][k], alive, alpha) {
                    phases.push(Phase::seq(dt));
                } else {
                    let share = &budget / Rational::from_integer(alive_sets[k].into());
                    phases.push(Phase::par(share * dt));
                }
            }
            if phases.is_empty() {
                phases.push(Phase::seq(Rational::zero()));
            }
            crate::model::JobSet::new(set.id.clone(), vec![Job::new(set.id.clone(), phases)])
        })
        .collect();
    let j = Instance::new(s_prime.processors.clone(), sets);

    let equi = simulate(&j, &Equi, &speed, &SimOptions::default())?;
    let substituted = substitute(trace, &j, &JobMapping::collapse_sets(&s_prime.shape()))?;
    if !equi.same_schedule(&substituted) {
        return Err(ReductionError::Postcondition(
            "Equi on the collapsed jobs differs from the summed Equi∘Equi schedule".into(),
        ));
    }
    for (i, set) in s_prime.sets.iter().enumerate() {
        if equi.job_completion(JobRef::new(i, 0)) != trace.set_completion(i) {
            return Err(ReductionError::Postcondition(format!(
                "set {} completes at {} but its job at {}",
                set.id,
                trace.set_completion(i),
                equi.job_completion(JobRef::new(i, 0))
            )));
        }
        let job = &j.sets[i].jobs[0];
        let par = job.par()?;
        let seq = job.seq()?;
        if par * alpha > set.par()? {
            return Err(ReductionError::Postcondition(format!(
                "set {}: parallel work exceeds par/alpha",
                set.id
            )));
        }
        let q = covering_limit(set.jobs.len(), alpha);
        if seq > set.seq()? * Rational::from_integer(q.into()) {
            return Err(ReductionError::Postcondition(format!(
                "set {}: sequential work exceeds {q} * seq",
                set.id
            )));
        }
    }
    Ok(j)
}

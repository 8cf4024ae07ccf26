//! Instances of phase-structured malleable jobs.
//!
//! An [`Instance`] is a non-empty list of [`JobSet`]s sharing `processors`
//! processors. Each [`Job`] runs through an ordered list of [`Phase`]s, and
//! each phase carries an amount of work and a [`Speedup`] that maps the
//! processors it holds to a progress rate. All jobs arrive at time zero.

mod format;
pub mod rational;
mod speedup;

use std::collections::HashSet;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

pub(crate) use format::phases_to_value;
pub use rational::Rational;
pub use speedup::{PhaseKind, Speedup, SpeedupIssue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{job}: not a (Par-Seq)* job")]
    NotParSeqStar { job: String },
    #[error("{job}: not a Par-Seq job")]
    NotParSeq { job: String },
    #[error("malformed instance document: {0}")]
    Format(String),
    #[error("invalid instance: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// A failed instance invariant. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("processor count must be positive")]
    NonPositiveProcessors,
    #[error("instance has no sets")]
    NoSets,
    #[error("set {set}: no jobs")]
    EmptySet { set: String },
    #[error("duplicate set id {0:?}")]
    DuplicateSet(String),
    #[error("set {set}: duplicate job id {job:?}")]
    DuplicateJob { set: String, job: String },
    #[error("id {0:?} is empty or contains '/'")]
    BadId(String),
    #[error("{job}: no phases")]
    NoPhases { job: String },
    #[error("{job} phase {phase}: negative work")]
    NegativeWork { job: String, phase: usize },
    #[error("{job} phase {phase}: {issue}")]
    Speedup {
        job: String,
        phase: usize,
        issue: SpeedupIssue,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub work: Rational,
    pub speedup: Speedup,
}

impl Phase {
    pub fn new(work: Rational, speedup: Speedup) -> Self {
        Phase { work, speedup }
    }

    pub fn seq(work: Rational) -> Self {
        Phase::new(work, Speedup::Sequential)
    }

    pub fn par(work: Rational) -> Self {
        Phase::new(work, Speedup::FullyParallel)
    }

    pub fn kind(&self) -> PhaseKind {
        self.speedup.kind()
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind(), self.work)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub id: String,
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSet {
    pub id: String,
    pub jobs: Vec<Job>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub processors: Rational,
    pub sets: Vec<JobSet>,
}

/// Position of a job inside an instance: set index, then job index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JobRef {
    pub set: usize,
    pub job: usize,
}

impl JobRef {
    pub fn new(set: usize, job: usize) -> Self {
        JobRef { set, job }
    }
}

impl Job {
    pub fn new(id: impl Into<String>, phases: Vec<Phase>) -> Self {
        Job {
            id: id.into(),
            phases,
        }
    }

    pub fn is_par_seq_star(&self) -> bool {
        self.phases
            .iter()
            .all(|p| matches!(p.speedup, Speedup::Sequential | Speedup::FullyParallel))
    }

    /// One fully parallel phase followed by one sequential phase, where
    /// either may be absent (zero work).
    pub fn is_par_seq(&self) -> bool {
        let positive: Vec<_> = self.phases.iter().filter(|p| p.work.is_positive()).collect();
        self.is_par_seq_star()
            && match positive.as_slice() {
                [] => true,
                [_] => true,
                [a, b] => a.speedup.is_fully_parallel() && b.speedup.is_sequential(),
                _ => false,
            }
    }

    /// Total fully parallel work.
    pub fn par(&self) -> Result<Rational, ModelError> {
        self.sum_kind(PhaseKind::Par)
    }

    /// Total sequential work.
    pub fn seq(&self) -> Result<Rational, ModelError> {
        self.sum_kind(PhaseKind::Seq)
    }

    fn sum_kind(&self, kind: PhaseKind) -> Result<Rational, ModelError> {
        if !self.is_par_seq_star() {
            return Err(ModelError::NotParSeqStar {
                job: self.id.clone(),
            });
        }
        Ok(self
            .phases
            .iter()
            .filter(|p| p.kind() == kind)
            .map(|p| &p.work)
            .sum())
    }

    pub fn total_work(&self) -> Rational {
        self.phases.iter().map(|p| &p.work).sum()
    }

    /// Drops zero-work phases and merges adjacent sequential or fully
    /// parallel phases. A job left without phases keeps a single
    /// sequential phase of work zero, which completes at time zero.
    pub fn normalize(&self) -> Job {
        let mut phases: Vec<Phase> = Vec::with_capacity(self.phases.len());
        for p in self.phases.iter().filter(|p| !p.work.is_zero()) {
            match phases.last_mut() {
                Some(last)
                    if last.speedup == p.speedup
                        && matches!(p.speedup, Speedup::Sequential | Speedup::FullyParallel) =>
                {
                    last.work += &p.work;
                }
                _ => phases.push(p.clone()),
            }
        }
        if phases.is_empty() {
            phases.push(Phase::seq(Rational::zero()));
        }
        Job {
            id: self.id.clone(),
            phases,
        }
    }
}

impl JobSet {
    pub fn new(id: impl Into<String>, jobs: Vec<Job>) -> Self {
        JobSet {
            id: id.into(),
            jobs,
        }
    }

    /// Sum of the jobs' parallel work.
    pub fn par(&self) -> Result<Rational, ModelError> {
        self.jobs.iter().map(Job::par).sum()
    }

    /// Largest sequential work over the set's jobs.
    pub fn seq(&self) -> Result<Rational, ModelError> {
        let mut best = Rational::zero();
        for job in &self.jobs {
            best = best.max(job.seq()?);
        }
        Ok(best)
    }
}

impl Instance {
    pub fn new(processors: Rational, sets: Vec<JobSet>) -> Self {
        Instance { processors, sets }
    }

    pub fn job(&self, r: JobRef) -> &Job {
        &self.sets[r.set].jobs[r.job]
    }

    pub fn job_count(&self) -> usize {
        self.sets.iter().map(|s| s.jobs.len()).sum()
    }

    /// Jobs in instance order.
    pub fn job_refs(&self) -> impl Iterator<Item = JobRef> + '_ {
        self.sets
            .iter()
            .enumerate()
            .flat_map(|(s, set)| (0..set.jobs.len()).map(move |j| JobRef::new(s, j)))
    }

    pub fn shape(&self) -> Vec<usize> {
        self.sets.iter().map(|s| s.jobs.len()).collect()
    }

    /// `"<set id>/<job id>"`, the key used in trace documents.
    pub fn job_path(&self, r: JobRef) -> String {
        format!("{}/{}", self.sets[r.set].id, self.sets[r.set].jobs[r.job].id)
    }

    pub fn find_job(&self, path: &str) -> Option<JobRef> {
        let (set_id, job_id) = path.split_once('/')?;
        let s = self.sets.iter().position(|s| s.id == set_id)?;
        let j = self.sets[s].jobs.iter().position(|j| j.id == job_id)?;
        Some(JobRef::new(s, j))
    }

    pub fn find_set(&self, id: &str) -> Option<usize> {
        self.sets.iter().position(|s| s.id == id)
    }

    pub fn is_par_seq_star(&self) -> bool {
        self.sets.iter().flat_map(|s| &s.jobs).all(Job::is_par_seq_star)
    }

    pub fn is_par_seq(&self) -> bool {
        self.sets.iter().flat_map(|s| &s.jobs).all(Job::is_par_seq)
    }

    /// Errors with the first job outside the (Par-Seq)* class.
    pub fn require_par_seq_star(&self) -> Result<(), ModelError> {
        for r in self.job_refs() {
            if !self.job(r).is_par_seq_star() {
                return Err(ModelError::NotParSeqStar {
                    job: self.job_path(r),
                });
            }
        }
        Ok(())
    }

    pub fn require_par_seq(&self) -> Result<(), ModelError> {
        for r in self.job_refs() {
            if !self.job(r).is_par_seq() {
                return Err(ModelError::NotParSeq {
                    job: self.job_path(r),
                });
            }
        }
        Ok(())
    }

    /// Total parallel work over all sets.
    pub fn par(&self) -> Result<Rational, ModelError> {
        self.sets.iter().map(JobSet::par).sum()
    }

    /// Largest set cardinality.
    pub fn max_set_size(&self) -> usize {
        self.sets.iter().map(|s| s.jobs.len()).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.processors.is_positive() {
            out.push(Violation::NonPositiveProcessors);
        }
        if self.sets.is_empty() {
            out.push(Violation::NoSets);
        }
        let bad_id = |id: &str| id.is_empty() || id.contains('/');
        let mut set_ids = HashSet::new();
        for set in &self.sets {
            if bad_id(&set.id) {
                out.push(Violation::BadId(set.id.clone()));
            }
            if !set_ids.insert(set.id.as_str()) {
                out.push(Violation::DuplicateSet(set.id.clone()));
            }
            if set.jobs.is_empty() {
                out.push(Violation::EmptySet {
                    set: set.id.clone(),
                });
            }
            let mut job_ids = HashSet::new();
            for job in &set.jobs {
                let path = format!("{}/{}", set.id, job.id);
                if bad_id(&job.id) {
                    out.push(Violation::BadId(job.id.clone()));
                }
                if !job_ids.insert(job.id.as_str()) {
                    out.push(Violation::DuplicateJob {
                        set: set.id.clone(),
                        job: job.id.clone(),
                    });
                }
                if job.phases.is_empty() {
                    out.push(Violation::NoPhases { job: path.clone() });
                }
                for (k, phase) in job.phases.iter().enumerate() {
                    if phase.work.is_negative() {
                        out.push(Violation::NegativeWork {
                            job: path.clone(),
                            phase: k,
                        });
                    }
                    for issue in phase.speedup.issues() {
                        out.push(Violation::Speedup {
                            job: path.clone(),
                            phase: k,
                            issue,
                        });
                    }
                }
            }
        }
        out
    }

    /// Validates, returning the violations as an error.
    pub fn check(&self) -> Result<(), ModelError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ModelError::Invalid(v))
        }
    }

    pub fn normalize(&self) -> Instance {
        Instance {
            processors: self.processors.clone(),
            sets: self
                .sets
                .iter()
                .map(|s| JobSet {
                    id: s.id.clone(),
                    jobs: s.jobs.iter().map(Job::normalize).collect(),
                })
                .collect(),
        }
    }

    /// Same sets and ids, with every job's phases replaced by `f(job)`.
    pub fn map_jobs(&self, mut f: impl FnMut(JobRef, &Job) -> Vec<Phase>) -> Instance {
        Instance {
            processors: self.processors.clone(),
            sets: self
                .sets
                .iter()
                .enumerate()
                .map(|(s, set)| JobSet {
                    id: set.id.clone(),
                    jobs: set
                        .jobs
                        .iter()
                        .enumerate()
                        .map(|(j, job)| Job::new(job.id.clone(), f(JobRef::new(s, j), job)))
                        .collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::rational::{int, ratio};
    use super::*;

    fn job(phases: Vec<Phase>) -> Job {
        Job::new("J", phases)
    }

    #[test]
    fn par_and_seq_of_jobs_and_sets() {
        let j = job(vec![Phase::par(int(1)), Phase::seq(int(2)), Phase::par(int(3))]);
        assert_eq!(j.par().unwrap(), int(4));
        assert_eq!(j.seq().unwrap(), int(2));

        let set = JobSet::new(
            "S",
            vec![
                Job::new("J1", vec![Phase::par(int(1)), Phase::seq(int(1))]),
                Job::new("J2", vec![Phase::par(int(2)), Phase::seq(int(5))]),
            ],
        );
        assert_eq!(set.par().unwrap(), int(3));
        assert_eq!(set.seq().unwrap(), int(5));

        let empty = job(vec![Phase::seq(int(0)), Phase::par(int(0))]).normalize();
        assert_eq!(empty.phases, vec![Phase::seq(int(0))]);
        assert_eq!(empty.par().unwrap(), int(0));
        assert_eq!(empty.seq().unwrap(), int(0));
    }

    #[test]
    fn par_of_general_job_is_a_class_error() {
        let j = job(vec![Phase::new(
            int(1),
            Speedup::PiecewiseLinear(vec![(int(0), int(0)), (int(1), int(1))]),
        )]);
        assert!(matches!(j.par(), Err(ModelError::NotParSeqStar { .. })));
    }

    #[test]
    fn normalize_examples() {
        let n = job(vec![Phase::par(int(1)), Phase::par(int(2))]).normalize();
        assert_eq!(n.phases, vec![Phase::par(int(3))]);
        let n = job(vec![Phase::seq(int(0)), Phase::par(int(1))]).normalize();
        assert_eq!(n.phases, vec![Phase::par(int(1))]);
        let n = job(vec![Phase::par(int(1)), Phase::seq(int(0)), Phase::par(int(2))]).normalize();
        assert_eq!(n.phases, vec![Phase::par(int(3))]);
    }

    #[test]
    fn par_seq_classes() {
        assert!(job(vec![Phase::par(int(1)), Phase::seq(int(1))]).is_par_seq());
        assert!(job(vec![Phase::seq(int(1))]).is_par_seq());
        assert!(job(vec![Phase::par(int(0)), Phase::seq(int(1))]).is_par_seq());
        assert!(!job(vec![Phase::seq(int(1)), Phase::par(int(1))]).is_par_seq());
        assert!(job(vec![Phase::seq(int(1)), Phase::par(int(1))]).is_par_seq_star());
    }

    #[test]
    fn validation_reports_violations() {
        let good = Instance::new(
            int(1),
            vec![JobSet::new("S1", vec![Job::new("J1", vec![Phase::seq(int(1))])])],
        );
        assert!(good.validate().is_empty());

        let bad = Instance::new(
            int(0),
            vec![
                JobSet::new(
                    "S1",
                    vec![
                        Job::new("J1", vec![Phase::seq(int(-1))]),
                        Job::new("J1", vec![]),
                        Job::new(
                            "J/3",
                            vec![Phase::new(
                                ratio(1, 2),
                                Speedup::PiecewiseLinear(vec![
                                    (int(0), int(0)),
                                    (int(1), int(1)),
                                    (int(2), int(3)),
                                ]),
                            )],
                        ),
                    ],
                ),
                JobSet::new("S1", vec![]),
            ],
        );
        let v = bad.validate();
        assert!(v.contains(&Violation::NonPositiveProcessors));
        assert!(v.contains(&Violation::DuplicateSet("S1".into())));
        assert!(v.contains(&Violation::EmptySet { set: "S1".into() }));
        assert!(v.contains(&Violation::DuplicateJob {
            set: "S1".into(),
            job: "J1".into()
        }));
        assert!(v.contains(&Violation::NoPhases { job: "S1/J1".into() }));
        assert!(v.contains(&Violation::NegativeWork {
            job: "S1/J1".into(),
            phase: 0
        }));
        assert!(v.contains(&Violation::BadId("J/3".into())));
        assert!(v.contains(&Violation::Speedup {
            job: "S1/J/3".into(),
            phase: 0,
            issue: SpeedupIssue::Superlinear { at: 2 }
        }));
    }
}

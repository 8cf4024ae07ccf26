//! Scheduling policies.
//!
//! [`Equi`], [`EquiEqui`] and [`EquiSerial`] only see the observable state.
//! [`ParFirst`] is a clairvoyant greedy that builds explicit schedules used
//! as upper bounds on the optimum.

use std::fmt;
use std::str::FromStr;

use num_traits::One;

use crate::engine::{
    simulate, simulate_clairvoyant, Allocation, ClairvoyantPolicy, ClairvoyantView,
    ObservableState, Policy, PolicyError, ScheduleTrace, SimError, SimOptions,
};
use crate::model::{Instance, JobRef, ModelError, Rational};

fn count(n: usize) -> Rational {
    Rational::from_integer(n.into())
}

/// Equal split over all alive jobs, ignoring sets.
#[derive(Debug, Clone, Copy, Default)]
pub struct Equi;

impl Policy for Equi {
    fn name(&self) -> &str {
        "equi"
    }

    fn allocate(
        &self,
        state: &ObservableState<'_>,
        budget: &Rational,
    ) -> Result<Allocation, PolicyError> {
        let n = state.alive_job_count();
        if n == 0 {
            return Err(PolicyError::NoAliveJobs);
        }
        let share = budget / count(n);
        let mut alloc = Allocation::new();
        for job in state.alive_jobs() {
            alloc.assign(job.job, share.clone());
        }
        Ok(alloc)
    }
}

/// Equal split over alive sets, then equal split inside each set.
#[derive(Debug, Clone, Copy, Default)]
pub struct EquiEqui;

impl Policy for EquiEqui {
    fn name(&self) -> &str {
        "equi-equi"
    }

    fn allocate(
        &self,
        state: &ObservableState<'_>,
        budget: &Rational,
    ) -> Result<Allocation, PolicyError> {
        let m = state.alive_set_count();
        if m == 0 {
            return Err(PolicyError::NoAliveJobs);
        }
        let per_set = budget / count(m);
        let mut alloc = Allocation::new();
        for set in &state.alive_sets {
            let share = &per_set / count(set.jobs.len());
            for job in &set.jobs {
                alloc.assign(job.job, share.clone());
            }
        }
        Ok(alloc)
    }
}

/// Equal split over alive sets; each set runs its jobs one at a time in
/// instance order.
#[derive(Debug, Clone, Copy, Default)]
pub struct EquiSerial;

impl Policy for EquiSerial {
    fn name(&self) -> &str {
        "equi-serial"
    }

    fn allocate(
        &self,
        state: &ObservableState<'_>,
        budget: &Rational,
    ) -> Result<Allocation, PolicyError> {
        let m = state.alive_set_count();
        if m == 0 {
            return Err(PolicyError::NoAliveJobs);
        }
        let per_set = budget / count(m);
        let mut alloc = Allocation::new();
        for set in &state.alive_sets {
            alloc.assign(set.jobs[0].job, per_set.clone());
        }
        Ok(alloc)
    }
}

/// Priority used by [`ParFirst`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobOrder {
    /// Instance order.
    Instance,
    /// Sets by ascending parallel work, instance order inside a set.
    SetsByPar,
    /// Jobs by ascending parallel work, ties in instance order.
    JobsByPar,
}

/// Clairvoyant greedy: the whole budget goes to the first job, in priority
/// order, whose current phase is not sequential. Sequential phases run on
/// no processors.
#[derive(Debug, Clone)]
pub struct ParFirst {
    priority: Vec<JobRef>,
}

impl ParFirst {
    pub fn new(priority: Vec<JobRef>) -> Self {
        ParFirst { priority }
    }

    /// Priority list for `order`. Parallel work of a job outside the
    /// (Par-Seq)* class counts every non-sequential phase.
    pub fn for_instance(inst: &Instance, order: JobOrder) -> Self {
        let par_work = |r: JobRef| -> Rational {
            inst.job(r)
                .phases
                .iter()
                .filter(|p| !p.speedup.is_sequential())
                .map(|p| &p.work)
                .sum()
        };
        let mut priority: Vec<JobRef> = inst.job_refs().collect();
        match order {
            JobOrder::Instance => {}
            JobOrder::JobsByPar => {
                let keys: Vec<Rational> = priority.iter().map(|&r| par_work(r)).collect();
                let mut idx: Vec<usize> = (0..priority.len()).collect();
                idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
                priority = idx.into_iter().map(|i| priority[i]).collect();
            }
            JobOrder::SetsByPar => {
                let set_par: Vec<Rational> = inst
                    .sets
                    .iter()
                    .enumerate()
                    .map(|(s, set)| {
                        (0..set.jobs.len())
                            .map(|j| par_work(JobRef::new(s, j)))
                            .sum()
                    })
                    .collect();
                priority.sort_by(|a, b| {
                    set_par[a.set]
                        .cmp(&set_par[b.set])
                        .then(a.set.cmp(&b.set))
                        .then(a.job.cmp(&b.job))
                });
            }
        }
        ParFirst::new(priority)
    }
}

impl ClairvoyantPolicy for ParFirst {
    fn name(&self) -> &str {
        "par-first"
    }

    fn allocate(
        &self,
        view: &ClairvoyantView<'_>,
        budget: &Rational,
    ) -> Result<Allocation, PolicyError> {
        let mut alloc = Allocation::new();
        let target = self.priority.iter().copied().find(|&r| {
            let progress = view.progress(r);
            !progress.done
                && !view.instance.job(r).phases[progress.phase]
                    .speedup
                    .is_sequential()
        });
        if let Some(r) = target {
            alloc.assign(r, budget.clone());
        }
        Ok(alloc)
    }
}

/// The clairvoyant greedy schedule of a (Par-Seq)* instance on its own
/// processors.
pub fn par_first(inst: &Instance, order: JobOrder) -> Result<ScheduleTrace, SchedError> {
    inst.require_par_seq_star()?;
    reference_schedule(inst, order)
}

/// [`ParFirst`] on any valid instance, piecewise-linear phases included.
pub fn reference_schedule(inst: &Instance, order: JobOrder) -> Result<ScheduleTrace, SchedError> {
    let policy = ParFirst::for_instance(inst, order);
    Ok(simulate_clairvoyant(
        inst,
        &policy,
        &Rational::one(),
        &SimOptions::default(),
    )?)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchedError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Policy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyId {
    Equi,
    EquiEqui,
    EquiSerial,
    ParFirst,
}

impl PolicyId {
    pub const ALL: [PolicyId; 4] = [
        PolicyId::Equi,
        PolicyId::EquiEqui,
        PolicyId::EquiSerial,
        PolicyId::ParFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyId::Equi => "equi",
            PolicyId::EquiEqui => "equi-equi",
            PolicyId::EquiSerial => "equi-serial",
            PolicyId::ParFirst => "par-first",
        }
    }

    pub fn is_clairvoyant(self) -> bool {
        self == PolicyId::ParFirst
    }

    /// The non-clairvoyant policy, if this is one.
    pub fn online(self) -> Option<Box<dyn Policy>> {
        match self {
            PolicyId::Equi => Some(Box::new(Equi)),
            PolicyId::EquiEqui => Some(Box::new(EquiEqui)),
            PolicyId::EquiSerial => Some(Box::new(EquiSerial)),
            PolicyId::ParFirst => None,
        }
    }

    /// Runs the policy on `speed * p` processors. The clairvoyant greedy
    /// uses instance order.
    pub fn run(
        self,
        inst: &Instance,
        speed: &Rational,
        opts: &SimOptions,
    ) -> Result<ScheduleTrace, SimError> {
        match self.online() {
            Some(policy) => simulate(inst, policy.as_ref(), speed, opts),
            None => simulate_clairvoyant(
                inst,
                &ParFirst::for_instance(inst, JobOrder::Instance),
                speed,
                opts,
            ),
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        PolicyId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                format!("unknown scheduler {s:?} (expected equi, equi-equi, equi-serial or par-first)")
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{validate_trace, AliveJob, AliveSet};
    use crate::model::rational::{int, ratio};
    use crate::model::{Job, JobSet, Phase};

    fn state<'a>(now: &'a Rational, shape: &[usize]) -> ObservableState<'a> {
        ObservableState {
            now,
            alive_sets: shape
                .iter()
                .enumerate()
                .map(|(s, &n)| AliveSet {
                    index: s,
                    id: "S",
                    jobs: (0..n)
                        .map(|j| AliveJob {
                            job: JobRef::new(s, j),
                            id: "J",
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    #[test]
    fn equi_shares() {
        let t = int(0);
        let a = Equi.allocate(&state(&t, &[27]), &int(1)).unwrap();
        assert!(a.iter().all(|(_, r)| *r == ratio(1, 27)));
        assert_eq!(a.total(), int(1));
        let a = Equi.allocate(&state(&t, &[3]), &int(2)).unwrap();
        assert!(a.iter().all(|(_, r)| *r == ratio(2, 3)));
        let a = Equi.allocate(&state(&t, &[1]), &int(5)).unwrap();
        assert_eq!(a.get(JobRef::new(0, 0)), Some(&int(5)));
        assert_eq!(
            Equi.allocate(&state(&t, &[]), &int(1)),
            Err(PolicyError::NoAliveJobs)
        );
    }

    #[test]
    fn equi_equi_shares() {
        let t = int(0);
        let a = EquiEqui.allocate(&state(&t, &[1, 2]), &int(1)).unwrap();
        assert_eq!(a.get(JobRef::new(0, 0)), Some(&ratio(1, 2)));
        assert_eq!(a.get(JobRef::new(1, 0)), Some(&ratio(1, 4)));
        assert_eq!(a.get(JobRef::new(1, 1)), Some(&ratio(1, 4)));
        assert_eq!(a.total(), int(1));
    }

    #[test]
    fn equi_serial_feeds_first_job() {
        let t = int(0);
        let a = EquiSerial.allocate(&state(&t, &[3, 1]), &int(1)).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a.get(JobRef::new(0, 0)), Some(&ratio(1, 2)));
        assert_eq!(a.get(JobRef::new(1, 0)), Some(&ratio(1, 2)));
    }

    #[test]
    fn par_first_makespan_examples() {
        let inst = Instance::new(
            int(1),
            vec![JobSet::new(
                "S1",
                vec![
                    Job::new("J1", vec![Phase::par(ratio(1, 2)), Phase::seq(int(1))]),
                    Job::new("J2", vec![Phase::par(ratio(1, 2)), Phase::seq(int(1))]),
                ],
            )],
        );
        let trace = par_first(&inst, JobOrder::Instance).unwrap();
        assert!(validate_trace(&inst, &trace, &int(1)).is_empty());
        assert!(trace.metrics().makespan <= int(2));

        let seq_only = Instance::new(
            int(1),
            vec![JobSet::new(
                "S1",
                vec![
                    Job::new("J1", vec![Phase::seq(int(2))]),
                    Job::new("J2", vec![Phase::seq(int(3))]),
                ],
            )],
        );
        let trace = par_first(&seq_only, JobOrder::Instance).unwrap();
        assert_eq!(trace.metrics().makespan, int(3));
    }

    #[test]
    fn policy_ids_parse() {
        for p in PolicyId::ALL {
            assert_eq!(p.name().parse::<PolicyId>(), Ok(p));
        }
        assert!("srpt".parse::<PolicyId>().is_err());
    }
}

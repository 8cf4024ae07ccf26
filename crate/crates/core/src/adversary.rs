//! Worst-case instance generators for a single set on one processor.
//!
//! The example family kills all but a `1/ell` fraction of the alive jobs at
//! each integer time, always keeping alive the jobs that received the least
//! processing. The adaptive adversary plays the same game against any
//! non-clairvoyant policy by fixing the phases only after observing it.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::engine::{
    simulate, AliveJob, AliveSet, Infeasible, ObservableState, Policy, ScheduleTrace, SimError,
    SimOptions,
};
use crate::model::{Instance, Job, JobRef, JobSet, ModelError, Phase, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("instance size {0} is too large")]
    TooLarge(String),
    #[error("replayed schedule differs from the interactive one: {0}")]
    Replay(String),
    #[error(transparent)]
    Infeasible(#[from] Infeasible),
}

fn int(v: u64) -> Rational {
    Rational::from_integer(v.into())
}

fn pow(base: u64, exp: u32) -> Result<u64, AdversaryError> {
    base.checked_pow(exp)
        .filter(|&n| n <= 50_000_000)
        .ok_or_else(|| AdversaryError::TooLarge(format!("{base}^{exp}")))
}

fn job_ids(n: usize) -> impl Iterator<Item = String> {
    let width = n.to_string().len();
    (1..=n).map(move |i| format!("J{i:0width$}"))
}

fn check_ell(ell: u32) -> Result<(), AdversaryError> {
    if ell < 2 {
        return Err(ModelError::Domain(format!("ell must be at least 2, got {ell}")).into());
    }
    Ok(())
}

/// Phases of the job that dies during round `rounds + 1`: `rounds` fully
/// parallel phases of works `1/ell^ell, ..., 1/ell^(ell-rounds+1)`, each
/// divided by `scale`, then one unit of sequential work.
fn example_phases(ell: u32, rounds: u32, scale: &Rational) -> Vec<Phase> {
    let mut phases: Vec<Phase> = (0..rounds)
        .map(|i| Phase::par(Rational::one() / (int(ell as u64).pow((ell - i) as i32) * scale)))
        .collect();
    phases.push(Phase::seq(Rational::one()));
    phases
}

/// Rounds survived by job `j` (zero-based) of the example family: the
/// number of `i < ell` with `j < ell^(ell-i-1)`.
fn rounds_survived(ell: u32, j: u64) -> u32 {
    (0..ell)
        .take_while(|&i| j < (ell as u64).pow(ell - i - 1))
        .count() as u32
}

/// `ell^ell` jobs on one processor. Equi finishes them at `ell + 1` while
/// all parallel work sums to one.
pub fn example_instance(ell: u32) -> Result<Instance, AdversaryError> {
    check_ell(ell)?;
    let n = pow(ell as u64, ell)?;
    let scale = Rational::one();
    let jobs = job_ids(n as usize)
        .enumerate()
        .map(|(j, id)| Job::new(id, example_phases(ell, rounds_survived(ell, j as u64), &scale)))
        .collect();
    Ok(Instance::new(Rational::one(), vec![JobSet::new("S1", jobs)]))
}

/// `n = ell^ell` copies of every example job with parallel work divided by
/// `n`, shuffled with ChaCha8 seeded by `seed`. Ids follow the shuffled
/// positions.
pub fn permuted_instance(ell: u32, seed: u64) -> Result<Instance, AdversaryError> {
    check_ell(ell)?;
    let n = pow(ell as u64, ell)?;
    let total = pow(n, 2)?;
    let scale = int(n);
    let mut rounds: Vec<u32> = (0..n)
        .flat_map(|j| std::iter::repeat_n(rounds_survived(ell, j), n as usize))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rounds.shuffle(&mut rng);
    let jobs = job_ids(total as usize)
        .zip(rounds)
        .map(|(id, r)| Job::new(id, example_phases(ell, r, &scale)))
        .collect();
    Ok(Instance::new(Rational::one(), vec![JobSet::new("S1", jobs)]))
}

/// Result of [`adaptive_run`].
#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub instance: Instance,
    /// Schedule observed while the policy was running.
    pub trace: ScheduleTrace,
    /// Parallel work handed out at the end of each round.
    pub round_par: Vec<Rational>,
    /// Alive jobs at the start of each round.
    pub alive: Vec<usize>,
    /// Jobs whose sequential phase started before the round it ends in,
    /// because they received nothing for a while.
    pub stalled: usize,
}

/// Plays `(speed * ell)^ell` jobs against `policy` on `speed` processors.
///
/// In round `i` (time `[i, i+1)`) every job still alive looks the same to
/// the policy. At the end of the round the `(speed * ell)^(ell-i-1)` jobs
/// that received the least processing (ties by index) get a fully parallel
/// phase of exactly what they received and stay alive; the others get a
/// sequential phase ending at `i + 1`. The last job gets one more unit of
/// sequential work after round `ell - 1`.
///
/// The returned instance is replayed through the simulator, which must
/// reproduce the observed schedule event for event.
pub fn adaptive_run(policy: &dyn Policy, ell: u32, speed: u64) -> Result<AdaptiveRun, AdversaryError> {
    check_ell(ell)?;
    if speed == 0 {
        return Err(ModelError::Domain("speed must be a positive integer".into()).into());
    }
    let base = speed
        .checked_mul(ell as u64)
        .ok_or_else(|| AdversaryError::TooLarge("speed * ell".into()))?;
    let n = pow(base, ell)? as usize;
    let budget = int(speed);
    let ids: Vec<String> = job_ids(n).collect();

    let mut phases: Vec<Vec<Phase>> = vec![Vec::new(); n];
    // time at which each job's assigned parallel work runs out
    let mut par_done = vec![Rational::zero(); n];
    let mut pieces: Vec<Vec<(Rational, Rational, Rational)>> = vec![Vec::new(); n];
    let mut alive: Vec<usize> = (0..n).collect();
    let mut round_par = Vec::new();
    let mut alive_counts = Vec::new();
    let mut stalled = 0;

    for round in 0..=ell {
        let start = int(round as u64);
        let end = int(round as u64 + 1);
        alive_counts.push(alive.len());
        let state = ObservableState {
            now: &start,
            alive_sets: vec![AliveSet {
                index: 0,
                id: "S1",
                jobs: alive
                    .iter()
                    .map(|&j| AliveJob {
                        job: JobRef::new(0, j),
                        id: &ids[j],
                    })
                    .collect(),
            }],
        };
        let alloc = policy.allocate(&state, &budget).map_err(|source| SimError::Policy {
            time: start.clone(),
            source,
        })?;
        let mut is_alive = vec![false; n];
        for &j in &alive {
            is_alive[j] = true;
        }
        let mut power = vec![Rational::zero(); n];
        let mut total = Rational::zero();
        for (job, rho) in alloc.iter() {
            if job.set != 0 || job.job >= n || !is_alive[job.job] || rho < &Rational::zero() {
                return Err(SimError::NotAlive {
                    time: start.clone(),
                    job: format!("{job:?}"),
                }
                .into());
            }
            power[job.job] += rho;
            total += rho;
        }
        if total > budget {
            return Err(SimError::Capacity {
                time: start,
                total,
                budget,
            }
            .into());
        }
        for &j in &alive {
            pieces[j].push((start.clone(), end.clone(), power[j].clone()));
        }
        let keep = if round < ell {
            pow(base, ell - round - 1)? as usize
        } else {
            0
        };
        let mut order = alive.clone();
        order.sort_by(|&a, &b| power[a].cmp(&power[b]).then(a.cmp(&b)));
        let mut par_total = Rational::zero();
        for &j in &order[..keep] {
            if power[j] > Rational::zero() {
                phases[j].push(Phase::par(power[j].clone()));
                par_done[j] = end.clone();
                par_total += &power[j];
            }
        }
        for &j in &order[keep..] {
            let work = &end - &par_done[j];
            if work > Rational::one() {
                stalled += 1;
            }
            phases[j].push(Phase::seq(work));
        }
        if round < ell {
            round_par.push(par_total);
        }
        let mut next = order[..keep].to_vec();
        next.sort_unstable();
        alive = next;
    }

    let jobs = ids
        .iter()
        .zip(phases)
        .map(|(id, p)| Job::new(id.clone(), p))
        .collect();
    let instance = Instance::new(Rational::one(), vec![JobSet::new("S1", jobs)]);
    let trace = ScheduleTrace::from_allocations(&instance, pieces)?;
    let replay = simulate(&instance, policy, &budget, &SimOptions::default())?;
    if !replay.same_schedule(&trace) {
        return Err(AdversaryError::Replay("allocations or completions differ".into()));
    }
    if replay.events() != trace.events() {
        return Err(AdversaryError::Replay("event logs differ".into()));
    }
    Ok(AdaptiveRun {
        instance,
        trace,
        round_par,
        alive: alive_counts,
        stalled,
    })
}

/// Alive jobs at each integer time `0, 1, ..., ceil(makespan) - 1`.
pub fn survival_counts(trace: &ScheduleTrace) -> Vec<usize> {
    let mut completions: Vec<&Rational> = trace.job_refs().map(|r| trace.job_completion(r)).collect();
    completions.sort();
    let makespan = completions.last().map(|c| (*c).clone()).unwrap_or_default();
    let mut out = Vec::new();
    let mut t = Rational::zero();
    while t < makespan {
        out.push(completions.len() - completions.partition_point(|c| **c <= t));
        t += Rational::one();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rational::ratio;
    use crate::schedulers::{par_first, Equi, EquiSerial, JobOrder};

    fn equi_makespan(inst: &Instance) -> Rational {
        simulate(inst, &Equi, &Rational::one(), &SimOptions::default())
            .unwrap()
            .metrics()
            .makespan
    }

    #[test]
    fn example_family_shape() {
        let inst = example_instance(3).unwrap();
        assert_eq!(inst.job_count(), 27);
        assert_eq!(inst.par().unwrap(), Rational::one());
        assert_eq!(equi_makespan(&inst), int(4));
        let survivor = &inst.sets[0].jobs[0];
        assert_eq!(survivor.phases.len(), 4);
        assert_eq!(survivor.phases[0], Phase::par(ratio(1, 27)));
        assert_eq!(survivor.phases[2], Phase::par(ratio(1, 3)));
        assert!(par_first(&inst, JobOrder::Instance).unwrap().metrics().makespan <= int(2));

        let small = example_instance(2).unwrap();
        assert_eq!(small.job_count(), 4);
        assert_eq!(equi_makespan(&small), int(3));
        assert!(example_instance(1).is_err());
    }

    #[test]
    fn adaptive_equi_rebuilds_the_example() {
        let run = adaptive_run(&Equi, 3, 1).unwrap();
        assert_eq!(run.instance, example_instance(3).unwrap());
        assert_eq!(run.trace.metrics().makespan, int(4));
        assert!(run.round_par.iter().all(|p| *p <= ratio(1, 3)));
        assert_eq!(run.alive, vec![27, 9, 3, 1]);
    }

    #[test]
    fn adaptive_with_speed() {
        let run = adaptive_run(&Equi, 2, 2).unwrap();
        assert_eq!(run.instance.job_count(), 16);
        assert_eq!(run.trace.metrics().makespan, int(3));
        let opt = par_first(&run.instance, JobOrder::Instance).unwrap();
        assert!(opt.metrics().makespan <= int(2));
    }

    #[test]
    fn adaptive_serial_policy() {
        let run = adaptive_run(&EquiSerial, 3, 1).unwrap();
        assert!(run.trace.metrics().makespan >= int(3));
        assert!(run.round_par.iter().all(|p| *p <= ratio(1, 3)));
    }

    #[test]
    fn permuted_instances() {
        let a = permuted_instance(2, 7).unwrap();
        let b = permuted_instance(2, 8).unwrap();
        assert_eq!(a.job_count(), 16);
        let lists = |inst: &Instance| {
            let mut v: Vec<String> = inst.sets[0].jobs.iter().map(|j| format!("{:?}", j.phases)).collect();
            v.sort();
            v
        };
        assert_eq!(lists(&a), lists(&b));
        assert_ne!(a, b);
        assert_eq!(a, permuted_instance(2, 7).unwrap());
        assert_eq!(equi_makespan(&a), int(3));
        let example = example_instance(2).unwrap();
        let mut expected: Vec<String> = example.sets[0]
            .jobs
            .iter()
            .flat_map(|j| {
                let p: Vec<Phase> = j
                    .phases
                    .iter()
                    .map(|p| if p.speedup.is_fully_parallel() { Phase::par(&p.work / int(4)) } else { p.clone() })
                    .collect();
                std::iter::repeat_n(format!("{p:?}"), 4)
            })
            .collect();
        expected.sort();
        assert_eq!(lists(&a), expected);
    }

    #[test]
    fn survival_counts_of_example() {
        let inst = example_instance(3).unwrap();
        let t = simulate(&inst, &Equi, &Rational::one(), &SimOptions::default()).unwrap();
        assert_eq!(survival_counts(&t), vec![27, 9, 3, 1]);
    }
}

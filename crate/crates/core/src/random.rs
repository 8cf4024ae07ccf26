//! Seeded instance generators for property tests, sweeps and the CLI.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::rational::{int, ratio, Rational};
use crate::model::{Instance, Job, JobSet, Phase, Speedup};

fn small<R: Rng>(rng: &mut R, max_num: i64, den: &[i64]) -> Rational {
    ratio(rng.gen_range(0..=max_num), *den.choose(rng).unwrap())
}

fn positive<R: Rng>(rng: &mut R, max_num: i64, den: &[i64]) -> Rational {
    ratio(rng.gen_range(1..=max_num), *den.choose(rng).unwrap())
}

/// Concave, non-decreasing, positive on `rho > 0`.
pub fn random_speedup<R: Rng>(rng: &mut R) -> Speedup {
    let mut slopes: Vec<Rational> = (0..rng.gen_range(1..=3))
        .map(|_| {
            [int(2), int(1), ratio(1, 2), ratio(1, 4), int(0)]
                .choose(rng)
                .unwrap()
                .clone()
        })
        .collect();
    slopes.sort_by(|a, b| b.cmp(a));
    if slopes[0] == int(0) {
        slopes[0] = int(1);
    }
    let start = [int(0), int(0), ratio(1, 4), ratio(1, 2)].choose(rng).unwrap().clone();
    let mut points = vec![(int(0), start)];
    for s in slopes {
        let (x, y) = points.last().unwrap().clone();
        let dx = [ratio(1, 2), int(1), int(2)].choose(rng).unwrap().clone();
        points.push((&x + &dx, y + s * dx));
    }
    Speedup::PiecewiseLinear(points)
}

fn random_phase<R: Rng>(rng: &mut R) -> Phase {
    let work = positive(rng, 8, &[1, 2, 4]);
    match rng.gen_range(0..3) {
        0 => Phase::seq(work),
        1 => Phase::par(work),
        _ => Phase::new(work, random_speedup(rng)),
    }
}

fn processors<R: Rng>(rng: &mut R) -> Rational {
    [int(1), int(2), ratio(3, 2)].choose(rng).unwrap().clone()
}

fn job_id(i: usize) -> String {
    format!("J{}", i + 1)
}

fn set_id(i: usize) -> String {
    format!("S{}", i + 1)
}

/// Up to three sets of up to six jobs, each with one to four phases of any
/// speed-up kind.
pub fn mixed_instance<R: Rng>(rng: &mut R) -> Instance {
    let sets = (0..rng.gen_range(1..=3))
        .map(|s| {
            let jobs = (0..rng.gen_range(1..=6))
                .map(|j| Job::new(job_id(j), (0..rng.gen_range(1..=4)).map(|_| random_phase(rng)).collect()))
                .collect();
            JobSet::new(set_id(s), jobs)
        })
        .collect();
    Instance::new(processors(rng), sets)
}

/// One `[par, seq]` job; either part may be zero but not both.
fn par_seq_job<R: Rng>(rng: &mut R, id: String, max_num: i64) -> Job {
    let par = small(rng, max_num, &[1, 2, 4]);
    let seq = if par == int(0) {
        positive(rng, max_num, &[1, 2, 4])
    } else {
        small(rng, max_num, &[1, 2, 4])
    };
    Job::new(id, vec![Phase::par(par), Phase::seq(seq)])
}

/// A single Par-Seq set of `n` jobs on one processor.
pub fn par_seq_set<R: Rng>(rng: &mut R, n: usize) -> Instance {
    let jobs = (0..n).map(|j| par_seq_job(rng, format!("J{}", j + 1), 20)).collect();
    Instance::new(int(1), vec![JobSet::new("S1", jobs)])
}

/// Up to five sets of up to six jobs, each alternating parallel and
/// sequential phases.
pub fn par_seq_star_instance<R: Rng>(rng: &mut R) -> Instance {
    let sets = (0..rng.gen_range(1..=5))
        .map(|s| {
            let jobs = (0..rng.gen_range(1..=6))
                .map(|j| {
                    let mut phases = Vec::new();
                    for _ in 0..rng.gen_range(1..=2) {
                        phases.push(Phase::par(small(rng, 6, &[1, 2, 4])));
                        phases.push(Phase::seq(small(rng, 6, &[1, 2, 4])));
                    }
                    if phases.iter().all(|p| p.work == int(0)) {
                        phases[0].work = int(1);
                    }
                    Job::new(job_id(j), phases)
                })
                .collect();
            JobSet::new(set_id(s), jobs)
        })
        .collect();
    Instance::new(int(1), sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            mixed_instance(&mut rng).check().unwrap();
            let s = par_seq_star_instance(&mut rng);
            s.check().unwrap();
            assert!(s.is_par_seq_star());
            let p = par_seq_set(&mut rng, 10);
            p.check().unwrap();
            assert!(p.is_par_seq());
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = mixed_instance(&mut ChaCha8Rng::seed_from_u64(3));
        let b = mixed_instance(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}

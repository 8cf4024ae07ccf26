use malsched::bounds::{chain_check, proof_bound_check, BoundParams, Objective};
use malsched::engine::{simulate, validate_trace, ScheduleTrace, SimOptions};
use malsched::model::rational::{int, ratio, Rational};
use malsched::model::{Instance, JobSet, Phase};
use malsched::random::{mixed_instance, par_seq_set, par_seq_star_instance};
use malsched::reduction::{collapse_sets_to_jobs, frontload, reduce_to_parseq};
use malsched::schedulers::{par_first, reference_schedule, Equi, EquiEqui, JobOrder, PolicyId};
use num_traits::Zero;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn opts() -> SimOptions {
    SimOptions::default()
}

fn area(trace: &ScheduleTrace) -> Rational {
    let mut total = Rational::zero();
    for j in trace.job_refs() {
        for (a, b, rho) in trace.timed_pieces(j) {
            total += (b - a) * rho;
        }
    }
    total
}

/// Pieces of `job` restricted to `[0, until)`, merged.
fn prefix(trace: &ScheduleTrace, job: malsched::model::JobRef, until: &Rational) -> Vec<(Rational, Rational, Rational)> {
    let mut out: Vec<(Rational, Rational, Rational)> = Vec::new();
    for (a, b, rho) in trace.timed_pieces(job) {
        let b = b.min(until);
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

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalize_is_idempotent(seed in any::<u64>()) {
        let inst = mixed_instance(&mut rng(seed));
        let once = inst.normalize();
        prop_assert_eq!(once.normalize(), once);
    }

    #[test]
    fn instance_and_trace_json_roundtrip(seed in any::<u64>()) {
        let inst = mixed_instance(&mut rng(seed));
        let back = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(&back, &inst);
        let trace = simulate(&inst, &EquiEqui, &int(1), &opts()).unwrap();
        let parsed = ScheduleTrace::from_json(&inst, &trace.to_json(&inst)).unwrap();
        prop_assert!(parsed.same_schedule(&trace));
        prop_assert_eq!(parsed.events(), trace.events());
        prop_assert_eq!(parsed.to_json(&inst), trace.to_json(&inst));
    }

    #[test]
    fn every_policy_produces_a_valid_trace(seed in any::<u64>(), speed in 1i64..=3) {
        let inst = par_seq_star_instance(&mut rng(seed));
        let speed = int(speed);
        for p in PolicyId::ALL {
            let trace = p.run(&inst, &speed, &opts()).unwrap();
            prop_assert!(validate_trace(&inst, &trace, &(&speed * &inst.processors)).is_empty(), "{}", p.name());
        }
        let mixed = mixed_instance(&mut rng(seed));
        for p in [PolicyId::Equi, PolicyId::EquiEqui, PolicyId::EquiSerial] {
            let trace = p.run(&mixed, &speed, &opts()).unwrap();
            prop_assert!(validate_trace(&mixed, &trace, &(&speed * &mixed.processors)).is_empty());
        }
    }

    #[test]
    fn equi_uses_the_whole_budget_and_never_shrinks_shares(seed in any::<u64>(), speed in 1i64..=2) {
        let inst = mixed_instance(&mut rng(seed));
        let speed = int(speed);
        let budget = &speed * &inst.processors;
        for trace in [
            simulate(&inst, &Equi, &speed, &opts()).unwrap(),
            simulate(&inst, &EquiEqui, &speed, &opts()).unwrap(),
        ] {
            prop_assert_eq!(area(&trace), &budget * trace.metrics().makespan);
        }
        prop_assert!(simulate(&inst, &Equi, &speed, &opts()).unwrap().allocations_non_decreasing());
    }

    #[test]
    fn frontloading_never_helps_equi(seed in any::<u64>()) {
        let inst = par_seq_star_instance(&mut rng(seed));
        let front = frontload(&inst).unwrap();
        prop_assert!(front.is_par_seq());
        let before = simulate(&inst, &Equi, &int(1), &opts()).unwrap().metrics();
        let after = simulate(&front, &Equi, &int(1), &opts()).unwrap().metrics();
        prop_assert!(before.makespan <= after.makespan);
        prop_assert!(before.flowtime <= after.flowtime);
        let before = simulate(&inst, &EquiEqui, &int(1), &opts()).unwrap().metrics();
        let after = simulate(&front, &EquiEqui, &int(1), &opts()).unwrap().metrics();
        prop_assert!(before.setflowtime <= after.setflowtime);
    }

    #[test]
    fn policies_do_not_see_remaining_work(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = mixed_instance(&mut r);
        let refs: Vec<_> = inst.job_refs().collect();
        let target = refs[r.gen_range(0..refs.len())];
        let extra = ratio(r.gen_range(1..=8), 2);
        let longer = inst.map_jobs(|j, job| {
            let mut phases = job.phases.clone();
            if j == target {
                let last = phases.len() - 1;
                phases[last].work += &extra;
            }
            phases
        });
        for p in [PolicyId::Equi, PolicyId::EquiEqui, PolicyId::EquiSerial] {
            let a = p.run(&inst, &int(1), &opts()).unwrap();
            let b = p.run(&longer, &int(1), &opts()).unwrap();
            let until = a.job_completion(target).clone();
            for j in &refs {
                prop_assert_eq!(prefix(&a, *j, &until), prefix(&b, *j, &until));
            }
            let early = |t: &ScheduleTrace| t.events().iter().filter(|e| e.time < until).cloned().collect::<Vec<_>>();
            prop_assert_eq!(early(&a), early(&b));
        }
    }

    #[test]
    fn lower_bounds_sit_below_a_real_schedule(seed in any::<u64>()) {
        let inst = par_seq_star_instance(&mut rng(seed));
        for o in [Objective::Makespan, Objective::Setflowtime, Objective::Flowtime] {
            let lb = o.lower_bound(&inst).unwrap();
            let ub = o.of(&par_first(&inst, o.greedy_order()).unwrap());
            prop_assert!(lb <= ub, "{}: {} > {}", o, lb, ub);
            let lb_inst = o.of(&par_first(&inst, JobOrder::Instance).unwrap());
            prop_assert!(lb <= lb_inst);
        }
    }

    #[test]
    fn counting_argument_holds_for_any_alpha(seed in any::<u64>(), n in 1usize..40, k in 1i64..10) {
        let inst = par_seq_set(&mut rng(seed), n);
        let trace = simulate(&inst, &Equi, &int(1), &opts()).unwrap();
        let rep = proof_bound_check(&inst, &trace, &BoundParams::with_alpha(n, ratio(k, 10))).unwrap();
        prop_assert!(rep.holds(), "{}", rep.to_json());
    }

    #[test]
    fn reduction_reports_hold(seed in any::<u64>(), speed in 1i64..=2) {
        let inst = mixed_instance(&mut rng(seed));
        let reference = reference_schedule(&inst, JobOrder::Instance).unwrap();
        // equi-serial idles jobs, which the substitution cannot always absorb
        for p in [PolicyId::Equi, PolicyId::EquiEqui] {
            let a = p.run(&inst, &int(speed), &opts()).unwrap();
            let (reduced, report) = reduce_to_parseq(&inst, &a, &reference).unwrap();
            prop_assert!(report.holds(), "{:?}", report.notes);
            prop_assert!(reduced.is_par_seq_star());
            prop_assert_eq!(reduced.shape(), inst.shape());
        }
    }

    #[test]
    fn collapsed_jobs_reproduce_set_flowtime(seed in any::<u64>()) {
        let s = frontload(&par_seq_star_instance(&mut rng(seed))).unwrap();
        let trace = simulate(&s, &EquiEqui, &int(1), &opts()).unwrap();
        let j = collapse_sets_to_jobs(&s, &trace, &ratio(1, 2)).unwrap();
        prop_assert_eq!(j.sets.len(), s.sets.len());
        let flow = simulate(&j, &Equi, &int(1), &opts()).unwrap().metrics().flowtime;
        prop_assert_eq!(flow, trace.metrics().setflowtime);
    }

    #[test]
    fn chain_links_hold(seed in any::<u64>()) {
        let inst = par_seq_star_instance(&mut rng(seed));
        let rep = chain_check(&inst, &ratio(1, 2)).unwrap();
        prop_assert_eq!(rep.violation(), None, "{}", rep.to_json());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn metric_degenerations(seed in any::<u64>()) {
        let inst = mixed_instance(&mut rng(seed));
        let single = Instance::new(inst.processors.clone(), vec![inst.sets[0].clone()]);
        let m = simulate(&single, &EquiEqui, &int(1), &opts()).unwrap().metrics();
        prop_assert_eq!(m.setflowtime, m.makespan);
        let singletons = Instance::new(
            inst.processors.clone(),
            inst.sets
                .iter()
                .flat_map(|s| s.jobs.iter().enumerate().map(move |(j, job)| JobSet::new(format!("{}-{}", s.id, j), vec![job.clone()])))
                .collect(),
        );
        let m = simulate(&singletons, &Equi, &int(1), &opts()).unwrap().metrics();
        prop_assert_eq!(m.setflowtime, m.flowtime);
    }
}

#[test]
fn single_singleton_chain_is_tight() {
    let inst = Instance::new(
        int(1),
        vec![JobSet::new("S1", vec![malsched::model::Job::new("J1", vec![Phase::par(int(2)), Phase::seq(int(1))])])],
    );
    let rep = chain_check(&inst, &ratio(1, 2)).unwrap();
    assert_eq!(rep.setflowtime, int(3));
    assert_eq!(rep.setflowtime_frontloaded, int(3));
    assert_eq!(rep.flowtime_collapsed, int(3));
    assert_eq!(rep.flowtime_final, int(3));
}

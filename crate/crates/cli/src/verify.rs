use std::path::PathBuf;

use clap::{Args, ValueEnum};
use malsched::bounds::{chain_check, proof_bound_check, BoundParams};
use malsched::engine::{simulate, validate_trace, ScheduleTrace, SimOptions};
use malsched::model::rational::{ratio, Rational};
use malsched::model::Instance;
use malsched::random::{mixed_instance, par_seq_set, par_seq_star_instance};
use malsched::reduction::{frontload, reduce_to_parseq};
use malsched::schedulers::{reference_schedule, Equi, EquiEqui, JobOrder};
use num_traits::{One, Signed};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::failure::{Failure, Outcome};
use crate::{emit, parse_rational, r, read_instance, read_trace, sim_options};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum What {
    /// Substitution of an arbitrary instance by Par-Seq jobs.
    Lemma1,
    /// Frontloading never helps Equi or Equi-Equi.
    Lemma2,
    /// The set-to-job chain of inequalities.
    Chain,
    /// The counting argument on one Equi schedule of a Par-Seq set.
    ProofBound,
}

impl What {
    fn name(self) -> &'static str {
        match self {
            What::Lemma1 => "lemma1",
            What::Lemma2 => "lemma2",
            What::Chain => "chain",
            What::ProofBound => "proof-bound",
        }
    }
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["instance", "random"]))]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    what: What,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Number of generated instances.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Set size for generated proof-bound instances.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Threshold for chain and proof-bound; defaults to 1/2 and to the
    /// size-dependent value respectively.
    #[arg(long, value_parser = parse_rational)]
    alpha: Option<Rational>,
    /// Speed of the first schedule in lemma1.
    #[arg(long, default_value = "1", value_parser = parse_rational)]
    speed: Rational,
    /// Schedule to check instead of simulating one: the first schedule for
    /// lemma1, the Equi schedule for proof-bound.
    #[arg(long, requires = "instance")]
    trace: Option<PathBuf>,
    /// Reference schedule for lemma1.
    #[arg(long, requires = "instance")]
    trace_o: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Case {
    holds: bool,
    report: Value,
}

fn violations_json(inst: &Instance, trace: &ScheduleTrace, budget: &Rational) -> Vec<String> {
    validate_trace(inst, trace, budget).iter().map(|v| v.to_string()).collect()
}

fn lemma1(a: &VerifyArgs, inst: &Instance, opts: &SimOptions) -> Outcome<Case> {
    let trace_a = match &a.trace {
        Some(p) => read_trace(inst, p)?,
        None => simulate(inst, &Equi, &a.speed, opts)?,
    };
    let trace_o = match &a.trace_o {
        Some(p) => read_trace(inst, p)?,
        None => reference_schedule(inst, JobOrder::Instance)?,
    };
    let bad_a = violations_json(inst, &trace_a, &(&a.speed * &inst.processors));
    let bad_o = violations_json(inst, &trace_o, &inst.processors);
    if !bad_a.is_empty() || !bad_o.is_empty() {
        return Ok(Case {
            holds: false,
            report: json!({ "trace_violations": bad_a, "reference_violations": bad_o }),
        });
    }
    let (_, report) = reduce_to_parseq(inst, &trace_a, &trace_o)?;
    Ok(Case {
        holds: report.holds(),
        report: serde_json::to_value(&report).expect("reports serialize"),
    })
}

fn lemma2(inst: &Instance, opts: &SimOptions) -> Outcome<Case> {
    let front = frontload(inst)?;
    let one = Rational::one();
    let before = simulate(inst, &Equi, &one, opts)?.metrics();
    let after = simulate(&front, &Equi, &one, opts)?.metrics();
    let ee_before = simulate(inst, &EquiEqui, &one, opts)?.metrics();
    let ee_after = simulate(&front, &EquiEqui, &one, opts)?.metrics();
    let makespan = before.makespan <= after.makespan;
    let flowtime = before.flowtime <= after.flowtime;
    let setflowtime = ee_before.setflowtime <= ee_after.setflowtime;
    Ok(Case {
        holds: makespan && flowtime && setflowtime,
        report: json!({
            "equi_makespan": [r(&before.makespan), r(&after.makespan)],
            "equi_flowtime": [r(&before.flowtime), r(&after.flowtime)],
            "equi_equi_setflowtime": [r(&ee_before.setflowtime), r(&ee_after.setflowtime)],
            "makespan_holds": makespan,
            "flowtime_holds": flowtime,
            "setflowtime_holds": setflowtime,
        }),
    })
}

fn chain(a: &VerifyArgs, inst: &Instance) -> Outcome<Case> {
    let alpha = a.alpha.clone().unwrap_or_else(|| ratio(1, 2));
    let rep = chain_check(inst, &alpha)?;
    Ok(Case {
        holds: rep.violation().is_none(),
        report: rep.to_json(),
    })
}

fn proof_bound(a: &VerifyArgs, inst: &Instance, opts: &SimOptions) -> Outcome<Case> {
    inst.require_par_seq()?;
    let n = inst.max_set_size();
    let params = match &a.alpha {
        Some(alpha) => BoundParams::with_alpha(n, alpha.clone()),
        None => BoundParams::for_n(n),
    };
    let equi = simulate(inst, &Equi, &Rational::one(), opts)?;
    let trace = match &a.trace {
        Some(p) => {
            let t = read_trace(inst, p)?;
            let bad = violations_json(inst, &t, &inst.processors);
            if !bad.is_empty() || !t.same_schedule(&equi) {
                return Ok(Case {
                    holds: false,
                    report: json!({
                        "trace_violations": bad,
                        "is_equi_schedule": t.same_schedule(&equi),
                    }),
                });
            }
            t
        }
        None => equi,
    };
    let rep = proof_bound_check(inst, &trace, &params)?;
    Ok(Case {
        holds: rep.holds(),
        report: rep.to_json(),
    })
}

pub fn run(a: VerifyArgs) -> Outcome {
    if let Some(alpha) = &a.alpha {
        if !alpha.is_positive() || alpha >= &Rational::one() {
            return Err(Failure::input("--alpha must lie strictly between 0 and 1"));
        }
    }
    let opts = sim_options()?;
    let instances = match (&a.instance, a.random) {
        (Some(p), _) => vec![read_instance(p)?],
        (None, Some(k)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..k)
                .map(|_| match a.what {
                    What::Lemma1 => mixed_instance(&mut rng),
                    What::Lemma2 | What::Chain => par_seq_star_instance(&mut rng),
                    What::ProofBound => par_seq_set(&mut rng, a.n),
                })
                .collect()
        }
        (None, None) => unreachable!("clap requires an input"),
    };
    let mut failures = Vec::new();
    let mut single = None;
    for (i, inst) in instances.iter().enumerate() {
        let case = match a.what {
            What::Lemma1 => lemma1(&a, inst, &opts)?,
            What::Lemma2 => lemma2(inst, &opts)?,
            What::Chain => chain(&a, inst)?,
            What::ProofBound => proof_bound(&a, inst, &opts)?,
        };
        if !case.holds {
            failures.push(json!({
                "case": i,
                "instance": serde_json::from_str::<Value>(&inst.to_json()).expect("instance json"),
                "report": case.report.clone(),
            }));
        }
        if a.instance.is_some() {
            single = Some(case.report);
        }
    }
    let holds = failures.is_empty();
    let mut doc = json!({
        "what": a.what.name(),
        "cases": instances.len(),
        "passed": instances.len() - failures.len(),
        "holds": holds,
        "failures": failures,
    });
    if a.random.is_some() && a.instance.is_none() {
        doc["seed"] = json!(a.seed);
    }
    if let Some(rep) = single {
        doc["report"] = rep;
    }
    emit(&doc, a.out.as_deref())?;
    if holds {
        Ok(())
    } else {
        Err(Failure::Violation(None))
    }
}

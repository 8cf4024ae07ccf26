//! `malsched`: simulate, generate, reduce and verify malleable-job schedules.

mod failure;
mod sweep;
mod verify;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use malsched::adversary::{adaptive_run, example_instance, permuted_instance};
use malsched::bounds::{ratio_report, Objective};
use malsched::engine::{
    simulate, Allocation, Metrics, ObservableState, Policy, PolicyError, ScheduleTrace, SimOptions,
    DEFAULT_MAX_EVENTS,
};
use malsched::model::rational::{self, Rational};
use malsched::model::{Instance, JobRef};
use malsched::reduction::reduce_to_parseq;
use malsched::schedulers::{reference_schedule, JobOrder, PolicyId};
use serde_json::{json, Value};

use failure::{Failure, Outcome};

#[derive(Parser)]
#[command(name = "malsched", version, about = "Exact experiments on non-clairvoyant scheduling of malleable jobs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scheduler on an instance and write the trace.
    Simulate(SimulateArgs),
    /// Generate a worst-case instance.
    Adversary(AdversaryArgs),
    /// Reduce an instance to Par-Seq jobs along two schedules.
    Reduce(ReduceArgs),
    /// Bracket the optimum and report the achieved ratio.
    Bounds(BoundsArgs),
    /// Check a lemma or inequality on an instance or a random corpus.
    Verify(verify::VerifyArgs),
    /// Competitive-ratio sweep over adversarial instances, as CSV.
    Sweep(sweep::SweepArgs),
}

pub(crate) fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "equi")]
    scheduler: PolicyId,
    /// Static allocation `{"shares": {"S1/J1": "1/2", ...}}` used instead of
    /// a scheduler.
    #[arg(long, conflicts_with = "scheduler")]
    policy_file: Option<PathBuf>,
    #[arg(long, default_value = "1", value_parser = parse_rational)]
    speed: Rational,
    /// Trace output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub(crate) enum Mode {
    Example,
    Adaptive,
    Permuted,
}

impl Mode {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Mode::Example => "example",
            Mode::Adaptive => "adaptive",
            Mode::Permuted => "permuted",
        }
    }

    /// Largest `ell` allowed without `--no-guard`.
    pub(crate) fn guard(self) -> u32 {
        match self {
            Mode::Example | Mode::Adaptive => 7,
            Mode::Permuted => 4,
        }
    }
}

#[derive(Args)]
struct AdversaryArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    ell: u32,
    /// Processor speed of the adaptive game.
    #[arg(long, default_value_t = 1)]
    speed: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Policy played against (adaptive) or used for `--trace`.
    #[arg(long, default_value = "equi")]
    scheduler: PolicyId,
    #[arg(long)]
    no_guard: bool,
    /// Instance output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Schedule of the chosen policy on the instance.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Schedule whose allocations the reduced jobs must reproduce; defaults
    /// to `--scheduler` at `--speed`.
    #[arg(long)]
    trace_a: Option<PathBuf>,
    /// Reference schedule on `p` processors; defaults to the clairvoyant
    /// greedy.
    #[arg(long)]
    trace_o: Option<PathBuf>,
    #[arg(long, default_value = "equi")]
    scheduler: PolicyId,
    #[arg(long, default_value = "1", value_parser = parse_rational)]
    speed: Rational,
    /// Reduced instance output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "makespan")]
    objective: Objective,
    #[arg(long, default_value = "equi")]
    scheduler: PolicyId,
    #[arg(long, default_value = "1", value_parser = parse_rational)]
    speed: Rational,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub(crate) fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::Input)
}

pub(crate) fn read_instance(path: &Path) -> Outcome<Instance> {
    let inst = Instance::from_json(&read_text(path)?)
        .with_context(|| format!("cannot parse instance {}", path.display()))
        .map_err(Failure::Input)?;
    inst.check()
        .with_context(|| format!("invalid instance {}", path.display()))
        .map_err(Failure::Input)?;
    Ok(inst)
}

pub(crate) fn read_trace(inst: &Instance, path: &Path) -> Outcome<ScheduleTrace> {
    ScheduleTrace::from_json(inst, &read_text(path)?)
        .with_context(|| format!("cannot parse trace {}", path.display()))
        .map_err(Failure::Input)
}

pub(crate) fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(Failure::Input)
}

pub(crate) fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

/// Prints `v` and mirrors it to `out` when given.
pub(crate) fn emit(v: &Value, out: Option<&Path>) -> Outcome {
    let text = pretty(v);
    if let Some(p) = out {
        write_file(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

pub(crate) fn sim_options() -> Outcome<SimOptions> {
    let max_events = match std::env::var("MALSCHED_MAX_EVENTS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("MALSCHED_MAX_EVENTS must be a positive integer, got {v:?}")))?,
        Err(_) => DEFAULT_MAX_EVENTS,
    };
    Ok(SimOptions { max_events })
}

pub(crate) fn r(v: &Rational) -> Value {
    Value::String(rational::format(v))
}

fn metrics_json(m: &Metrics) -> Value {
    json!({
        "flowtime": r(&m.flowtime),
        "makespan": r(&m.makespan),
        "setflowtime": r(&m.setflowtime),
    })
}

/// Gives each listed job a fixed share while it is alive.
struct StaticPolicy {
    shares: HashMap<JobRef, Rational>,
}

impl StaticPolicy {
    fn load(path: &Path, inst: &Instance) -> Outcome<Self> {
        let doc: Value = serde_json::from_str(&read_text(path)?)
            .with_context(|| format!("cannot parse policy file {}", path.display()))
            .map_err(Failure::Input)?;
        let Some(map) = doc.get("shares").and_then(Value::as_object) else {
            return Err(Failure::input("policy file needs a \"shares\" object"));
        };
        let mut shares = HashMap::new();
        for (job, v) in map {
            let r = inst
                .find_job(job)
                .ok_or_else(|| Failure::input(format!("policy file names unknown job {job}")))?;
            let text = v
                .as_str()
                .ok_or_else(|| Failure::input(format!("share of {job} must be a rational string")))?;
            shares.insert(r, parse_rational(text).map_err(Failure::input)?);
        }
        Ok(StaticPolicy { shares })
    }
}

impl Policy for StaticPolicy {
    fn name(&self) -> &str {
        "policy-file"
    }

    fn allocate(&self, state: &ObservableState<'_>, _: &Rational) -> Result<Allocation, PolicyError> {
        let mut alloc = Allocation::new();
        for job in state.alive_jobs() {
            if let Some(rho) = self.shares.get(&job.job) {
                alloc.assign(job.job, rho.clone());
            }
        }
        Ok(alloc)
    }
}

fn cmd_simulate(a: SimulateArgs) -> Outcome {
    let inst = read_instance(&a.instance)?;
    let opts = sim_options()?;
    let (name, trace) = match &a.policy_file {
        Some(p) => {
            let policy = StaticPolicy::load(p, &inst)?;
            ("policy-file", simulate(&inst, &policy, &a.speed, &opts)?)
        }
        None => (a.scheduler.name(), a.scheduler.run(&inst, &a.speed, &opts)?),
    };
    if let Some(out) = &a.out {
        write_file(out, &trace.to_json(&inst))?;
    }
    emit(
        &json!({
            "scheduler": name,
            "speed": r(&a.speed),
            "metrics": metrics_json(&trace.metrics()),
        }),
        None,
    )
}

pub(crate) fn check_guard(mode: Mode, ell: u32, no_guard: bool) -> Outcome {
    if !no_guard && ell > mode.guard() {
        return Err(Failure::input(format!(
            "ell = {ell} exceeds the {} guard of {}; pass --no-guard to run it anyway",
            mode.name(),
            mode.guard()
        )));
    }
    Ok(())
}

pub(crate) fn online(p: PolicyId) -> Outcome<Box<dyn Policy>> {
    p.online()
        .ok_or_else(|| Failure::input(format!("{} is clairvoyant and cannot play the adaptive game", p.name())))
}

fn cmd_adversary(a: AdversaryArgs) -> Outcome {
    check_guard(a.mode, a.ell, a.no_guard)?;
    let opts = sim_options()?;
    let mut summary = json!({ "mode": a.mode.name(), "ell": a.ell });
    let (inst, trace) = match a.mode {
        Mode::Example | Mode::Permuted => {
            let inst = if a.mode == Mode::Example {
                example_instance(a.ell)?
            } else {
                summary["seed"] = json!(a.seed);
                permuted_instance(a.ell, a.seed)?
            };
            let trace = match &a.trace {
                Some(_) => Some(a.scheduler.run(&inst, &Rational::from_integer(a.speed.into()), &opts)?),
                None => None,
            };
            (inst, trace)
        }
        Mode::Adaptive => {
            let policy = online(a.scheduler)?;
            let run = adaptive_run(policy.as_ref(), a.ell, a.speed)?;
            summary["round_par"] = run.round_par.iter().map(r).collect();
            summary["alive"] = json!(run.alive);
            summary["stalled"] = json!(run.stalled);
            (run.instance, Some(run.trace))
        }
    };
    summary["jobs"] = json!(inst.job_count());
    summary["par"] = r(&inst.par()?);
    if let Some(t) = &trace {
        summary["scheduler"] = json!(a.scheduler.name());
        summary["speed"] = json!(a.speed);
        summary["metrics"] = metrics_json(&t.metrics());
    }
    if let Some(out) = &a.out {
        write_file(out, &inst.to_json())?;
    }
    if let (Some(path), Some(t)) = (&a.trace, &trace) {
        write_file(path, &t.to_json(&inst))?;
    }
    emit(&summary, None)
}

fn cmd_reduce(a: ReduceArgs) -> Outcome {
    let inst = read_instance(&a.instance)?;
    let opts = sim_options()?;
    let trace_a = match &a.trace_a {
        Some(p) => read_trace(&inst, p)?,
        None => a.scheduler.run(&inst, &a.speed, &opts)?,
    };
    let trace_o = match &a.trace_o {
        Some(p) => read_trace(&inst, p)?,
        None => reference_schedule(&inst, JobOrder::Instance)?,
    };
    let (reduced, report) = reduce_to_parseq(&inst, &trace_a, &trace_o)?;
    if let Some(out) = &a.out {
        write_file(out, &reduced.to_json())?;
    }
    let mut doc = serde_json::to_value(&report).expect("reports serialize");
    doc["holds"] = json!(report.holds());
    emit(&doc, a.report.as_deref())?;
    if report.holds() {
        Ok(())
    } else {
        Err(Failure::Violation(None))
    }
}

fn cmd_bounds(a: BoundsArgs) -> Outcome {
    let inst = read_instance(&a.instance)?;
    let rep = ratio_report(&inst, a.scheduler, a.objective, &a.speed, &sim_options()?)?;
    let mut doc = rep.to_json();
    doc["objective"] = json!(a.objective.name());
    doc["scheduler"] = json!(a.scheduler.name());
    doc["speed"] = r(&a.speed);
    emit(&doc, a.out.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Adversary(a) => cmd_adversary(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Verify(a) => verify::run(a),
        Command::Sweep(a) => sweep::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(e) => eprintln!("error: {e:#}"),
                Failure::Simulation(e) => eprintln!("simulation error: {e:#}"),
                Failure::Violation(Some(v)) => {
                    eprintln!("violation");
                    print!("{}", pretty(v));
                }
                Failure::Violation(None) => eprintln!("violation: see report"),
            }
            f.code()
        }
    }
}

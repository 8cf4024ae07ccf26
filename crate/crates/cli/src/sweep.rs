use std::path::PathBuf;

use clap::Args;
use malsched::adversary::{adaptive_run, example_instance, permuted_instance};
use malsched::bounds::{ratio_report, Objective};
use malsched::model::rational::{self, Rational};
use malsched::schedulers::PolicyId;

use crate::failure::{Failure, Outcome};
use crate::{check_guard, online, sim_options, write_file, Mode};

#[derive(Args)]
pub struct SweepArgs {
    /// Inclusive range such as `2..5`, or a single value.
    #[arg(long)]
    ell: String,
    #[arg(long, value_enum, default_value = "example")]
    mode: Mode,
    #[arg(long, value_delimiter = ',', default_value = "equi")]
    scheduler: Vec<PolicyId>,
    #[arg(long, value_delimiter = ',', default_value = "makespan")]
    objective: Vec<Objective>,
    /// Number of permutation seeds per `ell` (permuted mode).
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// First permutation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    speed: u64,
    #[arg(long)]
    no_guard: bool,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

const HEADER: [&str; 14] = [
    "ell",
    "n",
    "scheduler",
    "objective",
    "achieved",
    "opt_upper",
    "opt_lower",
    "ratio_lower",
    "mode",
    "seed",
    "achieved_dec",
    "opt_upper_dec",
    "opt_lower_dec",
    "ratio_lower_dec",
];

fn parse_range(s: &str) -> Outcome<(u32, u32)> {
    let num = |t: &str| {
        t.trim()
            .parse::<u32>()
            .map_err(|_| Failure::input(format!("bad ell range {s:?}")))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(Failure::input(format!("empty ell range {s:?}")));
    }
    Ok((lo, hi))
}

struct Row {
    ell: u32,
    seed: Option<u64>,
    scheduler: PolicyId,
    objective: Objective,
    n: usize,
    achieved: Rational,
    opt_upper: Rational,
    opt_lower: Rational,
    ratio_lower: Rational,
}

impl Row {
    fn key(&self) -> (u32, Option<u64>, PolicyId, Objective) {
        (self.ell, self.seed, self.scheduler, self.objective)
    }

    fn record(&self, mode: Mode) -> Vec<String> {
        let exact = [&self.achieved, &self.opt_upper, &self.opt_lower, &self.ratio_lower];
        let mut out = vec![
            self.ell.to_string(),
            self.n.to_string(),
            self.scheduler.name().to_string(),
            self.objective.name().to_string(),
        ];
        out.extend(exact.iter().map(|v| rational::format(v)));
        out.push(mode.name().to_string());
        out.push(self.seed.map(|s| s.to_string()).unwrap_or_default());
        out.extend(exact.iter().map(|v| rational::to_decimal(v, 12)));
        out
    }
}

pub fn run(a: SweepArgs) -> Outcome {
    let (lo, hi) = parse_range(&a.ell)?;
    check_guard(a.mode, hi, a.no_guard)?;
    if a.speed == 0 {
        return Err(Failure::input("--speed must be positive"));
    }
    if a.mode == Mode::Permuted && a.seeds == 0 {
        return Err(Failure::input("--seeds must be positive"));
    }
    let opts = sim_options()?;
    let speed = Rational::from_integer(a.speed.into());
    let mut rows = Vec::new();
    for ell in lo..=hi {
        let seeds: Vec<Option<u64>> = match a.mode {
            Mode::Permuted => (a.seed..a.seed + a.seeds).map(Some).collect(),
            _ => vec![None],
        };
        for seed in seeds {
            let shared = match (a.mode, seed) {
                (Mode::Example, _) => Some(example_instance(ell)?),
                (Mode::Permuted, Some(s)) => Some(permuted_instance(ell, s)?),
                _ => None,
            };
            for &scheduler in &a.scheduler {
                let inst = match &shared {
                    Some(i) => i.clone(),
                    None => adaptive_run(online(scheduler)?.as_ref(), ell, a.speed)?.instance,
                };
                for &objective in &a.objective {
                    let rep = ratio_report(&inst, scheduler, objective, &speed, &opts)?;
                    rows.push(Row {
                        ell,
                        seed,
                        scheduler,
                        objective,
                        n: inst.job_count(),
                        achieved: rep.achieved,
                        opt_upper: rep.opt_upper,
                        opt_lower: rep.opt_lower,
                        ratio_lower: rep.ratio_lower,
                    });
                }
            }
        }
    }
    rows.sort_by_key(Row::key);
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::Input(e.into());
    w.write_record(HEADER).map_err(csv_err)?;
    for row in &rows {
        w.write_record(row.record(a.mode)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Input(anyhow::anyhow!("{e}")))?;
    let text = String::from_utf8(bytes).expect("csv output is utf-8");
    match &a.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

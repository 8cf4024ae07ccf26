//! Lower and upper bounds on the optimum, and exact checks of the counting
//! and chain inequalities behind the Equi and Equi∘Equi guarantees.
//!
//! Irrational constants only enter through [`RationalBracket`]s; every
//! comparison is exact against the side of the bracket that makes the
//! inequality easiest to satisfy.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::engine::{simulate, ScheduleTrace, SimError, SimOptions};
use crate::model::rational::{self, ceil_to_grid, floor_to_grid, Rational};
use crate::model::{Instance, JobRef, ModelError};
use crate::reduction::{
    collapse_sets_to_jobs, covering_limit, frontload, mostly_sequential, phase_counts,
    substitute, JobMapping, ReductionError,
};
use crate::schedulers::{par_first, EquiEqui, Equi, JobOrder, PolicyId, SchedError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error("trace does not belong to the instance: {0}")]
    Mismatch(String),
}

impl From<SchedError> for BoundsError {
    fn from(e: SchedError) -> Self {
        match e {
            SchedError::Model(m) => BoundsError::Model(m),
            SchedError::Sim(s) => BoundsError::Sim(s),
        }
    }
}

const GRID: i64 = 10_000_000;

/// Closed interval `[lo, hi]` known to contain an irrational constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalBracket {
    pub lo: Rational,
    pub hi: Rational,
}

impl RationalBracket {
    /// Brackets a value computed in floating point on a `1e-7` grid, with
    /// a margin far above double rounding error. Width is at most `1e-6`.
    pub fn around(v: f64) -> Self {
        let margin = 1e-9 * v.abs().max(1.0);
        RationalBracket {
            lo: floor_to_grid(v - margin, GRID),
            hi: ceil_to_grid(v + margin, GRID),
        }
    }

    pub fn exact(v: Rational) -> Self {
        RationalBracket {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }
}

/// `2 + sqrt(3)`, bracketed by `1732050^2 < 3 * 10^12 < 1732051^2`.
pub fn two_plus_sqrt3() -> RationalBracket {
    RationalBracket {
        lo: rational::ratio(3_732_050, 1_000_000),
        hi: rational::ratio(3_732_051, 1_000_000),
    }
}

/// Threshold parameter for the counting arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundParams {
    /// Largest set size.
    pub n: usize,
    pub alpha: Rational,
    /// `ln n / ln(1/alpha)`.
    pub log_ratio: RationalBracket,
}

impl BoundParams {
    /// `alpha = (ln ln n)^2 / ln n` rounded to the nearest multiple of
    /// `1e-7`; `1/2` when `n < 16`.
    pub fn for_n(n: usize) -> Self {
        let alpha = if n < 16 {
            rational::ratio(1, 2)
        } else {
            let ln = (n as f64).ln();
            let a = ln.ln().powi(2) / ln;
            rational::ratio((a * GRID as f64).round() as i64, GRID)
        };
        Self::with_alpha(n, alpha)
    }

    /// Panics unless `0 < alpha < 1`.
    pub fn with_alpha(n: usize, alpha: Rational) -> Self {
        assert!(alpha.is_positive() && alpha < Rational::one(), "alpha must lie in (0, 1)");
        let log_ratio = if n <= 1 {
            RationalBracket::exact(Rational::zero())
        } else {
            let inv = (Rational::one() / &alpha).clone();
            RationalBracket::around((n as f64).ln() / rational::to_f64(&inv).ln())
        };
        BoundParams {
            n,
            alpha,
            log_ratio,
        }
    }
}

/// Per-job chain bound `seq(J) + par(J)/p`, and `par/p` over the jobs.
fn job_chain(inst: &Instance, r: JobRef) -> Result<Rational, ModelError> {
    let job = inst.job(r);
    Ok(job.seq()? + job.par()? / &inst.processors)
}

/// `max(par/p, max_j seq(J_j) + par(J_j)/p)` over all jobs.
pub fn makespan_lower_bound(inst: &Instance) -> Result<Rational, ModelError> {
    inst.require_par_seq_star()?;
    let mut best = inst.par()? / &inst.processors;
    for r in inst.job_refs() {
        best = best.max(job_chain(inst, r)?);
    }
    Ok(best)
}

/// Sum of ascending prefix sums: a lower bound on the total completion of
/// items that each need `w_i` units of one shared resource.
fn prefix_bound(mut works: Vec<Rational>) -> Rational {
    works.sort();
    let mut acc = Rational::zero();
    let mut total = Rational::zero();
    for w in works {
        acc += w;
        total += &acc;
    }
    total
}

/// Largest of the summed per-set makespan bounds and the prefix-sum bound
/// on the sets' parallel work.
pub fn setflowtime_lower_bound(inst: &Instance) -> Result<Rational, ModelError> {
    inst.require_par_seq_star()?;
    let mut per_set = Rational::zero();
    let mut works = Vec::with_capacity(inst.sets.len());
    for (s, set) in inst.sets.iter().enumerate() {
        let par = set.par()? / &inst.processors;
        let mut best = par.clone();
        for j in 0..set.jobs.len() {
            best = best.max(job_chain(inst, JobRef::new(s, j))?);
        }
        per_set += best;
        works.push(par);
    }
    Ok(per_set.max(prefix_bound(works)))
}

/// The set bound with every job in its own set.
pub fn flowtime_lower_bound(inst: &Instance) -> Result<Rational, ModelError> {
    inst.require_par_seq_star()?;
    let mut chains = Rational::zero();
    let mut works = Vec::new();
    for r in inst.job_refs() {
        chains += job_chain(inst, r)?;
        works.push(inst.job(r).par()? / &inst.processors);
    }
    Ok(chains.max(prefix_bound(works)))
}

fn r(v: &Rational) -> Value {
    Value::String(rational::format(v))
}

/// Exact measurements for the counting argument on one Equi schedule of a
/// frontloaded set. `A` is the time where at least a `1 - alpha` fraction
/// of the alive jobs is sequential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofBoundReport {
    pub n: usize,
    pub alpha: Rational,
    pub par: Rational,
    pub seq: Rational,
    pub makespan: Rational,
    /// `|A|`
    pub seq_time: Rational,
    /// `|Ā|`
    pub par_time: Rational,
    /// `par / (alpha * p)`
    pub par_time_bound: Rational,
    /// Windows of length `seq` used by the greedy cover of `A`; `None`
    /// when `A` is non-empty while `seq` is zero.
    pub cover: Option<u64>,
    /// `1 + max{k : alpha^k n >= 1}`
    pub cover_limit: u64,
    /// `ln n / ln(1/alpha)`
    pub log_ratio: RationalBracket,
}

impl ProofBoundReport {
    pub fn par_time_holds(&self) -> bool {
        self.par_time <= self.par_time_bound
    }

    pub fn partition_holds(&self) -> bool {
        &self.seq_time + &self.par_time == self.makespan
    }

    pub fn cover_holds(&self) -> bool {
        self.cover.is_some_and(|q| q <= self.cover_limit)
    }

    /// `|A| <= cover_limit * seq`
    pub fn seq_time_holds(&self) -> bool {
        self.seq_time <= Rational::from_integer(self.cover_limit.into()) * &self.seq
    }

    /// `|A| <= (ln n / ln(1/alpha)) * seq`, against the upper bracket.
    pub fn seq_time_log_holds(&self) -> bool {
        self.seq_time <= &self.log_ratio.hi * &self.seq
    }

    /// `|A| <= ceil(ln n / ln(1/alpha)) * seq`, against the upper bracket.
    pub fn seq_time_ceil_holds(&self) -> bool {
        self.seq_time <= self.log_ratio.hi.ceil() * &self.seq
    }

    /// `makespan <= par/(alpha p) + cover_limit * seq`
    pub fn makespan_holds(&self) -> bool {
        self.makespan
            <= &self.par_time_bound + Rational::from_integer(self.cover_limit.into()) * &self.seq
    }

    /// `makespan <= par/(alpha p) + (ln n / ln(1/alpha)) * seq`
    pub fn makespan_log_holds(&self) -> bool {
        self.makespan <= &self.par_time_bound + &self.log_ratio.hi * &self.seq
    }

    /// Everything the counting argument guarantees.
    pub fn holds(&self) -> bool {
        self.par_time_holds()
            && self.partition_holds()
            && self.cover_holds()
            && self.seq_time_holds()
            && self.makespan_holds()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "n": self.n,
            "alpha": r(&self.alpha),
            "par": r(&self.par),
            "seq": r(&self.seq),
            "makespan": r(&self.makespan),
            "seq_time": r(&self.seq_time),
            "par_time": r(&self.par_time),
            "par_time_bound": r(&self.par_time_bound),
            "cover": self.cover,
            "cover_limit": self.cover_limit,
            "log_ratio": [r(&self.log_ratio.lo), r(&self.log_ratio.hi)],
            "par_time_holds": self.par_time_holds(),
            "partition_holds": self.partition_holds(),
            "cover_holds": self.cover_holds(),
            "seq_time_holds": self.seq_time_holds(),
            "seq_time_log_holds": self.seq_time_log_holds(),
            "seq_time_ceil_holds": self.seq_time_ceil_holds(),
            "makespan_holds": self.makespan_holds(),
            "makespan_log_holds": self.makespan_log_holds(),
            "holds": self.holds(),
        })
    }
}

/// Measures `A` and `Ā` on `trace`, the unit-speed Equi schedule of the
/// single Par-Seq set `inst`.
pub fn proof_bound_check(
    inst: &Instance,
    trace: &ScheduleTrace,
    params: &BoundParams,
) -> Result<ProofBoundReport, BoundsError> {
    inst.require_par_seq()?;
    if inst.sets.len() != 1 {
        return Err(BoundsError::Mismatch(format!(
            "expected one set, found {}",
            inst.sets.len()
        )));
    }
    if trace.shape() != inst.shape() {
        return Err(BoundsError::Mismatch("trace shape differs".into()));
    }
    let set = &inst.sets[0];
    let grid = trace.grid();
    let counts = phase_counts(inst, trace);
    let mut seq_time = Rational::zero();
    let mut par_time = Rational::zero();
    let mut a_runs: Vec<(Rational, Rational)> = Vec::new();
    for k in 0..grid.len().saturating_sub(1) {
        let alive = counts.alive[0][k];
        if alive == 0 {
            continue;
        }
        let dt = &grid[k + 1] - &grid[k];
        if mostly_sequential(counts.sequential[0][k], alive, &params.alpha) {
            seq_time += &dt;
            match a_runs.last_mut() {
                Some(last) if last.1 == grid[k] => last.1 = grid[k + 1].clone(),
                _ => a_runs.push((grid[k].clone(), grid[k + 1].clone())),
            }
        } else {
            par_time += dt;
        }
    }
    let seq = set.seq()?;
    let cover = if a_runs.is_empty() {
        Some(0)
    } else if seq.is_zero() {
        None
    } else {
        let mut q = 0u64;
        let mut i = 0;
        let mut t = a_runs[0].0.clone();
        loop {
            q += 1;
            let reach = &t + &seq;
            while i < a_runs.len() && a_runs[i].1 <= reach {
                i += 1;
            }
            if i == a_runs.len() {
                break;
            }
            t = a_runs[i].0.clone().max(reach);
        }
        Some(q)
    };
    let par = set.par()?;
    Ok(ProofBoundReport {
        n: set.jobs.len(),
        alpha: params.alpha.clone(),
        par_time_bound: &par / (&params.alpha * &inst.processors),
        par,
        seq,
        makespan: grid.last().cloned().unwrap_or_default(),
        seq_time,
        par_time,
        cover,
        cover_limit: covering_limit(set.jobs.len(), &params.alpha),
        log_ratio: params.log_ratio.clone(),
    })
}

/// Quantities along the chain
/// `E∘E(S) <= E∘E(S') = Equi(J) <= Equi(J') <= (2+√3) OPT(J')`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainReport {
    pub alpha: Rational,
    /// Setflowtime of Equi∘Equi on the instance.
    pub setflowtime: Rational,
    /// Setflowtime of Equi∘Equi on the frontloaded instance.
    pub setflowtime_frontloaded: Rational,
    /// Flowtime of Equi on the collapsed jobs.
    pub flowtime_collapsed: Rational,
    /// Whether Equi on the collapsed jobs is the summed Equi∘Equi schedule.
    pub collapsed_schedule_matches: bool,
    /// Flowtime of Equi on the frontloaded collapsed jobs.
    pub flowtime_final: Rational,
    /// Flowtime of the clairvoyant greedy (smallest parallel work first) on
    /// the frontloaded collapsed jobs.
    pub opt_upper: Rational,
    /// Parallel and sequential work of the frontloaded collapsed jobs,
    /// each summed over jobs.
    pub par_final: Rational,
    pub seq_final: Rational,
    pub constant: RationalBracket,
}

impl ChainReport {
    pub fn frontload_holds(&self) -> bool {
        self.setflowtime <= self.setflowtime_frontloaded
    }

    pub fn collapse_holds(&self) -> bool {
        self.collapsed_schedule_matches && self.setflowtime_frontloaded == self.flowtime_collapsed
    }

    pub fn job_frontload_holds(&self) -> bool {
        self.flowtime_collapsed <= self.flowtime_final
    }

    /// `Equi(J') <= (2+√3) * flowtime of an explicit schedule of J'`.
    pub fn final_holds(&self) -> bool {
        self.flowtime_final <= &self.constant.hi * &self.opt_upper
    }

    /// `Equi(J') <= (2+√3) * (par(J') + seq(J'))` with both works summed
    /// over jobs.
    pub fn literal_bound_holds(&self) -> bool {
        self.flowtime_final <= &self.constant.hi * (&self.par_final + &self.seq_final)
    }

    /// First failing link, numbered 1 to 4.
    pub fn violation(&self) -> Option<usize> {
        [
            self.frontload_holds(),
            self.collapse_holds(),
            self.job_frontload_holds(),
            self.final_holds(),
        ]
        .iter()
        .position(|ok| !ok)
        .map(|i| i + 1)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "alpha": r(&self.alpha),
            "setflowtime": r(&self.setflowtime),
            "setflowtime_frontloaded": r(&self.setflowtime_frontloaded),
            "flowtime_collapsed": r(&self.flowtime_collapsed),
            "collapsed_schedule_matches": self.collapsed_schedule_matches,
            "flowtime_final": r(&self.flowtime_final),
            "opt_upper": r(&self.opt_upper),
            "par_final": r(&self.par_final),
            "seq_final": r(&self.seq_final),
            "constant": [r(&self.constant.lo), r(&self.constant.hi)],
            "links": [
                self.frontload_holds(),
                self.collapse_holds(),
                self.job_frontload_holds(),
                self.final_holds(),
            ],
            "literal_bound_holds": self.literal_bound_holds(),
            "violation": self.violation(),
        })
    }
}

/// Materializes every instance and schedule along the chain for a
/// (Par-Seq)* collection and measures each link.
pub fn chain_check(inst: &Instance, alpha: &Rational) -> Result<ChainReport, BoundsError> {
    inst.check()?;
    inst.require_par_seq_star()?;
    let one = Rational::one();
    let opts = SimOptions::default();
    let ee = simulate(inst, &EquiEqui, &one, &opts)?;
    let s_prime = frontload(inst)?;
    let ee_prime = simulate(&s_prime, &EquiEqui, &one, &opts)?;
    let j = collapse_sets_to_jobs(&s_prime, &ee_prime, alpha)?;
    let equi_j = simulate(&j, &Equi, &one, &opts)?;
    let summed = substitute(&ee_prime, &j, &JobMapping::collapse_sets(&s_prime.shape()))?;
    let j_prime = frontload(&j)?;
    let equi_jp = simulate(&j_prime, &Equi, &one, &opts)?;
    let opt = par_first(&j_prime, JobOrder::JobsByPar)?;
    let mut par_final = Rational::zero();
    let mut seq_final = Rational::zero();
    for set in &j_prime.sets {
        for job in &set.jobs {
            par_final += job.par()?;
            seq_final += job.seq()?;
        }
    }
    Ok(ChainReport {
        alpha: alpha.clone(),
        setflowtime: ee.metrics().setflowtime,
        setflowtime_frontloaded: ee_prime.metrics().setflowtime,
        flowtime_collapsed: equi_j.metrics().flowtime,
        collapsed_schedule_matches: equi_j.same_schedule(&summed),
        flowtime_final: equi_jp.metrics().flowtime,
        opt_upper: opt.metrics().flowtime,
        par_final,
        seq_final,
        constant: two_plus_sqrt3(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Objective {
    Makespan,
    Setflowtime,
    Flowtime,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Makespan => "makespan",
            Objective::Setflowtime => "setflowtime",
            Objective::Flowtime => "flowtime",
        }
    }

    pub fn of(self, trace: &ScheduleTrace) -> Rational {
        let m = trace.metrics();
        match self {
            Objective::Makespan => m.makespan,
            Objective::Setflowtime => m.setflowtime,
            Objective::Flowtime => m.flowtime,
        }
    }

    /// Priority of the clairvoyant greedy used as upper bound.
    pub fn greedy_order(self) -> JobOrder {
        match self {
            Objective::Makespan => JobOrder::Instance,
            Objective::Setflowtime => JobOrder::SetsByPar,
            Objective::Flowtime => JobOrder::JobsByPar,
        }
    }

    pub fn lower_bound(self, inst: &Instance) -> Result<Rational, ModelError> {
        match self {
            Objective::Makespan => makespan_lower_bound(inst),
            Objective::Setflowtime => setflowtime_lower_bound(inst),
            Objective::Flowtime => flowtime_lower_bound(inst),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Objective::Makespan, Objective::Setflowtime, Objective::Flowtime]
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown objective {s:?} (expected makespan, setflowtime or flowtime)"))
    }
}

/// Achieved objective against a bracket on the optimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioReport {
    pub achieved: Rational,
    pub opt_lower: Rational,
    pub opt_upper: Rational,
    /// `achieved / opt_upper`
    pub ratio_lower: Rational,
    /// `achieved / opt_lower`, absent when the lower bound is zero.
    pub ratio_upper: Option<Rational>,
}

impl RatioReport {
    pub fn to_json(&self) -> Value {
        json!({
            "achieved": r(&self.achieved),
            "opt_lower": r(&self.opt_lower),
            "opt_upper": r(&self.opt_upper),
            "ratio_lower": r(&self.ratio_lower),
            "ratio_upper": self.ratio_upper.as_ref().map(r),
        })
    }
}

/// Runs `policy` at `speed` and brackets the optimum on `p` processors.
pub fn ratio_report(
    inst: &Instance,
    policy: PolicyId,
    objective: Objective,
    speed: &Rational,
    opts: &SimOptions,
) -> Result<RatioReport, BoundsError> {
    inst.require_par_seq_star()?;
    let achieved = objective.of(&policy.run(inst, speed, opts)?);
    let opt_upper = objective.of(&par_first(inst, objective.greedy_order())?);
    let opt_lower = objective.lower_bound(inst)?;
    let ratio_lower = if opt_upper.is_zero() {
        Rational::one()
    } else {
        &achieved / &opt_upper
    };
    let ratio_upper = (!opt_lower.is_zero()).then(|| &achieved / &opt_lower);
    Ok(RatioReport {
        achieved,
        opt_lower,
        opt_upper,
        ratio_lower,
        ratio_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::example_instance;
    use crate::model::rational::{int, ratio};
    use crate::model::{Job, JobSet, Phase};

    fn sets(list: Vec<Vec<Vec<Phase>>>) -> Instance {
        Instance::new(
            int(1),
            list.into_iter()
                .enumerate()
                .map(|(s, jobs)| {
                    JobSet::new(
                        format!("S{}", s + 1),
                        jobs.into_iter()
                            .enumerate()
                            .map(|(j, p)| Job::new(format!("J{}", j + 1), p))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn bracket_for_two_plus_sqrt3() {
        let b = two_plus_sqrt3();
        let lo = &b.lo - int(2);
        let hi = &b.hi - int(2);
        assert!(&lo * &lo < int(3) && &hi * &hi > int(3));
        assert!(b.width() <= ratio(1, 1_000_000));
    }

    #[test]
    fn params() {
        assert_eq!(BoundParams::for_n(10).alpha, ratio(1, 2));
        let p = BoundParams::for_n(1000);
        let a = rational::to_f64(&p.alpha);
        assert!((a - 0.540_8).abs() < 1e-3);
        assert!(p.log_ratio.width() <= ratio(1, 1_000_000));
        assert!(p.log_ratio.contains(&ratio(11_237, 1000)) || p.log_ratio.lo > ratio(11, 1));
    }

    #[test]
    fn makespan_bounds() {
        let all_par = Instance::new(
            int(2),
            vec![JobSet::new(
                "S1",
                vec![Job::new("J1", vec![Phase::par(int(2))]), Job::new("J2", vec![Phase::par(int(3))])],
            )],
        );
        assert_eq!(makespan_lower_bound(&all_par).unwrap(), ratio(5, 2));
        let chain = sets(vec![vec![vec![Phase::seq(int(3)), Phase::par(int(2))]]]);
        assert_eq!(makespan_lower_bound(&chain).unwrap(), int(5));
        let ex = example_instance(3).unwrap();
        assert_eq!(makespan_lower_bound(&ex).unwrap(), ratio(40, 27));
    }

    #[test]
    fn setflowtime_bounds() {
        let par = sets(vec![vec![vec![Phase::par(int(1))]], vec![vec![Phase::par(int(2))]]]);
        assert_eq!(setflowtime_lower_bound(&par).unwrap(), int(4));
        let seq = sets(vec![vec![vec![Phase::seq(int(2))]], vec![vec![Phase::seq(int(3))]]]);
        assert_eq!(setflowtime_lower_bound(&seq).unwrap(), int(5));
        let ex = example_instance(2).unwrap();
        assert_eq!(
            setflowtime_lower_bound(&ex).unwrap(),
            makespan_lower_bound(&ex).unwrap()
        );
    }

    #[test]
    fn counting_argument_on_the_example() {
        let s = frontload(&example_instance(3).unwrap()).unwrap();
        let t = simulate(&s, &Equi, &int(1), &SimOptions::default()).unwrap();
        let rep = proof_bound_check(&s, &t, &BoundParams::with_alpha(27, ratio(1, 2))).unwrap();
        assert!(rep.holds(), "{}", rep.to_json());
        assert!(rep.seq_time_log_holds());

        let seq_only = sets(vec![vec![vec![Phase::seq(int(2))], vec![Phase::seq(int(1))]]]);
        let t = simulate(&seq_only, &Equi, &int(1), &SimOptions::default()).unwrap();
        let rep = proof_bound_check(&seq_only, &t, &BoundParams::with_alpha(2, ratio(1, 2))).unwrap();
        assert_eq!(rep.par_time, int(0));
        assert_eq!(rep.seq_time, int(2));
        assert!(rep.holds());
    }

    #[test]
    fn single_job_counting_needs_the_extra_window() {
        // one job, ln n = 0: the logarithmic form cannot hold
        let s = sets(vec![vec![vec![Phase::par(ratio(1, 10)), Phase::seq(int(1))]]]);
        let t = simulate(&s, &Equi, &int(1), &SimOptions::default()).unwrap();
        let rep = proof_bound_check(&s, &t, &BoundParams::with_alpha(1, ratio(1, 2))).unwrap();
        assert!(rep.holds());
        assert!(!rep.seq_time_log_holds());
    }

    #[test]
    fn integer_log_ratio_needs_the_extra_window() {
        let s = sets(vec![vec![
            vec![Phase::par(ratio(1, 2)), Phase::seq(int(1))],
            vec![Phase::seq(int(1))],
        ]]);
        let t = simulate(&s, &Equi, &int(1), &SimOptions::default()).unwrap();
        let rep = proof_bound_check(&s, &t, &BoundParams::with_alpha(2, ratio(1, 2))).unwrap();
        assert_eq!(rep.seq_time, int(2));
        assert_eq!(rep.cover_limit, 2);
        assert!(rep.holds());
        assert!(!rep.seq_time_log_holds());
    }

    #[test]
    fn chain_on_hand_instance() {
        let s = sets(vec![
            vec![vec![Phase::par(int(1))]],
            vec![vec![Phase::seq(int(1))], vec![Phase::par(int(1))]],
        ]);
        let rep = chain_check(&s, &ratio(1, 2)).unwrap();
        assert_eq!(rep.setflowtime, ratio(17, 4));
        assert_eq!(rep.violation(), None, "{}", rep.to_json());
        assert!(rep.literal_bound_holds());
    }

    #[test]
    fn chain_literal_bound_fails_on_parallel_singletons() {
        let s = sets((0..5).map(|_| vec![vec![Phase::par(int(1))]]).collect());
        let rep = chain_check(&s, &ratio(1, 2)).unwrap();
        assert_eq!(rep.violation(), None);
        assert_eq!(rep.flowtime_final, int(25));
        assert!(!rep.literal_bound_holds());
    }

    #[test]
    fn ratio_reports() {
        let ex = example_instance(3).unwrap();
        let rep = ratio_report(&ex, PolicyId::Equi, Objective::Makespan, &int(1), &SimOptions::default()).unwrap();
        assert_eq!(rep.achieved, int(4));
        assert_eq!(rep.opt_upper, int(2));
        assert_eq!(rep.ratio_lower, int(2));

        let eps = ratio(1, 100);
        let serial = sets(vec![(0..100).map(|_| vec![Phase::par(eps.clone()), Phase::seq(int(1))]).collect()]);
        let rep = ratio_report(&serial, PolicyId::EquiSerial, Objective::Makespan, &int(1), &SimOptions::default()).unwrap();
        assert_eq!(rep.achieved, int(101));
        assert_eq!(rep.opt_upper, int(2));
        assert_eq!(rep.ratio_lower, ratio(101, 2));

        let single = sets(vec![vec![vec![Phase::par(int(2)), Phase::seq(int(1))]]]);
        let rep = ratio_report(&single, PolicyId::Equi, Objective::Makespan, &int(1), &SimOptions::default()).unwrap();
        assert_eq!(rep.ratio_lower, int(1));
    }
}

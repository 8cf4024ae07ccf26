use std::collections::{BTreeSet, HashMap};

use num_traits::{Signed, Zero};

use super::trace::{offsets_of, Event, Piece, ScheduleTrace, Subject};
use super::{
    AliveJob, AliveSet, Allocation, ClairvoyantPolicy, ClairvoyantView, JobProgress,
    ObservableState, Policy, PolicyError, SimError,
};
use crate::model::{Instance, JobRef, Phase, Rational};

pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimOptions {
    /// Upper bound on event-loop iterations before giving up.
    pub max_events: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

/// Runs a non-clairvoyant policy on `speed * processors` processors.
pub fn simulate(
    inst: &Instance,
    policy: &dyn Policy,
    speed: &Rational,
    opts: &SimOptions,
) -> Result<ScheduleTrace, SimError> {
    run(inst, speed, opts, |state, _, budget| policy.allocate(state, budget))
}

/// Runs a clairvoyant policy on `speed * processors` processors.
pub fn simulate_clairvoyant(
    inst: &Instance,
    policy: &dyn ClairvoyantPolicy,
    speed: &Rational,
    opts: &SimOptions,
) -> Result<ScheduleTrace, SimError> {
    run(inst, speed, opts, |state, engine, budget| {
        let remaining = |f: usize| engine.remaining(f);
        let view = ClairvoyantView {
            instance: inst,
            state,
            progress: &engine.progress,
            offsets: &engine.offsets,
            remaining: &remaining,
        };
        policy.allocate(&view, budget)
    })
}

/// Jobs whose rate has been equal since they joined. Their remaining work
/// is `key - clock`, so advancing time costs one update per class.
struct Class {
    rate: Rational,
    clock: Rational,
    members: BTreeSet<(Rational, usize)>,
}

struct Engine<'a> {
    inst: &'a Instance,
    offsets: Vec<usize>,
    refs: Vec<JobRef>,
    phases: Vec<&'a [Phase]>,
    progress: Vec<JobProgress>,
    alive_in_set: Vec<usize>,
    alive: Vec<usize>,
    /// Class of each job, or `None` while it waits to be assigned one.
    class_of: Vec<Option<usize>>,
    key: Vec<Rational>,
    classes: Vec<Class>,
    pending: Vec<usize>,
    now: Rational,
    grid: Vec<Rational>,
    pieces: Vec<Vec<Piece>>,
    events: Vec<Event>,
    job_completions: Vec<Rational>,
    set_completions: Vec<Rational>,
}

impl<'a> Engine<'a> {
    fn new(inst: &'a Instance) -> Self {
        let shape = inst.shape();
        let refs: Vec<JobRef> = inst.job_refs().collect();
        let n = refs.len();
        let phases: Vec<&[Phase]> = refs.iter().map(|&r| inst.job(r).phases.as_slice()).collect();
        Engine {
            inst,
            offsets: offsets_of(&shape),
            key: phases.iter().map(|p| p[0].work.clone()).collect(),
            phases,
            refs,
            progress: vec![JobProgress { phase: 0, done: false }; n],
            alive_in_set: shape,
            alive: (0..n).collect(),
            class_of: vec![None; n],
            classes: Vec::new(),
            pending: (0..n).collect(),
            now: Rational::zero(),
            grid: vec![Rational::zero()],
            pieces: vec![Vec::new(); n],
            events: Vec::new(),
            job_completions: vec![Rational::zero(); n],
            set_completions: vec![Rational::zero(); inst.sets.len()],
        }
    }

    fn remaining(&self, f: usize) -> Rational {
        match self.class_of[f] {
            Some(c) => &self.key[f] - &self.classes[c].clock,
            None => self.key[f].clone(),
        }
    }

    /// Advances pending jobs past every phase that has no work left and
    /// logs the resulting batch of events.
    fn settle(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        self.pending.sort_unstable();
        let mut phase_events = Vec::new();
        let mut finished = Vec::new();
        for &f in &self.pending {
            while self.key[f].is_zero() {
                let k = self.progress[f].phase;
                phase_events.push(Subject::Phase(self.refs[f], k));
                self.progress[f].phase += 1;
                match self.phases[f].get(k + 1) {
                    Some(p) => self.key[f] = p.work.clone(),
                    None => {
                        self.progress[f].done = true;
                        finished.push(f);
                        break;
                    }
                }
            }
        }
        self.pending.retain(|&f| !self.progress[f].done);
        let mut set_events = Vec::new();
        for &f in &finished {
            let set = self.refs[f].set;
            self.job_completions[f] = self.now.clone();
            self.alive_in_set[set] -= 1;
            if self.alive_in_set[set] == 0 {
                self.set_completions[set] = self.now.clone();
                set_events.push(Subject::Set(set));
            }
        }
        if !finished.is_empty() {
            let progress = &self.progress;
            self.alive.retain(|&f| !progress[f].done);
        }
        let job_events = finished.iter().map(|&f| Subject::Job(self.refs[f]));
        let now = &self.now;
        self.events.extend(
            phase_events
                .into_iter()
                .chain(job_events)
                .chain(set_events)
                .map(|subject| Event {
                    time: now.clone(),
                    subject,
                }),
        );
    }

    fn observable(&self) -> ObservableState<'_> {
        let mut alive_sets: Vec<AliveSet<'_>> = Vec::new();
        for &f in &self.alive {
            let r = self.refs[f];
            let job = AliveJob {
                job: r,
                id: &self.inst.job(r).id,
            };
            match alive_sets.last_mut() {
                Some(s) if s.index == r.set => s.jobs.push(job),
                _ => alive_sets.push(AliveSet {
                    index: r.set,
                    id: &self.inst.sets[r.set].id,
                    jobs: vec![job],
                }),
            }
        }
        ObservableState {
            now: &self.now,
            alive_sets,
        }
    }

    /// Checks a policy answer and expands it to one share per alive job,
    /// aligned with `self.alive`.
    fn shares(&self, alloc: Allocation, budget: &Rational) -> Result<Vec<Rational>, SimError> {
        let mut slot: Vec<Option<Rational>> = vec![None; self.refs.len()];
        let mut total = Rational::zero();
        // runs of equal shares are summed by one multiplication
        let mut run: Option<(Rational, i64)> = None;
        for (job, rho) in alloc.shares {
            let path = || {
                if job.set < self.inst.sets.len() && job.job < self.inst.sets[job.set].jobs.len() {
                    self.inst.job_path(job)
                } else {
                    format!("{job:?}")
                }
            };
            if rho.is_negative() {
                return Err(SimError::NegativeAllocation {
                    time: self.now.clone(),
                    job: path(),
                });
            }
            let f = self
                .offsets
                .get(job.set)
                .map(|o| o + job.job)
                .filter(|&f| job.set < self.inst.sets.len() && f < self.offsets[job.set + 1]);
            let Some(f) = f.filter(|&f| !self.progress[f].done) else {
                return Err(SimError::NotAlive {
                    time: self.now.clone(),
                    job: path(),
                });
            };
            if slot[f].is_some() {
                return Err(SimError::DuplicateShare {
                    time: self.now.clone(),
                    job: path(),
                });
            }
            match &mut run {
                Some((r, k)) if *r == rho => *k += 1,
                _ => {
                    if let Some((r, k)) = run.take() {
                        total += r * Rational::from_integer(k.into());
                    }
                    run = Some((rho.clone(), 1));
                }
            }
            slot[f] = Some(rho);
        }
        if let Some((r, k)) = run {
            total += r * Rational::from_integer(k.into());
        }
        if &total > budget {
            return Err(SimError::Capacity {
                time: self.now.clone(),
                total,
                budget: budget.clone(),
            });
        }
        Ok(self
            .alive
            .iter()
            .map(|&f| slot[f].take().unwrap_or_default())
            .collect())
    }

    fn rate(&self, f: usize, rho: &Rational) -> Rational {
        self.phases[f][self.progress[f].phase].speedup.rate(rho)
    }

    /// Regroups alive jobs by their new rates.
    fn regroup(&mut self, rates: &[Rational]) {
        let mut rate_of: Vec<Option<&Rational>> = vec![None; self.refs.len()];
        for (i, &f) in self.alive.iter().enumerate() {
            rate_of[f] = Some(&rates[i]);
        }
        let mut movers: Vec<(usize, Rational)> = Vec::new();
        for class in &mut self.classes {
            let Some((_, first)) = class.members.first() else {
                continue;
            };
            let r0 = rate_of[*first].expect("class members are alive");
            let uniform = class.members.iter().all(|(_, f)| rate_of[*f] == Some(r0));
            let keep = if uniform {
                r0.clone()
            } else {
                let mut count: HashMap<&Rational, usize> = HashMap::new();
                for (_, f) in &class.members {
                    *count.entry(rate_of[*f].expect("alive")).or_default() += 1;
                }
                let best = count
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
                    .map(|(r, _)| (*r).clone())
                    .expect("non-empty class");
                let leaving: Vec<(Rational, usize)> = class
                    .members
                    .iter()
                    .filter(|(_, f)| rate_of[*f] != Some(&best))
                    .cloned()
                    .collect();
                for m in leaving {
                    class.members.remove(&m);
                    movers.push((m.1, &m.0 - &class.clock));
                }
                best
            };
            class.rate = keep;
        }
        let mut by_rate: HashMap<Rational, usize> = HashMap::new();
        for (c, class) in self.classes.iter().enumerate() {
            if !class.members.is_empty() {
                by_rate.entry(class.rate.clone()).or_insert(c);
            }
        }
        for f in std::mem::take(&mut self.pending) {
            let rem = std::mem::take(&mut self.key[f]);
            movers.push((f, rem));
        }
        movers.sort_unstable_by_key(|m| m.0);
        for (f, rem) in movers {
            let rate = rate_of[f].expect("alive").clone();
            let c = *by_rate.entry(rate.clone()).or_insert_with(|| {
                if let Some(c) = self.classes.iter().position(|c| c.members.is_empty()) {
                    self.classes[c].rate = rate;
                    self.classes[c].clock = Rational::zero();
                    c
                } else {
                    self.classes.push(Class {
                        rate,
                        clock: Rational::zero(),
                        members: BTreeSet::new(),
                    });
                    self.classes.len() - 1
                }
            });
            let key = &self.classes[c].clock + rem;
            self.classes[c].members.insert((key.clone(), f));
            self.key[f] = key;
            self.class_of[f] = Some(c);
        }
    }

    fn record(&mut self, shares: &[Rational]) {
        let g1 = self.grid.len() - 1;
        let g0 = g1 - 1;
        for (i, &f) in self.alive.iter().enumerate() {
            let rho = &shares[i];
            match self.pieces[f].last_mut() {
                Some(p) if p.end == g0 && &p.rho == rho => p.end = g1,
                _ => self.pieces[f].push(Piece {
                    start: g0,
                    end: g1,
                    rho: rho.clone(),
                }),
            }
        }
    }

    /// Moves time to the next completion. Returns false on a stall.
    fn advance(&mut self) -> bool {
        let dt = self
            .classes
            .iter()
            .filter(|c| c.rate.is_positive())
            .filter_map(|c| c.members.first().map(|(k, _)| (k - &c.clock) / &c.rate))
            .min();
        let Some(dt) = dt else {
            return false;
        };
        self.now += &dt;
        self.grid.push(self.now.clone());
        for class in &mut self.classes {
            if class.members.is_empty() || class.rate.is_zero() {
                continue;
            }
            class.clock += &class.rate * &dt;
            while class
                .members
                .first()
                .is_some_and(|(k, _)| k <= &class.clock)
            {
                let (_, f) = class.members.pop_first().expect("checked");
                self.class_of[f] = None;
                self.key[f] = Rational::zero();
                self.pending.push(f);
            }
        }
        true
    }

    fn finish(self) -> ScheduleTrace {
        ScheduleTrace {
            grid: self.grid,
            offsets: self.offsets,
            pieces: self.pieces,
            events: self.events,
            job_completions: self.job_completions,
            set_completions: self.set_completions,
        }
    }
}

fn run<'a, F>(
    inst: &'a Instance,
    speed: &Rational,
    opts: &SimOptions,
    mut query: F,
) -> Result<ScheduleTrace, SimError>
where
    F: FnMut(&ObservableState<'_>, &Engine<'a>, &Rational) -> Result<Allocation, PolicyError>,
{
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(SimError::Invalid(violations));
    }
    if !speed.is_positive() {
        return Err(SimError::BadSpeed(speed.clone()));
    }
    let budget = speed * &inst.processors;
    let mut engine = Engine::new(inst);
    let mut steps = 0usize;
    loop {
        engine.settle();
        if engine.alive.is_empty() {
            break;
        }
        steps += 1;
        if steps > opts.max_events {
            return Err(SimError::Runaway {
                limit: opts.max_events,
            });
        }
        let alloc = {
            let state = engine.observable();
            query(&state, &engine, &budget).map_err(|source| SimError::Policy {
                time: engine.now.clone(),
                source,
            })?
        };
        let shares = engine.shares(alloc, &budget)?;
        let rates: Vec<Rational> = engine
            .alive
            .iter()
            .zip(&shares)
            .map(|(&f, rho)| engine.rate(f, rho))
            .collect();
        engine.regroup(&rates);
        if !engine.advance() {
            return Err(SimError::Stall {
                time: engine.now.clone(),
            });
        }
        engine.record(&shares);
    }
    Ok(engine.finish())
}

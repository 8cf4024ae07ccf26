//! Trace JSON document.
//!
//! ```json
//! {"completions":{"jobs":{"S1/J1":"3/2"},"sets":{"S1":"3/2"}},
//!  "events":[["1","phase-complete","S1/J2:1"],["1","job-complete","S1/J2"]],
//!  "metrics":{"flowtime":"5/2","makespan":"3/2","setflowtime":"3/2"},
//!  "pieces":{"S1/J1":[["0","1","1/2"],["1","3/2","1"]]}}
//! ```
//!
//! Phase subjects carry a one-based phase number after the last `:`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::trace::{Event, ScheduleTrace, Subject};
use crate::model::rational::{self, Rational};
use crate::model::Instance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed trace document: {0}")]
pub struct TraceFormatError(pub String);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceDoc {
    completions: CompletionsDoc,
    events: Vec<(String, String, String)>,
    #[serde(default)]
    metrics: Option<MetricsDoc>,
    pieces: BTreeMap<String, Vec<(String, String, String)>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompletionsDoc {
    jobs: BTreeMap<String, String>,
    sets: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricsDoc {
    flowtime: String,
    makespan: String,
    setflowtime: String,
}

fn num(text: &str) -> Result<Rational, TraceFormatError> {
    rational::parse(text).map_err(|e| TraceFormatError(e.to_string()))
}

pub(super) fn subject_name(inst: &Instance, subject: &Subject) -> String {
    match *subject {
        Subject::Phase(job, k) => format!("{}:{}", inst.job_path(job), k + 1),
        Subject::Job(job) => inst.job_path(job),
        Subject::Set(s) => inst.sets[s].id.clone(),
    }
}

impl ScheduleTrace {
    /// Serializes with sorted keys; the instance supplies the ids.
    pub fn to_json(&self, inst: &Instance) -> String {
        let fmt = rational::format;
        let metrics = self.metrics();
        let doc = TraceDoc {
            completions: CompletionsDoc {
                jobs: inst
                    .job_refs()
                    .map(|j| (inst.job_path(j), fmt(self.job_completion(j))))
                    .collect(),
                sets: inst
                    .sets
                    .iter()
                    .enumerate()
                    .map(|(s, set)| (set.id.clone(), fmt(self.set_completion(s))))
                    .collect(),
            },
            events: self
                .events()
                .iter()
                .map(|e| {
                    (
                        fmt(&e.time),
                        e.kind().tag().to_string(),
                        subject_name(inst, &e.subject),
                    )
                })
                .collect(),
            metrics: Some(MetricsDoc {
                flowtime: fmt(&metrics.flowtime),
                makespan: fmt(&metrics.makespan),
                setflowtime: fmt(&metrics.setflowtime),
            }),
            pieces: inst
                .job_refs()
                .map(|j| {
                    let list = self
                        .timed_pieces(j)
                        .map(|(a, b, rho)| (fmt(a), fmt(b), fmt(rho)))
                        .collect();
                    (inst.job_path(j), list)
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("trace documents always serialize")
    }

    /// Parses a trace of `inst`. The document's metrics block is ignored;
    /// metrics are always recomputed from completions.
    pub fn from_json(inst: &Instance, text: &str) -> Result<ScheduleTrace, TraceFormatError> {
        let doc: TraceDoc =
            serde_json::from_str(text).map_err(|e| TraceFormatError(e.to_string()))?;
        let job = |path: &str| {
            inst.find_job(path)
                .ok_or_else(|| TraceFormatError(format!("unknown job {path:?}")))
        };
        let refs: Vec<_> = inst.job_refs().collect();
        let flat = |r: crate::model::JobRef| refs.iter().position(|x| *x == r).expect("known job");

        let mut pieces = vec![Vec::new(); refs.len()];
        for (path, list) in &doc.pieces {
            let f = flat(job(path)?);
            pieces[f] = list
                .iter()
                .map(|(a, b, rho)| Ok((num(a)?, num(b)?, num(rho)?)))
                .collect::<Result<_, TraceFormatError>>()?;
        }
        let mut jobs = vec![None; refs.len()];
        for (path, c) in &doc.completions.jobs {
            jobs[flat(job(path)?)] = Some(num(c)?);
        }
        let job_completions = jobs
            .into_iter()
            .enumerate()
            .map(|(f, c)| {
                c.ok_or_else(|| {
                    TraceFormatError(format!("missing completion of {}", inst.job_path(refs[f])))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut sets = vec![None; inst.sets.len()];
        for (id, c) in &doc.completions.sets {
            let s = inst
                .find_set(id)
                .ok_or_else(|| TraceFormatError(format!("unknown set {id:?}")))?;
            sets[s] = Some(num(c)?);
        }
        let set_completions = sets
            .into_iter()
            .enumerate()
            .map(|(s, c)| {
                c.ok_or_else(|| {
                    TraceFormatError(format!("missing completion of set {}", inst.sets[s].id))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;

        let mut events = Vec::with_capacity(doc.events.len());
        for (t, kind, name) in &doc.events {
            let subject = match kind.as_str() {
                "phase-complete" => {
                    let (path, k) = name
                        .rsplit_once(':')
                        .ok_or_else(|| TraceFormatError(format!("bad phase subject {name:?}")))?;
                    let k: usize = k
                        .parse()
                        .ok()
                        .filter(|&k| k >= 1)
                        .ok_or_else(|| TraceFormatError(format!("bad phase subject {name:?}")))?;
                    Subject::Phase(job(path)?, k - 1)
                }
                "job-complete" => Subject::Job(job(name)?),
                "set-complete" => Subject::Set(
                    inst.find_set(name)
                        .ok_or_else(|| TraceFormatError(format!("unknown set {name:?}")))?,
                ),
                other => return Err(TraceFormatError(format!("unknown event kind {other:?}"))),
            };
            events.push(Event {
                time: num(t)?,
                subject,
            });
        }
        Ok(ScheduleTrace::from_parts(
            &inst.shape(),
            pieces,
            events,
            job_completions,
            set_completions,
        ))
    }
}

//! Instance JSON document.
//!
//! ```json
//! {"processors":"1","sets":[{"id":"S1","jobs":[{"id":"J1","phases":[
//!   {"kind":"seq","work":"1"},{"kind":"par","work":"1/27"},
//!   {"kind":"pwl","work":"2","points":[["0","0"],["1","1"],["2","3/2"]]}]}]}]}
//! ```
//!
//! Serialization is compact with a fixed field order, so canonical documents
//! round-trip byte for byte.

use serde::{Deserialize, Serialize};

use super::rational::{self, Rational};
use super::{Instance, Job, JobSet, ModelError, Phase, Speedup};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    processors: String,
    sets: Vec<SetDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetDoc {
    id: String,
    jobs: Vec<JobDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JobDoc {
    id: String,
    phases: Vec<PhaseDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum PhaseDoc {
    #[serde(rename = "seq")]
    Seq { work: String },
    #[serde(rename = "par")]
    Par { work: String },
    #[serde(rename = "pwl")]
    Pwl {
        work: String,
        points: Vec<(String, String)>,
    },
}

fn num(text: &str) -> Result<Rational, ModelError> {
    rational::parse(text).map_err(|e| ModelError::Format(e.to_string()))
}

impl From<&Phase> for PhaseDoc {
    fn from(p: &Phase) -> Self {
        let work = rational::format(&p.work);
        match &p.speedup {
            Speedup::Sequential => PhaseDoc::Seq { work },
            Speedup::FullyParallel => PhaseDoc::Par { work },
            Speedup::PiecewiseLinear(points) => PhaseDoc::Pwl {
                work,
                points: points
                    .iter()
                    .map(|(r, v)| (rational::format(r), rational::format(v)))
                    .collect(),
            },
        }
    }
}

impl TryFrom<PhaseDoc> for Phase {
    type Error = ModelError;

    fn try_from(doc: PhaseDoc) -> Result<Self, ModelError> {
        Ok(match doc {
            PhaseDoc::Seq { work } => Phase::seq(num(&work)?),
            PhaseDoc::Par { work } => Phase::par(num(&work)?),
            PhaseDoc::Pwl { work, points } => Phase::new(
                num(&work)?,
                Speedup::PiecewiseLinear(
                    points
                        .iter()
                        .map(|(r, v)| Ok((num(r)?, num(v)?)))
                        .collect::<Result<_, ModelError>>()?,
                ),
            ),
        })
    }
}

/// Phase list in document form, shared with reduction reports.
pub(crate) fn phases_to_value(phases: &[Phase]) -> serde_json::Value {
    let docs: Vec<PhaseDoc> = phases.iter().map(PhaseDoc::from).collect();
    serde_json::to_value(docs).expect("phase documents always serialize")
}

impl Instance {
    pub fn to_json(&self) -> String {
        let doc = InstanceDoc {
            processors: rational::format(&self.processors),
            sets: self
                .sets
                .iter()
                .map(|s| SetDoc {
                    id: s.id.clone(),
                    jobs: s
                        .jobs
                        .iter()
                        .map(|j| JobDoc {
                            id: j.id.clone(),
                            phases: j.phases.iter().map(PhaseDoc::from).collect(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("instance documents always serialize")
    }

    /// Parses a document. Structural invariants are not checked here; call
    /// [`Instance::validate`] for those.
    pub fn from_json(text: &str) -> Result<Instance, ModelError> {
        let doc: InstanceDoc =
            serde_json::from_str(text).map_err(|e| ModelError::Format(e.to_string()))?;
        let sets = doc
            .sets
            .into_iter()
            .map(|s| {
                let jobs = s
                    .jobs
                    .into_iter()
                    .map(|j| {
                        let phases = j
                            .phases
                            .into_iter()
                            .map(Phase::try_from)
                            .collect::<Result<_, _>>()?;
                        Ok(Job { id: j.id, phases })
                    })
                    .collect::<Result<_, ModelError>>()?;
                Ok(JobSet { id: s.id, jobs })
            })
            .collect::<Result<_, ModelError>>()?;
        Ok(Instance {
            processors: num(&doc.processors)?,
            sets,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{"processors":"1","sets":[{"id":"S1","jobs":[{"id":"J1","phases":[{"kind":"seq","work":"1"},{"kind":"par","work":"1/27"},{"kind":"pwl","work":"2","points":[["0","0"],["1","1"],["2","3/2"]]}]}]}]}"#;

    #[test]
    fn reference_document_roundtrips_bit_exact() {
        let inst = Instance::from_json(DOC).unwrap();
        assert!(inst.validate().is_empty());
        assert_eq!(inst.sets[0].jobs[0].phases.len(), 3);
        assert_eq!(inst.to_json(), DOC);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(Instance::from_json("{}").is_err());
        assert!(Instance::from_json(&DOC.replace("1/27", "1/0")).is_err());
        assert!(Instance::from_json(&DOC.replace("\"seq\"", "\"fast\"")).is_err());
    }
}

use std::fmt;
use std::process::ExitCode;

use malsched::adversary::AdversaryError;
use malsched::bounds::BoundsError;
use malsched::engine::SimError;
use malsched::model::ModelError;
use malsched::reduction::ReductionError;
use malsched::schedulers::SchedError;
use serde_json::Value;

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments, unreadable files, invalid instances.
    Input(anyhow::Error),
    /// Capacity, stall, runaway and other simulation failures.
    Simulation(anyhow::Error),
    /// A checked inequality or property does not hold. `None` when the
    /// report has already been written.
    Violation(Option<Value>),
}

pub type Outcome<T = ()> = Result<T, Failure>;

impl Failure {
    pub fn input(msg: impl fmt::Display) -> Self {
        Failure::Input(anyhow::anyhow!("{msg}"))
    }

    pub fn code(&self) -> ExitCode {
        match self {
            Failure::Input(_) => ExitCode::from(1),
            Failure::Simulation(_) => ExitCode::from(2),
            Failure::Violation(_) => ExitCode::from(3),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Input(e.into())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invalid(_) | SimError::BadSpeed(_) => Failure::Input(e.into()),
            e => Failure::Simulation(e.into()),
        }
    }
}

impl From<SchedError> for Failure {
    fn from(e: SchedError) -> Self {
        match e {
            SchedError::Model(m) => m.into(),
            SchedError::Sim(s) => s.into(),
        }
    }
}

impl From<AdversaryError> for Failure {
    fn from(e: AdversaryError) -> Self {
        match e {
            AdversaryError::Model(m) => m.into(),
            AdversaryError::Sim(s) => s.into(),
            AdversaryError::TooLarge(_) => Failure::Input(e.into()),
            AdversaryError::Replay(_) | AdversaryError::Infeasible(_) => {
                Failure::Violation(Some(serde_json::json!({ "error": e.to_string() })))
            }
        }
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::Model(m) => m.into(),
            ReductionError::Sim(s) => s.into(),
            ReductionError::InvalidTrace(_) | ReductionError::NotEquiEqui => Failure::Input(e.into()),
            ReductionError::Infeasible(_) | ReductionError::Postcondition(_) => {
                Failure::Violation(Some(serde_json::json!({ "error": e.to_string() })))
            }
        }
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Model(m) => m.into(),
            BoundsError::Sim(s) => s.into(),
            BoundsError::Reduction(r) => r.into(),
            BoundsError::Mismatch(_) => Failure::Input(e.into()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

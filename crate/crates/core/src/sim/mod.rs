//! Trace generation: playout of conforming traces, mutation into
//! non-conforming traces, conformance replay and the contract encoding.

mod encoding;
mod mutate;
mod playout;
mod replay;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use encoding::{build_encoding, keccak256, Address, Encoding, ParticipantEntry, TaskEntry};
pub use mutate::{mutate, MutationOp};
pub use playout::playout;
pub use replay::{conforms, NetReplay};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("no conforming trace reaches the end place")]
    NoTraceFound,
    #[error("found only {found} of {wanted} non-conforming traces after {attempts} attempts")]
    MutationExhausted { wanted: usize, found: usize, attempts: usize },
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error("event log line {line}: {message}")]
    BadLogLine { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Event {
    TaskExecution { task_id: String, initiator: String },
    DataSet { variable_id: String, value: bool },
}

impl Event {
    pub fn task(task_id: impl Into<String>, initiator: impl Into<String>) -> Self {
        Event::TaskExecution {
            task_id: task_id.into(),
            initiator: initiator.into(),
        }
    }

    pub fn data(variable_id: impl Into<String>, value: bool) -> Self {
        Event::DataSet {
            variable_id: variable_id.into(),
            value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceLabel {
    Conforming,
    NonConforming,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Trace {
    pub case_id: String,
    pub label: TraceLabel,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EventLog {
    pub model_id: String,
    pub traces: Vec<Trace>,
    /// Set when playout stopped because it reached `maxConformingTraces`.
    pub capped: bool,
}

impl EventLog {
    /// One JSON object per line, in trace order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.traces {
            out.push_str(&serde_json::to_string(t).expect("trace serialises"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(model_id: impl Into<String>, text: &str) -> Result<Self, SimError> {
        let mut traces = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let trace = serde_json::from_str(line).map_err(|e| SimError::BadLogLine {
                line: i + 1,
                message: e.to_string(),
            })?;
            traces.push(trace);
        }
        Ok(Self {
            model_id: model_id.into(),
            traces,
            capped: false,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SimulatorConfig {
    pub max_conforming_traces: usize,
    pub num_non_conforming: usize,
    /// Depth passes of the iterative-deepening search on cyclic nets. Each
    /// pass admits one more task execution per trace.
    pub max_playout_passes: usize,
    pub random_seed: u64,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            max_conforming_traces: 2500,
            num_non_conforming: 50,
            max_playout_passes: 100,
            random_seed: 0,
        }
    }
}

impl SimulatorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.max_conforming_traces == 0 {
            return Err(SimError::InvalidConfig("maxConformingTraces must be at least 1".into()));
        }
        if self.max_playout_passes == 0 {
            return Err(SimError::InvalidConfig("maxPlayoutPasses must be at least 1".into()));
        }
        Ok(())
    }
}

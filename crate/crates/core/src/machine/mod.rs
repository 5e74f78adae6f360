//! Rule-based reference generator: a bitmask state machine compiled from an
//! interaction net, and Solidity source with the same behaviour.

mod bits;
mod emit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bits::Bits256;
pub use emit::{emit_contract_source, CONTRACT_NAME};

use crate::net::{InteractionNet, Label};
use crate::sim::{Address, Encoding, Event};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("net has {places} places but the marking word holds {budget}")]
    TooManyPlaces { places: usize, budget: usize },
    #[error("`{0}` is missing from the encoding")]
    NotEncoded(String),
    #[error("cannot emit contract: {0}")]
    EmitUnsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TransitionKind {
    Task,
    Decision,
    Silent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaskGuard {
    pub task_index: usize,
    pub initiator: Address,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DecisionGuard {
    pub variable_index: usize,
    pub expected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompiledTransition {
    pub transition_id: String,
    pub kind: TransitionKind,
    pub consume_mask: Bits256,
    pub produce_mask: Bits256,
    pub task_guard: Option<TaskGuard>,
    pub decision_guard: Option<DecisionGuard>,
}

impl CompiledTransition {
    fn fire(&self, marking: Bits256) -> Bits256 {
        (marking & !self.consume_mask) | self.produce_mask
    }
}

/// Compiled transitions are ordered tasks first, then decisions, then
/// silent transitions; net order is kept within each group. Autonomous
/// progression scans them in this order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessMachine {
    pub model_id: String,
    /// Place id per bit position.
    pub place_bits: Vec<String>,
    pub transitions_compiled: Vec<CompiledTransition>,
    pub initial_state: Bits256,
    pub end_mask: Bits256,
    pub encoding: Encoding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MachineState {
    pub marking: Bits256,
    /// Indexed by variable index; unset conditions read as false.
    pub variables: Vec<bool>,
}

/// A contract entry-point invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Call {
    ExecuteTask { task_index: usize, sender: Address },
    SetData { variable_index: usize, value: bool },
}

impl Call {
    /// Maps a trace event onto the contract interface. `None` if the event
    /// names something the encoding does not know.
    pub fn from_event(event: &Event, enc: &Encoding) -> Option<Call> {
        match event {
            Event::TaskExecution { task_id, initiator } => Some(Call::ExecuteTask {
                task_index: enc.task_index(task_id)?,
                sender: enc.address_of(initiator)?,
            }),
            Event::DataSet { variable_id, value } => Some(Call::SetData {
                variable_index: enc.variable_index(variable_id)?,
                value: *value,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub accepted: bool,
    pub state: MachineState,
    /// Indices into `transitions_compiled`, in firing order.
    pub fired: Vec<usize>,
}

pub fn generate_machine(net: &InteractionNet, enc: &Encoding) -> Result<ProcessMachine, MachineError> {
    generate_machine_with_budget(net, enc, Bits256::BITS)
}

pub fn generate_machine_with_budget(
    net: &InteractionNet,
    enc: &Encoding,
    budget: usize,
) -> Result<ProcessMachine, MachineError> {
    let budget = budget.min(Bits256::BITS);
    if net.places.len() > budget {
        return Err(MachineError::TooManyPlaces { places: net.places.len(), budget });
    }
    let mask = |places: &[usize]| Bits256::from_bits(places.iter().copied());

    let mut compiled = Vec::with_capacity(net.transitions.len());
    for kind in [TransitionKind::Task, TransitionKind::Decision, TransitionKind::Silent] {
        for t in &net.transitions {
            let (this_kind, task_guard, decision_guard) = match &t.label {
                Label::Task { task_id, initiator } => {
                    let task_index = enc
                        .task_index(task_id)
                        .ok_or_else(|| MachineError::NotEncoded(task_id.clone()))?;
                    let initiator = enc
                        .address_of(initiator)
                        .ok_or_else(|| MachineError::NotEncoded(initiator.clone()))?;
                    (TransitionKind::Task, Some(TaskGuard { task_index, initiator }), None)
                }
                Label::Decision { variable_id, expected } => {
                    let variable_index = enc
                        .variable_index(variable_id)
                        .ok_or_else(|| MachineError::NotEncoded(variable_id.clone()))?;
                    (TransitionKind::Decision, None, Some(DecisionGuard { variable_index, expected: *expected }))
                }
                Label::Silent => (TransitionKind::Silent, None, None),
            };
            if this_kind != kind {
                continue;
            }
            compiled.push(CompiledTransition {
                transition_id: t.transition_id.clone(),
                kind,
                consume_mask: mask(&t.consume),
                produce_mask: mask(&t.produce),
                task_guard,
                decision_guard,
            });
        }
    }

    Ok(ProcessMachine {
        model_id: net.net_id.clone(),
        place_bits: net.places.clone(),
        transitions_compiled: compiled,
        initial_state: Bits256::from_bits(net.initial_marking.iter()),
        end_mask: Bits256::bit(net.end_place),
        encoding: enc.clone(),
    })
}

impl ProcessMachine {
    pub fn initial(&self) -> MachineState {
        MachineState {
            marking: self.initial_state,
            variables: vec![false; self.encoding.variables.len()],
        }
    }

    pub fn is_ended(&self, state: &MachineState) -> bool {
        state.marking.covers(self.end_mask)
    }

    /// Fires enabled decisions with matching conditions, else enabled silent
    /// transitions, until none is enabled.
    fn progress(&self, marking: &mut Bits256, variables: &[bool], fired: &mut Vec<usize>) {
        // gated nets have no autonomous cycles; the bound only guards bad input
        for _ in 0..100_000 {
            let next = self.transitions_compiled.iter().position(|t| {
                marking.covers(t.consume_mask)
                    && match t.kind {
                        TransitionKind::Task => false,
                        TransitionKind::Silent => true,
                        TransitionKind::Decision => t
                            .decision_guard
                            .is_some_and(|g| variables.get(g.variable_index).copied().unwrap_or(false) == g.expected),
                    }
            });
            // decisions precede silent transitions in compiled order
            match next {
                Some(i) => {
                    *marking = self.transitions_compiled[i].fire(*marking);
                    fired.push(i);
                }
                None => return,
            }
        }
    }

    pub fn call(&self, state: &MachineState, call: &Call) -> StepResult {
        let reject = || StepResult { accepted: false, state: state.clone(), fired: Vec::new() };
        match *call {
            Call::SetData { variable_index, value } => {
                if variable_index >= state.variables.len() {
                    return reject();
                }
                let mut next = state.clone();
                next.variables[variable_index] = value;
                StepResult { accepted: true, state: next, fired: Vec::new() }
            }
            Call::ExecuteTask { task_index, sender } => {
                let mut fired = Vec::new();
                let mut m = state.marking;
                self.progress(&mut m, &state.variables, &mut fired);
                let task = self.transitions_compiled.iter().position(|t| {
                    t.task_guard
                        .is_some_and(|g| g.task_index == task_index && g.initiator == sender)
                        && m.covers(t.consume_mask)
                });
                let Some(i) = task else {
                    return reject();
                };
                m = self.transitions_compiled[i].fire(m);
                fired.push(i);
                self.progress(&mut m, &state.variables, &mut fired);
                StepResult {
                    accepted: true,
                    state: MachineState { marking: m, variables: state.variables.clone() },
                    fired,
                }
            }
        }
    }

    /// Applies a trace event. Events outside the encoding are rejected.
    pub fn step(&self, state: &MachineState, event: &Event) -> StepResult {
        match Call::from_event(event, &self.encoding) {
            Some(call) => self.call(state, &call),
            None => StepResult { accepted: false, state: state.clone(), fired: Vec::new() },
        }
    }
}

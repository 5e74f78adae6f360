//! Interaction nets: labelled Petri nets derived from choreographies.
//!
//! Places correspond to sequence flows plus one end place. Tasks become
//! `Task` transitions labelled with their initiator, conditional branches of
//! exclusive splits become `Decision` transitions, and everything else that
//! moves tokens without participant interaction is `Silent`.

mod build;
mod gate;
mod pnml;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::build_net;
pub use gate::{assess_model, check_generatable, GateConfig, GateReport, MAX_EXPLORED_MARKINGS};
pub use pnml::to_pnml;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("unsupported construct: {}", .0.join("; "))]
    UnsupportedConstruct(Vec<String>),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("unknown transition `{0}`")]
    UnknownTransition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", rename_all_fields = "camelCase")]
pub enum Label {
    Task { task_id: String, initiator: String },
    Decision { variable_id: String, expected: bool },
    Silent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transition {
    pub transition_id: String,
    pub label: Label,
    /// Input places, sorted indices into [`InteractionNet::places`].
    pub consume: Vec<usize>,
    pub produce: Vec<usize>,
}

impl Transition {
    pub fn is_task(&self) -> bool {
        matches!(self.label, Label::Task { .. })
    }

    pub fn is_autonomous(&self) -> bool {
        !self.is_task()
    }
}

/// Set of marked places. Nets produced by [`build_net`] are 1-safe, so a set
/// is sufficient.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Marking(BTreeSet<usize>);

impl Marking {
    pub fn new(places: impl IntoIterator<Item = usize>) -> Self {
        Marking(places.into_iter().collect())
    }

    pub fn contains(&self, place: usize) -> bool {
        self.0.contains(&place)
    }

    pub fn covers(&self, places: &[usize]) -> bool {
        places.iter().all(|p| self.0.contains(p))
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InteractionNet {
    pub net_id: String,
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial_marking: Marking,
    pub end_place: usize,
    /// Participant ids of the source model, in document order.
    pub participants: Vec<String>,
}

/// Outcome of firing a transition: the successor marking and whether a
/// produced token landed on an already marked place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub marking: Marking,
    pub unsafe_token: bool,
}

impl InteractionNet {
    pub fn transition(&self, id: &str) -> Option<(usize, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .find(|(_, t)| t.transition_id == id)
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p == id)
    }

    /// Arcs as `(from, to)` id pairs: place→transition then transition→place.
    pub fn arcs(&self) -> Vec<(String, String)> {
        let mut arcs = Vec::new();
        for t in &self.transitions {
            for &p in &t.consume {
                arcs.push((self.places[p].clone(), t.transition_id.clone()));
            }
            for &p in &t.produce {
                arcs.push((t.transition_id.clone(), self.places[p].clone()));
            }
        }
        arcs
    }

    pub fn is_enabled(&self, marking: &Marking, index: usize) -> bool {
        marking.covers(&self.transitions[index].consume)
    }

    /// Indices of all transitions enabled under `marking`, in net order.
    pub fn enabled_indices(&self, marking: &Marking) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&i| self.is_enabled(marking, i))
            .collect()
    }

    /// Ids of all transitions whose input places are marked.
    pub fn enabled(&self, marking: &Marking) -> BTreeSet<String> {
        self.enabled_indices(marking)
            .into_iter()
            .map(|i| self.transitions[i].transition_id.clone())
            .collect()
    }

    /// Fires transition `index`, which the caller guarantees to be enabled.
    pub fn fire_index(&self, marking: &Marking, index: usize) -> Firing {
        let t = &self.transitions[index];
        let mut next = marking.0.clone();
        for p in &t.consume {
            next.remove(p);
        }
        let mut unsafe_token = false;
        for &p in &t.produce {
            unsafe_token |= !next.insert(p);
        }
        Firing {
            marking: Marking(next),
            unsafe_token,
        }
    }

    pub fn fire(&self, marking: &Marking, transition_id: &str) -> Result<Marking, NetError> {
        let (index, _) = self
            .transition(transition_id)
            .ok_or_else(|| NetError::UnknownTransition(transition_id.to_string()))?;
        if !self.is_enabled(marking, index) {
            return Err(NetError::NotEnabled(transition_id.to_string()));
        }
        Ok(self.fire_index(marking, index).marking)
    }

    pub fn reaches_end(&self, marking: &Marking) -> bool {
        marking.contains(self.end_place)
    }

    /// Condition variables in the order their decisions appear in the net.
    pub fn variables(&self) -> Vec<String> {
        let mut vars: Vec<String> = Vec::new();
        for t in &self.transitions {
            if let Label::Decision { variable_id, .. } = &t.label {
                if !vars.contains(variable_id) {
                    vars.push(variable_id.clone());
                }
            }
        }
        vars
    }

    /// `(task_id, initiator)` pairs of all task transitions, deduplicated, in net order.
    pub fn task_labels(&self) -> Vec<(String, String)> {
        let mut labels: Vec<(String, String)> = Vec::new();
        for t in &self.transitions {
            if let Label::Task { task_id, initiator } = &t.label {
                let label = (task_id.clone(), initiator.clone());
                if !labels.contains(&label) {
                    labels.push(label);
                }
            }
        }
        labels
    }

    /// True if the place/transition graph contains a directed cycle.
    pub fn is_cyclic(&self) -> bool {
        self.has_cycle_among(|_| true)
    }

    /// True if some cycle consists only of silent and decision transitions.
    pub fn has_autonomous_cycle(&self) -> bool {
        self.has_cycle_among(Transition::is_autonomous)
    }

    fn has_cycle_among(&self, keep: impl Fn(&Transition) -> bool) -> bool {
        // place -> place successor graph through the kept transitions
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); self.places.len()];
        for t in self.transitions.iter().filter(|t| keep(t)) {
            for &from in &t.consume {
                succ[from].extend(t.produce.iter().copied());
            }
        }
        let mut state = vec![0u8; self.places.len()];
        for root in 0..self.places.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            state[root] = 1;
            while let Some((node, idx)) = stack.pop() {
                if idx < succ[node].len() {
                    stack.push((node, idx + 1));
                    let child = succ[node][idx];
                    match state[child] {
                        1 => return true,
                        0 => {
                            state[child] = 1;
                            stack.push((child, 0));
                        }
                        _ => {}
                    }
                } else {
                    state[node] = 2;
                }
            }
        }
        false
    }
}

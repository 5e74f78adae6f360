use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{conforms, Event, EventLog, SimError, SimulatorConfig, Trace, TraceLabel};
use crate::net::InteractionNet;

const MUTATION_STREAM: u64 = u64::MAX - 1;
const ATTEMPTS_PER_TRACE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MutationOp {
    SwapAdjacent,
    Delete,
    Duplicate,
    InsertTask,
    ReplaceInitiator,
}

impl MutationOp {
    pub const ALL: [MutationOp; 5] = [
        MutationOp::SwapAdjacent,
        MutationOp::Delete,
        MutationOp::Duplicate,
        MutationOp::InsertTask,
        MutationOp::ReplaceInitiator,
    ];

    /// Applies the operator in place. Returns false if it does not apply to
    /// `events` (for example a swap on a single event).
    pub fn apply(self, events: &mut Vec<Event>, net: &InteractionNet, rng: &mut impl Rng) -> bool {
        match self {
            MutationOp::SwapAdjacent => {
                if events.len() < 2 {
                    return false;
                }
                let i = rng.gen_range(0..events.len() - 1);
                events.swap(i, i + 1);
            }
            MutationOp::Delete => {
                if events.is_empty() {
                    return false;
                }
                let i = rng.gen_range(0..events.len());
                events.remove(i);
            }
            MutationOp::Duplicate => {
                if events.is_empty() {
                    return false;
                }
                let i = rng.gen_range(0..events.len());
                let e = events[i].clone();
                events.insert(i + 1, e);
            }
            MutationOp::InsertTask => {
                let labels = net.task_labels();
                let Some((task_id, initiator)) = labels.choose(rng) else {
                    return false;
                };
                let i = rng.gen_range(0..=events.len());
                events.insert(i, Event::task(task_id.clone(), initiator.clone()));
            }
            MutationOp::ReplaceInitiator => {
                let tasks: Vec<usize> = events
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| matches!(e, Event::TaskExecution { .. }))
                    .map(|(i, _)| i)
                    .collect();
                let Some(&i) = tasks.choose(rng) else {
                    return false;
                };
                let Event::TaskExecution { initiator, .. } = &mut events[i] else {
                    unreachable!()
                };
                let others: Vec<&String> = net.participants.iter().filter(|p| *p != initiator).collect();
                let Some(&p) = others.choose(rng) else {
                    return false;
                };
                *initiator = p.clone();
            }
        }
        true
    }
}

/// Derives `num_non_conforming` distinct non-conforming traces from a
/// conforming log.
///
/// Each candidate starts from a uniformly chosen conforming trace and
/// receives one uniformly drawn operator, followed by further operators
/// with probability 1/2 each. Candidates that are empty, repeated or still
/// conforming are discarded.
pub fn mutate(log: &EventLog, net: &InteractionNet, cfg: &SimulatorConfig) -> Result<EventLog, SimError> {
    let wanted = cfg.num_non_conforming;
    let budget = ATTEMPTS_PER_TRACE * wanted;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.random_seed);
    rng.set_stream(MUTATION_STREAM);

    let mut seen: HashSet<Vec<Event>> = HashSet::new();
    let mut traces = Vec::with_capacity(wanted);
    let mut attempts = 0;
    while traces.len() < wanted {
        if attempts >= budget || log.traces.is_empty() {
            return Err(SimError::MutationExhausted { wanted, found: traces.len(), attempts });
        }
        attempts += 1;
        let base = log.traces.choose(&mut rng).expect("nonempty log");
        let mut events = base.events.clone();
        let mut applied = false;
        loop {
            let op = *MutationOp::ALL.choose(&mut rng).expect("five operators");
            applied |= op.apply(&mut events, net, &mut rng);
            if !rng.gen_bool(0.5) {
                break;
            }
        }
        if !applied || events.is_empty() || seen.contains(&events) {
            continue;
        }
        let candidate = Trace {
            case_id: format!("{}:non-conforming:{}", log.model_id, traces.len()),
            label: TraceLabel::NonConforming,
            events,
        };
        if conforms(net, &candidate) {
            continue;
        }
        seen.insert(candidate.events.clone());
        traces.push(candidate);
    }
    Ok(EventLog { model_id: log.model_id.clone(), traces, capped: false })
}

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::replay::{Semantics, MAX_AUTONOMOUS_FIRINGS};
use super::{Event, EventLog, SimError, SimulatorConfig, Trace, TraceLabel};
use crate::net::{InteractionNet, Marking};

const PLAYOUT_STREAM: u64 = u64::MAX;

/// One outcome of a step whose variable reads are still open. `locks` holds
/// the value each read variable must have for this outcome.
#[derive(Debug, Clone)]
struct Branch {
    marking: Marking,
    locks: BTreeMap<usize, bool>,
    fired: BTreeSet<usize>,
    firings: usize,
}

#[derive(Debug, Clone)]
struct State {
    marking: Marking,
    values: Vec<bool>,
    events: Vec<Event>,
}

struct Search<'a, 'n> {
    sem: &'a Semantics<'n>,
    rng: ChaCha8Rng,
    cap: usize,
    found: Vec<Vec<Event>>,
    seen: HashSet<Vec<Event>>,
    depth_limit: Option<usize>,
    cutoff: bool,
}

impl Search<'_, '_> {
    fn full(&self) -> bool {
        self.found.len() >= self.cap
    }

    /// Autonomous closure that splits whenever a decision reads a variable
    /// that is not yet locked.
    fn close_all(&self, mut b: Branch, out: &mut Vec<Branch>) {
        'outer: while b.firings < MAX_AUTONOMOUS_FIRINGS {
            for &(t, var, expected) in &self.sem.decisions {
                if !self.sem.enabled(&b.marking, t) {
                    continue;
                }
                match b.locks.get(&var) {
                    Some(&v) if v == expected => {
                        b.marking = self.sem.net.fire_index(&b.marking, t).marking;
                        b.fired.insert(var);
                        b.firings += 1;
                        continue 'outer;
                    }
                    Some(_) => {}
                    None => {
                        let mut taken = b.clone();
                        taken.locks.insert(var, expected);
                        b.locks.insert(var, !expected);
                        self.close_all(taken, out);
                        self.close_all(b, out);
                        return;
                    }
                }
            }
            match self.sem.first_enabled_silent(&b.marking) {
                Some(t) => {
                    b.marking = self.sem.net.fire_index(&b.marking, t).marking;
                    b.firings += 1;
                }
                None => break,
            }
        }
        out.push(b);
    }

    /// All successors of `state` reachable by one task execution, together
    /// with the data events that must precede it.
    fn successors(&self, state: &State) -> Vec<State> {
        let mut pre = Vec::new();
        self.close_all(
            Branch {
                marking: state.marking.clone(),
                locks: BTreeMap::new(),
                fired: BTreeSet::new(),
                firings: 0,
            },
            &mut pre,
        );
        let mut next = Vec::new();
        for b in pre {
            for label in 0..self.sem.labels.len() {
                let Some(t) = self.sem.task_transition(&b.marking, label) else {
                    continue;
                };
                let mut fired = b.clone();
                fired.marking = self.sem.net.fire_index(&b.marking, t).marking;
                let mut post = Vec::new();
                self.close_all(fired, &mut post);
                for p in post {
                    next.push(self.materialise(state, label, p));
                }
            }
        }
        next
    }

    fn materialise(&self, state: &State, label: usize, b: Branch) -> State {
        let mut events = state.events.clone();
        let mut values = state.values.clone();
        // BTreeMap iteration keeps the data group in variable order
        for (&var, &val) in &b.locks {
            if b.fired.contains(&var) || values[var] != val {
                events.push(Event::data(self.sem.variables[var].clone(), val));
                values[var] = val;
            }
        }
        let (task_id, initiator) = &self.sem.labels[label];
        events.push(Event::task(task_id.clone(), initiator.clone()));
        State { marking: b.marking, values, events }
    }

    fn dfs(&mut self, state: &State, depth: usize) {
        if self.full() {
            return;
        }
        let mut children = self.successors(state);
        children.shuffle(&mut self.rng);
        for child in children {
            if self.full() {
                return;
            }
            if self.sem.net.reaches_end(&child.marking) {
                if self.seen.insert(child.events.clone()) {
                    self.found.push(child.events);
                }
            } else if self.depth_limit.is_some_and(|d| depth + 1 >= d) {
                self.cutoff = true;
            } else {
                self.dfs(&child, depth + 1);
            }
        }
    }
}

/// Generates distinct conforming traces by randomised depth-first search.
///
/// Acyclic nets are searched exhaustively in one pass. Cyclic nets are
/// searched with iterative deepening on the number of task executions until
/// the trace cap is reached, the search space is exhausted, or
/// `max_playout_passes` depths have been tried.
pub fn playout(net: &InteractionNet, cfg: &SimulatorConfig) -> Result<EventLog, SimError> {
    cfg.validate()?;
    let sem = Semantics::new(net);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.random_seed);
    rng.set_stream(PLAYOUT_STREAM);
    let mut search = Search {
        sem: &sem,
        rng,
        cap: cfg.max_conforming_traces,
        found: Vec::new(),
        seen: HashSet::new(),
        depth_limit: None,
        cutoff: false,
    };
    let start = State {
        marking: net.initial_marking.clone(),
        values: vec![false; sem.variables.len()],
        events: Vec::new(),
    };

    let mut exhausted = false;
    if net.is_cyclic() {
        for depth in 1..=cfg.max_playout_passes {
            search.depth_limit = Some(depth);
            search.cutoff = false;
            search.dfs(&start, 0);
            if search.full() {
                break;
            }
            if !search.cutoff {
                exhausted = true;
                break;
            }
        }
    } else {
        search.dfs(&start, 0);
        exhausted = !search.full();
    }
    tracing::debug!(net = %net.net_id, traces = search.found.len(), exhausted, "playout finished");

    if search.found.is_empty() {
        return Err(SimError::NoTraceFound);
    }
    let capped = search.full();
    let traces = search
        .found
        .into_iter()
        .enumerate()
        .map(|(i, events)| Trace {
            case_id: format!("{}:conforming:{i}", net.net_id),
            label: TraceLabel::Conforming,
            events,
        })
        .collect();
    Ok(EventLog { model_id: net.net_id.clone(), traces, capped })
}

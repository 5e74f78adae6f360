//! Shared helpers for integration tests: fixture loading and a brute-force
//! trace enumerator that serves as an independent oracle for playout.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chorbench_core::ingest::{parse_choreography, preprocess};
use chorbench_core::net::{build_net, InteractionNet, Label, Marking};
use chorbench_core::sim::Event;
use chorbench_core::ChoreographyModel;
use serde::Deserialize;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ManifestEntry {
    pub file: String,
    pub model_id: Option<String>,
    pub supported: bool,
    pub stats: Option<serde_json::Value>,
}

pub fn manifest() -> Vec<ManifestEntry> {
    let text = std::fs::read_to_string(fixtures_dir().join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

pub fn load_model(file: &str) -> ChoreographyModel {
    let xml = std::fs::read_to_string(fixtures_dir().join(file)).unwrap();
    preprocess(&parse_choreography(&xml).unwrap()).0
}

/// Preprocessed model and net of every supported fixture, in manifest order.
pub fn supported_fixtures() -> Vec<(String, ChoreographyModel, InteractionNet)> {
    manifest()
        .into_iter()
        .filter(|m| m.supported)
        .map(|m| {
            let model = load_model(&m.file);
            let net = build_net(&model).unwrap();
            (m.model_id.unwrap(), model, net)
        })
        .collect()
}

struct Oracle<'n> {
    net: &'n InteractionNet,
    vars: Vec<String>,
    out: BTreeSet<Vec<Event>>,
}

/// What a finished autonomous phase committed to.
#[derive(Clone, Default)]
struct Phase {
    /// variable index -> required value
    needs: BTreeMap<usize, bool>,
    taken: BTreeSet<usize>,
}

impl<'n> Oracle<'n> {
    fn decisions_at(&self, place: usize) -> Vec<(usize, usize, bool)> {
        self.net
            .transitions
            .iter()
            .enumerate()
            .filter(|(_, t)| t.consume == vec![place])
            .filter_map(|(i, t)| match &t.label {
                Label::Decision { variable_id, expected } => {
                    Some((i, self.vars.iter().position(|v| v == variable_id).unwrap(), *expected))
                }
                _ => None,
            })
            .collect()
    }

    /// All quiescent outcomes of autonomous firing. At an exclusive split any
    /// branch may be taken; the branch dictates which conditions hold.
    fn autonomous(&self, m: Marking, phase: Phase, out: &mut Vec<(Marking, Phase)>) {
        let enabled: Vec<usize> = (0..self.net.transitions.len())
            .filter(|&i| self.net.transitions[i].is_autonomous() && self.net.is_enabled(&m, i))
            .collect();
        let Some(&first) = enabled.first() else {
            out.push((m, phase));
            return;
        };
        // resolve the conflict set around the first enabled transition
        let t = &self.net.transitions[first];
        let decisions = if t.consume.len() == 1 { self.decisions_at(t.consume[0]) } else { Vec::new() };
        if decisions.is_empty() {
            let next = self.net.fire_index(&m, first).marking;
            self.autonomous(next, phase, out);
            return;
        }
        let place = t.consume[0];
        let default = (0..self.net.transitions.len())
            .find(|&i| self.net.transitions[i].consume == vec![place] && self.net.transitions[i].label == Label::Silent)
            .unwrap();
        // the default: every sibling condition must be false
        let mut p = phase.clone();
        for &(_, v, e) in &decisions {
            p.needs.insert(v, !e);
        }
        self.autonomous(self.net.fire_index(&m, default).marking, p, out);
        // decision k: earlier siblings false, own condition true
        for (k, &(ti, v, e)) in decisions.iter().enumerate() {
            let mut p = phase.clone();
            for &(_, v2, e2) in &decisions[..k] {
                p.needs.insert(v2, !e2);
            }
            p.needs.insert(v, e);
            p.taken.insert(v);
            self.autonomous(self.net.fire_index(&m, ti).marking, p, out);
        }
    }

    fn walk(&mut self, m: Marking, values: Vec<bool>, events: Vec<Event>, carry: Phase, depth: usize) {
        assert!(depth < 64, "oracle is meant for acyclic nets");
        let mut phases = Vec::new();
        self.autonomous(m, carry, &mut phases);
        for (m, phase) in phases {
            if self.net.reaches_end(&m) {
                if events.iter().any(|e| matches!(e, Event::TaskExecution { .. })) {
                    self.out.insert(events.clone());
                }
                continue;
            }
            for i in 0..self.net.transitions.len() {
                let Label::Task { task_id, initiator } = &self.net.transitions[i].label else {
                    continue;
                };
                if !self.net.is_enabled(&m, i) {
                    continue;
                }
                let fired = self.net.fire_index(&m, i).marking;
                // the closure after this task belongs to the same data group
                let mut after = Vec::new();
                self.autonomous(fired, phase.clone(), &mut after);
                for (m2, group) in after {
                    let mut values = values.clone();
                    let mut events = events.clone();
                    for (&v, &val) in &group.needs {
                        if group.taken.contains(&v) || values[v] != val {
                            events.push(Event::data(self.vars[v].clone(), val));
                            values[v] = val;
                        }
                    }
                    events.push(Event::task(task_id.clone(), initiator.clone()));
                    if self.net.reaches_end(&m2) {
                        self.out.insert(events);
                    } else {
                        self.walk(m2, values, events, Phase::default(), depth + 1);
                    }
                }
            }
        }
    }
}

/// Every trace of an acyclic net, built from raw firing sequences: the
/// autonomous steps after a task (and, for the first task, before it) form
/// that task's data group, written as one data event per condition the
/// chosen branches depend on, in variable order.
pub fn enumerate_traces(net: &InteractionNet) -> BTreeSet<Vec<Event>> {
    assert!(!net.is_cyclic());
    let mut o = Oracle { net, vars: net.variables(), out: BTreeSet::new() };
    let values = vec![false; o.vars.len()];
    o.walk(net.initial_marking.clone(), values, Vec::new(), Phase::default(), 0);
    o.out
}

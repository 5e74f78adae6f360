use std::collections::HashMap;

use super::{Event, Trace};
use crate::net::{InteractionNet, Label, Marking};

/// Safety net for malformed inputs; gated nets have no autonomous cycles.
pub(crate) const MAX_AUTONOMOUS_FIRINGS: usize = 100_000;

/// Net transitions grouped by role, with variables resolved to indices.
#[derive(Debug, Clone)]
pub(crate) struct Semantics<'n> {
    pub net: &'n InteractionNet,
    pub variables: Vec<String>,
    pub var_index: HashMap<String, usize>,
    /// `(transition, variable, expected)` in net order.
    pub decisions: Vec<(usize, usize, bool)>,
    pub silents: Vec<usize>,
    /// `(transition, task label index)` in net order.
    pub tasks: Vec<(usize, usize)>,
    pub labels: Vec<(String, String)>,
}

impl<'n> Semantics<'n> {
    pub fn new(net: &'n InteractionNet) -> Self {
        let variables = net.variables();
        let var_index: HashMap<String, usize> = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let labels = net.task_labels();
        let mut decisions = Vec::new();
        let mut silents = Vec::new();
        let mut tasks = Vec::new();
        for (i, t) in net.transitions.iter().enumerate() {
            match &t.label {
                Label::Decision { variable_id, expected } => {
                    decisions.push((i, var_index[variable_id], *expected))
                }
                Label::Silent => silents.push(i),
                Label::Task { task_id, initiator } => {
                    let l = labels
                        .iter()
                        .position(|(a, b)| a == task_id && b == initiator)
                        .expect("label collected from the same net");
                    tasks.push((i, l));
                }
            }
        }
        Self { net, variables, var_index, decisions, silents, tasks, labels }
    }

    pub fn enabled(&self, m: &Marking, t: usize) -> bool {
        self.net.is_enabled(m, t)
    }

    pub fn first_enabled_silent(&self, m: &Marking) -> Option<usize> {
        self.silents.iter().copied().find(|&t| self.enabled(m, t))
    }

    /// First enabled task transition carrying label `label`.
    pub fn task_transition(&self, m: &Marking, label: usize) -> Option<usize> {
        self.tasks
            .iter()
            .find(|&&(t, l)| l == label && self.enabled(m, t))
            .map(|&(t, _)| t)
    }

    pub fn label_index(&self, task_id: &str, initiator: &str) -> Option<usize> {
        self.labels
            .iter()
            .position(|(a, b)| a == task_id && b == initiator)
    }

    /// Fires autonomous transitions until none is enabled. Decisions whose
    /// condition holds take priority over silent transitions. Returns the
    /// number of firings.
    pub fn close(&self, marking: &mut Marking, values: &[bool]) -> usize {
        let mut fired = 0;
        while fired < MAX_AUTONOMOUS_FIRINGS {
            let next = self
                .decisions
                .iter()
                .find(|&&(t, v, e)| self.enabled(marking, t) && values[v] == e)
                .map(|&(t, _, _)| t)
                .or_else(|| self.first_enabled_silent(marking));
            match next {
                Some(t) => {
                    *marking = self.net.fire_index(marking, t).marking;
                    fired += 1;
                }
                None => break,
            }
        }
        fired
    }
}

/// Event-by-event replay of a trace on an interaction net.
///
/// A task execution first lets the net progress autonomously, then fires the
/// first enabled task transition with the same task and initiator, then
/// progresses autonomously again. Data events update the variable store.
/// Rejected events leave the state untouched.
#[derive(Debug, Clone)]
pub struct NetReplay<'n> {
    sem: Semantics<'n>,
    marking: Marking,
    values: Vec<bool>,
    firings: usize,
}

impl<'n> NetReplay<'n> {
    pub fn new(net: &'n InteractionNet) -> Self {
        let sem = Semantics::new(net);
        let values = vec![false; sem.variables.len()];
        Self {
            marking: net.initial_marking.clone(),
            sem,
            values,
            firings: 0,
        }
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn value(&self, variable_id: &str) -> Option<bool> {
        self.sem.var_index.get(variable_id).map(|&i| self.values[i])
    }

    /// Total transitions fired so far, task and autonomous.
    pub fn firings(&self) -> usize {
        self.firings
    }

    pub fn end_reached(&self) -> bool {
        self.sem.net.reaches_end(&self.marking)
    }

    pub fn apply(&mut self, event: &Event) -> bool {
        match event {
            Event::DataSet { variable_id, value } => match self.sem.var_index.get(variable_id) {
                Some(&i) => {
                    self.values[i] = *value;
                    true
                }
                None => false,
            },
            Event::TaskExecution { task_id, initiator } => {
                let Some(label) = self.sem.label_index(task_id, initiator) else {
                    return false;
                };
                let mut m = self.marking.clone();
                let pre = self.sem.close(&mut m, &self.values);
                let Some(t) = self.sem.task_transition(&m, label) else {
                    return false;
                };
                m = self.sem.net.fire_index(&m, t).marking;
                let post = self.sem.close(&mut m, &self.values);
                self.marking = m;
                self.firings += pre + 1 + post;
                true
            }
        }
    }
}

/// Ground-truth conformance: every event is accepted and the end place is
/// marked afterwards.
pub fn conforms(net: &InteractionNet, trace: &Trace) -> bool {
    let mut replay = NetReplay::new(net);
    !trace.events.is_empty() && trace.events.iter().all(|e| replay.apply(e)) && replay.end_reached()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_choreography, preprocess};
    use crate::net::build_net;
    use crate::sim::TraceLabel;

    fn net(xml: &str) -> InteractionNet {
        build_net(&preprocess(&parse_choreography(xml).unwrap()).0).unwrap()
    }

    fn trace(events: Vec<Event>) -> Trace {
        Trace { case_id: "t".into(), label: TraceLabel::Conforming, events }
    }

    const SEQ: &str = r#"<definitions><choreography id="seq">
      <participant id="A"/><participant id="B"/>
      <startEvent id="S"/>
      <choreographyTask id="T1" initiatingParticipantRef="A"><participantRef>A</participantRef><participantRef>B</participantRef></choreographyTask>
      <choreographyTask id="T2" initiatingParticipantRef="B"><participantRef>B</participantRef><participantRef>A</participantRef></choreographyTask>
      <endEvent id="E"/>
      <sequenceFlow id="f1" sourceRef="S" targetRef="T1"/>
      <sequenceFlow id="f2" sourceRef="T1" targetRef="T2"/>
      <sequenceFlow id="f3" sourceRef="T2" targetRef="E"/>
    </choreography></definitions>"#;

    const XOR: &str = r#"<definitions><choreography id="xor">
      <participant id="A"/><participant id="B"/>
      <startEvent id="S"/>
      <choreographyTask id="T0" initiatingParticipantRef="A"><participantRef>A</participantRef><participantRef>B</participantRef></choreographyTask>
      <exclusiveGateway id="G"/>
      <choreographyTask id="TB" initiatingParticipantRef="A"><participantRef>A</participantRef><participantRef>B</participantRef></choreographyTask>
      <choreographyTask id="TA" initiatingParticipantRef="B"><participantRef>B</participantRef><participantRef>A</participantRef></choreographyTask>
      <exclusiveGateway id="J"/>
      <endEvent id="E"/>
      <sequenceFlow id="f0" sourceRef="S" targetRef="T0"/>
      <sequenceFlow id="f1" sourceRef="T0" targetRef="G"/>
      <sequenceFlow id="f2" sourceRef="G" targetRef="TB"/>
      <sequenceFlow id="f3" sourceRef="G" targetRef="TA"/>
      <sequenceFlow id="f4" sourceRef="TB" targetRef="J"/>
      <sequenceFlow id="f5" sourceRef="TA" targetRef="J"/>
      <sequenceFlow id="f6" sourceRef="J" targetRef="E"/>
    </choreography></definitions>"#;

    #[test]
    fn sequence_conformance() {
        let n = net(SEQ);
        assert!(conforms(&n, &trace(vec![Event::task("T1", "A"), Event::task("T2", "B")])));
        assert!(!conforms(&n, &trace(vec![Event::task("T2", "B")])));
        assert!(!conforms(&n, &trace(vec![Event::task("T1", "A")])));
        assert!(!conforms(&n, &trace(vec![Event::task("T1", "B"), Event::task("T2", "B")])));
        assert!(!conforms(&n, &trace(vec![])));
    }

    #[test]
    fn conditional_branch_needs_its_data_event() {
        let n = net(XOR);
        let with = trace(vec![Event::data("c0", true), Event::task("T0", "A"), Event::task("TA", "B")]);
        let without = trace(vec![Event::task("T0", "A"), Event::task("TA", "B")]);
        let default = trace(vec![Event::task("T0", "A"), Event::task("TB", "A")]);
        assert!(conforms(&n, &with));
        assert!(!conforms(&n, &without));
        assert!(conforms(&n, &default));
        // unknown variables are rejected
        assert!(!conforms(&n, &trace(vec![Event::data("zz", true), Event::task("T0", "A"), Event::task("TB", "A")])));
    }

    #[test]
    fn rejected_event_keeps_state() {
        let n = net(SEQ);
        let mut r = NetReplay::new(&n);
        let before = r.marking().clone();
        assert!(!r.apply(&Event::task("T2", "B")));
        assert_eq!(r.marking(), &before);
        assert_eq!(r.firings(), 0);
        assert!(r.apply(&Event::task("T1", "A")));
        assert!(r.apply(&Event::task("T2", "B")));
        assert!(r.end_reached());
        // two tasks plus the silent end transition
        assert_eq!(r.firings(), 3);
    }
}

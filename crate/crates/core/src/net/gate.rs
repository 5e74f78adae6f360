use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{build_net, InteractionNet, Marking};
use crate::model::ChoreographyModel;
use crate::sim::{playout, SimulatorConfig};

/// Upper bound on markings explored by the reachability check.
pub const MAX_EXPLORED_MARKINGS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GateConfig {
    pub max_places: usize,
    pub max_markings: usize,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            max_places: 256,
            max_markings: MAX_EXPLORED_MARKINGS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GateReport {
    pub accepted: bool,
    pub reasons: Vec<String>,
    pub explored_markings: usize,
}

impl GateReport {
    fn reject(reasons: Vec<String>) -> Self {
        Self {
            accepted: false,
            reasons,
            explored_markings: 0,
        }
    }
}

enum Reach {
    Done { explored: usize, end_reachable: bool, unsafe_at: Option<String> },
    Intractable(usize),
}

// Ignores data: decisions and their defaults are both free to fire.
fn explore(net: &InteractionNet, limit: usize) -> Reach {
    let mut seen: HashSet<Marking> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(net.initial_marking.clone());
    queue.push_back(net.initial_marking.clone());
    let mut end_reachable = false;
    while let Some(m) = queue.pop_front() {
        end_reachable |= net.reaches_end(&m);
        for i in net.enabled_indices(&m) {
            let firing = net.fire_index(&m, i);
            if firing.unsafe_token {
                return Reach::Done {
                    explored: seen.len(),
                    end_reachable,
                    unsafe_at: Some(net.transitions[i].transition_id.clone()),
                };
            }
            if seen.insert(firing.marking.clone()) {
                if seen.len() > limit {
                    return Reach::Intractable(seen.len());
                }
                queue.push_back(firing.marking);
            }
        }
    }
    Reach::Done { explored: seen.len(), end_reachable, unsafe_at: None }
}

/// Decides whether the reference generator can handle `net`.
pub fn check_generatable(net: &InteractionNet, cfg: &GateConfig) -> GateReport {
    let mut reasons = Vec::new();
    if !net.transitions.iter().any(|t| t.is_task()) {
        reasons.push("net has no task transitions".to_string());
    }
    if net.places.len() > cfg.max_places {
        reasons.push(format!(
            "{} places exceed the {}-bit marking budget",
            net.places.len(),
            cfg.max_places
        ));
    }
    if net.has_autonomous_cycle() {
        reasons.push("cycle without any task transition".to_string());
    }
    if !reasons.is_empty() {
        return GateReport::reject(reasons);
    }

    let explored = match explore(net, cfg.max_markings) {
        Reach::Intractable(n) => {
            return GateReport {
                accepted: false,
                reasons: vec![format!("more than {} reachable markings", cfg.max_markings)],
                explored_markings: n,
            }
        }
        Reach::Done { explored, end_reachable, unsafe_at } => {
            if let Some(t) = unsafe_at {
                reasons.push(format!("net is not 1-safe: firing {t} puts a second token on a place"));
            }
            if !end_reachable {
                reasons.push("end place is unreachable".to_string());
            }
            explored
        }
    };

    if reasons.is_empty() {
        let probe = SimulatorConfig {
            max_conforming_traces: 1,
            num_non_conforming: 0,
            ..SimulatorConfig::default()
        };
        match playout(net, &probe) {
            Ok(log) if !log.traces.is_empty() => {}
            _ => reasons.push("playout finds no conforming trace".to_string()),
        }
    }

    GateReport {
        accepted: reasons.is_empty(),
        reasons,
        explored_markings: explored,
    }
}

/// Builds the net for a preprocessed model and gates it.
pub fn assess_model(model: &ChoreographyModel, cfg: &GateConfig) -> (Option<InteractionNet>, GateReport) {
    match build_net(model) {
        Ok(net) => {
            let report = check_generatable(&net, cfg);
            (Some(net), report)
        }
        Err(super::NetError::UnsupportedConstruct(reasons)) => (None, GateReport::reject(reasons)),
        Err(e) => (None, GateReport::reject(vec![e.to_string()])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Label, Transition};

    fn t(id: &str, label: Label, consume: Vec<usize>, produce: Vec<usize>) -> Transition {
        Transition { transition_id: id.into(), label, consume, produce }
    }

    fn task(id: &str) -> Label {
        Label::Task { task_id: id.into(), initiator: "A".into() }
    }

    fn net(places: usize, transitions: Vec<Transition>) -> InteractionNet {
        InteractionNet {
            net_id: "n".into(),
            places: (0..places).map(|i| format!("p{i}")).collect(),
            transitions,
            initial_marking: Marking::new([0]),
            end_place: places - 1,
            participants: vec!["A".into()],
        }
    }

    #[test]
    fn accepts_simple_sequence() {
        let n = net(3, vec![t("a", task("A"), vec![0], vec![1]), t("e", Label::Silent, vec![1], vec![2])]);
        let r = check_generatable(&n, &GateConfig::default());
        assert!(r.accepted, "{:?}", r.reasons);
        assert_eq!(r.explored_markings, 3);
    }

    #[test]
    fn rejects_unreachable_end() {
        let n = net(3, vec![t("a", task("A"), vec![0], vec![1])]);
        let r = check_generatable(&n, &GateConfig::default());
        assert!(!r.accepted);
        assert!(r.reasons.iter().any(|m| m.contains("unreachable")));
    }

    #[test]
    fn rejects_unsafe_net() {
        let n = net(
            3,
            vec![
                t("split", Label::Silent, vec![0], vec![1, 2]),
                t("a", task("A"), vec![1], vec![2]),
            ],
        );
        let r = check_generatable(&n, &GateConfig::default());
        assert!(r.reasons.iter().any(|m| m.contains("1-safe")), "{:?}", r.reasons);
    }

    #[test]
    fn rejects_silent_cycle_and_place_budget() {
        let n = net(
            3,
            vec![
                t("a", task("A"), vec![0], vec![1]),
                t("loop", Label::Silent, vec![1], vec![1]),
                t("e", Label::Silent, vec![1], vec![2]),
            ],
        );
        let r = check_generatable(&n, &GateConfig { max_places: 2, ..GateConfig::default() });
        assert_eq!(r.reasons.len(), 2);
    }

    #[test]
    fn marking_bound_makes_gate_total() {
        let n = net(3, vec![t("a", task("A"), vec![0], vec![1]), t("e", Label::Silent, vec![1], vec![2])]);
        let r = check_generatable(&n, &GateConfig { max_markings: 1, ..GateConfig::default() });
        assert!(!r.accepted);
        assert!(r.reasons[0].contains("reachable markings"));
    }
}

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::model::{
    ChoreographyModel, ConditionRef, Flow, Gateway, GatewayDirection, GatewayKind,
};

pub const MERGED_START_EVENT: &str = "StartEvent_merged";
pub const MERGED_START_SPLIT: &str = "Gateway_merged_start";
pub const MERGED_END_EVENT: &str = "EndEvent_merged";
pub const MERGED_END_JOIN: &str = "Gateway_merged_end";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PreprocessReport {
    pub merged_start_events: usize,
    pub merged_end_events: usize,
    pub default_flows_assigned: usize,
    pub conditions_inserted: usize,
    pub extensions_stripped: usize,
    pub diagram_interchange_removed: bool,
}

impl PreprocessReport {
    pub fn is_noop(&self) -> bool {
        *self == PreprocessReport::default()
    }
}

/// Normalises a parsed model for execution.
///
/// Multiple start events are merged behind a fresh start event and an
/// exclusive split; multiple end events are merged through an exclusive
/// join. Every diverging exclusive gateway then gets exactly one default
/// flow (the first outgoing flow in document order unless one is marked)
/// and a boolean condition `c<k> == true` on each other outgoing flow.
pub fn preprocess(model: &ChoreographyModel) -> (ChoreographyModel, PreprocessReport) {
    let mut m = model.clone();
    let mut report = PreprocessReport::default();

    if m.start_events.len() > 1 {
        report.merged_start_events = m.start_events.len();
        merge_starts(&mut m);
    }
    if m.end_events.len() > 1 {
        report.merged_end_events = m.end_events.len();
        merge_ends(&mut m);
    }

    refresh_directions(&mut m);
    normalise_exclusive_splits(&mut m, &mut report);

    report.extensions_stripped = m.extension_count;
    m.extension_count = 0;
    report.diagram_interchange_removed = m.has_diagram_interchange;
    m.has_diagram_interchange = false;

    (m, report)
}

fn fresh_id(m: &ChoreographyModel, base: &str) -> String {
    let taken = |id: &str| m.has_node(id) || m.flows.iter().any(|f| f.flow_id == id);
    if !taken(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}_{i}"))
        .find(|id| !taken(id))
        .expect("unbounded id space")
}

fn merge_starts(m: &mut ChoreographyModel) {
    let start = fresh_id(m, MERGED_START_EVENT);
    let split = fresh_id(m, MERGED_START_SPLIT);
    let old_starts = std::mem::take(&mut m.start_events);
    m.start_events.push(start.clone());
    m.gateways.push(Gateway {
        gateway_id: split.clone(),
        kind: GatewayKind::Exclusive,
        direction: GatewayDirection::Diverging,
    });
    let entry = fresh_id(m, "Flow_merged_start");
    m.flows.push(plain_flow(entry, &start, &split));

    for old in old_starts {
        let outgoing: Vec<usize> = (0..m.flows.len())
            .filter(|&i| m.flows[i].source == old)
            .collect();
        if outgoing.len() <= 1 {
            for i in outgoing {
                m.flows[i].source = split.clone();
            }
            continue;
        }
        // A start event with several outgoing flows forks them all.
        let fork = fresh_id(m, &format!("Gateway_merged_fork_{old}"));
        m.gateways.push(Gateway {
            gateway_id: fork.clone(),
            kind: GatewayKind::Parallel,
            direction: GatewayDirection::Diverging,
        });
        for i in outgoing {
            m.flows[i].source = fork.clone();
        }
        let link = fresh_id(m, &format!("Flow_merged_fork_{old}"));
        m.flows.push(plain_flow(link, &split, &fork));
    }
}

fn merge_ends(m: &mut ChoreographyModel) {
    let end = fresh_id(m, MERGED_END_EVENT);
    let join = fresh_id(m, MERGED_END_JOIN);
    let old_ends: HashSet<String> = std::mem::take(&mut m.end_events).into_iter().collect();
    for flow in &mut m.flows {
        if old_ends.contains(&flow.target) {
            flow.target = join.clone();
        }
    }
    m.end_events.push(end.clone());
    m.gateways.push(Gateway {
        gateway_id: join.clone(),
        kind: GatewayKind::Exclusive,
        direction: GatewayDirection::Converging,
    });
    let exit = fresh_id(m, "Flow_merged_end");
    m.flows.push(plain_flow(exit, &join, &end));
}

fn plain_flow(id: String, source: &str, target: &str) -> Flow {
    Flow {
        flow_id: id,
        source: source.to_string(),
        target: target.to_string(),
        condition: None,
        is_default: false,
    }
}

fn refresh_directions(m: &mut ChoreographyModel) {
    for i in 0..m.gateways.len() {
        let current = m.gateways[i].direction;
        let id = m.gateways[i].gateway_id.clone();
        m.gateways[i].direction = m.inferred_direction(&id, Some(current));
    }
}

fn normalise_exclusive_splits(m: &mut ChoreographyModel, report: &mut PreprocessReport) {
    let splits: HashSet<String> = m
        .gateways
        .iter()
        .filter(|g| g.kind == GatewayKind::Exclusive && g.direction == GatewayDirection::Diverging)
        .map(|g| g.gateway_id.clone())
        .collect();

    // Defaults and conditions only mean something on exclusive splits.
    for flow in &mut m.flows {
        if !splits.contains(&flow.source) {
            flow.is_default = false;
            flow.condition = None;
        }
    }

    let mut used: HashSet<String> = m
        .flows
        .iter()
        .filter_map(|f| f.condition.as_ref().map(|c| c.variable_id.clone()))
        .collect();
    let mut next_var = 0usize;
    let split_order: Vec<String> = m
        .gateways
        .iter()
        .filter(|g| splits.contains(&g.gateway_id))
        .map(|g| g.gateway_id.clone())
        .collect();

    for gateway in split_order {
        let outgoing: Vec<usize> = (0..m.flows.len())
            .filter(|&i| m.flows[i].source == gateway)
            .collect();
        let marked: Vec<usize> = outgoing
            .iter()
            .copied()
            .filter(|&i| m.flows[i].is_default)
            .collect();
        let default = match marked.first() {
            Some(&i) => i,
            None => {
                report.default_flows_assigned += 1;
                outgoing[0]
            }
        };
        for &i in &outgoing {
            let flow = &mut m.flows[i];
            if i == default {
                flow.is_default = true;
                flow.condition = None;
                continue;
            }
            flow.is_default = false;
            if flow.condition.is_none() {
                while used.contains(&format!("c{next_var}")) {
                    next_var += 1;
                }
                let variable_id = format!("c{next_var}");
                used.insert(variable_id.clone());
                flow.condition = Some(ConditionRef {
                    variable_id,
                    expected: true,
                });
                report.conditions_inserted += 1;
            }
        }
    }
}

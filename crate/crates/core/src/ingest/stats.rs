use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{ChoreographyModel, GatewayDirection, GatewayKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DirectionCounts {
    pub diverging: usize,
    pub converging: usize,
    pub mixed: usize,
}

impl DirectionCounts {
    fn bump(&mut self, direction: GatewayDirection) {
        match direction {
            GatewayDirection::Diverging => self.diverging += 1,
            GatewayDirection::Converging => self.converging += 1,
            GatewayDirection::Mixed => self.mixed += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.diverging + self.converging + self.mixed
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GatewayCounts {
    pub exclusive: DirectionCounts,
    pub parallel: DirectionCounts,
    pub event_based: DirectionCounts,
}

impl GatewayCounts {
    pub fn get(&self, kind: GatewayKind) -> &DirectionCounts {
        match kind {
            GatewayKind::Exclusive => &self.exclusive,
            GatewayKind::Parallel => &self.parallel,
            GatewayKind::EventBased => &self.event_based,
        }
    }
}

/// Per-model metadata kept next to benchmark results.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelStats {
    pub task_count: usize,
    pub participant_count: usize,
    pub gateway_counts: GatewayCounts,
    pub flow_count: usize,
    pub has_loops: bool,
}

pub fn collect_stats(model: &ChoreographyModel) -> ModelStats {
    let mut gateway_counts = GatewayCounts::default();
    for g in &model.gateways {
        let slot = match g.kind {
            GatewayKind::Exclusive => &mut gateway_counts.exclusive,
            GatewayKind::Parallel => &mut gateway_counts.parallel,
            GatewayKind::EventBased => &mut gateway_counts.event_based,
        };
        slot.bump(g.direction);
    }
    ModelStats {
        task_count: model.tasks.len(),
        participant_count: model.participants.len(),
        gateway_counts,
        flow_count: model.flows.len(),
        has_loops: has_cycle(model),
    }
}

fn has_cycle(model: &ChoreographyModel) -> bool {
    let mut succ: HashMap<&str, Vec<&str>> = HashMap::new();
    for f in &model.flows {
        succ.entry(f.source.as_str()).or_default().push(f.target.as_str());
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    let mut marks: HashMap<&str, Mark> = HashMap::new();
    let mut nodes: Vec<&str> = succ.keys().copied().collect();
    nodes.sort_unstable();
    for root in nodes {
        if marks.contains_key(root) {
            continue;
        }
        // iterative DFS: (node, next child index)
        let mut stack: Vec<(&str, usize)> = vec![(root, 0)];
        marks.insert(root, Mark::Open);
        while let Some((node, idx)) = stack.pop() {
            let children = succ.get(node).map(Vec::as_slice).unwrap_or(&[]);
            if idx < children.len() {
                stack.push((node, idx + 1));
                let child = children[idx];
                match marks.get(child) {
                    Some(Mark::Open) => return true,
                    Some(Mark::Done) => {}
                    None => {
                        marks.insert(child, Mark::Open);
                        stack.push((child, 0));
                    }
                }
            } else {
                marks.insert(node, Mark::Done);
            }
        }
    }
    false
}

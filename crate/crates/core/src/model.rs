//! In-memory representation of a BPMN 2.0 choreography.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Participant {
    pub participant_id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Task {
    pub task_id: String,
    pub name: String,
    pub initiator: String,
    pub recipient: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GatewayKind {
    Exclusive,
    Parallel,
    EventBased,
}

impl GatewayKind {
    pub fn element_name(self) -> &'static str {
        match self {
            GatewayKind::Exclusive => "exclusiveGateway",
            GatewayKind::Parallel => "parallelGateway",
            GatewayKind::EventBased => "eventBasedGateway",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GatewayDirection {
    Diverging,
    Converging,
    Mixed,
}

impl GatewayDirection {
    pub fn attribute_value(self) -> &'static str {
        match self {
            GatewayDirection::Diverging => "Diverging",
            GatewayDirection::Converging => "Converging",
            GatewayDirection::Mixed => "Mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Gateway {
    pub gateway_id: String,
    pub kind: GatewayKind,
    pub direction: GatewayDirection,
}

/// Boolean data condition guarding a conditional outgoing flow of an
/// exclusive gateway.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConditionRef {
    pub variable_id: String,
    pub expected: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Flow {
    pub flow_id: String,
    pub source: String,
    pub target: String,
    pub condition: Option<ConditionRef>,
    pub is_default: bool,
}

/// A flow node the pipeline does not execute (inclusive gateways,
/// intermediate events, call choreographies, ...). Kept so that flows
/// touching it still resolve; the net builder rejects it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnsupportedNode {
    pub node_id: String,
    pub element: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChoreographyModel {
    pub model_id: String,
    pub participants: Vec<Participant>,
    pub tasks: Vec<Task>,
    pub gateways: Vec<Gateway>,
    pub flows: Vec<Flow>,
    pub start_events: Vec<String>,
    pub end_events: Vec<String>,
    pub unsupported: Vec<UnsupportedNode>,
    /// Number of vendor `extensionElements` blocks still attached to the document.
    pub extension_count: usize,
    pub has_diagram_interchange: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Start,
    End,
    Task,
    Gateway(GatewayKind),
    Unsupported,
}

impl ChoreographyModel {
    pub fn empty(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            participants: Vec::new(),
            tasks: Vec::new(),
            gateways: Vec::new(),
            flows: Vec::new(),
            start_events: Vec::new(),
            end_events: Vec::new(),
            unsupported: Vec::new(),
            extension_count: 0,
            has_diagram_interchange: false,
        }
    }

    /// The single start event, if the model has exactly one.
    pub fn start_event(&self) -> Option<&str> {
        match self.start_events.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }

    pub fn end_event(&self) -> Option<&str> {
        match self.end_events.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }

    pub fn node_kind(&self, id: &str) -> Option<NodeKind> {
        if self.start_events.iter().any(|s| s == id) {
            Some(NodeKind::Start)
        } else if self.end_events.iter().any(|s| s == id) {
            Some(NodeKind::End)
        } else if self.tasks.iter().any(|t| t.task_id == id) {
            Some(NodeKind::Task)
        } else if let Some(g) = self.gateway(id) {
            Some(NodeKind::Gateway(g.kind))
        } else if self.unsupported.iter().any(|u| u.node_id == id) {
            Some(NodeKind::Unsupported)
        } else {
            None
        }
    }

    pub fn has_node(&self, id: &str) -> bool {
        self.node_kind(id).is_some()
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.iter().find(|t| t.task_id == id)
    }

    pub fn gateway(&self, id: &str) -> Option<&Gateway> {
        self.gateways.iter().find(|g| g.gateway_id == id)
    }

    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.participants.iter().find(|p| p.participant_id == id)
    }

    /// Outgoing flows of `node` in document order.
    pub fn outgoing<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Flow> + 'a {
        self.flows.iter().filter(move |f| f.source == node)
    }

    pub fn incoming<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Flow> + 'a {
        self.flows.iter().filter(move |f| f.target == node)
    }

    /// Direction implied by the flow structure around a gateway.
    pub fn inferred_direction(&self, gateway_id: &str, declared: Option<GatewayDirection>) -> GatewayDirection {
        let ins = self.incoming(gateway_id).count();
        let outs = self.outgoing(gateway_id).count();
        match (ins > 1, outs > 1) {
            (true, true) => GatewayDirection::Mixed,
            (false, true) => GatewayDirection::Diverging,
            (true, false) => GatewayDirection::Converging,
            (false, false) => declared.unwrap_or(GatewayDirection::Converging),
        }
    }

    /// Condition variables in gateway document order, then flow document order.
    pub fn condition_variables(&self) -> Vec<String> {
        let mut vars: Vec<String> = Vec::new();
        for gateway in self.gateways.iter().filter(|g| g.kind == GatewayKind::Exclusive) {
            for flow in self.outgoing(&gateway.gateway_id) {
                if let Some(cond) = &flow.condition {
                    if !vars.contains(&cond.variable_id) {
                        vars.push(cond.variable_id.clone());
                    }
                }
            }
        }
        vars
    }
}

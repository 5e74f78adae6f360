use std::collections::HashMap;

use tracing::warn;

use super::xml::{parse_document, Element};
use super::IngestError;
use crate::model::{
    ChoreographyModel, ConditionRef, Flow, Gateway, GatewayDirection, GatewayKind, Participant,
    Task, UnsupportedNode,
};

/// Elements that legitimately occur inside a choreography but carry nothing
/// the executable model needs.
const IGNORED: &[&str] = &[
    "participantRef",
    "messageFlow",
    "messageFlowRef",
    "textAnnotation",
    "association",
    "documentation",
    "extensionElements",
    "participantAssociation",
    "correlationKey",
    "incoming",
    "outgoing",
    "group",
];

/// Flow-node elements outside the executable subset. They are kept as
/// unsupported nodes so the gate can report them.
const UNSUPPORTED_NODES: &[&str] = &[
    "inclusiveGateway",
    "complexGateway",
    "intermediateCatchEvent",
    "intermediateThrowEvent",
    "boundaryEvent",
    "callChoreography",
    "task",
];

#[derive(Default)]
struct Scope {
    tasks: Vec<Task>,
    gateways: Vec<(Gateway, Option<GatewayDirection>)>,
    defaults: Vec<String>,
    flows: Vec<Flow>,
    starts: Vec<String>,
    ends: Vec<String>,
    unsupported: Vec<UnsupportedNode>,
    unknown: Vec<(String, String)>,
    subs: Vec<String>,
}

fn required<'a>(el: &'a Element, attr: &str) -> Result<&'a str, IngestError> {
    el.attr(attr)
        .filter(|v| !v.trim().is_empty())
        .ok_or_else(|| IngestError::MissingRequiredAttribute {
            element: el.name.clone(),
            attribute: attr.to_string(),
        })
}

fn parse_condition(text: &str) -> Option<ConditionRef> {
    let (lhs, rhs) = text.trim().split_once("==")?;
    let variable_id = lhs.trim();
    if variable_id.is_empty()
        || !variable_id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        return None;
    }
    let expected = match rhs.trim() {
        "true" => true,
        "false" => false,
        _ => return None,
    };
    Some(ConditionRef {
        variable_id: variable_id.to_string(),
        expected,
    })
}

fn declared_direction(el: &Element) -> Option<GatewayDirection> {
    match el.attr("gatewayDirection")? {
        "Diverging" => Some(GatewayDirection::Diverging),
        "Converging" => Some(GatewayDirection::Converging),
        "Mixed" => Some(GatewayDirection::Mixed),
        _ => None,
    }
}

fn collect(el: &Element, scope: &mut Scope) -> Result<(), IngestError> {
    for child in &el.children {
        match child.name.as_str() {
            "participant" => {}
            "startEvent" => scope.starts.push(required(child, "id")?.to_string()),
            "endEvent" => scope.ends.push(required(child, "id")?.to_string()),
            "choreographyTask" => {
                let task_id = required(child, "id")?.to_string();
                let initiator = required(child, "initiatingParticipantRef")?.to_string();
                let recipient = child
                    .children_named("participantRef")
                    .map(|p| p.text.trim())
                    .find(|p| *p != initiator && !p.is_empty())
                    .ok_or_else(|| IngestError::MissingRequiredAttribute {
                        element: format!("choreographyTask {task_id}"),
                        attribute: "participantRef".to_string(),
                    })?
                    .to_string();
                scope.tasks.push(Task {
                    task_id,
                    name: child.attr("name").unwrap_or_default().to_string(),
                    initiator,
                    recipient,
                });
            }
            name @ ("exclusiveGateway" | "parallelGateway" | "eventBasedGateway") => {
                let kind = match name {
                    "exclusiveGateway" => GatewayKind::Exclusive,
                    "parallelGateway" => GatewayKind::Parallel,
                    _ => GatewayKind::EventBased,
                };
                let gateway_id = required(child, "id")?.to_string();
                if let Some(default) = child.attr("default") {
                    scope.defaults.push(default.to_string());
                }
                scope.gateways.push((
                    Gateway {
                        gateway_id,
                        kind,
                        direction: GatewayDirection::Converging,
                    },
                    declared_direction(child),
                ));
            }
            "sequenceFlow" => {
                let condition = child
                    .children_named("conditionExpression")
                    .next()
                    .and_then(|c| parse_condition(&c.text));
                scope.flows.push(Flow {
                    flow_id: required(child, "id")?.to_string(),
                    source: required(child, "sourceRef")?.to_string(),
                    target: required(child, "targetRef")?.to_string(),
                    condition,
                    is_default: false,
                });
            }
            "subChoreography" => {
                let sub_id = required(child, "id")?.to_string();
                let mut inner = Scope::default();
                collect(child, &mut inner)?;
                flatten_subs(&mut inner);
                flatten_into(scope, sub_id, inner);
            }
            other if UNSUPPORTED_NODES.contains(&other) => {
                scope.unsupported.push(UnsupportedNode {
                    node_id: required(child, "id")?.to_string(),
                    element: other.to_string(),
                });
            }
            other if IGNORED.contains(&other) => {}
            other => {
                if let Some(id) = child.attr("id") {
                    scope.unknown.push((id.to_string(), other.to_string()));
                } else {
                    warn!(element = other, "stripping unknown element");
                }
            }
        }
    }
    Ok(())
}

/// Merges a parsed sub-choreography into its parent. Inner start and end
/// events become pass-through points, resolved by [`flatten_subs`] once the
/// parent's flows are known.
fn flatten_into(outer: &mut Scope, sub_id: String, inner: Scope) {
    let well_formed = inner.starts.len() == 1 && !inner.ends.is_empty();
    if !well_formed {
        warn!(sub = %sub_id, "sub-choreography without a single start event kept as unsupported");
        outer.unsupported.push(UnsupportedNode {
            node_id: sub_id,
            element: "subChoreography".to_string(),
        });
        return;
    }
    outer.tasks.extend(inner.tasks);
    outer.gateways.extend(inner.gateways);
    outer.defaults.extend(inner.defaults);
    outer.flows.extend(inner.flows);
    outer.unsupported.extend(inner.unsupported);
    outer.unknown.extend(inner.unknown);
    // Inner events are encoded as "<sub>\0start:<id>" markers on the sub list.
    outer.subs.push(format!(
        "{sub_id}\u{0}{}\u{0}{}",
        inner.starts[0],
        inner.ends.join("\u{0}")
    ));
}

/// Rewires flows around every sub-choreography recorded in `scope`:
/// flows into the sub continue at the inner start's successor, flows into an
/// inner end continue at the sub's successor.
fn flatten_subs(scope: &mut Scope) {
    for entry in std::mem::take(&mut scope.subs) {
        let mut parts = entry.split('\u{0}');
        let sub_id = parts.next().unwrap_or_default().to_string();
        let inner_start = parts.next().unwrap_or_default().to_string();
        let inner_ends: Vec<String> = parts.map(str::to_string).collect();

        let entry_flows: Vec<usize> = indices(&scope.flows, |f| f.source == inner_start);
        let exit_flows: Vec<usize> = indices(&scope.flows, |f| f.source == sub_id);
        if entry_flows.len() != 1 || exit_flows.len() != 1 {
            warn!(sub = %sub_id, "sub-choreography needs exactly one entry and one exit flow");
            scope.unsupported.push(UnsupportedNode {
                node_id: sub_id,
                element: "subChoreography".to_string(),
            });
            continue;
        }
        let entry_target = scope.flows[entry_flows[0]].target.clone();
        let exit_target = scope.flows[exit_flows[0]].target.clone();
        let entry_id = scope.flows[entry_flows[0]].flow_id.clone();
        let exit_id = scope.flows[exit_flows[0]].flow_id.clone();

        for flow in &mut scope.flows {
            if flow.target == sub_id {
                flow.target = entry_target.clone();
            }
            if inner_ends.contains(&flow.target) {
                flow.target = exit_target.clone();
            }
        }
        scope
            .flows
            .retain(|f| f.flow_id != entry_id && f.flow_id != exit_id);
    }
}

fn indices<T>(items: &[T], pred: impl Fn(&T) -> bool) -> Vec<usize> {
    items
        .iter()
        .enumerate()
        .filter(|(_, x)| pred(x))
        .map(|(i, _)| i)
        .collect()
}

/// Parses a BPMN 2.0 document and returns its first choreography.
///
/// Sub-choreographies are flattened inline. Vendor extensions and the
/// diagram interchange are counted but not retained.
pub fn parse_choreography(xml_text: &str) -> Result<ChoreographyModel, IngestError> {
    let root = parse_document(xml_text).map_err(IngestError::MalformedXml)?;
    let all = root.descendants();
    let choreography = all
        .iter()
        .find(|e| e.name == "choreography")
        .ok_or(IngestError::NoChoreography)?;

    let mut model = ChoreographyModel::empty(
        choreography
            .attr("id")
            .or_else(|| root.attr("id"))
            .unwrap_or("choreography"),
    );
    model.extension_count = all.iter().filter(|e| e.name == "extensionElements").count();
    model.has_diagram_interchange = all.iter().any(|e| e.name == "BPMNDiagram");

    for p in choreography.children_named("participant") {
        model.participants.push(Participant {
            participant_id: required(p, "id")?.to_string(),
            name: p.attr("name").unwrap_or_default().to_string(),
        });
    }

    let mut scope = Scope::default();
    collect(choreography, &mut scope)?;
    flatten_subs(&mut scope);

    model.tasks = scope.tasks;
    model.flows = scope.flows;
    model.start_events = scope.starts;
    model.end_events = scope.ends;
    model.unsupported = scope.unsupported;

    let referenced: HashMap<&str, ()> = model
        .flows
        .iter()
        .flat_map(|f| [f.source.as_str(), f.target.as_str()])
        .map(|id| (id, ()))
        .collect();
    for (id, element) in scope.unknown {
        if referenced.contains_key(id.as_str()) {
            model.unsupported.push(UnsupportedNode { node_id: id, element });
        } else {
            warn!(element = %element, id = %id, "stripping unknown element");
        }
    }

    let declared: Vec<Option<GatewayDirection>> = scope.gateways.iter().map(|(_, d)| *d).collect();
    model.gateways = scope.gateways.into_iter().map(|(g, _)| g).collect();
    for i in 0..model.gateways.len() {
        let direction = model.inferred_direction(&model.gateways[i].gateway_id, declared[i]);
        model.gateways[i].direction = direction;
    }
    for flow in &mut model.flows {
        flow.is_default = scope.defaults.contains(&flow.flow_id);
    }

    validate_references(&model)?;
    Ok(model)
}

fn validate_references(model: &ChoreographyModel) -> Result<(), IngestError> {
    for flow in &model.flows {
        for end in [&flow.source, &flow.target] {
            if !model.has_node(end) {
                return Err(IngestError::DanglingReference {
                    from: format!("sequenceFlow {}", flow.flow_id),
                    target: end.clone(),
                });
            }
        }
    }
    for task in &model.tasks {
        for participant in [&task.initiator, &task.recipient] {
            if model.participant(participant).is_none() {
                return Err(IngestError::DanglingReference {
                    from: format!("choreographyTask {}", task.task_id),
                    target: participant.clone(),
                });
            }
        }
    }
    Ok(())
}

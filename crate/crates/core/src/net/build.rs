use std::collections::HashMap;

use super::{InteractionNet, Label, Marking, NetError, Transition};
use crate::model::{ChoreographyModel, GatewayDirection, GatewayKind, NodeKind};

pub const END_PLACE: &str = "end";

struct Builder<'m> {
    model: &'m ChoreographyModel,
    places: Vec<String>,
    place_of_flow: HashMap<&'m str, usize>,
    transitions: Vec<Transition>,
    problems: Vec<String>,
}

impl<'m> Builder<'m> {
    fn place(&self, flow_id: &str) -> usize {
        self.place_of_flow[flow_id]
    }

    fn push(&mut self, id: String, label: Label, consume: Vec<usize>, produce: Vec<usize>) {
        let mut consume = consume;
        let mut produce = produce;
        consume.sort_unstable();
        consume.dedup();
        produce.sort_unstable();
        produce.dedup();
        self.transitions.push(Transition {
            transition_id: id,
            label,
            consume,
            produce,
        });
    }

    fn problem(&mut self, msg: String) {
        self.problems.push(msg);
    }
}

/// Resolves the place a flow deposits its token on. Flows leaving an
/// event-based split share the split's input place, which turns the
/// successor tasks into a deferred choice.
fn resolve_places(model: &ChoreographyModel) -> Result<(Vec<String>, HashMap<&str, usize>), Vec<String>> {
    let mut places = Vec::new();
    let mut place_of: HashMap<&str, usize> = HashMap::new();
    let mut problems = Vec::new();

    let event_split = |node: &str| {
        model.gateway(node).is_some_and(|g| {
            g.kind == GatewayKind::EventBased && g.direction == GatewayDirection::Diverging
        })
    };

    for flow in &model.flows {
        if !event_split(&flow.source) {
            place_of.insert(flow.flow_id.as_str(), places.len());
            places.push(format!("p_{}", flow.flow_id));
        }
    }
    for flow in &model.flows {
        if !event_split(&flow.source) {
            continue;
        }
        // follow chains of event-based splits back to a real place
        let mut node = flow.source.as_str();
        let mut hops = 0;
        let resolved = loop {
            let incoming: Vec<_> = model.incoming(node).collect();
            if incoming.len() != 1 || hops > model.gateways.len() {
                break None;
            }
            let f = incoming[0];
            if event_split(&f.source) {
                node = f.source.as_str();
                hops += 1;
            } else {
                break place_of.get(f.flow_id.as_str()).copied();
            }
        };
        match resolved {
            Some(p) => {
                place_of.insert(flow.flow_id.as_str(), p);
            }
            None => problems.push(format!(
                "event-based gateway {} needs exactly one incoming flow",
                flow.source
            )),
        }
    }
    if problems.is_empty() {
        Ok((places, place_of))
    } else {
        Err(problems)
    }
}

/// Translates a preprocessed choreography into an interaction net.
pub fn build_net(model: &ChoreographyModel) -> Result<InteractionNet, NetError> {
    let mut problems = Vec::new();
    if model.start_events.len() != 1 {
        problems.push(format!("expected one start event, found {}", model.start_events.len()));
    }
    if model.end_events.len() != 1 {
        problems.push(format!("expected one end event, found {}", model.end_events.len()));
    }
    for u in &model.unsupported {
        problems.push(format!("{} {} is not supported", u.element, u.node_id));
    }
    if !problems.is_empty() {
        return Err(NetError::UnsupportedConstruct(problems));
    }

    let (mut places, place_of_flow) = resolve_places(model).map_err(NetError::UnsupportedConstruct)?;
    let end_place = places.len();
    places.push(END_PLACE.to_string());

    let mut b = Builder {
        model,
        places,
        place_of_flow,
        transitions: Vec::new(),
        problems: Vec::new(),
    };

    // start event
    let start = model.start_events[0].as_str();
    let initial: Vec<usize> = model.outgoing(start).map(|f| b.place(&f.flow_id)).collect();
    if initial.is_empty() {
        b.problem(format!("start event {start} has no outgoing flow"));
    }
    if model.incoming(start).next().is_some() {
        b.problem(format!("start event {start} has incoming flows"));
    }

    for task in &model.tasks {
        let ins: Vec<usize> = model.incoming(&task.task_id).map(|f| b.place(&f.flow_id)).collect();
        let outs: Vec<usize> = model.outgoing(&task.task_id).map(|f| b.place(&f.flow_id)).collect();
        if ins.is_empty() || outs.is_empty() {
            b.problem(format!("task {} must have incoming and outgoing flows", task.task_id));
            continue;
        }
        let label = Label::Task {
            task_id: task.task_id.clone(),
            initiator: task.initiator.clone(),
        };
        let many = ins.len() > 1;
        for (k, p) in ins.into_iter().enumerate() {
            let id = if many {
                format!("task:{}#{k}", task.task_id)
            } else {
                format!("task:{}", task.task_id)
            };
            b.push(id, label.clone(), vec![p], outs.clone());
        }
    }

    for gateway in &model.gateways {
        let gid = gateway.gateway_id.as_str();
        let ins: Vec<&crate::model::Flow> = model.incoming(gid).collect();
        let outs: Vec<&crate::model::Flow> = model.outgoing(gid).collect();
        if ins.is_empty() || outs.is_empty() {
            b.problem(format!("gateway {gid} must have incoming and outgoing flows"));
            continue;
        }
        match (gateway.kind, gateway.direction) {
            (_, GatewayDirection::Mixed) => {
                b.problem(format!("mixed gateway {gid} is not supported"));
            }
            (GatewayKind::Exclusive, GatewayDirection::Diverging) => {
                let input = b.place(&ins[0].flow_id);
                let mut defaults = 0;
                for f in &outs {
                    let out = b.place(&f.flow_id);
                    let id = format!("gw:{gid}->{}", f.flow_id);
                    if f.is_default {
                        defaults += 1;
                        b.push(id, Label::Silent, vec![input], vec![out]);
                    } else if let Some(c) = &f.condition {
                        let label = Label::Decision {
                            variable_id: c.variable_id.clone(),
                            expected: c.expected,
                        };
                        b.push(id, label, vec![input], vec![out]);
                    } else {
                        b.problem(format!("flow {} of exclusive split {gid} has neither condition nor default marking", f.flow_id));
                    }
                }
                if defaults != 1 {
                    b.problem(format!("exclusive split {gid} needs exactly one default flow"));
                }
            }
            (GatewayKind::Exclusive, GatewayDirection::Converging) => {
                let out = b.place(&outs[0].flow_id);
                for f in &ins {
                    let p = b.place(&f.flow_id);
                    b.push(format!("gw:{gid}<-{}", f.flow_id), Label::Silent, vec![p], vec![out]);
                }
            }
            (GatewayKind::Parallel, GatewayDirection::Diverging) => {
                let input = b.place(&ins[0].flow_id);
                let produce = outs.iter().map(|f| b.place(&f.flow_id)).collect();
                b.push(format!("gw:{gid}"), Label::Silent, vec![input], produce);
            }
            (GatewayKind::Parallel, GatewayDirection::Converging) => {
                let consume = ins.iter().map(|f| b.place(&f.flow_id)).collect();
                let out = b.place(&outs[0].flow_id);
                b.push(format!("gw:{gid}"), Label::Silent, consume, vec![out]);
            }
            (GatewayKind::EventBased, GatewayDirection::Diverging) => {
                for f in &outs {
                    if model.node_kind(&f.target) != Some(NodeKind::Task) {
                        b.problem(format!("event-based gateway {gid} must be followed by tasks, found {}", f.target));
                    }
                }
            }
            (GatewayKind::EventBased, GatewayDirection::Converging) => {
                b.problem(format!("converging event-based gateway {gid} is not supported"));
            }
        }
    }

    let end = model.end_events[0].as_str();
    if model.outgoing(end).next().is_some() {
        b.problem(format!("end event {end} has outgoing flows"));
    }
    let end_ins: Vec<&crate::model::Flow> = model.incoming(end).collect();
    if end_ins.is_empty() {
        b.problem(format!("end event {end} has no incoming flow"));
    }
    for f in end_ins {
        let p = b.place(&f.flow_id);
        b.push(format!("end:{}", f.flow_id), Label::Silent, vec![p], vec![end_place]);
    }

    if !b.problems.is_empty() {
        return Err(NetError::UnsupportedConstruct(b.problems));
    }
    let _ = b.model;
    Ok(InteractionNet {
        net_id: model.model_id.clone(),
        places: b.places,
        transitions: b.transitions,
        initial_marking: Marking::new(initial),
        end_place,
        participants: model
            .participants
            .iter()
            .map(|p| p.participant_id.clone())
            .collect(),
    })
}

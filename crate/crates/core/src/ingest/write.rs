use std::fmt::Write as _;

use quick_xml::escape::escape;

use crate::model::ChoreographyModel;

const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
const XSI_NS: &str = "http://www.w3.org/2001/XMLSchema-instance";

/// Serialises a model as a BPMN 2.0 choreography document.
///
/// The output is deterministic and parses back to an equal model (up to the
/// extension and diagram-interchange counters, which are never written).
pub fn write_choreography(model: &ChoreographyModel) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<definitions xmlns=\"{BPMN_NS}\" xmlns:xsi=\"{XSI_NS}\" id=\"Definitions_{}\" targetNamespace=\"http://bpmn.io/schema/bpmn\">",
        escape(model.model_id.as_str())
    );
    let _ = writeln!(out, "  <choreography id=\"{}\">", escape(model.model_id.as_str()));

    for p in &model.participants {
        let _ = writeln!(
            out,
            "    <participant id=\"{}\" name=\"{}\"/>",
            escape(p.participant_id.as_str()),
            escape(p.name.as_str())
        );
    }

    let flow_refs = |out: &mut String, node: &str| {
        for f in model.incoming(node) {
            let _ = writeln!(out, "      <incoming>{}</incoming>", escape(f.flow_id.as_str()));
        }
        for f in model.outgoing(node) {
            let _ = writeln!(out, "      <outgoing>{}</outgoing>", escape(f.flow_id.as_str()));
        }
    };

    for s in &model.start_events {
        let _ = writeln!(out, "    <startEvent id=\"{}\">", escape(s.as_str()));
        flow_refs(&mut out, s);
        out.push_str("    </startEvent>\n");
    }
    for t in &model.tasks {
        let _ = writeln!(
            out,
            "    <choreographyTask id=\"{}\" name=\"{}\" initiatingParticipantRef=\"{}\">",
            escape(t.task_id.as_str()),
            escape(t.name.as_str()),
            escape(t.initiator.as_str())
        );
        flow_refs(&mut out, &t.task_id);
        let _ = writeln!(out, "      <participantRef>{}</participantRef>", escape(t.initiator.as_str()));
        let _ = writeln!(out, "      <participantRef>{}</participantRef>", escape(t.recipient.as_str()));
        out.push_str("    </choreographyTask>\n");
    }
    for g in &model.gateways {
        let default = model
            .outgoing(&g.gateway_id)
            .find(|f| f.is_default)
            .map(|f| format!(" default=\"{}\"", escape(f.flow_id.as_str())))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "    <{} id=\"{}\" gatewayDirection=\"{}\"{}>",
            g.kind.element_name(),
            escape(g.gateway_id.as_str()),
            g.direction.attribute_value(),
            default
        );
        flow_refs(&mut out, &g.gateway_id);
        let _ = writeln!(out, "    </{}>", g.kind.element_name());
    }
    for u in &model.unsupported {
        let _ = writeln!(out, "    <{} id=\"{}\">", u.element, escape(u.node_id.as_str()));
        flow_refs(&mut out, &u.node_id);
        let _ = writeln!(out, "    </{}>", u.element);
    }
    for e in &model.end_events {
        let _ = writeln!(out, "    <endEvent id=\"{}\">", escape(e.as_str()));
        flow_refs(&mut out, e);
        out.push_str("    </endEvent>\n");
    }
    for f in &model.flows {
        let head = format!(
            "    <sequenceFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\"",
            escape(f.flow_id.as_str()),
            escape(f.source.as_str()),
            escape(f.target.as_str())
        );
        match &f.condition {
            Some(c) => {
                let _ = writeln!(out, "{head}>");
                let _ = writeln!(
                    out,
                    "      <conditionExpression xsi:type=\"tFormalExpression\">{} == {}</conditionExpression>",
                    escape(c.variable_id.as_str()),
                    c.expected
                );
                out.push_str("    </sequenceFlow>\n");
            }
            None => {
                let _ = writeln!(out, "{head}/>");
            }
        }
    }
    out.push_str("  </choreography>\n</definitions>\n");
    out
}

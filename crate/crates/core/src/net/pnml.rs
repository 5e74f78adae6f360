use std::fmt::Write as _;

use quick_xml::escape::escape;

use super::{InteractionNet, Label};

/// PNML (place/transition net type) export for inspection in external tools.
pub fn to_pnml(net: &InteractionNet) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n");
    let _ = writeln!(
        out,
        "  <net id=\"{}\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n    <page id=\"page0\">",
        escape(net.net_id.as_str())
    );
    for (i, p) in net.places.iter().enumerate() {
        let id = escape(p.as_str());
        let _ = write!(out, "      <place id=\"{id}\"><name><text>{id}</text></name>");
        if net.initial_marking.contains(i) {
            out.push_str("<initialMarking><text>1</text></initialMarking>");
        }
        out.push_str("</place>\n");
    }
    for t in &net.transitions {
        let text = match &t.label {
            Label::Task { task_id, initiator } => format!("{task_id} [{initiator}]"),
            Label::Decision { variable_id, expected } => format!("{variable_id} == {expected}"),
            Label::Silent => "tau".to_string(),
        };
        let _ = writeln!(
            out,
            "      <transition id=\"{}\"><name><text>{}</text></name></transition>",
            escape(t.transition_id.as_str()),
            escape(text.as_str())
        );
    }
    for (k, (from, to)) in net.arcs().iter().enumerate() {
        let _ = writeln!(
            out,
            "      <arc id=\"a{k}\" source=\"{}\" target=\"{}\"/>",
            escape(from.as_str()),
            escape(to.as_str())
        );
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out
}

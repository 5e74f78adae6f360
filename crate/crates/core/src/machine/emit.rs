use std::fmt::Write as _;

use super::{MachineError, ProcessMachine, TransitionKind};

pub const CONTRACT_NAME: &str = "ChoreographyProcess";

fn masked_fire(var: &str, consume: &str, produce: &str) -> String {
    format!("{var} = ({var} & ~uint256({consume})) | {produce};")
}

/// Renders the machine as a Solidity contract.
///
/// Interface: `executeTask(uint256)`, callable only by the task's
/// initiator; `setData(uint256, bool)`; `tokenState()` returning the
/// marking; `isEnded()`.
pub fn emit_contract_source(machine: &ProcessMachine) -> Result<String, MachineError> {
    let enc = &machine.encoding;
    if enc.tasks.is_empty() {
        return Err(MachineError::EmitUnsupported("no tasks to expose".into()));
    }
    let has_decisions = machine
        .transitions_compiled
        .iter()
        .any(|t| t.kind == TransitionKind::Decision);

    let mut s = String::new();
    s.push_str("// SPDX-License-Identifier: UNLICENSED\n");
    s.push_str("pragma solidity ^0.8.20;\n\n");
    let _ = writeln!(s, "// Process `{}`.", machine.model_id.replace(['\n', '\r'], " "));
    s.push_str("// Marking bits:");
    for (i, p) in machine.place_bits.iter().enumerate() {
        let _ = write!(s, " {i}={p}");
    }
    s.push('\n');
    let _ = writeln!(s, "contract {CONTRACT_NAME} {{");
    let _ = writeln!(s, "    uint256 private constant END_MASK = {};", machine.end_mask);
    let _ = writeln!(s, "    uint256 private constant VARIABLE_COUNT = {};", enc.variables.len());
    s.push('\n');
    let _ = writeln!(s, "    uint256 private marking = {};", machine.initial_state);
    s.push_str("    mapping(uint256 => bool) private conditions;\n\n");

    // executeTask
    s.push_str("    function executeTask(uint256 taskIndex) external {\n");
    s.push_str("        uint256 m = _progress(marking);\n");
    for (index, task) in enc.tasks.iter().enumerate() {
        let candidates: Vec<_> = machine
            .transitions_compiled
            .iter()
            .filter(|t| t.task_guard.is_some_and(|g| g.task_index == index))
            .collect();
        let Some(first) = candidates.first() else {
            return Err(MachineError::EmitUnsupported(format!("task {} has no transition", task.task_id)));
        };
        let initiator = first.task_guard.expect("task guard").initiator;
        if candidates.iter().any(|t| t.task_guard.expect("task guard").initiator != initiator) {
            return Err(MachineError::EmitUnsupported(format!("task {} has several initiators", task.task_id)));
        }
        let keyword = if index == 0 { "if" } else { "} else if" };
        let _ = writeln!(s, "        {keyword} (taskIndex == {index}) {{");
        let _ = writeln!(s, "            // {}", task.task_id.replace(['\n', '\r'], " "));
        let _ = writeln!(s, "            require(msg.sender == {initiator}, \"sender is not the initiator\");");
        for (k, t) in candidates.iter().enumerate() {
            let keyword = if k == 0 { "if" } else { "} else if" };
            let _ = writeln!(s, "            {keyword} ((m & {c}) == {c}) {{", c = t.consume_mask);
            let _ = writeln!(s, "                {}", masked_fire("m", &t.consume_mask.to_hex(), &t.produce_mask.to_hex()));
        }
        s.push_str("            } else {\n                revert(\"task not enabled\");\n            }\n");
    }
    s.push_str("        } else {\n            revert(\"unknown task\");\n        }\n");
    s.push_str("        marking = _progress(m);\n    }\n\n");

    // setData
    s.push_str("    function setData(uint256 variableIndex, bool value) external {\n");
    s.push_str("        require(variableIndex < VARIABLE_COUNT, \"unknown variable\");\n");
    s.push_str("        conditions[variableIndex] = value;\n    }\n\n");

    s.push_str("    function tokenState() external view returns (uint256) {\n        return marking;\n    }\n\n");
    s.push_str("    function isEnded() external view returns (bool) {\n        return (marking & END_MASK) == END_MASK;\n    }\n\n");

    // autonomous progression: matching decisions first, then silent steps
    let mutability = if has_decisions { "view" } else { "pure" };
    let _ = writeln!(s, "    function _progress(uint256 m) private {mutability} returns (uint256) {{");
    s.push_str("        while (true) {\n");
    for t in machine.transitions_compiled.iter().filter(|t| t.kind != TransitionKind::Task) {
        let c = t.consume_mask;
        match t.decision_guard {
            Some(g) => {
                let cond = if g.expected {
                    format!("conditions[{}]", g.variable_index)
                } else {
                    format!("!conditions[{}]", g.variable_index)
                };
                let _ = writeln!(s, "            if ((m & {c}) == {c} && {cond}) {{");
            }
            None => {
                let _ = writeln!(s, "            if ((m & {c}) == {c}) {{");
            }
        }
        let _ = writeln!(s, "                {}", masked_fire("m", &c.to_hex(), &t.produce_mask.to_hex()));
        s.push_str("                continue;\n            }\n");
    }
    s.push_str("            break;\n        }\n        return m;\n    }\n}\n");
    Ok(s)
}

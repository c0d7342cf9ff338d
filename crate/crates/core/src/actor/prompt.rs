use std::fmt::Write;

use crate::env::{Instruction, Registry, Step};

/// Builds the actor prompt: tool list, action grammar, instruction, and the
/// interleaved history. Deterministic in its inputs.
pub fn render_prompt(instruction: &Instruction, history: &[Step], registry: &Registry) -> String {
    let mut out = String::new();
    out.push_str("You complete tasks by calling tools, one action per turn.\n\nTools:\n");
    for spec in registry.specs() {
        let params: Vec<String> = spec
            .params
            .iter()
            .map(|p| {
                let req = if p.required { "required" } else { "optional" };
                format!("{}: {} ({req}) - {}", p.name, p.ty.as_str(), p.description)
            })
            .collect();
        let _ = writeln!(out, "- {}: {}", spec.name, spec.description);
        for p in params {
            let _ = writeln!(out, "    {p}");
        }
    }
    out.push_str(
        "\nReply with exactly one line in one of these forms:\n\
         CALL <tool> <JSON object of arguments>\n\
         FINISH <final answer>\n\n",
    );
    let _ = writeln!(out, "Instruction: {}", instruction.text);
    out.push_str("\nHistory:\n");
    if history.is_empty() {
        out.push_str("(none)\n");
    }
    for step in history {
        let _ = writeln!(out, "Action: {}", step.action.render());
        let _ = writeln!(
            out,
            "Observation [{}]: {}",
            step.observation.status.as_str(),
            step.observation.payload
        );
    }
    out.push_str("\nNext action:");
    out
}

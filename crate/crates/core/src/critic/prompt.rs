use std::fmt::Write;

use crate::env::Instruction;
use crate::store::Trajectory;

const RUBRIC: &str = "\
Judge whether the agent fulfilled the instruction. Check each stage:
1. API selection: did it call the right tools?
2. API calling parameters: were the arguments correct and complete?
3. Exception handling: did it recover sensibly from error observations?
4. Conclusion: is the final answer correct and supported by the observations?
";

/// Deterministic judge prompt: instruction, every step verbatim, rubric,
/// and the required output format.
pub fn render_critic_prompt(instruction: &Instruction, trajectory: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str("You are reviewing an agent's attempt at a task that uses tools.\n\n");
    let _ = writeln!(out, "Instruction: {}\n", instruction.text);
    out.push_str("Trajectory:\n");
    for (i, step) in trajectory.steps.iter().enumerate() {
        let _ = writeln!(out, "[Step {}]", i + 1);
        let _ = writeln!(out, "Action: {}", step.action.render());
        let _ = writeln!(
            out,
            "Observation [{}]: {}",
            step.observation.status.as_str(),
            step.observation.payload
        );
    }
    if trajectory.steps.is_empty() {
        out.push_str("(no steps)\n");
    }
    out.push('\n');
    out.push_str(RUBRIC);
    out.push_str(
        "\nRespond with a line `SCORE: <integer 0-10>` (10 = fully correct), \
         followed by a short rationale.\n",
    );
    out
}

/// The first `SCORE: n` with `0 <= n <= 10`; the text after it becomes the
/// rationale.
pub fn parse_score(reply: &str) -> Option<(u8, String)> {
    let at = reply.find("SCORE:")?;
    let rest = reply[at + "SCORE:".len()..].trim_start();
    let digits = rest.len() - rest.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let score: u8 = rest[..digits].parse().ok()?;
    if score > 10 {
        return None;
    }
    let rationale = rest[digits..].trim().to_string();
    Some((score, rationale))
}

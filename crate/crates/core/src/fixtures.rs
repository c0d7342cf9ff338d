//! The desk-scale bundle compiled into the crate. The same files live under
//! `crates/core/fixtures/` for use with `--config` paths.

use std::path::Path;

use crate::dataset::GeneralChat;
use crate::env::{parse_instructions, Instruction};

pub const REGISTRY_JSON: &str = include_str!("../fixtures/registry.json");
pub const INSTRUCTIONS_JSON: &str = include_str!("../fixtures/instructions.json");
pub const GENERAL_CHAT_JSONL: &str = include_str!("../fixtures/general_chat.jsonl");
pub const CRITIC_TABLE1_JSONL: &str = include_str!("../fixtures/critic_table1_labels.jsonl");
pub const DESK_CONFIG_JSON: &str = include_str!("../fixtures/desk.json");

pub fn instructions() -> Vec<Instruction> {
    parse_instructions(Path::new("<builtin instructions>"), INSTRUCTIONS_JSON)
        .expect("builtin instructions are valid")
}

pub fn general_pool() -> Vec<GeneralChat> {
    crate::jsonl::parse_lines(GENERAL_CHAT_JSONL).expect("builtin general chat pool is valid")
}

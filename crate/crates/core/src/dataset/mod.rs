//! SFT dataset construction with action-only loss masks.
//!
//! A trajectory example serializes as
//!
//! ```text
//! Instruction: <text>\n
//! <action 1>                              <- masked
//! \nObservation [<status>]: <payload>\n
//! <action 2>                              <- masked
//! ...
//! <final action>                          <- masked
//! ```
//!
//! Mask spans are half-open offsets in Unicode scalar values (characters),
//! not bytes, so that consumers indexing strings by character agree with the
//! export bit for bit. The observation after the final action is omitted.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::env::{Instruction, Observation};
use crate::jsonl::{self, JsonlError};
use crate::rng::{stream_rng, DOMAIN_MIX};
use crate::store::{Trajectory, TrajectoryStatus};

pub const INSTRUCTION_PREFIX: &str = "Instruction: ";
pub const DATASET_FILE: &str = "dataset.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SftSource {
    Trajectory,
    GeneralChat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExample {
    pub source: SftSource,
    pub text: String,
    pub mask_spans: Vec<[usize; 2]>,
    pub origin_hash: String,
}

/// One piece of an example's text, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment<'a> {
    pub text: &'a str,
    pub masked: bool,
}

impl SftExample {
    /// Spans must be sorted, non-overlapping, non-empty and inside the text.
    pub fn validate(&self) -> Result<(), String> {
        let len = self.text.chars().count();
        let mut prev_end = 0;
        for (i, [start, end]) in self.mask_spans.iter().copied().enumerate() {
            if start >= end {
                return Err(format!("span {i} [{start}, {end}) is empty or reversed"));
            }
            if i > 0 && start < prev_end {
                return Err(format!("span {i} overlaps or precedes span {}", i - 1));
            }
            if end > len {
                return Err(format!("span {i} ends at {end} beyond text length {len}"));
            }
            prev_end = end;
        }
        Ok(())
    }

    /// Text split at span boundaries. Assumes a valid example.
    pub fn segments(&self) -> Vec<Segment<'_>> {
        let byte_at = char_byte_offsets(&self.text);
        let mut out = Vec::new();
        let mut cursor = 0;
        for [start, end] in self.mask_spans.iter().copied() {
            if start > cursor {
                out.push(Segment {
                    text: &self.text[byte_at[cursor]..byte_at[start]],
                    masked: false,
                });
            }
            out.push(Segment {
                text: &self.text[byte_at[start]..byte_at[end]],
                masked: true,
            });
            cursor = end;
        }
        let total = byte_at.len() - 1;
        if cursor < total {
            out.push(Segment {
                text: &self.text[byte_at[cursor]..],
                masked: false,
            });
        }
        out
    }

    /// Concatenation of every masked span.
    pub fn masked_text(&self) -> String {
        self.segments()
            .into_iter()
            .filter(|s| s.masked)
            .map(|s| s.text)
            .collect()
    }
}

/// Byte offset of each character, plus the text length at the end.
fn char_byte_offsets(text: &str) -> Vec<usize> {
    text.char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .collect()
}

pub fn render_instruction(text: &str) -> String {
    format!("{INSTRUCTION_PREFIX}{text}\n")
}

pub fn render_observation(obs: &Observation) -> String {
    format!("\nObservation [{}]: {}\n", obs.status.as_str(), obs.payload)
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("trajectory {hash} is {status:?}; only finished trajectories are trainable")]
    NotTrainable {
        hash: String,
        status: TrajectoryStatus,
    },
    #[error("trajectory {hash} belongs to instruction {found}, not {expected}")]
    InstructionMismatch {
        hash: String,
        found: String,
        expected: String,
    },
    #[error("general pool has {available} examples but {needed} are needed for a 1:1 mix")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("origin {0} appears twice in one dataset")]
    DuplicateOrigin(String),
    #[error("example {index}: {message}")]
    InvalidExample { index: usize, message: String },
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
}

/// Serializes a finished trajectory with one mask span per action.
pub fn build_sft_example(
    t: &Trajectory,
    instruction: &Instruction,
) -> Result<SftExample, DatasetError> {
    if t.status != TrajectoryStatus::Finished {
        return Err(DatasetError::NotTrainable {
            hash: t.traj_hash.to_string(),
            status: t.status,
        });
    }
    if t.instruction_id != instruction.id {
        return Err(DatasetError::InstructionMismatch {
            hash: t.traj_hash.to_string(),
            found: t.instruction_id.clone(),
            expected: instruction.id.clone(),
        });
    }
    let mut text = render_instruction(&instruction.text);
    let mut chars = text.chars().count();
    let mut spans = Vec::with_capacity(t.steps.len());
    let last = t.steps.len().saturating_sub(1);
    for (m, step) in t.steps.iter().enumerate() {
        let action = step.action.render();
        let n = action.chars().count();
        if n > 0 {
            spans.push([chars, chars + n]);
        }
        text.push_str(&action);
        chars += n;
        if m < last {
            let obs = render_observation(&step.observation);
            chars += obs.chars().count();
            text.push_str(&obs);
        }
    }
    Ok(SftExample {
        source: SftSource::Trajectory,
        text,
        mask_spans: spans,
        origin_hash: t.traj_hash.to_string(),
    })
}

/// A single-turn general-domain chat record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralChat {
    pub id: String,
    pub prompt: String,
    pub reply: String,
}

const USER_PREFIX: &str = "User: ";
const ASSISTANT_PREFIX: &str = "\nAssistant: ";

/// `User: <prompt>\nAssistant: <reply>` with the reply masked.
pub fn general_example(chat: &GeneralChat) -> SftExample {
    let head = format!("{USER_PREFIX}{}{ASSISTANT_PREFIX}", chat.prompt);
    let start = head.chars().count();
    let end = start + chat.reply.chars().count();
    SftExample {
        source: SftSource::GeneralChat,
        text: format!("{head}{}", chat.reply),
        mask_spans: if end > start { vec![[start, end]] } else { vec![] },
        origin_hash: chat.id.clone(),
    }
}

pub fn load_general_pool(path: &Path) -> Result<Vec<GeneralChat>, JsonlError> {
    jsonl::read(path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedDataset {
    pub examples: Vec<SftExample>,
    pub iteration: usize,
}

impl MixedDataset {
    pub fn empty(iteration: usize) -> Self {
        MixedDataset {
            examples: Vec::new(),
            iteration,
        }
    }

    /// `(n_trajectory, n_general)`.
    pub fn counts(&self) -> (usize, usize) {
        let n_traj = self
            .examples
            .iter()
            .filter(|e| e.source == SftSource::Trajectory)
            .count();
        (n_traj, self.examples.len() - n_traj)
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }
}

/// Pairs every trajectory example with a distinct general example drawn
/// without replacement, then shuffles the union. Both draws are seeded.
pub fn mix(
    traj_examples: Vec<SftExample>,
    general_pool: &[GeneralChat],
    seed: u64,
    iteration: usize,
) -> Result<MixedDataset, DatasetError> {
    let needed = traj_examples.len();
    if needed == 0 {
        return Ok(MixedDataset::empty(iteration));
    }
    if general_pool.len() < needed {
        return Err(DatasetError::PoolTooSmall {
            needed,
            available: general_pool.len(),
        });
    }
    let mut origins = HashSet::new();
    for e in &traj_examples {
        if !origins.insert(e.origin_hash.clone()) {
            return Err(DatasetError::DuplicateOrigin(e.origin_hash.clone()));
        }
    }
    let mut rng = stream_rng(seed, DOMAIN_MIX.wrapping_add(iteration as u64), 0);
    let mut picked = rand::seq::index::sample(&mut rng, general_pool.len(), needed).into_vec();
    picked.sort_unstable();
    let mut examples = traj_examples;
    for i in picked {
        let g = general_example(&general_pool[i]);
        if !origins.insert(g.origin_hash.clone()) {
            return Err(DatasetError::DuplicateOrigin(g.origin_hash));
        }
        examples.push(g);
    }
    examples.shuffle(&mut rng);
    Ok(MixedDataset {
        examples,
        iteration,
    })
}

#[derive(Serialize, Deserialize)]
struct SftRecord {
    source: SftSource,
    text: String,
    mask_spans: Vec<[usize; 2]>,
    origin_hash: String,
    iteration: usize,
}

/// JSONL, one example per line; spans are validated before anything is
/// written.
pub fn export(ds: &MixedDataset, path: &Path) -> Result<PathBuf, DatasetError> {
    for (index, e) in ds.examples.iter().enumerate() {
        e.validate()
            .map_err(|message| DatasetError::InvalidExample { index, message })?;
    }
    let records: Vec<SftRecord> = ds
        .examples
        .iter()
        .map(|e| SftRecord {
            source: e.source,
            text: e.text.clone(),
            mask_spans: e.mask_spans.clone(),
            origin_hash: e.origin_hash.clone(),
            iteration: ds.iteration,
        })
        .collect();
    jsonl::write(path, &records)?;
    Ok(path.to_path_buf())
}

/// Reads an export. An empty file yields an empty dataset for
/// `default_iteration`.
pub fn import(path: &Path, default_iteration: usize) -> Result<MixedDataset, DatasetError> {
    let records: Vec<SftRecord> = jsonl::read(path)?;
    let iteration = records.first().map_or(default_iteration, |r| r.iteration);
    let examples: Vec<SftExample> = records
        .into_iter()
        .map(|r| SftExample {
            source: r.source,
            text: r.text,
            mask_spans: r.mask_spans,
            origin_hash: r.origin_hash,
        })
        .collect();
    for (index, e) in examples.iter().enumerate() {
        e.validate()
            .map_err(|message| DatasetError::InvalidExample { index, message })?;
    }
    Ok(MixedDataset {
        examples,
        iteration,
    })
}

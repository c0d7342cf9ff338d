//! Critic-guided iterative self-evolution for tool-using agents.
//!
//! The crate wires a small, deterministic multi-API environment to an actor,
//! a trajectory critic, top-p% selection with a cross-iteration exclusion
//! ledger, an SFT dataset builder with action-only loss masks, and a trainable
//! tabular-softmax policy. [`evolve::run_evolution`] repeats
//! sample → score → select → build → train → evaluate for a configured number
//! of iterations and records every artifact under a run directory.
//!
//! Everything runs hermetically (oracle critic, tabular or scripted actor) or
//! against any chat-completions endpoint for the actor and critic.

pub mod actor;
pub mod chat;
pub mod cli;
pub mod config;
pub mod critic;
pub mod dataset;
pub mod env;
pub mod evolve;
pub mod fixtures;
pub mod jsonl;
pub mod rng;
pub mod selection;
pub mod store;
pub mod trainer;

//! The guide under `book/` compiled as doc-tests, one module per chapter,
//! so every listing in it keeps running against the current crate.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/environment.md")]
pub mod environment {}
#[doc = include_str!("../../../book/src/grammar.md")]
pub mod grammar {}
#[doc = include_str!("../../../book/src/critic.md")]
pub mod critic {}
#[doc = include_str!("../../../book/src/selection.md")]
pub mod selection {}
#[doc = include_str!("../../../book/src/dataset.md")]
pub mod dataset {}
#[doc = include_str!("../../../book/src/trainer.md")]
pub mod trainer {}
#[doc = include_str!("../../../book/src/running.md")]
pub mod running {}

//! Workbench for interpreting *a fortiori* ("let alone") arguments with a
//! staged, prompt-driven language-model pipeline.
//!
//! The crate is organised by stage:
//!
//! - [`corpus`]: parse, validate and sample the annotated corpus.
//! - [`prompt_kit`]: assemble the modular prompts and enforce the window budget.
//! - [`backend`]: generation and embedding contracts, structured-output parsing,
//!   response cache, run store and the deterministic mock providers.
//! - [`pipeline`]: interpret one sentence or a whole corpus.
//! - [`augment`]: generate new arguments and account for topic diversity.
//! - [`evaluate`]: every automatic metric plus human-judgment aggregation.
//! - [`annotation`]: campaign task queues and the append-only judgment store
//!   served by the HTTP annotation API.

pub mod annotation;
pub mod augment;
pub mod backend;
pub mod clock;
pub mod corpus;
pub mod digest;
pub mod evaluate;
pub mod pipeline;
pub mod prompt_kit;
pub mod taxonomy;

pub use taxonomy::{LogicCategory, SentenceType, Verdict};

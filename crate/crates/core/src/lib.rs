//! Causal graph extraction from natural-language text.
//!
//! The crate is organised around the stages of an extraction run:
//!
//! * [`graph`] holds the directed causal-graph model with cycle, transitive-arc
//!   and comparison analyses plus DOT / structured-file serialization.
//! * [`prompt`] renders the orientation and entity-extraction prompts and
//!   parses the tagged replies.
//! * [`gateway`] is a chat-completion client with retries, rate limiting,
//!   an on-disk cache and record/replay fixtures.
//! * [`pipeline`] wires the above into text → entities → pairwise queries →
//!   graph, and orients the undirected edges of a CPDAG.
//! * [`eval`] contains the SemEval-style orientation benchmark and the
//!   graph-vs-ground-truth comparison harness.

pub mod eval;
pub mod gateway;
pub mod graph;
pub mod pipeline;
pub mod prompt;
pub mod text;

mod parallel;

pub use gateway::{ChatExchange, Gateway, ProviderConfig, ReplayFixture};
pub use graph::{Arc, CausalGraph, Entity, EntityId, GraphKind};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineRun};
pub use prompt::{OrientationQuestion, ParsedVerdict, RenderedPrompt, Verdict};

//! Measures how much few-shot in-context-learning accuracy depends on the
//! *ordering* of demonstration examples versus their *selection*, and searches
//! for strong orderings using only a development set.
//!
//! The pipeline: load a task corpus ([`corpus`]), build class-balanced splits
//! and demonstration sets, put each set into a canonical default order and
//! permute it ([`prompting`]), obtain completions from a chat-completion
//! endpoint or a deterministic planted mock ([`gateway`]), grade them
//! ([`scoring`]), and reduce the resulting accuracy grids to grouped
//! standard-deviation statistics ([`sensitivity`]) or development-selected
//! orderings, budget sweeps, and cross-dataset transfer ([`ordersearch`]).
//! [`commands`] ties these together behind the experiment config file used by
//! the CLI.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod gateway;
pub mod ordersearch;
pub mod prompting;
pub mod scoring;
pub mod sensitivity;
pub mod util;

pub use corpus::{Corpus, CorpusError, Example, Split, TaskKind};
pub use gateway::{Gateway, GatewayError, PlantedMockConfig};
pub use prompting::{DemonstrationSet, Permutation, PromptTemplate, RenderedPrompt};
pub use scoring::{ScoreResult, Scorer, ScorerKind};
pub use sensitivity::{AccuracyMatrix, SensitivityReport, StdMode};

/// Version stamped into every report bundle's provenance header.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

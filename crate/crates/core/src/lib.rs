//! Core building blocks for gloss-augmented LLM translation experiments:
//! interlinear glossed text, corpus loading, prompt construction and metrics.

pub mod corpus;
pub mod igt;
pub mod metrics;
pub mod prompt;

pub use corpus::{Corpus, CorpusError, CorpusMeta, SplitSpec};
pub use igt::{GlossLine, IgtEntry, LangCode};
pub use prompt::{Direction, PromptMessages, PromptRequest, Strategy};

//! Two-phase method-name recommendation for Java.
//!
//! Phase one classifies a method into a prefix category (`get`, `set`, `is`,
//! `test` or other) with a linear bag-of-features classifier. Phase two names
//! prefixed methods with field-based heuristics and everything else with a
//! dual-LSTM subtoken generator.
//!
//! The crate also carries the ingestion front-end (a token-level Java method
//! extractor), the JSONL corpus format, the evaluation harness and a
//! synthetic corpus generator used by the test suites.

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod extractor;
pub mod generator;
pub mod heuristics;
pub mod pipeline;
pub mod synth;
pub mod tensor;
pub mod text;

pub use classifier::{ClassifierModel, PrefixCategory, TrainConfig};
pub use error::{Error, Result};
pub use eval::EvalReport;
pub use extractor::{JavaToken, MethodRecord, TokenKind};
pub use generator::{DecodeConfig, GeneratorConfig, GeneratorModel};
pub use heuristics::HeuristicOutcome;
pub use pipeline::{PipelineConfig, PipelineModel, Recommendation, Route};
pub use text::{FeatureBag, SubtokenSequence, Vocabulary};

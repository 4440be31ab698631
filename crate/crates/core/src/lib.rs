//! Online one-class procedural mistake detection.
//!
//! A recognized step stream is compared, step by step, with what an
//! anticipator expects next given only correct executions as context. A
//! step the anticipator did not expect is a mistake.

pub mod alphabet;
pub mod anticipation;
pub mod benchmark;
pub mod detection;
pub mod ingestion;
pub mod types;

pub use types::{ActionId, ActionVocabulary, MistakeType, Procedure, StepRecord};

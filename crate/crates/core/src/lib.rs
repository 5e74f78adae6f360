//! Core pipeline for benchmarking smart contracts generated from BPMN 2.0
//! choreographies.
//!
//! The crate is organised along the pipeline stages:
//!
//! - [`ingest`]: parse choreography XML, normalise it and collect model statistics.
//! - [`net`]: translate a choreography into an interaction net (a labelled
//!   Petri net) that serves as the conformance ground truth.
//! - [`sim`]: play out conforming traces, mutate them into non-conforming
//!   ones and build the task/participant encoding.
//! - [`machine`]: the rule-based reference generator. It compiles a net into a
//!   bitmask state machine and emits equivalent Solidity source.
//! - [`llm`]: prompt rendering, provider access with usage logging, and code
//!   extraction from model responses.
//! - [`bench`]: trace replay against contract handles, classification and
//!   precision/recall/F1 scoring.

pub mod bench;
pub mod ingest;
pub mod llm;
pub mod machine;
pub mod model;
pub mod net;
pub mod sim;

pub use model::ChoreographyModel;
pub use net::InteractionNet;

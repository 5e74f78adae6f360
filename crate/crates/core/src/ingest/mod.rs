//! Choreography ingestion: XML parsing, normalisation and model statistics.

mod parse;
mod preprocess;
mod stats;
mod write;
pub(crate) mod xml;

pub use parse::parse_choreography;
pub use preprocess::{preprocess, PreprocessReport};
pub use stats::{collect_stats, DirectionCounts, GatewayCounts, ModelStats};
pub use write::write_choreography;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("document contains no choreography element")]
    NoChoreography,
    #[error("<{element}> is missing required attribute `{attribute}`")]
    MissingRequiredAttribute { element: String, attribute: String },
    #[error("{from} references unknown id `{target}`")]
    DanglingReference { from: String, target: String },
}

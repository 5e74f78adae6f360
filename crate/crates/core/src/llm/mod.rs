//! Prompt rendering, provider access with usage logging, and contract
//! extraction from model output.

mod extract;
mod prompt;
mod provider;
mod usage;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::extract_contract;
pub use prompt::{render_prompt, ExamplePair, PromptTemplate};
pub use provider::{backoff_delay, request_generation, request_generation_from, ProviderConfig};
pub use usage::{read_usage_log, ProviderStatus, UsageLog, UsageLogEntry};

/// Reserved llm id routed to the reference generator instead of a provider.
pub const ORACLE_LLM_ID: &str = "oracle";

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("prompt template missing: {0}")]
    TemplateMissing(String),
    #[error("no contract source found in model output")]
    NoCodeFound,
    #[error("usage log: {0}")]
    UsageLog(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptVariant {
    #[serde(rename = "one-shot")]
    OneShot,
    #[serde(rename = "two-shot")]
    TwoShot,
}

impl PromptVariant {
    pub fn example_count(self) -> usize {
        match self {
            PromptVariant::OneShot => 1,
            PromptVariant::TwoShot => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptVariant::OneShot => "one-shot",
            PromptVariant::TwoShot => "two-shot",
        }
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-shot" => Ok(PromptVariant::OneShot),
            "two-shot" => Ok(PromptVariant::TwoShot),
            other => Err(format!("unknown prompt variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestCase {
    pub llm_id: String,
    pub prompt_variant: PromptVariant,
    pub model_id: String,
}

impl TestCase {
    pub fn is_oracle(&self) -> bool {
        self.llm_id == ORACLE_LLM_ID
    }
}

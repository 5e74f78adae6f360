use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{LlmError, TestCase};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "message", rename_all = "camelCase")]
pub enum ProviderStatus {
    Success,
    Timeout,
    Error(String),
}

/// One provider interaction, kept verbatim for auditing and replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UsageLogEntry {
    pub timestamp: DateTime<Utc>,
    pub test_case: TestCase,
    pub full_input: String,
    pub full_output: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub cost_usd: f64,
    pub provider_status: ProviderStatus,
    pub attempt: u32,
}

impl UsageLogEntry {
    pub fn is_success(&self) -> bool {
        self.provider_status == ProviderStatus::Success
    }

    pub fn tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Append-only JSONL usage log. Appends from several workers are
/// serialised through one writer.
pub struct UsageLog {
    writer: Mutex<File>,
}

impl UsageLog {
    pub fn open(path: &Path) -> Result<Self, LlmError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { writer: Mutex::new(file) })
    }

    pub fn append(&self, entry: &UsageLogEntry) -> Result<(), LlmError> {
        let mut line = serde_json::to_string(entry).map_err(|e| LlmError::UsageLog(e.to_string()))?;
        line.push('\n');
        let mut w = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        w.write_all(line.as_bytes())?;
        w.flush()?;
        Ok(())
    }
}

pub fn read_usage_log(path: &Path) -> Result<Vec<UsageLogEntry>, LlmError> {
    let reader = BufReader::new(File::open(path)?);
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| LlmError::UsageLog(format!("line {}: {e}", i + 1)))?;
        entries.push(entry);
    }
    Ok(entries)
}

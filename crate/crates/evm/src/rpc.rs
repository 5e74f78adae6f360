use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde_json::{json, Value};

use crate::EvmError;

/// Minimal Ethereum JSON-RPC client over HTTP.
pub struct RpcClient {
    agent: ureq::Agent,
    url: String,
    next_id: AtomicU64,
}

impl RpcClient {
    pub fn new(url: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self { agent, url: url.into(), next_id: AtomicU64::new(1) }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn request(&self, method: &str, params: Value) -> Result<Value, EvmError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let body = json!({ "jsonrpc": "2.0", "id": id, "method": method, "params": params });
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .map_err(|e| EvmError::Rpc(format!("{method}: {e}")))?;
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| EvmError::Rpc(format!("{method}: {e}")))?;
        if let Some(err) = v.get("error") {
            return Err(EvmError::Rpc(format!("{method}: {err}")));
        }
        Ok(v.get("result").cloned().unwrap_or(Value::Null))
    }
}

pub(crate) fn hex_data(bytes: &[u8]) -> String {
    format!("0x{}", hex::encode(bytes))
}

pub(crate) fn parse_data(v: &Value) -> Result<Vec<u8>, EvmError> {
    let s = v.as_str().ok_or_else(|| EvmError::Rpc(format!("expected hex data, got {v}")))?;
    hex::decode(s.trim_start_matches("0x")).map_err(|e| EvmError::Rpc(e.to_string()))
}

pub(crate) fn parse_quantity(v: &Value) -> Result<u64, EvmError> {
    let s = v.as_str().ok_or_else(|| EvmError::Rpc(format!("expected quantity, got {v}")))?;
    u64::from_str_radix(s.trim_start_matches("0x"), 16).map_err(|e| EvmError::Rpc(e.to_string()))
}

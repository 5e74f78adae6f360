use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use chorbench_core::machine::CONTRACT_NAME;
use serde_json::{json, Value};

use crate::{EvmError, Tooling};

/// EVM target matching the local node's hardfork.
pub const EVM_VERSION: &str = "shanghai";

#[derive(Debug, Clone)]
pub struct CompiledContract {
    pub name: String,
    pub bytecode: Vec<u8>,
    pub abi: Value,
    pub warnings: Vec<String>,
}

struct Server {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Server {
    fn round_trip(&mut self, line: &str) -> Result<String, EvmError> {
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        let mut out = String::new();
        if self.stdout.read_line(&mut out)? == 0 {
            return Err(EvmError::Tooling("solc server closed its output".into()));
        }
        Ok(out)
    }
}

/// A long-lived solcjs process speaking standard-json, one request per line.
pub struct Solc {
    server: Mutex<Server>,
    version: String,
}

impl Solc {
    pub fn spawn(tooling: &Tooling) -> Result<Self, EvmError> {
        tooling.check()?;
        let mut child = Command::new(&tooling.node)
            .arg(tooling.solc_server())
            .current_dir(&tooling.tools_dir)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| EvmError::Tooling(format!("cannot start solc: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut first = String::new();
        stdout.read_line(&mut first)?;
        let hello: Value = serde_json::from_str(&first).map_err(|e| EvmError::Tooling(format!("solc handshake: {e}")))?;
        let version = hello["version"].as_str().unwrap_or_default().to_string();
        Ok(Self { server: Mutex::new(Server { child, stdin, stdout }), version })
    }

    /// Full compiler version string, e.g. `0.8.26+commit.8a97fa7a...`.
    pub fn version(&self) -> &str {
        &self.version
    }

    /// Compiles a single-file source. The deployable contract is the one
    /// named `ChoreographyProcess`, or the only contract with bytecode.
    pub fn compile(&self, source: &str) -> Result<CompiledContract, EvmError> {
        let input = json!({
            "language": "Solidity",
            "sources": { "Contract.sol": { "content": source } },
            "settings": {
                "evmVersion": EVM_VERSION,
                "optimizer": { "enabled": false },
                "outputSelection": { "*": { "*": ["abi", "evm.bytecode.object"] } }
            }
        });
        let raw = {
            let mut server = self.server.lock().unwrap_or_else(|p| p.into_inner());
            server.round_trip(&input.to_string())?
        };
        let out: Value = serde_json::from_str(&raw).map_err(|e| EvmError::Tooling(format!("solc output: {e}")))?;

        let mut errors = Vec::new();
        let mut warnings = Vec::new();
        for e in out["errors"].as_array().into_iter().flatten() {
            let msg = e["formattedMessage"].as_str().or(e["message"].as_str()).unwrap_or("").trim().to_string();
            match e["severity"].as_str() {
                Some("error") => errors.push(msg),
                Some("warning") => warnings.push(msg),
                _ => {}
            }
        }
        if !errors.is_empty() {
            return Err(EvmError::Compile(errors.join("\n")));
        }

        let mut deployable = Vec::new();
        for (name, c) in out["contracts"]["Contract.sol"].as_object().into_iter().flatten() {
            let code = c["evm"]["bytecode"]["object"].as_str().unwrap_or("");
            if !code.is_empty() {
                deployable.push((name.clone(), code.to_string(), c["abi"].clone()));
            }
        }
        let pick = match deployable.iter().position(|(n, _, _)| n == CONTRACT_NAME) {
            Some(i) => i,
            None if deployable.len() == 1 => 0,
            None if deployable.is_empty() => return Err(EvmError::Compile("no deployable contract".into())),
            None => return Err(EvmError::Compile(format!("{} deployable contracts and none named {CONTRACT_NAME}", deployable.len()))),
        };
        let (name, code, abi) = deployable.swap_remove(pick);
        let bytecode = hex::decode(&code).map_err(|e| EvmError::Compile(format!("bytecode: {e}")))?;
        Ok(CompiledContract { name, bytecode, abi, warnings })
    }
}

impl Drop for Solc {
    fn drop(&mut self) {
        let server = self.server.get_mut().unwrap_or_else(|p| p.into_inner());
        let _ = server.child.kill();
        let _ = server.child.wait();
    }
}

use std::collections::HashSet;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chorbench_core::bench::{BenchError, CallReceipt, ContractHandle};
use chorbench_core::machine::Call;
use chorbench_core::sim::{Address, Encoding};
use serde_json::{json, Value};
use tracing::debug;

use crate::abi::Abi;
use crate::rpc::{hex_data, parse_data, parse_quantity};
use crate::{CompiledContract, EvmError, RpcClient, Solc};

const TX_GAS: &str = "0x7A1200";
const ACCOUNT_BALANCE: &str = "0x3635C9ADC5DEA00000";
const ACCOUNT_PASSPHRASE: &str = "chorbench";

impl From<EvmError> for BenchError {
    fn from(e: EvmError) -> Self {
        match e {
            EvmError::Compile(m) => BenchError::Compile(m),
            EvmError::Deploy(m) => BenchError::Deploy(m),
            other => BenchError::BackendUnavailable(other.to_string()),
        }
    }
}

/// Compiles with solcjs and deploys to a node that manages accounts
/// (ganache's `evm_addAccount` / `personal_unlockAccount`). Participant
/// addresses from the encoding are registered and funded on first use.
pub struct DeployedBackend {
    rpc: RpcClient,
    solc: Arc<Solc>,
    deployer: String,
    known: Mutex<HashSet<Address>>,
    // nonces are assigned by the node; concurrent sends from one account race
    send_lock: Mutex<()>,
}

struct Receipt {
    ok: bool,
    gas: u64,
    contract: Option<String>,
}

impl DeployedBackend {
    pub fn connect(url: &str, solc: Arc<Solc>) -> Result<Self, EvmError> {
        let rpc = RpcClient::new(url);
        let accounts = rpc.request("eth_accounts", json!([]))?;
        let deployer = accounts
            .get(0)
            .and_then(Value::as_str)
            .ok_or_else(|| EvmError::Rpc("node exposes no unlocked account".into()))?
            .to_string();
        Ok(Self { rpc, solc, deployer, known: Mutex::new(HashSet::new()), send_lock: Mutex::new(()) })
    }

    pub fn compiler_version(&self) -> &str {
        self.solc.version()
    }

    pub fn compile(&self, source: &str) -> Result<CompiledContract, EvmError> {
        self.solc.compile(source)
    }

    fn ensure_account(&self, address: &Address) -> Result<(), EvmError> {
        let mut known = self.known.lock().unwrap_or_else(|p| p.into_inner());
        if known.contains(address) {
            return Ok(());
        }
        let a = address.lower_hex();
        self.rpc.request("evm_addAccount", json!([a, ACCOUNT_PASSPHRASE]))?;
        self.rpc.request("personal_unlockAccount", json!([a, ACCOUNT_PASSPHRASE, 0]))?;
        self.rpc.request("evm_setAccountBalance", json!([a, ACCOUNT_BALANCE]))?;
        known.insert(*address);
        Ok(())
    }

    fn send(&self, from: &str, to: Option<&str>, data: &[u8]) -> Result<Receipt, EvmError> {
        let mut tx = json!({ "from": from, "data": hex_data(data), "gas": TX_GAS });
        if let Some(to) = to {
            tx["to"] = json!(to);
        }
        let _guard = self.send_lock.lock().unwrap_or_else(|p| p.into_inner());
        let hash = self.rpc.request("eth_sendTransaction", json!([tx]))?;
        let mut receipt = Value::Null;
        for _ in 0..200 {
            receipt = self.rpc.request("eth_getTransactionReceipt", json!([hash]))?;
            if !receipt.is_null() {
                break;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        if receipt.is_null() {
            return Err(EvmError::Rpc(format!("no receipt for {hash}")));
        }
        Ok(Receipt {
            ok: parse_quantity(&receipt["status"])? == 1,
            gas: parse_quantity(&receipt["gasUsed"])?,
            contract: receipt["contractAddress"].as_str().map(str::to_string),
        })
    }

    fn eth_call(&self, to: &str, data: &[u8]) -> Result<Vec<u8>, EvmError> {
        match self.rpc.request("eth_call", json!([{ "to": to, "data": hex_data(data) }, "latest"])) {
            Ok(v) => parse_data(&v),
            // a reverting view (or a missing function) reads as empty
            Err(EvmError::Rpc(m)) if m.contains("revert") => Ok(Vec::new()),
            Err(e) => Err(e),
        }
    }

    fn create(&self, bytecode: &[u8]) -> Result<String, EvmError> {
        let r = self.send(&self.deployer, None, bytecode)?;
        match (r.ok, r.contract) {
            (true, Some(addr)) => Ok(addr),
            _ => Err(EvmError::Deploy("deployment transaction failed".into())),
        }
    }

    pub fn deploy(&self, compiled: &CompiledContract, enc: &Encoding) -> Result<DeployedHandle<'_>, EvmError> {
        for p in &enc.participants {
            self.ensure_account(&p.address)?;
        }
        let address = self.create(&compiled.bytecode)?;
        let state = self.eth_call(&address, &Abi::token_state())?;
        debug!(%address, "contract deployed");
        Ok(DeployedHandle { backend: self, bytecode: compiled.bytecode.clone(), address, state })
    }
}

/// One deployed instance. `reset` deploys a fresh copy.
pub struct DeployedHandle<'a> {
    backend: &'a DeployedBackend,
    bytecode: Vec<u8>,
    address: String,
    state: Vec<u8>,
}

impl DeployedHandle<'_> {
    pub fn address(&self) -> &str {
        &self.address
    }

    fn call_inner(&mut self, call: &Call) -> Result<CallReceipt, EvmError> {
        match *call {
            Call::ExecuteTask { task_index, sender } => {
                self.backend.ensure_account(&sender)?;
                let from = sender.lower_hex();
                let r = self.backend.send(&from, Some(&self.address), &Abi::execute_task(task_index))?;
                if !r.ok {
                    return Ok(CallReceipt { accepted: false, gas: r.gas });
                }
                let state = self.backend.eth_call(&self.address, &Abi::token_state())?;
                let changed = state != self.state;
                self.state = state;
                Ok(CallReceipt { accepted: changed, gas: r.gas })
            }
            Call::SetData { variable_index, value } => {
                let from = self.backend.deployer.clone();
                let r = self.backend.send(&from, Some(&self.address), &Abi::set_data(variable_index, value))?;
                Ok(CallReceipt { accepted: r.ok, gas: r.gas })
            }
        }
    }
}

impl ContractHandle for DeployedHandle<'_> {
    fn call(&mut self, call: &Call) -> Result<CallReceipt, BenchError> {
        Ok(self.call_inner(call)?)
    }

    fn is_ended(&mut self) -> Result<bool, BenchError> {
        let ret = self.backend.eth_call(&self.address, &Abi::is_ended())?;
        Ok(Abi::decode_bool(&ret).unwrap_or(false))
    }

    fn reset(&mut self) -> Result<(), BenchError> {
        self.address = self.backend.create(&self.bytecode)?;
        self.state = self.backend.eth_call(&self.address, &Abi::token_state())?;
        Ok(())
    }
}

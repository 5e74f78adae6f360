//! Deployed-contract backend: compiles Solidity with a pinned solcjs,
//! deploys to an EVM node over JSON-RPC and replays traces as
//! transactions.

mod abi;
mod deployed;
mod node;
mod rpc;
mod solc;

use std::path::PathBuf;

use thiserror::Error;

pub use abi::{selector, Abi};
pub use deployed::{DeployedBackend, DeployedHandle};
pub use node::LocalNode;
pub use rpc::RpcClient;
pub use solc::{CompiledContract, Solc};

#[derive(Debug, Error)]
pub enum EvmError {
    #[error("compile error: {0}")]
    Compile(String),
    #[error("deploy error: {0}")]
    Deploy(String),
    #[error("rpc error: {0}")]
    Rpc(String),
    #[error("tooling: {0}")]
    Tooling(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where the node-based tools live. `CHORBENCH_TOOLS_DIR` overrides the
/// in-repo `tools/` directory and `CHORBENCH_NODE` the `node` binary.
#[derive(Debug, Clone)]
pub struct Tooling {
    pub node: PathBuf,
    pub tools_dir: PathBuf,
}

impl Tooling {
    pub fn locate() -> Self {
        let tools_dir = std::env::var_os("CHORBENCH_TOOLS_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../tools")));
        let node = std::env::var_os("CHORBENCH_NODE").map(PathBuf::from).unwrap_or_else(|| "node".into());
        Self { node, tools_dir }
    }

    pub fn ganache_cli(&self) -> PathBuf {
        self.tools_dir.join("node_modules/ganache/dist/node/cli.js")
    }

    pub fn solc_server(&self) -> PathBuf {
        self.tools_dir.join("solc-server.js")
    }

    pub fn check(&self) -> Result<(), EvmError> {
        for p in [self.ganache_cli(), self.tools_dir.join("node_modules/solc/package.json"), self.solc_server()] {
            if !p.exists() {
                return Err(EvmError::Tooling(format!(
                    "{} not found; run `npm ci` in {}",
                    p.display(),
                    self.tools_dir.display()
                )));
            }
        }
        Ok(())
    }
}

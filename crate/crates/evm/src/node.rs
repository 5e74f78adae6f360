use std::net::TcpListener;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde_json::json;
use tracing::debug;

use crate::{EvmError, RpcClient, Tooling};

/// A throwaway ganache instance on a free local port. Killed on drop.
pub struct LocalNode {
    child: Child,
    url: String,
}

impl LocalNode {
    pub fn spawn(tooling: &Tooling) -> Result<Self, EvmError> {
        tooling.check()?;
        let port = TcpListener::bind("127.0.0.1:0")?.local_addr()?.port();
        let child = Command::new(&tooling.node)
            .arg(tooling.ganache_cli())
            .args(["--server.host", "127.0.0.1", "--server.port", &port.to_string()])
            .args(["--miner.instamine", "eager", "--chain.hardfork", "shanghai", "--logging.quiet"])
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| EvmError::Tooling(format!("cannot start ganache: {e}")))?;
        let mut node = Self { child, url: format!("http://127.0.0.1:{port}") };
        node.wait_ready(Duration::from_secs(60))?;
        Ok(node)
    }

    fn wait_ready(&mut self, limit: Duration) -> Result<(), EvmError> {
        let rpc = RpcClient::new(&self.url);
        let start = Instant::now();
        loop {
            if let Ok(v) = rpc.request("web3_clientVersion", json!([])) {
                debug!(url = %self.url, version = %v, "node ready");
                return Ok(());
            }
            if let Some(status) = self.child.try_wait()? {
                return Err(EvmError::Tooling(format!("ganache exited early: {status}")));
            }
            if start.elapsed() > limit {
                return Err(EvmError::Tooling("ganache did not become ready".into()));
            }
            std::thread::sleep(Duration::from_millis(100));
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Drop for LocalNode {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

use std::path::{Path, PathBuf};

use chorbench_core::llm::{PromptVariant, ProviderConfig};
use chorbench_core::net::GateConfig;
use chorbench_core::sim::SimulatorConfig;
use serde::{Deserialize, Serialize};

use crate::{io_err, RunError};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendConfig {
    /// Reference contracts only, executed on their state machine.
    #[default]
    InProcess,
    /// An already running EVM node with account management (ganache).
    External { endpoint: String },
    /// Spawns a private ganache instance for the run.
    LocalNode,
}

/// A benchmark run, read from TOML. Relative paths are resolved against the
/// directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_dir: PathBuf,
    /// 0 takes every generatable model.
    #[serde(default)]
    pub sample_size: usize,
    pub llm_ids: Vec<String>,
    #[serde(default = "default_variants")]
    pub prompt_variants: Vec<PromptVariant>,
    #[serde(default)]
    pub simulator: SimulatorConfig,
    #[serde(default)]
    pub provider: ProviderConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub gate: GateConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub resume_from_usage_log: Option<PathBuf>,
    /// Directory laid out like the bundled `prompts/`; bundled if absent.
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
}

fn default_variants() -> Vec<PromptVariant> {
    vec![PromptVariant::OneShot, PromptVariant::TwoShot]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| RunError::ConfigInvalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.dataset_dir);
        resolve(&mut cfg.output_dir);
        if let Some(p) = cfg.resume_from_usage_log.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.prompts_dir.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    /// Checks everything that does not need the dataset.
    pub fn validate(&self) -> Result<(), RunError> {
        let bad = |m: String| Err(RunError::ConfigInvalid(m));
        if self.llm_ids.is_empty() || self.llm_ids.iter().any(|l| l.trim().is_empty()) {
            return bad("llmIds must be a nonempty list of nonempty ids".into());
        }
        if self.prompt_variants.is_empty() {
            return bad("promptVariants must not be empty".into());
        }
        if !(self.provider.temperature >= 0.0) {
            return bad("provider.temperature must be >= 0".into());
        }
        if self.provider.concurrency_limit == 0 {
            return bad("provider.concurrencyLimit must be >= 1".into());
        }
        self.simulator.validate().map_err(|e| RunError::ConfigInvalid(e.to_string()))?;
        let needs_evm = self.llm_ids.iter().any(|l| l != chorbench_core::llm::ORACLE_LLM_ID);
        if needs_evm && self.backend == BackendConfig::InProcess {
            return bad("llm ids other than \"oracle\" need the external or local-node backend".into());
        }
        Ok(())
    }

    pub fn usage_log_path(&self) -> PathBuf {
        self.output_dir.join("usage_log.jsonl")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_defaults_and_resolves_paths() {
        let dir = std::env::temp_dir().join(format!("chorbench-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(
            &path,
            r#"
datasetDir = "data"
outputDir = "/abs/out"
llmIds = ["oracle"]
promptVariants = ["one-shot"]

[simulator]
maxConformingTraces = 10

[backend]
kind = "external"
endpoint = "http://127.0.0.1:8545"
"#,
        )
        .unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.dataset_dir, dir.join("data"));
        assert_eq!(cfg.output_dir, PathBuf::from("/abs/out"));
        assert_eq!(cfg.simulator.max_conforming_traces, 10);
        assert_eq!(cfg.simulator.num_non_conforming, 50);
        assert_eq!(cfg.provider.temperature, 0.0);
        assert_eq!(cfg.backend, BackendConfig::External { endpoint: "http://127.0.0.1:8545".into() });
        cfg.validate().unwrap();
        std::fs::write(&path, "datasetDir = 'd'\noutputDir = 'o'\nllmIds = ['oracle']\nbogus = 1\n").unwrap();
        assert!(matches!(RunConfig::load(&path), Err(RunError::ConfigInvalid(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn validation() {
        let cfg = RunConfig {
            dataset_dir: "d".into(),
            sample_size: 0,
            llm_ids: vec!["vendor/model".into()],
            prompt_variants: default_variants(),
            simulator: SimulatorConfig::default(),
            provider: ProviderConfig::default(),
            backend: BackendConfig::InProcess,
            gate: GateConfig::default(),
            output_dir: "o".into(),
            resume_from_usage_log: None,
            prompts_dir: None,
        };
        assert!(cfg.validate().is_err());
        let ok = RunConfig { backend: BackendConfig::LocalNode, ..cfg.clone() };
        ok.validate().unwrap();
        assert!(RunConfig { llm_ids: vec![], ..ok.clone() }.validate().is_err());
        assert!(RunConfig { prompt_variants: vec![], ..ok }.validate().is_err());
    }
}

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chorbench_core::bench::{aggregate, replay_logs, BenchmarkReport, CaseResult, ContractHandle, InProcessBackend, ReplayOutcome};
use chorbench_core::ingest::write_choreography;
use chorbench_core::llm::{
    extract_contract, read_usage_log, render_prompt, request_generation, request_generation_from, PromptTemplate, PromptVariant,
    TestCase, UsageLog, UsageLogEntry,
};
use chorbench_core::machine::{emit_contract_source, generate_machine, ProcessMachine};
use chorbench_core::sim::{build_encoding, mutate, playout, Encoding, EventLog};
use chorbench_evm::{DeployedBackend, EvmError, LocalNode, Solc, Tooling};
use chrono::Utc;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tracing::{info, warn};

use crate::dataset::{scan_dataset, DatasetEntry, GateRecord};
use crate::export::export_report;
use crate::{write_file, BackendConfig, RunConfig, RunError};

/// Everything a test case needs about its model.
struct Prepared {
    model_id: String,
    model_xml: String,
    encoding: Encoding,
    machine: ProcessMachine,
    conforming: EventLog,
    non_conforming: EventLog,
}

enum Executor {
    InProcess,
    // field order: the backend must go before the node it talks to
    Deployed { backend: DeployedBackend, _node: Option<LocalNode> },
}

impl Executor {
    fn start(cfg: &BackendConfig) -> Result<Self, RunError> {
        let be = |e: EvmError| RunError::Backend(e.to_string());
        match cfg {
            BackendConfig::InProcess => Ok(Executor::InProcess),
            BackendConfig::External { endpoint } => {
                let solc = Arc::new(Solc::spawn(&Tooling::locate()).map_err(be)?);
                Ok(Executor::Deployed { backend: DeployedBackend::connect(endpoint, solc).map_err(be)?, _node: None })
            }
            BackendConfig::LocalNode => {
                let tooling = Tooling::locate();
                let node = LocalNode::spawn(&tooling).map_err(be)?;
                let solc = Arc::new(Solc::spawn(&tooling).map_err(be)?);
                let backend = DeployedBackend::connect(node.url(), solc).map_err(be)?;
                Ok(Executor::Deployed { backend, _node: Some(node) })
            }
        }
    }

    fn compiler_version(&self) -> Option<String> {
        match self {
            Executor::InProcess => None,
            Executor::Deployed { backend, .. } => Some(backend.compiler_version().to_string()),
        }
    }

    /// `Ok(Err(reason))` when the contract could not be compiled
    /// (`compiled = false`) or deployed (`compiled = true`).
    fn replay(&self, source: &str, prep: &Prepared) -> Result<Result<Vec<ReplayOutcome>, (bool, String)>, RunError> {
        let logs = [&prep.conforming, &prep.non_conforming];
        let outcomes = match self {
            Executor::InProcess => {
                let mut handle = match InProcessBackend.deploy(source, &prep.machine) {
                    Ok(h) => h,
                    Err(e) => return Ok(Err((false, e.to_string()))),
                };
                replay_logs(&mut handle as &mut dyn ContractHandle, logs, &prep.encoding)
            }
            Executor::Deployed { backend, .. } => {
                let compiled = match backend.compile(source) {
                    Ok(c) => c,
                    Err(EvmError::Compile(m)) => return Ok(Err((false, m))),
                    Err(e) => return Err(RunError::Backend(e.to_string())),
                };
                let mut handle = match backend.deploy(&compiled, &prep.encoding) {
                    Ok(h) => h,
                    Err(EvmError::Deploy(m)) => return Ok(Err((true, m))),
                    Err(e) => return Err(RunError::Backend(e.to_string())),
                };
                replay_logs(&mut handle, logs, &prep.encoding)
            }
        };
        outcomes.map(Ok).map_err(|e| RunError::Backend(e.to_string()))
    }
}

enum CaseOutcome {
    Done(CaseResult),
    Pending(TestCase),
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect()
}

fn case_dir(out: &Path, tc: &TestCase) -> PathBuf {
    out.join("cases").join(tc.prompt_variant.as_str()).join(sanitize(&tc.llm_id)).join(sanitize(&tc.model_id))
}

fn prepare(entry: &DatasetEntry, cfg: &RunConfig) -> Result<Prepared, RunError> {
    let model = entry.model.as_ref().expect("accepted entries carry a model");
    let net = entry.net.as_ref().expect("accepted entries carry a net");
    let sim_err = |e: &dyn std::fmt::Display| RunError::Simulation { model: entry.model_id.clone(), message: e.to_string() };
    let encoding = build_encoding(model, cfg.simulator.random_seed);
    let machine = generate_machine(net, &encoding).map_err(|e| sim_err(&e))?;
    let conforming = playout(net, &cfg.simulator).map_err(|e| sim_err(&e))?;
    let non_conforming = mutate(&conforming, net, &cfg.simulator).map_err(|e| sim_err(&e))?;
    let prep = Prepared {
        model_id: entry.model_id.clone(),
        model_xml: write_choreography(model),
        encoding,
        machine,
        conforming,
        non_conforming,
    };
    let out = &cfg.output_dir;
    let id = sanitize(&prep.model_id);
    write_file(&out.join("models").join(format!("{id}.bpmn")), &prep.model_xml)?;
    let enc_json = serde_json::to_string_pretty(&prep.encoding).map_err(|e| RunError::Format(e.to_string()))?;
    write_file(&out.join("models").join(format!("{id}.encoding.json")), enc_json + "\n")?;
    write_file(&out.join("logs").join(format!("{id}.conforming.jsonl")), prep.conforming.to_jsonl())?;
    write_file(&out.join("logs").join(format!("{id}.non-conforming.jsonl")), prep.non_conforming.to_jsonl())?;
    if prep.conforming.capped {
        info!(model = %prep.model_id, traces = prep.conforming.traces.len(), "playout reached the trace cap");
    }
    Ok(prep)
}

/// Latest successful entry per test case, or the latest entry if none
/// succeeded.
fn index_usage(entries: Vec<UsageLogEntry>) -> HashMap<TestCase, UsageLogEntry> {
    let mut map: HashMap<TestCase, UsageLogEntry> = HashMap::new();
    for e in entries {
        match map.get(&e.test_case) {
            Some(prev) if prev.is_success() && !e.is_success() => {}
            _ => {
                map.insert(e.test_case.clone(), e);
            }
        }
    }
    map
}

struct Context<'a> {
    cfg: &'a RunConfig,
    executor: &'a Executor,
    templates: HashMap<PromptVariant, PromptTemplate>,
    recorded: Option<HashMap<TestCase, UsageLogEntry>>,
    usage_log: Option<UsageLog>,
}

fn run_case(tc: TestCase, prep: &Prepared, ctx: &Context<'_>) -> Result<CaseOutcome, RunError> {
    let dir = case_dir(&ctx.cfg.output_dir, &tc);
    let conforming = prep.conforming.traces.len() as u64;
    let non_conforming = prep.non_conforming.traces.len() as u64;

    let (output, cost, tokens) = if tc.is_oracle() {
        let source = emit_contract_source(&prep.machine).map_err(|e| RunError::Simulation {
            model: prep.model_id.clone(),
            message: e.to_string(),
        })?;
        (format!("```solidity\n{source}```\n"), 0.0, 0)
    } else {
        let entry = match &ctx.recorded {
            Some(recorded) => match recorded.get(&tc) {
                Some(e) => e.clone(),
                None => return Ok(CaseOutcome::Pending(tc)),
            },
            None => {
                let prompt = render_prompt(&prep.model_xml, &prep.encoding, &ctx.templates[&tc.prompt_variant])?;
                let e = request_generation(&prompt, &tc, &ctx.cfg.provider);
                if let Some(log) = &ctx.usage_log {
                    log.append(&e)?;
                }
                e
            }
        };
        write_file(&dir.join("prompt.txt"), &entry.full_input)?;
        if !entry.is_success() {
            warn!(model = %tc.model_id, llm = %tc.llm_id, status = ?entry.provider_status, "no provider answer; case left pending");
            return Ok(CaseOutcome::Pending(tc));
        }
        (entry.full_output.clone(), entry.cost_usd, entry.tokens())
    };
    write_file(&dir.join("response.txt"), &output)?;

    let source = match extract_contract(&output) {
        Ok(s) => s,
        Err(e) => {
            return Ok(CaseOutcome::Done(CaseResult::not_compiled(tc, e.to_string(), conforming, non_conforming, cost, tokens)));
        }
    };
    write_file(&dir.join("contract.sol"), &source)?;

    let result = match ctx.executor.replay(&source, prep)? {
        Ok(outcomes) => {
            let mut lines = String::new();
            for o in &outcomes {
                lines.push_str(&serde_json::to_string(o).map_err(|e| RunError::Format(e.to_string()))?);
                lines.push('\n');
            }
            write_file(&dir.join("outcomes.jsonl"), lines)?;
            CaseResult::from_outcomes(tc, &outcomes, cost, tokens)
        }
        Err((compiled, reason)) => {
            let mut r = CaseResult::not_compiled(tc, reason, conforming, non_conforming, cost, tokens);
            r.compiled = compiled;
            r
        }
    };
    info!(model = %result.model_id, llm = %result.test_case.llm_id, f1 = result.f1, compiled = result.compiled, "case done");
    Ok(CaseOutcome::Done(result))
}

fn load_templates(cfg: &RunConfig) -> Result<HashMap<PromptVariant, PromptTemplate>, RunError> {
    let mut out = HashMap::new();
    for &v in &cfg.prompt_variants {
        let t = match &cfg.prompts_dir {
            Some(dir) => PromptTemplate::load(dir, v)?,
            None => PromptTemplate::bundled(v),
        };
        out.insert(v, t);
    }
    Ok(out)
}

fn select<'a>(cfg: &RunConfig, gated: &'a [&'a DatasetEntry]) -> Result<Vec<&'a DatasetEntry>, RunError> {
    let n = gated.len();
    if cfg.sample_size == 0 || cfg.sample_size == n {
        return Ok(gated.to_vec());
    }
    if cfg.sample_size > n {
        return Err(RunError::ConfigInvalid(format!("sampleSize {} exceeds the {n} generatable models", cfg.sample_size)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.simulator.random_seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, cfg.sample_size).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| gated[i]).collect())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RunManifest<'a> {
    tool: String,
    started_at: String,
    finished_at: String,
    config: &'a RunConfig,
    resumed: bool,
    compiler_version: Option<String>,
    models_scanned: usize,
    models_generatable: usize,
    models_selected: usize,
    cases: usize,
    pending: usize,
    total_cost_usd: f64,
}

/// Runs the whole pipeline and writes every artifact under `outputDir`.
/// `report.json`, `summary.csv` and `cases.jsonl` depend only on the
/// dataset, the configuration and the usage log; wall-clock data goes to
/// `run_manifest.json`.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchmarkReport, RunError> {
    let started_at = Utc::now();
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.provider.concurrency_limit)
        .build()
        .map_err(|e| RunError::ConfigInvalid(e.to_string()))?;

    let entries = pool.install(|| scan_dataset(&cfg.dataset_dir, &cfg.gate))?;
    let gate_records: Vec<GateRecord> = entries.iter().map(GateRecord::from).collect();
    write_file(
        &cfg.output_dir.join("gate.json"),
        serde_json::to_string_pretty(&gate_records).map_err(|e| RunError::Format(e.to_string()))? + "\n",
    )?;
    let gated: Vec<&DatasetEntry> = entries.iter().filter(|e| e.accepted()).collect();
    if gated.is_empty() {
        return Err(RunError::DatasetEmpty(cfg.dataset_dir.clone()));
    }
    let selected = select(cfg, &gated)?;
    info!(scanned = entries.len(), generatable = gated.len(), selected = selected.len(), "dataset ready");

    let prepared: Vec<Prepared> = pool.install(|| selected.par_iter().map(|e| prepare(e, cfg)).collect::<Result<_, _>>())?;

    let recorded = match &cfg.resume_from_usage_log {
        Some(path) => Some(index_usage(read_usage_log(path)?)),
        None => None,
    };
    let needs_provider = recorded.is_none() && cfg.llm_ids.iter().any(|l| l != chorbench_core::llm::ORACLE_LLM_ID);
    let executor = Executor::start(&cfg.backend)?;
    let ctx = Context {
        cfg,
        executor: &executor,
        templates: load_templates(cfg)?,
        recorded,
        usage_log: if needs_provider { Some(UsageLog::open(&cfg.usage_log_path())?) } else { None },
    };

    let mut cases = Vec::new();
    for llm in &cfg.llm_ids {
        for &variant in &cfg.prompt_variants {
            for (i, p) in prepared.iter().enumerate() {
                cases.push((TestCase { llm_id: llm.clone(), prompt_variant: variant, model_id: p.model_id.clone() }, i));
            }
        }
    }
    let outcomes: Vec<CaseOutcome> =
        pool.install(|| cases.par_iter().map(|(tc, i)| run_case(tc.clone(), &prepared[*i], &ctx)).collect::<Result<_, _>>())?;

    let mut results = Vec::new();
    let mut pending = Vec::new();
    for o in outcomes {
        match o {
            CaseOutcome::Done(r) => results.push(r),
            CaseOutcome::Pending(tc) => pending.push(tc),
        }
    }
    pending.sort();
    let mut report = aggregate(results);
    report.pending = pending;
    report.compiler_version = executor.compiler_version();
    export_report(&report, &cfg.output_dir)?;

    let manifest = RunManifest {
        tool: format!("chorbench {}", env!("CARGO_PKG_VERSION")),
        started_at: started_at.to_rfc3339(),
        finished_at: Utc::now().to_rfc3339(),
        config: cfg,
        resumed: cfg.resume_from_usage_log.is_some(),
        compiler_version: report.compiler_version.clone(),
        models_scanned: entries.len(),
        models_generatable: gated.len(),
        models_selected: prepared.len(),
        cases: report.cases.len(),
        pending: report.pending.len(),
        total_cost_usd: report.cases.iter().map(|c| c.cost_usd).sum(),
    };
    write_file(
        &cfg.output_dir.join("run_manifest.json"),
        serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Format(e.to_string()))? + "\n",
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RetrySummary {
    pub requested: usize,
    pub succeeded: usize,
}

/// Re-requests every test case whose entries in `usage_log` are all
/// failures, appending one new entry per case. Attempt numbers continue
/// from the latest failed entry.
pub fn retry_failed(cfg: &RunConfig, usage_log: &Path) -> Result<RetrySummary, RunError> {
    let entries = read_usage_log(usage_log)?;
    let mut failed: Vec<UsageLogEntry> = index_usage(entries).into_values().filter(|e| !e.is_success()).collect();
    failed.sort_by(|a, b| a.test_case.cmp(&b.test_case));
    if failed.is_empty() {
        return Ok(RetrySummary { requested: 0, succeeded: 0 });
    }
    let log = UsageLog::open(usage_log)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.provider.concurrency_limit.max(1))
        .build()
        .map_err(|e| RunError::ConfigInvalid(e.to_string()))?;
    let fresh: Vec<UsageLogEntry> = pool.install(|| {
        failed
            .par_iter()
            .map(|old| {
                let e = request_generation_from(&old.full_input, &old.test_case, &cfg.provider, old.attempt + 1);
                log.append(&e).map(|_| e)
            })
            .collect::<Result<_, _>>()
    })?;
    let succeeded = fresh.iter().filter(|e| e.is_success()).count();
    info!(requested = fresh.len(), succeeded, "retry finished");
    Ok(RetrySummary { requested: fresh.len(), succeeded })
}

/// Gate verdicts as JSON, for the `gate` subcommand.
pub fn gate_json(entries: &[DatasetEntry]) -> serde_json::Value {
    let records: Vec<GateRecord> = entries.iter().map(GateRecord::from).collect();
    json!({
        "scanned": entries.len(),
        "accepted": entries.iter().filter(|e| e.accepted()).count(),
        "models": records,
    })
}

//! Trace replay against generated contracts, classification and metrics.

mod in_process;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{PromptVariant, TestCase};
use crate::machine::Call;
use crate::sim::{Encoding, EventLog, Trace, TraceLabel};

pub use in_process::{InProcessBackend, MachineHandle};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("compile error: {0}")]
    Compile(String),
    #[error("deploy error: {0}")]
    Deploy(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
}

/// Result of one contract call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CallReceipt {
    /// The call succeeded and, for task executions, changed the marking.
    pub accepted: bool,
    pub gas: u64,
}

/// A deployed contract instance seen through the encoding's interface.
pub trait ContractHandle {
    fn call(&mut self, call: &Call) -> Result<CallReceipt, BenchError>;
    fn is_ended(&mut self) -> Result<bool, BenchError>;
    /// Returns the instance to its freshly deployed state.
    fn reset(&mut self) -> Result<(), BenchError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReplayOutcome {
    pub case_id: String,
    pub label: TraceLabel,
    pub trace_len: usize,
    pub events_accepted: usize,
    pub all_events_accepted: bool,
    pub end_reached: bool,
    /// Real gas on a deployed backend, transition firings in-process.
    pub gas_used: u64,
}

/// Submits the events of `trace` in order against a fresh `handle`.
/// Replay stops at the first rejected event. Events naming a task,
/// participant or variable outside the encoding count as rejected without
/// reaching the contract.
pub fn replay_trace(handle: &mut dyn ContractHandle, trace: &Trace, enc: &Encoding) -> Result<ReplayOutcome, BenchError> {
    let mut accepted = 0;
    let mut gas = 0;
    for event in &trace.events {
        let Some(call) = Call::from_event(event, enc) else {
            break;
        };
        let receipt = handle.call(&call)?;
        if !receipt.accepted {
            break;
        }
        accepted += 1;
        gas += receipt.gas;
    }
    Ok(ReplayOutcome {
        case_id: trace.case_id.clone(),
        label: trace.label,
        trace_len: trace.events.len(),
        events_accepted: accepted,
        all_events_accepted: accepted == trace.events.len(),
        end_reached: handle.is_ended()?,
        gas_used: gas,
    })
}

/// Replays every trace of the given logs, resetting the contract before
/// each one.
pub fn replay_logs<'a>(
    handle: &mut dyn ContractHandle,
    logs: impl IntoIterator<Item = &'a EventLog>,
    enc: &Encoding,
) -> Result<Vec<ReplayOutcome>, BenchError> {
    let mut out = Vec::new();
    for log in logs {
        for trace in &log.traces {
            handle.reset()?;
            out.push(replay_trace(handle, trace, enc)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Classification {
    Tp,
    Fp,
    Tn,
    Fn,
}

pub fn classify(outcome: &ReplayOutcome) -> Classification {
    let accepted = outcome.all_events_accepted && outcome.end_reached;
    match (outcome.label, accepted) {
        (TraceLabel::Conforming, true) => Classification::Tp,
        (TraceLabel::Conforming, false) => Classification::Fn,
        (TraceLabel::NonConforming, true) => Classification::Fp,
        (TraceLabel::NonConforming, false) => Classification::Tn,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn add(&mut self, c: Classification) {
        match c {
            Classification::Tp => self.tp += 1,
            Classification::Fp => self.fp += 1,
            Classification::Tn => self.tn += 1,
            Classification::Fn => self.fn_ += 1,
        }
    }

    pub fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a ReplayOutcome>) -> Self {
        let mut c = Self::default();
        for o in outcomes {
            c.add(classify(o));
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1, each 0 when its denominator is 0.
pub fn score(c: &ConfusionCounts) -> Scores {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores { precision, recall, f1 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseResult {
    pub model_id: String,
    pub test_case: TestCase,
    pub compiled: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub failure: Option<String>,
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean gas (or steps) per replayed trace.
    pub avg_gas: f64,
    pub cost_usd: f64,
    pub tokens: u64,
}

impl CaseResult {
    pub fn from_outcomes(test_case: TestCase, outcomes: &[ReplayOutcome], cost_usd: f64, tokens: u64) -> Self {
        let counts = ConfusionCounts::from_outcomes(outcomes);
        let s = score(&counts);
        let gas: u64 = outcomes.iter().map(|o| o.gas_used).sum();
        Self {
            model_id: test_case.model_id.clone(),
            test_case,
            compiled: true,
            failure: None,
            counts,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
            avg_gas: if outcomes.is_empty() { 0.0 } else { gas as f64 / outcomes.len() as f64 },
            cost_usd,
            tokens,
        }
    }

    /// A case whose contract never ran. Conforming traces count as missed
    /// and non-conforming ones as rejected, so f1 is 0.
    pub fn not_compiled(test_case: TestCase, reason: String, conforming: u64, non_conforming: u64, cost_usd: f64, tokens: u64) -> Self {
        let counts = ConfusionCounts { tp: 0, fp: 0, tn: non_conforming, fn_: conforming };
        Self {
            model_id: test_case.model_id.clone(),
            test_case,
            compiled: false,
            failure: Some(reason),
            counts,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            avg_gas: 0.0,
            cost_usd,
            tokens,
        }
    }
}

/// One results-table row: a (prompt variant, llm) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryRow {
    pub shot: PromptVariant,
    pub model: String,
    pub cases: usize,
    pub avg_cost_usd: f64,
    pub avg_tokens: f64,
    pub f1_macro: f64,
    pub compilability_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchmarkReport {
    pub cases: Vec<CaseResult>,
    pub summary: Vec<SummaryRow>,
    pub macro_f1: f64,
    pub compilability_pct: f64,
    pub avg_cost_usd: f64,
    pub avg_tokens: f64,
    /// Cases left without a provider answer; excluded from every metric.
    #[serde(default)]
    pub pending: Vec<TestCase>,
    /// Solidity compiler used for non-reference contracts, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compiler_version: Option<String>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn pct_compiled(cases: &[&CaseResult]) -> f64 {
    if cases.is_empty() {
        return 0.0;
    }
    100.0 * cases.iter().filter(|c| c.compiled).count() as f64 / cases.len() as f64
}

/// Builds the report. Cases are sorted by (variant, llm, model); summary
/// rows by variant, then F1 descending, then llm id.
pub fn aggregate(mut results: Vec<CaseResult>) -> BenchmarkReport {
    results.sort_by(|a, b| {
        (a.test_case.prompt_variant, &a.test_case.llm_id, &a.model_id)
            .cmp(&(b.test_case.prompt_variant, &b.test_case.llm_id, &b.model_id))
    });
    let mut groups: BTreeMap<(PromptVariant, &str), Vec<&CaseResult>> = BTreeMap::new();
    for r in &results {
        groups.entry((r.test_case.prompt_variant, r.test_case.llm_id.as_str())).or_default().push(r);
    }
    let mut summary: Vec<SummaryRow> = groups
        .into_iter()
        .map(|((shot, llm), cases)| SummaryRow {
            shot,
            model: llm.to_string(),
            cases: cases.len(),
            avg_cost_usd: mean(cases.iter().map(|c| c.cost_usd)),
            avg_tokens: mean(cases.iter().map(|c| c.tokens as f64)),
            f1_macro: mean(cases.iter().map(|c| c.f1)),
            compilability_pct: pct_compiled(&cases),
        })
        .collect();
    summary.sort_by(|a, b| {
        a.shot
            .cmp(&b.shot)
            .then(b.f1_macro.partial_cmp(&a.f1_macro).unwrap_or(Ordering::Equal))
            .then(a.model.cmp(&b.model))
    });
    let all: Vec<&CaseResult> = results.iter().collect();
    BenchmarkReport {
        macro_f1: mean(results.iter().map(|c| c.f1)),
        compilability_pct: pct_compiled(&all),
        avg_cost_usd: mean(results.iter().map(|c| c.cost_usd)),
        avg_tokens: mean(results.iter().map(|c| c.tokens as f64)),
        summary,
        cases: results,
        pending: Vec::new(),
        compiler_version: None,
    }
}

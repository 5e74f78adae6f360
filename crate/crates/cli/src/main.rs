use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use chorbench::runner::gate_json;
use chorbench::{export_report, load_report, retry_failed, run_benchmark, scan_dataset, RunConfig};
use chorbench_core::ingest::{parse_choreography, preprocess};
use chorbench_core::net::{assess_model, GateConfig};
use chorbench_core::sim::{mutate, playout, SimulatorConfig};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "chorbench", version, about = "Benchmark LLM-generated smart contracts for BPMN choreographies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report which models in a dataset can be benchmarked.
    Gate {
        #[arg(long)]
        dataset: PathBuf,
        /// Also write the verdicts as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = GateConfig::default().max_places)]
        max_places: usize,
    },
    /// Generate conforming and non-conforming traces for one model.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = SimulatorConfig::default().max_conforming_traces)]
        max_conforming: usize,
        #[arg(long, default_value_t = SimulatorConfig::default().num_non_conforming)]
        non_conforming: usize,
        #[arg(long, default_value_t = SimulatorConfig::default().max_playout_passes)]
        passes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a benchmark from a TOML configuration.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Replay provider answers from this usage log instead of calling the provider.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Override the configured output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-request failed provider calls recorded in a usage log.
    Retry {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `<outputDir>/usage_log.jsonl`.
        #[arg(long)]
        usage_log: Option<PathBuf>,
    },
    /// Re-export a report.json as JSON, CSV and JSONL.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("CHORBENCH_LOG").unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();

    match Cli::parse().command {
        Command::Gate { dataset, out, max_places } => {
            let cfg = GateConfig { max_places, ..GateConfig::default() };
            let entries = scan_dataset(&dataset, &cfg)?;
            for e in &entries {
                let verdict = if e.accepted() { "ok      " } else { "excluded" };
                println!("{verdict} {} ({})", e.file, e.model_id);
                for r in &e.gate.reasons {
                    println!("           {r}");
                }
            }
            let accepted = entries.iter().filter(|e| e.accepted()).count();
            println!("{accepted} of {} models are generatable", entries.len());
            if let Some(out) = out {
                let json = serde_json::to_string_pretty(&gate_json(&entries))?;
                std::fs::write(&out, json + "\n").with_context(|| out.display().to_string())?;
            }
        }
        Command::Simulate { model, out, max_conforming, non_conforming, passes, seed } => {
            let text = std::fs::read_to_string(&model).with_context(|| model.display().to_string())?;
            let (parsed, _) = preprocess(&parse_choreography(&text)?);
            let (net, verdict) = assess_model(&parsed, &GateConfig::default());
            let Some(net) = net.filter(|_| verdict.accepted) else {
                bail!("model is not generatable: {}", verdict.reasons.join("; "));
            };
            let cfg = SimulatorConfig {
                max_conforming_traces: max_conforming,
                num_non_conforming: non_conforming,
                max_playout_passes: passes,
                random_seed: seed,
            };
            let good = playout(&net, &cfg)?;
            let bad = mutate(&good, &net, &cfg)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join(format!("{}.conforming.jsonl", parsed.model_id)), good.to_jsonl())?;
            std::fs::write(out.join(format!("{}.non-conforming.jsonl", parsed.model_id)), bad.to_jsonl())?;
            println!(
                "{}: {} conforming{}, {} non-conforming",
                parsed.model_id,
                good.traces.len(),
                if good.capped { " (capped)" } else { "" },
                bad.traces.len()
            );
        }
        Command::Bench { config, resume, output } => {
            let mut cfg = RunConfig::load(&config)?;
            if resume.is_some() {
                cfg.resume_from_usage_log = resume;
            }
            if let Some(o) = output {
                cfg.output_dir = o;
            }
            let report = run_benchmark(&cfg)?;
            println!("{:<10} {:<40} {:>10} {:>10} {:>8} {:>8}", "shot", "model", "cost", "tokens", "f1", "comp%");
            for r in &report.summary {
                println!(
                    "{:<10} {:<40} {:>10.4} {:>10.0} {:>8.3} {:>8.1}",
                    r.shot.as_str(),
                    r.model,
                    r.avg_cost_usd,
                    r.avg_tokens,
                    r.f1_macro,
                    r.compilability_pct
                );
            }
            println!("macro F1 {:.3}, compilability {:.1}%", report.macro_f1, report.compilability_pct);
            if !report.pending.is_empty() {
                println!("{} case(s) pending a provider answer; run `chorbench retry`", report.pending.len());
            }
        }
        Command::Retry { config, usage_log } => {
            let cfg = RunConfig::load(&config)?;
            let log = usage_log.unwrap_or_else(|| cfg.usage_log_path());
            let s = retry_failed(&cfg, &log)?;
            println!("re-requested {} case(s), {} succeeded", s.requested, s.succeeded);
        }
        Command::Report { input, out } => {
            let report = load_report(&input)?;
            for p in export_report(&report, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

mod support;

use chorbench_core::bench::{
    aggregate, classify, replay_logs, replay_trace, score, CaseResult, Classification, ConfusionCounts, InProcessBackend,
    MachineHandle,
};
use chorbench_core::llm::{PromptVariant, TestCase};
use chorbench_core::machine::{emit_contract_source, generate_machine};
use chorbench_core::sim::{build_encoding, mutate, playout, Event, SimulatorConfig, Trace, TraceLabel};
use support::supported_fixtures;

const TOL: f64 = 1e-12;

fn tc(model: &str) -> TestCase {
    TestCase { llm_id: "oracle".into(), prompt_variant: PromptVariant::OneShot, model_id: model.into() }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

#[test]
fn score_worked_examples() {
    let cases = [((5, 0, 50, 0), (1.0, 1.0, 1.0)), ((8, 2, 48, 2), (0.8, 0.8, 0.8)), ((0, 0, 50, 5), (0.0, 0.0, 0.0))];
    for ((tp, fp, tn, fn_), (p, r, f)) in cases {
        let s = score(&ConfusionCounts { tp, fp, tn, fn_ });
        assert!(close(s.precision, p) && close(s.recall, r) && close(s.f1, f), "{tp},{fp},{tn},{fn_}: {s:?}");
    }
}

#[test]
fn aggregate_worked_examples() {
    let mut a = CaseResult::from_outcomes(tc("a"), &[], 0.0, 0);
    a.f1 = 1.0;
    let mut b = CaseResult::from_outcomes(tc("b"), &[], 0.0, 0);
    b.f1 = 0.5;
    assert!(close(aggregate(vec![a.clone(), b]).macro_f1, 0.75));

    let failed = CaseResult::not_compiled(tc("b"), "syntax".into(), 5, 50, 0.0, 0);
    assert_eq!(failed.counts, ConfusionCounts { tp: 0, fp: 0, tn: 50, fn_: 5 });
    let report = aggregate(vec![a, failed]);
    assert!(close(report.compilability_pct, 50.0));
    assert!(close(report.macro_f1, 0.5));
    assert_eq!(report.cases[1].f1, 0.0);
}

#[test]
fn oracle_contracts_score_perfectly_in_process() {
    let cfg = SimulatorConfig { random_seed: 4, ..SimulatorConfig::default() };
    let mut results = Vec::new();
    for (id, model, net) in supported_fixtures() {
        let enc = build_encoding(&model, cfg.random_seed);
        let machine = generate_machine(&net, &enc).unwrap();
        let source = emit_contract_source(&machine).unwrap();
        let mut handle = InProcessBackend.deploy(&source, &machine).unwrap();
        let good = playout(&net, &cfg).unwrap();
        let bad = mutate(&good, &net, &cfg).unwrap();
        let outcomes = replay_logs(&mut handle, [&good, &bad], &enc).unwrap();
        let r = CaseResult::from_outcomes(tc(&id), &outcomes, 0.0, 0);
        assert_eq!(r.counts.tp + r.counts.fn_, good.traces.len() as u64, "{id}");
        assert_eq!(r.counts.fp + r.counts.tn, bad.traces.len() as u64, "{id}");
        assert_eq!((r.counts.fp, r.counts.fn_), (0, 0), "{id}");
        for o in &outcomes {
            assert!(o.events_accepted <= o.trace_len);
        }
        results.push(r);
    }
    let report = aggregate(results);
    assert_eq!(report.macro_f1, 1.0);
    assert_eq!(report.compilability_pct, 100.0);
}

#[test]
fn prefix_and_wrong_initiator_outcomes() {
    let (_, model, net) = supported_fixtures().into_iter().find(|(id, _, _)| id == "seq_order").unwrap();
    let enc = build_encoding(&model, 0);
    let machine = generate_machine(&net, &enc).unwrap();
    let mut handle = MachineHandle::new(machine);
    let full = playout(&net, &SimulatorConfig::default()).unwrap().traces.remove(0);

    let mut prefix = full.clone();
    prefix.events.pop();
    let o = replay_trace(&mut handle, &prefix, &enc).unwrap();
    assert!(o.all_events_accepted && !o.end_reached);
    assert_eq!(classify(&o), Classification::Fn);

    let Event::TaskExecution { task_id, initiator } = &full.events[0] else { panic!() };
    let other = model.participants.iter().find(|p| &p.participant_id != initiator).unwrap();
    let mut wrong = Trace { case_id: "w".into(), label: TraceLabel::NonConforming, events: full.events.clone() };
    wrong.events[0] = Event::task(task_id.clone(), other.participant_id.clone());
    let mut handle = MachineHandle::new(generate_machine(&net, &enc).unwrap());
    let o = replay_trace(&mut handle, &wrong, &enc).unwrap();
    assert_eq!(o.events_accepted, 0);
    assert_eq!(classify(&o), Classification::Tn);
}

#[test]
fn in_process_backend_refuses_foreign_sources() {
    let (_, model, net) = supported_fixtures().remove(0);
    let machine = generate_machine(&net, &build_encoding(&model, 0)).unwrap();
    assert!(InProcessBackend.deploy("contract X {}", &machine).is_err());
}

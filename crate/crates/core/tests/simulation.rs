mod support;

use std::collections::BTreeSet;

use chorbench_core::model::{ChoreographyModel, ConditionRef, Flow, Gateway, GatewayDirection, GatewayKind, Participant, Task};
use chorbench_core::net::build_net;
use chorbench_core::sim::{build_encoding, conforms, mutate, playout, Event, EventLog, SimError, SimulatorConfig, Trace, TraceLabel};
use proptest::prelude::*;
use support::{enumerate_traces, load_model, supported_fixtures};

fn cfg(seed: u64) -> SimulatorConfig {
    SimulatorConfig { random_seed: seed, ..SimulatorConfig::default() }
}

fn trace_set(log: &EventLog) -> BTreeSet<Vec<Event>> {
    log.traces.iter().map(|t| t.events.clone()).collect()
}

#[test]
fn playout_matches_enumeration_on_small_acyclic_fixtures() {
    let mut checked = 0;
    for (id, _, net) in supported_fixtures() {
        if net.is_cyclic() || net.transitions.len() > 12 {
            continue;
        }
        let log = playout(&net, &cfg(3)).unwrap();
        assert_eq!(trace_set(&log), enumerate_traces(&net), "{id}");
        assert_eq!(trace_set(&log).len(), log.traces.len(), "{id}: duplicates");
        checked += 1;
    }
    assert!(checked >= 15, "only {checked} fixtures qualified");
}

#[test]
fn every_played_out_trace_conforms() {
    for (id, _, net) in supported_fixtures() {
        let log = playout(&net, &cfg(11)).unwrap();
        assert!(!log.traces.is_empty());
        for t in &log.traces {
            assert!(conforms(&net, t), "{id}: {:?}", t.events);
        }
    }
}

#[test]
fn known_trace_sets() {
    let set = |file: &str| {
        let net = build_net(&load_model(file)).unwrap();
        trace_set(&playout(&net, &cfg(0)).unwrap())
    };
    let seq = set("models/seq_order.bpmn");
    assert_eq!(seq, BTreeSet::from([vec![Event::task("T1", "Buyer"), Event::task("T2", "Seller")]]));

    let and = set("models/and_fulfilment.bpmn");
    assert_eq!(and.len(), 2);
    assert!(and.contains(&vec![
        Event::task("T1", "Buyer"),
        Event::task("T2", "Buyer"),
        Event::task("T3", "Seller"),
        Event::task("T4", "Seller")
    ]));

    let xor = set("models/xor_approval.bpmn");
    assert_eq!(
        xor,
        BTreeSet::from([
            vec![Event::task("T1", "Buyer"), Event::task("T2", "Seller"), Event::task("T4", "Buyer")],
            vec![Event::data("c0", true), Event::task("T1", "Buyer"), Event::task("T3", "Seller"), Event::task("T4", "Buyer")],
        ])
    );
}

#[test]
fn loop_fixture_is_capped_at_threshold() {
    let net = build_net(&load_model("models/loop_catalogue.bpmn")).unwrap();
    let log = playout(&net, &cfg(5)).unwrap();
    assert_eq!(log.traces.len(), 2500);
    assert!(log.capped);
    assert_eq!(trace_set(&log).len(), 2500);
    assert!(log.traces.iter().all(|t| conforms(&net, t)));

    let small = playout(&net, &SimulatorConfig { max_conforming_traces: 40, ..cfg(5) }).unwrap();
    assert_eq!(small.traces.len(), 40);
}

#[test]
fn loop_without_cap_pressure_is_exhausted() {
    // depth-bounded: with three passes only short iterations are found
    let net = build_net(&load_model("models/loop_negotiation.bpmn")).unwrap();
    let log = playout(&net, &SimulatorConfig { max_playout_passes: 3, ..cfg(1) }).unwrap();
    assert!(!log.capped);
    assert_eq!(log.traces.len(), 1);
    let log = playout(&net, &SimulatorConfig { max_playout_passes: 9, ..cfg(1) }).unwrap();
    // one to four rounds of propose/counter before signing
    assert_eq!(log.traces.len(), 4);
}

#[test]
fn playout_is_deterministic_per_seed() {
    for (_, _, net) in supported_fixtures() {
        let a = playout(&net, &cfg(9)).unwrap();
        let b = playout(&net, &cfg(9)).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }
}

#[test]
fn mutation_produces_distinct_rejected_traces() {
    for (id, _, net) in supported_fixtures() {
        let c = SimulatorConfig { max_conforming_traces: 300, ..cfg(2) };
        let log = playout(&net, &c).unwrap();
        let bad = mutate(&log, &net, &c).unwrap();
        assert_eq!(bad.traces.len(), 50, "{id}");
        let distinct: BTreeSet<_> = bad.traces.iter().map(|t| &t.events).collect();
        assert_eq!(distinct.len(), 50);
        for t in &bad.traces {
            assert_eq!(t.label, TraceLabel::NonConforming);
            assert!(!t.events.is_empty());
            assert!(!conforms(&net, t), "{id}: {:?}", t.events);
        }
        let again = mutate(&log, &net, &c).unwrap();
        assert_eq!(again, bad);
    }
}

#[test]
fn mutation_reports_exhaustion() {
    // an empty log has nothing to mutate; the attempt budget ends the search
    let net = build_net(&load_model("models/seq_order.bpmn")).unwrap();
    let log = EventLog {
        model_id: "seq_order".into(),
        traces: vec![Trace {
            case_id: "x".into(),
            label: TraceLabel::Conforming,
            events: vec![Event::task("T1", "Buyer"), Event::task("T2", "Seller")],
        }],
        capped: false,
    };
    let empty = EventLog { traces: Vec::new(), ..log.clone() };
    assert!(matches!(
        mutate(&empty, &net, &cfg(0)),
        Err(SimError::MutationExhausted { found: 0, .. })
    ));
    assert!(mutate(&log, &net, &SimulatorConfig { num_non_conforming: 5, ..cfg(0) }).is_ok());
}

#[test]
fn conforming_swap_in_parallel_region_is_not_emitted() {
    let net = build_net(&load_model("models/and_fulfilment.bpmn")).unwrap();
    let log = playout(&net, &cfg(0)).unwrap();
    let good = trace_set(&log);
    let bad = mutate(&log, &net, &SimulatorConfig { num_non_conforming: 200, ..cfg(4) }).unwrap();
    // swapping T2/T3 gives the other interleaving, which must never appear
    for t in &bad.traces {
        assert!(!good.contains(&t.events));
    }
}

#[test]
fn encoding_is_stable() {
    let model = load_model("models/supply_chain.bpmn");
    let a = build_encoding(&model, 17);
    assert_eq!(a, build_encoding(&model, 17));
    assert_eq!(a.tasks.len(), 7);
    assert_eq!(a.variables, vec!["c0".to_string()]);
    let addrs: BTreeSet<_> = a.participants.iter().map(|p| p.address).collect();
    assert_eq!(addrs.len(), 3);
}

// ---- random block-structured models

#[derive(Debug, Clone)]
enum Block {
    Task(usize, usize),
    Seq(Box<Block>, Box<Block>),
    And(Box<Block>, Box<Block>),
    Xor(Vec<Block>),
    Event(Vec<(usize, usize)>),
}

fn block() -> impl Strategy<Value = Block> {
    let leaf = (0..3usize, 1..3usize).prop_map(|(a, b)| Block::Task(a, (a + b) % 3));
    leaf.prop_recursive(3, 8, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Block::Seq(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Block::And(Box::new(a), Box::new(b))),
            prop::collection::vec(inner, 2..4).prop_map(Block::Xor),
            prop::collection::vec((0..3usize, 1..3usize), 2..4)
                .prop_map(|v| Block::Event(v.into_iter().map(|(a, b)| (a, (a + b) % 3)).collect())),
        ]
    })
}

struct Builder {
    m: ChoreographyModel,
    n: usize,
    vars: usize,
}

impl Builder {
    fn id(&mut self, p: &str) -> String {
        self.n += 1;
        format!("{p}{}", self.n)
    }

    fn flow(&mut self, s: &str, t: &str, condition: Option<ConditionRef>, is_default: bool) {
        let flow_id = self.id("f");
        self.m.flows.push(Flow { flow_id, source: s.into(), target: t.into(), condition, is_default });
    }

    fn task(&mut self, a: usize, b: usize) -> String {
        let task_id = self.id("T");
        self.m.tasks.push(Task { task_id: task_id.clone(), name: task_id.clone(), initiator: format!("P{a}"), recipient: format!("P{b}") });
        task_id
    }

    fn gateway(&mut self, kind: GatewayKind, direction: GatewayDirection) -> String {
        let gateway_id = self.id("G");
        self.m.gateways.push(Gateway { gateway_id: gateway_id.clone(), kind, direction });
        gateway_id
    }

    /// Returns (entry node, exit node).
    fn build(&mut self, b: &Block) -> (String, String) {
        match b {
            Block::Task(a, r) => {
                let t = self.task(*a, *r);
                (t.clone(), t)
            }
            Block::Seq(x, y) => {
                let (a, b) = self.build(x);
                let (c, d) = self.build(y);
                self.flow(&b, &c, None, false);
                (a, d)
            }
            Block::And(x, y) => {
                let s = self.gateway(GatewayKind::Parallel, GatewayDirection::Diverging);
                let j = self.gateway(GatewayKind::Parallel, GatewayDirection::Converging);
                for blk in [x, y] {
                    let (a, b) = self.build(blk);
                    self.flow(&s, &a, None, false);
                    self.flow(&b, &j, None, false);
                }
                (s, j)
            }
            Block::Xor(branches) => {
                let s = self.gateway(GatewayKind::Exclusive, GatewayDirection::Diverging);
                let j = self.gateway(GatewayKind::Exclusive, GatewayDirection::Converging);
                for (k, blk) in branches.iter().enumerate() {
                    let (a, b) = self.build(blk);
                    let cond = (k > 0).then(|| {
                        self.vars += 1;
                        ConditionRef { variable_id: format!("c{}", self.vars - 1), expected: true }
                    });
                    self.flow(&s, &a, cond, k == 0);
                    self.flow(&b, &j, None, false);
                }
                (s, j)
            }
            Block::Event(tasks) => {
                let s = self.gateway(GatewayKind::EventBased, GatewayDirection::Diverging);
                let j = self.gateway(GatewayKind::Exclusive, GatewayDirection::Converging);
                for &(a, r) in tasks {
                    let t = self.task(a, r);
                    self.flow(&s, &t, None, false);
                    self.flow(&t, &j, None, false);
                }
                (s, j)
            }
        }
    }
}

fn model_of(b: &Block) -> ChoreographyModel {
    let mut bl = Builder { m: ChoreographyModel::empty("random"), n: 0, vars: 0 };
    for p in 0..3 {
        bl.m.participants.push(Participant { participant_id: format!("P{p}"), name: format!("P{p}") });
    }
    bl.m.start_events.push("S".into());
    bl.m.end_events.push("E".into());
    let (a, z) = bl.build(b);
    bl.flow("S", &a, None, false);
    bl.flow(&z, "E", None, false);
    bl.m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn playout_equals_enumeration_on_random_models(b in block(), seed in any::<u64>()) {
        let net = build_net(&model_of(&b)).unwrap();
        let log = playout(&net, &SimulatorConfig { max_conforming_traces: 100_000, ..cfg(seed) }).unwrap();
        prop_assert_eq!(trace_set(&log), enumerate_traces(&net));
        for t in &log.traces {
            prop_assert!(conforms(&net, t));
        }
    }

    #[test]
    fn mutants_never_conform(b in block(), seed in any::<u64>()) {
        let net = build_net(&model_of(&b)).unwrap();
        let c = SimulatorConfig { num_non_conforming: 10, ..cfg(seed) };
        let log = playout(&net, &c).unwrap();
        if let Ok(bad) = mutate(&log, &net, &c) {
            for t in &bad.traces {
                prop_assert!(!conforms(&net, t));
            }
        }
    }
}

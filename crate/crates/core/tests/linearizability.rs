mod common;

use std::collections::VecDeque;

use proptest::prelude::*;
use quotient::equivalence::Tri;
use quotient::interpreter::{explore, Bounds, Environment, Interp};
use quotient::layers::PathTable;
use quotient::linearizability::{
    brute_force_linearizable, parse_lp, spec_accepts, verify_object, Commutation, LpMapping, OperationSymbol, SeqSpec, Stage,
    Verdict, VerifyBounds,
};
use quotient::object_model::{parse_object, ObjectDef};

fn op(m: &str, args: &[i64], r: i64) -> OperationSymbol {
    OperationSymbol::new(m, args, &[r])
}

fn mapping(name: &str) -> LpMapping {
    parse_lp(&common::read(&format!("{name}.lp")).unwrap()).unwrap()
}

fn verify(name: &str, m: &LpMapping, spec: SeqSpec, envs: &[Environment], unroll: u8) -> Verdict {
    let (obj, s) = common::synthesize(name);
    let table = PathTable::new(&obj, 1).unwrap();
    let vb = VerifyBounds { bounds: Bounds { unroll, ..Bounds::default() }, ..VerifyBounds::default() };
    verify_object(&obj, &s.automaton, &table, m, spec, envs, &vb)
}

/// Traces with real invocation positions whose operations have no
/// linearization; returns (traces, failures).
fn brute_force(obj: &ObjectDef, spec: SeqSpec, envs: &[Environment], unroll: u8) -> (usize, usize) {
    let b = Bounds { unroll, ..Bounds::default() };
    let (mut n, mut bad) = (0, 0);
    for env in envs {
        let interp = Interp::new(obj, env, &b);
        for t in explore(&interp, b.step_bound(env.threads()) + env.threads(), false).traces {
            n += 1;
            if brute_force_linearizable(obj, &t, spec).is_none() {
                bad += 1;
            }
        }
    }
    (n, bad)
}

#[test]
fn specifications_accept_reference_histories() {
    assert!(spec_accepts(SeqSpec::Counter, &[op("increment", &[], 0), op("increment", &[], 1), op("decrement", &[], 2)]));
    assert!(spec_accepts(SeqSpec::Counter, &[op("decrement", &[], 0), op("increment", &[], 0)]));
    assert!(!spec_accepts(SeqSpec::Counter, &[op("increment", &[], 0), op("increment", &[], 0)]));
    assert!(spec_accepts(SeqSpec::Stack, &[op("push", &[1], 0), op("push", &[2], 0), op("pop", &[], 2), op("pop", &[], 1), op("pop", &[], 0)]));
    assert!(!spec_accepts(SeqSpec::Stack, &[op("push", &[1], 0), op("push", &[2], 0), op("pop", &[], 1)]));
    assert!(spec_accepts(SeqSpec::Queue, &[op("enq", &[1], 1), op("enq", &[2], 1), op("deq", &[], 1), op("adv", &[], 0)]));
    assert!(!spec_accepts(SeqSpec::Queue, &[op("enq", &[1], 1), op("enq", &[2], 1), op("deq", &[], 2)]));
    assert!(spec_accepts(SeqSpec::Set, &[op("insert", &[3], 1), op("insert", &[3], 0), op("contains", &[3], 1), op("delete", &[3], 1)]));
    assert!(!spec_accepts(SeqSpec::Set, &[op("delete", &[3], 1)]));
}

#[test]
fn commutation_examples() {
    let mut c = Commutation::new(SeqSpec::Queue, &[1, 2], 4);
    assert!(c.commute(&op("adv", &[], 0), &op("enq", &[1], 1)));
    assert!(!c.commute(&op("enq", &[1], 1), &op("enq", &[2], 1)));
    let mut c = Commutation::new(SeqSpec::Counter, &[0, 1, 2], 4);
    assert!(!c.commute(&op("increment", &[], 0), &op("increment", &[], 1)));
    let mut c = Commutation::new(SeqSpec::Set, &[1, 2], 4);
    assert!(c.commute(&op("contains", &[1], 0), &op("contains", &[2], 1)));
    assert!(c.commute(&op("insert", &[1], 1), &op("insert", &[2], 1)));
    assert!(!c.commute(&op("insert", &[1], 1), &op("contains", &[1], 0)));
}

#[test]
fn lp_files_parse_and_reject_garbage() {
    let m = mapping("counter");
    assert_eq!(m.layers.get("increment:0"), Some(&1));
    assert_eq!(m.readonly.get("decrement:0"), Some(&0));
    assert!(parse_lp("layer increment:0 lp 1").is_err());
    assert!(parse_lp("other x lp = 1").is_err());
}

const RACY: &str = "object racy
shared ctr: int = 0

method increment() returns int {
  c := ctr;
  ctr := c + 1;
  return c;
}
";

#[test]
fn brute_force_finds_lost_updates() {
    let obj = parse_object(RACY).unwrap();
    let env = Environment::parse_list(&obj, "increment,increment").unwrap();
    let (n, bad) = brute_force(&obj, SeqSpec::Counter, &[env], 1);
    assert!(n > 0);
    assert!(bad > 0);
}

#[test]
fn brute_force_respects_real_time_order() {
    let obj = common::object("counter");
    let env = Environment::parse_list(&obj, "increment,increment").unwrap();
    let b = Bounds::default();
    let interp = Interp::new(&obj, &env, &b);
    let traces = explore(&interp, b.step_bound(2) + 2, false).traces;
    // sequential runs linearize in their real-time order
    let seq = traces.iter().find(|t| t[..t.len() / 2].iter().all(|e| e.thread == t[0].thread)).unwrap();
    let order = brute_force_linearizable(&obj, seq, SeqSpec::Counter).unwrap();
    assert_eq!(order, vec![op("increment", &[], 0), op("increment", &[], 1)]);
}

#[test]
fn counter_verifies() {
    let obj = common::object("counter");
    let envs = Environment::enumerate(&obj, 2, &[]);
    let v = verify("counter", &mapping("counter"), SeqSpec::Counter, &envs, 2);
    assert_eq!(v.linearizable, Tri::Yes, "{}", v.render(&obj));
    assert!(v.representatives > 0);
}

#[test]
fn treiber_verifies() {
    let obj = common::object("treiber");
    let envs = Environment::enumerate(&obj, 2, &[1, 2]);
    let v = verify("treiber", &mapping("treiber"), SeqSpec::Stack, &envs, 2);
    assert_eq!(v.linearizable, Tri::Yes, "{}", v.render(&obj));
}

#[test]
fn msq_verifies() {
    let obj = common::object("msq");
    let envs = Environment::enumerate(&obj, 2, &[1, 2]);
    let v = verify("msq", &mapping("msq"), SeqSpec::Queue, &envs, 1);
    assert_eq!(v.linearizable, Tri::Yes, "{}", v.render(&obj));
}

#[test]
fn an_early_increment_point_is_refuted() {
    let obj = common::object("counter");
    let mut m = mapping("counter");
    m.layers.insert("increment:0".into(), 0);
    let envs = Environment::enumerate(&obj, 2, &[]);
    let v = verify("counter", &m, SeqSpec::Counter, &envs, 2);
    assert_eq!(v.linearizable, Tri::No, "{}", v.render(&obj));
    assert!(!spec_accepts(SeqSpec::Counter, v.ordering.as_ref().unwrap()));
}

#[test]
fn msq_empty_dequeue_at_its_test_is_refuted() {
    let obj = common::object("msq");
    let mut m = mapping("msq");
    m.readonly.insert("deq:0".into(), 5);
    let envs = vec![Environment::parse_list(&obj, "enq(1),deq").unwrap()];
    let v = verify("msq", &m, SeqSpec::Queue, &envs, 1);
    assert_eq!(v.linearizable, Tri::No, "{}", v.render(&obj));
}

#[test]
fn a_missing_point_is_a_mapping_failure() {
    let obj = common::object("counter");
    let mut m = mapping("counter");
    m.readonly.clear();
    let envs = vec![Environment::parse_list(&obj, "decrement").unwrap()];
    let v = verify("counter", &m, SeqSpec::Counter, &envs, 1);
    assert_eq!((v.linearizable, v.stage), (Tri::Unknown, Some(Stage::Mapping)));
}

#[test]
fn brute_force_agrees_with_the_counter_verdict_for_three_threads() {
    let obj = common::object("counter");
    let envs = Environment::enumerate(&obj, 3, &[]);
    for unroll in [1, 2] {
        let (n, bad) = brute_force(&obj, SeqSpec::Counter, &envs, unroll);
        assert!(n > 0);
        assert_eq!(bad, 0, "unroll {unroll}");
    }
}

#[test]
fn brute_force_agrees_with_the_stack_and_queue_verdicts() {
    for (name, spec) in [("treiber", SeqSpec::Stack), ("msq", SeqSpec::Queue)] {
        let obj = common::object(name);
        let envs = Environment::enumerate(&obj, 2, &[1, 2]);
        for unroll in [1, 2] {
            assert_eq!(brute_force(&obj, spec, &envs, unroll).1, 0, "{name} unroll {unroll}");
        }
    }
}

#[derive(Clone, Debug)]
enum Cmd {
    Inc(i64),
    Dec(i64),
}

fn counter_model(cmds: &[Cmd]) -> bool {
    let mut c = 0i64;
    for k in cmds {
        match *k {
            Cmd::Inc(r) if r == c => c += 1,
            Cmd::Dec(r) if r == c => c = (c - 1).max(0),
            _ => return false,
        }
    }
    true
}

fn queue_model(ops: &[(bool, i64)]) -> Vec<i64> {
    let mut q = VecDeque::new();
    let mut out = Vec::new();
    for &(enq, v) in ops {
        if enq {
            q.push_back(v);
        } else {
            out.push(q.pop_front().unwrap_or(0));
        }
    }
    out
}

proptest! {
    #[test]
    fn counter_spec_matches_a_plain_counter(
        cmds in prop::collection::vec(prop_oneof![(0i64..4).prop_map(Cmd::Inc), (0i64..4).prop_map(Cmd::Dec)], 0..=6)
    ) {
        let ops: Vec<OperationSymbol> = cmds.iter().map(|c| match *c {
            Cmd::Inc(r) => op("increment", &[], r),
            Cmd::Dec(r) => op("decrement", &[], r),
        }).collect();
        prop_assert_eq!(spec_accepts(SeqSpec::Counter, &ops), counter_model(&cmds));
    }

    #[test]
    fn queue_spec_matches_a_deque(ops in prop::collection::vec((any::<bool>(), 1i64..4), 0..=8)) {
        let mut rets = queue_model(&ops).into_iter();
        let syms: Vec<OperationSymbol> = ops.iter().map(|&(e, v)| {
            if e { op("enq", &[v], 1) } else { op("deq", &[], rets.next().unwrap()) }
        }).collect();
        prop_assert!(spec_accepts(SeqSpec::Queue, &syms));
        if let Some(i) = syms.iter().position(|s| s.method == "deq") {
            let mut wrong = syms.clone();
            wrong[i].rets[0] += 1;
            prop_assert!(!spec_accepts(SeqSpec::Queue, &wrong));
        }
    }
}

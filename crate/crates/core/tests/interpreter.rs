mod common;

use proptest::prelude::*;
use quotient::interpreter::{explore, run_sequence, Bounds, Config, Environment, Interp, Label, Piece};
use quotient::object_model::{ObjectDef, Value};

fn env(obj: &ObjectDef, src: &str) -> Environment {
    Environment::parse_list(obj, src).unwrap()
}

fn complete_traces(obj: &ObjectDef, e: &Environment, unroll: u8) -> usize {
    let b = Bounds { unroll, ..Bounds::default() };
    let interp = Interp::new(obj, e, &b);
    explore(&interp, b.step_bound(e.threads()), true).traces.len()
}

#[test]
fn environment_lists_parse_and_render() {
    let obj = common::object("treiber");
    let e = env(&obj, "push(1),pop,push(2)");
    assert_eq!(e.threads(), 3);
    assert_eq!(Environment::parse_list(&obj, &e.render(&obj)).unwrap(), e);
    assert!(Environment::parse_list(&obj, "push").is_err());
    assert!(Environment::parse_list(&obj, "shove(1)").is_err());
}

#[test]
fn sweeps_enumerate_shortest_first() {
    let obj = common::object("counter");
    let envs = Environment::enumerate(&obj, 3, &[]);
    // [DERIVED] 2 + 4 + 8 ordered sequences over {increment, decrement}
    assert_eq!(envs.len(), 14);
    assert!(envs.windows(2).all(|w| w[0].threads() <= w[1].threads()));
}

#[test]
fn single_invocations_run_to_completion() {
    let obj = common::object("counter");
    let e = env(&obj, "increment");
    let b = Bounds::default();
    let interp = Interp::new(&obj, &e, &b);
    let x = explore(&interp, b.step_bound(1), true);
    assert_eq!(x.traces.len(), 1);
    let t = &x.traces[0];
    let exec = interp.replay(t).unwrap();
    assert!(exec.is_complete());
    assert_eq!(exec.last().heap.vars, vec![Value::Int(1)]);
    let Label::Step { values, .. } = &t.last().unwrap().label else { panic!() };
    assert_eq!(values, &vec![Value::Int(0)]);
}

#[test]
fn decrement_at_zero_returns_zero_without_writing() {
    let obj = common::object("counter");
    let e = env(&obj, "decrement");
    let b = Bounds::default();
    let interp = Interp::new(&obj, &e, &b);
    let t = &explore(&interp, b.step_bound(1), true).traces[0];
    assert_eq!(interp.replay(t).unwrap().last().heap.vars, vec![Value::Int(0)]);
}

#[test]
fn replay_rejects_tampered_return_values() {
    let obj = common::object("counter");
    let e = env(&obj, "increment,increment");
    let b = Bounds::default();
    let interp = Interp::new(&obj, &e, &b);
    let mut t = explore(&interp, b.step_bound(2), true).traces.swap_remove(0);
    assert!(interp.replay(&t).is_some());
    let last = t.last_mut().unwrap();
    if let Label::Step { values, .. } = &mut last.label {
        values[0] = Value::Int(9);
    }
    assert!(interp.replay(&t).is_none());
}

#[test]
fn contention_adds_retry_traces_under_unrolling() {
    let obj = common::object("counter");
    let e = env(&obj, "increment,increment");
    // a failed CAS needs a second iteration
    assert!(complete_traces(&obj, &e, 2) > complete_traces(&obj, &e, 1));
}

#[test]
fn allocations_by_different_threads_commute() {
    let obj = common::object("treiber");
    let e = env(&obj, "push(1),push(2)");
    let b = Bounds::default();
    let interp = Interp::new(&obj, &e, &b);
    let first = |order: [usize; 2]| {
        let mut c = interp.initial();
        for t in order {
            // invoke, then the allocation
            c = interp.step(&c, t).succs.remove(0).1;
            c = interp.step(&c, t).succs.remove(0).1;
        }
        c
    };
    assert_eq!(first([1, 2]).heap, first([2, 1]).heap);
}

#[test]
fn run_sequence_reports_infeasible_orders() {
    let obj = common::object("counter");
    let e = env(&obj, "decrement");
    let b = Bounds::default();
    let interp = Interp::new(&obj, &e, &b);
    let c = Config::initial(&obj, &e);
    // decrement:1 is the CAS path, which needs a positive counter
    let p = quotient::layers::PathTable::new(&obj, 1).unwrap();
    let steps = p.get("decrement:1").unwrap().steps.clone();
    assert!(!run_sequence(&interp, &c, &[Piece { thread: 1, steps }]).feasible);
    let steps = p.get("decrement:0").unwrap().steps.clone();
    assert!(run_sequence(&interp, &c, &[Piece { thread: 1, steps }]).feasible);
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent_and_keeps_shape(order in prop::collection::vec(1usize..=3, 0..12)) {
        let obj = common::object("treiber");
        let e = env(&obj, "push(1),push(2),pop");
        let b = Bounds::default();
        let interp = Interp::new(&obj, &e, &b);
        let mut c = interp.initial();
        for t in order {
            if let Some((_, n)) = interp.step(&c, t).succs.into_iter().next() {
                c = n;
            }
        }
        let mut d = c.clone();
        d.canonicalize();
        prop_assert_eq!(&d, &c);
        prop_assert_eq!(d.heap.nodes.len(), c.heap.nodes.len());
    }
}

#[test]
fn replay_reproduces_every_explored_trace() {
    let obj = common::object("msq");
    let e = env(&obj, "enq(1),deq");
    let b = Bounds::default();
    let interp = Interp::new(&obj, &e, &b);
    let ts = explore(&interp, b.step_bound(2), false).traces;
    assert!(!ts.is_empty());
    for t in &ts {
        let x = interp.replay(t).unwrap();
        assert_eq!(&x.trace(), t);
        assert!(x.is_complete());
    }
}

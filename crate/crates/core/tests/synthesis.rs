mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use quotient::interpreter::{explore, Bounds, Environment, Heap, Interp};
use quotient::object_model::ObjectDef;
use quotient::synthesis::{build_automaton, holds_at, parse_pred, parse_states, LogEvent, Pred};

fn row(name: &str) -> [usize; 5] {
    let (_, s) = common::synthesize(name);
    assert_eq!(s.unknowns(), 0, "{name}");
    [s.automaton.states.len(), s.local_paths(), s.write_paths(), s.automaton.transition_count(), s.automaton.layer_count()]
}

// [PAPER] states / local / write / transitions / layers
#[test]
fn counter_counts() {
    assert_eq!(row("counter"), [2, 3, 2, 6, 5]);
}

#[test]
fn treiber_counts() {
    assert_eq!(row("treiber"), [2, 3, 2, 6, 5]);
}

#[test]
fn msq_counts() {
    assert_eq!(row("msq"), [4, 9, 3, 17, 7]);
}

#[test]
fn synthesis_is_deterministic() {
    let (_, a) = common::synthesize("treiber");
    let (_, b) = common::synthesize("treiber");
    assert_eq!(a.automaton.to_json(), b.automaton.to_json());
    assert_eq!(a.log.queries, b.log.queries);
    assert_eq!(a.log.events, b.log.events);
}

#[test]
fn log_records_every_layer() {
    let (obj, s) = common::synthesize("counter");
    let created = s.log.events.iter().filter(|e| matches!(e, LogEvent::LayerCreated { .. })).count();
    let writes = s.automaton.edges.iter().filter(|e| e.layers.iter().any(|l| l.is_write())).count();
    assert_eq!(created, writes);
    let text = s.log.render("counter");
    assert!(text.lines().count() > s.automaton.states.len());
    for st in &s.automaton.states {
        assert!(parse_pred(&obj, &st.predicate).is_ok(), "{}", st.predicate);
    }
}

#[test]
fn generated_counter_states_split_on_zero() {
    let (obj, s) = common::synthesize("counter");
    let b = Bounds::default();
    let zero = Heap { vars: vec![quotient::object_model::Value::Int(0)], nodes: vec![] };
    let three = Heap { vars: vec![quotient::object_model::Value::Int(3)], nodes: vec![] };
    let holds = |h: &Heap| -> Vec<usize> {
        s.states.iter().enumerate().filter(|(_, p)| holds_at(&obj, &b, h, p)).map(|(i, _)| i).collect()
    };
    assert_eq!(holds(&zero), s.automaton.initial);
    assert_eq!(holds(&three).len(), 1);
    assert_ne!(holds(&three), holds(&zero));
}

fn reachable(obj: &ObjectDef, envs: &[&str]) -> BTreeSet<Heap> {
    let b = Bounds::default();
    let mut out = BTreeSet::new();
    for e in envs {
        let env = Environment::parse_list(obj, e).unwrap();
        let interp = Interp::new(obj, &env, &b);
        for t in explore(&interp, b.step_bound(env.threads()), true).traces {
            for c in interp.configs(&t).unwrap() {
                out.insert(c.heap);
            }
        }
    }
    out
}

/// Every reachable heap satisfies exactly one state.
fn partition(name: &str, envs: &[&str]) {
    let (obj, s) = common::synthesize(name);
    let b = Bounds::default();
    let heaps = reachable(&obj, envs);
    assert!(heaps.len() > 1);
    for h in &heaps {
        let n = s.states.iter().filter(|p| holds_at(&obj, &b, h, p)).count();
        assert_eq!(n, 1, "{name}: {h:?}");
    }
}

#[test]
fn msq_states_partition_reachable_heaps() {
    partition("msq", &["enq(1),enq(2)", "enq(1),deq", "enq(1),adv"]);
}

#[test]
fn treiber_states_partition_reachable_heaps() {
    partition("treiber", &["push(1),push(2)", "push(1),pop,pop"]);
}

#[test]
fn user_states_are_kept_verbatim() {
    let obj = common::object("msq");
    let user = parse_states(&obj, &common::read("msq.states").unwrap()).unwrap();
    let s = build_automaton(&obj, Some(&user), &Bounds::default()).unwrap();
    assert_eq!(s.states, user);
}

#[test]
fn unsatisfiable_user_states_are_dropped_or_rejected() {
    let obj = common::object("counter");
    let user = vec![parse_pred(&obj, "ctr == 0 && !(ctr == 0)").unwrap(), parse_pred(&obj, "ctr == 0").unwrap(), parse_pred(&obj, "!(ctr == 0)").unwrap()];
    match build_automaton(&obj, Some(&user), &Bounds::default()) {
        Ok(s) => assert!(s.automaton.states.len() <= 3),
        Err(e) => assert!(!e.to_string().is_empty()),
    }
}

#[test]
fn predicates_reject_unknown_names() {
    let obj = common::object("counter");
    assert!(parse_pred(&obj, "ctr == 0").is_ok());
    assert!(parse_pred(&obj, "nope == 0").is_err());
    assert!(parse_pred(&obj, "ctr ==").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// `ctr == k` evaluated by the oracle agrees with direct comparison.
    #[test]
    fn counter_predicates_agree_with_arithmetic(v in 0i64..=7, k in 0i64..=7) {
        let obj = common::object("counter");
        let p: Pred = parse_pred(&obj, &format!("ctr == {k}")).unwrap();
        let h = Heap { vars: vec![quotient::object_model::Value::Int(v)], nodes: vec![] };
        prop_assert_eq!(holds_at(&obj, &Bounds::default(), &h, &p), v == k);
        let np = parse_pred(&obj, &format!("!(ctr == {k})")).unwrap();
        prop_assert_eq!(holds_at(&obj, &Bounds::default(), &h, &np), v != k);
    }
}

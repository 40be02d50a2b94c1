mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use quotient::equivalence::{
    check_quotient_complete, check_quotient_optimal, collect_swaps, equivalent, move_legal, rename_normalized, rename_threads,
    swap_adjacent, symmetries, Move, RenameError, Tri, TraceSpace,
};
use quotient::interpreter::{Bounds, Environment, Interp, Trace};
use quotient::layers::{CompiledAutomaton, PathTable};
use quotient::object_model::ObjectDef;

struct Sweep {
    traces: usize,
    failures: usize,
    unknown: usize,
    violations: usize,
}

/// Completeness and optimality of the synthesized automaton over `envs`,
/// with every witness re-checked move by move.
fn sweep(name: &str, envs: &[Environment], unroll: u8) -> Sweep {
    let (obj, s) = common::synthesize(name);
    let table = PathTable::new(&obj, 1).unwrap();
    let ca = CompiledAutomaton::new(&s.automaton, &table).unwrap();
    let b = Bounds { unroll, ..Bounds::default() };
    let mut out = Sweep { traces: 0, failures: 0, unknown: 0, violations: 0 };
    for env in envs {
        let interp = Interp::new(&obj, env, &b);
        let space = TraceSpace::build(&interp);
        let rep = check_quotient_complete(&space, &ca, 50_000);
        out.traces += rep.total;
        out.failures += rep.failures.len();
        out.unknown += rep.unknown;
        out.violations += check_quotient_optimal(&space, &rep.members).len();
        for (i, w) in rep.witnesses.iter().enumerate() {
            let Some(w) = w else { continue };
            replay_witness(&interp, &space.traces[i], &w.renaming, &w.moves, &space.traces[w.representative]);
            assert!(ca.member(&space.traces[w.representative]).is_some());
        }
    }
    out
}

fn replay_witness(interp: &Interp, t: &Trace, renaming: &[usize], moves: &[Move], rep: &Trace) {
    let mut cur = rename_normalized(t, renaming);
    for &mv in moves {
        let cs = interp.configs(&cur).expect("renamed traces replay");
        assert!(move_legal(interp, &cur, &cs, mv), "illegal {mv:?}");
        cur = mv.apply(&cur);
    }
    assert_eq!(&cur, rep);
}

fn counter_envs() -> (ObjectDef, Vec<Environment>) {
    let obj = common::object("counter");
    let envs = Environment::enumerate(&obj, 3, &[]);
    (obj, envs)
}

#[test]
fn counter_quotient_is_complete_and_optimal_unroll_1() {
    let (_, envs) = counter_envs();
    let r = sweep("counter", &envs, 1);
    assert!(r.traces > 0);
    assert_eq!(r.failures, 0);
    assert!(r.unknown * 100 <= r.traces);
    assert_eq!(r.violations, 0);
}

#[test]
fn counter_quotient_is_complete_and_optimal_unroll_2() {
    let (_, envs) = counter_envs();
    let r = sweep("counter", &envs, 2);
    assert_eq!(r.failures, 0);
    assert!(r.unknown * 100 <= r.traces);
    assert_eq!(r.violations, 0);
}

#[test]
fn treiber_quotient_is_complete_for_two_threads() {
    let obj = common::object("treiber");
    let envs = Environment::enumerate(&obj, 2, &[1, 2]);
    let r = sweep("treiber", &envs, 2);
    assert_eq!((r.failures, r.unknown, r.violations), (0, 0, 0));
}

#[test]
fn msq_quotient_is_complete_for_two_threads() {
    let obj = common::object("msq");
    let envs = Environment::enumerate(&obj, 2, &[1]);
    let r = sweep("msq", &envs, 1);
    assert_eq!((r.failures, r.unknown, r.violations), (0, 0, 0));
}

#[test]
fn an_empty_candidate_represents_nothing() {
    let obj = common::object("counter");
    let env = Environment::parse_list(&obj, "increment,decrement").unwrap();
    let b = Bounds::default();
    let interp = Interp::new(&obj, &env, &b);
    let space = TraceSpace::build(&interp);
    let rep = check_quotient_complete(&space, &HashSet::<Trace>::new(), 1000);
    assert_eq!(rep.failures.len(), space.len());
    assert!(rep.members.is_empty());
}

#[test]
fn the_full_trace_set_is_complete_but_not_optimal() {
    let obj = common::object("counter");
    let env = Environment::parse_list(&obj, "increment,increment").unwrap();
    let b = Bounds::default();
    let interp = Interp::new(&obj, &env, &b);
    let space = TraceSpace::build(&interp);
    let all: HashSet<Trace> = space.traces.iter().cloned().collect();
    let rep = check_quotient_complete(&space, &all, 1000);
    assert!(rep.complete());
    assert!(!check_quotient_optimal(&space, &rep.members).is_empty());
}

#[test]
fn counter_witnesses_only_exchange_commuting_steps() {
    let (obj, s) = common::synthesize("counter");
    let table = PathTable::new(&obj, 1).unwrap();
    let ca = CompiledAutomaton::new(&s.automaton, &table).unwrap();
    let env = Environment::parse_list(&obj, "increment,increment").unwrap();
    let b = Bounds::default();
    let interp = Interp::new(&obj, &env, &b);
    let space = TraceSpace::build(&interp);
    let rep = check_quotient_complete(&space, &ca, 1000);
    let swaps = collect_swaps(&space, &rep);
    assert!(!swaps.is_empty());
    assert!(swaps.iter().all(|p| !p.left.is_invoke() && !p.right.is_invoke()));
}

#[test]
fn symmetric_environments_have_all_permutations() {
    let obj = common::object("counter");
    let b = Bounds::default();
    let env = Environment::parse_list(&obj, "increment,increment,decrement").unwrap();
    let interp = Interp::new(&obj, &env, &b);
    let sy = symmetries(&interp);
    assert_eq!(sy.len(), 2);
    assert_eq!(sy[0], vec![1, 2, 3]);
}

#[test]
fn renaming_must_be_a_bijection() {
    let obj = common::object("counter");
    let env = Environment::parse_list(&obj, "increment,increment").unwrap();
    let b = Bounds::default();
    let interp = Interp::new(&obj, &env, &b);
    let t = TraceSpace::build(&interp).traces.swap_remove(0);
    let bad = [(1, 1), (2, 1)].into_iter().collect();
    assert_eq!(rename_threads(&t, &bad), Err(RenameError::NotBijective));
    let partial = [(1, 2)].into_iter().collect();
    assert_eq!(rename_threads(&t, &partial), Err(RenameError::Partial(2)));
    let flip = [(1, 2), (2, 1)].into_iter().collect();
    let r = rename_threads(&rename_threads(&t, &flip).unwrap(), &flip).unwrap();
    assert_eq!(r, t);
}

proptest! {
    #[test]
    fn move_track_follows_apply(n in 2usize..12, from in 0usize..12, to in 0usize..12) {
        let (from, to) = (from % n, to % n);
        let xs: Vec<usize> = (0..n).collect();
        let mv = Move { from, to };
        let ys = mv.apply(&xs);
        for p in 0..n {
            prop_assert_eq!(ys[mv.track(p)], xs[p]);
        }
        prop_assert_eq!(mv.inverse().apply(&ys), xs);
    }

    #[test]
    fn legal_swaps_are_involutions(k in 0usize..1000, i in 0usize..32) {
        let obj = common::object("treiber");
        let env = Environment::parse_list(&obj, "push(1),pop").unwrap();
        let b = Bounds::default();
        let interp = Interp::new(&obj, &env, &b);
        let space = TraceSpace::build(&interp);
        let t = &space.traces[k % space.len()];
        let e = interp.replay(t).unwrap();
        let i = i % (t.len() - 1);
        if let Ok(Some(e2)) = swap_adjacent(&interp, &e, i) {
            prop_assert_eq!(e2.last(), e.last());
            let back = swap_adjacent(&interp, &e2, i).unwrap().unwrap();
            prop_assert_eq!(back.trace(), e.trace());
            prop_assert_eq!(equivalent(&interp, &e, &e2, 100), Tri::Yes);
        }
    }
}

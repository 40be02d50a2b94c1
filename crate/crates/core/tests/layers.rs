mod common;

use common::canon::canonicality;

use quotient::layers::{
    check_wpc_lpc, interpret_member, layer_to_expr, validate_automaton, EdgeKind, Layer, LayerAutomaton, PathTable, Violation,
    WpcBounds,
};

#[test]
fn counter_write_layers_are_canonical() {
    let (obj, s) = common::synthesize("counter");
    let (ok, rejected, bad) = canonicality(&obj, &s.automaton);
    assert!(bad.is_empty(), "{bad:?}");
    // [DERIVED] one layer with one reader, two with two: per layer k = 0, 1, 2
    // gives 3 and 1 + 2 + 3 canonical traces, and one transposition per
    // trace with two readers
    assert_eq!(ok, 3 + 6 + 6);
    assert_eq!(rejected, 1 + 3 + 3);
}

#[test]
fn msq_write_layers_are_canonical() {
    let (obj, s) = common::synthesize("msq");
    let (ok, rejected, bad) = canonicality(&obj, &s.automaton);
    assert!(bad.is_empty(), "{bad:?}");
    assert!(ok > 0 && rejected > 0);
}

#[test]
fn local_layer_repetitions_are_members() {
    let obj = common::object("counter");
    let table = PathTable::new(&obj, 1).unwrap();
    let l = Layer::Local { path: "decrement:0".into() };
    let expr = layer_to_expr(&table, &l).unwrap();
    for n in 0..4 {
        let t = table.canonical_trace(&l, &[n]).unwrap();
        assert!(interpret_member(&t, &expr).is_some(), "{n} repetitions");
    }
}

#[test]
fn golden_counter_automaton_is_isomorphic() {
    let (_, s) = common::synthesize("counter");
    let golden = LayerAutomaton::from_json(&common::read("golden/counter.automaton.json").unwrap()).unwrap();
    assert!(s.automaton.isomorphism(&golden).is_some(), "{}", s.automaton.to_json());
    let mut broken = golden.clone();
    broken.edges.pop();
    assert!(s.automaton.isomorphism(&broken).is_none());
}

#[test]
fn automaton_json_roundtrips() {
    let (_, s) = common::synthesize("counter");
    let back = LayerAutomaton::from_json(&s.automaton.to_json()).unwrap();
    assert_eq!(back, s.automaton);
    assert_eq!(back.to_json(), s.automaton.to_json());
}

#[test]
fn structural_violations_are_reported() {
    let (obj, s) = common::synthesize("counter");
    let table = PathTable::new(&obj, 1).unwrap();
    assert!(validate_automaton(&s.automaton, Some(&table)).is_empty());

    let mut a = s.automaton.clone();
    let lp = a.edges.iter().position(|e| e.kind == EdgeKind::SelfLoop).unwrap();
    a.edges.push(a.edges[lp].clone());
    assert!(validate_automaton(&a, None).contains(&Violation::DuplicateSelfLoop(a.edges[lp].from)));

    let mut a = s.automaton.clone();
    let w = a.edges.iter().position(|e| e.kind == EdgeKind::Write).unwrap();
    let extra = a.edges[w].layers[0].clone();
    a.edges[w].layers.push(extra);
    assert!(validate_automaton(&a, None).contains(&Violation::MultiWriteEdge(w)));

    let mut a = s.automaton.clone();
    a.initial.clear();
    assert!(validate_automaton(&a, None).contains(&Violation::NoInitial));

    let mut a = s.automaton.clone();
    a.edges[w].layers = vec![Layer::Write { write_path: "decrement:0".into(), readers: vec![] }];
    assert!(validate_automaton(&a, Some(&table)).iter().any(|v| matches!(v, Violation::BadLayer(..))));
}

#[test]
fn counter_layers_satisfy_wpc_and_lpc() {
    let (obj, s) = common::synthesize("counter");
    let table = PathTable::new(&obj, 1).unwrap();
    let layers: Vec<Layer> = s.automaton.edges.iter().flat_map(|e| e.layers.clone()).collect();
    let r = check_wpc_lpc(&obj, &table, &layers, &WpcBounds::default());
    assert!(r.passed(), "{}", r.render());
    assert!(r.wpc.checked > 0 && r.lpc.checked > 0);
}

#[test]
fn dropping_a_layer_uncovers_its_primitives() {
    let (obj, s) = common::synthesize("counter");
    let table = PathTable::new(&obj, 1).unwrap();
    let layers: Vec<Layer> =
        s.automaton.edges.iter().flat_map(|e| e.layers.clone()).filter(|l| !matches!(l, Layer::Write { write_path, .. } if write_path == "decrement:1")).collect();
    let r = check_wpc_lpc(&obj, &table, &layers, &WpcBounds::default());
    assert!(!r.passed());
}


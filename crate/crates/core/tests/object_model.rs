mod common;

use proptest::prelude::*;
use quotient::object_model::{enumerate_all_paths, enumerate_full_paths, parse_object, print_object, ParseError, PathError, PathKind};

fn counts(name: &str, unroll: u8) -> (usize, usize) {
    let obj = common::object(name);
    let ps = enumerate_all_paths(&obj, unroll).unwrap();
    let w = ps.iter().filter(|p| p.kind == PathKind::Write).count();
    (ps.len() - w, w)
}

#[test]
fn path_counts_match_the_benchmarks() {
    // [PAPER] local / write path counts
    assert_eq!(counts("counter", 1), (3, 2));
    assert_eq!(counts("treiber", 1), (3, 2));
    assert_eq!(counts("msq", 1), (9, 3));
    assert_eq!(counts("listset", 1), (6, 2));
    assert_eq!(counts("straightline", 1), (0, 1));
}

#[test]
fn paths_are_single_loop_iterations() {
    // a path ends at the loop head, so unrolling does not add paths
    for name in ["counter", "treiber", "msq", "straightline"] {
        assert_eq!(counts(name, 2), counts(name, 1), "{name}");
    }
}

#[test]
fn path_ids_are_method_and_index() {
    let obj = common::object("counter");
    let ids: Vec<String> = enumerate_full_paths(&obj, "decrement", 1).unwrap().iter().map(|p| p.id(&obj)).collect();
    assert_eq!(ids, ["decrement:0", "decrement:1", "decrement:2"]);
    assert_eq!(enumerate_full_paths(&obj, "nope", 1), Err(PathError::UnknownMethod("nope".into())));
    assert_eq!(enumerate_full_paths(&obj, "increment", 0), Err(PathError::ZeroUnroll));
}

#[test]
fn corpus_objects_print_to_a_fixpoint() {
    for name in ["counter", "treiber", "msq", "listset", "straightline"] {
        let obj = common::object(name);
        let text = print_object(&obj);
        let back = parse_object(&text).unwrap();
        assert_eq!(back, obj, "{name}");
        assert_eq!(print_object(&back), text, "{name}");
    }
}

#[test]
fn malformed_sources_are_rejected() {
    let bad = [
        ("object o\nshared x: int = 0\nmethod m() returns int {\n  x := ;\n  return 0;\n}\n", "syntax"),
        ("object o\nshared x: int = 0\nmethod m() returns int {\n  return y;\n}\n", "undeclared"),
        ("object o\nshared x: int = 0\nmethod m() returns int {\n  x := 1;\n}\n", "semantic"),
    ];
    for (src, kind) in bad {
        let e = parse_object(src).unwrap_err();
        let got = match e {
            ParseError::Syntax { .. } => "syntax",
            ParseError::Undeclared { .. } => "undeclared",
            ParseError::Arity { .. } => "arity",
            ParseError::Semantic(_) => "semantic",
        };
        assert_eq!(got, kind, "{src}: {e}");
    }
}

#[test]
fn syntax_errors_carry_positions() {
    let e = parse_object("object o\nshared x: int = 0\nmethod m() returns int {\n  x := ;\n  return 0;\n}\n").unwrap_err();
    let ParseError::Syntax { line, .. } = e else { panic!("{e}") };
    assert_eq!(line, 4);
}

fn stmt(depth: u32) -> BoxedStrategy<String> {
    let leaf = prop_oneof![
        Just("a := x;".to_string()),
        Just("b := y;".to_string()),
        (0..4i64).prop_map(|k| format!("b := a + {k};")),
        Just("x := b;".to_string()),
        Just("y := a - 1;".to_string()),
        Just("return a;".to_string()),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let block = move || prop::collection::vec(stmt(depth - 1), 0..3).prop_map(|v| v.join("\n"));
    prop_oneof![
        3 => leaf,
        1 => (0..3i64, block(), block()).prop_map(|(k, t, e)| format!("if (a == {k}) {{\n{t}\n}} else {{\n{e}\n}}")),
        1 => block().prop_map(|b| format!("cas(x, a, b) {{\n{b}\n}}")),
        1 => block().prop_map(|b| format!("loop {{\n{b}\ncas(y, b, a) {{\nreturn b;\n}}\n}}")),
    ]
    .boxed()
}

fn object_src() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::collection::vec(stmt(2), 0..4), 1..3).prop_map(|methods| {
        let mut s = "object gen\nshared x: int = 0\nshared y: int = 1\n".to_string();
        for (i, body) in methods.iter().enumerate() {
            s += &format!("\nmethod m{i}() returns int {{\na := x;\nb := y;\n{}\nreturn b;\n}}\n", body.join("\n"));
        }
        s
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(src in object_src()) {
        let obj = parse_object(&src).unwrap();
        let text = print_object(&obj);
        prop_assert_eq!(&parse_object(&text).unwrap(), &obj);
        prop_assert_eq!(print_object(&parse_object(&text).unwrap()), text);
    }

    #[test]
    fn every_path_is_classified_by_its_writes(src in object_src()) {
        let obj = parse_object(&src).unwrap();
        for p in enumerate_all_paths(&obj, 1).unwrap() {
            prop_assert!(!p.steps.is_empty());
            prop_assert_eq!(p.kind, quotient::object_model::classify_path(&p, &obj));
        }
    }
}

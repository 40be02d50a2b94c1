#![allow(dead_code)]

pub mod canon;
pub mod wp;

use quotient::interpreter::Bounds;
use quotient::object_model::{parse_object, ObjectDef};
use quotient::synthesis::{build_automaton, parse_states, Synthesis};

pub fn corpus_path(file: &str) -> String {
    format!("{}/../../corpus/{file}", env!("CARGO_MANIFEST_DIR"))
}

pub fn read(file: &str) -> Option<String> {
    std::fs::read_to_string(corpus_path(file)).ok()
}

pub fn object(name: &str) -> ObjectDef {
    parse_object(&read(&format!("{name}.qo")).unwrap()).unwrap()
}

/// Synthesis with the corpus states and bounds files when present.
pub fn synthesize(name: &str) -> (ObjectDef, Synthesis) {
    let obj = object(name);
    let user = read(&format!("{name}.states")).map(|s| parse_states(&obj, &s).unwrap());
    let bounds: Bounds = read(&format!("{name}.bounds.json")).map(|s| serde_json::from_str(&s).unwrap()).unwrap_or_default();
    let s = build_automaton(&obj, user.as_deref(), &bounds).unwrap();
    (obj, s)
}

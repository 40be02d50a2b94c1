//! Commutativity-quotient workbench: parse small lock-free objects, enumerate
//! their paths, synthesize layer automata and check them against bounded
//! explicit-state exploration.

pub mod object_model;
pub mod interpreter;
pub mod layers;
pub mod synthesis;
pub mod equivalence;
pub mod linearizability;

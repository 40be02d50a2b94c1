//! Quotient expressions, layers, layer automata and membership.

mod automaton;
mod expr;
mod member;
mod wpc;

pub use automaton::{Edge, EdgeKind, Layer, LayerAutomaton, Reader, StateDef};
pub use expr::{
    interpret_member, invoke_prefix, render_derivation, trace_of_words, Derivation, QuotientExpr, Sym, Word, WordMatch,
};
pub use member::{
    automaton_member, edge_expr, layer_to_expr, support, validate_automaton, CompiledAutomaton, LayerError, PathTable,
    Run, Support, Violation,
};
pub use wpc::{check_wpc_lpc, WpcBounds, WpcReport};

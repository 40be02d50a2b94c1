use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::interpreter::{Event, Label};
use crate::layers::{PathTable, Run, WordMatch};
use crate::object_model::{ObjectDef, Value};

use super::spec::OperationSymbol;

/// Step index within a path at which the path's invocation takes effect.
/// Write layers are keyed by write path or by edge; read-only paths by path.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpMapping {
    pub layers: BTreeMap<String, usize>,
    pub edges: BTreeMap<usize, usize>,
    pub readonly: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("thread t{thread} returns through `{path}`, which has no linearization point")]
    Missing { thread: usize, path: String },
    #[error("linearization point of t{0} lies outside its invocation")]
    OutOfSpan(usize),
    #[error("thread t{0} never returns")]
    Pending(usize),
}

pub fn parse_lp(src: &str) -> Result<LpMapping, LpError> {
    let mut m = LpMapping::default();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let bad = || LpError::Syntax(i + 1, format!("expected `layer|readonly <id> lp = <index>`, found `{line}`"));
        let [kind, id, "lp", "=", n] = toks.as_slice() else { return Err(bad()) };
        let n: usize = n.parse().map_err(|_| bad())?;
        match *kind {
            "layer" => match id.parse::<usize>() {
                Ok(e) => {
                    m.edges.insert(e, n);
                }
                Err(_) => {
                    m.layers.insert(id.to_string(), n);
                }
            },
            "readonly" => {
                m.readonly.insert(id.to_string(), n);
            }
            _ => return Err(bad()),
        }
    }
    Ok(m)
}

pub fn value_int(v: Value) -> i64 {
    match v {
        Value::Int(n) => n,
        Value::Ref(r) => r as i64 + 1,
        Value::Null | Value::Undef => 0,
    }
}

/// A completed invocation: its symbol and the positions of its invocation
/// and return labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    pub thread: usize,
    pub op: OperationSymbol,
    pub invoke: usize,
    pub ret: usize,
}

/// Completed invocations of a trace, by thread id.
pub fn operations(obj: &ObjectDef, t: &[Event]) -> Vec<Operation> {
    let mut inv: BTreeMap<usize, (usize, usize, Vec<i64>)> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, e) in t.iter().enumerate() {
        match &e.label {
            Label::Invoke { method, args } => {
                inv.insert(e.thread, (i, *method, args.iter().map(|v| value_int(*v)).collect()));
            }
            Label::Step { method, prim, values } if obj.methods[*method].prims[*prim].is_return() => {
                if let Some((at, m, args)) = inv.remove(&e.thread) {
                    let rets = values.iter().map(|v| value_int(*v)).collect();
                    out.push(Operation {
                        thread: e.thread,
                        op: OperationSymbol { method: obj.methods[m].name.clone(), args, rets },
                        invoke: at,
                        ret: i,
                    });
                }
            }
            Label::Step { .. } => {}
        }
    }
    out.sort_by_key(|o| o.thread);
    out
}

fn is_return(obj: &ObjectDef, e: &Event) -> bool {
    match &e.label {
        Label::Step { method, prim, .. } => obj.methods[*method].prims[*prim].is_return(),
        Label::Invoke { .. } => false,
    }
}

/// Trace position of every returning thread's linearization point, read off
/// the layer decomposition of a member trace.
pub fn lp_positions(
    obj: &ObjectDef,
    t: &[Event],
    run: &Run,
    table: &PathTable,
    m: &LpMapping,
) -> Result<BTreeMap<usize, usize>, LpError> {
    let mut out = BTreeMap::new();
    let words: Vec<(usize, &WordMatch)> =
        run.steps.iter().flat_map(|(e, ws)| ws.iter().map(move |w| (*e, w))).collect();
    for (k, &(edge, w)) in words.iter().enumerate() {
        let last = w.start + w.word.syms.len() - 1;
        if !is_return(obj, &t[last]) {
            continue;
        }
        let path = &w.word.path;
        let write = table.get(path).is_some_and(|p| p.is_write());
        let idx = if write {
            m.edges.get(&edge).or(m.layers.get(path))
        } else {
            m.readonly.get(path)
        };
        let Some(&idx) = idx else { return Err(LpError::Missing { thread: w.thread, path: path.clone() }) };
        let pos = if idx >= w.word.offset {
            (idx < w.word.offset + w.word.syms.len()).then(|| w.start + idx - w.word.offset)
        } else {
            // Split reader: the prefix is the thread's latest earlier word
            // of the same path.
            words[..k]
                .iter()
                .rev()
                .find(|(_, p)| p.thread == w.thread && p.word.path == *path && p.word.offset == 0)
                .filter(|(_, p)| idx < p.word.syms.len())
                .map(|(_, p)| p.start + idx)
        };
        let pos = pos.ok_or(LpError::OutOfSpan(w.thread))?;
        out.insert(w.thread, pos);
    }
    for op in operations(obj, t) {
        match out.get(&op.thread) {
            Some(&p) if op.invoke < p && p < op.ret => {}
            Some(_) => return Err(LpError::OutOfSpan(op.thread)),
            None => return Err(LpError::Pending(op.thread)),
        }
    }
    Ok(out)
}

/// Operations ordered by linearization point.
pub fn lp_linearize(obj: &ObjectDef, t: &[Event], lps: &BTreeMap<usize, usize>) -> Result<Vec<OperationSymbol>, LpError> {
    let mut ops = Vec::new();
    for o in operations(obj, t) {
        let p = *lps.get(&o.thread).ok_or(LpError::Pending(o.thread))?;
        ops.push((p, o.op));
    }
    ops.sort_by_key(|x| x.0);
    Ok(ops.into_iter().map(|x| x.1).collect())
}

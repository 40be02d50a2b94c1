//! Layer-automaton synthesis: preconditions, states, write layers with
//! their invalidated readers, and self-loops.

mod log;
pub mod oracle;
pub mod predicate;
pub mod wp;

pub use log::{LogEvent, QueryPurpose, QueryRecord, SynthesisLog};
pub use oracle::{feasible, holds_at, Chooser, ConcreteStore, Query, QueryResult, Verdict, Witness, World};
pub use predicate::{eval_pred, parse_pred, parse_states, simplify, Atom, Cx, Pred, PredStore, Role, Term};
pub use wp::wp;

use std::collections::HashMap;
use std::time::Instant;

use crate::interpreter::{Bounds, Heap};
use crate::layers::{Edge, EdgeKind, Layer, LayerAutomaton, Reader, StateDef};
use crate::object_model::*;

/// Literal budget: at most this many conjunction candidates.
pub const MAX_COMBINATIONS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Paths(#[from] PathError),
    #[error("{0} literals give more than {MAX_COMBINATIONS} state candidates")]
    TooManyLiterals(usize),
    #[error("no satisfiable state")]
    NoStates,
}

/// Runs queries and keeps the tally.
pub struct Oracle<'a> {
    pub obj: &'a ObjectDef,
    pub bounds: &'a Bounds,
    pub log: SynthesisLog,
}

impl<'a> Oracle<'a> {
    pub fn new(obj: &'a ObjectDef, bounds: &'a Bounds) -> Self {
        Oracle { obj, bounds, log: SynthesisLog::default() }
    }

    pub fn ask(&mut self, purpose: QueryPurpose, q: &Query) -> QueryResult {
        let r = feasible(self.obj, self.bounds, q);
        self.log.queries.push(QueryRecord { purpose, verdict: r.verdict });
        r
    }

    fn sat(&mut self, purpose: QueryPurpose, p: &Pred) -> bool {
        let q = Query { pre: p, threads: vec![], steps: vec![], post: None };
        self.ask(purpose, &q).verdict == Verdict::Feasible
    }

    /// `a` and `b` agree on every bounded state.
    fn equivalent(&mut self, a: &Pred, b: &Pred) -> bool {
        !self.sat(QueryPurpose::State, &Pred::and(vec![a.clone(), Pred::not(b.clone())]))
            && !self.sat(QueryPurpose::State, &Pred::and(vec![Pred::not(a.clone()), b.clone()]))
    }
}

/// Guard-free precondition of a full path.
pub fn path_pre(obj: &ObjectDef, p: &Path) -> Pred {
    let cx = Cx { obj, method: Some(&obj.methods[p.method]) };
    simplify(&wp(obj, p.method, &p.steps, &Pred::True).strip_guards(), &cx)
}

/// States and initial states. User states are taken verbatim.
pub fn generate_states(
    o: &mut Oracle,
    paths: &[Path],
    user: Option<&[Pred]>,
) -> Result<(Vec<Pred>, Vec<usize>), SynthesisError> {
    let obj = o.obj;
    let states: Vec<Pred> = match user {
        Some(us) => us.to_vec(),
        None => {
            let mut lits: Vec<Pred> = Vec::new();
            for p in paths {
                let pre = path_pre(obj, p);
                if pre.is_trivial() || pre.mentions_input() {
                    continue;
                }
                let lit = pre.positive();
                let mut dup = false;
                for l in lits.clone() {
                    if o.equivalent(&lit, &l) || o.equivalent(&lit, &Pred::not(l.clone())) {
                        dup = true;
                        break;
                    }
                }
                if !dup {
                    lits.push(lit);
                }
            }
            if 1usize.checked_shl(lits.len() as u32).is_none_or(|n| n > MAX_COMBINATIONS) {
                return Err(SynthesisError::TooManyLiterals(lits.len()));
            }
            let mut found: Vec<(String, Pred)> = Vec::new();
            for bits in 0..(1usize << lits.len()) {
                let conj: Vec<Pred> = lits
                    .iter()
                    .enumerate()
                    .map(|(i, l)| if bits >> (lits.len() - 1 - i) & 1 == 1 { Pred::not(l.clone()) } else { l.clone() })
                    .collect();
                let q = if conj.len() == 1 { conj[0].clone() } else { Pred::and(conj) };
                if o.sat(QueryPurpose::State, &q) {
                    found.push((q.render(obj), q));
                }
            }
            if lits.is_empty() {
                found.push(("true".into(), Pred::True));
            }
            found.sort_by(|a, b| a.0.cmp(&b.0));
            found.into_iter().map(|(_, p)| p).collect()
        }
    };
    if states.is_empty() {
        return Err(SynthesisError::NoStates);
    }
    let init = Heap::initial(obj);
    let initial = (0..states.len()).filter(|&i| holds_at(obj, o.bounds, &init, &states[i])).collect();
    Ok((states, initial))
}

/// A write layer found from one state.
#[derive(Clone, Debug)]
pub struct Discovered {
    pub from: usize,
    pub to: Vec<usize>,
    pub layer: Layer,
}

fn path_ref(obj: &ObjectDef, p: &Path) -> String {
    p.id(obj)
}

/// Label of a write path in logs: its id plus its first atomic step.
pub fn write_name(obj: &ObjectDef, p: &Path) -> String {
    let m = &obj.methods[p.method];
    let brief = p.steps.iter().find_map(|s| match &m.prims[*s] {
        Prim::Arw(ops) => Some(obj.names().arw_brief(m, ops)),
        _ => None,
    });
    format!("{}{}", p.id(obj), brief.unwrap_or_default())
}

struct Ctx<'o, 'a> {
    o: &'o mut Oracle<'a>,
    states: &'o [Pred],
    names: Vec<String>,
    std: HashMap<(usize, usize), bool>,
}

impl Ctx<'_, '_> {
    /// Local path `l` runs alone from some state of `q`.
    fn std_enabled(&mut self, q: usize, l: &Path, li: usize) -> bool {
        if let Some(v) = self.std.get(&(q, li)) {
            return *v;
        }
        let query = Query {
            pre: &self.states[q],
            threads: vec![(l.method, Role::Reader)],
            steps: l.steps.iter().map(|s| (0, *s)).collect(),
            post: None,
        };
        let v = self.o.ask(QueryPurpose::Standalone, &query).verdict == Verdict::Feasible;
        self.std.insert((q, li), v);
        v
    }
}

/// Write layers and their edges, in `(state, write path, post state)` order.
pub fn discover_layers(o: &mut Oracle, states: &[Pred], paths: &[Path]) -> Vec<Discovered> {
    let obj = o.obj;
    let names: Vec<String> = states.iter().map(|p| p.render(obj)).collect();
    let mut cx = Ctx { o, states, names, std: HashMap::new() };
    let locals: Vec<&Path> = paths.iter().filter(|p| !p.is_write()).collect();
    let writes: Vec<&Path> = paths.iter().filter(|p| p.is_write()).collect();
    let mut out = Vec::new();
    for q in 0..states.len() {
        for w in &writes {
            let wname = write_name(obj, w);
            let enabled_q = Query {
                pre: &states[q],
                threads: vec![(w.method, Role::Writer)],
                steps: w.steps.iter().map(|s| (0, *s)).collect(),
                post: None,
            };
            let enabled = cx.o.ask(QueryPurpose::Enabled, &enabled_q).verdict == Verdict::Feasible;
            cx.o.log.events.push(LogEvent::Enabled {
                state: q,
                pred: cx.names[q].clone(),
                write: wname.clone(),
                enabled,
            });
            if !enabled {
                continue;
            }
            let mut posts = Vec::new();
            for q2 in 0..states.len() {
                let query = Query { post: Some(&states[q2]), ..enabled_q.clone() };
                let ok = cx.o.ask(QueryPurpose::WritePost, &query).verdict == Verdict::Feasible;
                cx.o.log.events.push(LogEvent::WritePost {
                    from: q,
                    from_pred: cx.names[q].clone(),
                    to: q2,
                    to_pred: cx.names[q2].clone(),
                    write: w.id(obj),
                    feasible: ok,
                });
                if ok {
                    posts.push(q2);
                }
            }
            if posts.is_empty() {
                continue;
            }
            let mut readers = Vec::new();
            let mut found = Vec::new();
            let mut missed = Vec::new();
            let mut skipped = Vec::new();
            for (li, l) in locals.iter().enumerate() {
                let alone = cx.std_enabled(q, l, li) || posts.iter().any(|&q2| cx.std_enabled(q2, l, li));
                if alone {
                    skipped.push(l.id(obj));
                    continue;
                }
                let mut hit = None;
                for split in (1..l.steps.len()).rev() {
                    let mut steps: Vec<(usize, PrimId)> = l.steps[..split].iter().map(|s| (0, *s)).collect();
                    steps.extend(w.steps.iter().map(|s| (1, *s)));
                    steps.extend(l.steps[split..].iter().map(|s| (0, *s)));
                    let query = Query {
                        pre: &states[q],
                        threads: vec![(l.method, Role::Reader), (w.method, Role::Writer)],
                        steps,
                        post: None,
                    };
                    if cx.o.ask(QueryPurpose::Reader, &query).verdict == Verdict::Feasible {
                        hit = Some(split);
                        break;
                    }
                }
                match hit {
                    Some(split) => {
                        readers.push(Reader { path: path_ref(obj, l), split });
                        found.push((l.id(obj), l.steps.len() - split));
                    }
                    None => missed.push(l.id(obj)),
                }
            }
            let layer = Layer::Write { write_path: path_ref(obj, w), readers };
            for &q2 in &posts {
                cx.o.log.events.push(LogEvent::LayerCreated {
                    from: q,
                    to: q2,
                    write: wname.clone(),
                    readers: found.clone(),
                    missed: missed.clone(),
                    skipped: skipped.clone(),
                    total: locals.len(),
                });
            }
            out.push(Discovered { from: q, to: posts, layer });
        }
    }
    out
}

/// One self-loop per state: local paths that run alone from the state,
/// plus readers of the write layers leaving it, in path order.
pub fn discover_self_loops(o: &mut Oracle, states: &[Pred], paths: &[Path], found: &[Discovered]) -> Vec<Edge> {
    let obj = o.obj;
    let mut edges = Vec::new();
    let locals: Vec<&Path> = paths.iter().filter(|p| !p.is_write()).collect();
    for (q, qp) in states.iter().enumerate() {
        let mut ids = Vec::new();
        for l in &locals {
            let query =
                Query { pre: qp, threads: vec![(l.method, Role::Reader)], steps: l.steps.iter().map(|s| (0, *s)).collect(), post: None };
            let alone = o.ask(QueryPurpose::Standalone, &query).verdict == Verdict::Feasible;
            let id = l.id(obj);
            let reads = found.iter().filter(|d| d.from == q).any(|d| match &d.layer {
                Layer::Write { readers, .. } => readers.iter().any(|r| r.path == id),
                Layer::Local { .. } => false,
            });
            if alone || reads {
                ids.push(id);
            }
        }
        o.log.events.push(LogEvent::SelfLoop { state: q, layers: ids.clone() });
        if !ids.is_empty() {
            edges.push(Edge {
                from: q,
                to: q,
                kind: EdgeKind::SelfLoop,
                layers: ids.into_iter().map(|path| Layer::Local { path }).collect(),
            });
        }
    }
    edges
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub automaton: LayerAutomaton,
    pub log: SynthesisLog,
    pub states: Vec<Pred>,
    pub paths: Vec<Path>,
}

impl Synthesis {
    pub fn local_paths(&self) -> usize {
        self.paths.iter().filter(|p| !p.is_write()).count()
    }

    pub fn write_paths(&self) -> usize {
        self.paths.iter().filter(|p| p.is_write()).count()
    }

    pub fn unknowns(&self) -> usize {
        self.log.queries.iter().filter(|q| q.verdict == Verdict::Unknown).count()
    }
}

pub fn build_automaton(obj: &ObjectDef, user: Option<&[Pred]>, bounds: &Bounds) -> Result<Synthesis, SynthesisError> {
    let start = Instant::now();
    let paths = enumerate_all_paths(obj, bounds.unroll)?;
    let mut o = Oracle::new(obj, bounds);
    let (states, initial) = generate_states(&mut o, &paths, user)?;
    o.log.states = states.iter().map(|p| p.render(obj)).collect();
    o.log.initial = initial.clone();
    let found = discover_layers(&mut o, &states, &paths);
    let loops = discover_self_loops(&mut o, &states, &paths, &found);
    let mut edges = Vec::new();
    for d in &found {
        for &to in &d.to {
            edges.push(Edge { from: d.from, to, kind: EdgeKind::Write, layers: vec![d.layer.clone()] });
        }
    }
    edges.extend(loops);
    let automaton = LayerAutomaton {
        states: states.iter().enumerate().map(|(id, p)| StateDef { id, predicate: p.render(obj) }).collect(),
        initial,
        edges,
    };
    o.log.elapsed = start.elapsed();
    o.log.layers = automaton.layer_count();
    Ok(Synthesis { automaton, log: o.log, states, paths })
}

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::interpreter::{Event, Trace};
use crate::object_model::{enumerate_all_paths, ObjectDef, Path, PathError, PathKind};

use super::automaton::{EdgeKind, Layer, LayerAutomaton};
use super::expr::{invoke_prefix, trace_of_words, Derivation, Matcher, QuotientExpr, Word, WordMatch};

/// Paths of an object by textual id.
#[derive(Clone, Debug)]
pub struct PathTable {
    pub paths: Vec<Path>,
    ids: HashMap<String, usize>,
}

impl PathTable {
    pub fn new(obj: &ObjectDef, unroll: u8) -> Result<PathTable, PathError> {
        let paths = enumerate_all_paths(obj, unroll.max(1))?;
        let ids = paths.iter().enumerate().map(|(i, p)| (p.id(obj), i)).collect();
        Ok(PathTable { paths, ids })
    }

    pub fn get(&self, id: &str) -> Option<&Path> {
        self.ids.get(id).map(|&i| &self.paths[i])
    }

    /// Canonical interpretation of a layer. A write layer takes `counts[i]`
    /// instances of reader `i`: prefixes outermost reader first on increasing
    /// threads, the writer on the next thread, then the suffixes in reverse.
    /// A local layer takes `counts[0]` repetitions.
    pub fn canonical_trace(&self, l: &Layer, counts: &[usize]) -> Result<Trace, LayerError> {
        let mut words: Vec<(usize, Word)> = Vec::new();
        let mut invoked = Vec::new();
        let mut next = 1;
        let mut fresh = |method| {
            invoked.push((next, method, Vec::new()));
            next += 1;
            next - 1
        };
        match l {
            Layer::Local { path } => {
                let p = check_kind(self, path, PathKind::Local)?;
                for _ in 0..counts.first().copied().unwrap_or(0) {
                    let t = fresh(p.method);
                    words.push((t, self.word(path, 0..p.steps.len())?));
                }
            }
            Layer::Write { write_path, readers } => {
                let mut posts = Vec::new();
                for (r, &n) in readers.iter().zip(counts) {
                    let p = check_kind(self, &r.path, PathKind::Local)?;
                    for _ in 0..n {
                        let t = fresh(p.method);
                        words.push((t, self.word(&r.path, 0..r.split)?));
                        posts.push((t, self.word(&r.path, r.split..p.steps.len())?));
                    }
                }
                let w = check_kind(self, write_path, PathKind::Write)?;
                let t = fresh(w.method);
                words.push((t, self.word(write_path, 0..w.steps.len())?));
                words.extend(posts.into_iter().rev());
            }
        }
        let refs: Vec<(usize, &Word)> = words.iter().map(|(t, w)| (*t, w)).collect();
        Ok(trace_of_words(&refs, &invoked))
    }

    fn word(&self, id: &str, range: std::ops::Range<usize>) -> Result<Word, LayerError> {
        let p = self.get(id).ok_or_else(|| LayerError::UnknownPath(id.to_string()))?;
        if range.end > p.steps.len() {
            return Err(LayerError::BadSplit(id.to_string(), range.start));
        }
        Ok(Word::new(id, p.method, &p.steps[range.clone()], range.start))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayerError {
    #[error("unknown path `{0}`")]
    UnknownPath(String),
    #[error("path `{0}` has the wrong kind for its position")]
    WrongKind(String),
    #[error("split {1} is not inside path `{0}`")]
    BadSplit(String, usize),
}

fn check_kind<'t>(table: &'t PathTable, id: &str, kind: PathKind) -> Result<&'t Path, LayerError> {
    let p = table.get(id).ok_or_else(|| LayerError::UnknownPath(id.to_string()))?;
    if p.kind != kind {
        return Err(LayerError::WrongKind(id.to_string()));
    }
    Ok(p)
}

/// Local layers become a starred word. Write layers nest one balanced node
/// per reader around the write word, first reader outermost.
pub fn layer_to_expr(table: &PathTable, l: &Layer) -> Result<QuotientExpr, LayerError> {
    match l {
        Layer::Local { path } => {
            let p = check_kind(table, path, PathKind::Local)?;
            Ok(QuotientExpr::star(QuotientExpr::Word(table.word(path, 0..p.steps.len())?)))
        }
        Layer::Write { write_path, readers } => {
            let w = check_kind(table, write_path, PathKind::Write)?;
            let mut e = QuotientExpr::Word(table.word(write_path, 0..w.steps.len())?);
            for (k, r) in readers.iter().enumerate().rev() {
                let p = check_kind(table, &r.path, PathKind::Local)?;
                if r.split == 0 || r.split >= p.steps.len() {
                    return Err(LayerError::BadSplit(r.path.clone(), r.split));
                }
                e = QuotientExpr::Balanced {
                    pre: table.word(&r.path, 0..r.split)?,
                    inner: Box::new(e),
                    post: table.word(&r.path, r.split..p.steps.len())?,
                    exp: k as u32 + 1,
                };
            }
            Ok(e)
        }
    }
}

/// Two-thread concretizations of a layer: `(thread, word)` sequences with the
/// reader on thread 1 and the writer on thread 2.
pub type Support = Vec<Vec<(usize, Word)>>;

pub fn support(table: &PathTable, l: &Layer) -> Result<Support, LayerError> {
    match l {
        Layer::Local { path } => {
            let p = check_kind(table, path, PathKind::Local)?;
            Ok(vec![vec![(1, table.word(path, 0..p.steps.len())?)]])
        }
        Layer::Write { write_path, readers } => {
            let w = check_kind(table, write_path, PathKind::Write)?;
            let ww = table.word(write_path, 0..w.steps.len())?;
            if readers.is_empty() {
                return Ok(vec![vec![(2, ww)]]);
            }
            let mut out = Vec::new();
            for r in readers {
                let p = check_kind(table, &r.path, PathKind::Local)?;
                if r.split == 0 || r.split >= p.steps.len() {
                    return Err(LayerError::BadSplit(r.path.clone(), r.split));
                }
                out.push(vec![
                    (1, table.word(&r.path, 0..r.split)?),
                    (2, ww.clone()),
                    (1, table.word(&r.path, r.split..p.steps.len())?),
                ]);
            }
            Ok(out)
        }
    }
}

/// Label of an edge: the single write layer, or the concatenation of the
/// self-loop's local layers.
pub fn edge_expr(table: &PathTable, layers: &[Layer]) -> Result<QuotientExpr, LayerError> {
    let items = layers.iter().map(|l| layer_to_expr(table, l)).collect::<Result<Vec<_>, _>>()?;
    Ok(QuotientExpr::seq(items))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    DuplicateSelfLoop(usize),
    WriteOnSelfLoop(usize),
    MultiWriteEdge(usize),
    LocalOnWriteEdge(usize),
    UnknownState(usize),
    NoInitial,
    BadLayer(usize, String),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DuplicateSelfLoop(q) => write!(f, "duplicate-self-loop at q{q}"),
            Violation::WriteOnSelfLoop(e) => write!(f, "write-layer-on-self-loop on edge {e}"),
            Violation::MultiWriteEdge(e) => write!(f, "multi-write-edge on edge {e}"),
            Violation::LocalOnWriteEdge(e) => write!(f, "local-layer-on-write-edge on edge {e}"),
            Violation::UnknownState(q) => write!(f, "unknown-state q{q}"),
            Violation::NoInitial => write!(f, "no-initial-state"),
            Violation::BadLayer(e, m) => write!(f, "bad-layer on edge {e}: {m}"),
        }
    }
}

/// Structural checks: one self-loop per state carrying only local layers,
/// exactly one write layer on every other edge, and well-formed layers when a
/// path table is given.
pub fn validate_automaton(a: &LayerAutomaton, table: Option<&PathTable>) -> Vec<Violation> {
    let mut out = BTreeSet::new();
    let ids: BTreeSet<usize> = a.states.iter().map(|s| s.id).collect();
    if a.initial.is_empty() {
        out.insert(Violation::NoInitial);
    }
    for q in &a.initial {
        if !ids.contains(q) {
            out.insert(Violation::UnknownState(*q));
        }
    }
    let mut loops: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, e) in a.edges.iter().enumerate() {
        for q in [e.from, e.to] {
            if !ids.contains(&q) {
                out.insert(Violation::UnknownState(q));
            }
        }
        match e.kind {
            EdgeKind::SelfLoop => {
                *loops.entry(e.from).or_default() += 1;
                if e.from != e.to {
                    out.insert(Violation::UnknownState(e.to));
                }
                if e.layers.iter().any(Layer::is_write) {
                    out.insert(Violation::WriteOnSelfLoop(i));
                }
            }
            EdgeKind::Write => {
                let writes = e.layers.iter().filter(|l| l.is_write()).count();
                if writes > 1 {
                    out.insert(Violation::MultiWriteEdge(i));
                }
                if writes < e.layers.len() || e.layers.is_empty() {
                    out.insert(Violation::LocalOnWriteEdge(i));
                }
            }
        }
        if let Some(t) = table {
            for l in &e.layers {
                if let Err(err) = layer_to_expr(t, l) {
                    out.insert(Violation::BadLayer(i, err.to_string()));
                }
            }
        }
    }
    for (q, n) in loops {
        if n > 1 {
            out.insert(Violation::DuplicateSelfLoop(q));
        }
    }
    out.into_iter().collect()
}

/// A run decomposing a trace body into consecutive edge traversals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<usize>,
    /// `(edge index, derivation of its segment)` per traversal.
    pub steps: Vec<(usize, Vec<WordMatch>)>,
    pub invokes: usize,
}

impl Run {
    pub fn derivation(&self) -> Derivation {
        Derivation { invokes: self.invokes, words: self.steps.iter().flat_map(|s| s.1.iter().cloned()).collect() }
    }

    /// Regular composition of the traversed edge labels.
    pub fn expr(&self, a: &LayerAutomaton, table: &PathTable) -> Result<QuotientExpr, LayerError> {
        let parts = self.steps.iter().map(|(e, _)| edge_expr(table, &a.edges[*e].layers)).collect::<Result<_, _>>()?;
        Ok(QuotientExpr::seq(parts))
    }
}

/// Edge labels of an automaton compiled once for repeated membership queries.
pub struct CompiledAutomaton<'a> {
    pub automaton: &'a LayerAutomaton,
    exprs: Vec<QuotientExpr>,
}

impl<'a> CompiledAutomaton<'a> {
    pub fn new(a: &'a LayerAutomaton, table: &PathTable) -> Result<Self, LayerError> {
        let exprs = a.edges.iter().map(|e| edge_expr(table, &e.layers)).collect::<Result<_, _>>()?;
        Ok(CompiledAutomaton { automaton: a, exprs })
    }

    /// Every state accepts. A visit to a state traverses its self-loop at
    /// most once, matching the concatenated local layers once; consecutive
    /// traversals would duplicate what the starred layers already cover.
    pub fn member(&self, t: &[Event]) -> Option<Run> {
        let invokes = invoke_prefix(t)?;
        let a = self.automaton;
        let mut m = Matcher::new(t, invokes);
        let n = m.len();
        let idx: HashMap<usize, usize> = a.states.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        // Node `2 * state + looped`; `looped` is set after a self-loop.
        let nodes = 2 * a.states.len();
        let mut back: Vec<Vec<Option<Back>>> = vec![vec![None; nodes]; n + 1];
        let mut reached = vec![vec![false; nodes]; n + 1];
        for q in &a.initial {
            if let Some(&k) = idx.get(q) {
                reached[0][2 * k] = true;
            }
        }
        for i in 0..=n {
            for node in 0..nodes {
                if !reached[i][node] {
                    continue;
                }
                if i == n {
                    return Some(unwind(a, &back, n, node, invokes));
                }
                let q = a.states[node / 2].id;
                for (ei, e) in a.edges.iter().enumerate() {
                    let looping = e.kind == EdgeKind::SelfLoop;
                    if e.from != q || (looping && node % 2 == 1) {
                        continue;
                    }
                    let Some(&tk) = idx.get(&e.to) else { continue };
                    let target = 2 * tk + looping as usize;
                    for j in i + 1..=n {
                        if reached[j][target] {
                            continue;
                        }
                        let mut words = Vec::new();
                        if m.derive(&self.exprs[ei], i, j, 0, &mut words) {
                            reached[j][target] = true;
                            back[j][target] = Some((i, node, ei, words));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Previous position, previous node, edge and the segment's words.
type Back = (usize, usize, usize, Vec<WordMatch>);

fn unwind(a: &LayerAutomaton, back: &[Vec<Option<Back>>], n: usize, node: usize, invokes: usize) -> Run {
    let mut states = vec![a.states[node / 2].id];
    let mut steps = Vec::new();
    let (mut i, mut k) = (n, node);
    while let Some((pi, pk, e, words)) = &back[i][k] {
        steps.push((*e, words.clone()));
        states.push(a.states[*pk / 2].id);
        i = *pi;
        k = *pk;
    }
    states.reverse();
    steps.reverse();
    Run { states, steps, invokes }
}

/// One-shot membership; compile once with [`CompiledAutomaton`] for repeated
/// queries.
pub fn automaton_member(t: &[Event], a: &LayerAutomaton, table: &PathTable) -> Result<Option<Run>, LayerError> {
    Ok(CompiledAutomaton::new(a, table)?.member(t))
}

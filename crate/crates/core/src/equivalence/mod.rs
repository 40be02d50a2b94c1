//! Equivalence up to commutativity and thread renaming, and the bounded
//! quotient completeness and optimality checks.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::interpreter::{explore, Config, Event, Execution, Interp, Label, Trace};
use crate::layers::{interpret_member, CompiledAutomaton, QuotientExpr};
use crate::object_model::ObjectDef;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SwapError {
    #[error("index {0} out of range")]
    OutOfRange(usize),
    #[error("steps {0} and {1} belong to the same thread")]
    SameThread(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenameError {
    #[error("renaming is not a bijection")]
    NotBijective,
    #[error("thread t{0} has no image")]
    Partial(usize),
}

/// Moves the event at `from` to index `to`; the events in between shift by
/// one. `|from - to| == 1` is an adjacent swap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub from: usize,
    pub to: usize,
}

impl Move {
    pub fn swap(i: usize) -> Move {
        Move { from: i, to: i + 1 }
    }

    pub fn is_swap(&self) -> bool {
        self.from.abs_diff(self.to) == 1
    }

    pub fn inverse(&self) -> Move {
        Move { from: self.to, to: self.from }
    }

    /// Index that the event at `p` occupies after the move.
    pub fn track(&self, p: usize) -> usize {
        let (f, t) = (self.from, self.to);
        if p == f {
            t
        } else if f < t && f < p && p <= t {
            p - 1
        } else if t < f && t <= p && p < f {
            p + 1
        } else {
            p
        }
    }

    pub fn apply<T: Clone>(&self, xs: &[T]) -> Vec<T> {
        let mut v = xs.to_vec();
        let e = v.remove(self.from);
        v.insert(self.to, e);
        v
    }

    /// Indices of the events the moved event passes, in the original trace.
    pub fn passed(&self) -> std::ops::RangeInclusive<usize> {
        if self.from < self.to {
            self.from + 1..=self.to
        } else {
            self.to..=self.from - 1
        }
    }
}

/// Label pair exchanged by some witness; thread ids abstracted away.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SwapPair {
    pub left: Label,
    pub right: Label,
}

/// Configurations `C_0..C_n` of a trace.
pub fn configs(interp: &Interp, t: &[Event]) -> Option<Vec<Config>> {
    interp.configs(t)
}

/// Checks a move on a trace with known configurations. Legal iff the moved
/// event's thread differs from every passed event's thread, every reordered
/// step replays with its original label, and the configuration after the
/// affected window is unchanged.
pub fn move_legal(interp: &Interp, t: &[Event], cs: &[Config], mv: Move) -> bool {
    let (lo, hi) = (mv.from.min(mv.to), mv.from.max(mv.to));
    if hi >= t.len() || lo == hi {
        return false;
    }
    let th = t[mv.from].thread;
    if mv.passed().any(|k| t[k].thread == th) {
        return false;
    }
    let local = if mv.from < mv.to { Move { from: 0, to: hi - lo } } else { Move { from: hi - lo, to: 0 } };
    let window = local.apply(&t[lo..=hi]);
    let mut c = cs[lo].clone();
    for ev in &window {
        match interp.apply(&c, ev) {
            Some(n) => c = n,
            None => return false,
        }
    }
    c == cs[hi + 1]
}

/// Adjacent swap of steps `i` and `i + 1`, when both reordered steps are
/// feasible and `C_{i+2}` is preserved.
pub fn swap_adjacent(interp: &Interp, e: &Execution, i: usize) -> Result<Option<Execution>, SwapError> {
    if i + 1 >= e.steps.len() {
        return Err(SwapError::OutOfRange(i));
    }
    if e.steps[i].0.thread == e.steps[i + 1].0.thread {
        return Err(SwapError::SameThread(i, i + 1));
    }
    let (a, b) = (&e.steps[i].0, &e.steps[i + 1].0);
    let Some(c1) = interp.apply(e.config(i), b) else { return Ok(None) };
    let Some(c2) = interp.apply(&c1, a) else { return Ok(None) };
    if &c2 != e.config(i + 2) {
        return Ok(None);
    }
    let mut out = e.clone();
    out.steps[i] = (b.clone(), c1);
    out.steps[i + 1] = (a.clone(), c2);
    Ok(Some(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

/// Breadth-first search over adjacent swaps from `e1` for `e2`'s trace,
/// visiting at most `budget` executions.
pub fn equivalent(interp: &Interp, e1: &Execution, e2: &Execution, budget: usize) -> Tri {
    let target = e2.trace();
    if e1.trace().len() != target.len() || e1.last() != e2.last() {
        return Tri::No;
    }
    let mut seen: HashSet<Trace> = HashSet::new();
    let mut queue = VecDeque::from([e1.clone()]);
    seen.insert(e1.trace());
    while let Some(e) = queue.pop_front() {
        if e.trace() == target {
            return Tri::Yes;
        }
        if seen.len() > budget {
            return Tri::Unknown;
        }
        for i in 0..e.steps.len().saturating_sub(1) {
            if let Ok(Some(n)) = swap_adjacent(interp, &e, i) {
                if seen.insert(n.trace()) {
                    queue.push_back(n);
                }
            }
        }
    }
    Tri::No
}

/// `bijection` maps old thread ids to new ones.
pub fn rename_threads(t: &[Event], bijection: &BTreeMap<usize, usize>) -> Result<Trace, RenameError> {
    let images: BTreeSet<usize> = bijection.values().copied().collect();
    if images.len() != bijection.len() {
        return Err(RenameError::NotBijective);
    }
    t.iter()
        .map(|e| {
            bijection
                .get(&e.thread)
                .map(|&thread| Event { thread, label: e.label.clone() })
                .ok_or(RenameError::Partial(e.thread))
        })
        .collect()
}

/// Renames and then restores increasing order of the invocation prefix, which
/// commutes with everything.
pub fn rename_normalized(t: &[Event], perm: &[usize]) -> Trace {
    let mut out: Trace = t.iter().map(|e| Event { thread: perm[e.thread - 1], label: e.label.clone() }).collect();
    let n = out.iter().take_while(|e| e.label.is_invoke()).count();
    out[..n].sort_by_key(|e| e.thread);
    out
}

/// Thread permutations preserving the environment; `perm[i]` is the image
/// of thread `i + 1`. The identity comes first.
pub fn symmetries(interp: &Interp) -> Vec<Vec<usize>> {
    let calls = &interp.env.calls;
    let n = calls.len();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn go(calls: &[crate::interpreter::Call], n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let i = cur.len();
        for j in 1..=n {
            if !cur.contains(&j) && calls[j - 1] == calls[i] {
                cur.push(j);
                go(calls, n, cur, out);
                cur.pop();
            }
        }
    }
    go(calls, n, &mut cur, &mut out);
    out
}

/// Trace-set membership used by the completeness check.
pub trait Candidate {
    fn contains(&self, t: &[Event]) -> bool;
}

impl Candidate for CompiledAutomaton<'_> {
    fn contains(&self, t: &[Event]) -> bool {
        self.member(t).is_some()
    }
}

impl Candidate for QuotientExpr {
    fn contains(&self, t: &[Event]) -> bool {
        interpret_member(t, self).is_some()
    }
}

impl Candidate for HashSet<Trace> {
    fn contains(&self, t: &[Event]) -> bool {
        self.contains(t)
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let n = parent[y];
        parent[y] = r;
        y = n;
    }
    r
}

fn union(parent: &mut [usize], a: usize, b: usize) -> bool {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra == rb {
        return false;
    }
    let (lo, hi) = (ra.min(rb), ra.max(rb));
    parent[hi] = lo;
    true
}

/// Completed invocation-normalized traces of one environment with their
/// adjacent-swap graph. Invocations come first in thread order; every trace
/// is equivalent to exactly one such placement.
pub struct TraceSpace<'a> {
    pub interp: &'a Interp<'a>,
    pub traces: Vec<Trace>,
    pub index: HashMap<Trace, usize>,
    /// `(neighbour, move)`; both directions are stored.
    pub edges: Vec<Vec<(usize, Move)>>,
    /// Swaps leading outside the explored set.
    pub escaped: usize,
    /// Exploration hit the unroll or step bound somewhere.
    pub cut: bool,
}

impl<'a> TraceSpace<'a> {
    pub fn build(interp: &'a Interp<'a>) -> TraceSpace<'a> {
        let bound = interp.bounds.step_bound(interp.env.threads()) + interp.env.threads();
        let ex = explore(interp, bound, true);
        let mut s = TraceSpace::from_traces(interp, ex.traces);
        s.cut = ex.cut;
        s
    }

    pub fn from_traces(interp: &'a Interp<'a>, traces: Vec<Trace>) -> TraceSpace<'a> {
        let index: HashMap<Trace, usize> = traces.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        let mut s = TraceSpace { interp, edges: vec![Vec::new(); traces.len()], traces, index, escaped: 0, cut: false };
        for ti in 0..s.traces.len() {
            let t = &s.traces[ti];
            let Some(cs) = interp.configs(t) else { continue };
            let start = t.iter().take_while(|e| e.label.is_invoke()).count();
            for i in start..t.len().saturating_sub(1) {
                let mv = Move::swap(i);
                if t[i].thread != t[i + 1].thread && move_legal(interp, t, &cs, mv) {
                    match s.index.get(&mv.apply(t)) {
                        Some(&u) if u > ti => {
                            s.edges[ti].push((u, mv));
                            s.edges[u].push((ti, mv.inverse()));
                        }
                        Some(_) => {}
                        None => s.escaped += 1,
                    }
                }
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Class representative per trace under adjacent swaps.
    pub fn classes(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.len()).collect();
        for (a, es) in self.edges.iter().enumerate() {
            for &(b, _) in es {
                union(&mut parent, a, b);
            }
        }
        (0..self.len()).map(|x| find(&mut parent, x)).collect()
    }

    /// Legal non-adjacent single-event moves out of trace `ti`.
    fn block_moves(&self, ti: usize) -> Vec<(usize, Move)> {
        let t = &self.traces[ti];
        let Some(cs) = self.interp.configs(t) else { return Vec::new() };
        let start = t.iter().take_while(|e| e.label.is_invoke()).count();
        let mut out = Vec::new();
        for from in start..t.len() {
            for to in start..t.len() {
                if from.abs_diff(to) < 2 {
                    continue;
                }
                let mv = Move { from, to };
                if move_legal(self.interp, t, &cs, mv) {
                    if let Some(&u) = self.index.get(&mv.apply(t)) {
                        out.push((u, mv));
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceVerdict {
    Matched { swaps: usize },
    Failed,
    Unknown,
}

/// Why a trace is represented: renaming it by `renaming` and then applying
/// `moves` yields the candidate member `representative`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub renaming: Vec<usize>,
    pub moves: Vec<Move>,
    pub representative: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub total: usize,
    pub matched: usize,
    pub unknown: usize,
    /// Trace indices without a representative.
    pub failures: Vec<usize>,
    pub verdicts: Vec<TraceVerdict>,
    pub witnesses: Vec<Option<Witness>>,
    /// Indices of candidate members among the traces.
    pub members: Vec<usize>,
    /// Witnesses that needed a non-adjacent move.
    pub block_moved: usize,
    pub escaped: usize,
}

impl EquivalenceReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, v) in self.verdicts.iter().enumerate() {
            match v {
                TraceVerdict::Matched { swaps } => writeln!(s, "trace {i}: MATCHED {swaps}-swaps").unwrap(),
                TraceVerdict::Failed => writeln!(s, "trace {i}: FAILED").unwrap(),
                TraceVerdict::Unknown => writeln!(s, "trace {i}: UNKNOWN").unwrap(),
            }
        }
        s.push_str(&self.summary());
        s.push('\n');
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "total {} matched {} failed {} unknown {} members {} block-moved {}",
            self.total,
            self.matched,
            self.failures.len(),
            self.unknown,
            self.members.len(),
            self.block_moved
        )
    }

    pub fn complete(&self) -> bool {
        self.failures.is_empty() && self.unknown == 0
    }
}

/// For every trace of the space, searches a renaming and a move sequence
/// reaching a candidate member. Classes are computed exhaustively; witnesses
/// longer than `budget` moves count as unknown. Non-adjacent moves are tried
/// only for classes that adjacent swaps leave unmatched.
pub fn check_quotient_complete(space: &TraceSpace, cand: &dyn Candidate, budget: usize) -> EquivalenceReport {
    let n = space.len();
    let member: Vec<bool> = space.traces.iter().map(|t| cand.contains(t)).collect();
    let syms = symmetries(space.interp);
    let image: Vec<Vec<Option<usize>>> = space
        .traces
        .iter()
        .map(|t| syms.iter().map(|p| space.index.get(&rename_normalized(t, p)).copied()).collect())
        .collect();
    let mut edges = space.edges.clone();
    let mut parent: Vec<usize> = (0..n).collect();
    for (a, es) in edges.iter().enumerate() {
        for &(b, _) in es {
            union(&mut parent, a, b);
        }
    }
    let matched_classes = |parent: &mut Vec<usize>| -> HashSet<usize> {
        let mut with_member = HashSet::new();
        for i in 0..n {
            if member[i] {
                with_member.insert(find(parent, i));
            }
        }
        let mut ok = HashSet::new();
        for i in 0..n {
            for img in image[i].iter().flatten() {
                if with_member.contains(&find(parent, *img)) {
                    ok.insert(find(parent, i));
                }
            }
        }
        ok
    };
    let mut tried: HashSet<usize> = HashSet::new();
    loop {
        let ok = matched_classes(&mut parent);
        let pending: Vec<usize> = (0..n).filter(|&i| !ok.contains(&find(&mut parent, i)) && !tried.contains(&i)).collect();
        if pending.is_empty() {
            break;
        }
        let mut changed = false;
        for ti in pending {
            tried.insert(ti);
            for (u, mv) in space.block_moves(ti) {
                edges[ti].push((u, mv));
                edges[u].push((ti, mv.inverse()));
                changed |= union(&mut parent, ti, u);
            }
        }
        if !changed {
            break;
        }
    }
    // Multi-source BFS from members gives each trace its move path.
    let mut dist = vec![usize::MAX; n];
    let mut next: Vec<Option<(usize, Move)>> = vec![None; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        if member[i] {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(x) = queue.pop_front() {
        for &(y, mv) in &edges[x] {
            if dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                // moving from y toward x undoes mv
                next[y] = Some((x, mv.inverse()));
                queue.push_back(y);
            }
        }
    }
    let mut rep = EquivalenceReport {
        total: n,
        members: (0..n).filter(|&i| member[i]).collect(),
        escaped: space.escaped,
        ..Default::default()
    };
    for i in 0..n {
        let best = syms
            .iter()
            .enumerate()
            .filter_map(|(k, _)| image[i][k].map(|j| (k, j)))
            .filter(|&(_, j)| dist[j] != usize::MAX)
            .min_by_key(|&(k, j)| (dist[j], k));
        match best {
            Some((k, j)) if dist[j] <= budget => {
                let mut moves = Vec::new();
                let mut cur = j;
                while let Some((nx, mv)) = next[cur] {
                    moves.push(mv);
                    cur = nx;
                }
                if moves.iter().any(|m| !m.is_swap()) {
                    rep.block_moved += 1;
                }
                rep.verdicts.push(TraceVerdict::Matched { swaps: moves.len() });
                rep.witnesses.push(Some(Witness { renaming: syms[k].clone(), moves, representative: cur }));
                rep.matched += 1;
            }
            Some(_) => {
                rep.verdicts.push(TraceVerdict::Unknown);
                rep.witnesses.push(None);
                rep.unknown += 1;
            }
            None => {
                rep.verdicts.push(TraceVerdict::Failed);
                rep.witnesses.push(None);
                rep.failures.push(i);
            }
        }
    }
    rep
}

/// Pairs of representatives that are equivalent under adjacent swaps; the
/// set is optimal iff this is empty. Representatives must be traces of the
/// space.
pub fn check_quotient_optimal(space: &TraceSpace, reps: &[usize]) -> Vec<(usize, usize)> {
    let class = space.classes();
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut out = Vec::new();
    for &r in reps {
        match seen.get(&class[r]) {
            Some(&o) => out.push((o, r)),
            None => {
                seen.insert(class[r], r);
            }
        }
    }
    out
}

/// Pairwise optimality by bounded search, for representative sets outside a
/// trace space.
pub fn check_quotient_optimal_search(interp: &Interp, reps: &[Execution], budget: usize) -> (bool, usize) {
    let mut unknown = 0;
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            match equivalent(interp, &reps[i], &reps[j], budget) {
                Tri::Yes => return (false, unknown),
                Tri::Unknown => unknown += 1,
                Tri::No => {}
            }
        }
    }
    (true, unknown)
}

/// Label pairs exchanged by the witnesses' moves. A non-adjacent move
/// contributes one pair per passed event.
pub fn collect_swaps(space: &TraceSpace, rep: &EquivalenceReport) -> BTreeSet<SwapPair> {
    let mut out = BTreeSet::new();
    for (i, w) in rep.witnesses.iter().enumerate() {
        let Some(w) = w else { continue };
        let mut t = rename_normalized(&space.traces[i], &w.renaming);
        for mv in &w.moves {
            let moved = t[mv.from].label.clone();
            for k in mv.passed() {
                let other = t[k].label.clone();
                let pair = if mv.from < mv.to {
                    SwapPair { left: moved.clone(), right: other }
                } else {
                    SwapPair { left: other, right: moved.clone() }
                };
                out.insert(pair);
            }
            t = mv.apply(&t);
        }
    }
    out
}

pub fn render_swaps(obj: &ObjectDef, swaps: &BTreeSet<SwapPair>) -> String {
    let mut s = String::new();
    for p in swaps {
        writeln!(s, "{}  <->  {}", p.left.render(obj), p.right.render(obj)).unwrap();
    }
    s
}

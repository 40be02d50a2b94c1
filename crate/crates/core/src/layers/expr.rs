use std::collections::HashSet;
use std::fmt;

use crate::interpreter::{Event, Label};
use crate::object_model::{MethodId, PrimId, Value};

/// Step symbol of a word; return values and picked nodes are not part of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym {
    pub method: MethodId,
    pub prim: PrimId,
}

impl Sym {
    pub fn matches(&self, l: &Label) -> bool {
        l.prim() == Some((self.method, self.prim))
    }
}

/// Consecutive steps of one path, starting at `offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    pub syms: Vec<Sym>,
    pub path: String,
    pub offset: usize,
}

impl Word {
    pub fn new(path: impl Into<String>, method: MethodId, steps: &[PrimId], offset: usize) -> Word {
        Word { syms: steps.iter().map(|&prim| Sym { method, prim }).collect(), path: path.into(), offset }
    }

    pub fn is_empty(&self) -> bool {
        self.syms.is_empty()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let end = self.offset + self.syms.len();
        write!(f, "{}[{}..{}]", self.path, self.offset, end)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum QuotientExpr {
    Word(Word),
    /// `pre^n · inner · post^n`; prefixes carry increasing thread ids and
    /// suffixes the same ids in reverse.
    Balanced { pre: Word, inner: Box<QuotientExpr>, post: Word, exp: u32 },
    /// Repetitions of a word carry strictly increasing thread ids; any other
    /// body is repeated without an id constraint.
    Star(Box<QuotientExpr>),
    Union(Box<QuotientExpr>, Box<QuotientExpr>),
    Concat(Box<QuotientExpr>, Box<QuotientExpr>),
}

impl QuotientExpr {
    pub fn epsilon() -> QuotientExpr {
        QuotientExpr::Word(Word { syms: Vec::new(), path: String::new(), offset: 0 })
    }

    pub fn star(e: QuotientExpr) -> QuotientExpr {
        QuotientExpr::Star(Box::new(e))
    }

    pub fn concat(a: QuotientExpr, b: QuotientExpr) -> QuotientExpr {
        QuotientExpr::Concat(Box::new(a), Box::new(b))
    }

    pub fn union(a: QuotientExpr, b: QuotientExpr) -> QuotientExpr {
        QuotientExpr::Union(Box::new(a), Box::new(b))
    }

    /// Right-nested concatenation; epsilon when empty.
    pub fn seq(items: Vec<QuotientExpr>) -> QuotientExpr {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => QuotientExpr::epsilon(),
            Some(last) => it.fold(last, |acc, e| QuotientExpr::concat(e, acc)),
        }
    }

    /// Exponent ids of balanced nodes, in preorder.
    pub fn exponents(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let QuotientExpr::Balanced { exp, .. } = e {
                out.push(*exp);
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&QuotientExpr)) {
        f(self);
        match self {
            QuotientExpr::Word(_) => {}
            QuotientExpr::Balanced { inner, .. } | QuotientExpr::Star(inner) => inner.walk(f),
            QuotientExpr::Union(a, b) | QuotientExpr::Concat(a, b) => {
                a.walk(f);
                b.walk(f);
            }
        }
    }

    /// True when every exponent id occurs in exactly one balanced node.
    pub fn exponents_fresh(&self) -> bool {
        let xs = self.exponents();
        let set: HashSet<u32> = xs.iter().copied().collect();
        set.len() == xs.len()
    }
}

impl fmt::Display for QuotientExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuotientExpr::Word(w) if w.is_empty() => write!(f, "eps"),
            QuotientExpr::Word(w) => write!(f, "{w}"),
            QuotientExpr::Balanced { pre, inner, post, exp } => write!(f, "({pre})^n{exp} {inner} ({post})^n{exp}"),
            QuotientExpr::Star(e) => write!(f, "({e})*"),
            QuotientExpr::Union(a, b) => write!(f, "({a} + {b})"),
            QuotientExpr::Concat(a, b) => write!(f, "{a} . {b}"),
        }
    }
}

/// One word occurrence matched by `thread` at trace positions
/// `start..start + word.syms.len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordMatch {
    pub thread: usize,
    pub start: usize,
    pub word: Word,
}

/// Word occurrences in trace order; their concatenation is the matched
/// trace body.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Derivation {
    /// Leading invocation events, which no word covers.
    pub invokes: usize,
    pub words: Vec<WordMatch>,
}

impl Derivation {
    /// Replays the derivation's labels from the trace it was built on.
    pub fn labels<'t>(&self, t: &'t [Event]) -> Vec<&'t Event> {
        let mut out: Vec<&Event> = t[..self.invokes].iter().collect();
        for w in &self.words {
            out.extend(&t[w.start..w.start + w.word.syms.len()]);
        }
        out
    }
}

/// Length of the invocation prefix when every invocation precedes every step
/// and invocations appear in increasing thread order; `None` otherwise.
/// Invocations touch no shared state, so the interpretation places them
/// first.
pub fn invoke_prefix(t: &[Event]) -> Option<usize> {
    let n = t.iter().take_while(|e| e.label.is_invoke()).count();
    if t[n..].iter().any(|e| e.label.is_invoke()) {
        return None;
    }
    if t[..n].windows(2).any(|w| w[0].thread >= w[1].thread) {
        return None;
    }
    Some(n)
}

/// Matcher over one trace body. Failures are memoized per
/// `(node, start, end, lower thread bound)`.
pub(crate) struct Matcher<'t> {
    body: &'t [Event],
    base: usize,
    failed: HashSet<(usize, usize, usize, usize)>,
}

impl<'t> Matcher<'t> {
    pub(crate) fn new(t: &'t [Event], base: usize) -> Self {
        Matcher { body: &t[base..], base, failed: HashSet::new() }
    }

    pub(crate) fn len(&self) -> usize {
        self.body.len()
    }

    /// Thread matching `w` at body position `i`.
    fn word_at(&self, w: &Word, i: usize) -> Option<usize> {
        let n = w.syms.len();
        if i + n > self.body.len() || n == 0 {
            return None;
        }
        let t = self.body[i].thread;
        for (k, s) in w.syms.iter().enumerate() {
            let e = &self.body[i + k];
            if e.thread != t || !s.matches(&e.label) {
                return None;
            }
        }
        Some(t)
    }

    fn hit(&self, w: &Word, i: usize, thread: usize) -> WordMatch {
        WordMatch { thread, start: self.base + i, word: w.clone() }
    }

    /// Derivation of `body[i..j]` from `e`, appended to `out`.
    pub(crate) fn derive(&mut self, e: &QuotientExpr, i: usize, j: usize, lo: usize, out: &mut Vec<WordMatch>) -> bool {
        let key = (e as *const QuotientExpr as usize, i, j, lo);
        if self.failed.contains(&key) {
            return false;
        }
        let mark = out.len();
        let ok = self.derive_uncached(e, i, j, lo, out);
        if !ok {
            out.truncate(mark);
            self.failed.insert(key);
        }
        ok
    }

    fn derive_uncached(&mut self, e: &QuotientExpr, i: usize, j: usize, lo: usize, out: &mut Vec<WordMatch>) -> bool {
        match e {
            QuotientExpr::Word(w) => {
                if w.is_empty() {
                    return i == j;
                }
                if j != i + w.syms.len() {
                    return false;
                }
                match self.word_at(w, i) {
                    Some(t) => {
                        out.push(self.hit(w, i, t));
                        true
                    }
                    None => false,
                }
            }
            QuotientExpr::Balanced { pre, inner, post, .. } => {
                let mark = out.len();
                if self.derive(inner, i, j, 0, out) {
                    return true;
                }
                out.truncate(mark);
                let (np, ns) = (pre.syms.len(), post.syms.len());
                if np + ns > j - i {
                    return false;
                }
                let Some(t) = self.word_at(pre, i) else { return false };
                if t <= lo || self.word_at(post, j - ns) != Some(t) {
                    return false;
                }
                out.push(self.hit(pre, i, t));
                if self.derive(e, i + np, j - ns, t, out) {
                    out.push(self.hit(post, j - ns, t));
                    return true;
                }
                out.truncate(mark);
                false
            }
            QuotientExpr::Star(body) => {
                if i == j {
                    return true;
                }
                let mark = out.len();
                if let QuotientExpr::Word(w) = body.as_ref() {
                    if w.is_empty() {
                        return false;
                    }
                    let n = w.syms.len();
                    return match self.word_at(w, i) {
                        Some(t) if t > lo && i + n <= j => {
                            out.push(self.hit(w, i, t));
                            if self.derive(e, i + n, j, t, out) {
                                true
                            } else {
                                out.truncate(mark);
                                false
                            }
                        }
                        _ => false,
                    };
                }
                for k in (i + 1..=j).rev() {
                    if self.derive(body, i, k, 0, out) {
                        if self.derive(e, k, j, 0, out) {
                            return true;
                        }
                        out.truncate(mark);
                    }
                }
                false
            }
            QuotientExpr::Union(a, b) => self.derive(a, i, j, lo, out) || self.derive(b, i, j, lo, out),
            QuotientExpr::Concat(a, b) => {
                let mark = out.len();
                for k in i..=j {
                    if self.derive(a, i, k, 0, out) {
                        if self.derive(b, k, j, 0, out) {
                            return true;
                        }
                        out.truncate(mark);
                    }
                }
                false
            }
        }
    }
}

/// Derivation of `t` from `e` under the canonical thread-id interpretation.
pub fn interpret_member(t: &[Event], e: &QuotientExpr) -> Option<Derivation> {
    let invokes = invoke_prefix(t)?;
    let mut m = Matcher::new(t, invokes);
    let mut words = Vec::new();
    let n = m.len();
    m.derive(e, 0, n, 0, &mut words).then_some(Derivation { invokes, words })
}

/// Renders a derivation as `t<id>:<word>` items.
pub fn render_derivation(d: &Derivation) -> String {
    let items: Vec<String> = d.words.iter().map(|w| format!("t{}:{}", w.thread, w.word)).collect();
    items.join(" ")
}

/// Trace whose events spell `words` with the given threads, preceded by the
/// invocations of `invoked` in increasing order.
pub fn trace_of_words(words: &[(usize, &Word)], invoked: &[(usize, MethodId, Vec<Value>)]) -> Vec<Event> {
    let mut inv: Vec<_> = invoked.to_vec();
    inv.sort_by_key(|x| x.0);
    let mut out: Vec<Event> = inv
        .into_iter()
        .map(|(thread, method, args)| Event { thread, label: Label::Invoke { method, args } })
        .collect();
    for (t, w) in words {
        for s in &w.syms {
            out.push(Event { thread: *t, label: Label::Step { method: s.method, prim: s.prim, values: Vec::new() } });
        }
    }
    out
}

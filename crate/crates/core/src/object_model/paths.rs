use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::cfg::Reach;
use super::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    Local,
    Write,
}

/// One retry-loop iteration of a method.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    pub method: MethodId,
    /// Position among the method's paths; the textual id is `method:index`.
    pub index: usize,
    pub steps: Vec<PrimId>,
    pub kind: PathKind,
    pub returns: bool,
}

impl Path {
    pub fn id(&self, obj: &ObjectDef) -> String {
        format!("{}:{}", obj.methods[self.method].name, self.index)
    }

    pub fn is_write(&self) -> bool {
        self.kind == PathKind::Write
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PathError {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("unroll bound must be positive")]
    ZeroUnroll,
    #[error("empty path")]
    Empty,
}

/// Full paths of `method`, sorted by step sequence.
pub fn enumerate_full_paths(obj: &ObjectDef, method: &str, unroll: u8) -> Result<Vec<Path>, PathError> {
    let mid = obj.method_index(method).ok_or_else(|| PathError::UnknownMethod(method.to_string()))?;
    if unroll == 0 {
        return Err(PathError::ZeroUnroll);
    }
    let m = &obj.methods[mid];
    let mut found: BTreeSet<(Vec<PrimId>, bool)> = BTreeSet::new();
    let mut starts = vec![(m.cfg.entry, vec![0u8; m.cfg.loops.len()])];
    for (l, info) in m.cfg.loops.iter().enumerate() {
        if info.parent.is_none() {
            let mut cs = vec![0u8; m.cfg.loops.len()];
            cs[l] = 1;
            starts.push((info.body_entry, cs));
        }
    }
    for (node, cs) in starts {
        let mut stack: Vec<(usize, Vec<u8>, Vec<PrimId>)> = vec![(node, cs, Vec::new())];
        while let Some((n, cs, steps)) = stack.pop() {
            for r in m.cfg.frontier(n, &cs, unroll, true) {
                match r {
                    Reach::Step { prim, target, counters } => {
                        let mut s2 = steps.clone();
                        s2.push(prim);
                        if m.prims[prim].is_return() {
                            found.insert((s2, true));
                        } else {
                            stack.push((target, counters, s2));
                        }
                    }
                    Reach::Back => {
                        if !steps.is_empty() {
                            found.insert((steps.clone(), false));
                        }
                    }
                    Reach::Cut => {}
                }
            }
        }
    }
    let mut out = Vec::new();
    for (index, (steps, returns)) in found.into_iter().enumerate() {
        let mut p = Path { method: mid, index, steps, kind: PathKind::Local, returns };
        p.kind = classify_path(&p, obj);
        out.push(p);
    }
    Ok(out)
}

/// Paths of every method, in declaration order.
pub fn enumerate_all_paths(obj: &ObjectDef, unroll: u8) -> Result<Vec<Path>, PathError> {
    let mut out = Vec::new();
    for m in &obj.methods {
        out.extend(enumerate_full_paths(obj, &m.name, unroll)?);
    }
    Ok(out)
}

pub fn path_endpoints(p: &Path) -> Result<(PrimId, PrimId), PathError> {
    match (p.steps.first(), p.steps.last()) {
        (Some(a), Some(b)) => Ok((*a, *b)),
        _ => Err(PathError::Empty),
    }
}

/// Tracks which locals hold nodes allocated on the path and not yet published.
#[derive(Default)]
struct Ownership {
    /// local -> fresh-node tag
    holds: BTreeMap<LocalId, usize>,
    /// fresh-node tag -> tags stored in its fields
    links: BTreeMap<usize, BTreeSet<usize>>,
    published: BTreeSet<usize>,
    next: usize,
}

impl Ownership {
    fn owned_tag(&self, e: &Expr) -> Option<usize> {
        match e {
            Expr::Local(l) => self.holds.get(l).copied().filter(|t| !self.published.contains(t)),
            _ => None,
        }
    }

    fn publish(&mut self, tag: usize) {
        let mut work = vec![tag];
        while let Some(t) = work.pop() {
            if self.published.insert(t) {
                if let Some(ls) = self.links.get(&t) {
                    work.extend(ls.iter().copied());
                }
            }
        }
    }

    /// Returns true when the action writes shared memory.
    fn action(&mut self, a: &PrimAction) -> bool {
        match a {
            PrimAction::Return(_) => false,
            PrimAction::Pick(Target::Local(l)) => {
                self.holds.remove(l);
                false
            }
            PrimAction::Alloc(Target::Local(l)) => {
                self.holds.insert(*l, self.next);
                self.next += 1;
                false
            }
            PrimAction::Assign(Target::Local(l), e) => {
                match self.owned_tag(e) {
                    Some(t) => {
                        self.holds.insert(*l, t);
                    }
                    None => {
                        self.holds.remove(l);
                    }
                }
                false
            }
            PrimAction::Assign(Target::Field(base, _), e) => match self.owned_tag(base) {
                Some(bt) => {
                    if let Some(t) = self.owned_tag(e) {
                        self.links.entry(bt).or_default().insert(t);
                    }
                    false
                }
                None => {
                    if let Some(t) = self.owned_tag(e) {
                        self.publish(t);
                    }
                    true
                }
            },
            PrimAction::Assign(Target::Shared(_), e) => {
                if let Some(t) = self.owned_tag(e) {
                    self.publish(t);
                }
                true
            }
            PrimAction::Alloc(_) | PrimAction::Pick(_) => true,
        }
    }
}

/// Write iff some step writes a shared location outside thread-owned fresh
/// memory.
pub fn classify_path(p: &Path, obj: &ObjectDef) -> PathKind {
    let m = &obj.methods[p.method];
    let mut own = Ownership::default();
    let mut writes = false;
    for &s in &p.steps {
        match &m.prims[s] {
            Prim::Action(a) => writes |= own.action(a),
            Prim::Test(_) => {}
            Prim::Arw(ops) => {
                for op in ops {
                    if let ArwOp::Act(a) = op {
                        writes |= own.action(a);
                    }
                }
            }
        }
    }
    if writes {
        PathKind::Write
    } else {
        PathKind::Local
    }
}

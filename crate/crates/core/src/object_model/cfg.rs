use super::kat::KatExpr;
use super::PrimId;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CfgNode {
    pub eps: Vec<usize>,
    pub steps: Vec<(PrimId, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopInfo {
    pub head: usize,
    pub body_entry: usize,
    pub parent: Option<usize>,
}

/// Thompson automaton of a method body. Loop iterations are counted on the
/// head-to-body epsilon edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    pub nodes: Vec<CfgNode>,
    pub entry: usize,
    pub exit: usize,
    pub loops: Vec<LoopInfo>,
}

/// Outcome of resolving label-free moves from a control point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reach {
    Step { prim: PrimId, target: usize, counters: Vec<u8> },
    /// A loop would exceed its unroll bound.
    Cut,
    /// Re-entry of a top-level loop (path mode only).
    Back,
}

impl Cfg {
    pub fn build(k: &KatExpr) -> Cfg {
        let mut c = Cfg { nodes: vec![CfgNode::default()], entry: 0, exit: 0, loops: Vec::new() };
        let exit = c.compile(k, 0, None);
        c.exit = exit;
        c
    }

    fn node(&mut self) -> usize {
        self.nodes.push(CfgNode::default());
        self.nodes.len() - 1
    }

    fn compile(&mut self, k: &KatExpr, from: usize, parent: Option<usize>) -> usize {
        match k {
            KatExpr::Prim(p) => {
                let t = self.node();
                self.nodes[from].steps.push((*p, t));
                t
            }
            KatExpr::One => from,
            KatExpr::Zero => self.node(),
            KatExpr::Seq(es) => es.iter().fold(from, |n, e| self.compile(e, n, parent)),
            KatExpr::Choice(es) => {
                let join = self.node();
                for e in es {
                    let end = self.compile(e, from, parent);
                    self.nodes[end].eps.push(join);
                }
                join
            }
            KatExpr::Star(body) => {
                let head = self.node();
                let body_entry = self.node();
                let exit = self.node();
                self.nodes[from].eps.push(head);
                self.nodes[head].eps.push(body_entry);
                self.nodes[head].eps.push(exit);
                let id = self.loops.len();
                self.loops.push(LoopInfo { head, body_entry, parent });
                let end = self.compile(body, body_entry, Some(id));
                self.nodes[end].eps.push(head);
                exit
            }
        }
    }

    fn loop_entered_by(&self, from: usize, to: usize) -> Option<usize> {
        self.loops.iter().position(|l| l.head == from && l.body_entry == to)
    }

    fn is_within(&self, mut l: usize, anc: usize) -> bool {
        while let Some(p) = self.loops[l].parent {
            if p == anc {
                return true;
            }
            l = p;
        }
        false
    }

    /// Labeled steps reachable from `node` through epsilon moves. With
    /// `path_mode`, re-entering a top-level loop reports `Back` instead of
    /// iterating.
    pub fn frontier(&self, node: usize, counters: &[u8], unroll: u8, path_mode: bool) -> Vec<Reach> {
        let mut out = Vec::new();
        let mut counters = counters.to_vec();
        if counters.len() < self.loops.len() {
            counters.resize(self.loops.len(), 0);
        }
        let mut stack = vec![(node, counters)];
        let mut seen = std::collections::HashSet::new();
        while let Some((n, cs)) = stack.pop() {
            if !seen.insert((n, cs.clone())) {
                continue;
            }
            for &(p, t) in &self.nodes[n].steps {
                out.push(Reach::Step { prim: p, target: t, counters: cs.clone() });
            }
            for &e in self.nodes[n].eps.iter().rev() {
                let mut cs2 = cs.clone();
                if let Some(l) = self.loop_entered_by(n, e) {
                    if path_mode && self.loops[l].parent.is_none() && cs2[l] >= 1 {
                        out.push(Reach::Back);
                        continue;
                    }
                    let limit = if path_mode && self.loops[l].parent.is_none() { 1 } else { unroll };
                    if cs2[l] >= limit {
                        out.push(Reach::Cut);
                        continue;
                    }
                    cs2[l] += 1;
                    for inner in 0..self.loops.len() {
                        if self.is_within(inner, l) {
                            cs2[inner] = 0;
                        }
                    }
                }
                stack.push((e, cs2));
            }
        }
        out.sort_by(|a, b| reach_key(a).cmp(&reach_key(b)));
        out.dedup();
        out
    }

    /// True when the body end is reachable without passing a return step.
    pub fn falls_through(&self, prims: &[super::Prim]) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.entry];
        while let Some(n) = stack.pop() {
            if seen[n] {
                continue;
            }
            seen[n] = true;
            if n == self.exit {
                return true;
            }
            stack.extend(self.nodes[n].eps.iter().copied());
            for &(p, t) in &self.nodes[n].steps {
                if !prims[p].is_return() {
                    stack.push(t);
                }
            }
        }
        false
    }
}

fn reach_key(r: &Reach) -> (u8, PrimId, usize, Vec<u8>) {
    match r {
        Reach::Step { prim, target, counters } => (0, *prim, *target, counters.clone()),
        Reach::Back => (1, 0, 0, vec![]),
        Reach::Cut => (2, 0, 0, vec![]),
    }
}

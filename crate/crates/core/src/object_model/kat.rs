use std::collections::HashMap;

use super::*;

/// Star-and-choice expression over a method's primitive table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KatExpr {
    Prim(PrimId),
    Seq(Vec<KatExpr>),
    Choice(Vec<KatExpr>),
    Star(Box<KatExpr>),
    One,
    Zero,
}

impl KatExpr {
    /// All words of a star-free expression.
    pub fn words(&self) -> Vec<Vec<PrimId>> {
        match self {
            KatExpr::Prim(p) => vec![vec![*p]],
            KatExpr::One => vec![vec![]],
            KatExpr::Zero => vec![],
            KatExpr::Choice(es) => es.iter().flat_map(|e| e.words()).collect(),
            KatExpr::Seq(es) => {
                let mut acc = vec![vec![]];
                for e in es {
                    let ws = e.words();
                    let mut next = Vec::new();
                    for a in &acc {
                        for w in &ws {
                            let mut v = a.clone();
                            v.extend_from_slice(w);
                            next.push(v);
                        }
                    }
                    acc = next;
                }
                acc
            }
            KatExpr::Star(_) => panic!("words() requires a star-free expression"),
        }
    }

    pub fn prims(&self, out: &mut Vec<PrimId>) {
        match self {
            KatExpr::Prim(p) => out.push(*p),
            KatExpr::Seq(es) | KatExpr::Choice(es) => es.iter().for_each(|e| e.prims(out)),
            KatExpr::Star(e) => e.prims(out),
            KatExpr::One | KatExpr::Zero => {}
        }
    }
}

#[derive(Default)]
struct Interner {
    prims: Vec<Prim>,
    index: HashMap<Prim, PrimId>,
}

impl Interner {
    fn intern(&mut self, p: Prim) -> KatExpr {
        let next = self.prims.len();
        let id = *self.index.entry(p.clone()).or_insert(next);
        if id == next {
            self.prims.push(p);
        }
        KatExpr::Prim(id)
    }

    fn test(&mut self, cmp: &Cmp, negated: bool) -> KatExpr {
        self.intern(Prim::Test(PrimTest { cmp: cmp.clone(), negated }))
    }

    fn pos(&mut self, t: &Test) -> KatExpr {
        match t {
            Test::Cmp(c) => self.test(c, false),
            Test::Not(t) => self.neg(t),
            Test::And(ts) => KatExpr::Seq(ts.iter().map(|t| self.pos(t)).collect()),
        }
    }

    /// Short-circuit failure: the first false conjunct decides.
    fn neg(&mut self, t: &Test) -> KatExpr {
        match t {
            Test::Cmp(c) => self.test(c, true),
            Test::Not(t) => self.pos(t),
            Test::And(ts) => KatExpr::Choice(
                (0..ts.len())
                    .map(|i| {
                        let mut seq: Vec<KatExpr> = ts[..i].iter().map(|t| self.pos(t)).collect();
                        seq.push(self.neg(&ts[i]));
                        KatExpr::Seq(seq)
                    })
                    .collect(),
            ),
        }
    }

    fn block(&mut self, ss: &[Stmt]) -> KatExpr {
        KatExpr::Seq(ss.iter().map(|s| self.stmt(s)).collect())
    }

    fn stmt(&mut self, s: &Stmt) -> KatExpr {
        match s {
            Stmt::Assign(t, e) => self.intern(Prim::Action(PrimAction::Assign(t.clone(), e.clone()))),
            Stmt::New(t) => self.intern(Prim::Action(PrimAction::Alloc(t.clone()))),
            Stmt::Any(t) => self.intern(Prim::Action(PrimAction::Pick(t.clone()))),
            Stmt::Return(es) => self.intern(Prim::Action(PrimAction::Return(es.clone()))),
            Stmt::Assume(t) => self.pos(t),
            Stmt::If(t, a, b) => {
                let yes = KatExpr::Seq(vec![self.pos(t), self.block(a)]);
                let no = KatExpr::Seq(vec![self.neg(t), self.block(b)]);
                KatExpr::Choice(vec![yes, no])
            }
            Stmt::Loop(b) => KatExpr::Seq(vec![KatExpr::Star(Box::new(self.block(b))), KatExpr::Zero]),
            Stmt::Cas(loc, exp, new, ok, fail) => {
                let cmp = Cmp { lhs: target_expr(loc), rel: Rel::Eq, rhs: exp.clone() };
                let arw = self.intern(Prim::Arw(vec![
                    ArwOp::Test(PrimTest { cmp: cmp.clone(), negated: false }),
                    ArwOp::Act(PrimAction::Assign(loc.clone(), new.clone())),
                ]));
                let yes = KatExpr::Seq(vec![arw, self.block(ok)]);
                let no = KatExpr::Seq(vec![self.test(&cmp, true), self.block(fail)]);
                KatExpr::Choice(vec![yes, no])
            }
            Stmt::Atomic(b) => self.atomic(b),
        }
    }

    /// One ARW per path through the block, followed by its return if any.
    fn atomic(&mut self, body: &[Stmt]) -> KatExpr {
        let mut inner = Interner::default();
        let words = inner.block(body).words();
        let mut alts = Vec::new();
        for w in words {
            let mut ops = Vec::new();
            let mut ret = None;
            for p in w {
                match &inner.prims[p] {
                    Prim::Test(t) => ops.push(ArwOp::Test(t.clone())),
                    Prim::Action(PrimAction::Return(es)) => {
                        ret = Some(es.clone());
                        break;
                    }
                    Prim::Action(a) => ops.push(ArwOp::Act(a.clone())),
                    Prim::Arw(_) => unreachable!("atomic blocks do not nest"),
                }
            }
            let mut seq = Vec::new();
            if !ops.is_empty() {
                seq.push(self.intern(Prim::Arw(ops)));
            }
            if let Some(es) = ret {
                seq.push(self.intern(Prim::Action(PrimAction::Return(es))));
                seq.push(KatExpr::Zero);
            }
            alts.push(KatExpr::Seq(seq));
        }
        KatExpr::Choice(alts)
    }
}

pub fn target_expr(t: &Target) -> Expr {
    match t {
        Target::Shared(v) => Expr::Shared(*v),
        Target::Local(l) => Expr::Local(*l),
        Target::Field(b, f) => Expr::Field(Box::new(b.clone()), *f),
    }
}

pub fn desugar_method(body: &[Stmt]) -> (Vec<Prim>, KatExpr) {
    let mut i = Interner::default();
    let k = i.block(body);
    (i.prims, k)
}

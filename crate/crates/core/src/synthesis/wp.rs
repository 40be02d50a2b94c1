//! Weakest preconditions of straight-line paths.

use super::predicate::*;
use crate::object_model::*;

struct WpCx<'a> {
    obj: &'a ObjectDef,
    m: &'a MethodDef,
    next_bound: u32,
}

impl WpCx<'_> {
    fn cx(&self) -> Cx<'_> {
        Cx { obj: self.obj, method: Some(self.m) }
    }

    fn simp(&self, p: Pred) -> Pred {
        simplify(&p, &self.cx())
    }
}

/// Weakest precondition of `steps` (primitive ids of `method`) for `post`.
///
/// The result mentions only shared state and the method's own arguments
/// (as `Input(Own, _)`). `Input(Own, _)` in `post` refers to the same
/// arguments. Range guards appear as `inrange` atoms.
pub fn wp(obj: &ObjectDef, method: MethodId, steps: &[PrimId], post: &Pred) -> Pred {
    let m = &obj.methods[method];
    let mut w = WpCx { obj, m, next_bound: 1000 };
    let arg_local = |n: &str| m.args.iter().position(|(a, _)| a == n);
    let mut phi = post.map_terms(&mut |t| {
        t.map(&mut |t| match t {
            Term::Input(Role::Own, n) => match arg_local(&n) {
                Some(l) => Term::Local(l),
                None => Term::Input(Role::Own, n),
            },
            t => t,
        })
    });

    // Allocation sites in forward order; a pick may return any earlier one.
    let mut sites: Vec<(usize, usize)> = Vec::new();
    for (i, s) in steps.iter().enumerate() {
        for (j, a) in actions(&m.prims[*s]).into_iter().enumerate() {
            if matches!(a, PrimAction::Alloc(_)) {
                sites.push((i, j));
            }
        }
    }

    for (i, s) in steps.iter().enumerate().rev() {
        let prim = &m.prims[*s];
        let ops: Vec<ArwOp> = match prim {
            Prim::Action(a) => vec![ArwOp::Act(a.clone())],
            Prim::Test(t) => vec![ArwOp::Test(t.clone())],
            Prim::Arw(ops) => ops.clone(),
        };
        let mut act_idx = ops.iter().filter(|o| matches!(o, ArwOp::Act(_))).count();
        for op in ops.iter().rev() {
            phi = match op {
                ArwOp::Test(t) => wp_test(&w, t, phi),
                ArwOp::Act(a) => {
                    act_idx -= 1;
                    let fresh_here = sites.iter().position(|&p| p == (i, act_idx)).map(|k| k as u32);
                    let earlier: Vec<u32> =
                        sites.iter().enumerate().filter(|(_, &(si, _))| si < i).map(|(k, _)| k as u32).collect();
                    wp_action(&mut w, a, phi, fresh_here, &earlier)
                }
            };
        }
    }

    let done = phi.map_terms(&mut |t| {
        t.map(&mut |t| match t {
            Term::Local(l) if l < m.args.len() => Term::Input(Role::Own, m.args[l].0.clone()),
            Term::Local(_) => Term::Undef,
            t => t,
        })
    });
    w.simp(done)
}

fn actions(p: &Prim) -> Vec<&PrimAction> {
    match p {
        Prim::Action(a) => vec![a],
        Prim::Test(_) => vec![],
        Prim::Arw(ops) => ops
            .iter()
            .filter_map(|o| match o {
                ArwOp::Act(a) => Some(a),
                _ => None,
            })
            .collect(),
    }
}

/// Definedness of evaluating `e`.
fn def(e: &Expr) -> Vec<Pred> {
    match e {
        Expr::Int(_) | Expr::Null | Expr::Shared(_) => vec![],
        Expr::Local(l) => vec![Pred::Atom(Atom::Def(Term::Local(*l)))],
        Expr::Field(b, _) => {
            let mut v = def(b);
            v.push(Pred::Atom(Atom::IsNode(Term::from_expr(b))));
            v
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let mut v = def(a);
            v.extend(def(b));
            v.push(Pred::Atom(Atom::IsInt(Term::from_expr(a))));
            v.push(Pred::Atom(Atom::IsInt(Term::from_expr(b))));
            v.push(Pred::Atom(Atom::InRange(Term::from_expr(e))));
            v
        }
    }
}

fn wp_test(w: &WpCx, t: &PrimTest, phi: Pred) -> Pred {
    let c = &t.cmp;
    let mut conj = def(&c.lhs);
    conj.extend(def(&c.rhs));
    let (a, b) = (Term::from_expr(&c.lhs), Term::from_expr(&c.rhs));
    if matches!(c.rel, Rel::Lt | Rel::Le) {
        conj.push(Pred::Atom(Atom::IsInt(a.clone())));
        conj.push(Pred::Atom(Atom::IsInt(b.clone())));
    }
    let lit = Pred::cmp(a, c.rel, b);
    conj.push(if t.negated { Pred::not(lit) } else { lit });
    conj.push(phi);
    w.simp(Pred::and(conj))
}

fn replace_term(phi: &Pred, from: &Term, to: &Term) -> Pred {
    phi.map_terms(&mut |t| t.map(&mut |t| if t == *from { to.clone() } else { t }))
}

/// `phi` with the value of `target` replaced by `val`, plus target definedness.
fn assign(w: &WpCx, target: &Target, val: &Term, phi: &Pred) -> Vec<Pred> {
    match target {
        Target::Local(l) => vec![replace_term(phi, &Term::Local(*l), val)],
        Target::Shared(v) => vec![replace_term(phi, &Term::Var(*v), val)],
        Target::Field(b, f) => {
            let mut conj = def(b);
            let base = Term::from_expr(b);
            conj.push(Pred::Atom(Atom::IsNode(base.clone())));
            conj.push(morris(w, phi, *f, &base, val));
            conj
        }
    }
}

/// Values of `t` after `base.f := val`, as guarded cases.
fn cases(t: &Term, f: FieldId, base: &Term, val: &Term) -> Vec<(Vec<Pred>, Term)> {
    match t {
        Term::Field(x, g) => {
            let mut out = Vec::new();
            for (conds, x2) in cases(x, f, base, val) {
                if *g != f {
                    out.push((conds, Term::field(x2, *g)));
                    continue;
                }
                let same = if x2 == *base { Some(true) } else { static_eq(&x2, base) };
                match same {
                    Some(true) => out.push((conds, val.clone())),
                    Some(false) => out.push((conds, Term::field(x2, *g))),
                    None => {
                        let eq = Pred::cmp(x2.clone(), Rel::Eq, base.clone());
                        let mut c1 = conds.clone();
                        c1.push(eq.clone());
                        out.push((c1, val.clone()));
                        let mut c2 = conds;
                        c2.push(Pred::not(eq));
                        out.push((c2, Term::field(x2, *g)));
                    }
                }
            }
            out
        }
        Term::Add(a, b) | Term::Sub(a, b) => {
            let mut out = Vec::new();
            for (ca, a2) in cases(a, f, base, val) {
                for (cb, b2) in cases(b, f, base, val) {
                    let mut c = ca.clone();
                    c.extend(cb);
                    let t2 = if matches!(t, Term::Add(..)) {
                        Term::Add(Box::new(a2.clone()), Box::new(b2))
                    } else {
                        Term::Sub(Box::new(a2.clone()), Box::new(b2))
                    };
                    out.push((c, t2));
                }
            }
            out
        }
        t => vec![(vec![], t.clone())],
    }
}

/// Field-update substitution with aliasing case splits.
fn morris(w: &WpCx, phi: &Pred, f: FieldId, base: &Term, val: &Term) -> Pred {
    let p = phi.map_atoms(&mut |a| {
        let rebuild = |ts: &[Term]| -> Pred {
            Pred::Atom(match a {
                Atom::Cmp(_, r, _) => Atom::Cmp(ts[0].clone(), *r, ts[1].clone()),
                Atom::IsNode(_) => Atom::IsNode(ts[0].clone()),
                Atom::IsInt(_) => Atom::IsInt(ts[0].clone()),
                Atom::Def(_) => Atom::Def(ts[0].clone()),
                Atom::InRange(_) => Atom::InRange(ts[0].clone()),
            })
        };
        let terms: Vec<&Term> = match a {
            Atom::Cmp(x, _, y) => vec![x, y],
            Atom::IsNode(t) | Atom::IsInt(t) | Atom::Def(t) | Atom::InRange(t) => vec![t],
        };
        let mut combos: Vec<(Vec<Pred>, Vec<Term>)> = vec![(vec![], vec![])];
        for t in terms {
            let cs = cases(t, f, base, val);
            let mut next = Vec::new();
            for (conds, ts) in &combos {
                for (c, t2) in &cs {
                    let mut cc = conds.clone();
                    cc.extend(c.iter().cloned());
                    let mut tt = ts.clone();
                    tt.push(t2.clone());
                    next.push((cc, tt));
                }
            }
            combos = next;
        }
        if combos.len() == 1 && combos[0].0.is_empty() {
            return rebuild(&combos[0].1);
        }
        Pred::or(
            combos
                .into_iter()
                .map(|(mut conds, ts)| {
                    conds.push(rebuild(&ts));
                    Pred::and(conds)
                })
                .collect(),
        )
    });
    w.simp(p)
}

/// Fields of a just-allocated node hold their defaults.
fn resolve_fresh(obj: &ObjectDef, phi: &Pred, id: u32) -> Pred {
    phi.map_terms(&mut |t| {
        t.map(&mut |t| match t {
            Term::Field(b, f) if *b == Term::Fresh(id) => match obj.fields[f].ty {
                Ty::Int => Term::Int(0),
                _ => Term::Null,
            },
            t => t,
        })
    })
}

fn wp_action(w: &mut WpCx, a: &PrimAction, phi: Pred, fresh: Option<u32>, earlier: &[u32]) -> Pred {
    let p = match a {
        PrimAction::Assign(t, e) => {
            let mut conj = def(e);
            conj.extend(assign(w, t, &Term::from_expr(e), &phi));
            Pred::and(conj)
        }
        PrimAction::Alloc(t) => {
            let id = fresh.expect("allocation site registered");
            let conj = assign(w, t, &Term::Fresh(id), &phi);
            resolve_fresh(w.obj, &Pred::and(conj), id)
        }
        PrimAction::Pick(t) => {
            let b = w.next_bound;
            w.next_bound += 1;
            let mut alts = vec![Pred::Exists(
                vec![(b, format!("x{b}"))],
                Box::new(Pred::and(assign(w, t, &Term::Bound(b), &phi))),
            )];
            for &i in earlier {
                alts.push(Pred::and(assign(w, t, &Term::Fresh(i), &phi)));
            }
            Pred::or(alts)
        }
        PrimAction::Return(es) => {
            let mut conj: Vec<Pred> = es.iter().flat_map(def).collect();
            conj.push(phi);
            Pred::and(conj)
        }
    };
    w.simp(p)
}

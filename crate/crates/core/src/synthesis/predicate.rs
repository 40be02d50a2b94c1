//! State predicates: syntax, printing, parsing, simplification, evaluation.

use std::fmt::Write;

use crate::interpreter::compare;
use crate::object_model::lexer::{lex, Tok, Token};
use crate::object_model::*;

/// Which thread of a query an input belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// The single thread a precondition is computed for.
    Own,
    Reader,
    Writer,
}

impl Role {
    fn suffix(self) -> &'static str {
        match self {
            Role::Own => "k",
            Role::Reader => "r",
            Role::Writer => "w",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Int(i64),
    Null,
    /// Value of a local that was never assigned.
    Undef,
    Var(VarId),
    /// Local of the path thread; only present while a precondition is built.
    Local(LocalId),
    /// Method argument of the thread playing `Role`.
    Input(Role, String),
    Field(Box<Term>, FieldId),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    /// Node allocated by the path; distinct from every pre-state node.
    Fresh(u32),
    Bound(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// False whenever either side is undefined.
    Cmp(Term, Rel, Term),
    IsNode(Term),
    IsInt(Term),
    /// The term evaluates without fault.
    Def(Term),
    /// Integer within the configured range; a domain guard, not a state fact.
    InRange(Term),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    True,
    False,
    Atom(Atom),
    Not(Box<Pred>),
    And(Vec<Pred>),
    Or(Vec<Pred>),
    /// Bound variables range over every node of the store.
    Exists(Vec<(u32, String)>, Box<Pred>),
}

impl Pred {
    pub fn cmp(a: Term, rel: Rel, b: Term) -> Pred {
        Pred::Atom(Atom::Cmp(a, rel, b))
    }

    pub fn not(p: Pred) -> Pred {
        Pred::Not(Box::new(p))
    }

    pub fn and(ps: Vec<Pred>) -> Pred {
        Pred::And(ps)
    }

    pub fn or(ps: Vec<Pred>) -> Pred {
        Pred::Or(ps)
    }

    pub fn is_trivial(&self) -> bool {
        matches!(self, Pred::True | Pred::False)
    }

    /// Rewrites every term bottom-up.
    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Pred {
        match self {
            Pred::True | Pred::False => self.clone(),
            Pred::Atom(a) => Pred::Atom(match a {
                Atom::Cmp(x, r, y) => Atom::Cmp(f(x), *r, f(y)),
                Atom::IsNode(t) => Atom::IsNode(f(t)),
                Atom::IsInt(t) => Atom::IsInt(f(t)),
                Atom::Def(t) => Atom::Def(f(t)),
                Atom::InRange(t) => Atom::InRange(f(t)),
            }),
            Pred::Not(p) => Pred::not(p.map_terms(f)),
            Pred::And(ps) => Pred::And(ps.iter().map(|p| p.map_terms(f)).collect()),
            Pred::Or(ps) => Pred::Or(ps.iter().map(|p| p.map_terms(f)).collect()),
            Pred::Exists(bs, p) => Pred::Exists(bs.clone(), Box::new(p.map_terms(f))),
        }
    }

    /// Rewrites every atom.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Pred) -> Pred {
        match self {
            Pred::True | Pred::False => self.clone(),
            Pred::Atom(a) => f(a),
            Pred::Not(p) => Pred::not(p.map_atoms(f)),
            Pred::And(ps) => Pred::And(ps.iter().map(|p| p.map_atoms(f)).collect()),
            Pred::Or(ps) => Pred::Or(ps.iter().map(|p| p.map_atoms(f)).collect()),
            Pred::Exists(bs, p) => Pred::Exists(bs.clone(), Box::new(p.map_atoms(f))),
        }
    }

    pub fn any_term(&self, f: &impl Fn(&Term) -> bool) -> bool {
        match self {
            Pred::True | Pred::False => false,
            Pred::Atom(a) => atom_terms(a).iter().any(|t| t.any(f)),
            Pred::Not(p) | Pred::Exists(_, p) => p.any_term(f),
            Pred::And(ps) | Pred::Or(ps) => ps.iter().any(|p| p.any_term(f)),
        }
    }

    pub fn mentions_input(&self) -> bool {
        self.any_term(&|t| matches!(t, Term::Input(..)))
    }

    /// Replaces domain guards by `true`.
    pub fn strip_guards(&self) -> Pred {
        self.map_atoms(&mut |a| match a {
            Atom::InRange(_) => Pred::True,
            a => Pred::Atom(a.clone()),
        })
    }

    /// Positive form of a literal: `!(p)` becomes `p`.
    pub fn positive(self) -> Pred {
        match self {
            Pred::Not(p) => *p,
            p => p,
        }
    }

    pub fn render(&self, obj: &ObjectDef) -> String {
        let mut s = String::new();
        render_pred(obj, self, &mut Vec::new(), &mut s);
        s
    }
}

fn atom_terms(a: &Atom) -> Vec<&Term> {
    match a {
        Atom::Cmp(x, _, y) => vec![x, y],
        Atom::IsNode(t) | Atom::IsInt(t) | Atom::Def(t) | Atom::InRange(t) => vec![t],
    }
}

impl Term {
    pub fn field(b: Term, f: FieldId) -> Term {
        Term::Field(Box::new(b), f)
    }

    pub fn any(&self, f: &impl Fn(&Term) -> bool) -> bool {
        if f(self) {
            return true;
        }
        match self {
            Term::Field(b, _) => b.any(f),
            Term::Add(a, b) | Term::Sub(a, b) => a.any(f) || b.any(f),
            _ => false,
        }
    }

    /// Bottom-up rewrite.
    pub fn map(&self, f: &mut impl FnMut(Term) -> Term) -> Term {
        let t = match self {
            Term::Field(b, g) => Term::Field(Box::new(b.map(f)), *g),
            Term::Add(a, b) => Term::Add(Box::new(a.map(f)), Box::new(b.map(f))),
            Term::Sub(a, b) => Term::Sub(Box::new(a.map(f)), Box::new(b.map(f))),
            t => t.clone(),
        };
        f(t)
    }

    pub fn from_expr(e: &Expr) -> Term {
        match e {
            Expr::Int(n) => Term::Int(*n),
            Expr::Null => Term::Null,
            Expr::Shared(v) => Term::Var(*v),
            Expr::Local(l) => Term::Local(*l),
            Expr::Field(b, f) => Term::field(Term::from_expr(b), *f),
            Expr::Add(a, b) => Term::Add(Box::new(Term::from_expr(a)), Box::new(Term::from_expr(b))),
            Expr::Sub(a, b) => Term::Sub(Box::new(Term::from_expr(a)), Box::new(Term::from_expr(b))),
        }
    }

    /// Never faults: no dereference, no unassigned local.
    fn total(&self) -> bool {
        !self.any(&|t| matches!(t, Term::Field(..) | Term::Undef | Term::Local(_)))
    }
}

fn render_term(obj: &ObjectDef, t: &Term, binders: &[(u32, String)], s: &mut String) {
    match t {
        Term::Int(n) => write!(s, "{n}").unwrap(),
        Term::Null => s.push_str("null"),
        Term::Undef => s.push_str("undef"),
        Term::Var(v) => s.push_str(&obj.shared[*v].name),
        Term::Local(l) => write!(s, "local#{l}").unwrap(),
        Term::Input(r, n) => write!(s, "{n}@{}", r.suffix()).unwrap(),
        Term::Field(b, f) => {
            render_term(obj, b, binders, s);
            write!(s, ".{}", obj.fields[*f].name).unwrap();
        }
        Term::Add(a, b) | Term::Sub(a, b) => {
            render_term(obj, a, binders, s);
            s.push_str(if matches!(t, Term::Add(..)) { " + " } else { " - " });
            let paren = matches!(**b, Term::Add(..) | Term::Sub(..));
            if paren {
                s.push('(');
            }
            render_term(obj, b, binders, s);
            if paren {
                s.push(')');
            }
        }
        Term::Fresh(i) => write!(s, "new#{i}").unwrap(),
        Term::Bound(i) => match binders.iter().rev().find(|(j, _)| j == i) {
            Some((_, n)) => s.push_str(n),
            None => write!(s, "x{i}").unwrap(),
        },
    }
}

fn render_atom(obj: &ObjectDef, a: &Atom, binders: &[(u32, String)], s: &mut String) {
    let call = |name: &str, t: &Term, s: &mut String| {
        write!(s, "{name}(").unwrap();
        render_term(obj, t, binders, s);
        s.push(')');
    };
    match a {
        Atom::Cmp(x, r, y) => {
            render_term(obj, x, binders, s);
            write!(s, " {} ", r.symbol()).unwrap();
            render_term(obj, y, binders, s);
        }
        Atom::IsNode(t) => call("node", t, s),
        Atom::IsInt(t) => call("int", t, s),
        Atom::Def(t) => call("def", t, s),
        Atom::InRange(t) => call("inrange", t, s),
    }
}

fn render_pred(obj: &ObjectDef, p: &Pred, binders: &mut Vec<(u32, String)>, s: &mut String) {
    match p {
        Pred::True => s.push_str("true"),
        Pred::False => s.push_str("false"),
        Pred::Atom(a) => render_atom(obj, a, binders, s),
        Pred::Not(q) => {
            s.push_str("!(");
            render_pred(obj, q, binders, s);
            s.push(')');
        }
        Pred::And(ps) | Pred::Or(ps) => {
            let sep = if matches!(p, Pred::And(_)) { " && " } else { " || " };
            for (i, q) in ps.iter().enumerate() {
                if i > 0 {
                    s.push_str(sep);
                }
                let paren = matches!(q, Pred::And(_) | Pred::Or(_) | Pred::Exists(..));
                if paren {
                    s.push('(');
                }
                render_pred(obj, q, binders, s);
                if paren {
                    s.push(')');
                }
            }
        }
        Pred::Exists(bs, q) => {
            let names: Vec<&str> = bs.iter().map(|(_, n)| n.as_str()).collect();
            write!(s, "exists {}. (", names.join(", ")).unwrap();
            let mark = binders.len();
            binders.extend(bs.iter().cloned());
            render_pred(obj, q, binders, s);
            binders.truncate(mark);
            s.push(')');
        }
    }
}

// ---------------------------------------------------------------- parsing

/// Parses one predicate over the shared state of `obj`.
///
/// Grammar: `||` binds loosest, then `&&`, then `!`. Atoms are comparisons,
/// `node(t)`, `int(t)`, `def(t)`, `inrange(t)`, `true`, `false` and
/// `exists x, y. (p)`. Terms are shared paths (`Q.tail.next`), bound names,
/// inputs `k@r` / `k@w`, integers and `null`.
pub fn parse_pred(obj: &ObjectDef, src: &str) -> Result<Pred, ParseError> {
    let toks = lex(src)?;
    let mut p = PredParser { obj, toks, pos: 0, binders: Vec::new(), next_bound: 0 };
    let r = p.disj()?;
    if p.peek() != &Tok::Eof {
        return Err(p.err("trailing input"));
    }
    Ok(r)
}

/// Parses a states file: one predicate per non-empty line, `#` comments.
pub fn parse_states(obj: &ObjectDef, src: &str) -> Result<Vec<Pred>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let p = parse_pred(obj, body).map_err(|e| match e {
            ParseError::Syntax { col, msg, .. } => ParseError::Syntax { line: i + 1, col, msg },
            ParseError::Undeclared { name, col, .. } => ParseError::Undeclared { name, line: i + 1, col },
            other => other,
        })?;
        out.push(p);
    }
    Ok(out)
}

struct PredParser<'a> {
    obj: &'a ObjectDef,
    toks: Vec<Token>,
    pos: usize,
    binders: Vec<(u32, String)>,
    next_bound: u32,
}

impl PredParser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: &str) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError::Syntax { line: t.line, col: t.col, msg: format!("{msg}, found {:?}", t.tok) }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(&format!("expected {t:?}")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            _ => {
                self.pos -= 1;
                Err(self.err("expected identifier"))
            }
        }
    }

    fn disj(&mut self) -> Result<Pred, ParseError> {
        let mut ps = vec![self.conj()?];
        while *self.peek() == Tok::OrOr {
            self.bump();
            ps.push(self.conj()?);
        }
        Ok(if ps.len() == 1 { ps.pop().unwrap() } else { Pred::Or(ps) })
    }

    fn conj(&mut self) -> Result<Pred, ParseError> {
        let mut ps = vec![self.unary()?];
        while *self.peek() == Tok::AndAnd {
            self.bump();
            ps.push(self.unary()?);
        }
        Ok(if ps.len() == 1 { ps.pop().unwrap() } else { Pred::And(ps) })
    }

    fn unary(&mut self) -> Result<Pred, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(Pred::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let p = self.disj()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Pred::True)
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Pred::False)
            }
            Tok::Ident(s) if s == "exists" && matches!(self.peek2(), Tok::Ident(_)) => {
                self.bump();
                let mut bs = Vec::new();
                loop {
                    let n = self.ident()?;
                    bs.push((self.next_bound, n));
                    self.next_bound += 1;
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Dot)?;
                let mark = self.binders.len();
                self.binders.extend(bs.iter().cloned());
                let body = self.unary()?;
                self.binders.truncate(mark);
                Ok(Pred::Exists(bs, Box::new(body)))
            }
            Tok::Ident(s) if matches!(s.as_str(), "node" | "int" | "def" | "inrange") && *self.peek2() == Tok::LParen => {
                self.bump();
                self.bump();
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(Pred::Atom(match s.as_str() {
                    "node" => Atom::IsNode(t),
                    "int" => Atom::IsInt(t),
                    "def" => Atom::Def(t),
                    _ => Atom::InRange(t),
                }))
            }
            _ => {
                let a = self.term()?;
                let (rel, swap) = match self.bump() {
                    Tok::EqEq => (Rel::Eq, false),
                    Tok::Ne => (Rel::Ne, false),
                    Tok::Lt => (Rel::Lt, false),
                    Tok::Le => (Rel::Le, false),
                    Tok::Gt => (Rel::Lt, true),
                    Tok::Ge => (Rel::Le, true),
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("expected comparison"));
                    }
                };
                let b = self.term()?;
                Ok(if swap { Pred::cmp(b, rel, a) } else { Pred::cmp(a, rel, b) })
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.primary()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    t = Term::Add(Box::new(t), Box::new(self.primary()?));
                }
                Tok::Minus => {
                    self.bump();
                    t = Term::Sub(Box::new(t), Box::new(self.primary()?));
                }
                _ => return Ok(t),
            }
        }
    }

    fn primary(&mut self) -> Result<Term, ParseError> {
        let (line, col) = (self.toks[self.pos].line, self.toks[self.pos].col);
        match self.bump() {
            Tok::Int(n) => Ok(Term::Int(n)),
            Tok::Minus => match self.bump() {
                Tok::Int(n) => Ok(Term::Int(-n)),
                _ => {
                    self.pos -= 1;
                    Err(self.err("expected integer"))
                }
            },
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(s) if s == "null" => Ok(Term::Null),
            Tok::Ident(first) => {
                let mut t = if *self.peek() == Tok::At {
                    self.bump();
                    let role = match self.ident()?.as_str() {
                        "r" => Role::Reader,
                        "w" => Role::Writer,
                        "k" => Role::Own,
                        _ => return Err(self.err("role must be `r`, `w` or `k`")),
                    };
                    Term::Input(role, first)
                } else if let Some((id, _)) = self.binders.iter().rev().find(|(_, n)| *n == first) {
                    Term::Bound(*id)
                } else {
                    // Longest dotted prefix naming a shared variable.
                    let mut parts = vec![first.clone()];
                    let mut look = self.pos;
                    while self.toks[look].tok == Tok::Dot {
                        if let Tok::Ident(n) = &self.toks[look + 1].tok {
                            parts.push(n.clone());
                            look += 2;
                        } else {
                            break;
                        }
                    }
                    let mut found = None;
                    for k in (1..=parts.len()).rev() {
                        if let Some(v) = self.obj.var_index(&parts[..k].join(".")) {
                            found = Some((v, k));
                            break;
                        }
                    }
                    let (v, k) = found.ok_or(ParseError::Undeclared { name: first, line, col })?;
                    self.pos += 2 * (k - 1);
                    Term::Var(v)
                };
                while *self.peek() == Tok::Dot {
                    self.bump();
                    let (fl, fc) = (self.toks[self.pos].line, self.toks[self.pos].col);
                    let f = self.ident()?;
                    let fid =
                        self.obj.field_index(&f).ok_or(ParseError::Undeclared { name: f, line: fl, col: fc })?;
                    t = Term::field(t, fid);
                }
                Ok(t)
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected term"))
            }
        }
    }
}

// ---------------------------------------------------------- simplification

/// Typing context for simplification.
#[derive(Clone, Copy)]
pub struct Cx<'a> {
    pub obj: &'a ObjectDef,
    pub method: Option<&'a MethodDef>,
}

impl Cx<'_> {
    fn ty(&self, t: &Term) -> Ty {
        match t {
            Term::Int(_) | Term::Add(..) | Term::Sub(..) => Ty::Int,
            Term::Null | Term::Fresh(_) | Term::Bound(_) => Ty::Ref,
            Term::Var(v) => self.obj.shared[*v].ty,
            Term::Field(_, f) => self.obj.fields[*f].ty,
            Term::Input(Role::Own, n) => self
                .method
                .and_then(|m| m.args.iter().find(|(a, _)| a == n).map(|(_, t)| *t))
                .unwrap_or(Ty::Any),
            Term::Input(..) | Term::Local(_) | Term::Undef => Ty::Any,
        }
    }
}

fn simplify_term(t: &Term) -> Term {
    t.map(&mut |t| match t {
        Term::Field(b, _) if matches!(*b, Term::Null | Term::Int(_) | Term::Undef) => Term::Undef,
        Term::Add(a, b) => match (*a, *b) {
            (Term::Int(x), Term::Int(y)) => Term::Int(x + y),
            (a, Term::Int(0)) => a,
            (a, b) => Term::Add(Box::new(a), Box::new(b)),
        },
        Term::Sub(a, b) => match (*a, *b) {
            (Term::Int(x), Term::Int(y)) => Term::Int(x - y),
            (a, Term::Int(0)) => a,
            (a, b) => Term::Sub(Box::new(a), Box::new(b)),
        },
        t => t,
    })
}

fn has_fresh(t: &Term) -> bool {
    t.any(&|t| matches!(t, Term::Fresh(_)))
}

/// Static equality of the values of two defined terms, if decidable.
pub(crate) fn static_eq(a: &Term, b: &Term) -> Option<bool> {
    use Term::*;
    match (a, b) {
        _ if a == b && a.total() => Some(true),
        (Int(x), Int(y)) => Some(x == y),
        (Null, Null) => Some(true),
        (Int(_), Null | Fresh(_) | Bound(_)) | (Null | Fresh(_) | Bound(_), Int(_)) => Some(false),
        (Null, Fresh(_) | Bound(_)) | (Fresh(_) | Bound(_), Null) => Some(false),
        (Fresh(i), Fresh(j)) => Some(i == j),
        // A fresh node is unreachable from every term over older states.
        (Fresh(_), t) | (t, Fresh(_)) if !has_fresh(t) => Some(false),
        _ => None,
    }
}

fn disjoint_sorts(x: Ty, y: Ty) -> bool {
    matches!((x, y), (Ty::Int, Ty::Ref) | (Ty::Ref, Ty::Int))
}

fn simplify_atom(a: &Atom, cx: &Cx) -> Pred {
    let keep = |a: Atom| Pred::Atom(a);
    if atom_terms(a).iter().any(|t| t.any(&|t| matches!(t, Term::Undef))) {
        return Pred::False;
    }
    match a {
        Atom::Cmp(x, rel, y) => {
            let (x, y) = (simplify_term(x), simplify_term(y));
            let total = x.total() && y.total();
            // Folding to false is sound even for faulting terms.
            let verdict = match rel {
                Rel::Eq | Rel::Ne => {
                    let eq = static_eq(&x, &y).or_else(|| disjoint_sorts(cx.ty(&x), cx.ty(&y)).then_some(false));
                    eq.map(|e| if *rel == Rel::Eq { e } else { !e })
                }
                Rel::Lt | Rel::Le => match (&x, &y) {
                    (Term::Int(a), Term::Int(b)) => Some(if *rel == Rel::Lt { a < b } else { a <= b }),
                    _ if *rel == Rel::Lt && x == y => Some(false),
                    _ if matches!(x, Term::Null | Term::Fresh(_) | Term::Bound(_))
                        || matches!(y, Term::Null | Term::Fresh(_) | Term::Bound(_)) =>
                    {
                        Some(false)
                    }
                    _ => None,
                },
            };
            match verdict {
                Some(false) => Pred::False,
                Some(true) if total => Pred::True,
                _ => keep(Atom::Cmp(x, *rel, y)),
            }
        }
        Atom::IsNode(t) => {
            let t = simplify_term(t);
            match &t {
                Term::Null | Term::Int(_) | Term::Add(..) | Term::Sub(..) => Pred::False,
                Term::Fresh(_) | Term::Bound(_) => Pred::True,
                _ => match cx.ty(&t) {
                    Ty::Int => Pred::False,
                    Ty::Ref if t.total() => Pred::not(Pred::cmp(t, Rel::Eq, Term::Null)),
                    Ty::Ref => Pred::cmp(t, Rel::Ne, Term::Null),
                    Ty::Any => keep(Atom::IsNode(t)),
                },
            }
        }
        Atom::IsInt(t) => {
            let t = simplify_term(t);
            match &t {
                Term::Int(_) => Pred::True,
                Term::Null | Term::Fresh(_) | Term::Bound(_) => Pred::False,
                _ => match (cx.ty(&t), &t) {
                    (Ty::Ref, _) => Pred::False,
                    (Ty::Int, Term::Field(b, _)) => simplify_atom(&Atom::IsNode((**b).clone()), cx),
                    (Ty::Int, _) if t.total() && !matches!(t, Term::Add(..) | Term::Sub(..)) => Pred::True,
                    _ => keep(Atom::IsInt(t)),
                },
            }
        }
        Atom::Def(t) => {
            let t = simplify_term(t);
            match &t {
                Term::Local(_) => keep(Atom::Def(t)),
                Term::Field(b, _) => simplify(
                    &Pred::and(vec![Pred::Atom(Atom::Def((**b).clone())), Pred::Atom(Atom::IsNode((**b).clone()))]),
                    cx,
                ),
                Term::Add(a, b) | Term::Sub(a, b) => simplify(
                    &Pred::and(vec![Pred::Atom(Atom::Def((**a).clone())), Pred::Atom(Atom::Def((**b).clone()))]),
                    cx,
                ),
                _ => Pred::True,
            }
        }
        Atom::InRange(t) => keep(Atom::InRange(simplify_term(t))),
    }
}

/// Range-dependent folding of `inrange` atoms over constants.
pub fn fold_ranges(p: &Pred, lo: i64, hi: i64) -> Pred {
    p.map_atoms(&mut |a| match a {
        Atom::InRange(Term::Int(n)) => {
            if (lo..=hi).contains(n) {
                Pred::True
            } else {
                Pred::False
            }
        }
        a => Pred::Atom(a.clone()),
    })
}

fn negation_of(a: &Pred, b: &Pred) -> bool {
    matches!(a, Pred::Not(x) if **x == *b) || matches!(b, Pred::Not(x) if **x == *a)
}

pub fn simplify(p: &Pred, cx: &Cx) -> Pred {
    match p {
        Pred::True | Pred::False => p.clone(),
        Pred::Atom(a) => simplify_atom(a, cx),
        Pred::Not(q) => match simplify(q, cx) {
            Pred::True => Pred::False,
            Pred::False => Pred::True,
            Pred::Not(r) => *r,
            r => Pred::not(r),
        },
        Pred::And(ps) | Pred::Or(ps) => {
            let is_and = matches!(p, Pred::And(_));
            let (unit, zero) = if is_and { (Pred::True, Pred::False) } else { (Pred::False, Pred::True) };
            let mut out: Vec<Pred> = Vec::new();
            let push = |q: Pred, out: &mut Vec<Pred>| -> bool {
                if q == zero || out.iter().any(|o| negation_of(o, &q)) {
                    return false;
                }
                if q != unit && !out.contains(&q) {
                    out.push(q);
                }
                true
            };
            for q in ps {
                let q = simplify(q, cx);
                let flat = match q {
                    Pred::And(qs) if is_and => qs,
                    Pred::Or(qs) if !is_and => qs,
                    q => vec![q],
                };
                for r in flat {
                    if !push(r, &mut out) {
                        return zero;
                    }
                }
            }
            match out.len() {
                0 => unit,
                1 => out.pop().unwrap(),
                _ if is_and => Pred::And(out),
                _ => Pred::Or(out),
            }
        }
        Pred::Exists(bs, q) => match simplify(q, cx) {
            Pred::False => Pred::False,
            q => Pred::Exists(bs.clone(), Box::new(q)),
        },
    }
}

// -------------------------------------------------------------- evaluation

/// Read access for predicate evaluation. Lazily initialized stores make
/// choices inside these calls.
pub trait PredStore {
    fn int_range(&self) -> (i64, i64);
    fn var(&mut self, v: VarId) -> Value;
    /// `None` for a reference that names no node.
    fn field(&mut self, r: u32, f: FieldId) -> Option<Value>;
    fn input(&mut self, role: Role, name: &str) -> Value;
    fn local(&mut self, l: LocalId) -> Value;
    /// Every node of the store; fixes the node set of a lazy store.
    fn universe(&mut self) -> Vec<u32>;
}

/// Value of a term; `None` when evaluation faults.
pub fn eval_term<S: PredStore + ?Sized>(s: &mut S, t: &Term, env: &[(u32, u32)]) -> Option<Value> {
    let v = match t {
        Term::Int(n) => Value::Int(*n),
        Term::Null => Value::Null,
        Term::Undef | Term::Fresh(_) => return None,
        Term::Var(v) => s.var(*v),
        Term::Local(l) => s.local(*l),
        Term::Input(r, n) => s.input(*r, n),
        Term::Field(b, f) => match eval_term(s, b, env)? {
            Value::Ref(r) => s.field(r, *f)?,
            _ => return None,
        },
        Term::Add(a, b) | Term::Sub(a, b) => match (eval_term(s, a, env)?, eval_term(s, b, env)?) {
            (Value::Int(x), Value::Int(y)) => Value::Int(if matches!(t, Term::Add(..)) { x + y } else { x - y }),
            _ => return None,
        },
        Term::Bound(i) => Value::Ref(env.iter().rev().find(|(j, _)| j == i)?.1),
    };
    (v != Value::Undef).then_some(v)
}

pub fn eval_atom<S: PredStore + ?Sized>(s: &mut S, a: &Atom, env: &[(u32, u32)]) -> bool {
    match a {
        Atom::Cmp(x, rel, y) => match (eval_term(s, x, env), eval_term(s, y, env)) {
            (Some(a), Some(b)) => compare(*rel, a, b).unwrap_or(false),
            _ => false,
        },
        Atom::IsNode(t) => matches!(eval_term(s, t, env), Some(Value::Ref(_))),
        Atom::IsInt(t) => matches!(eval_term(s, t, env), Some(Value::Int(_))),
        Atom::Def(t) => eval_term(s, t, env).is_some(),
        Atom::InRange(t) => {
            let (lo, hi) = s.int_range();
            matches!(eval_term(s, t, env), Some(Value::Int(n)) if (lo..=hi).contains(&n))
        }
    }
}

pub fn eval_pred<S: PredStore + ?Sized>(s: &mut S, p: &Pred) -> bool {
    eval_in(s, p, &mut Vec::new())
}

fn eval_in<S: PredStore + ?Sized>(s: &mut S, p: &Pred, env: &mut Vec<(u32, u32)>) -> bool {
    match p {
        Pred::True => true,
        Pred::False => false,
        Pred::Atom(a) => eval_atom(s, a, env),
        Pred::Not(q) => !eval_in(s, q, env),
        Pred::And(qs) => qs.iter().all(|q| eval_in(s, q, env)),
        Pred::Or(qs) => qs.iter().any(|q| eval_in(s, q, env)),
        Pred::Exists(bs, q) => {
            let nodes = s.universe();
            exists_rec(s, bs, 0, &nodes, q, env)
        }
    }
}

fn exists_rec<S: PredStore + ?Sized>(
    s: &mut S,
    bs: &[(u32, String)],
    i: usize,
    nodes: &[u32],
    q: &Pred,
    env: &mut Vec<(u32, u32)>,
) -> bool {
    if i == bs.len() {
        return eval_in(s, q, env);
    }
    for &n in nodes {
        env.push((bs[i].0, n));
        let hit = exists_rec(s, bs, i + 1, nodes, q, env);
        env.pop();
        if hit {
            return true;
        }
    }
    false
}

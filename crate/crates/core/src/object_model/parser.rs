use std::collections::BTreeSet;

use super::cfg::Cfg;
use super::kat::desugar_method;
use super::lexer::{lex, Tok, Token};
use super::*;

#[derive(Clone, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug)]
enum UExpr {
    Int(i64),
    Null,
    Path(Vec<String>, Pos),
    Add(Box<UExpr>, Box<UExpr>),
    Sub(Box<UExpr>, Box<UExpr>),
}

#[derive(Clone, Debug)]
enum UTest {
    Cmp(UExpr, Tok, UExpr),
    Not(Box<UTest>),
    And(Vec<UTest>),
}

#[derive(Clone, Debug)]
enum URhs {
    Expr(UExpr),
    New,
    Any,
}

#[derive(Clone, Debug)]
enum UStmt {
    Assign(Vec<String>, Pos, URhs),
    Assume(UTest),
    If(UTest, Vec<UStmt>, Vec<UStmt>),
    Loop(Vec<UStmt>, Pos),
    Return(Vec<UExpr>, Pos),
    Cas(Vec<UExpr>, Pos, Vec<UStmt>, Vec<UStmt>),
    Atomic(Vec<UStmt>, Pos),
}

struct UMethod {
    name: String,
    args: Vec<(String, Ty, Pos)>,
    body: Vec<UStmt>,
    pos: Pos,
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        let t = &self.toks[self.i];
        Pos { line: t.line, col: t.col }
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let p = self.pos();
        Err(ParseError::Syntax { line: p.line, col: p.col, msg: msg.into() })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{kw}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected {what}, found {}", describe(&other))),
        }
    }

    fn dotted(&mut self, what: &str) -> PResult<Vec<String>> {
        let mut parts = vec![self.ident(what)?];
        while *self.peek() == Tok::Dot {
            self.bump();
            parts.push(self.ident("field name")?);
        }
        Ok(parts)
    }

    fn ty(&mut self) -> PResult<Ty> {
        if self.is_kw("int") {
            self.bump();
            Ok(Ty::Int)
        } else if self.is_kw("ref") {
            self.bump();
            Ok(Ty::Ref)
        } else {
            self.err(format!("expected type `int` or `ref`, found {}", describe(self.peek())))
        }
    }

    fn int_literal(&mut self) -> PResult<i64> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Tok::Int(n) => Ok(if neg { -n } else { n }),
            other => {
                self.i -= 1;
                self.err(format!("expected integer, found {}", describe(&other)))
            }
        }
    }

    fn atom(&mut self) -> PResult<UExpr> {
        match self.peek().clone() {
            Tok::Int(_) | Tok::Minus => Ok(UExpr::Int(self.int_literal()?)),
            Tok::Ident(s) if s == "null" => {
                self.bump();
                Ok(UExpr::Null)
            }
            Tok::Ident(_) => {
                let p = self.pos();
                Ok(UExpr::Path(self.dotted("expression")?, p))
            }
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }

    fn expr(&mut self) -> PResult<UExpr> {
        let mut e = self.atom()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    e = UExpr::Add(Box::new(e), Box::new(self.atom()?));
                }
                Tok::Minus => {
                    self.bump();
                    e = UExpr::Sub(Box::new(e), Box::new(self.atom()?));
                }
                _ => return Ok(e),
            }
        }
    }

    fn test(&mut self) -> PResult<UTest> {
        let mut parts = vec![self.test_unary()?];
        while *self.peek() == Tok::AndAnd {
            self.bump();
            parts.push(self.test_unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { UTest::And(parts) })
    }

    fn test_unary(&mut self) -> PResult<UTest> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(UTest::Not(Box::new(self.test_unary()?)))
            }
            Tok::LParen => {
                self.bump();
                let t = self.test()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => {
                let l = self.expr()?;
                let op = match self.peek() {
                    Tok::EqEq | Tok::Ne | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge => self.bump(),
                    other => return self.err(format!("expected comparison, found {}", describe(other))),
                };
                let r = self.expr()?;
                Ok(UTest::Cmp(l, op, r))
            }
        }
    }

    fn block(&mut self) -> PResult<Vec<UStmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.err("unterminated block");
            }
            out.push(self.stmt()?);
        }
        self.bump();
        Ok(out)
    }

    fn opt_else(&mut self) -> PResult<Vec<UStmt>> {
        if self.is_kw("else") {
            self.bump();
            self.block()
        } else {
            Ok(Vec::new())
        }
    }

    fn stmt(&mut self) -> PResult<UStmt> {
        let p = self.pos();
        if self.is_kw("loop") {
            self.bump();
            return Ok(UStmt::Loop(self.block()?, p));
        }
        if self.is_kw("atomic") {
            self.bump();
            return Ok(UStmt::Atomic(self.block()?, p));
        }
        if self.is_kw("if") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            let t = self.test()?;
            self.expect(Tok::RParen, "`)`")?;
            let th = self.block()?;
            let el = self.opt_else()?;
            return Ok(UStmt::If(t, th, el));
        }
        if self.is_kw("assume") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            let t = self.test()?;
            self.expect(Tok::RParen, "`)`")?;
            self.expect(Tok::Semi, "`;`")?;
            return Ok(UStmt::Assume(t));
        }
        if self.is_kw("return") {
            self.bump();
            let mut es = Vec::new();
            if *self.peek() != Tok::Semi {
                es.push(self.expr()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    es.push(self.expr()?);
                }
            }
            self.expect(Tok::Semi, "`;`")?;
            return Ok(UStmt::Return(es, p));
        }
        if self.is_kw("cas") {
            self.bump();
            self.expect(Tok::LParen, "`(`")?;
            let mut args = vec![self.expr()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            let s = self.block()?;
            let f = self.opt_else()?;
            return Ok(UStmt::Cas(args, p, s, f));
        }
        let target = self.dotted("statement")?;
        self.expect(Tok::Assign, "`:=`")?;
        let rhs = if self.is_kw("new") {
            self.bump();
            URhs::New
        } else if self.is_kw("any") {
            self.bump();
            URhs::Any
        } else {
            URhs::Expr(self.expr()?)
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(UStmt::Assign(target, p, rhs))
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "object" | "shared" | "node" | "method" | "returns" | "loop" | "if" | "else" | "assume" | "return" | "cas"
            | "atomic" | "new" | "any" | "null"
    )
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::Eof => "end of input".into(),
        other => format!("{other:?}"),
    }
}

/// Parses DSL source into a checked object definition.
pub fn parse_object(src: &str) -> Result<ObjectDef, ParseError> {
    let mut p = Parser { toks: lex(src)?, i: 0 };
    p.expect_kw("object")?;
    let name = p.ident("object name")?;
    let mut shared: Vec<SharedDecl> = Vec::new();
    let mut fields: Vec<FieldDecl> = Vec::new();
    let mut umethods = Vec::new();
    let mut saw_node = false;
    loop {
        if *p.peek() == Tok::Eof {
            break;
        }
        if p.is_kw("shared") {
            p.bump();
            let pos = p.pos();
            let nm = p.dotted("shared variable name")?.join(".");
            if shared.iter().any(|s| s.name == nm) {
                return Err(semantic_at(&pos, format!("duplicate shared variable `{nm}`")));
            }
            p.expect(Tok::Colon, "`:`")?;
            let ty = p.ty()?;
            p.expect(Tok::Eq, "`=`")?;
            let ipos = p.pos();
            let init = match p.peek().clone() {
                Tok::Int(_) | Tok::Minus => Init::Int(p.int_literal()?),
                Tok::Ident(s) if s == "null" => {
                    p.bump();
                    Init::Null
                }
                Tok::Ident(s) if s == "new" => {
                    p.bump();
                    Init::New
                }
                Tok::Ident(_) => {
                    let other = p.dotted("initial value")?.join(".");
                    match shared.iter().position(|s| s.name == other) {
                        Some(v) => Init::Alias(v),
                        None => {
                            return Err(ParseError::Undeclared { name: other, line: ipos.line, col: ipos.col })
                        }
                    }
                }
                other => return p.err(format!("expected initial value, found {}", describe(&other))),
            };
            let ok = match (&init, ty) {
                (Init::Int(_), Ty::Int) => true,
                (Init::Null | Init::New, Ty::Ref) => true,
                (Init::Alias(v), t) => shared[*v].ty == t,
                _ => false,
            };
            if !ok {
                return Err(semantic_at(&ipos, format!("initial value of `{nm}` does not match type {ty}")));
            }
            shared.push(SharedDecl { name: nm, ty, init });
        } else if p.is_kw("node") {
            p.bump();
            if saw_node {
                return p.err("duplicate node declaration");
            }
            saw_node = true;
            p.expect(Tok::LBrace, "`{`")?;
            loop {
                let pos = p.pos();
                let f = p.ident("field name")?;
                if fields.iter().any(|d| d.name == f) {
                    return Err(semantic_at(&pos, format!("duplicate field `{f}`")));
                }
                let (ty, annotated) = if *p.peek() == Tok::Colon {
                    p.bump();
                    (p.ty()?, true)
                } else {
                    (Ty::Any, false)
                };
                fields.push(FieldDecl { name: f, ty, annotated });
                if *p.peek() == Tok::Comma {
                    p.bump();
                    continue;
                }
                break;
            }
            p.expect(Tok::RBrace, "`}`")?;
        } else if p.is_kw("method") {
            let pos = p.pos();
            p.bump();
            let mname = p.ident("method name")?;
            p.expect(Tok::LParen, "`(`")?;
            let mut args = Vec::new();
            while *p.peek() != Tok::RParen {
                let apos = p.pos();
                let a = p.ident("argument name")?;
                let ty = if *p.peek() == Tok::Colon {
                    p.bump();
                    p.ty()?
                } else {
                    Ty::Int
                };
                args.push((a, ty, apos));
                if *p.peek() == Tok::Comma {
                    p.bump();
                } else {
                    break;
                }
            }
            p.expect(Tok::RParen, "`)`")?;
            p.expect_kw("returns")?;
            p.expect_kw("int")?;
            let body = p.block()?;
            umethods.push(UMethod { name: mname, args, body, pos });
        } else {
            return p.err(format!("expected declaration, found {}", describe(p.peek())));
        }
    }
    let mut obj = ObjectDef { name, shared, fields, methods: Vec::new() };
    for um in umethods {
        if obj.method_index(&um.name).is_some() {
            return Err(semantic_at(&um.pos, format!("duplicate method `{}`", um.name)));
        }
        let m = resolve_method(&obj, um)?;
        obj.methods.push(m);
    }
    Ok(obj)
}

fn semantic_at(p: &Pos, msg: String) -> ParseError {
    ParseError::Syntax { line: p.line, col: p.col, msg }
}

struct Resolver<'a> {
    obj: &'a ObjectDef,
    locals: Vec<String>,
}

impl Resolver<'_> {
    fn path_expr(&self, parts: &[String], pos: &Pos) -> PResult<Expr> {
        for k in (1..=parts.len()).rev() {
            let joined = parts[..k].join(".");
            if let Some(v) = self.obj.var_index(&joined) {
                return self.fields(Expr::Shared(v), &parts[k..], pos);
            }
        }
        match self.locals.iter().position(|l| *l == parts[0]) {
            Some(l) => self.fields(Expr::Local(l), &parts[1..], pos),
            None => Err(ParseError::Undeclared { name: parts.join("."), line: pos.line, col: pos.col }),
        }
    }

    fn fields(&self, mut base: Expr, rest: &[String], pos: &Pos) -> PResult<Expr> {
        for f in rest {
            let fid = self.obj.field_index(f).ok_or_else(|| ParseError::Undeclared {
                name: format!("field {f}"),
                line: pos.line,
                col: pos.col,
            })?;
            base = Expr::Field(Box::new(base), fid);
        }
        Ok(base)
    }

    fn expr(&self, e: &UExpr) -> PResult<Expr> {
        Ok(match e {
            UExpr::Int(n) => Expr::Int(*n),
            UExpr::Null => Expr::Null,
            UExpr::Path(parts, pos) => self.path_expr(parts, pos)?,
            UExpr::Add(a, b) => Expr::Add(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
            UExpr::Sub(a, b) => Expr::Sub(Box::new(self.expr(a)?), Box::new(self.expr(b)?)),
        })
    }

    fn target(&self, parts: &[String], pos: &Pos) -> PResult<Target> {
        match self.path_expr(parts, pos)? {
            Expr::Shared(v) => Ok(Target::Shared(v)),
            Expr::Local(l) => Ok(Target::Local(l)),
            Expr::Field(base, f) => Ok(Target::Field(*base, f)),
            _ => unreachable!("paths resolve to variables or fields"),
        }
    }

    fn expr_target(&self, e: &UExpr, pos: &Pos) -> PResult<Target> {
        match e {
            UExpr::Path(parts, p) => self.target(parts, p),
            _ => Err(semantic_at(pos, "cas location must be a variable or field".into())),
        }
    }

    fn test(&self, t: &UTest) -> PResult<Test> {
        Ok(match t {
            UTest::Cmp(l, op, r) => {
                let (l, r) = (self.expr(l)?, self.expr(r)?);
                let cmp = match op {
                    Tok::EqEq => Cmp { lhs: l, rel: Rel::Eq, rhs: r },
                    Tok::Ne => Cmp { lhs: l, rel: Rel::Ne, rhs: r },
                    Tok::Lt => Cmp { lhs: l, rel: Rel::Lt, rhs: r },
                    Tok::Le => Cmp { lhs: l, rel: Rel::Le, rhs: r },
                    Tok::Gt => Cmp { lhs: r, rel: Rel::Lt, rhs: l },
                    Tok::Ge => Cmp { lhs: r, rel: Rel::Le, rhs: l },
                    _ => unreachable!("comparison operators only"),
                };
                Test::Cmp(cmp)
            }
            UTest::Not(t) => Test::Not(Box::new(self.test(t)?)),
            UTest::And(ts) => Test::And(ts.iter().map(|t| self.test(t)).collect::<PResult<_>>()?),
        })
    }

    fn stmts(&self, ss: &[UStmt], arity: usize, in_atomic: bool) -> PResult<Vec<Stmt>> {
        ss.iter().map(|s| self.stmt(s, arity, in_atomic)).collect()
    }

    fn stmt(&self, s: &UStmt, arity: usize, in_atomic: bool) -> PResult<Stmt> {
        let forbid = |pos: &Pos, what: &str| -> PResult<()> {
            if in_atomic {
                Err(semantic_at(pos, format!("`{what}` is not allowed inside `atomic`")))
            } else {
                Ok(())
            }
        };
        Ok(match s {
            UStmt::Assign(parts, pos, rhs) => {
                let t = self.target(parts, pos)?;
                match rhs {
                    URhs::Expr(e) => Stmt::Assign(t, self.expr(e)?),
                    URhs::New => {
                        forbid(pos, "new")?;
                        Stmt::New(t)
                    }
                    URhs::Any => {
                        forbid(pos, "any")?;
                        if !matches!(t, Target::Local(_)) {
                            return Err(semantic_at(pos, "`any` may only be assigned to a local".into()));
                        }
                        Stmt::Any(t)
                    }
                }
            }
            UStmt::Assume(t) => Stmt::Assume(self.test(t)?),
            UStmt::If(t, a, b) => {
                Stmt::If(self.test(t)?, self.stmts(a, arity, in_atomic)?, self.stmts(b, arity, in_atomic)?)
            }
            UStmt::Loop(b, pos) => {
                forbid(pos, "loop")?;
                if b.is_empty() {
                    return Err(semantic_at(pos, "empty loop body".into()));
                }
                Stmt::Loop(self.stmts(b, arity, false)?)
            }
            UStmt::Return(es, pos) => {
                if es.len() != arity {
                    return Err(ParseError::Arity {
                        line: pos.line,
                        col: pos.col,
                        msg: format!("return carries {} value(s), method returns {}", es.len(), arity),
                    });
                }
                Stmt::Return(es.iter().map(|e| self.expr(e)).collect::<PResult<_>>()?)
            }
            UStmt::Cas(args, pos, a, b) => {
                forbid(pos, "cas")?;
                if args.len() != 3 {
                    return Err(ParseError::Arity {
                        line: pos.line,
                        col: pos.col,
                        msg: format!("cas takes 3 arguments, found {}", args.len()),
                    });
                }
                Stmt::Cas(
                    self.expr_target(&args[0], pos)?,
                    self.expr(&args[1])?,
                    self.expr(&args[2])?,
                    self.stmts(a, arity, false)?,
                    self.stmts(b, arity, false)?,
                )
            }
            UStmt::Atomic(b, pos) => {
                forbid(pos, "atomic")?;
                Stmt::Atomic(self.stmts(b, arity, true)?)
            }
        })
    }
}

fn collect_locals(obj: &ObjectDef, ss: &[UStmt], out: &mut Vec<String>, seen: &mut BTreeSet<String>) {
    for s in ss {
        match s {
            UStmt::Assign(parts, _, _) if parts.len() == 1 => {
                let n = &parts[0];
                if obj.var_index(n).is_none() && seen.insert(n.clone()) {
                    out.push(n.clone());
                }
            }
            UStmt::If(_, a, b) | UStmt::Cas(_, _, a, b) => {
                collect_locals(obj, a, out, seen);
                collect_locals(obj, b, out, seen);
            }
            UStmt::Loop(b, _) | UStmt::Atomic(b, _) => collect_locals(obj, b, out, seen),
            _ => {}
        }
    }
}

fn resolve_method(obj: &ObjectDef, um: UMethod) -> PResult<MethodDef> {
    let mut locals = Vec::new();
    let mut seen = BTreeSet::new();
    for (a, _, pos) in &um.args {
        if obj.var_index(a).is_some() {
            return Err(semantic_at(pos, format!("argument `{a}` shadows a shared variable")));
        }
        if !seen.insert(a.clone()) {
            return Err(semantic_at(pos, format!("duplicate argument `{a}`")));
        }
        locals.push(a.clone());
    }
    collect_locals(obj, &um.body, &mut locals, &mut seen);
    let r = Resolver { obj, locals };
    let body = r.stmts(&um.body, 1, false)?;
    let args: Vec<(String, Ty)> = um.args.iter().map(|(a, t, _)| (a.clone(), *t)).collect();
    let (prims, kat) = desugar_method(&body);
    let cfg = Cfg::build(&kat);
    if cfg.falls_through(&prims) {
        return Err(ParseError::Semantic(format!("method `{}` can reach its end without returning", um.name)));
    }
    Ok(MethodDef { name: um.name, args, ret_arity: 1, locals: r.locals, body, prims, kat, cfg })
}

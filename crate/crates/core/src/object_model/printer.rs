use std::fmt::Write;

use super::*;

/// Name resolution for rendering resolved syntax.
#[derive(Clone, Copy)]
pub struct Names<'a> {
    pub obj: &'a ObjectDef,
}

impl Names<'_> {
    pub fn expr(&self, m: &MethodDef, e: &Expr) -> String {
        match e {
            Expr::Int(n) => n.to_string(),
            Expr::Null => "null".into(),
            Expr::Shared(v) => self.obj.shared[*v].name.clone(),
            Expr::Local(l) => m.locals[*l].clone(),
            Expr::Field(b, f) => format!("{}.{}", self.expr(m, b), self.obj.fields[*f].name),
            Expr::Add(a, b) => format!("{} + {}", self.expr(m, a), self.operand(m, b)),
            Expr::Sub(a, b) => format!("{} - {}", self.expr(m, a), self.operand(m, b)),
        }
    }

    fn operand(&self, m: &MethodDef, e: &Expr) -> String {
        // The grammar has no parentheses in arithmetic; right operands are atoms.
        self.expr(m, e)
    }

    pub fn cmp(&self, m: &MethodDef, c: &Cmp) -> String {
        format!("{} {} {}", self.expr(m, &c.lhs), c.rel.symbol(), self.expr(m, &c.rhs))
    }

    pub fn prim_test(&self, m: &MethodDef, t: &PrimTest) -> String {
        if t.negated {
            format!("!({})", self.cmp(m, &t.cmp))
        } else {
            self.cmp(m, &t.cmp)
        }
    }

    pub fn test(&self, m: &MethodDef, t: &Test) -> String {
        match t {
            Test::Cmp(c) => self.cmp(m, c),
            Test::Not(inner) => match inner.as_ref() {
                Test::Cmp(c) => format!("!({})", self.cmp(m, c)),
                other => format!("!({})", self.test(m, other)),
            },
            Test::And(ts) => ts
                .iter()
                .map(|t| match t {
                    Test::And(_) => format!("({})", self.test(m, t)),
                    _ => self.test(m, t),
                })
                .collect::<Vec<_>>()
                .join(" && "),
        }
    }

    pub fn target(&self, m: &MethodDef, t: &Target) -> String {
        match t {
            Target::Shared(v) => self.obj.shared[*v].name.clone(),
            Target::Local(l) => m.locals[*l].clone(),
            Target::Field(b, f) => format!("{}.{}", self.expr(m, b), self.obj.fields[*f].name),
        }
    }

    pub fn action(&self, m: &MethodDef, a: &PrimAction) -> String {
        match a {
            PrimAction::Assign(t, e) => format!("{} := {}", self.target(m, t), self.expr(m, e)),
            PrimAction::Alloc(t) => format!("{} := new", self.target(m, t)),
            PrimAction::Pick(t) => format!("{} := any", self.target(m, t)),
            PrimAction::Return(es) => {
                format!("return {}", es.iter().map(|e| self.expr(m, e)).collect::<Vec<_>>().join(", "))
            }
        }
    }

    /// Label text of a primitive in DSL surface syntax.
    pub fn prim(&self, m: &MethodDef, p: &Prim) -> String {
        match p {
            Prim::Action(a) => self.action(m, a),
            Prim::Test(t) => format!("assume({})", self.prim_test(m, t)),
            Prim::Arw(ops) => {
                let mut s = String::from("atomic {");
                for op in ops {
                    match op {
                        ArwOp::Test(t) => write!(s, " assume({});", self.prim_test(m, t)).unwrap(),
                        ArwOp::Act(a) => write!(s, " {};", self.action(m, a)).unwrap(),
                    }
                }
                s.push_str(" }");
                s
            }
        }
    }

    /// Compact `{guard | actions}` rendering used in synthesis logs.
    pub fn arw_brief(&self, m: &MethodDef, ops: &[ArwOp]) -> String {
        let guards: Vec<String> = ops
            .iter()
            .filter_map(|o| match o {
                ArwOp::Test(t) => Some(self.prim_test(m, t)),
                _ => None,
            })
            .collect();
        let acts: Vec<String> = ops
            .iter()
            .filter_map(|o| match o {
                ArwOp::Act(a) => Some(format!("{};", self.action(m, a))),
                _ => None,
            })
            .collect();
        format!("{{{} | {}}}", guards.join(" && "), acts.join(" "))
    }
}

/// Canonical source text; `parse_object(print_object(o)) == o`.
pub fn print_object(obj: &ObjectDef) -> String {
    let names = obj.names();
    let mut s = String::new();
    writeln!(s, "object {}", obj.name).unwrap();
    for d in &obj.shared {
        let init = match &d.init {
            Init::Int(n) => n.to_string(),
            Init::Null => "null".into(),
            Init::New => "new".into(),
            Init::Alias(v) => obj.shared[*v].name.clone(),
        };
        writeln!(s, "shared {}: {} = {}", d.name, d.ty, init).unwrap();
    }
    if !obj.fields.is_empty() {
        let fs: Vec<String> = obj
            .fields
            .iter()
            .map(|f| if f.annotated { format!("{}: {}", f.name, f.ty) } else { f.name.clone() })
            .collect();
        writeln!(s, "node {{{}}}", fs.join(", ")).unwrap();
    }
    for m in &obj.methods {
        s.push('\n');
        let args: Vec<String> = m.args.iter().map(|(a, t)| format!("{a}: {t}")).collect();
        writeln!(s, "method {}({}) returns int {{", m.name, args.join(", ")).unwrap();
        block(&names, m, &m.body, 1, &mut s);
        s.push_str("}\n");
    }
    s
}

fn indent(s: &mut String, depth: usize) {
    for _ in 0..depth {
        s.push_str("  ");
    }
}

fn block(n: &Names, m: &MethodDef, ss: &[Stmt], depth: usize, s: &mut String) {
    for st in ss {
        stmt(n, m, st, depth, s);
    }
}

fn braces(n: &Names, m: &MethodDef, head: String, a: &[Stmt], b: Option<&[Stmt]>, depth: usize, s: &mut String) {
    indent(s, depth);
    s.push_str(&head);
    s.push_str(" {\n");
    block(n, m, a, depth + 1, s);
    indent(s, depth);
    match b {
        Some(b) if !b.is_empty() => {
            s.push_str("} else {\n");
            block(n, m, b, depth + 1, s);
            indent(s, depth);
            s.push_str("}\n");
        }
        _ => s.push_str("}\n"),
    }
}

fn stmt(n: &Names, m: &MethodDef, st: &Stmt, depth: usize, s: &mut String) {
    match st {
        Stmt::Assign(t, e) => {
            indent(s, depth);
            writeln!(s, "{} := {};", n.target(m, t), n.expr(m, e)).unwrap();
        }
        Stmt::New(t) => {
            indent(s, depth);
            writeln!(s, "{} := new;", n.target(m, t)).unwrap();
        }
        Stmt::Any(t) => {
            indent(s, depth);
            writeln!(s, "{} := any;", n.target(m, t)).unwrap();
        }
        Stmt::Assume(t) => {
            indent(s, depth);
            writeln!(s, "assume({});", n.test(m, t)).unwrap();
        }
        Stmt::Return(es) => {
            indent(s, depth);
            let vs: Vec<String> = es.iter().map(|e| n.expr(m, e)).collect();
            writeln!(s, "return {};", vs.join(", ")).unwrap();
        }
        Stmt::If(t, a, b) => braces(n, m, format!("if ({})", n.test(m, t)), a, Some(b), depth, s),
        Stmt::Loop(b) => braces(n, m, "loop".into(), b, None, depth, s),
        Stmt::Atomic(b) => braces(n, m, "atomic".into(), b, None, depth, s),
        Stmt::Cas(t, e, v, a, b) => braces(
            n,
            m,
            format!("cas({}, {}, {})", n.target(m, t), n.expr(m, e), n.expr(m, v)),
            a,
            Some(b),
            depth,
            s,
        ),
    }
}

//! Object DSL: syntax tree, KAT desugaring, control-flow graphs and paths.

mod cfg;
mod kat;
pub(crate) mod lexer;
mod parser;
mod paths;
mod printer;

pub use cfg::{Cfg, CfgNode, LoopInfo, Reach};
pub use kat::KatExpr;
pub use parser::parse_object;
pub use paths::{classify_path, enumerate_all_paths, enumerate_full_paths, path_endpoints, Path, PathError, PathKind};
pub use printer::{print_object, Names};

use std::fmt;

use serde::{Deserialize, Serialize};

pub type VarId = usize;
pub type FieldId = usize;
pub type LocalId = usize;
pub type PrimId = usize;
pub type MethodId = usize;

/// Runtime value. `Undef` is only ever held by unassigned locals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Value {
    Undef,
    Null,
    Int(i64),
    Ref(u32),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Undef => write!(f, "undef"),
            Value::Null => write!(f, "null"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Ref(r) => write!(f, "#{r}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Ty {
    Int,
    Ref,
    /// Untyped node field; ranges over both sorts.
    Any,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Int => "int",
            Ty::Ref => "ref",
            Ty::Any => "any",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Eq,
    Ne,
    Lt,
    Le,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "==",
            Rel::Ne => "!=",
            Rel::Lt => "<",
            Rel::Le => "<=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Int(i64),
    Null,
    Shared(VarId),
    Local(LocalId),
    Field(Box<Expr>, FieldId),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cmp {
    pub lhs: Expr,
    pub rel: Rel,
    pub rhs: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Test {
    Cmp(Cmp),
    Not(Box<Test>),
    And(Vec<Test>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Shared(VarId),
    Local(LocalId),
    Field(Expr, FieldId),
}

/// Surface statement, kept for printing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(Target, Expr),
    New(Target),
    Any(Target),
    Assume(Test),
    If(Test, Vec<Stmt>, Vec<Stmt>),
    Loop(Vec<Stmt>),
    Return(Vec<Expr>),
    Cas(Target, Expr, Expr, Vec<Stmt>, Vec<Stmt>),
    Atomic(Vec<Stmt>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimTest {
    pub cmp: Cmp,
    pub negated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimAction {
    Assign(Target, Expr),
    Alloc(Target),
    /// Nondeterministic choice of an allocated node.
    Pick(Target),
    Return(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArwOp {
    Test(PrimTest),
    Act(PrimAction),
}

/// Primitive step of a method. An `Arw` executes all of its ops indivisibly.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Action(PrimAction),
    Test(PrimTest),
    Arw(Vec<ArwOp>),
}

impl Prim {
    pub fn is_return(&self) -> bool {
        matches!(self, Prim::Action(PrimAction::Return(_)))
    }

    pub fn is_pick(&self) -> bool {
        matches!(self, Prim::Action(PrimAction::Pick(_)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Init {
    Int(i64),
    Null,
    New,
    Alias(VarId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedDecl {
    pub name: String,
    pub ty: Ty,
    pub init: Init,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Ty,
    /// Whether the source spelled out the type.
    pub annotated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDef {
    pub name: String,
    pub args: Vec<(String, Ty)>,
    pub ret_arity: usize,
    /// Args occupy the first `args.len()` slots.
    pub locals: Vec<String>,
    pub body: Vec<Stmt>,
    pub prims: Vec<Prim>,
    pub kat: KatExpr,
    pub cfg: Cfg,
}

impl MethodDef {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn local_index(&self, name: &str) -> Option<LocalId> {
        self.locals.iter().position(|l| l == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectDef {
    pub name: String,
    pub shared: Vec<SharedDecl>,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDef>,
}

impl ObjectDef {
    pub fn method_index(&self, name: &str) -> Option<MethodId> {
        self.methods.iter().position(|m| m.name == name)
    }

    pub fn var_index(&self, name: &str) -> Option<VarId> {
        self.shared.iter().position(|s| s.name == name)
    }

    pub fn field_index(&self, name: &str) -> Option<FieldId> {
        self.fields.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> Names<'_> {
        Names { obj: self }
    }

    /// Static sort of an expression evaluated inside `method`, if known.
    pub fn expr_ty(&self, method: &MethodDef, e: &Expr) -> Ty {
        match e {
            Expr::Int(_) | Expr::Add(..) | Expr::Sub(..) => Ty::Int,
            Expr::Null => Ty::Ref,
            Expr::Shared(v) => self.shared[*v].ty,
            Expr::Local(l) if *l < method.args.len() => method.args[*l].1,
            Expr::Local(_) => Ty::Any,
            Expr::Field(_, f) => self.fields[*f].ty,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared variable `{name}` at {line}:{col}")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("arity mismatch at {line}:{col}: {msg}")]
    Arity { line: usize, col: usize, msg: String },
    #[error("ill-formed object: {0}")]
    Semantic(String),
}

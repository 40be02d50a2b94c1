//! Evaluation of primitives against an abstract store.

use crate::object_model::*;

/// Why a primitive produced no successor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stop {
    /// A test or guard evaluated to false.
    Blocked,
    /// Arithmetic left the configured integer range.
    Overflow,
    /// Field access through null or a non-reference.
    NullDeref,
    /// Read of an unassigned local or ill-sorted comparison.
    Undefined,
    /// Allocation beyond the node arena.
    ArenaFull,
}

/// Store interface shared by concrete configurations and lazily initialized
/// symbolic pre-states.
pub trait Machine {
    fn int_range(&self) -> (i64, i64);
    fn local(&mut self, l: LocalId) -> Result<Value, Stop>;
    fn set_local(&mut self, l: LocalId, v: Value);
    fn var(&mut self, v: VarId) -> Result<Value, Stop>;
    fn set_var(&mut self, v: VarId, x: Value);
    fn field(&mut self, r: u32, f: FieldId) -> Result<Value, Stop>;
    fn set_field(&mut self, r: u32, f: FieldId, x: Value) -> Result<(), Stop>;
    fn alloc(&mut self) -> Result<u32, Stop>;
    fn pick(&mut self) -> Result<u32, Stop>;
}

pub fn eval<M: Machine + ?Sized>(m: &mut M, e: &Expr) -> Result<Value, Stop> {
    match e {
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Null => Ok(Value::Null),
        Expr::Shared(v) => m.var(*v),
        Expr::Local(l) => match m.local(*l)? {
            Value::Undef => Err(Stop::Undefined),
            v => Ok(v),
        },
        Expr::Field(b, f) => match eval(m, b)? {
            Value::Ref(r) => m.field(r, *f),
            _ => Err(Stop::NullDeref),
        },
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let (x, y) = (eval(m, a)?, eval(m, b)?);
            match (x, y) {
                (Value::Int(x), Value::Int(y)) => {
                    let r = if matches!(e, Expr::Add(..)) { x + y } else { x - y };
                    let (lo, hi) = m.int_range();
                    if r < lo || r > hi {
                        Err(Stop::Overflow)
                    } else {
                        Ok(Value::Int(r))
                    }
                }
                _ => Err(Stop::Undefined),
            }
        }
    }
}

pub fn compare(rel: Rel, a: Value, b: Value) -> Result<bool, Stop> {
    if a == Value::Undef || b == Value::Undef {
        return Err(Stop::Undefined);
    }
    match rel {
        Rel::Eq => Ok(a == b),
        Rel::Ne => Ok(a != b),
        Rel::Lt | Rel::Le => match (a, b) {
            (Value::Int(x), Value::Int(y)) => Ok(if rel == Rel::Lt { x < y } else { x <= y }),
            _ => Err(Stop::Undefined),
        },
    }
}

pub fn eval_cmp<M: Machine + ?Sized>(m: &mut M, c: &Cmp) -> Result<bool, Stop> {
    let a = eval(m, &c.lhs)?;
    let b = eval(m, &c.rhs)?;
    compare(c.rel, a, b)
}

pub fn run_test<M: Machine + ?Sized>(m: &mut M, t: &PrimTest) -> Result<(), Stop> {
    if eval_cmp(m, &t.cmp)? != t.negated {
        Ok(())
    } else {
        Err(Stop::Blocked)
    }
}

fn assign<M: Machine + ?Sized>(m: &mut M, t: &Target, v: Value) -> Result<(), Stop> {
    match t {
        Target::Local(l) => {
            m.set_local(*l, v);
            Ok(())
        }
        Target::Shared(x) => {
            m.set_var(*x, v);
            Ok(())
        }
        Target::Field(b, f) => match eval(m, b)? {
            Value::Ref(r) => m.set_field(r, *f, v),
            _ => Err(Stop::NullDeref),
        },
    }
}

/// Executes an action; returns the returned values for `return`.
pub fn run_action<M: Machine + ?Sized>(m: &mut M, a: &PrimAction) -> Result<Option<Vec<Value>>, Stop> {
    match a {
        PrimAction::Assign(t, e) => {
            let v = eval(m, e)?;
            assign(m, t, v)?;
            Ok(None)
        }
        PrimAction::Alloc(t) => {
            let r = m.alloc()?;
            assign(m, t, Value::Ref(r))?;
            Ok(None)
        }
        PrimAction::Pick(t) => {
            let r = m.pick()?;
            assign(m, t, Value::Ref(r))?;
            Ok(None)
        }
        PrimAction::Return(es) => {
            let vs = es.iter().map(|e| eval(m, e)).collect::<Result<Vec<_>, _>>()?;
            Ok(Some(vs))
        }
    }
}

/// Executes one primitive. `Ok(Some(vals))` signals a return.
pub fn run_prim<M: Machine + ?Sized>(m: &mut M, p: &Prim) -> Result<Option<Vec<Value>>, Stop> {
    match p {
        Prim::Action(a) => run_action(m, a),
        Prim::Test(t) => run_test(m, t).map(|_| None),
        Prim::Arw(ops) => {
            let mut ret = None;
            for op in ops {
                match op {
                    ArwOp::Test(t) => run_test(m, t)?,
                    ArwOp::Act(a) => {
                        if let Some(v) = run_action(m, a)? {
                            ret = Some(v);
                        }
                    }
                }
            }
            Ok(ret)
        }
    }
}

//! Bounded feasibility oracle over lazily initialized pre-states.
//!
//! A pre-state is never enumerated up front. Every cell is chosen the first
//! time it is read, and a replayed choice trail enumerates the choices
//! depth first. Two pre-states that agree on every cell a query reads are
//! indistinguishable to it, so the search is exhaustive for the bounded
//! domain: integers in `int_min..=int_max` and at most `arena` pre-state
//! nodes. Nodes allocated by the query itself are unbounded.

use serde::{Deserialize, Serialize};

use super::predicate::*;
use crate::interpreter::{run_prim, Bounds, Heap, Machine, Stop};
use crate::object_model::*;

/// Depth-first enumeration of choice vectors by replay.
#[derive(Debug, Default)]
pub struct Chooser {
    trail: Vec<(u32, u32)>,
    pos: usize,
}

impl Chooser {
    pub fn choose(&mut self, n: u32) -> u32 {
        debug_assert!(n > 0);
        let c = if self.pos < self.trail.len() {
            self.trail[self.pos].0
        } else {
            self.trail.push((0, n));
            0
        };
        self.pos += 1;
        c
    }

    /// Moves to the next unexplored choice vector.
    pub fn advance(&mut self) -> bool {
        self.trail.truncate(self.pos);
        self.pos = 0;
        while let Some((c, n)) = self.trail.pop() {
            if c + 1 < n {
                self.trail.push((c + 1, n));
                return true;
            }
        }
        false
    }
}

#[derive(Clone, Debug)]
struct LThread {
    method: MethodId,
    role: Role,
    locals: Vec<Option<Value>>,
}

/// One partially materialized world. `None` cells hold their (unread)
/// pre-state value.
pub struct World<'a> {
    obj: &'a ObjectDef,
    bounds: &'a Bounds,
    ch: &'a mut Chooser,
    vars: Vec<Option<Value>>,
    nodes: Vec<Vec<Option<Value>>>,
    fresh: Vec<bool>,
    pre_vars: Vec<Option<Value>>,
    pre_nodes: Vec<Vec<Option<Value>>>,
    closed: bool,
    /// A choice was narrowed because the arena was exhausted.
    pub truncated: bool,
    threads: Vec<LThread>,
    free: Vec<((Role, String), Value)>,
    cur: usize,
}

impl<'a> World<'a> {
    pub fn new(obj: &'a ObjectDef, bounds: &'a Bounds, ch: &'a mut Chooser, threads: &[(MethodId, Role)]) -> Self {
        let threads = threads
            .iter()
            .map(|&(method, role)| {
                let m = &obj.methods[method];
                let locals = (0..m.locals.len()).map(|l| if l < m.arity() { None } else { Some(Value::Undef) }).collect();
                LThread { method, role, locals }
            })
            .collect();
        World {
            obj,
            bounds,
            ch,
            vars: vec![None; obj.shared.len()],
            nodes: Vec::new(),
            fresh: Vec::new(),
            pre_vars: vec![None; obj.shared.len()],
            pre_nodes: Vec::new(),
            closed: false,
            truncated: false,
            threads,
            free: Vec::new(),
            cur: 0,
        }
    }

    /// A fully determined world holding `heap`.
    pub fn seeded(
        obj: &'a ObjectDef,
        bounds: &'a Bounds,
        ch: &'a mut Chooser,
        heap: &Heap,
        threads: &[(MethodId, Role)],
    ) -> Self {
        let mut w = World::new(obj, bounds, ch, threads);
        w.vars = heap.vars.iter().map(|v| Some(*v)).collect();
        w.pre_vars = w.vars.clone();
        w.nodes = heap.nodes.iter().map(|n| n.iter().map(|v| Some(*v)).collect()).collect();
        w.pre_nodes = w.nodes.clone();
        w.fresh = vec![false; heap.nodes.len()];
        w.closed = true;
        w
    }

    fn pre_count(&self) -> usize {
        self.fresh.iter().filter(|f| !**f).count()
    }

    fn new_pre_node(&mut self) -> u32 {
        self.nodes.push(vec![None; self.obj.fields.len()]);
        self.pre_nodes.push(vec![None; self.obj.fields.len()]);
        self.fresh.push(false);
        self.nodes.len() as u32 - 1
    }

    fn choose_value(&mut self, ty: Ty) -> Value {
        let (lo, hi) = (self.bounds.int_min, self.bounds.int_max);
        let mut opts: Vec<Value> = Vec::new();
        if ty != Ty::Ref {
            opts.extend((lo..=hi).map(Value::Int));
        }
        let mut can_new = false;
        if ty != Ty::Int {
            opts.push(Value::Null);
            opts.extend((0..self.nodes.len()).filter(|&i| !self.fresh[i]).map(|i| Value::Ref(i as u32)));
            if !self.closed {
                if self.pre_count() < self.bounds.arena {
                    can_new = true;
                } else {
                    self.truncated = true;
                }
            }
        }
        let n = opts.len() as u32 + can_new as u32;
        let c = self.ch.choose(n) as usize;
        if c < opts.len() {
            opts[c]
        } else {
            Value::Ref(self.new_pre_node())
        }
    }

    fn thread_local(&mut self, t: usize, l: LocalId) -> Value {
        if let Some(v) = self.threads[t].locals[l] {
            return v;
        }
        let ty = self.obj.methods[self.threads[t].method].args[l].1;
        let v = self.choose_value(ty);
        self.threads[t].locals[l] = Some(v);
        v
    }

    fn read_var(&mut self, v: VarId) -> Value {
        if let Some(x) = self.vars[v] {
            return x;
        }
        let x = self.choose_value(self.obj.shared[v].ty);
        self.vars[v] = Some(x);
        self.pre_vars[v] = Some(x);
        x
    }

    fn read_field(&mut self, r: u32, f: FieldId) -> Option<Value> {
        let r = r as usize;
        if r >= self.nodes.len() {
            return None;
        }
        if let Some(x) = self.nodes[r][f] {
            return Some(x);
        }
        let x = self.choose_value(self.obj.fields[f].ty);
        self.nodes[r][f] = Some(x);
        self.pre_nodes[r][f] = Some(x);
        Some(x)
    }

    /// Fixes the number of pre-state nodes.
    fn close(&mut self) {
        if self.closed {
            return;
        }
        self.closed = true;
        let room = self.bounds.arena.saturating_sub(self.pre_count());
        let k = self.ch.choose(room as u32 + 1);
        for _ in 0..k {
            self.new_pre_node();
        }
    }

    /// Runs `prim` of thread `t`; `Ok` if it completes.
    pub fn run(&mut self, t: usize, prim: PrimId) -> Result<(), Stop> {
        self.cur = t;
        let p = &self.obj.methods[self.threads[t].method].prims[prim];
        run_prim(self, p).map(|_| ())
    }

    fn default_of(&self, ty: Ty) -> Value {
        match ty {
            Ty::Int => Value::Int(self.bounds.int_min),
            _ => Value::Null,
        }
    }

    /// Concrete pre-state, argument values and post-state of this world.
    /// Unread cells take default values; pre-state nodes come first.
    pub fn witness(&self) -> Witness {
        let mut remap = vec![0u32; self.nodes.len()];
        let mut next = 0u32;
        for (i, f) in self.fresh.iter().enumerate() {
            if !f {
                remap[i] = next;
                next += 1;
            }
        }
        for (i, f) in self.fresh.iter().enumerate() {
            if *f {
                remap[i] = next;
                next += 1;
            }
        }
        let fix = |v: Value| match v {
            Value::Ref(r) => Value::Ref(remap[r as usize]),
            v => v,
        };
        let var_def = |i: usize| self.default_of(self.obj.shared[i].ty);
        let field_def = |f: usize| self.default_of(self.obj.fields[f].ty);
        let pre_vars = self.pre_vars.iter().enumerate().map(|(i, v)| fix(v.unwrap_or_else(|| var_def(i)))).collect();
        let pre_nodes: Vec<Vec<Value>> = (0..self.nodes.len())
            .filter(|&i| !self.fresh[i])
            .map(|i| self.pre_nodes[i].iter().enumerate().map(|(f, v)| fix(v.unwrap_or_else(|| field_def(f)))).collect())
            .collect();
        let post_vars = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| fix(v.or(self.pre_vars[i]).unwrap_or_else(|| var_def(i))))
            .collect();
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&i| remap[i]);
        let post_nodes = order
            .iter()
            .map(|&i| self.nodes[i].iter().enumerate().map(|(f, v)| fix(v.unwrap_or_else(|| field_def(f)))).collect())
            .collect();
        let args = self
            .threads
            .iter()
            .map(|t| {
                let m = &self.obj.methods[t.method];
                (0..m.arity()).map(|l| fix(t.locals[l].unwrap_or_else(|| self.default_of(m.args[l].1)))).collect()
            })
            .collect();
        Witness {
            pre: Heap { vars: pre_vars, nodes: pre_nodes },
            args,
            post: Heap { vars: post_vars, nodes: post_nodes },
        }
    }
}

impl Machine for World<'_> {
    fn int_range(&self) -> (i64, i64) {
        (self.bounds.int_min, self.bounds.int_max)
    }

    fn local(&mut self, l: LocalId) -> Result<Value, Stop> {
        Ok(self.thread_local(self.cur, l))
    }

    fn set_local(&mut self, l: LocalId, v: Value) {
        self.threads[self.cur].locals[l] = Some(v);
    }

    fn var(&mut self, v: VarId) -> Result<Value, Stop> {
        Ok(self.read_var(v))
    }

    fn set_var(&mut self, v: VarId, x: Value) {
        self.vars[v] = Some(x);
    }

    fn field(&mut self, r: u32, f: FieldId) -> Result<Value, Stop> {
        self.read_field(r, f).ok_or(Stop::NullDeref)
    }

    fn set_field(&mut self, r: u32, f: FieldId, x: Value) -> Result<(), Stop> {
        let n = self.nodes.get_mut(r as usize).ok_or(Stop::NullDeref)?;
        n[f] = Some(x);
        Ok(())
    }

    fn alloc(&mut self) -> Result<u32, Stop> {
        let fields = self.obj.fields.iter().map(|f| Some(self.default_of_field(f.ty))).collect();
        self.nodes.push(fields);
        self.pre_nodes.push(vec![None; self.obj.fields.len()]);
        self.fresh.push(true);
        Ok(self.nodes.len() as u32 - 1)
    }

    fn pick(&mut self) -> Result<u32, Stop> {
        self.close();
        if self.nodes.is_empty() {
            return Err(Stop::Blocked);
        }
        Ok(self.ch.choose(self.nodes.len() as u32))
    }
}

impl World<'_> {
    fn default_of_field(&self, ty: Ty) -> Value {
        match ty {
            Ty::Int => Value::Int(0),
            _ => Value::Null,
        }
    }
}

impl PredStore for World<'_> {
    fn int_range(&self) -> (i64, i64) {
        (self.bounds.int_min, self.bounds.int_max)
    }

    fn var(&mut self, v: VarId) -> Value {
        self.read_var(v)
    }

    fn field(&mut self, r: u32, f: FieldId) -> Option<Value> {
        self.read_field(r, f)
    }

    fn input(&mut self, role: Role, name: &str) -> Value {
        let hit = self.threads.iter().enumerate().find_map(|(t, th)| {
            (th.role == role).then(|| self.obj.methods[th.method].args.iter().position(|(a, _)| a == name).map(|l| (t, l)))?
        });
        if let Some((t, l)) = hit {
            return self.thread_local(t, l);
        }
        if let Some((_, v)) = self.free.iter().find(|((r, n), _)| *r == role && n == name) {
            return *v;
        }
        let v = self.choose_value(Ty::Int);
        self.free.push(((role, name.to_string()), v));
        v
    }

    fn local(&mut self, l: LocalId) -> Value {
        self.thread_local(self.cur, l)
    }

    fn universe(&mut self) -> Vec<u32> {
        self.close();
        (0..self.nodes.len() as u32).collect()
    }
}

/// Concrete pre-state, arguments and post-state exhibited by a feasible query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub pre: Heap,
    pub args: Vec<Vec<Value>>,
    pub post: Heap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Feasible,
    Infeasible,
    /// Infeasible within a domain that had to be truncated.
    Unknown,
}

/// Does some `pre`-state run `steps` to completion and end in `post`?
#[derive(Clone, Debug)]
pub struct Query<'q> {
    pub pre: &'q Pred,
    pub threads: Vec<(MethodId, Role)>,
    /// `(thread index, primitive)` in execution order.
    pub steps: Vec<(usize, PrimId)>,
    pub post: Option<&'q Pred>,
}

#[derive(Clone, Debug)]
pub struct QueryResult {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Number of partial worlds examined.
    pub worlds: usize,
}

pub fn feasible(obj: &ObjectDef, bounds: &Bounds, q: &Query) -> QueryResult {
    let mut ch = Chooser::default();
    let mut truncated = false;
    let mut worlds = 0;
    loop {
        worlds += 1;
        let mut w = World::new(obj, bounds, &mut ch, &q.threads);
        let ok = eval_pred(&mut w, q.pre)
            && q.steps.iter().all(|&(t, p)| w.run(t, p).is_ok())
            && q.post.is_none_or(|post| eval_pred(&mut w, post));
        truncated |= w.truncated;
        if ok {
            let witness = w.witness();
            return QueryResult { verdict: Verdict::Feasible, witness: Some(witness), worlds };
        }
        drop(w);
        if !ch.advance() {
            let verdict = if truncated { Verdict::Unknown } else { Verdict::Infeasible };
            return QueryResult { verdict, witness: None, worlds };
        }
    }
}

/// Is `p` true of `heap` for some choice of the inputs it mentions?
pub fn holds_at(obj: &ObjectDef, bounds: &Bounds, heap: &Heap, p: &Pred) -> bool {
    let mut ch = Chooser::default();
    loop {
        let mut w = World::seeded(obj, bounds, &mut ch, heap, &[]);
        if eval_pred(&mut w, p) {
            return true;
        }
        drop(w);
        if !ch.advance() {
            return false;
        }
    }
}

/// Predicate evaluation over a concrete heap and fixed thread locals.
pub struct ConcreteStore<'a> {
    pub obj: &'a ObjectDef,
    pub heap: &'a Heap,
    pub bounds: &'a Bounds,
    /// `(role, method, locals)` per thread; `Role::Own` resolves `Local` terms.
    pub threads: Vec<(Role, MethodId, &'a [Value])>,
}

impl PredStore for ConcreteStore<'_> {
    fn int_range(&self) -> (i64, i64) {
        (self.bounds.int_min, self.bounds.int_max)
    }

    fn var(&mut self, v: VarId) -> Value {
        self.heap.vars[v]
    }

    fn field(&mut self, r: u32, f: FieldId) -> Option<Value> {
        self.heap.nodes.get(r as usize).map(|n| n[f])
    }

    fn input(&mut self, role: Role, name: &str) -> Value {
        for (r, m, locals) in &self.threads {
            if *r == role {
                if let Some(l) = self.obj.methods[*m].args.iter().position(|(a, _)| a == name) {
                    return locals[l];
                }
            }
        }
        Value::Undef
    }

    fn local(&mut self, l: LocalId) -> Value {
        self.threads.iter().find(|(r, _, _)| *r == Role::Own).map(|(_, _, ls)| ls[l]).unwrap_or(Value::Undef)
    }

    fn universe(&mut self) -> Vec<u32> {
        (0..self.heap.nodes.len() as u32).collect()
    }
}

//! Operational semantics: configurations, labeled steps, bounded exploration.

mod exec;
mod explore;

pub use exec::{compare, eval, eval_cmp, run_prim, Machine, Stop};
pub use explore::{count_completions, explore, Exploration};

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::object_model::Reach;
use crate::object_model::*;

/// Finite domain every oracle works in.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bounds {
    pub int_min: i64,
    pub int_max: i64,
    pub arena: usize,
    pub unroll: u8,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { int_min: 0, int_max: 7, arena: 6, unroll: 1 }
    }
}

impl Bounds {
    pub fn step_bound(&self, threads: usize) -> usize {
        16 * threads.max(1) * self.unroll as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Heap {
    pub vars: Vec<Value>,
    /// Node records in allocation order; the length is the allocation cursor.
    pub nodes: Vec<Vec<Value>>,
}

impl Heap {
    pub fn initial(obj: &ObjectDef) -> Heap {
        let mut h = Heap { vars: Vec::new(), nodes: Vec::new() };
        for d in &obj.shared {
            let v = match &d.init {
                Init::Int(n) => Value::Int(*n),
                Init::Null => Value::Null,
                Init::New => {
                    h.nodes.push(default_node(obj));
                    Value::Ref(h.nodes.len() as u32 - 1)
                }
                Init::Alias(o) => h.vars[*o],
            };
            h.vars.push(v);
        }
        h
    }
}

/// Fields of a freshly allocated node.
pub fn default_node(obj: &ObjectDef) -> Vec<Value> {
    obj.fields
        .iter()
        .map(|f| match f.ty {
            Ty::Int => Value::Int(0),
            _ => Value::Null,
        })
        .collect()
}

/// Remaining code of a thread.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Code {
    Idle,
    At { node: usize, counters: Vec<u8> },
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThreadState {
    pub code: Code,
    pub locals: Vec<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub heap: Heap,
    pub threads: Vec<ThreadState>,
}

impl Config {
    pub fn initial(obj: &ObjectDef, env: &Environment) -> Config {
        Config {
            heap: Heap::initial(obj),
            threads: env
                .calls
                .iter()
                .map(|c| ThreadState { code: Code::Idle, locals: vec![Value::Undef; obj.methods[c.method].locals.len()] })
                .collect(),
        }
    }

    pub fn is_final(&self) -> bool {
        self.threads.iter().all(|t| t.code == Code::Done)
    }

    /// Renumbers nodes in discovery order: depth first from the shared
    /// variables, then from each thread's locals in thread order; unreachable
    /// nodes keep their relative order at the end. Allocations by different
    /// threads then commute.
    pub fn canonicalize(&mut self) {
        let n = self.heap.nodes.len();
        let mut order: Vec<u32> = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        let roots: Vec<Value> =
            self.heap.vars.iter().chain(self.threads.iter().flat_map(|t| t.locals.iter())).copied().collect();
        for root in roots {
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                let Value::Ref(r) = v else { continue };
                if seen[r as usize] {
                    continue;
                }
                seen[r as usize] = true;
                order.push(r);
                stack.extend(self.heap.nodes[r as usize].iter().rev().copied());
            }
        }
        order.extend((0..n as u32).filter(|&r| !seen[r as usize]));
        if order.iter().enumerate().all(|(i, &r)| i as u32 == r) {
            return;
        }
        let mut to = vec![0u32; n];
        for (i, &r) in order.iter().enumerate() {
            to[r as usize] = i as u32;
        }
        let fix = |v: &mut Value| {
            if let Value::Ref(r) = v {
                *r = to[*r as usize];
            }
        };
        let mut nodes: Vec<Vec<Value>> = order.iter().map(|&r| self.heap.nodes[r as usize].clone()).collect();
        nodes.iter_mut().flatten().for_each(fix);
        self.heap.nodes = nodes;
        self.heap.vars.iter_mut().for_each(fix);
        self.threads.iter_mut().flat_map(|t| t.locals.iter_mut()).for_each(fix);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Call {
    pub method: MethodId,
    pub args: Vec<Value>,
}

/// Thread `i + 1` invokes `calls[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Environment {
    pub calls: Vec<Call>,
}

impl Environment {
    pub fn new(calls: Vec<Call>) -> Self {
        Environment { calls }
    }

    pub fn threads(&self) -> usize {
        self.calls.len()
    }

    /// Builds an environment from `method(args)` strings.
    pub fn parse(obj: &ObjectDef, specs: &[&str]) -> Result<Environment, String> {
        let mut calls = Vec::new();
        for s in specs {
            let s = s.trim();
            let (name, rest) = match s.find('(') {
                Some(i) => (&s[..i], s[i + 1..].trim_end_matches(')')),
                None => (s, ""),
            };
            let method = obj.method_index(name.trim()).ok_or_else(|| format!("unknown method `{name}`"))?;
            let args: Vec<Value> = rest
                .split(',')
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .map(|a| match a {
                    "null" => Ok(Value::Null),
                    _ => a.parse::<i64>().map(Value::Int).map_err(|_| format!("bad argument `{a}`")),
                })
                .collect::<Result<_, _>>()?;
            if args.len() != obj.methods[method].arity() {
                return Err(format!("`{name}` expects {} argument(s)", obj.methods[method].arity()));
            }
            calls.push(Call { method, args });
        }
        Ok(Environment { calls })
    }

    /// `inc,dec` or `push(1),pop`: calls separated by top-level commas.
    pub fn parse_list(obj: &ObjectDef, src: &str) -> Result<Environment, String> {
        let mut specs = Vec::new();
        let (mut depth, mut start) = (0i32, 0);
        for (i, ch) in src.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    specs.push(&src[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        specs.push(&src[start..]);
        specs.retain(|s| !s.trim().is_empty());
        Environment::parse(obj, &specs)
    }

    /// Every sequence of `1..=max` calls, arguments drawn from `values`;
    /// shorter sequences first, then lexicographic by method and arguments.
    pub fn enumerate(obj: &ObjectDef, max: usize, values: &[i64]) -> Vec<Environment> {
        let mut calls: Vec<Call> = Vec::new();
        for (method, m) in obj.methods.iter().enumerate() {
            let mut argsets: Vec<Vec<Value>> = vec![vec![]];
            for _ in 0..m.arity() {
                argsets = argsets
                    .iter()
                    .flat_map(|a| values.iter().map(move |v| [a.as_slice(), &[Value::Int(*v)]].concat()))
                    .collect();
            }
            calls.extend(argsets.into_iter().map(|args| Call { method, args }));
        }
        let mut out = Vec::new();
        let mut layer: Vec<Vec<Call>> = vec![vec![]];
        for _ in 0..max {
            layer = layer.iter().flat_map(|p| calls.iter().map(move |c| [p.as_slice(), &[c.clone()]].concat())).collect();
            out.extend(layer.iter().cloned().map(Environment::new));
        }
        out
    }

    pub fn render(&self, obj: &ObjectDef) -> String {
        let calls: Vec<String> = self
            .calls
            .iter()
            .map(|c| {
                let name = &obj.methods[c.method].name;
                if c.args.is_empty() {
                    name.clone()
                } else {
                    let a: Vec<String> = c.args.iter().map(|v| v.to_string()).collect();
                    format!("{name}({})", a.join(","))
                }
            })
            .collect();
        calls.join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Invoke { method: MethodId, args: Vec<Value> },
    /// `values` holds returned values for returns and the chosen node for `any`.
    Step { method: MethodId, prim: PrimId, values: Vec<Value> },
}

impl Label {
    pub fn is_invoke(&self) -> bool {
        matches!(self, Label::Invoke { .. })
    }

    pub fn prim(&self) -> Option<(MethodId, PrimId)> {
        match self {
            Label::Step { method, prim, .. } => Some((*method, *prim)),
            Label::Invoke { .. } => None,
        }
    }

    pub fn render(&self, obj: &ObjectDef) -> String {
        match self {
            Label::Invoke { method, args } => {
                let a: Vec<String> = args.iter().map(|v| v.to_string()).collect();
                format!("invoke {}({})", obj.methods[*method].name, a.join(", "))
            }
            Label::Step { method, prim, values } => {
                let m = &obj.methods[*method];
                match &m.prims[*prim] {
                    Prim::Action(PrimAction::Return(_)) => {
                        let v: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                        format!("return {}", v.join(", "))
                    }
                    p @ Prim::Action(PrimAction::Pick(_)) => {
                        format!("{} {}", obj.names().prim(m, p), values.first().copied().unwrap_or(Value::Undef))
                    }
                    p => obj.names().prim(m, p),
                }
            }
        }
    }
}

/// Thread-indexed label; threads are numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub thread: usize,
    pub label: Label,
}

pub type Trace = Vec<Event>;

pub fn render_trace(obj: &ObjectDef, t: &[Event]) -> String {
    let mut s = String::new();
    for e in t {
        s.push_str(&format!("t{}: {}\n", e.thread, e.label.render(obj)));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    pub init: Config,
    pub steps: Vec<(Event, Config)>,
}

impl Execution {
    pub fn trace(&self) -> Trace {
        trace_of(self)
    }

    pub fn last(&self) -> &Config {
        self.steps.last().map(|s| &s.1).unwrap_or(&self.init)
    }

    pub fn config(&self, i: usize) -> &Config {
        if i == 0 {
            &self.init
        } else {
            &self.steps[i - 1].1
        }
    }

    pub fn is_complete(&self) -> bool {
        self.last().is_final()
    }
}

pub fn trace_of(e: &Execution) -> Trace {
    e.steps.iter().map(|(ev, _)| ev.clone()).collect()
}

/// Concrete store over one thread of a configuration.
pub struct Concrete<'a> {
    pub heap: &'a mut Heap,
    pub locals: &'a mut Vec<Value>,
    pub bounds: &'a Bounds,
    pub default: &'a [Value],
    pub pick: Option<u32>,
}

impl Machine for Concrete<'_> {
    fn int_range(&self) -> (i64, i64) {
        (self.bounds.int_min, self.bounds.int_max)
    }

    fn local(&mut self, l: LocalId) -> Result<Value, Stop> {
        Ok(self.locals[l])
    }

    fn set_local(&mut self, l: LocalId, v: Value) {
        self.locals[l] = v;
    }

    fn var(&mut self, v: VarId) -> Result<Value, Stop> {
        Ok(self.heap.vars[v])
    }

    fn set_var(&mut self, v: VarId, x: Value) {
        self.heap.vars[v] = x;
    }

    fn field(&mut self, r: u32, f: FieldId) -> Result<Value, Stop> {
        self.heap.nodes.get(r as usize).map(|n| n[f]).ok_or(Stop::NullDeref)
    }

    fn set_field(&mut self, r: u32, f: FieldId, x: Value) -> Result<(), Stop> {
        let n = self.heap.nodes.get_mut(r as usize).ok_or(Stop::NullDeref)?;
        n[f] = x;
        Ok(())
    }

    fn alloc(&mut self) -> Result<u32, Stop> {
        if self.heap.nodes.len() >= self.bounds.arena {
            return Err(Stop::ArenaFull);
        }
        self.heap.nodes.push(self.default.to_vec());
        Ok(self.heap.nodes.len() as u32 - 1)
    }

    fn pick(&mut self) -> Result<u32, Stop> {
        self.pick.ok_or(Stop::Blocked)
    }
}

/// Outcome of one thread step attempt.
#[derive(Clone, Debug, Default)]
pub struct StepResult {
    pub succs: Vec<(Label, Config)>,
    /// Some continuation exceeded the unroll bound.
    pub cut: bool,
    /// Stop reasons other than ordinary blocking.
    pub faults: Vec<Stop>,
}

type FrontierKey = (MethodId, usize, Vec<u8>);

/// Step relation for one object, environment and bound set. Holds a per-call
/// memo of epsilon closures.
pub struct Interp<'a> {
    pub obj: &'a ObjectDef,
    pub env: &'a Environment,
    pub bounds: Bounds,
    default: Vec<Value>,
    cache: RefCell<HashMap<FrontierKey, Rc<Vec<Reach>>>>,
}

impl<'a> Interp<'a> {
    pub fn new(obj: &'a ObjectDef, env: &'a Environment, bounds: &Bounds) -> Self {
        Interp { obj, env, bounds: bounds.clone(), default: default_node(obj), cache: RefCell::new(HashMap::new()) }
    }

    pub fn initial(&self) -> Config {
        Config::initial(self.obj, self.env)
    }

    fn frontier(&self, method: MethodId, node: usize, counters: &[u8]) -> Rc<Vec<Reach>> {
        let key = (method, node, counters.to_vec());
        if let Some(r) = self.cache.borrow().get(&key) {
            return r.clone();
        }
        let r = Rc::new(self.obj.methods[method].cfg.frontier(node, counters, self.bounds.unroll, false));
        self.cache.borrow_mut().insert(key, r.clone());
        r
    }

    /// Successors of `c` by one labeled step of thread `t` (1-based).
    pub fn step(&self, c: &Config, t: usize) -> StepResult {
        let mut out = StepResult::default();
        let call = &self.env.calls[t - 1];
        let ts = &c.threads[t - 1];
        match &ts.code {
            Code::Done => {}
            Code::Idle => {
                let m = &self.obj.methods[call.method];
                let mut c2 = c.clone();
                let th = &mut c2.threads[t - 1];
                for (i, a) in call.args.iter().enumerate() {
                    th.locals[i] = *a;
                }
                th.code = Code::At { node: m.cfg.entry, counters: vec![0; m.cfg.loops.len()] };
                out.succs.push((Label::Invoke { method: call.method, args: call.args.clone() }, c2));
            }
            Code::At { node, counters } => {
                let fr = self.frontier(call.method, *node, counters);
                for r in fr.iter() {
                    match r {
                        Reach::Cut => out.cut = true,
                        Reach::Back => {}
                        Reach::Step { prim, target, counters } => {
                            let p = &self.obj.methods[call.method].prims[*prim];
                            let picks: Vec<Option<u32>> = if p.is_pick() {
                                (0..c.heap.nodes.len() as u32).map(Some).collect()
                            } else {
                                vec![None]
                            };
                            for pick in picks {
                                let mut c2 = c.clone();
                                match self.exec(&mut c2, t, *prim, pick) {
                                    Ok(ret) => {
                                        let th = &mut c2.threads[t - 1];
                                        let values = match (ret, pick) {
                                            (Some(vs), _) => {
                                                th.code = Code::Done;
                                                vs
                                            }
                                            (None, Some(r)) => {
                                                th.code = Code::At { node: *target, counters: counters.clone() };
                                                vec![Value::Ref(r)]
                                            }
                                            (None, None) => {
                                                th.code = Code::At { node: *target, counters: counters.clone() };
                                                vec![]
                                            }
                                        };
                                        out.succs.push((Label::Step { method: call.method, prim: *prim, values }, c2));
                                    }
                                    Err(Stop::Blocked) => {}
                                    Err(s) => out.faults.push(s),
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Runs primitive `prim` of thread `t` in place, ignoring control flow.
    pub fn exec(&self, c: &mut Config, t: usize, prim: PrimId, pick: Option<u32>) -> Result<Option<Vec<Value>>, Stop> {
        let method = self.env.calls[t - 1].method;
        let p = &self.obj.methods[method].prims[prim];
        let Config { heap, threads } = c;
        let mut m = Concrete {
            heap,
            locals: &mut threads[t - 1].locals,
            bounds: &self.bounds,
            default: &self.default,
            pick,
        };
        let out = run_prim(&mut m, p);
        if out.is_ok() {
            c.canonicalize();
        }
        out
    }

    /// Replays a label against `c`, following control flow. `None` if the
    /// label is not enabled.
    pub fn apply(&self, c: &Config, ev: &Event) -> Option<Config> {
        self.step(c, ev.thread).succs.into_iter().find(|(l, _)| *l == ev.label).map(|(_, c)| c)
    }

    /// Rebuilds the execution of a trace from the initial configuration.
    pub fn replay(&self, trace: &[Event]) -> Option<Execution> {
        let init = self.initial();
        let mut steps = Vec::with_capacity(trace.len());
        let mut cur = init.clone();
        for ev in trace {
            cur = self.apply(&cur, ev)?;
            steps.push((ev.clone(), cur.clone()));
        }
        Some(Execution { init, steps })
    }

    /// Configurations `C_0..C_n` along a trace.
    pub fn configs(&self, trace: &[Event]) -> Option<Vec<Config>> {
        let mut out = Vec::with_capacity(trace.len() + 1);
        out.push(self.initial());
        for ev in trace {
            let next = self.apply(out.last().unwrap(), ev)?;
            out.push(next);
        }
        Some(out)
    }
}

/// One fragment of a run: thread `thread` executes `steps` of its method.
#[derive(Clone, Debug)]
pub struct Piece {
    pub thread: usize,
    pub steps: Vec<PrimId>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub feasible: bool,
    pub final_config: Config,
    pub trace: Trace,
    pub stop: Option<Stop>,
}

/// Executes exactly the given steps in order from `c`, starting idle threads
/// with their environment arguments. Nondeterministic picks are resolved by
/// search; the first feasible resolution is returned.
pub fn run_sequence(interp: &Interp, c: &Config, pieces: &[Piece]) -> Outcome {
    let flat: Vec<(usize, PrimId)> = pieces.iter().flat_map(|p| p.steps.iter().map(move |s| (p.thread, *s))).collect();
    let mut best: Option<Outcome> = None;
    run_from(interp, c.clone(), &flat, 0, Vec::new(), &mut best);
    best.expect("run_from always records an outcome")
}

fn run_from(interp: &Interp, mut c: Config, flat: &[(usize, PrimId)], i: usize, mut trace: Trace, best: &mut Option<Outcome>) -> bool {
    if i == flat.len() {
        *best = Some(Outcome { feasible: true, final_config: c, trace, stop: None });
        return true;
    }
    let (t, prim) = flat[i];
    let call = &interp.env.calls[t - 1];
    if c.threads[t - 1].code == Code::Idle {
        for (k, a) in call.args.iter().enumerate() {
            c.threads[t - 1].locals[k] = *a;
        }
        c.threads[t - 1].code = Code::At { node: 0, counters: vec![] };
        trace.push(Event { thread: t, label: Label::Invoke { method: call.method, args: call.args.clone() } });
    }
    let p = &interp.obj.methods[call.method].prims[prim];
    let picks: Vec<Option<u32>> =
        if p.is_pick() { (0..c.heap.nodes.len() as u32).map(Some).collect() } else { vec![None] };
    let mut last_stop = Stop::Blocked;
    for pick in picks {
        let mut c2 = c.clone();
        match interp.exec(&mut c2, t, prim, pick) {
            Ok(ret) => {
                let values = match (&ret, pick) {
                    (Some(vs), _) => vs.clone(),
                    (None, Some(r)) => vec![Value::Ref(r)],
                    (None, None) => vec![],
                };
                if ret.is_some() {
                    c2.threads[t - 1].code = Code::Done;
                }
                let mut tr = trace.clone();
                tr.push(Event { thread: t, label: Label::Step { method: call.method, prim, values } });
                if run_from(interp, c2, flat, i + 1, tr, best) {
                    return true;
                }
            }
            Err(s) => last_stop = s,
        }
    }
    if best.is_none() {
        *best = Some(Outcome { feasible: false, final_config: c, trace, stop: Some(last_stop) });
    }
    false
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<String> = self.heap.vars.iter().map(|v| v.to_string()).collect();
        write!(f, "vars=[{}] nodes={}", vars.join(","), self.heap.nodes.len())
    }
}

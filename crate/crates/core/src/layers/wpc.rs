use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::equivalence::Move;
use crate::interpreter::{Bounds, Call, Code, Config, Environment, Heap, Interp, ThreadState};
use crate::object_model::{MethodId, ObjectDef, Path, PrimId, Ty, Value};

use super::automaton::Layer;
use super::member::PathTable;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpcBounds {
    pub bounds: Bounds,
    /// Writers sequenced against one write path.
    pub wpc_writers: usize,
    /// Writers sequenced against one local path.
    pub lpc_writers: usize,
    /// Integer arguments tried for every int parameter.
    pub args: Vec<i64>,
    /// Threads of the environments whose configurations seed the checks.
    pub reach_threads: usize,
    /// Orders visited per interleaving search.
    pub budget: usize,
}

impl Default for WpcBounds {
    fn default() -> Self {
        WpcBounds { bounds: Bounds::default(), wpc_writers: 2, lpc_writers: 3, args: vec![1, 2], reach_threads: 2, budget: 20_000 }
    }
}

/// Counts of one sub-check; `first_failure` names the offending scenario.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckCount {
    pub checked: usize,
    pub failed: usize,
    pub unknown: usize,
    pub first_failure: Option<String>,
}

impl CheckCount {
    pub fn passed(&self) -> bool {
        self.failed == 0 && self.unknown == 0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WpcReport {
    /// Primitives no layer path contains, as `method:prim`.
    pub uncovered: Vec<String>,
    pub wpc: CheckCount,
    pub lpc: CheckCount,
    pub seed_states: usize,
}

impl WpcReport {
    pub fn passed(&self) -> bool {
        self.uncovered.is_empty() && self.wpc.passed() && self.lpc.passed()
    }

    pub fn render(&self) -> String {
        let line = |name: &str, c: &CheckCount| {
            let v = if c.passed() { "PASS" } else if c.failed > 0 { "FAIL" } else { "UNKNOWN" };
            let extra = c.first_failure.as_deref().map(|f| format!(" ({f})")).unwrap_or_default();
            format!("{name}: {v} checked {} failed {} unknown {}{extra}\n", c.checked, c.failed, c.unknown)
        };
        let cov = if self.uncovered.is_empty() {
            "coverage: PASS\n".to_string()
        } else {
            format!("coverage: FAIL missing {}\n", self.uncovered.join(", "))
        };
        format!("{cov}{}{}", line("wpc", &self.wpc), line("lpc", &self.lpc))
    }
}

type Step = (usize, PrimId, Option<u32>);

/// One thread per scenario path; thread 1 is the path under test and threads
/// `2..` run the writers one after another.
struct Scenario<'a> {
    interp: Interp<'a>,
    init: Config,
    paths: Vec<&'a Path>,
}

impl<'a> Scenario<'a> {
    fn exec(&self, c: &Config, (t, p, pick): Step) -> Option<Config> {
        let mut c2 = c.clone();
        self.interp.exec(&mut c2, t, p, pick).ok()?;
        Some(c2)
    }

    /// Feasible interleavings of thread 1 with the serial writers.
    fn interleavings(&self, limit: usize) -> (Vec<Vec<Step>>, bool) {
        let mut out = Vec::new();
        let mut pos = vec![0usize; self.paths.len()];
        let mut cur = Vec::new();
        let mut truncated = false;
        self.dfs(&self.init, &mut pos, 1, &mut cur, &mut out, limit, &mut truncated);
        (out, truncated)
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        c: &Config,
        pos: &mut Vec<usize>,
        writer: usize,
        cur: &mut Vec<Step>,
        out: &mut Vec<Vec<Step>>,
        limit: usize,
        truncated: &mut bool,
    ) {
        if out.len() >= limit {
            *truncated = true;
            return;
        }
        let done1 = pos[0] == self.paths[0].steps.len();
        if done1 && writer == self.paths.len() {
            out.push(cur.clone());
            return;
        }
        let mut movers = Vec::new();
        if !done1 {
            movers.push(0);
        }
        if writer < self.paths.len() {
            movers.push(writer);
        }
        for k in movers {
            let prim = self.paths[k].steps[pos[k]];
            let picks: Vec<Option<u32>> = if self.interp.obj.methods[self.paths[k].method].prims[prim].is_pick() {
                (0..c.heap.nodes.len() as u32).map(Some).collect()
            } else {
                vec![None]
            };
            for pick in picks {
                let s = (k + 1, prim, pick);
                let Some(c2) = self.exec(c, s) else { continue };
                pos[k] += 1;
                cur.push(s);
                let next_writer = if k > 0 && pos[k] == self.paths[k].steps.len() { writer + 1 } else { writer };
                self.dfs(&c2, pos, next_writer, cur, out, limit, truncated);
                cur.pop();
                pos[k] -= 1;
            }
        }
    }

    /// Configurations after `mv`, when the moved step passes only other
    /// threads, every step replays and the configuration after the window is
    /// unchanged.
    fn moved(&self, o: &[Step], cs: &[Config], mv: Move) -> Option<Vec<Config>> {
        let (lo, hi) = (mv.from.min(mv.to), mv.from.max(mv.to));
        if mv.passed().any(|k| o[k].0 == o[mv.from].0) {
            return None;
        }
        let o2 = mv.apply(o);
        let mut out = cs.to_vec();
        for k in lo..=hi {
            out[k + 1] = self.exec(&out[k], o2[k])?;
        }
        (out[hi + 1] == cs[hi + 1]).then_some(out)
    }

    fn configs(&self, order: &[Step]) -> Option<Vec<Config>> {
        let mut out = vec![self.init.clone()];
        for &s in order {
            let n = self.exec(out.last().unwrap(), s)?;
            out.push(n);
        }
        Some(out)
    }
}

/// Adjacent swaps first, then single-event moves across longer windows.
/// Moves are needed for ABA orders where every adjacent swap is blocked.
fn moves(n: usize) -> impl Iterator<Item = Move> {
    (1..n).flat_map(move |d| (0..n - d).flat_map(move |i| [Move { from: i, to: i + d }, Move { from: i + d, to: i }]))
}

fn destutter(cs: &[Config]) -> Vec<&Heap> {
    let mut out: Vec<&Heap> = Vec::new();
    for c in cs {
        if out.last() != Some(&&c.heap) {
            out.push(&c.heap);
        }
    }
    out
}

/// Breadth-first search over legal moves for an order satisfying `goal`.
/// With `strong`, moves must also keep the shared-state sequence modulo
/// stuttering.
fn search(sc: &Scenario, start: Vec<Step>, strong: bool, budget: usize, goal: &dyn Fn(&[Step]) -> bool, good: &mut HashSet<Vec<Step>>) -> Option<bool> {
    if good.contains(&start) {
        return Some(true);
    }
    let cs0 = sc.configs(&start)?;
    let shared0: Vec<Heap> = destutter(&cs0).into_iter().cloned().collect();
    let mut seen: HashSet<Vec<Step>> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, cs0)]);
    while let Some((o, cs)) = queue.pop_front() {
        if goal(&o) || good.contains(&o) {
            good.extend(seen);
            return Some(true);
        }
        if seen.len() > budget {
            return None;
        }
        for mv in moves(o.len()) {
            let Some(cs2) = sc.moved(&o, &cs, mv) else { continue };
            let o2 = mv.apply(&o);
            if seen.contains(&o2) {
                continue;
            }
            if strong && destutter(&cs2).into_iter().ne(shared0.iter()) {
                continue;
            }
            seen.insert(o2.clone());
            queue.push_back((o2, cs2));
        }
    }
    Some(false)
}

/// Runs of consecutive steps of thread 1 as `(start, len)`.
fn blocks(o: &[Step]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (i, s) in o.iter().enumerate() {
        if s.0 == 1 {
            match out.last_mut() {
                Some((st, n)) if *st + *n == i => *n += 1,
                _ => out.push((i, 1)),
            }
        }
    }
    out
}

fn args_for(obj: &ObjectDef, method: MethodId, vals: &[i64]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for (_, ty) in &obj.methods[method].args {
        let choices: Vec<Value> = match ty {
            Ty::Int => vals.iter().map(|&v| Value::Int(v)).collect(),
            _ => vec![Value::Null],
        };
        out = out
            .into_iter()
            .flat_map(|a| {
                choices.iter().map(move |c| {
                    let mut a2 = a.clone();
                    a2.push(*c);
                    a2
                })
            })
            .collect();
    }
    out
}

/// Shared heaps reachable by environments of up to `threads` invocations.
fn reachable_heaps(obj: &ObjectDef, wb: &WpcBounds) -> Vec<Heap> {
    let mut calls = Vec::new();
    for mi in 0..obj.methods.len() {
        for args in args_for(obj, mi, &wb.args) {
            calls.push(Call { method: mi, args });
        }
    }
    let mut heaps: BTreeSet<Heap> = BTreeSet::new();
    let mut envs: Vec<Vec<Call>> = vec![vec![]];
    for _ in 0..wb.reach_threads {
        envs = envs
            .into_iter()
            .flat_map(|e| {
                calls.iter().map(move |c| {
                    let mut e2 = e.clone();
                    e2.push(c.clone());
                    e2
                })
            })
            .collect();
        for e in &envs {
            let env = Environment::new(e.clone());
            let interp = Interp::new(obj, &env, &wb.bounds);
            let mut seen: HashSet<Config> = HashSet::new();
            let mut stack = vec![interp.initial()];
            while let Some(c) = stack.pop() {
                if !seen.insert(c.clone()) {
                    continue;
                }
                heaps.insert(c.heap.clone());
                for t in 1..=env.threads() {
                    for (_, c2) in interp.step(&c, t).succs {
                        stack.push(c2);
                    }
                }
            }
        }
    }
    heaps.into_iter().collect()
}

fn sequences<'p>(writes: &[&'p Path], max: usize) -> Vec<Vec<&'p Path>> {
    let mut out: Vec<Vec<&Path>> = vec![vec![]];
    let mut layer: Vec<Vec<&Path>> = vec![vec![]];
    for _ in 0..max {
        layer = layer
            .into_iter()
            .flat_map(|s| {
                writes.iter().map(move |w| {
                    let mut s2 = s.clone();
                    s2.push(*w);
                    s2
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn scenario<'a>(obj: &'a ObjectDef, wb: &WpcBounds, heap: &Heap, paths: Vec<&'a Path>, args: Vec<Vec<Value>>, env: &'a Environment) -> Scenario<'a> {
    let interp = Interp::new(obj, env, &wb.bounds);
    let threads = paths
        .iter()
        .zip(&args)
        .map(|(p, a)| {
            let m = &obj.methods[p.method];
            let mut locals = vec![Value::Undef; m.locals.len()];
            locals[..a.len()].copy_from_slice(a);
            ThreadState { code: Code::At { node: m.cfg.entry, counters: vec![0; m.cfg.loops.len()] }, locals }
        })
        .collect();
    let init = Config { heap: heap.clone(), threads };
    Scenario { interp, init, paths }
}

/// Bounded check of the write-path and local-path reordering conditions plus
/// primitive coverage for a layer set.
pub fn check_wpc_lpc(obj: &ObjectDef, table: &PathTable, layers: &[Layer], wb: &WpcBounds) -> WpcReport {
    let mut rep = WpcReport::default();
    let mut covered: BTreeSet<(usize, PrimId)> = BTreeSet::new();
    let mut support: BTreeSet<(String, usize, String)> = BTreeSet::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    for l in layers {
        match l {
            Layer::Local { path } => {
                used.insert(path.clone());
            }
            Layer::Write { write_path, readers } => {
                used.insert(write_path.clone());
                for r in readers {
                    used.insert(r.path.clone());
                    support.insert((r.path.clone(), r.split, write_path.clone()));
                }
            }
        }
    }
    for id in &used {
        if let Some(p) = table.get(id) {
            covered.extend(p.steps.iter().map(|&s| (p.method, s)));
        }
    }
    for (mi, m) in obj.methods.iter().enumerate() {
        for pi in 0..m.prims.len() {
            if !covered.contains(&(mi, pi)) {
                rep.uncovered.push(format!("{}:{}", m.name, obj.names().prim(m, &m.prims[pi])));
            }
        }
    }
    let writes: Vec<&Path> = table.paths.iter().filter(|p| p.is_write() && used.contains(&p.id(obj))).collect();
    let locals: Vec<&Path> = table.paths.iter().filter(|p| !p.is_write() && used.contains(&p.id(obj))).collect();
    let heaps = reachable_heaps(obj, wb);
    rep.seed_states = heaps.len();
    let limit = wb.budget;
    let run = |subject: &Path, seqs: &[Vec<&Path>], strong: bool, count: &mut CheckCount| {
        for heap in &heaps {
            for seq in seqs {
                let mut paths = vec![subject];
                paths.extend(seq.iter().copied());
                let mut argsets: Vec<Vec<Vec<Value>>> = vec![vec![]];
                for p in &paths {
                    let choices = args_for(obj, p.method, &wb.args);
                    argsets = argsets
                        .into_iter()
                        .flat_map(|a| {
                            choices.iter().map(move |c| {
                                let mut a2 = a.clone();
                                a2.push(c.clone());
                                a2
                            })
                        })
                        .collect();
                }
                for args in argsets {
                    let env = Environment::new(paths.iter().zip(&args).map(|(p, a)| Call { method: p.method, args: a.clone() }).collect());
                    let sc = scenario(obj, wb, heap, paths.clone(), args, &env);
                    let (orders, truncated) = sc.interleavings(limit);
                    if truncated {
                        count.unknown += 1;
                    }
                    let names: Vec<String> = paths.iter().map(|p| p.id(obj)).collect();
                    let goal = |o: &[Step]| -> bool {
                        let b = blocks(o);
                        if b.len() == 1 {
                            return true;
                        }
                        if strong || b.len() != 2 {
                            return false;
                        }
                        // prefix . one whole writer . suffix
                        let (s0, n0) = b[0];
                        let gap = &o[s0 + n0..b[1].0];
                        let Some(first) = gap.first() else { return false };
                        if gap.iter().any(|s| s.0 != first.0) || gap.len() != sc.paths[first.0 - 1].steps.len() {
                            return false;
                        }
                        support.contains(&(names[0].clone(), n0, names[first.0 - 1].clone()))
                    };
                    let mut good = HashSet::new();
                    for o in orders {
                        count.checked += 1;
                        match search(&sc, o, strong, wb.budget, &goal, &mut good) {
                            Some(true) => {}
                            Some(false) => {
                                count.failed += 1;
                                if count.first_failure.is_none() {
                                    count.first_failure = Some(format!("{} against [{}]", names[0], names[1..].join(", ")));
                                }
                            }
                            None => count.unknown += 1,
                        }
                    }
                }
            }
        }
    };
    let wseqs: Vec<Vec<&Path>> = sequences(&writes, wb.wpc_writers).into_iter().filter(|s| !s.is_empty()).collect();
    for w in &writes {
        run(w, &wseqs, true, &mut rep.wpc);
    }
    let lseqs: Vec<Vec<&Path>> = sequences(&writes, wb.lpc_writers).into_iter().filter(|s| !s.is_empty()).collect();
    for l in &locals {
        run(l, &lseqs, false, &mut rep.lpc);
    }
    rep
}

use std::collections::{HashMap, HashSet};

use super::*;

/// Completed traces of an environment plus bound diagnostics.
#[derive(Clone, Debug, Default)]
pub struct Exploration {
    pub traces: Vec<Trace>,
    /// Some prefix exceeded the unroll or step bound.
    pub cut: bool,
    /// Some step was pruned for overflow, arena exhaustion or a fault.
    pub pruned: bool,
}

/// All completed executions of length at most `step_bound`, depth-first in
/// thread order. With `invokes_first`, threads are invoked in id order before
/// any other step, which selects one member per invoke placement.
pub fn explore(interp: &Interp, step_bound: usize, invokes_first: bool) -> Exploration {
    let mut ex = Exploration::default();
    let mut dead: HashSet<Config> = HashSet::new();
    let mut prefix = Vec::new();
    dfs(interp, interp.initial(), step_bound, invokes_first, &mut prefix, &mut dead, &mut ex);
    ex
}

fn enabled_threads(c: &Config, invokes_first: bool) -> Vec<usize> {
    if invokes_first {
        if let Some(i) = c.threads.iter().position(|t| t.code == Code::Idle) {
            return vec![i + 1];
        }
    }
    (1..=c.threads.len()).collect()
}

fn dfs(
    interp: &Interp,
    c: Config,
    bound: usize,
    invokes_first: bool,
    prefix: &mut Trace,
    dead: &mut HashSet<Config>,
    ex: &mut Exploration,
) -> bool {
    if c.is_final() {
        ex.traces.push(prefix.clone());
        return true;
    }
    if dead.contains(&c) {
        return false;
    }
    if prefix.len() >= bound {
        ex.cut = true;
        return false;
    }
    let mut any = false;
    for t in enabled_threads(&c, invokes_first) {
        let r = interp.step(&c, t);
        ex.cut |= r.cut;
        ex.pruned |= !r.faults.is_empty();
        for (label, c2) in r.succs {
            prefix.push(Event { thread: t, label });
            any |= dfs(interp, c2, bound, invokes_first, prefix, dead, ex);
            prefix.pop();
        }
    }
    if !any {
        dead.insert(c);
    }
    any
}

/// Number of completed executions, by memoized counting.
pub fn count_completions(interp: &Interp, step_bound: usize, invokes_first: bool) -> u64 {
    let mut memo: HashMap<(Config, usize), u64> = HashMap::new();
    count(interp, interp.initial(), 0, step_bound, invokes_first, &mut memo)
}

fn count(
    interp: &Interp,
    c: Config,
    depth: usize,
    bound: usize,
    invokes_first: bool,
    memo: &mut HashMap<(Config, usize), u64>,
) -> u64 {
    if c.is_final() {
        return 1;
    }
    if depth >= bound {
        return 0;
    }
    let key = (c, depth);
    if let Some(n) = memo.get(&key) {
        return *n;
    }
    let mut n = 0;
    for t in enabled_threads(&key.0, invokes_first) {
        for (_, c2) in interp.step(&key.0, t).succs {
            n += count(interp, c2, depth + 1, bound, invokes_first, memo);
        }
    }
    memo.insert(key, n);
    n
}

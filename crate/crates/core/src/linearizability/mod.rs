//! Sequential specifications, brute-force linearizability, linearization
//! point mappings and the quotient-based verdict.

mod lp;
mod spec;

pub use lp::{lp_linearize, lp_positions, operations, parse_lp, value_int, LpError, LpMapping, Operation};
pub use spec::{render_ops, spec_accepts, Commutation, OperationSymbol, SeqSpec, SpecState};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::equivalence::{check_quotient_complete, rename_normalized, Tri, TraceSpace};
use crate::interpreter::{render_trace, Bounds, Environment, Event, Interp, Trace};
use crate::layers::{validate_automaton, CompiledAutomaton, LayerAutomaton, PathTable};
use crate::object_model::ObjectDef;

/// Some order of the completed invocations that respects real-time
/// precedence and is accepted by `s`; the first in thread-id order.
pub fn brute_force_linearizable(obj: &ObjectDef, t: &[Event], s: SeqSpec) -> Option<Vec<OperationSymbol>> {
    let ops = operations(obj, t);
    let mut done = vec![false; ops.len()];
    let mut out = Vec::new();
    let mut dead: HashSet<(Vec<bool>, SpecState)> = HashSet::new();
    search(&ops, s, &s.initial(), &mut done, &mut out, &mut dead).then_some(out)
}

fn search(
    ops: &[Operation],
    s: SeqSpec,
    st: &SpecState,
    done: &mut Vec<bool>,
    out: &mut Vec<OperationSymbol>,
    dead: &mut HashSet<(Vec<bool>, SpecState)>,
) -> bool {
    if done.iter().all(|d| *d) {
        return true;
    }
    if dead.contains(&(done.clone(), st.clone())) {
        return false;
    }
    for i in 0..ops.len() {
        if done[i] {
            continue;
        }
        // i may go next only if no pending invocation returned before i began
        if (0..ops.len()).any(|j| !done[j] && j != i && ops[j].ret < ops[i].invoke) {
            continue;
        }
        let Some(n) = s.step(st, &ops[i].op) else { continue };
        done[i] = true;
        out.push(ops[i].op.clone());
        if search(ops, s, &n, done, out, dead) {
            return true;
        }
        out.pop();
        done[i] = false;
    }
    dead.insert((done.clone(), st.clone()));
    false
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Automaton,
    Completeness,
    Mapping,
    Linearization,
    Robustness,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub linearizable: Tri,
    pub stage: Option<Stage>,
    pub message: String,
    pub counterexample: Option<Trace>,
    pub ordering: Option<Vec<OperationSymbol>>,
    pub envs: usize,
    pub traces: usize,
    pub representatives: usize,
    /// Operation pairs exchanged between linearization points.
    pub swapped_pairs: usize,
}

impl Verdict {
    fn new() -> Self {
        Verdict {
            linearizable: Tri::Yes,
            stage: None,
            message: String::new(),
            counterexample: None,
            ordering: None,
            envs: 0,
            traces: 0,
            representatives: 0,
            swapped_pairs: 0,
        }
    }

    fn fail(mut self, status: Tri, stage: Stage, message: String, trace: Option<Trace>, ordering: Option<Vec<OperationSymbol>>) -> Self {
        self.linearizable = status;
        self.stage = Some(stage);
        self.message = message;
        self.counterexample = trace;
        self.ordering = ordering;
        self
    }

    pub fn render(&self, obj: &ObjectDef) -> String {
        let mut s = String::new();
        let v = match self.linearizable {
            Tri::Yes => "yes",
            Tri::No => "no",
            Tri::Unknown => "unknown",
        };
        writeln!(s, "linearizable: {v}").unwrap();
        writeln!(s, "envs {} traces {} representatives {} lp-swaps {}", self.envs, self.traces, self.representatives, self.swapped_pairs)
            .unwrap();
        if let Some(st) = self.stage {
            writeln!(s, "stage: {}", serde_json::to_string(&st).unwrap().trim_matches('"')).unwrap();
        }
        if !self.message.is_empty() {
            writeln!(s, "{}", self.message).unwrap();
        }
        if let Some(o) = &self.ordering {
            writeln!(s, "ordering: {}", render_ops(o)).unwrap();
        }
        if let Some(t) = &self.counterexample {
            s.push_str("counterexample:\n");
            s.push_str(&render_trace(obj, t));
        }
        s
    }
}

/// Knobs of the quotient-based verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyBounds {
    pub bounds: Bounds,
    /// Longest witness accepted by the completeness check.
    pub budget: usize,
    /// Context length of the S-commutativity check.
    pub context: usize,
    /// Values of the S-commutativity alphabet.
    pub values: Vec<i64>,
}

impl Default for VerifyBounds {
    fn default() -> Self {
        VerifyBounds { bounds: Bounds { unroll: 2, ..Bounds::default() }, budget: 50_000, context: 4, values: vec![0, 1, 2, 3] }
    }
}

/// Per environment: every trace has a representative in the automaton, every
/// representative linearizes at its mapped points, and every reordering a
/// witness performs between two linearization points exchanges
/// S-commutative operations. `No` means the mapping yields a rejected
/// sequence on some trace; a failed commutation alone is `Unknown`.
pub fn verify_object(
    obj: &ObjectDef,
    a: &LayerAutomaton,
    table: &PathTable,
    m: &LpMapping,
    spec: SeqSpec,
    envs: &[Environment],
    vb: &VerifyBounds,
) -> Verdict {
    let mut v = Verdict::new();
    let bad = validate_automaton(a, Some(table));
    if !bad.is_empty() {
        let msg = bad.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ");
        return v.fail(Tri::Unknown, Stage::Automaton, msg, None, None);
    }
    let ca = match CompiledAutomaton::new(a, table) {
        Ok(c) => c,
        Err(e) => return v.fail(Tri::Unknown, Stage::Automaton, e.to_string(), None, None),
    };
    let mut comm = Commutation::new(spec, &vb.values, vb.context);
    let mut pairs: BTreeSet<(OperationSymbol, OperationSymbol)> = BTreeSet::new();
    let mut undecided: Option<(String, Trace)> = None;
    for env in envs {
        v.envs += 1;
        let interp = Interp::new(obj, env, &vb.bounds);
        let space = TraceSpace::build(&interp);
        v.traces += space.len();
        let rep = check_quotient_complete(&space, &ca, vb.budget);
        if let Some(&f) = rep.failures.first() {
            let msg = format!("{} of {} traces have no representative", rep.failures.len(), rep.total);
            return v.fail(Tri::Unknown, Stage::Completeness, msg, Some(space.traces[f].clone()), None);
        }
        if rep.unknown > 0 {
            let msg = format!("{} traces exceed the witness budget", rep.unknown);
            return v.fail(Tri::Unknown, Stage::Completeness, msg, None, None);
        }
        v.representatives += rep.members.len();
        let mut lps: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
        for &r in &rep.members {
            let t = &space.traces[r];
            let run = ca.member(t).expect("members have runs");
            let pos = match lp_positions(obj, t, &run, table, m) {
                Ok(p) => p,
                Err(e) => return v.fail(Tri::Unknown, Stage::Mapping, e.to_string(), Some(t.clone()), None),
            };
            let ops = lp_linearize(obj, t, &pos).expect("positions cover every operation");
            if !spec_accepts(spec, &ops) {
                let msg = "representative linearizes to a sequence the specification rejects".to_string();
                return v.fail(Tri::No, Stage::Linearization, msg, Some(t.clone()), Some(ops));
            }
            lps.insert(r, pos);
        }
        for (i, w) in rep.witnesses.iter().enumerate() {
            let Some(w) = w else { continue };
            let rt = &space.traces[w.representative];
            let ops: BTreeMap<usize, OperationSymbol> = operations(obj, rt).into_iter().map(|o| (o.thread, o.op)).collect();
            let mut at: BTreeMap<usize, usize> = lps[&w.representative].iter().map(|(t, p)| (*p, *t)).collect();
            let mut cur = rt.clone();
            let mut clash = None;
            for mv in w.moves.iter().rev() {
                let back = mv.inverse();
                if let Some(&ta) = at.get(&back.from) {
                    for k in back.passed() {
                        if let Some(&tb) = at.get(&k) {
                            let (oa, ob) = (&ops[&ta], &ops[&tb]);
                            pairs.insert(if oa <= ob { (oa.clone(), ob.clone()) } else { (ob.clone(), oa.clone()) });
                            if clash.is_none() && !comm.commute(oa, ob) {
                                clash = Some(format!("reordering exchanges {oa} and {ob}, which do not commute in the specification"));
                            }
                        }
                    }
                }
                at = at.into_iter().map(|(p, t)| (back.track(p), t)).collect();
                cur = back.apply(&cur);
            }
            debug_assert_eq!(cur, rename_normalized(&space.traces[i], &w.renaming));
            let Some(msg) = clash else { continue };
            // The mapping transported onto the trace itself decides between
            // a refuted mapping and a failed proof obligation.
            let order: Vec<OperationSymbol> = at.values().map(|t| ops[t].clone()).collect();
            if !spec_accepts(spec, &order) {
                v.swapped_pairs = pairs.len();
                let msg = format!("{msg}; the transported points give a sequence the specification rejects");
                return v.fail(Tri::No, Stage::Robustness, msg, Some(cur), Some(order));
            }
            undecided.get_or_insert((msg, cur));
        }
    }
    v.swapped_pairs = pairs.len();
    if let Some((msg, t)) = undecided {
        return v.fail(Tri::Unknown, Stage::Robustness, msg, Some(t), None);
    }
    v
}

/// Robustness of a fixed set of exchanged operation pairs.
pub fn check_robustness(pairs: &BTreeSet<(OperationSymbol, OperationSymbol)>, spec: SeqSpec, values: &[i64], context: usize) -> Result<(), (OperationSymbol, OperationSymbol)> {
    let mut c = Commutation::new(spec, values, context);
    for (a, b) in pairs {
        if !c.commute(a, b) {
            return Err((a.clone(), b.clone()));
        }
    }
    Ok(())
}

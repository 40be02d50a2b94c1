//! Weakest preconditions against concrete execution, exhaustively over a
//! small pre-state domain: integers 0..=2, at most three nodes.

use quotient::interpreter::{run_sequence, Bounds, Config, Environment, Heap, Interp, Piece};
use quotient::object_model::{enumerate_all_paths, ObjectDef, Ty, Value};
use quotient::synthesis::{eval_pred, wp, ConcreteStore, Pred, Role};

const INTS: [i64; 3] = [0, 1, 2];
const MAX_NODES: usize = 3;

fn domain(ty: Ty, nodes: usize) -> Vec<Value> {
    let mut out = Vec::new();
    if ty != Ty::Ref {
        out.extend(INTS.iter().map(|&i| Value::Int(i)));
    }
    if ty != Ty::Int {
        out.push(Value::Null);
        out.extend((0..nodes as u32).map(Value::Ref));
    }
    out
}

/// Every heap over the domain, as a product of per-cell choices.
fn heaps(obj: &ObjectDef) -> Vec<Heap> {
    let mut out = Vec::new();
    for n in 0..=MAX_NODES {
        let mut cells: Vec<Vec<Value>> = obj.shared.iter().map(|d| domain(d.ty, n)).collect();
        for _ in 0..n {
            cells.extend(obj.fields.iter().map(|f| domain(f.ty, n)));
        }
        let mut idx = vec![0usize; cells.len()];
        loop {
            let vals: Vec<Value> = idx.iter().zip(&cells).map(|(&i, c)| c[i]).collect();
            let (vars, rest) = vals.split_at(obj.shared.len());
            let nodes = if obj.fields.is_empty() { vec![vec![]; n] } else { rest.chunks(obj.fields.len()).map(<[Value]>::to_vec).collect() };
            out.push(Heap { vars: vars.to_vec(), nodes });
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < cells[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    out
}

fn argsets(obj: &ObjectDef, method: usize) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![vec![]];
    for (_, ty) in &obj.methods[method].args {
        out = out.iter().flat_map(|a| domain(*ty, 0).into_iter().map(move |v| [a.as_slice(), &[v]].concat())).collect();
    }
    out
}

/// `(checked, mismatches)` over every path, argument set and heap.
pub fn check(obj: &ObjectDef) -> (usize, usize) {
    let bounds = Bounds { arena: MAX_NODES + 2, ..Bounds::default() };
    let paths = enumerate_all_paths(obj, 1).unwrap();
    let heaps = heaps(obj);
    let (mut checked, mut mismatches) = (0, 0);
    for p in &paths {
        let pre: Pred = wp(obj, p.method, &p.steps, &Pred::True);
        for args in argsets(obj, p.method) {
            let env = Environment::new(vec![quotient::interpreter::Call { method: p.method, args: args.clone() }]);
            let interp = Interp::new(obj, &env, &bounds);
            let mut locals = vec![Value::Undef; obj.methods[p.method].locals.len()];
            locals[..args.len()].copy_from_slice(&args);
            for h in &heaps {
                let mut c = Config::initial(obj, &env);
                c.heap = h.clone();
                let ran = run_sequence(&interp, &c, &[Piece { thread: 1, steps: p.steps.clone() }]).feasible;
                let mut store = ConcreteStore { obj, heap: h, bounds: &bounds, threads: vec![(Role::Own, p.method, &locals)] };
                let holds = eval_pred(&mut store, &pre);
                checked += 1;
                if ran != holds {
                    mismatches += 1;
                    if mismatches <= 3 {
                        eprintln!("{} {} args {args:?}: wp {holds} run {ran} on {h:?}", obj.name, p.id(obj));
                    }
                }
            }
        }
    }
    (checked, mismatches)
}

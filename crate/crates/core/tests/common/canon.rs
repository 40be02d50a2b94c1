//! Canonical interpretation traces of write layers and their suffix
//! transpositions.

use quotient::interpreter::Trace;
use quotient::layers::{interpret_member, layer_to_expr, EdgeKind, Layer, LayerAutomaton, PathTable};
use quotient::object_model::ObjectDef;

/// Every way to spread `k` instances over `n` readers.
fn spreads(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return if k == 0 { vec![vec![]] } else { vec![] };
    }
    (0..=k)
        .flat_map(|first| spreads(n - 1, k - first).into_iter().map(move |rest| [vec![first], rest].concat()))
        .collect()
}

/// The suffix block with two adjacent threads exchanged, one per position.
fn suffix_transpositions(t: &Trace, readers: usize) -> Vec<Trace> {
    // suffix words start after the writer, which runs on the last thread
    let writer = t.iter().map(|e| e.thread).max().unwrap();
    let after = t.iter().rposition(|e| e.thread == writer).unwrap() + 1;
    let mut blocks: Vec<Trace> = Vec::new();
    for e in &t[after..] {
        match blocks.last_mut() {
            Some(b) if b[0].thread == e.thread => b.push(e.clone()),
            _ => blocks.push(vec![e.clone()]),
        }
    }
    assert_eq!(blocks.len(), readers);
    (0..blocks.len().saturating_sub(1))
        .map(|i| {
            let mut b = blocks.clone();
            b.swap(i, i + 1);
            [t[..after].to_vec(), b.concat()].concat()
        })
        .collect()
}

/// (accepted canonical traces, rejected perturbations, failures).
pub fn canonicality(obj: &ObjectDef, a: &LayerAutomaton) -> (usize, usize, Vec<String>) {
    let table = PathTable::new(obj, 1).unwrap();
    let (mut ok, mut rejected, mut bad) = (0, 0, Vec::new());
    let mut seen: Vec<&Layer> = Vec::new();
    for e in a.edges.iter().filter(|e| e.kind == EdgeKind::Write) {
        let l = &e.layers[0];
        if seen.contains(&l) {
            continue;
        }
        seen.push(l);
        let Layer::Write { readers, .. } = l else { unreachable!() };
        let expr = layer_to_expr(&table, l).unwrap();
        for k in 0..=2 {
            for counts in spreads(readers.len(), k) {
                let t = table.canonical_trace(l, &counts).unwrap();
                if interpret_member(&t, &expr).is_some() {
                    ok += 1;
                } else {
                    bad.push(format!("{l:?} {counts:?} canonical trace rejected"));
                }
                for p in suffix_transpositions(&t, k) {
                    if interpret_member(&p, &expr).is_none() {
                        rejected += 1;
                    } else {
                        bad.push(format!("{l:?} {counts:?} perturbation accepted"));
                    }
                }
            }
        }
    }
    (ok, rejected, bad)
}

use serde::{Deserialize, Serialize};

/// Reader of a write layer: `path[..split]` runs before the writer and
/// `path[split..]` after it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Reader {
    pub path: String,
    pub split: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Layer {
    Local { path: String },
    Write { write_path: String, readers: Vec<Reader> },
}

impl Layer {
    pub fn is_write(&self) -> bool {
        matches!(self, Layer::Write { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    #[serde(rename = "self")]
    SelfLoop,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateDef {
    pub id: usize,
    pub predicate: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeKind,
    pub layers: Vec<Layer>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LayerAutomaton {
    pub states: Vec<StateDef>,
    pub initial: Vec<usize>,
    pub edges: Vec<Edge>,
}

impl LayerAutomaton {
    /// Self-loops count as one transition each.
    pub fn transition_count(&self) -> usize {
        self.edges.len()
    }

    /// Distinct write layers plus distinct self-loop labels.
    pub fn layer_count(&self) -> usize {
        let mut writes: Vec<&Layer> = Vec::new();
        let mut loops: Vec<&Vec<Layer>> = Vec::new();
        for e in &self.edges {
            match e.kind {
                EdgeKind::Write => {
                    for l in &e.layers {
                        if !writes.contains(&l) {
                            writes.push(l);
                        }
                    }
                }
                EdgeKind::SelfLoop => {
                    if !loops.contains(&&e.layers) {
                        loops.push(&e.layers);
                    }
                }
            }
        }
        writes.len() + loops.len()
    }

    pub fn self_loop(&self, state: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.kind == EdgeKind::SelfLoop && e.from == state)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("automaton serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// A state bijection `self -> other` preserving predicates (up to
    /// whitespace), initial states and the edge multiset. Reader order
    /// within a layer and layer order within a self-loop are ignored.
    pub fn isomorphism(&self, other: &LayerAutomaton) -> Option<Vec<usize>> {
        let n = self.states.len();
        if n != other.states.len() || self.edges.len() != other.edges.len() || self.initial.len() != other.initial.len() {
            return None;
        }
        let squash = |s: &str| s.split_whitespace().collect::<String>();
        let a: Vec<String> = self.states.iter().map(|s| squash(&s.predicate)).collect();
        let b: Vec<String> = other.states.iter().map(|s| squash(&s.predicate)).collect();
        let theirs = edge_keys(other, &(0..n).collect::<Vec<_>>());
        let mut perm = vec![usize::MAX; n];
        let mut used = vec![false; n];
        fn go(
            i: usize,
            perm: &mut Vec<usize>,
            used: &mut Vec<bool>,
            ok: &dyn Fn(usize, usize) -> bool,
            done: &dyn Fn(&[usize]) -> bool,
        ) -> bool {
            if i == perm.len() {
                return done(perm);
            }
            for j in 0..perm.len() {
                if !used[j] && ok(i, j) {
                    used[j] = true;
                    perm[i] = j;
                    if go(i + 1, perm, used, ok, done) {
                        return true;
                    }
                    used[j] = false;
                }
            }
            false
        }
        let ok = |i: usize, j: usize| a[i] == b[j] && self.initial.contains(&i) == other.initial.contains(&j);
        let done = |p: &[usize]| edge_keys(self, p) == theirs;
        go(0, &mut perm, &mut used, &ok, &done).then_some(perm)
    }
}

type EdgeKey = (usize, usize, EdgeKind, Vec<Layer>);

fn edge_keys(a: &LayerAutomaton, perm: &[usize]) -> Vec<EdgeKey> {
    let mut out: Vec<EdgeKey> = a
        .edges
        .iter()
        .map(|e| {
            let mut layers: Vec<Layer> = e
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Write { write_path, readers } => {
                        let mut rs = readers.clone();
                        rs.sort();
                        Layer::Write { write_path: write_path.clone(), readers: rs }
                    }
                    other => other.clone(),
                })
                .collect();
            layers.sort();
            (perm[e.from], perm[e.to], e.kind, layers)
        })
        .collect();
    out.sort();
    out
}

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

/// `method(args)/rets`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperationSymbol {
    pub method: String,
    pub args: Vec<i64>,
    pub rets: Vec<i64>,
}

impl OperationSymbol {
    pub fn new(method: &str, args: &[i64], rets: &[i64]) -> Self {
        OperationSymbol { method: method.to_string(), args: args.to_vec(), rets: rets.to_vec() }
    }
}

impl fmt::Display for OperationSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.args.iter().map(|v| v.to_string()).collect();
        let r: Vec<String> = self.rets.iter().map(|v| v.to_string()).collect();
        write!(f, "{}({})/{}", self.method, a.join(","), r.join(","))
    }
}

pub fn render_ops(ops: &[OperationSymbol]) -> String {
    let v: Vec<String> = ops.iter().map(|o| o.to_string()).collect();
    v.join(" . ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeqSpec {
    Counter,
    Stack,
    Queue,
    Set,
}

impl std::str::FromStr for SeqSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "counter" => Ok(SeqSpec::Counter),
            "stack" => Ok(SeqSpec::Stack),
            "queue" => Ok(SeqSpec::Queue),
            "set" => Ok(SeqSpec::Set),
            _ => Err(format!("unknown spec `{s}`")),
        }
    }
}

/// Abstract ADT state. Counter uses one cell; stack and queue list their
/// contents front first; the set is sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpecState(pub VecDeque<i64>);

impl SeqSpec {
    pub fn initial(self) -> SpecState {
        match self {
            SeqSpec::Counter => SpecState(VecDeque::from([0])),
            _ => SpecState(VecDeque::new()),
        }
    }

    /// Methods, argument count and return count of the ADT's alphabet.
    pub fn signature(self) -> &'static [(&'static str, usize, usize)] {
        match self {
            SeqSpec::Counter => &[("increment", 0, 1), ("decrement", 0, 1)],
            SeqSpec::Stack => &[("push", 1, 1), ("pop", 0, 1)],
            SeqSpec::Queue => &[("enq", 1, 1), ("deq", 0, 1), ("adv", 0, 1)],
            SeqSpec::Set => &[("insert", 1, 1), ("delete", 1, 1), ("contains", 1, 1)],
        }
    }

    /// Successor state, or `None` when the operation's returns disagree with
    /// the reference ADT. Dequeue and pop on empty return 0; decrement at
    /// zero returns 0 and leaves the counter unchanged; `adv` is a no-op.
    pub fn step(self, s: &SpecState, op: &OperationSymbol) -> Option<SpecState> {
        let ret = |v: i64| (op.rets.as_slice() == [v]).then_some(());
        let arg = || op.args.first().copied();
        let mut n = s.clone();
        match (self, canonical(&op.method)) {
            (SeqSpec::Counter, "increment") => {
                ret(n.0[0])?;
                n.0[0] += 1;
            }
            (SeqSpec::Counter, "decrement") => {
                let c = n.0[0];
                ret(c)?;
                if c > 0 {
                    n.0[0] -= 1;
                }
            }
            (SeqSpec::Stack, "push") => {
                ret(0)?;
                n.0.push_front(arg()?);
            }
            (SeqSpec::Stack | SeqSpec::Queue, "pop" | "deq") => {
                ret(n.0.front().copied().unwrap_or(0))?;
                n.0.pop_front();
            }
            (SeqSpec::Queue, "enq") => {
                ret(1)?;
                n.0.push_back(arg()?);
            }
            (SeqSpec::Queue, "adv") => ret(0)?,
            (SeqSpec::Set, m @ ("insert" | "delete" | "contains")) => {
                let k = arg()?;
                let pos = n.0.iter().position(|&x| x == k);
                ret(pos.is_some() as i64 ^ (m == "insert") as i64)?;
                match (m, pos) {
                    ("insert", None) => {
                        let at = n.0.iter().position(|&x| x > k).unwrap_or(n.0.len());
                        n.0.insert(at, k);
                    }
                    ("delete", Some(p)) => {
                        n.0.remove(p);
                    }
                    _ => {}
                }
            }
            _ => return None,
        }
        Some(n)
    }

    pub fn run(self, ops: &[OperationSymbol]) -> Option<SpecState> {
        ops.iter().try_fold(self.initial(), |s, o| self.step(&s, o))
    }
}

fn canonical(m: &str) -> &str {
    match m {
        "inc" => "increment",
        "dec" => "decrement",
        "add" => "insert",
        "remove" => "delete",
        "enqueue" => "enq",
        "dequeue" => "deq",
        other => other,
    }
}

pub fn spec_accepts(s: SeqSpec, ops: &[OperationSymbol]) -> bool {
    s.run(ops).is_some()
}

/// Bounded S-commutativity: `h1 o1 o2 h2` and `h1 o2 o1 h2` agree on
/// acceptance for all contexts with `|h1| + |h2| <= len` over the alphabet
/// built from `values`.
pub struct Commutation {
    spec: SeqSpec,
    alphabet: Vec<OperationSymbol>,
    len: usize,
    cache: HashMap<(OperationSymbol, OperationSymbol), bool>,
}

impl Commutation {
    pub fn new(spec: SeqSpec, values: &[i64], len: usize) -> Self {
        let mut vals: BTreeSet<i64> = values.iter().copied().collect();
        vals.extend([0, 1]);
        let mut alphabet = Vec::new();
        for &(m, na, nr) in spec.signature() {
            let mut argsets: Vec<Vec<i64>> = vec![vec![]];
            for _ in 0..na {
                argsets = argsets.iter().flat_map(|a| vals.iter().map(move |v| [a.clone(), vec![*v]].concat())).collect();
            }
            let mut retsets: Vec<Vec<i64>> = vec![vec![]];
            for _ in 0..nr {
                retsets = retsets.iter().flat_map(|a| vals.iter().map(move |v| [a.clone(), vec![*v]].concat())).collect();
            }
            for a in &argsets {
                for r in &retsets {
                    alphabet.push(OperationSymbol::new(m, a, r));
                }
            }
        }
        Commutation { spec, alphabet, len, cache: HashMap::new() }
    }

    pub fn commute(&mut self, o1: &OperationSymbol, o2: &OperationSymbol) -> bool {
        let key = if o1 <= o2 { (o1.clone(), o2.clone()) } else { (o2.clone(), o1.clone()) };
        if let Some(&b) = self.cache.get(&key) {
            return b;
        }
        let b = self.prefixes(&self.spec.initial(), o1, o2, self.len);
        self.cache.insert(key, b);
        b
    }

    fn prefixes(&self, s: &SpecState, o1: &OperationSymbol, o2: &OperationSymbol, room: usize) -> bool {
        let a = self.spec.step(s, o1).and_then(|x| self.spec.step(&x, o2));
        let b = self.spec.step(s, o2).and_then(|x| self.spec.step(&x, o1));
        let here = match (&a, &b) {
            (None, None) => true,
            (Some(x), Some(y)) => x == y || self.suffixes(x, y, room),
            _ => false,
        };
        if !here {
            return false;
        }
        if room == 0 {
            return true;
        }
        // The specs are prefix closed: rejected prefixes reject both orders.
        self.alphabet.iter().all(|o| match self.spec.step(s, o) {
            Some(n) => self.prefixes(&n, o1, o2, room - 1),
            None => true,
        })
    }

    fn suffixes(&self, x: &SpecState, y: &SpecState, room: usize) -> bool {
        if room == 0 {
            return true;
        }
        self.alphabet.iter().all(|o| match (self.spec.step(x, o), self.spec.step(y, o)) {
            (None, None) => true,
            (Some(a), Some(b)) => a == b || self.suffixes(&a, &b, room - 1),
            _ => false,
        })
    }
}

use std::fmt::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::oracle::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QueryPurpose {
    State,
    Enabled,
    WritePost,
    Standalone,
    Reader,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub purpose: QueryPurpose,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LogEvent {
    Enabled { state: usize, pred: String, write: String, enabled: bool },
    WritePost { from: usize, from_pred: String, to: usize, to_pred: String, write: String, feasible: bool },
    LayerCreated {
        from: usize,
        to: usize,
        write: String,
        /// `(path id, suffix length)`
        readers: Vec<(String, usize)>,
        missed: Vec<String>,
        skipped: Vec<String>,
        total: usize,
    },
    SelfLoop { state: usize, layers: Vec<String> },
}

/// Ordered record of one synthesis run. Every oracle call appears in
/// `queries`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SynthesisLog {
    pub states: Vec<String>,
    pub initial: Vec<usize>,
    pub events: Vec<LogEvent>,
    pub queries: Vec<QueryRecord>,
    pub layers: usize,
    pub elapsed: Duration,
}

impl SynthesisLog {
    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    pub fn render(&self, file: &str) -> String {
        let mut s = String::from(" + begin Algorithm\n");
        for (i, p) in self.states.iter().enumerate() {
            let init = if self.initial.contains(&i) { "  (initial)" } else { "" };
            writeln!(s, " + state q{i}: {p}{init}").unwrap();
        }
        for e in &self.events {
            match e {
                LogEvent::Enabled { state, pred, write, enabled } => {
                    let v = if *enabled { "enabled" } else { "NOT enabled" };
                    writeln!(s, "checking if write({write}) is enabled from q{state}:({pred}) ... {v}").unwrap();
                }
                LogEvent::WritePost { from, from_pred, to, to_pred, write, feasible } => {
                    let v = if *feasible { "feasible" } else { "NOT feasible" };
                    writeln!(s, "Trying layer: q{from}({from_pred})--{write}-->q{to}({to_pred}):  writePost is {v}.")
                        .unwrap();
                }
                LogEvent::LayerCreated { from, to, write, readers, missed, skipped, total } => {
                    writeln!(s, ">>> LAYER CREATED: q{from}--write({write})-->q{to} with the following readers:").unwrap();
                    for (r, at) in readers {
                        writeln!(s, " * reader({r}), interleaved at {at}").unwrap();
                    }
                    for r in missed {
                        writeln!(s, "  - did not find any feasible interleavings for reader({r})").unwrap();
                    }
                    for r in skipped {
                        writeln!(s, "  - reader({r}) also runs without the writer").unwrap();
                    }
                    writeln!(
                        s,
                        "  -> total there were {} readers (out of {total}) invalidated by the writer",
                        readers.len()
                    )
                    .unwrap();
                }
                LogEvent::SelfLoop { state, layers } => {
                    if layers.is_empty() {
                        writeln!(s, " + no self-loop at q{state}").unwrap();
                    } else {
                        writeln!(s, " + self-loop at q{state}: {}", layers.join(", ")).unwrap();
                    }
                }
            }
        }
        s.push_str("+ complete.\n");
        s.push_str("file & states & layers & time & queries\n");
        writeln!(
            s,
            "RESULT: {file} & {} & {} & {:.2} & {}",
            self.states.len(),
            self.layers,
            self.elapsed.as_secs_f64(),
            self.query_count()
        )
        .unwrap();
        s
    }
}

use std::fmt::Write as _;

use quotient::interpreter::Bounds;
use quotient::synthesis::Synthesis;
use serde::{Deserialize, Serialize};

/// Everything that determines a run's output. All enumeration is
/// deterministic, so equal configs give equal reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub bounds: Bounds,
    /// Largest environment size of a sweep.
    pub threads: usize,
    /// Argument values of a sweep.
    pub values: Vec<i64>,
    /// Explicit environments; when non-empty they replace the sweep.
    pub envs: Vec<String>,
    pub budget: usize,
    /// Context length of the S-commutativity check.
    pub context: usize,
}

impl RunConfig {
    pub fn check(&self) -> Result<(), String> {
        let b = &self.bounds;
        if b.unroll == 0 || b.arena == 0 || self.budget == 0 {
            return Err("unroll, arena and budget must be positive".into());
        }
        if b.int_min > b.int_max {
            return Err(format!("empty integer range {}..={}", b.int_min, b.int_max));
        }
        Ok(())
    }
}

/// One row of the benchmark table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub states: usize,
    pub local_paths: usize,
    pub write_paths: usize,
    pub transitions: usize,
    pub layers: usize,
    /// Informational only; not part of the reproducibility contract.
    pub time_s: f64,
    pub queries: usize,
    pub unknowns: usize,
}

impl BenchRow {
    pub fn of(name: &str, s: &Synthesis) -> BenchRow {
        BenchRow {
            name: name.to_string(),
            states: s.automaton.states.len(),
            local_paths: s.local_paths(),
            write_paths: s.write_paths(),
            transitions: s.automaton.transition_count(),
            layers: s.automaton.layer_count(),
            time_s: s.log.elapsed.as_secs_f64(),
            queries: s.log.query_count(),
            unknowns: s.unknowns(),
        }
    }
}

const HEADER: [&str; 9] = ["name", "states", "local", "write", "trans", "layers", "time_s", "queries", "unknown"];

fn cells(r: &BenchRow) -> [String; 9] {
    [
        r.name.clone(),
        r.states.to_string(),
        r.local_paths.to_string(),
        r.write_paths.to_string(),
        r.transitions.to_string(),
        r.layers.to_string(),
        format!("{:.2}", r.time_s),
        r.queries.to_string(),
        r.unknowns.to_string(),
    ]
}

pub fn render_table(rows: &[BenchRow]) -> String {
    let body: Vec<[String; 9]> = rows.iter().map(cells).collect();
    let mut width = HEADER.map(str::len);
    for r in &body {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    let line = |s: &mut String, cs: &[&str]| {
        for (i, c) in cs.iter().enumerate() {
            if i == 0 {
                write!(s, "{c:<w$}", w = width[0]).unwrap();
            } else {
                write!(s, "  {c:>w$}", w = width[i]).unwrap();
            }
        }
        s.push('\n');
    };
    line(&mut s, &HEADER);
    for r in &body {
        line(&mut s, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    s
}

pub fn render_csv(rows: &[BenchRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(cells(r))?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(file)
}

fn quotient(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quotient")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Synthesizes `name` into `dir` and returns the automaton path.
fn synthesize(dir: &tempfile::TempDir, name: &str) -> String {
    let out = dir.path().join(format!("{name}.json"));
    let qo = corpus(&format!("{name}.qo"));
    let mut args = vec!["synthesize".to_string(), qo.display().to_string(), "--out".into(), out.display().to_string()];
    let states = corpus(&format!("{name}.states"));
    if states.exists() {
        args.extend(["--states".into(), states.display().to_string()]);
    }
    let o = quotient(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.display().to_string()
}

#[test]
fn paths_lists_counts() {
    let o = quotient(&["paths", corpus("msq.qo").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("12 paths, 9 Local / 3 Write"), "{}", stdout(&o));
}

#[test]
fn missing_and_malformed_inputs_exit_2() {
    assert_eq!(code(&quotient(&["paths", "/nonexistent.qo"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qo");
    std::fs::write(&bad, "object o\nshared x: int = 0\nmethod m() returns int {\n  x := ;\n}\n").unwrap();
    let o = quotient(&["paths", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("4:"));
    let bad_env = quotient(&["explore", corpus("counter.qo").to_str().unwrap(), "--env", "shove"]);
    assert_eq!(code(&bad_env), 2);
}

#[test]
fn zero_bounds_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let a = synthesize(&dir, "counter");
    let o = quotient(&["check-quotient", corpus("counter.qo").to_str().unwrap(), &a, "--unroll", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn synthesize_writes_json_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("counter.log");
    let out = dir.path().join("counter.json");
    let o = quotient(&[
        "--json",
        "synthesize",
        corpus("counter.qo").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["row"]["states"], 2);
    assert!(std::fs::read_to_string(&out).unwrap().contains("\"edges\""));
    assert!(!std::fs::read_to_string(&log).unwrap().is_empty());
}

#[test]
fn check_quotient_accepts_the_synthesized_counter() {
    let dir = tempfile::tempdir().unwrap();
    let a = synthesize(&dir, "counter");
    let o = quotient(&["check-quotient", corpus("counter.qo").to_str().unwrap(), &a, "--threads", "2"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn check_quotient_rejects_a_truncated_automaton() {
    let dir = tempfile::tempdir().unwrap();
    let a = synthesize(&dir, "counter");
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    let edges = json["edges"].as_array_mut().unwrap();
    edges.retain(|e| e["kind"] != "write" || e["layers"][0]["write_path"] != "decrement:1");
    std::fs::write(&a, serde_json::to_string(&json).unwrap()).unwrap();
    let o = quotient(&["check-quotient", corpus("counter.qo").to_str().unwrap(), &a, "--env", "increment,decrement"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn check_lin_verdicts_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = synthesize(&dir, "counter");
    let qo = corpus("counter.qo");
    let lp = corpus("counter.lp");
    let o = quotient(&["check-lin", qo.to_str().unwrap(), &a, "--spec", "counter", "--lp", lp.to_str().unwrap(), "--brute"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("linearizable: yes"));
    assert!(stdout(&o).contains("0 not linearizable"));

    let early = dir.path().join("early.lp");
    std::fs::write(&early, std::fs::read_to_string(&lp).unwrap().replace("layer increment:0 lp = 1", "layer increment:0 lp = 0")).unwrap();
    let o = quotient(&["check-lin", qo.to_str().unwrap(), &a, "--spec", "counter", "--lp", early.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
    assert!(stdout(&o).contains("linearizable: no"));

    let none = dir.path().join("none.lp");
    std::fs::write(&none, "layer increment:0 lp = 1\nlayer decrement:1 lp = 2\n").unwrap();
    let o = quotient(&["check-lin", qo.to_str().unwrap(), &a, "--spec", "counter", "--lp", none.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
}

#[test]
fn report_prints_one_row_per_object() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["counter.qo", "treiber.qo"] {
        std::fs::copy(corpus(f), dir.path().join(f)).unwrap();
    }
    let csv = dir.path().join("out.csv");
    let o = quotient(&["report", dir.path().to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table = stdout(&o);
    assert!(table.lines().next().unwrap().starts_with("name"));
    assert_eq!(table.lines().count(), 3);
    let mut r = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "counter");
    let counts: Vec<&str> = rows[0].iter().skip(1).take(5).collect();
    assert_eq!(counts, ["2", "3", "2", "6", "5"]);
}

#[test]
fn explore_dumps_normalized_traces() {
    let o = quotient(&["explore", corpus("counter.qo").to_str().unwrap(), "--env", "increment,increment", "--normalized"]);
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("t1: invoke increment()"));
}

#[test]
fn env_vars_supply_bounds() {
    let o = Command::new(env!("CARGO_BIN_EXE_quotient"))
        .args(["--json", "synthesize", corpus("counter.qo").to_str().unwrap()])
        .env("QUOTIENT_INT_MAX", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bounds"]["int_max"], 3, "{v}");
}

mod config;

use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{render_csv, render_table, BenchRow, RunConfig};
use quotient::equivalence::{check_quotient_complete, TraceSpace, Tri};
use quotient::interpreter::{explore, render_trace, Bounds, Environment, Interp};
use quotient::layers::{validate_automaton, CompiledAutomaton, LayerAutomaton, PathTable};
use quotient::linearizability::{brute_force_linearizable, parse_lp, verify_object, SeqSpec, VerifyBounds};
use quotient::object_model::{enumerate_all_paths, enumerate_full_paths, parse_object, ObjectDef, PathKind};
use quotient::synthesis::{build_automaton, parse_states};

const OK: u8 = 0;
const VIOLATED: u8 = 1;
const INPUT: u8 = 2;
const UNKNOWN: u8 = 3;

#[derive(Parser)]
#[command(name = "quotient", version, about = "Layer automata and commutativity quotients for lock-free objects")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct BoundArgs {
    #[arg(long, env = "QUOTIENT_INT_MIN", default_value_t = 0)]
    int_min: i64,
    #[arg(long, env = "QUOTIENT_INT_MAX", default_value_t = 7)]
    int_max: i64,
    /// Node arena of the explorer and pre-state nodes of the oracle.
    #[arg(long, env = "QUOTIENT_ARENA", default_value_t = 6)]
    arena: usize,
    /// Loop iterations per invocation.
    #[arg(long, env = "QUOTIENT_UNROLL")]
    unroll: Option<u8>,
}

impl BoundArgs {
    fn bounds(&self, unroll: u8) -> Bounds {
        Bounds { int_min: self.int_min, int_max: self.int_max, arena: self.arena, unroll: self.unroll.unwrap_or(unroll) }
    }
}

#[derive(Args, Clone)]
struct SweepArgs {
    /// Largest environment of the sweep.
    #[arg(long, default_value_t = 2)]
    threads: usize,
    /// Argument values of the sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2])]
    values: Vec<i64>,
    /// Explicit environment such as `push(1),pop`; repeatable, replaces the sweep.
    #[arg(long = "env")]
    envs: Vec<String>,
    /// Longest witness searched per trace.
    #[arg(long, default_value_t = 50_000)]
    budget: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the full paths of every method.
    Paths {
        file: PathBuf,
        #[arg(long)]
        method: Option<String>,
        #[arg(long, default_value_t = 1)]
        unroll: u8,
    },
    /// Build a candidate layer automaton.
    Synthesize {
        file: PathBuf,
        /// State predicates, one per line, replacing generated states.
        #[arg(long)]
        states: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Check that every bounded trace has a representative in the automaton.
    CheckQuotient {
        file: PathBuf,
        automaton: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Print a verdict line per trace.
        #[arg(long)]
        verbose: bool,
    },
    /// Decide linearizability through the automaton and a linearization point file.
    CheckLin {
        file: PathBuf,
        automaton: PathBuf,
        #[arg(long)]
        spec: SeqSpec,
        #[arg(long)]
        lp: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        bounds: BoundArgs,
        /// Context length of the S-commutativity check.
        #[arg(long, default_value_t = 4)]
        context: usize,
        /// Also check every trace with the brute-force oracle.
        #[arg(long)]
        brute: bool,
    },
    /// Synthesize every `.qo` of a directory and print the benchmark table.
    Report {
        dir: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Dump the completed traces of one environment.
    Explore {
        file: PathBuf,
        #[arg(long = "env")]
        env: String,
        #[arg(long, default_value_t = 1)]
        unroll: u8,
        /// Only traces whose invocations come first, in thread order.
        #[arg(long)]
        normalized: bool,
    },
}

/// Input problems exit with 2; everything else reports its own code.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

type Res = Result<u8, InputError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT)
        }
    }
}

fn run(cli: &Cli) -> Res {
    match &cli.cmd {
        Cmd::Paths { file, method, unroll } => cmd_paths(cli.json, file, method.as_deref(), *unroll),
        Cmd::Synthesize { file, states, out, log, bounds } => {
            cmd_synthesize(cli.json, file, states.as_deref(), out.as_deref(), log.as_deref(), &bounds.bounds(1))
        }
        Cmd::CheckQuotient { file, automaton, sweep, bounds, verbose } => {
            let cfg = run_config(sweep, bounds, 0)?;
            cmd_check_quotient(cli.json, file, automaton, &cfg, *verbose)
        }
        Cmd::CheckLin { file, automaton, spec, lp, sweep, bounds, context, brute } => {
            let cfg = run_config(sweep, bounds, *context)?;
            cmd_check_lin(cli.json, file, automaton, *spec, lp, &cfg, *brute)
        }
        Cmd::Report { dir, csv, bounds } => cmd_report(cli.json, dir, csv.as_deref(), bounds),
        Cmd::Explore { file, env, unroll, normalized } => cmd_explore(cli.json, file, env, *unroll, *normalized),
    }
}

fn run_config(sweep: &SweepArgs, b: &BoundArgs, context: usize) -> Result<RunConfig, InputError> {
    let cfg = RunConfig {
        bounds: b.bounds(2),
        threads: sweep.threads,
        values: sweep.values.clone(),
        envs: sweep.envs.clone(),
        budget: sweep.budget,
        context,
    };
    cfg.check().map_err(|e| anyhow!(e))?;
    Ok(cfg)
}

fn load_object(file: &FsPath) -> anyhow::Result<ObjectDef> {
    let src = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    parse_object(&src).with_context(|| format!("parsing {}", file.display()))
}

fn load_automaton(file: &FsPath) -> anyhow::Result<LayerAutomaton> {
    let src = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    LayerAutomaton::from_json(&src).with_context(|| format!("parsing {}", file.display()))
}

fn environments(obj: &ObjectDef, cfg: &RunConfig) -> anyhow::Result<Vec<Environment>> {
    if cfg.envs.is_empty() {
        return Ok(Environment::enumerate(obj, cfg.threads, &cfg.values));
    }
    cfg.envs.iter().map(|e| Environment::parse_list(obj, e).map_err(|m| anyhow!("environment `{e}`: {m}"))).collect()
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json serializes"));
}

fn cmd_paths(as_json: bool, file: &FsPath, method: Option<&str>, unroll: u8) -> Res {
    let obj = load_object(file)?;
    let paths = match method {
        Some(m) => enumerate_full_paths(&obj, m, unroll)?,
        None => enumerate_all_paths(&obj, unroll)?,
    };
    let names = obj.names();
    let rows: Vec<(String, &str, Vec<String>)> = paths
        .iter()
        .map(|p| {
            let m = &obj.methods[p.method];
            let kind = match p.kind {
                PathKind::Local => "Local",
                PathKind::Write => "Write",
            };
            (p.id(&obj), kind, p.steps.iter().map(|&s| names.prim(m, &m.prims[s])).collect())
        })
        .collect();
    if as_json {
        let v: Vec<_> = rows.iter().map(|(id, k, steps)| json!({"id": id, "kind": k, "steps": steps})).collect();
        print_json(&json!(v));
    } else {
        for (id, kind, steps) in &rows {
            println!("{id} {kind}: {}", steps.join(" ; "));
        }
        let w = paths.iter().filter(|p| p.is_write()).count();
        println!("{} paths, {} Local / {} Write", paths.len(), paths.len() - w, w);
    }
    Ok(OK)
}

fn load_states(obj: &ObjectDef, states: Option<&FsPath>) -> anyhow::Result<Option<Vec<quotient::synthesis::Pred>>> {
    let Some(f) = states else { return Ok(None) };
    let src = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
    Ok(Some(parse_states(obj, &src).with_context(|| format!("parsing {}", f.display()))?))
}

fn cmd_synthesize(
    as_json: bool,
    file: &FsPath,
    states: Option<&FsPath>,
    out: Option<&FsPath>,
    log: Option<&FsPath>,
    bounds: &Bounds,
) -> Res {
    let obj = load_object(file)?;
    let user = load_states(&obj, states)?;
    let s = build_automaton(&obj, user.as_deref(), bounds)?;
    let name = file.file_stem().and_then(|s| s.to_str()).unwrap_or("object");
    let row = BenchRow::of(name, &s);
    if let Some(o) = out {
        fs::write(o, s.automaton.to_json()).with_context(|| format!("writing {}", o.display()))?;
    }
    let shown = file.file_name().and_then(|s| s.to_str()).unwrap_or(name);
    if let Some(l) = log {
        fs::write(l, s.log.render(shown)).with_context(|| format!("writing {}", l.display()))?;
    }
    if as_json {
        print_json(&json!({"bounds": bounds, "row": row, "automaton": s.automaton}));
    } else {
        print!("{}", render_table(std::slice::from_ref(&row)));
        if out.is_none() {
            print!("{}", s.automaton.to_json());
        }
    }
    Ok(if row.unknowns > 0 { UNKNOWN } else { OK })
}

fn cmd_check_quotient(as_json: bool, file: &FsPath, automaton: &FsPath, cfg: &RunConfig, verbose: bool) -> Res {
    let obj = load_object(file)?;
    let a = load_automaton(automaton)?;
    let table = PathTable::new(&obj, 1)?;
    let bad = validate_automaton(&a, Some(&table));
    if let Some(v) = bad.first() {
        return Err(anyhow!("invalid automaton: {v}").into());
    }
    let ca = CompiledAutomaton::new(&a, &table)?;
    let mut rows = Vec::new();
    let (mut failed, mut unknown) = (0, 0);
    for env in environments(&obj, cfg)? {
        let interp = Interp::new(&obj, &env, &cfg.bounds);
        let space = TraceSpace::build(&interp);
        let rep = check_quotient_complete(&space, &ca, cfg.budget);
        failed += rep.failures.len();
        unknown += rep.unknown;
        let name = env.render(&obj);
        if !as_json {
            println!("env {name}: {}", rep.summary());
            if verbose {
                print!("{}", rep.render());
            }
            for &f in rep.failures.iter().take(1) {
                println!("first failure:");
                print!("{}", render_trace(&obj, &space.traces[f]));
            }
        }
        rows.push(json!({
            "env": name,
            "total": rep.total,
            "matched": rep.matched,
            "failed": rep.failures.len(),
            "unknown": rep.unknown,
            "members": rep.members.len(),
        }));
    }
    if as_json {
        print_json(&json!({"config": cfg, "envs": rows, "failed": failed, "unknown": unknown}));
    } else {
        println!("{} environments, {failed} failed, {unknown} unknown", rows.len());
    }
    Ok(if failed > 0 {
        VIOLATED
    } else if unknown > 0 {
        UNKNOWN
    } else {
        OK
    })
}

fn cmd_check_lin(
    as_json: bool,
    file: &FsPath,
    automaton: &FsPath,
    spec: SeqSpec,
    lp: &FsPath,
    cfg: &RunConfig,
    brute: bool,
) -> Res {
    let obj = load_object(file)?;
    let a = load_automaton(automaton)?;
    let table = PathTable::new(&obj, 1)?;
    let src = fs::read_to_string(lp).with_context(|| format!("reading {}", lp.display()))?;
    let m = parse_lp(&src)?;
    let envs = environments(&obj, cfg)?;
    let vb = VerifyBounds { bounds: cfg.bounds.clone(), budget: cfg.budget, context: cfg.context, values: cfg.values.clone() };
    let v = verify_object(&obj, &a, &table, &m, spec, &envs, &vb);
    let mut disagreements = Vec::new();
    let mut checked = 0;
    if brute {
        for env in &envs {
            let interp = Interp::new(&obj, env, &cfg.bounds);
            let bound = cfg.bounds.step_bound(env.threads()) + env.threads();
            for t in explore(&interp, bound, false).traces {
                checked += 1;
                if brute_force_linearizable(&obj, &t, spec).is_none() {
                    disagreements.push(render_trace(&obj, &t));
                }
            }
        }
    }
    let contradicted = v.linearizable == Tri::Yes && !disagreements.is_empty();
    if as_json {
        print_json(&json!({
            "config": cfg,
            "verdict": v,
            "brute_checked": checked,
            "brute_failures": disagreements.len(),
        }));
    } else {
        print!("{}", v.render(&obj));
        if brute {
            println!("brute force: {checked} traces, {} not linearizable", disagreements.len());
            if let Some(t) = disagreements.first() {
                print!("{t}");
            }
        }
    }
    if contradicted {
        eprintln!("error: the brute-force oracle contradicts the verdict");
        return Ok(VIOLATED);
    }
    Ok(match v.linearizable {
        Tri::Yes => OK,
        Tri::No => VIOLATED,
        Tri::Unknown => UNKNOWN,
    })
}

fn cmd_report(as_json: bool, dir: &FsPath, csv: Option<&FsPath>, b: &BoundArgs) -> Res {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "qo"))
        .collect();
    files.sort();
    let mut rows = Vec::new();
    for f in files {
        let obj = load_object(&f)?;
        let states = f.with_extension("states");
        let user = load_states(&obj, states.exists().then_some(states.as_path()))?;
        // Per-object bounds, such as the smaller domain of the list set.
        let bf = f.with_extension("bounds.json");
        let bounds = if bf.exists() {
            let s = fs::read_to_string(&bf).with_context(|| format!("reading {}", bf.display()))?;
            serde_json::from_str(&s).with_context(|| format!("parsing {}", bf.display()))?
        } else {
            b.bounds(1)
        };
        let s = build_automaton(&obj, user.as_deref(), &bounds)?;
        let name = f.file_stem().and_then(|s| s.to_str()).unwrap_or("object");
        rows.push(BenchRow::of(name, &s));
    }
    if let Some(c) = csv {
        fs::write(c, render_csv(&rows)?).with_context(|| format!("writing {}", c.display()))?;
    }
    if as_json {
        print_json(&json!(rows));
    } else {
        print!("{}", render_table(&rows));
    }
    Ok(OK)
}

fn cmd_explore(as_json: bool, file: &FsPath, env: &str, unroll: u8, normalized: bool) -> Res {
    let obj = load_object(file)?;
    let env = Environment::parse_list(&obj, env).map_err(|m| anyhow!("environment `{env}`: {m}"))?;
    if env.threads() == 0 {
        return Err(anyhow!("empty environment").into());
    }
    let bounds = Bounds { unroll, ..Bounds::default() };
    let interp = Interp::new(&obj, &env, &bounds);
    let ex = explore(&interp, bounds.step_bound(env.threads()) + env.threads(), normalized);
    if as_json {
        let ts: Vec<Vec<String>> = ex
            .traces
            .iter()
            .map(|t| t.iter().map(|e| format!("t{}: {}", e.thread, e.label.render(&obj))).collect())
            .collect();
        print_json(&json!({"env": env.render(&obj), "unroll": unroll, "cut": ex.cut, "traces": ts}));
    } else {
        for (i, t) in ex.traces.iter().enumerate() {
            if i > 0 {
                println!();
            }
            print!("{}", render_trace(&obj, t));
        }
        eprintln!("{} traces{}", ex.traces.len(), if ex.cut { " (some prefixes hit the bound)" } else { "" });
    }
    Ok(OK)
}

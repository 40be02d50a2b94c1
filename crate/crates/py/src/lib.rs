//! Python bindings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use quotient::equivalence::Tri;
use quotient::interpreter::{explore, Bounds, Environment, Interp};
use quotient::layers::{LayerAutomaton, PathTable};
use quotient::linearizability::{brute_force_linearizable, parse_lp, verify_object, SeqSpec, VerifyBounds};
use quotient::object_model::{enumerate_all_paths, parse_object, print_object, ObjectDef, PathKind};
use quotient::synthesis::{build_automaton, parse_states};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn envs(obj: &ObjectDef, specs: &[String]) -> PyResult<Vec<Environment>> {
    specs.iter().map(|s| Environment::parse_list(obj, s).map_err(err)).collect()
}

fn tri(t: Tri) -> &'static str {
    match t {
        Tri::Yes => "yes",
        Tri::No => "no",
        Tri::Unknown => "unknown",
    }
}

/// A parsed object definition.
#[pyclass(frozen)]
struct Object {
    obj: ObjectDef,
}

#[pymethods]
impl Object {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        Ok(Object { obj: parse_object(src).map_err(err)? })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let src = std::fs::read_to_string(path).map_err(err)?;
        Object::new(&src)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.obj.name
    }

    #[getter]
    fn methods(&self) -> Vec<String> {
        self.obj.methods.iter().map(|m| m.name.clone()).collect()
    }

    /// Canonical source text.
    fn source(&self) -> String {
        print_object(&self.obj)
    }

    /// `(id, "local" | "write", step count)` per full path.
    #[pyo3(signature = (unroll = 1))]
    fn paths(&self, unroll: u8) -> PyResult<Vec<(String, &'static str, usize)>> {
        let ps = enumerate_all_paths(&self.obj, unroll).map_err(err)?;
        Ok(ps
            .iter()
            .map(|p| {
                let kind = if p.kind == PathKind::Write { "write" } else { "local" };
                (p.id(&self.obj), kind, p.steps.len())
            })
            .collect())
    }

    /// Benchmark counts plus the automaton as JSON.
    #[pyo3(signature = (states = None, int_min = 0, int_max = 7, arena = 6))]
    fn synthesize<'py>(
        &self,
        py: Python<'py>,
        states: Option<&str>,
        int_min: i64,
        int_max: i64,
        arena: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let user = states.map(|s| parse_states(&self.obj, s)).transpose().map_err(err)?;
        let b = Bounds { int_min, int_max, arena, unroll: 1 };
        let s = py.detach(|| build_automaton(&self.obj, user.as_deref(), &b)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("states", s.automaton.states.len())?;
        d.set_item("local", s.local_paths())?;
        d.set_item("write", s.write_paths())?;
        d.set_item("transitions", s.automaton.transition_count())?;
        d.set_item("layers", s.automaton.layer_count())?;
        d.set_item("queries", s.log.query_count())?;
        d.set_item("unknown", s.unknowns())?;
        d.set_item("automaton", s.automaton.to_json())?;
        Ok(d)
    }

    /// Number of completed traces of one environment.
    #[pyo3(signature = (env, unroll = 1))]
    fn explore(&self, env: &str, unroll: u8) -> PyResult<usize> {
        let e = Environment::parse_list(&self.obj, env).map_err(err)?;
        let b = Bounds { unroll, ..Bounds::default() };
        let interp = Interp::new(&self.obj, &e, &b);
        Ok(explore(&interp, b.step_bound(e.threads()) + e.threads(), false).traces.len())
    }

    /// `(verdict, stage, message)` of the quotient-based check.
    #[pyo3(signature = (automaton, spec, lp, envs, unroll = 2))]
    fn check_lin(&self, py: Python<'_>, automaton: &str, spec: &str, lp: &str, envs: Vec<String>, unroll: u8) -> PyResult<(String, Option<String>, String)> {
        let a = LayerAutomaton::from_json(automaton).map_err(err)?;
        let spec: SeqSpec = spec.parse().map_err(err)?;
        let m = parse_lp(lp).map_err(err)?;
        let table = PathTable::new(&self.obj, 1).map_err(err)?;
        let es = self::envs(&self.obj, &envs)?;
        let vb = VerifyBounds { bounds: Bounds { unroll, ..Bounds::default() }, ..VerifyBounds::default() };
        let v = py.detach(|| verify_object(&self.obj, &a, &table, &m, spec, &es, &vb));
        let stage = v.stage.map(|s| serde_json::to_string(&s).unwrap().trim_matches('"').to_string());
        Ok((tri(v.linearizable).to_string(), stage, v.message))
    }

    /// `(traces, not linearizable)` by exhaustive search over orderings.
    #[pyo3(signature = (envs, spec, unroll = 1))]
    fn brute_force(&self, envs: Vec<String>, spec: &str, unroll: u8) -> PyResult<(usize, usize)> {
        let spec: SeqSpec = spec.parse().map_err(err)?;
        let b = Bounds { unroll, ..Bounds::default() };
        let (mut n, mut bad) = (0, 0);
        for e in self::envs(&self.obj, &envs)? {
            let interp = Interp::new(&self.obj, &e, &b);
            for t in explore(&interp, b.step_bound(e.threads()) + e.threads(), false).traces {
                n += 1;
                bad += brute_force_linearizable(&self.obj, &t, spec).is_none() as usize;
            }
        }
        Ok((n, bad))
    }
}

#[pymodule]
fn quotient_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Object>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

//! Python bindings: instances, planners, the latency simulator and the
//! exact oracle.
//!
//! ```python
//! import patrol
//! inst = patrol.Instance.generate(n=10, seed=3)
//! sol = patrol.solve(inst, "orienteering")
//! assert patrol.verify(sol, inst)["pass"]
//! ```

use std::collections::HashMap;

use patrol_core::bench::{self, Algorithm, SuiteParams};
use patrol_core::instance::{generate_random, DepotPlacement, GeneratorParams};
use patrol_core::oracle::{self, DecisionOptions};
use patrol_core::walks::latency_of;
use patrol_core::{DistanceMatrix, Error, InstanceDocument, MetricInstance, PlannerConfig, Robot, Step, TimedWalk};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(patrol, PatrolError, PyException);

fn err(e: Error) -> PyErr {
    PatrolError::new_err(e.to_string())
}

fn cfg_of(config: Option<&Config>) -> PlannerConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Planner knobs. Unknown keyword arguments are rejected.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Config {
    inner: PlannerConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut c = Config { inner: PlannerConfig::default() };
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                c.set(&key, &v)?;
            }
        }
        Ok(c)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        PlannerConfig::from_toml(text).map(|inner| Config { inner }).map_err(PyValueError::new_err)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let c = &mut self.inner;
        match key {
            "exact_threshold" => c.exact_threshold = value.extract()?,
            "exact_node_limit" => c.exact_node_limit = value.extract()?,
            "two_opt_max_passes" => c.two_opt_max_passes = value.extract()?,
            "tsp_multistart_limit" => c.tsp_multistart_limit = value.extract()?,
            "tsp_seed" => c.tsp_seed = value.extract()?,
            "revisit_discount" | "m" => c.revisit_discount = value.extract()?,
            "leg_tolerance" => c.leg_tolerance = value.extract()?,
            "tsp_pick_min" => c.tsp_pick_min = value.extract()?,
            "stretch" => c.stretch = value.extract()?,
            "infinite_discharge_mode" => c.infinite_discharge_mode = value.extract()?,
            "hyperperiod_multiple" => c.hyperperiod_multiple = value.extract()?,
            "max_steps_per_vertex" => c.max_steps_per_vertex = value.extract()?,
            _ => return Err(PyValueError::new_err(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!("Config({:?})", self.inner)
    }
}

/// A complete metric graph with latency constraints, weights and an
/// optional recharging depot.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Instance {
    doc: InstanceDocument,
}

impl Instance {
    fn inst(&self) -> &MetricInstance {
        &self.doc.instance
    }
}

#[pymethods]
impl Instance {
    /// Builds an instance from a full distance matrix.
    #[new]
    #[pyo3(signature = (dist, latency, weight=None, depot=None, discharge=f64::INFINITY))]
    fn new(dist: Vec<Vec<f64>>, latency: Vec<f64>, weight: Option<Vec<f64>>, depot: Option<usize>, discharge: f64) -> PyResult<Self> {
        let n = dist.len();
        let m = DistanceMatrix::from_rows(dist).map_err(err)?;
        let w = weight.unwrap_or_else(|| vec![1.0; n]);
        let inst = MetricInstance::new(m, depot, latency, w, discharge).map_err(err)?;
        Ok(Instance { doc: InstanceDocument::new(inst) })
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed=0, discharge=3000.0, extent=1000.0, k_range=(4.0, 8.0), depot="center", integer=false, weight_spread=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        n: usize,
        seed: u64,
        discharge: f64,
        extent: f64,
        k_range: (f64, f64),
        depot: &str,
        integer: bool,
        weight_spread: f64,
    ) -> PyResult<Self> {
        let depot = match depot {
            "center" => DepotPlacement::Center,
            "corner" => DepotPlacement::Corner,
            "random" => DepotPlacement::Random,
            "none" => DepotPlacement::None,
            other => return Err(PyValueError::new_err(format!("unknown depot placement `{other}`"))),
        };
        let discharge = if depot == DepotPlacement::None { f64::INFINITY } else { discharge };
        let p = GeneratorParams {
            n,
            k_range: [k_range.0, k_range.1],
            discharge,
            extent,
            depot,
            integer,
            weight_spread,
            ..Default::default()
        };
        Ok(Instance { doc: generate_random(&p, seed) })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        InstanceDocument::load(path).map(|doc| Instance { doc }).map_err(err)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        InstanceDocument::from_toml(text).map(|doc| Instance { doc }).map_err(PatrolError::new_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.doc.save(path).map_err(err)
    }

    fn to_toml(&self) -> String {
        self.doc.to_toml()
    }

    /// Problems found by validation, as messages; empty when valid.
    fn validate(&self) -> Vec<String> {
        self.inst().validate().issues.iter().map(|i| i.to_string()).collect()
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.inst().n_nodes()
    }

    #[getter]
    fn depot(&self) -> Option<usize> {
        self.inst().depot()
    }

    #[getter]
    fn discharge(&self) -> f64 {
        self.inst().discharge()
    }

    #[getter]
    fn latency(&self) -> Vec<f64> {
        self.inst().latencies().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inst().weights().to_vec()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inst().labels().to_vec()
    }

    #[getter]
    fn dist(&self) -> Vec<Vec<f64>> {
        self.inst().distances().rows()
    }

    fn __len__(&self) -> usize {
        self.inst().n_nodes()
    }

    fn __repr__(&self) -> String {
        format!("Instance(n_nodes={}, depot={:?}, discharge={})", self.n_nodes(), self.depot(), self.discharge())
    }
}

/// Periodic walks with per-robot start offsets.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Solution {
    inner: patrol_core::Solution,
}

#[pymethods]
impl Solution {
    /// `walks` holds `(vertex, hold)` pairs; `robots` holds `(walk, offset)`.
    #[new]
    #[pyo3(signature = (walks, robots=None, algorithm="manual"))]
    fn new(walks: Vec<Vec<(usize, f64)>>, robots: Option<Vec<(usize, f64)>>, algorithm: &str) -> PyResult<Self> {
        let mut inner = patrol_core::Solution::new(algorithm);
        inner.walks = walks
            .into_iter()
            .map(|w| TimedWalk::new(w.into_iter().map(|(vertex, hold)| Step { vertex, hold }).collect()))
            .collect();
        let robots = robots.unwrap_or_else(|| (0..inner.walks.len()).map(|i| (i, 0.0)).collect());
        if let Some(&(w, _)) = robots.iter().find(|r| r.0 >= inner.walks.len()) {
            return Err(PyValueError::new_err(format!("robot refers to missing walk {w}")));
        }
        inner.robots = robots.into_iter().map(|(walk, offset)| Robot { walk, offset }).collect();
        Ok(Solution { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        patrol_core::Solution::load(path).map(|inner| Solution { inner }).map_err(err)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        patrol_core::Solution::from_toml(text).map(|inner| Solution { inner }).map_err(PatrolError::new_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn robot_count(&self) -> usize {
        self.inner.robot_count()
    }

    #[getter]
    fn algorithm(&self) -> String {
        self.inner.provenance.algorithm.clone()
    }

    #[getter]
    fn walks(&self) -> Vec<Vec<(usize, f64)>> {
        self.inner
            .walks
            .iter()
            .map(|w| w.steps().iter().map(|s| (s.vertex, s.hold)).collect())
            .collect()
    }

    #[getter]
    fn robots(&self) -> Vec<(usize, f64)> {
        self.inner.robots.iter().map(|r| (r.walk, r.offset)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Solution(algorithm={:?}, walks={}, robots={})", self.algorithm(), self.inner.walks.len(), self.robot_count())
    }
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().map_err(|e: Error| PyValueError::new_err(e.to_string()))
}

/// Runs one planner: approx, greedy, recursive, orienteering, minmax
/// (uses `robots`) or bicriterion.
#[pyfunction]
#[pyo3(signature = (instance, algo, robots=1, config=None))]
fn solve(py: Python<'_>, instance: &Instance, algo: &str, robots: usize, config: Option<&Config>) -> PyResult<Solution> {
    let a = algorithm(algo)?;
    let cfg = cfg_of(config);
    let inst = instance.inst().clone();
    py.detach(|| bench::solve(a, &inst, robots, &cfg)).map(|inner| Solution { inner }).map_err(err)
}

/// Per-vertex latencies of a solution.
#[pyfunction]
#[pyo3(signature = (solution, instance, config=None))]
fn latency(py: Python<'_>, solution: &Solution, instance: &Instance, config: Option<&Config>) -> PyResult<Py<PyDict>> {
    let rep = latency_of(&solution.inner, instance.inst(), &cfg_of(config)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("latency", rep.latency.clone())?;
    d.set_item("weighted", rep.weighted.clone())?;
    d.set_item("depot_gaps", rep.depot_gaps.clone())?;
    d.set_item("max_weighted", rep.max_weighted)?;
    d.set_item("max_stretch", rep.max_stretch(instance.inst()))?;
    d.set_item("hyperperiod", rep.hyperperiod)?;
    Ok(d.unbind())
}

/// Checks every latency against `stretch * r(v)` and every depot gap
/// against the discharge time.
#[pyfunction]
#[pyo3(signature = (solution, instance, stretch=1.0, config=None))]
fn verify(py: Python<'_>, solution: &Solution, instance: &Instance, stretch: f64, config: Option<&Config>) -> PyResult<Py<PyDict>> {
    let v = oracle::verify(&solution.inner, instance.inst(), stretch, &cfg_of(config)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("pass", v.pass)?;
    d.set_item("violations", v.violations)?;
    d.set_item("drained", v.drained)?;
    d.set_item("max_weighted", v.report.max_weighted)?;
    d.set_item("latency", v.report.latency)?;
    Ok(d.unbind())
}

/// Exact decision for tiny integer instances. Returns the verdict
/// ("feasible", "infeasible" or "unknown") and a witness when feasible.
#[pyfunction]
#[pyo3(signature = (instance, robots=1, partitioned=false, state_cap=10_000_000))]
fn exact_decision(py: Python<'_>, instance: &Instance, robots: usize, partitioned: bool, state_cap: usize) -> PyResult<(String, Option<Solution>)> {
    let inst = instance.inst().clone();
    let opts = DecisionOptions { robots, state_cap, partitioned };
    let d = py.detach(|| oracle::exact_decision(&inst, &opts)).map_err(err)?;
    Ok((d.verdict.to_string(), d.witness.map(|inner| Solution { inner })))
}

/// Best single-robot schedule built from depot cycles; returns the cost and
/// the walk as `(vertex, hold)` pairs.
#[pyfunction]
#[pyo3(signature = (instance, max_cycles=4))]
fn exact_minmax_cyclic(py: Python<'_>, instance: &Instance, max_cycles: usize) -> PyResult<(f64, Vec<(usize, f64)>)> {
    let inst = instance.inst().clone();
    let best = py.detach(|| oracle::exact_minmax_cyclic(&inst, max_cycles)).map_err(err)?;
    Ok((best.cost, best.walk.steps().iter().map(|s| (s.vertex, s.hold)).collect()))
}

/// Benchmark suite; returns the report tables as CSV text keyed by name.
#[pyfunction]
#[pyo3(signature = (sizes, seeds=10, algorithms=None, robots=3, config=None))]
fn run_suite(
    py: Python<'_>,
    sizes: Vec<usize>,
    seeds: u64,
    algorithms: Option<Vec<String>>,
    robots: usize,
    config: Option<&Config>,
) -> PyResult<HashMap<String, String>> {
    let algorithms = match algorithms {
        Some(names) => names.iter().map(|s| algorithm(s)).collect::<PyResult<Vec<_>>>()?,
        None => Algorithm::ALL.to_vec(),
    };
    let params = SuiteParams { sizes, seeds_per_size: seeds, algorithms, minmax_robots: robots, ..Default::default() };
    let cfg = cfg_of(config);
    let report = py.detach(|| bench::run_suite(&params, &cfg)).map_err(err)?;
    let mut out = HashMap::new();
    out.insert("rows".to_string(), report.rows_csv().map_err(err)?);
    out.insert("summary".to_string(), report.summary_csv().map_err(err)?);
    out.insert("long".to_string(), report.long_csv().map_err(err)?);
    out.insert("timings".to_string(), report.timings_csv().map_err(err)?);
    Ok(out)
}

#[pymodule]
fn patrol(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PatrolError", m.py().get_type::<PatrolError>())?;
    m.add("ALGORITHMS", Algorithm::ALL.iter().map(|a| a.name()).collect::<Vec<_>>())?;
    m.add_class::<Config>()?;
    m.add_class::<Instance>()?;
    m.add_class::<Solution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(latency, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(exact_decision, m)?)?;
    m.add_function(wrap_pyfunction!(exact_minmax_cyclic, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    Ok(())
}

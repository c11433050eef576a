//! Python bindings. Bit vectors cross the boundary as strings of '0'/'1',
//! character i being bit i, the same as on the command line.

use std::path::Path;
use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dfssd_core::attack::{run_attack as core_attack, AttackConfig, AttackReport, UmcMode};
use dfssd_core::equiv::{check_equivalence, EquivResult, DEFAULT_PRODUCT_LIMIT};
use dfssd_core::explore::KeyMode;
use dfssd_core::harness::{obfuscate as core_obfuscate, termination_label, Circuit, Locked as CoreLocked, Scheme};
use dfssd_core::netlist::WriteOptions;
use dfssd_core::reach::reachable_bfs_with;
use dfssd_core::sim::{simulate, Oracle};
use dfssd_core::{serialize_bench, Bits};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_bits(s: &str) -> PyResult<Bits> {
    s.parse().map_err(value_err)
}

fn key_or_zero(n: &dfssd_core::Netlist, key: Option<&str>) -> PyResult<Bits> {
    let k = match key {
        Some(s) => parse_bits(s)?,
        None => Bits::zeros(n.num_keys()),
    };
    if k.width() != n.num_keys() {
        return Err(PyValueError::new_err(format!(
            "key has {} bits, netlist has {} key inputs",
            k.width(),
            n.num_keys()
        )));
    }
    Ok(k)
}

/// A gate-level sequential circuit.
#[pyclass(frozen, module = "dfssd")]
#[derive(Clone)]
struct Netlist {
    inner: dfssd_core::Netlist,
}

#[pymethods]
impl Netlist {
    /// Parse `.bench` text, or a KISS2 state table when `kiss` is true.
    #[staticmethod]
    #[pyo3(signature = (text, kiss = false))]
    fn parse(text: &str, kiss: bool) -> PyResult<Self> {
        let name = if kiss { "in.kiss" } else { "in.bench" };
        let c = Circuit::parse(name, text).map_err(value_err)?;
        Ok(Netlist {
            inner: c.netlist().map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let c = Circuit::load(Path::new(path)).map_err(value_err)?;
        Ok(Netlist {
            inner: c.netlist().map_err(value_err)?,
        })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn num_inputs(&self) -> usize {
        self.inner.num_inputs()
    }

    #[getter]
    fn num_outputs(&self) -> usize {
        self.inner.num_outputs()
    }

    #[getter]
    fn num_keys(&self) -> usize {
        self.inner.num_keys()
    }

    #[getter]
    fn num_flipflops(&self) -> usize {
        self.inner.num_ffs()
    }

    fn to_bench(&self) -> String {
        serialize_bench(&self.inner, WriteOptions::default())
    }

    /// Outputs per frame, starting from the reset state.
    #[pyo3(signature = (inputs, key = None))]
    fn simulate(&self, inputs: Vec<String>, key: Option<&str>) -> PyResult<Vec<String>> {
        let key = key_or_zero(&self.inner, key)?;
        let seq = inputs.iter().map(|s| parse_bits(s)).collect::<PyResult<Vec<_>>>()?;
        let out = simulate(&self.inner, &key, &seq).map_err(value_err)?;
        Ok(out.iter().map(|b| b.to_string()).collect())
    }

    /// Reachable states, sorted; keys free unless one is given.
    #[pyo3(signature = (key = None))]
    fn reachable(&self, key: Option<&str>) -> PyResult<Vec<String>> {
        let mode = match key {
            Some(k) => KeyMode::Fixed(key_or_zero(&self.inner, Some(k))?),
            None => KeyMode::Free,
        };
        let r = reachable_bfs_with(&self.inner, mode, None).map_err(value_err)?;
        Ok(r.set.to_bits().iter().map(|b| b.to_string()).collect())
    }

    /// Sequential equivalence with `other` under the given keys: True, False,
    /// or None when the product machine is too large.
    #[pyo3(signature = (other, key = None, other_key = None))]
    fn equivalent(&self, other: &Netlist, key: Option<&str>, other_key: Option<&str>) -> PyResult<Option<bool>> {
        let ka = key_or_zero(&self.inner, key)?;
        let kb = key_or_zero(&other.inner, other_key)?;
        Ok(
            match check_equivalence(&self.inner, &ka, &other.inner, &kb, DEFAULT_PRODUCT_LIMIT).map_err(value_err)? {
                EquivResult::Equivalent { .. } => Some(true),
                EquivResult::Different { .. } => Some(false),
                EquivResult::Unknown { .. } => None,
            },
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "Netlist({:?}, inputs={}, outputs={}, keys={}, flipflops={})",
            self.inner.name(),
            self.inner.num_inputs(),
            self.inner.num_outputs(),
            self.inner.num_keys(),
            self.inner.num_ffs()
        )
    }
}

/// Result of `obfuscate`.
#[pyclass(frozen, module = "dfssd")]
struct Locked {
    inner: CoreLocked,
}

#[pymethods]
impl Locked {
    #[getter]
    fn netlist(&self) -> Netlist {
        Netlist {
            inner: self.inner.netlist.clone(),
        }
    }

    #[getter]
    fn key(&self) -> String {
        self.inner.key.to_string()
    }

    /// Lower bound on the deep-fault firing depth, if any.
    #[getter]
    fn bound(&self) -> Option<u64> {
        self.inner.bound.as_ref().and_then(|b| b.bound)
    }

    fn summary_json(&self) -> String {
        self.inner.summary_json()
    }
}

/// Outcome of `attack`.
#[pyclass(frozen, module = "dfssd")]
struct AttackResult {
    inner: AttackReport,
}

#[pymethods]
impl AttackResult {
    /// UC, CE, UMC, TO or INC.
    #[getter]
    fn termination(&self) -> &'static str {
        termination_label(self.inner.termination)
    }

    #[getter]
    fn key(&self) -> Option<String> {
        self.inner.key.as_ref().map(|k| k.to_string())
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    #[getter]
    fn last_dis_len(&self) -> usize {
        self.inner.last_dis_len()
    }

    #[getter]
    fn final_boundary(&self) -> usize {
        self.inner.final_boundary
    }

    /// The distinguishing input sequences, in discovery order.
    #[getter]
    fn dis(&self) -> Vec<Vec<String>> {
        self.inner
            .dis_log
            .iter()
            .map(|d| d.seq.iter().map(|b| b.to_string()).collect())
            .collect()
    }

    fn accepts(&self, key: &str) -> PyResult<bool> {
        Ok(self.inner.accepts(&parse_bits(key)?))
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("plain data")
    }

    fn __repr__(&self) -> String {
        format!(
            "AttackResult({}, iterations={}, last_dis_len={})",
            self.termination(),
            self.inner.iterations(),
            self.inner.last_dis_len()
        )
    }
}

/// Lock a circuit. `scheme` is one of `ssd:K`, `df:W[:clock|transition|lfsr]`,
/// `dfssd:K:W[:kind]` or `none`.
#[pyfunction]
fn obfuscate(netlist: &Netlist, scheme: &str) -> PyResult<Locked> {
    let scheme: Scheme = scheme.parse().map_err(value_err)?;
    let c = Circuit::Netlist(netlist.inner.clone());
    let inner = core_obfuscate(&c, &scheme).map_err(value_err)?;
    Ok(Locked { inner })
}

/// Run the sequential SAT attack against an oracle built from `locked` and
/// `oracle_key`. The key is only reachable through output queries.
#[pyfunction]
#[pyo3(signature = (locked, oracle_key, initial_boundary = 1, boundary_step = 8, time_budget = None, umc = "auto"))]
fn attack(
    py: Python<'_>,
    locked: &Netlist,
    oracle_key: &str,
    initial_boundary: usize,
    boundary_step: usize,
    time_budget: Option<f64>,
    umc: &str,
) -> PyResult<AttackResult> {
    let n = locked.inner.clone();
    let key = key_or_zero(&n, Some(oracle_key))?;
    let umc_mode = match umc {
        "auto" => UmcMode::Auto,
        "explicit" => UmcMode::Explicit,
        "induction" => UmcMode::Induction,
        "off" => UmcMode::Off,
        other => return Err(PyValueError::new_err(format!("unknown umc mode {other:?}"))),
    };
    if initial_boundary == 0 || boundary_step == 0 {
        return Err(PyValueError::new_err("initial_boundary and boundary_step must be at least 1"));
    }
    let cfg = AttackConfig {
        initial_boundary,
        boundary_step,
        time_budget: time_budget.map(Duration::from_secs_f64),
        umc_mode,
        ..Default::default()
    };
    let report = py.allow_threads(move || {
        let mut oracle = Oracle::new(n.clone(), key).map_err(|e| e.to_string())?;
        core_attack(&n, &mut oracle, &cfg).map_err(|e| e.to_string())
    });
    report
        .map(|inner| AttackResult { inner })
        .map_err(PyRuntimeError::new_err)
}

#[pymodule]
fn dfssd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Netlist>()?;
    m.add_class::<Locked>()?;
    m.add_class::<AttackResult>()?;
    m.add_function(wrap_pyfunction!(obfuscate, m)?)?;
    m.add_function(wrap_pyfunction!(attack, m)?)?;
    Ok(())
}

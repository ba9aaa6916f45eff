//! Python bindings: `import pydeflab`.
//!
//! Exact integers come back as Python ints, rates as `"p/q"` strings and
//! estimator records as plain dicts.

use num_bigint::BigUint;
use num_rational::BigRational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyList;
use serde::Serialize;

use deflab::combinatorics::{self, Rate};
use deflab::diagrams::{self, config_of_table, diagram_of, witness_groupoid};
use deflab::estimation;
use deflab::{DeficiencyType, Diagram, OperationTable, SubsetQuery};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn parse_rate(rate: &str) -> PyResult<Rate> {
    let r: BigRational = rate.trim().parse().map_err(|_| value_err(format!("invalid rate `{rate}`")))?;
    Rate::from_ratio(r).map_err(value_err)
}

fn parse_type(t: Option<&str>) -> PyResult<Option<DeficiencyType>> {
    t.map(|s| s.parse().map_err(value_err)).transpose()
}

fn query(s: usize, eps: i64, kind: Option<&str>, exclude_t0: bool) -> PyResult<SubsetQuery> {
    Ok(SubsetQuery { subset_size: s, max_exceedance: eps, type_filter: parse_type(kind)?, exclude_t0 })
}

#[pyfunction]
fn stirling2(n: u64, m: u64) -> BigUint {
    combinatorics::stirling2(n, m)
}

#[pyfunction]
fn binomial(n: u64, m: u64) -> BigUint {
    combinatorics::binomial(n, m)
}

#[pyfunction]
fn disjoint_pair_class_count(k: u64) -> BigUint {
    combinatorics::disjoint_pair_class_count(k)
}

#[pyfunction]
fn disjoint_triple_class_count(k: u64) -> BigUint {
    combinatorics::disjoint_triple_class_count(k)
}

#[pyfunction]
fn rate_dary(d: u32) -> PyResult<String> {
    Ok(combinatorics::rate_dary(d).map_err(value_err)?.to_string())
}

#[pyfunction]
fn rate_exceedance(s: u64) -> PyResult<String> {
    Ok(combinatorics::rate_exceedance(s).map_err(value_err)?.to_string())
}

/// `1 - exp(-rate)` for a rate given as `"p/q"`.
#[pyfunction]
fn limit_probability(rate: &str) -> PyResult<f64> {
    Ok(combinatorics::limit_probability(&parse_rate(rate)?))
}

#[pyfunction]
fn partial_ie_sum(rate: &str, terms: u64) -> PyResult<f64> {
    combinatorics::partial_ie_sum(&parse_rate(rate)?, terms).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (n, d=2, s=2, eps=0))]
fn expected_count(n: u64, d: u32, s: u64, eps: i64) -> PyResult<String> {
    Ok(combinatorics::expected_count(n, d, s, eps).map_err(value_err)?.to_string())
}

#[pyclass(name = "OperationTable", module = "pydeflab", frozen)]
struct PyTable(OperationTable);

#[pymethods]
impl PyTable {
    #[new]
    fn new(order: usize, arity: usize, entries: Vec<u32>) -> PyResult<Self> {
        OperationTable::new(order, arity, entries).map(PyTable).map_err(value_err)
    }

    /// Reads the whitespace-separated text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        OperationTable::parse(text).map(PyTable).map_err(value_err)
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    #[getter]
    fn arity(&self) -> usize {
        self.0.arity()
    }

    #[getter]
    fn entries(&self) -> Vec<u32> {
        self.0.entries().to_vec()
    }

    fn get(&self, coords: Vec<usize>) -> PyResult<u32> {
        if coords.len() != self.0.arity() || coords.iter().any(|&c| c >= self.0.order()) {
            return Err(value_err("coordinates out of range"));
        }
        Ok(self.0.get(&coords))
    }

    fn image(&self, subset: Vec<usize>) -> PyResult<Vec<u32>> {
        Ok(self.0.image(&subset).map_err(value_err)?.into_iter().collect())
    }

    fn exceedance(&self, subset: Vec<usize>) -> PyResult<i64> {
        self.0.exceedance(&subset).map_err(value_err)
    }

    fn classify_pair(&self, i: usize, j: usize) -> PyResult<Option<String>> {
        Ok(self.0.classify_pair(i, j).map_err(value_err)?.map(|t| t.to_string()))
    }

    /// `(subset, signature)` for every qualifying subset.
    #[pyo3(signature = (s=2, eps=0, kind=None, exclude_t0=false))]
    fn deficient_subsets(
        &self,
        s: usize,
        eps: i64,
        kind: Option<&str>,
        exclude_t0: bool,
    ) -> PyResult<Vec<(Vec<usize>, String)>> {
        let found = self.0.deficient_subsets(&query(s, eps, kind, exclude_t0)?).map_err(value_err)?;
        Ok(found.into_iter().map(|q| (q.subset, q.signature.to_string())).collect())
    }

    /// Diagram of the deficient pairs, or `None` when there are none.
    #[pyo3(signature = (include_t0=false))]
    fn diagram(&self, include_t0: bool) -> PyResult<Option<PyDiagram>> {
        let config = config_of_table(&self.0, include_t0).map_err(value_err)?;
        if config.is_empty() {
            return Ok(None);
        }
        diagram_of(&config).map(|d| Some(PyDiagram(d))).map_err(value_err)
    }

    fn serialize(&self) -> String {
        self.0.serialize()
    }

    fn __repr__(&self) -> String {
        format!("OperationTable(order={}, arity={})", self.0.order(), self.0.arity())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

#[pyclass(name = "Diagram", module = "pydeflab", frozen)]
struct PyDiagram(Diagram);

#[pymethods]
impl PyDiagram {
    #[new]
    fn new(v: usize, edges: Vec<(usize, usize, String)>) -> PyResult<Self> {
        let edges = edges
            .into_iter()
            .map(|(a, b, t)| Ok((a, b, t.parse().map_err(value_err)?)))
            .collect::<PyResult<Vec<_>>>()?;
        Diagram::new(v, edges).map(PyDiagram).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Diagram::from_json(text).map(PyDiagram).map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn v(&self) -> usize {
        self.0.vertex_count()
    }

    #[getter]
    fn edges(&self) -> Vec<(usize, usize, String)> {
        self.0.edges().iter().map(|&(a, b, t)| (a, b, t.to_string())).collect()
    }

    fn realizable(&self) -> bool {
        self.0.realizable()
    }

    fn is_perfect_matching(&self) -> bool {
        self.0.is_perfect_matching()
    }

    /// `{"alpha", "beta", "gamma", "k", "c"}`.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.stats())
    }

    fn witness(&self) -> PyResult<PyTable> {
        witness_groupoid(&self.0).map(PyTable).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Diagram({})", self.0.to_json())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __hash__(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.0.hash(&mut h);
        h.finish()
    }
}

#[pyfunction]
#[pyo3(signature = (k, realizable_only=false))]
fn count_diagrams(k: usize, realizable_only: bool) -> PyResult<u64> {
    diagrams::count_diagrams(k, realizable_only).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (k, realizable_only=false))]
fn enumerate_diagrams<'py>(py: Python<'py>, k: usize, realizable_only: bool) -> PyResult<Bound<'py, PyList>> {
    let list = py.detach(|| diagrams::enumerate_diagrams(k, realizable_only)).map_err(value_err)?;
    PyList::new(py, list.into_iter().map(PyDiagram))
}

#[pyfunction]
fn verify_lemma3<'py>(py: Python<'py>, k_max: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| diagrams::verify_lemma3(k_max)).map_err(value_err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (n, d=2, s=2, eps=0, kind=None, exclude_t0=false, samples=10_000, seed=0))]
#[allow(clippy::too_many_arguments)]
fn mc_probability<'py>(
    py: Python<'py>,
    n: usize,
    d: usize,
    s: usize,
    eps: i64,
    kind: Option<&str>,
    exclude_t0: bool,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let q = query(s, eps, kind, exclude_t0)?;
    let rec = py.detach(|| estimation::mc_probability(n, d, &q, samples, seed)).map_err(value_err)?;
    to_py(py, &rec)
}

#[pyfunction]
#[pyo3(signature = (n, d=2, s=2, eps=0, kind=None, exclude_t0=false, force=false))]
#[allow(clippy::too_many_arguments)]
fn exact_probability<'py>(
    py: Python<'py>,
    n: usize,
    d: usize,
    s: usize,
    eps: i64,
    kind: Option<&str>,
    exclude_t0: bool,
    force: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let q = query(s, eps, kind, exclude_t0)?;
    let res = py.detach(|| estimation::exact_probability(n, d, &q, force)).map_err(value_err)?;
    to_py(py, &res)
}

#[pyfunction]
#[pyo3(signature = (n_list, d=2, s=2, eps=0, samples=10_000, seed=0))]
fn sweep<'py>(
    py: Python<'py>,
    n_list: Vec<usize>,
    d: usize,
    s: usize,
    eps: i64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let q = query(s, eps, None, false)?;
    let rows = py.detach(|| estimation::sweep(&n_list, d, &q, samples, seed)).map_err(value_err)?;
    to_py(py, &rows)
}

#[pyfunction]
#[pyo3(signature = (n, samples=10_000, seed=0, include_t0=false))]
fn count_distribution<'py>(
    py: Python<'py>,
    n: usize,
    samples: u64,
    seed: u64,
    include_t0: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let hist =
        py.detach(|| estimation::count_distribution(n, samples, seed, include_t0)).map_err(value_err)?;
    to_py(py, &hist)
}

#[pyfunction]
#[pyo3(signature = (n, samples=10_000, seed=0))]
fn independence_check<'py>(
    py: Python<'py>,
    n: usize,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let report = py.detach(|| estimation::independence_check(n, samples, seed)).map_err(value_err)?;
    to_py(py, &report)
}

#[pymodule]
fn pydeflab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_class::<PyDiagram>()?;
    m.add_function(wrap_pyfunction!(stirling2, m)?)?;
    m.add_function(wrap_pyfunction!(binomial, m)?)?;
    m.add_function(wrap_pyfunction!(disjoint_pair_class_count, m)?)?;
    m.add_function(wrap_pyfunction!(disjoint_triple_class_count, m)?)?;
    m.add_function(wrap_pyfunction!(rate_dary, m)?)?;
    m.add_function(wrap_pyfunction!(rate_exceedance, m)?)?;
    m.add_function(wrap_pyfunction!(limit_probability, m)?)?;
    m.add_function(wrap_pyfunction!(partial_ie_sum, m)?)?;
    m.add_function(wrap_pyfunction!(expected_count, m)?)?;
    m.add_function(wrap_pyfunction!(count_diagrams, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_diagrams, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma3, m)?)?;
    m.add_function(wrap_pyfunction!(mc_probability, m)?)?;
    m.add_function(wrap_pyfunction!(exact_probability, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(count_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(independence_check, m)?)?;
    Ok(())
}

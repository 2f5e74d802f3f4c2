use admg::construction::{build_coupling, CouplingSem};
use admg::continuous::{continuous_sample, ContinuousSpec};
use admg::fixing::{check_nested_markov, intrinsic_sets, reachable_sets, Comparison};
use admg::format::{admg_to_text, parse_graph};
use admg::kernel::{parse_probability, DiscreteKernel};
use admg::minimality::{reduce_to_minimal, tree_reduce};
use admg::oracle::{exact_joint, verify_parity_lemma, verify_theorem, TheoremOutcome};
use admg::projection::{canonical_dag, closure, densely_connected, latent_project, marg_project, pair_subgraph, Preference};
use admg::{generate, Admg, VertexSet};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(admg_py, AdmgError, PyValueError, "Raised for any error reported by the admg library.");

fn err(e: admg::Error) -> PyErr {
    AdmgError::new_err(e.to_string())
}

type Rows<T> = (Vec<String>, Vec<Vec<T>>);

/// An acyclic directed mixed graph.
#[pyclass(name = "Graph", module = "admg_py", frozen)]
struct PyGraph {
    inner: Admg,
}

impl PyGraph {
    fn set(&self, labels: Vec<String>) -> PyResult<VertexSet> {
        self.inner.vertex_set(&labels).map_err(err)
    }

    fn index(&self, label: &str) -> PyResult<usize> {
        self.inner.vertex(label).map_err(err)
    }

    fn names(&self, set: &VertexSet) -> Vec<String> {
        self.inner.names(set)
    }

    fn edges(&self, list: Vec<(usize, usize)>) -> Vec<(String, String)> {
        let g = &self.inner;
        list.into_iter().map(|(a, b)| (g.label(a).to_string(), g.label(b).to_string())).collect()
    }
}

#[pymethods]
impl PyGraph {
    /// Parses the text format; latent vertices are projected out.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        let doc = parse_graph(text).map_err(err)?;
        if !doc.graph.fixed().is_empty() {
            return Err(AdmgError::new_err("fixed vertices are not supported here"));
        }
        let inner = if doc.latent.is_empty() {
            doc.graph.into_graph()
        } else {
            latent_project(doc.admg(), &doc.latent).map_err(err)?
        };
        Ok(PyGraph { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (vertices, directed = Vec::new(), bidirected = Vec::new()))]
    fn from_edges(vertices: Vec<String>, directed: Vec<(String, String)>, bidirected: Vec<(String, String)>) -> PyResult<Self> {
        let v: Vec<&str> = vertices.iter().map(String::as_str).collect();
        let d: Vec<(&str, &str)> = directed.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let b: Vec<(&str, &str)> = bidirected.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        Admg::from_labels(&v, &d, &b).map(|inner| PyGraph { inner }).map_err(err)
    }

    #[getter]
    fn vertices(&self) -> Vec<String> {
        self.names(&self.inner.all())
    }

    #[getter]
    fn directed_edges(&self) -> Vec<(String, String)> {
        self.edges(self.inner.directed_edges())
    }

    #[getter]
    fn bidirected_edges(&self) -> Vec<(String, String)> {
        self.edges(self.inner.bidirected_edges())
    }

    fn to_text(&self) -> String {
        admg_to_text(&self.inner)
    }

    fn ancestors(&self, labels: Vec<String>) -> PyResult<Vec<String>> {
        Ok(self.names(&self.inner.ancestors(&self.set(labels)?)))
    }

    fn descendants(&self, labels: Vec<String>) -> PyResult<Vec<String>> {
        Ok(self.names(&self.inner.descendants(&self.set(labels)?)))
    }

    fn districts(&self) -> Vec<Vec<String>> {
        self.inner.districts().iter().map(|d| self.names(d)).collect()
    }

    fn m_separated(&self, a: Vec<String>, b: Vec<String>, given: Vec<String>) -> PyResult<bool> {
        self.inner.m_separated(&self.set(a)?, &self.set(b)?, &self.set(given)?).map_err(err)
    }

    /// Returns the closure and whether it is intrinsic.
    fn closure(&self, labels: Vec<String>) -> PyResult<(Vec<String>, bool)> {
        let r = closure(&self.inner, &self.set(labels)?).map_err(err)?;
        Ok((self.names(&r.closure), r.intrinsic))
    }

    /// Returns whether the pair is densely connected and which case applies.
    fn densely_connected(&self, v: &str, w: &str) -> PyResult<(bool, String)> {
        let verdict = densely_connected(&self.inner, self.index(v)?, self.index(w)?).map_err(err)?;
        Ok((verdict.dense(), verdict.case.as_str().to_string()))
    }

    fn latent_project(&self, latent: Vec<String>) -> PyResult<PyGraph> {
        let inner = latent_project(&self.inner, &self.set(latent)?).map_err(err)?;
        Ok(PyGraph { inner })
    }

    fn marg_project(&self) -> PyGraph {
        PyGraph { inner: marg_project(&self.inner) }
    }

    /// Returns the canonical DAG and its hidden vertices.
    fn canonical_dag(&self) -> PyResult<(PyGraph, Vec<String>)> {
        let c = canonical_dag(&self.inner).map_err(err)?;
        let hidden = c.dag.names(&c.hidden);
        Ok((PyGraph { inner: c.dag }, hidden))
    }

    fn reachable_sets(&self) -> PyResult<Vec<Vec<String>>> {
        Ok(reachable_sets(&self.inner).map_err(err)?.iter().map(|s| self.names(s)).collect())
    }

    fn intrinsic_sets(&self) -> PyResult<Vec<Vec<String>>> {
        Ok(intrinsic_sets(&self.inner).map_err(err)?.iter().map(|s| self.names(s)).collect())
    }

    /// Returns the pruned reduction for the pair and the kept vertices.
    fn minimal(&self, v: &str, w: &str) -> PyResult<(PyGraph, Vec<String>)> {
        let pair = pair_subgraph(&self.inner, self.index(v)?, self.index(w)?, Preference::DirectedFirst).map_err(err)?;
        let red = tree_reduce(&pair).map_err(err)?;
        let (pruned, keep) = reduce_to_minimal(&red).map_err(err)?;
        Ok((PyGraph { inner: pruned.reduced().clone() }, red.reduced().names(&keep)))
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph({} vertices, {} directed, {} bidirected)",
            self.inner.n(),
            self.inner.directed_edges().len(),
            self.inner.bidirected_edges().len()
        )
    }

    fn __eq__(&self, other: &PyGraph) -> bool {
        self.inner == other.inner
    }
}

/// Structural equations that make a densely connected pair equal.
#[pyclass(name = "Coupling", module = "admg_py", frozen)]
struct PyCoupling {
    inner: CouplingSem,
}

#[pymethods]
impl PyCoupling {
    #[new]
    #[pyo3(signature = (graph, v, w, k = 2))]
    fn new(graph: &PyGraph, v: &str, w: &str, k: usize) -> PyResult<Self> {
        let inner = build_coupling(&graph.inner, graph.index(v)?, graph.index(w)?, k, Preference::DirectedFirst).map_err(err)?;
        Ok(PyCoupling { inner })
    }

    #[getter]
    fn modulus(&self) -> usize {
        self.inner.modulus()
    }

    fn equations(&self) -> Vec<String> {
        self.inner.describe()
    }

    /// Returns column names and integer rows.
    #[pyo3(signature = (n, seed, set_w = None))]
    fn sample(&self, n: usize, seed: u64, set_w: Option<usize>) -> PyResult<Rows<usize>> {
        let d = self.inner.sample(n, seed, set_w).map_err(err)?;
        Ok((d.columns, d.rows))
    }

    /// Exact law as a list of (assignment, Fraction) pairs with positive mass.
    fn exact_joint<'py>(&self, py: Python<'py>) -> PyResult<Vec<(Vec<usize>, Bound<'py, PyAny>)>> {
        let law = exact_joint(&self.inner).map_err(err)?;
        let fraction = py.import("fractions")?.getattr("Fraction")?;
        let cards = law.random_cards();
        let mut out = Vec::new();
        for (i, p) in law.rows()[0].iter().enumerate() {
            if *p.numer() == 0.into() {
                continue;
            }
            let mut states = vec![0; cards.len()];
            let mut rest = i;
            for (slot, &c) in states.iter_mut().zip(&cards).rev() {
                *slot = rest % c;
                rest /= c;
            }
            out.push((states, fraction.call1((p.to_string(),))?));
        }
        Ok(out)
    }

    fn __repr__(&self) -> String {
        self.inner.describe().join("; ")
    }
}

/// Builds and enumerates the coupling, then checks equality and independence.
#[pyfunction]
#[pyo3(signature = (graph, v, w, k = 2))]
fn verify<'py>(py: Python<'py>, graph: &PyGraph, v: &str, w: &str, k: usize) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    match verify_theorem(&graph.inner, graph.index(v)?, graph.index(w)?, k).map_err(err)? {
        TheoremOutcome::Checked(r) => {
            out.set_item("refused", false)?;
            out.set_item("passes", r.passes())?;
            out.set_item("equality", r.equality_holds)?;
            out.set_item("independence", r.independence_holds)?;
            out.set_item("uniform", r.uniform_marginals)?;
            out.set_item("failing_subset", r.failing_subset.clone())?;
            out.set_item("lines", r.lines())?;
        }
        TheoremOutcome::Refused { .. } => {
            out.set_item("refused", true)?;
            out.set_item("passes", false)?;
        }
    }
    Ok(out)
}

/// Continuous coupling with Gaussian-copula correlation `rho` between the pair.
#[pyfunction]
#[pyo3(signature = (graph, v, w, rho, n, seed))]
fn continuous_coupling(graph: &PyGraph, v: &str, w: &str, rho: f64, n: usize, seed: u64) -> PyResult<Rows<f64>> {
    let d = continuous_sample(&graph.inner, graph.index(v)?, graph.index(w)?, &ContinuousSpec::with_rho(rho), n, seed).map_err(err)?;
    Ok((d.columns, d.rows))
}

/// Checks a CSV distribution table against the nested Markov property.
///
/// Returns a list of violations as (reachable set, deviation) pairs; empty means pass.
#[pyfunction]
#[pyo3(signature = (graph, table, tol = None))]
fn nested_check(graph: &PyGraph, table: &str, tol: Option<&str>) -> PyResult<Vec<(Vec<String>, String)>> {
    let p = DiscreteKernel::from_csv(table.as_bytes()).map_err(err)?;
    let comparison = match tol {
        Some(t) => Comparison::Tolerance(parse_probability(t).map_err(AdmgError::new_err)?),
        None => Comparison::Exact,
    };
    let report = check_nested_markov(&p, &graph.inner, &comparison).map_err(err)?;
    Ok(report.violations.iter().map(|v| (graph.names(&v.reachable), v.deviation.to_string())).collect())
}

/// Benchmark graph with `k` blocks.
#[pyfunction]
fn comp_graph(k: usize) -> PyResult<PyGraph> {
    generate::comp_graph(k).map(|inner| PyGraph { inner }).map_err(err)
}

/// Checks the parity lemma on a tree over nodes 1..=k.
#[pyfunction]
fn parity_lemma(k: usize, tree: Vec<(usize, usize)>) -> PyResult<bool> {
    Ok(verify_parity_lemma(k, &tree).map_err(err)?.passes())
}

#[pymodule]
fn admg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AdmgError", m.py().get_type::<AdmgError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyCoupling>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(continuous_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(nested_check, m)?)?;
    m.add_function(wrap_pyfunction!(comp_graph, m)?)?;
    m.add_function(wrap_pyfunction!(parity_lemma, m)?)?;
    Ok(())
}

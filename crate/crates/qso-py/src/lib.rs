//! Python bindings for the `qso-core` evaluator, rewriters and Horn counter.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use qso_core as core;
use qso_core::{Assignment, BooleanCore, Config, Signature, SoVar, TupleSet, Value};

pyo3::create_exception!(qso, QsoError, PyValueError);
pyo3::create_exception!(qso, BudgetError, QsoError);

fn to_py(e: core::QsoError) -> PyErr {
    if e.is_budget() {
        BudgetError::new_err(e.to_string())
    } else {
        QsoError::new_err(e.to_string())
    }
}

/// A finite ordered structure.
#[pyclass(name = "Structure", frozen)]
struct PyStructure {
    inner: core::Structure,
}

#[pymethods]
impl PyStructure {
    /// Parses the `domain` / `relation` / `end` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = core::parse_structure(text).map_err(to_py)?;
        Ok(PyStructure { inner })
    }

    #[getter]
    fn domain_size(&self) -> usize {
        self.inner.domain_size()
    }

    fn relations(&self) -> Vec<(String, usize)> {
        self.inner.signature().relations().to_vec()
    }

    fn tuples(&self, name: &str) -> PyResult<Vec<Vec<usize>>> {
        self.inner
            .relation(name)
            .map(|r| r.tuples())
            .ok_or_else(|| QsoError::new_err(format!("unknown relation `{name}`")))
    }

    fn encode(&self) -> String {
        core::encode_structure(&self.inner)
    }

    fn render(&self) -> String {
        core::render_structure(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Structure(n={}, relations={:?})", self.inner.domain_size(), self.relations())
    }
}

fn signature(sig: Option<&Bound<'_, PyDict>>) -> PyResult<Signature> {
    let mut rels = Vec::new();
    if let Some(d) = sig {
        for (k, v) in d.iter() {
            rels.push((k.extract::<String>()?, v.extract::<usize>()?));
        }
    }
    Signature::new(rels).map_err(to_py)
}

/// `{"x": 0, "X": [(0,), (1,)], "Y:2": []}` as an assignment.
fn assignment(n: usize, assign: Option<&Bound<'_, PyDict>>) -> PyResult<Assignment> {
    let mut a = Assignment::new();
    let Some(d) = assign else {
        return Ok(a);
    };
    for (k, v) in d.iter() {
        let key: String = k.extract()?;
        if let Ok(e) = v.extract::<usize>() {
            if e >= n {
                return Err(QsoError::new_err(format!("element {e} >= domain size {n}")));
            }
            a = a.with_fo(&key, e);
            continue;
        }
        let tuples: Vec<Vec<usize>> = v.extract()?;
        let (name, declared) = match key.split_once(':') {
            Some((nm, k)) => (
                nm.to_string(),
                Some(k.parse::<usize>().map_err(|_| QsoError::new_err(format!("bad arity in `{key}`")))?),
            ),
            None => (key.clone(), None),
        };
        let arity = declared
            .or_else(|| tuples.first().map(Vec::len))
            .ok_or_else(|| QsoError::new_err(format!("empty relation `{name}` needs its arity as `{name}:k`")))?;
        let set = TupleSet::from_tuples(n, arity, &tuples).map_err(to_py)?;
        a = a.with_so(&name, set);
    }
    Ok(a)
}

fn options(a: &Assignment) -> core::ParseOptions {
    core::ParseOptions {
        free_so: a.so.iter().map(|(k, v)| SoVar::new(k.clone(), v.arity())).collect(),
        ..Default::default()
    }
}

/// Value of `formula` on `structure` under the assignment `assign`.
#[pyfunction]
#[pyo3(signature = (structure, formula, assign=None))]
fn eval(structure: &PyStructure, formula: &str, assign: Option<&Bound<'_, PyDict>>) -> PyResult<Value> {
    let s = &structure.inner;
    let a = assignment(s.domain_size(), assign)?;
    let f = core::parse_formula_with(formula, s.signature(), &options(&a)).map_err(to_py)?;
    core::eval_with(s, &f, &a, &Config::from_env()).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (formula, sig=None))]
fn classify(formula: &str, sig: Option<&Bound<'_, PyDict>>) -> PyResult<String> {
    let f = core::parse_formula(formula, &signature(sig)?).map_err(to_py)?;
    Ok(core::classify(&f).to_string())
}

/// Rewrites with `form` one of `snf`, `pnf`, `minus-one` or `times`.
#[pyfunction]
#[pyo3(signature = (form, formula, sig=None, g=None, target="pi1"))]
fn rewrite(
    form: &str,
    formula: &str,
    sig: Option<&Bound<'_, PyDict>>,
    g: Option<&str>,
    target: &str,
) -> PyResult<String> {
    let sig = signature(sig)?;
    let cfg = Config::from_env();
    let f = core::parse_formula(formula, &sig).map_err(to_py)?;
    let out = match form {
        "snf" => core::to_snf_with(&f, &cfg),
        "pnf" => {
            let t = BooleanCore::from_name(target)
                .ok_or_else(|| QsoError::new_err(format!("unknown fragment `{target}`")))?;
            core::to_pnf_with(&f, t, &cfg)
        }
        "minus-one" => core::minus_one_with(&f, &cfg),
        "times" => {
            let g = g.ok_or_else(|| QsoError::new_err("`times` needs the second factor `g`"))?;
            let g = core::parse_formula(g, &sig).map_err(to_py)?;
            core::product_to_snf_with(&f, &g, &cfg)
        }
        other => return Err(QsoError::new_err(format!("unknown form `{other}`"))),
    }
    .map_err(to_py)?;
    Ok(core::render_formula(&out))
}

/// The DisjHorn file for a ΣQSO(∃Horn) sentence on `structure`.
#[pyfunction]
fn reduce_horn(structure: &PyStructure, formula: &str) -> PyResult<String> {
    let s = &structure.inner;
    let f = core::parse_formula(formula, s.signature()).map_err(to_py)?;
    let p = core::reduce_to_dishorn_with(&f, s, &Config::from_env()).map_err(to_py)?;
    Ok(core::render_dishorn(&p))
}

#[pyfunction]
fn count_dishorn(text: &str) -> PyResult<Value> {
    let p = core::parse_dishorn(text).map_err(to_py)?;
    core::count_dishorn(&p).map_err(to_py)
}

#[pyfunction]
fn permanent(rows: Vec<Vec<u8>>) -> PyResult<Value> {
    let m = core::Matrix01::from_rows(&rows).map_err(to_py)?;
    core::oracle_permanent(&m).map_err(to_py)
}

#[pyfunction]
fn walks(n: usize, edges: Vec<(usize, usize)>, s: usize, t: usize, maxlen: usize) -> PyResult<Value> {
    let g = core::Digraph::new(n, edges).map_err(to_py)?;
    core::oracle_walks(&g, s, t, maxlen).map_err(to_py)
}

#[pymodule]
fn qso(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStructure>()?;
    m.add("QsoError", m.py().get_type::<QsoError>())?;
    m.add("BudgetError", m.py().get_type::<BudgetError>())?;
    m.add_function(wrap_pyfunction!(eval, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(rewrite, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_horn, m)?)?;
    m.add_function(wrap_pyfunction!(count_dishorn, m)?)?;
    m.add_function(wrap_pyfunction!(permanent, m)?)?;
    m.add_function(wrap_pyfunction!(walks, m)?)?;
    Ok(())
}

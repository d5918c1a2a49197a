//! Python bindings: `QotePair` plus JSON-in, JSON-out entry points.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use orbifoldkit_core::analysis::{self, AnalysisOptions, InstanceSpec};
use orbifoldkit_core::cli;
use orbifoldkit_core::injectivity::{compute_h, decide_pi_injectivity, make_injective_with, DEFAULT_SEED, QUOTIENT_SAMPLES};
use orbifoldkit_core::lattice::{Mat2Z, Rat, Vec2Q};
use orbifoldkit_core::orbifold::{self, Nu, OrbifoldData, RamifiedPortrait};
use orbifoldkit_core::qote;
use orbifoldkit_core::sweep::{run_sweep, PrecomposeTag, SweepConfig};
use orbifoldkit_core::torus::{AffineEndo, RotationGroup, SpherePoint, TorusPoint};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rat(s: &str) -> PyResult<Rat> {
    s.trim().parse().map_err(value_err)
}

fn endo(a: [[i64; 2]; 2], b: Option<(String, String)>) -> PyResult<AffineEndo> {
    let m = Mat2Z::new(a[0][0], a[0][1], a[1][0], a[1][1]);
    let (bx, by) = b.unwrap_or(("0".into(), "0".into()));
    AffineEndo::new(m, Vec2Q::new(rat(&bx)?, rat(&by)?)).map_err(value_err)
}

fn point(p: &TorusPoint) -> (String, String) {
    (p.x().to_string(), p.y().to_string())
}

fn sphere(p: &SpherePoint) -> (String, String) {
    point(p.representative())
}

fn signature(values: Vec<Bound<'_, PyAny>>) -> PyResult<OrbifoldData> {
    let mut sig = Vec::with_capacity(values.len());
    for v in values {
        if let Ok(n) = v.extract::<u64>() {
            if n == 0 {
                return Err(PyValueError::new_err("signature entries are positive"));
            }
            sig.push(Nu::Finite(n));
        } else if v.extract::<String>().is_ok_and(|s| s == "inf") {
            sig.push(Nu::Infinite);
        } else {
            return Err(PyValueError::new_err("signature entries are positive ints or \"inf\""));
        }
    }
    Ok(OrbifoldData::from_signature(&sig))
}

/// A validated QOTE pair. Rationals cross the boundary as strings like "1/2".
#[pyclass(name = "QotePair", module = "orbifoldkit", frozen)]
struct PyQotePair {
    inner: qote::QotePair,
}

#[pymethods]
impl PyQotePair {
    #[new]
    #[pyo3(signature = (rotation_order, a, b=None, precompose_a=None, precompose_b=None))]
    fn new(
        rotation_order: u32,
        a: [[i64; 2]; 2],
        b: Option<(String, String)>,
        precompose_a: Option<[[i64; 2]; 2]>,
        precompose_b: Option<(String, String)>,
    ) -> PyResult<Self> {
        let group = RotationGroup::new(rotation_order).map_err(value_err)?;
        let f = endo(a, b)?;
        let q = match precompose_a {
            Some(c) => endo(c, precompose_b)?,
            None => AffineEndo::identity(),
        };
        let inner = qote::QotePair::validate(group, f, q).map_err(value_err)?;
        Ok(PyQotePair { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: InstanceSpec = serde_json::from_str(text).map_err(value_err)?;
        Ok(PyQotePair { inner: spec.pair().map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        cli::to_json(&self.inner)
    }

    #[getter]
    fn rotation_order(&self) -> u32 {
        self.inner.group().order()
    }

    #[getter]
    fn deg_f(&self) -> u64 {
        self.inner.deg_f()
    }

    #[getter]
    fn deg_pi(&self) -> u64 {
        self.inner.deg_pi()
    }

    #[getter]
    fn twist(&self) -> u32 {
        self.inner.twist()
    }

    fn projection_critical_set(&self) -> Vec<(String, String)> {
        self.inner.projection_critical_set().iter().map(point).collect()
    }

    fn postcritical_set(&self) -> Vec<(String, String)> {
        self.inner.postcritical_set().iter().map(sphere).collect()
    }

    /// `(point, local degree)` for each critical point of the induced map.
    fn critical_set(&self) -> PyResult<Vec<((String, String), u32)>> {
        let crit = self.inner.critical_set_f().map_err(value_err)?;
        Ok(crit.iter().map(|(p, d)| (sphere(p), *d)).collect())
    }

    /// The induced map on the sphere at the class of `(x, y)`.
    fn eval_f(&self, x: &str, y: &str) -> PyResult<(String, String)> {
        let p = self.inner.sphere_point(&Vec2Q::new(rat(x)?, rat(y)?));
        self.inner.eval_f(&p).map(|q| sphere(&q)).map_err(value_err)
    }

    fn marked_set_sizes(&self, depth: usize) -> Vec<usize> {
        self.inner.marked_sets(depth).sizes()
    }

    fn h_order(&self) -> usize {
        compute_h(&self.inner).len()
    }

    fn is_pi_injective(&self) -> PyResult<bool> {
        decide_pi_injectivity(&self.inner).map(|v| v.injective).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn power(&self, m: u32) -> PyResult<Self> {
        Ok(PyQotePair { inner: self.inner.power(m).map_err(value_err)? })
    }

    /// Quotients by `H` until pi-injective; returns the final pair and the `deg(pi)` ledger.
    #[pyo3(signature = (seed=DEFAULT_SEED))]
    fn make_injective(&self, seed: u64) -> PyResult<(Self, Vec<u64>)> {
        let (last, steps) = make_injective_with(&self.inner, seed, QUOTIENT_SAMPLES)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        let ledger = steps.iter().map(|s| s.deg_pi_old).chain([last.deg_pi()]).collect();
        Ok((PyQotePair { inner: last }, ledger))
    }

    /// Full report as a JSON string.
    #[pyo3(signature = (samples=None, seed=None, marked_depth=None))]
    fn analyze(&self, py: Python<'_>, samples: Option<usize>, seed: Option<u64>, marked_depth: Option<usize>) -> String {
        let d = AnalysisOptions::default();
        let opts = AnalysisOptions {
            samples: samples.unwrap_or(d.samples),
            seed: seed.unwrap_or(d.seed),
            marked_depth: marked_depth.unwrap_or(d.marked_depth),
            ..d
        };
        let report = py.detach(|| analysis::analyze(&self.inner, &opts));
        cli::to_json(&report)
    }

    fn svg(&self, seed: Option<u64>) -> PyResult<String> {
        orbifoldkit_core::figure::render_svg(&self.inner, seed.unwrap_or(DEFAULT_SEED)).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        let f = self.inner.endomorphism();
        format!(
            "QotePair(n={}, A={}, b={}, deg_f={}, deg_pi={})",
            self.inner.group().order(),
            f.matrix(),
            f.translation(),
            self.inner.deg_f(),
            self.inner.deg_pi()
        )
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Analysis report for an instance spec given as JSON.
#[pyfunction]
#[pyo3(signature = (spec_json, samples=None, seed=None))]
fn analyze(py: Python<'_>, spec_json: &str, samples: Option<usize>, seed: Option<u64>) -> PyResult<String> {
    let spec: InstanceSpec = serde_json::from_str(spec_json).map_err(value_err)?;
    let report = py.detach(|| cli::run_analyze(&spec, samples, seed)).map_err(value_err)?;
    Ok(cli::to_json(&report))
}

#[pyfunction]
#[pyo3(signature = (spec_json, seed=None))]
fn quotient(spec_json: &str, seed: Option<u64>) -> PyResult<String> {
    let spec: InstanceSpec = serde_json::from_str(spec_json).map_err(value_err)?;
    Ok(cli::to_json(&cli::run_quotient(&spec, seed).map_err(value_err)?))
}

#[pyfunction]
fn portrait(portrait_json: &str) -> PyResult<String> {
    let p: RamifiedPortrait = serde_json::from_str(portrait_json).map_err(value_err)?;
    Ok(cli::to_json(&cli::run_portrait(&p).map_err(value_err)?))
}

/// Euler characteristic of a signature such as `[2, 4, "inf"]`, as "p/q".
#[pyfunction]
fn euler_characteristic(signature_values: Vec<Bound<'_, PyAny>>) -> PyResult<String> {
    Ok(orbifold::euler_characteristic(&signature(signature_values)?).to_string())
}

#[pyfunction]
fn classify(signature_values: Vec<Bound<'_, PyAny>>) -> PyResult<String> {
    Ok(orbifold::classify(&signature(signature_values)?).to_string())
}

/// Sweep summary as JSON.
#[pyfunction]
#[pyo3(signature = (orders, det_max, entry_max, precompose=vec!["id".to_string(), "F".to_string()], samples=None))]
fn sweep(
    py: Python<'_>,
    orders: Vec<u32>,
    det_max: u64,
    entry_max: i64,
    precompose: Vec<String>,
    samples: Option<usize>,
) -> PyResult<String> {
    let precompose = precompose
        .iter()
        .map(|s| s.parse::<PrecomposeTag>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(PyValueError::new_err)?;
    let d = SweepConfig::default();
    let cfg = SweepConfig { orders, det_max, entry_max, precompose, samples: samples.unwrap_or(d.samples), ..d };
    let report = py.detach(|| run_sweep(&cfg)).map_err(PyValueError::new_err)?;
    Ok(cli::to_json(&report.summary))
}

#[pymodule]
fn orbifoldkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQotePair>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(quotient, m)?)?;
    m.add_function(wrap_pyfunction!(portrait, m)?)?;
    m.add_function(wrap_pyfunction!(euler_characteristic, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}

// SPDX-License-Identifier: Apache-2.0

//! Python bindings. Structured results (reports, metrics, solutions) cross
//! the boundary as plain dicts with the same layout as the CLI's JSON files.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use noc3d_core::area_kernel::{self, CellDemand};
use noc3d_core::exact_baseline::{self, ExactLimits};
use noc3d_core::formats::{self, SolutionFile};
use noc3d_core::layer_assign;
use noc3d_core::model::{Instance, ObjectiveWeights};
use noc3d_core::pipeline::{self, Pipeline, PipelineConfig};
use noc3d_core::{corpus, render, Error};

create_exception!(noc3d, Noc3dError, PyException);

fn err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => Noc3dError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let s: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&s).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn weights(w: Option<&str>) -> PyResult<ObjectiveWeights> {
    match w {
        Some(s) => s.parse().map_err(err),
        None => Ok(ObjectiveWeights::default()),
    }
}

/// A validated instance: core graph, PPA tables and layer stack.
#[pyclass(name = "Instance", module = "noc3d", frozen)]
struct PyInstance {
    inner: Instance,
}

#[pymethods]
impl PyInstance {
    /// Loads `coregraph.json`, `ppa.json` and `tech.json` from a directory.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyInstance {
            inner: Instance::load_dir(&path).map_err(err)?,
        })
    }

    /// One of the shipped instances: tiny_soc, small_vsoc, large_vsoc, vopd.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        let inner = corpus::builtin(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown instance `{name}`")))?
            .map_err(err)?;
        Ok(PyInstance { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_dir(&path).map_err(err)
    }

    /// Same components and stack with uniform traffic of equal total bandwidth.
    fn uniform(&self) -> PyResult<Self> {
        Ok(PyInstance {
            inner: corpus::uniform_like(&self.inner).map_err(err)?,
        })
    }

    fn with_rd_max(&self, mm: f64) -> Self {
        PyInstance {
            inner: self.inner.with_rd_max(mm),
        }
    }

    #[getter]
    fn num_components(&self) -> usize {
        self.inner.num_components()
    }

    #[getter]
    fn num_layers(&self) -> usize {
        self.inner.num_layers()
    }

    #[getter]
    fn components(&self) -> Vec<String> {
        self.inner.graph.components.iter().map(|c| c.id.clone()).collect()
    }

    #[getter]
    fn layers(&self) -> Vec<String> {
        self.inner.tech.layers.iter().map(|l| l.node.clone()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance({} components, {} flows, layers {:?})",
            self.inner.num_components(),
            self.inner.flows().len(),
            self.layers()
        )
    }
}

/// Runs the pipeline. `config` takes the keys of the CLI's config file.
#[pyfunction]
#[pyo3(signature = (instance, seed = None, config = None))]
fn run(py: Python<'_>, instance: &PyInstance, seed: Option<u64>, config: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let mut cfg: PipelineConfig = match config {
        Some(c) => from_py(c)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let inst = &instance.inner;
    let report = py
        .detach(|| Pipeline::new(inst, cfg).and_then(|p| p.run()))
        .map_err(err)?;
    to_py(py, &report)
}

/// Metrics of a solution dict (a report, `solution.json` or an exact
/// solution).
#[pyfunction]
#[pyo3(signature = (instance, solution, weights = None))]
fn evaluate(py: Python<'_>, instance: &PyInstance, solution: &Bound<'_, PyAny>, weights: Option<&str>) -> PyResult<Py<PyAny>> {
    let file: SolutionFile = from_py(solution)?;
    let (_, e) = pipeline::evaluate_file(&instance.inner, &file, &self::weights(weights)?).map_err(err)?;
    to_py(py, &e.metrics)
}

/// Exact optimum of a tiny instance by enumeration.
#[pyfunction]
#[pyo3(signature = (instance, weights = None))]
fn exact(py: Python<'_>, instance: &PyInstance, weights: Option<&str>) -> PyResult<Py<PyAny>> {
    let w = self::weights(weights)?;
    let inst = &instance.inner;
    let r = py
        .detach(|| exact_baseline::solve_exact(inst, &w, &ExactLimits::default(), true))
        .map_err(err)?;
    let out = serde_json::json!({
        "solution": formats::solution_to_file(inst, &r.solution),
        "metrics": r.metrics,
        "configurations": r.configurations,
        "feasible_configurations": r.feasible,
    });
    to_py(py, &out)
}

/// Step 1 alone: component id to layer index.
#[pyfunction]
fn assign_layers(py: Python<'_>, instance: &PyInstance) -> PyResult<Py<PyAny>> {
    let a = layer_assign::assign_layers(&instance.inner, &Default::default()).map_err(err)?;
    to_py(py, &formats::assignment_to_file(&instance.inner, &a).assignment)
}

/// Minimum bounding area of a `rows x cols` grid of cell demands (row-major,
/// 0 for empty cells). Returns `(col_widths, row_heights, area)`.
#[pyfunction]
fn min_area(rows: usize, cols: usize, demand: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    if demand.len() != rows * cols || demand.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
        return Err(PyValueError::new_err("demand must hold rows*cols finite values >= 0"));
    }
    let k = area_kernel::solve(&CellDemand::new(rows, cols, demand)).map_err(err)?;
    Ok((k.col_widths, k.row_heights, k.area))
}

/// SVG drawing of one layer of a solution dict.
#[pyfunction]
fn render_layer(instance: &PyInstance, solution: &Bound<'_, PyAny>, layer: usize) -> PyResult<String> {
    let file: SolutionFile = from_py(solution)?;
    let sol = formats::solution_from_file(&instance.inner, &file).map_err(err)?;
    if layer >= sol.floorplans.len() {
        return Err(PyValueError::new_err(format!("no layer {layer}")));
    }
    Ok(render::render_layer(&instance.inner, &sol, layer))
}

#[pymodule]
#[pyo3(name = "noc3d")]
fn noc3d_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("Noc3dError", m.py().get_type::<Noc3dError>())?;
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(exact, m)?)?;
    m.add_function(wrap_pyfunction!(assign_layers, m)?)?;
    m.add_function(wrap_pyfunction!(min_area, m)?)?;
    m.add_function(wrap_pyfunction!(render_layer, m)?)?;
    Ok(())
}

//! Python bindings.

use std::path::PathBuf;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use proper_lift::distance::distance_field;
use proper_lift::embed::{embed_curve, nash_dimension as nash, EmbedRequest, Provider};
use proper_lift::generators::Generator;
use proper_lift::io::{load_manifold, save_manifold, Format};
use proper_lift::lift::{lift as lift_map, non_properness_witness, properness_certificate, WitnessParams};
use proper_lift::pipeline::{emit_plots, list_scenarios as scenarios, run_scenario as run, scenario};
use proper_lift::smoothing::{
    lipschitz_number as lipschitz, smooth_approx as smooth, truncate_distance as truncate, SmoothingParams,
};
use proper_lift::surgery::{differential, modify_metric};
use proper_lift::{EmbeddingMap, SampledManifold, ScalarField, Scenario};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn field(values: Vec<f64>) -> PyResult<ScalarField> {
    ScalarField::new(values).map_err(err)
}

fn points(x: &EmbeddingMap) -> Vec<Vec<f64>> {
    x.points().map(|p| p.to_vec()).collect()
}

fn embedding(pts: Vec<Vec<f64>>) -> PyResult<EmbeddingMap> {
    let dim = pts.first().map_or(0, |p| p.len());
    EmbeddingMap::from_points(dim, &pts).map_err(err)
}

fn params(r_ball: f64, tube_margin: f64) -> SmoothingParams {
    SmoothingParams {
        r_ball,
        tube_margin,
        ..Default::default()
    }
}

/// A sampled 1- or 2-manifold.
#[pyclass(name = "Manifold", frozen)]
struct PyManifold(SampledManifold);

#[pymethods]
impl PyManifold {
    #[staticmethod]
    #[pyo3(signature = (t0, t1, edges, metric = "1"))]
    fn line_segment(t0: f64, t1: f64, edges: usize, metric: &str) -> PyResult<Self> {
        Generator::LineSegment {
            t0,
            t1,
            edges,
            metric: metric.into(),
        }
        .build()
        .map(Self)
        .map_err(err)
    }

    #[staticmethod]
    fn half_line(horizon: f64, edges: usize) -> PyResult<Self> {
        Generator::HalfLine { horizon, edges }.build().map(Self).map_err(err)
    }

    #[staticmethod]
    fn circle(circumference: f64, edges: usize) -> PyResult<Self> {
        Generator::Circle { circumference, edges }
            .build()
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn grid_patch(k: usize, size: f64) -> PyResult<Self> {
        Generator::GridPatch { k, size }.build().map(Self).map_err(err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_manifold(&path, Format::from_path(&path)).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_manifold(&self.0, &path, Format::from_path(&path)).map_err(err)
    }

    fn refine(&self, k: u32) -> PyResult<Self> {
        proper_lift::refine::refine(&self.0, k).map(Self).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    #[getter]
    fn base_vertex(&self) -> usize {
        self.0.base_vertex()
    }

    #[getter]
    fn mesh_scale(&self) -> f64 {
        self.0.mesh_scale()
    }

    fn chart(&self) -> Vec<[f64; 2]> {
        self.0.chart().to_vec()
    }

    fn distance_field(&self) -> PyResult<Vec<f64>> {
        distance_field(&self.0).map(ScalarField::into_values).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Manifold(dim={}, vertices={}, cells={})",
            self.0.dim(),
            self.0.vertex_count(),
            self.0.cell_count()
        )
    }
}

#[pyfunction]
fn nash_dimension(n: u64) -> PyResult<u64> {
    nash(n).map_err(err)
}

#[pyfunction]
fn list_scenarios() -> Vec<&'static str> {
    scenarios()
}

#[pyfunction]
fn lipschitz_number(m: &PyManifold, values: Vec<f64>) -> PyResult<f64> {
    lipschitz(&m.0, &field(values)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (distance, r_ball = 0.2))]
fn truncate_distance(distance: Vec<f64>, r_ball: f64) -> PyResult<Vec<f64>> {
    truncate(&field(distance)?, &params(r_ball, 0.5))
        .map(ScalarField::into_values)
        .map_err(err)
}

/// Returns `(phi, certificate_json)`.
#[pyfunction]
#[pyo3(signature = (m, f, r_ball = 0.2, tube_margin = 0.5))]
fn smooth_approx(m: &PyManifold, f: Vec<f64>, r_ball: f64, tube_margin: f64) -> PyResult<(Vec<f64>, String)> {
    let (phi, cert) = smooth(&m.0, &field(f)?, &params(r_ball, tube_margin)).map_err(err)?;
    Ok((phi.into_values(), serde_json::to_string(&cert).map_err(err)?))
}

/// Per-cell coefficients of `g − ¼·dφ⊗dφ`.
#[pyfunction]
fn modified_metric(m: &PyManifold, phi: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let w = differential(&m.0, &field(phi)?).map_err(err)?;
    let gt = modify_metric(m.0.metric(), &w).map_err(err)?;
    Ok(gt.tensors().iter().map(|t| t.coefficients()).collect())
}

/// Curve embedding of `(M, g − ¼·dφ⊗dφ)` with one of the explicit providers.
#[pyfunction]
#[pyo3(signature = (m, phi, provider = "line", ambient_dim = 2))]
fn embed_modified_curve(m: &PyManifold, phi: Vec<f64>, provider: &str, ambient_dim: usize) -> PyResult<Vec<Vec<f64>>> {
    let provider: Provider = serde_json::from_value(serde_json::Value::String(provider.into())).map_err(err)?;
    let w = differential(&m.0, &field(phi)?).map_err(err)?;
    let gt = modify_metric(m.0.metric(), &w).map_err(err)?;
    let req = EmbedRequest {
        ambient_dim,
        provider,
        ..Default::default()
    };
    embed_curve(&m.0, &gt, &req).map(|x| points(&x)).map_err(err)
}

#[pyfunction]
fn lift(points_in: Vec<Vec<f64>>, phi: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    lift_map(&embedding(points_in)?, &field(phi)?)
        .map(|x| points(&x))
        .map_err(err)
}

/// Certificate for the query `q` as a JSON string.
#[pyfunction]
#[pyo3(signature = (m, lifted, distance, q, r_ball = 0.2))]
fn certify_properness(
    m: &PyManifold,
    lifted: Vec<Vec<f64>>,
    distance: Vec<f64>,
    q: Vec<f64>,
    r_ball: f64,
) -> PyResult<String> {
    let c = properness_certificate(&embedding(lifted)?, &m.0, &field(distance)?, &q, r_ball).map_err(err)?;
    serde_json::to_string(&c).map_err(err)
}

/// Witness JSON, or `None` when the curve never keeps returning.
#[pyfunction]
#[pyo3(signature = (m, curve, target = None, threshold = 10.0))]
fn find_witness(
    m: &PyManifold,
    curve: Vec<Vec<f64>>,
    target: Option<Vec<f64>>,
    threshold: f64,
) -> PyResult<Option<String>> {
    let p = WitnessParams {
        target,
        threshold,
        ..Default::default()
    };
    let w = non_properness_witness(&embedding(curve)?, &m.0, &p).map_err(err)?;
    w.map(|w| serde_json::to_string(&w).map_err(err)).transpose()
}

/// Runs a bundled scenario (or a scenario file) and returns the report JSON.
#[pyfunction]
#[pyo3(signature = (name, out_dir = None))]
fn run_scenario(py: Python<'_>, name: &str, out_dir: Option<PathBuf>) -> PyResult<String> {
    let s = match scenario(name) {
        Some(s) => s,
        None => Scenario::load(name.as_ref()).map_err(err)?,
    };
    let out = py.detach(|| run(&s)).map_err(err)?;
    if let Some(dir) = out_dir {
        emit_plots(&out, &dir).map_err(err)?;
    }
    out.report.to_json().map_err(err)
}

#[pymodule(name = "proper_lift")]
fn proper_lift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyManifold>()?;
    m.add_function(wrap_pyfunction!(nash_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(list_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(lipschitz_number, m)?)?;
    m.add_function(wrap_pyfunction!(truncate_distance, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_approx, m)?)?;
    m.add_function(wrap_pyfunction!(modified_metric, m)?)?;
    m.add_function(wrap_pyfunction!(embed_modified_curve, m)?)?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(certify_properness, m)?)?;
    m.add_function(wrap_pyfunction!(find_witness, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}

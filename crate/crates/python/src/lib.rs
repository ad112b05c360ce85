//! Python bindings: curves, layered geometries, meshes, solves, the radial
//! oracle and the config-driven studies.

use std::collections::BTreeMap;

use layerlab::config::StudyConfig;
use layerlab::energy::{energy_report, EnergyReport};
use layerlab::experiments::{
    optimize_profile, oracle_study, rate_study, scaling_study, solve_study,
    stretch_convergence_study,
};
use layerlab::geometry::{BoundaryField, ClosedCurve, FourierSeries, LayerGeometry};
use layerlab::linalg::SolverOptions;
use layerlab::meshing::{build_mesh, LayerMesh, MeshParams};
use layerlab::oracle::{radial_energy_report, RadialConfig};
use layerlab::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidCurve(_) => {
            PyValueError::new_err(e.to_string())
        }
        e if e.is_guard() => PyValueError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Closed Fourier curve, parametrized over `[0, 1)`.
#[pyclass(name = "Curve", module = "layerlab_py")]
#[derive(Clone)]
struct PyCurve(ClosedCurve);

#[pymethods]
impl PyCurve {
    #[staticmethod]
    fn circle(radius: f64) -> PyResult<Self> {
        ClosedCurve::circle(radius).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn ellipse(a: f64, b: f64) -> PyResult<Self> {
        ClosedCurve::ellipse(a, b).map(Self).map_err(to_py)
    }

    /// Curve from `(mean, cos, sin)` coefficients of `x(t)` and `y(t)`.
    #[staticmethod]
    fn fourier(x: (f64, Vec<f64>, Vec<f64>), y: (f64, Vec<f64>, Vec<f64>)) -> PyResult<Self> {
        ClosedCurve::from_fourier(
            FourierSeries::new(x.0, x.1, x.2),
            FourierSeries::new(y.0, y.1, y.2),
        )
        .map(Self)
        .map_err(to_py)
    }

    fn point(&self, t: f64) -> (f64, f64) {
        let p = self.0.point(t);
        (p[0], p[1])
    }

    fn curvature(&self, t: f64) -> f64 {
        self.0.curvature(t)
    }

    fn length(&self) -> f64 {
        self.0.length()
    }

    fn area(&self) -> f64 {
        self.0.area()
    }

    fn k_max(&self) -> f64 {
        self.0.k_max()
    }
}

/// Curve, thickness profile `h`, layer scale `ε` and Robin coefficient `β`.
#[pyclass(name = "Geometry", module = "layerlab_py")]
#[derive(Clone)]
struct PyGeometry(LayerGeometry);

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (curve, h_mean, eps, beta, h_cos = Vec::new(), h_sin = Vec::new(), d0 = None))]
    fn new(
        curve: &PyCurve,
        h_mean: f64,
        eps: f64,
        beta: f64,
        h_cos: Vec<f64>,
        h_sin: Vec<f64>,
        d0: Option<f64>,
    ) -> PyResult<Self> {
        let h = BoundaryField::from_series(FourierSeries::new(h_mean, h_cos, h_sin));
        LayerGeometry::new(curve.0.clone(), h, eps, beta, d0)
            .map(Self)
            .map_err(to_py)
    }

    fn with_eps(&self, eps: f64) -> PyResult<Self> {
        self.0.with_eps(eps).map(Self).map_err(to_py)
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.0.eps()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    #[getter]
    fn d0(&self) -> f64 {
        self.0.d0()
    }

    fn h(&self, t: f64) -> f64 {
        self.0.h().value(t)
    }

    fn h_range(&self) -> (f64, f64) {
        self.0.h_range()
    }

    fn curve(&self) -> PyCurve {
        PyCurve(self.0.curve().clone())
    }
}

/// Conforming triangulation of the interior plus the layer.
#[pyclass(name = "Mesh", module = "layerlab_py")]
struct PyMesh(LayerMesh);

#[pymethods]
impl PyMesh {
    #[new]
    #[pyo3(signature = (geometry, boundary_panels = 128, fibers = 4, interior_grading = 1.0))]
    fn new(
        py: Python<'_>,
        geometry: &PyGeometry,
        boundary_panels: usize,
        fibers: usize,
        interior_grading: f64,
    ) -> PyResult<Self> {
        let params = MeshParams {
            boundary_panels,
            fibers,
            interior_grading,
        };
        let geom = &geometry.0;
        py.detach(|| build_mesh(geom, geom.eps(), params))
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.0.n_vertices()
    }

    /// Vertices of the closed interior, where the limit solution lives.
    #[getter]
    fn n_interior_vertices(&self) -> usize {
        self.0.n_interior_vertices()
    }

    #[getter]
    fn n_triangles(&self) -> usize {
        self.0.triangles().len()
    }

    #[getter]
    fn boundary_panels(&self) -> usize {
        self.0.boundary_panels()
    }

    #[getter]
    fn fibers(&self) -> usize {
        self.0.fibers()
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.0.vertices().iter().map(|p| (p[0], p[1])).collect()
    }

    fn triangles(&self) -> Vec<(usize, usize, usize)> {
        self.0
            .triangles()
            .iter()
            .map(|t| (t[0], t[1], t[2]))
            .collect()
    }
}

/// Energies of one instance: `F_ε`, `F₀`, `δF_ε`, `F⁽¹⁾` and `G_ε`.
#[pyclass(name = "EnergyReport", module = "layerlab_py", get_all)]
#[derive(Clone)]
struct PyEnergyReport {
    eps: f64,
    f_eps: f64,
    f0: f64,
    delta: f64,
    f1: f64,
    g_eps: f64,
    tangential_layer_energy: f64,
    h1_bound_quantity: f64,
}

impl From<&EnergyReport> for PyEnergyReport {
    fn from(r: &EnergyReport) -> Self {
        Self {
            eps: r.eps,
            f_eps: r.f_eps,
            f0: r.f0,
            delta: r.delta,
            f1: r.f1,
            g_eps: r.g_eps,
            tangential_layer_energy: r.tangential_layer_energy,
            h1_bound_quantity: r.h1_bound_quantity,
        }
    }
}

#[pymethods]
impl PyEnergyReport {
    fn __repr__(&self) -> String {
        format!(
            "EnergyReport(eps={}, f_eps={}, f0={}, delta={}, f1={})",
            self.eps, self.f_eps, self.f0, self.delta, self.f1
        )
    }
}

/// Solves the layered and the limit problem for `f = c + g·x` and returns
/// `(report, u_eps, u0)`. `u_eps` holds every mesh vertex, `u0` the
/// interior vertices, both in mesh vertex order.
#[pyfunction]
#[pyo3(signature = (mesh, geometry, constant = 1.0, gradient = (0.0, 0.0), tolerance = 1e-10))]
fn solve(
    py: Python<'_>,
    mesh: &PyMesh,
    geometry: &PyGeometry,
    constant: f64,
    gradient: (f64, f64),
    tolerance: f64,
) -> PyResult<(PyEnergyReport, Vec<f64>, Vec<f64>)> {
    let f = move |p: [f64; 2]| constant + gradient.0 * p[0] + gradient.1 * p[1];
    let opts = SolverOptions {
        tolerance,
        ..SolverOptions::default()
    };
    let sol = py
        .detach(|| energy_report(&mesh.0, &geometry.0, &f, &opts))
        .map_err(to_py)?;
    Ok((
        PyEnergyReport::from(&sol.report),
        sol.u_eps.values,
        sol.u0.values,
    ))
}

/// Closed-form energies of the radial problem on a ball of radius `radius`
/// in dimension `n` with constant `h`, `β` and source `c`.
#[pyfunction]
#[pyo3(signature = (eps, radius = 1.0, h = 0.2, beta = 1.0, c = 1.0, n = 2))]
fn radial_report(
    eps: f64,
    radius: f64,
    h: f64,
    beta: f64,
    c: f64,
    n: usize,
) -> PyResult<PyEnergyReport> {
    let cfg = RadialConfig {
        n,
        radius,
        h,
        beta,
        c,
    };
    radial_energy_report(&cfg, eps)
        .map(|r| PyEnergyReport::from(&r))
        .map_err(to_py)
}

/// Parses a TOML study configuration and returns it with every default filled in.
#[pyfunction]
fn echo_config(text: &str) -> PyResult<String> {
    StudyConfig::from_toml(text)
        .map(|c| c.to_toml())
        .map_err(to_py)
}

/// Runs one study from a TOML configuration and returns `(pass, metrics)`.
#[pyfunction]
fn run_study(py: Python<'_>, study: &str, config: &str) -> PyResult<(bool, BTreeMap<String, f64>)> {
    let cfg = StudyConfig::from_toml(config).map_err(to_py)?;
    cfg.check_guards().map_err(to_py)?;
    let outcome = py.detach(|| -> layerlab::Result<(bool, BTreeMap<String, f64>)> {
        let r = match study {
            "oracle" => oracle_study(&cfg)?.0,
            "solve" => solve_study(&cfg)?.0,
            "rates" => rate_study(&cfg)?,
            "stretch" => stretch_convergence_study(&cfg)?,
            "scaling" => scaling_study(&cfg)?,
            "optimize" => {
                let r = optimize_profile(&cfg)?;
                return Ok((r.pass, r.metrics()));
            }
            other => return Err(Error::Config(format!("unknown study `{other}`"))),
        };
        Ok((r.pass, r.metrics()))
    });
    outcome.map_err(to_py)
}

#[pymodule]
fn layerlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCurve>()?;
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyEnergyReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(radial_report, m)?)?;
    m.add_function(wrap_pyfunction!(echo_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}

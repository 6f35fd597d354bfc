//! Python bindings: the transform, filter bank, lattice checks and the
//! experiment suites. Complex arrays cross the boundary as lists of `complex`.

use num_complex::Complex64;
use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hypframes::config::ExperimentConfig;
use hypframes::experiments::{self, Context};
use hypframes::filters;
use hypframes::geometry::{self, Point, SpatialGrid};
use hypframes::hft::{self, Hft, SpatialField, SpectralField, SpectralGrid};
use hypframes::lattice;

fn err(e: hypframes::Error) -> PyErr {
    match e {
        hypframes::Error::Config(m) => PyKeyError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn point(p: (f64, f64)) -> PyResult<Point> {
    Point::new(p.0, p.1).map_err(err)
}

fn to_py_json(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Hyperbolic distance between two points of the unit disk.
#[pyfunction]
fn hyp_distance(p: (f64, f64), q: (f64, f64)) -> PyResult<f64> {
    geometry::hyp_distance(point(p)?, point(q)?).map_err(err)
}

#[pyfunction]
fn ball_volume(r: f64) -> PyResult<f64> {
    geometry::ball_volume(r).map_err(err)
}

#[pyfunction]
fn spherical_function(lam: f64, r: f64) -> PyResult<f64> {
    hft::spherical_function(lam, r).map_err(err)
}

#[pyfunction]
fn plancherel_density(lam: f64) -> PyResult<f64> {
    hft::plancherel_density(lam).map_err(err)
}

#[pyclass(name = "FilterBank", frozen)]
struct PyFilterBank {
    inner: filters::FilterBank,
}

#[pymethods]
impl PyFilterBank {
    #[new]
    fn new(j_max: usize) -> PyResult<Self> {
        Ok(PyFilterBank {
            inner: filters::FilterBank::new(j_max).map_err(err)?,
        })
    }

    #[getter]
    fn j_max(&self) -> usize {
        self.inner.j_max
    }

    fn f(&self, j: usize, lam: f64) -> PyResult<f64> {
        if j > self.inner.j_max {
            return Err(PyValueError::new_err(format!("band {j} above J_max = {}", self.inner.j_max)));
        }
        Ok(self.inner.f(j, lam))
    }

    fn calderon_sum(&self, lam: f64) -> f64 {
        self.inner.calderon_sum(lam)
    }

    fn top(&self) -> f64 {
        self.inner.top()
    }
}

/// Discrete Helgason-Fourier transform on a truncated polar grid.
#[pyclass(name = "Transform", frozen)]
struct PyTransform {
    inner: Hft,
}

#[pymethods]
impl PyTransform {
    #[new]
    #[pyo3(signature = (r_max=7.0, n_r=192, n_theta=256, lambda_max=16.0, n_lambda=192, n_b=256, calibrate=true))]
    fn new(
        r_max: f64,
        n_r: usize,
        n_theta: usize,
        lambda_max: f64,
        n_lambda: usize,
        n_b: usize,
        calibrate: bool,
    ) -> PyResult<Self> {
        let g = SpatialGrid::new(r_max, n_r, n_theta).map_err(err)?;
        let s = SpectralGrid::new(lambda_max, n_lambda, n_b).map_err(err)?;
        let inner = if calibrate { Hft::calibrated(g, s) } else { Hft::new(g, s) }.map_err(err)?;
        Ok(PyTransform { inner })
    }

    #[getter]
    fn plancherel_constant(&self) -> f64 {
        self.inner.sgrid.constant
    }

    /// Spatial nodes `(u, v)` in the order used by `forward`.
    fn nodes(&self) -> Vec<(f64, f64)> {
        self.inner.grid.nodes.iter().map(|p| (p.u, p.v)).collect()
    }

    fn node_weights(&self) -> Vec<f64> {
        self.inner.grid.weights.clone()
    }

    /// Spectral nodes `(λ, b)`, row-major in `λ`.
    fn spectral_nodes(&self) -> Vec<(f64, f64)> {
        let s = &self.inner.sgrid;
        s.lambdas
            .iter()
            .flat_map(|&l| (0..s.n_b).map(move |q| (l, s.boundary_angle(q))))
            .collect()
    }

    fn forward(&self, values: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        if values.len() != self.inner.grid.len() {
            return Err(PyValueError::new_err(format!(
                "expected {} spatial samples, got {}",
                self.inner.grid.len(),
                values.len()
            )));
        }
        Ok(self.inner.forward(&SpatialField { values }).values)
    }

    fn inverse(&self, values: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
        if values.len() != self.inner.sgrid.len() {
            return Err(PyValueError::new_err(format!(
                "expected {} spectral samples, got {}",
                self.inner.sgrid.len(),
                values.len()
            )));
        }
        let n_b = self.inner.sgrid.n_b;
        Ok(self.inner.inverse(&SpectralField { n_b, values }).values)
    }

    fn spatial_norm(&self, values: Vec<Complex64>) -> f64 {
        SpatialField { values }.norm(&self.inner.grid)
    }

    fn spectral_norm(&self, values: Vec<Complex64>) -> f64 {
        let n_b = self.inner.sgrid.n_b;
        hft::plancherel_norm(&SpectralField { n_b, values }, &self.inner.sgrid)
    }

    /// Build an `r`-lattice on the spatial grid and verify it by brute force.
    #[pyo3(signature = (r, seed=0))]
    fn lattice_check(&self, py: Python<'_>, r: f64, seed: u64) -> PyResult<Py<PyAny>> {
        let lat = lattice::build_lattice(r, &self.inner.grid, seed).map_err(err)?;
        let chk = lattice::verify_lattice(&lat, &self.inner.grid);
        let mut v = serde_json::to_value(&chk).map_err(|e| PyValueError::new_err(e.to_string()))?;
        v["pass"] = chk.pass().into();
        to_py_json(py, &v.to_string())
    }
}

/// Experiment configuration; keys as in the flat config file.
#[pyclass(name = "Config")]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut c = PyConfig {
            inner: ExperimentConfig::default(),
        };
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                c.set(&k.extract::<String>()?, &v.str()?.to_string())?;
            }
        }
        Ok(c)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let mut inner = ExperimentConfig::default();
        inner.apply_text(text).map_err(err)?;
        Ok(PyConfig { inner })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(err)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Config(seed={}, delta={}, j_max={})", self.inner.seed, self.inner.delta, self.inner.j_max)
    }
}

/// Run one suite (or `"all"`) and return the report as a dict. Nothing is
/// written to disk.
#[pyfunction]
#[pyo3(signature = (name, config=None))]
fn run_experiment(py: Python<'_>, name: &str, config: Option<PyRef<'_, PyConfig>>) -> PyResult<Py<PyAny>> {
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    let name = name.to_string();
    let text = py
        .detach(move || -> hypframes::Result<String> {
            let mut ctx = Context::new(&cfg)?;
            let v = if name == "all" {
                serde_json::to_string(&experiments::run_all(&mut ctx)?)?
            } else {
                serde_json::to_string(&experiments::run(&name, &mut ctx)?)?
            };
            Ok(v)
        })
        .map_err(err)?;
    to_py_json(py, &text)
}

#[pymodule]
pub fn pyhypframes(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(hyp_distance, m)?)?;
    m.add_function(wrap_pyfunction!(ball_volume, m)?)?;
    m.add_function(wrap_pyfunction!(spherical_function, m)?)?;
    m.add_function(wrap_pyfunction!(plancherel_density, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_class::<PyFilterBank>()?;
    m.add_class::<PyTransform>()?;
    m.add_class::<PyConfig>()?;
    m.add("EXPERIMENTS", experiments::EXPERIMENTS.to_vec())?;
    Ok(())
}

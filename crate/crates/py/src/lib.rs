//! Python bindings: datasets, LC / ALC / ALCT fits, bandwidth selection,
//! simulation, Monte Carlo tables and image smoothing.
//!
//! Regressors are passed as a flat list (one dimension) or a list of rows.
//! Undefined estimates come back as `nan`.

use std::path::PathBuf;

use anisosmooth_core as core;
use core::{
    BandwidthGrid, BandwidthPlan, Channel, DomainMethod, EstimatorSpec, KernelFamily, McEstimator, PilotPolicy,
    RangeBandwidth,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(anisosmooth, SelectionError, PyException);

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::InvalidInput(_) => PyValueError::new_err(e.to_string()),
        core::Error::SelectionFailure(_) => SelectionError::new_err(e.to_string()),
        _ => PyIOError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[derive(FromPyObject)]
enum Coords {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl Coords {
    fn points(self) -> PyResult<core::Points> {
        match self {
            Coords::Flat(x) => core::Points::from_1d(&x).py(),
            Coords::Rows(rows) => core::Points::from_rows(&rows).py(),
        }
    }
}

#[derive(FromPyObject)]
enum Scalars {
    One(f64),
    Many(Vec<f64>),
}

impl Scalars {
    fn per_dim(self, q: usize) -> Vec<f64> {
        match self {
            Scalars::One(h) => vec![h; q],
            Scalars::Many(h) => h,
        }
    }
}

fn kernel(name: &str) -> PyResult<KernelFamily> {
    name.parse().py()
}

fn dgp(name: &str) -> PyResult<core::Dgp> {
    name.parse().py()
}

fn rows(p: &core::Points) -> Vec<Vec<f64>> {
    p.rows().map(<[f64]>::to_vec).collect()
}

/// Regression sample: regressors `x` and outcomes `y`.
#[pyclass(name = "Dataset", module = "anisosmooth", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: core::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(x: Coords, y: Vec<f64>) -> PyResult<Self> {
        let inner = core::Dataset::new(x.points()?, y).py()?;
        Ok(PyDataset { inner })
    }

    /// Reads a CSV with columns `x1..xq, y`.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyDataset {
            inner: core::Dataset::load(&path).py()?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).py()
    }

    /// Regressor rows.
    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        rows(self.inner.x())
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y().to_vec()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, dim={})", self.inner.len(), self.inner.dim())
    }
}

/// Estimates at a set of target points.
#[pyclass(name = "Fit", module = "anisosmooth", frozen, skip_from_py_object)]
struct PyFit {
    inner: core::FitResult,
    domain: Vec<f64>,
}

#[pymethods]
impl PyFit {
    #[getter]
    fn targets(&self) -> Vec<Vec<f64>> {
        rows(self.inner.targets())
    }

    /// Estimates, `nan` where the kernel weights sum to zero.
    #[getter]
    fn estimates(&self) -> Vec<f64> {
        self.inner.estimates().to_vec()
    }

    #[getter]
    fn undefined(&self) -> Vec<bool> {
        self.inner.undefined_mask().to_vec()
    }

    #[getter]
    fn undefined_count(&self) -> usize {
        self.inner.undefined_count()
    }

    #[getter]
    fn domain_bandwidth(&self) -> Vec<f64> {
        self.domain.clone()
    }

    /// Range bandwidth actually used, `None` for LC.
    #[getter]
    fn range_bandwidth(&self) -> Option<f64> {
        self.inner.range_bandwidth()
    }

    /// Estimates with undefined targets taken from the nearest defined one.
    fn fill_nearest(&self) -> Vec<f64> {
        self.inner.fill_nearest()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Fit(targets={}, undefined={}, h={:?}, range={:?})",
            self.inner.len(),
            self.inner.undefined_count(),
            self.domain,
            self.inner.range_bandwidth()
        )
    }
}

fn run(py: Python<'_>, data: &PyDataset, targets: Option<Coords>, spec: EstimatorSpec) -> PyResult<PyFit> {
    let targets = match targets {
        Some(t) => t.points()?,
        None => data.inner.x().clone(),
    };
    let inner = py.detach(|| core::fit(&data.inner, &targets, &spec)).py()?;
    Ok(PyFit {
        inner,
        domain: spec.domain,
    })
}

fn range(range_bandwidth: Option<f64>, range_multiplier: f64) -> RangeBandwidth {
    match range_bandwidth {
        Some(v) => RangeBandwidth::Fixed(v),
        None => RangeBandwidth::PilotSd {
            multiplier: range_multiplier,
        },
    }
}

/// Local constant (Nadaraya–Watson) fit. Targets default to the data points.
#[pyfunction]
#[pyo3(signature = (data, bandwidth, targets=None, kernel="uniform"))]
fn lc(py: Python<'_>, data: &PyDataset, bandwidth: Scalars, targets: Option<Coords>, kernel: &str) -> PyResult<PyFit> {
    let spec = EstimatorSpec::lc(self::kernel(kernel)?, bandwidth.per_dim(data.inner.dim()));
    run(py, data, targets, spec)
}

/// Anisotropic fit with an LC pilot at `pilot_bandwidth` (default: the domain
/// bandwidth). The range bandwidth is fixed, or `range_multiplier` times the
/// SD of the pilot at the data.
#[pyfunction]
#[pyo3(signature = (
    data, bandwidth, targets=None, pilot_bandwidth=None, range_bandwidth=None, range_multiplier=1.0,
    kernel="uniform", range_kernel="uniform", iterations=1
))]
#[allow(clippy::too_many_arguments)]
fn alc(
    py: Python<'_>,
    data: &PyDataset,
    bandwidth: Scalars,
    targets: Option<Coords>,
    pilot_bandwidth: Option<Scalars>,
    range_bandwidth: Option<f64>,
    range_multiplier: f64,
    kernel: &str,
    range_kernel: &str,
    iterations: usize,
) -> PyResult<PyFit> {
    let q = data.inner.dim();
    let h = bandwidth.per_dim(q);
    let pilot = PilotPolicy::IsotropicLc {
        bandwidths: Some(pilot_bandwidth.map_or_else(|| h.clone(), |p| p.per_dim(q))),
        enforce_rate: false,
    };
    let spec = EstimatorSpec::alc(
        self::kernel(kernel)?,
        h,
        range(range_bandwidth, range_multiplier),
        pilot,
    )
    .with_range_kernel(self::kernel(range_kernel)?)
    .with_iterations(iterations);
    run(py, data, targets, spec)
}

/// Anisotropic fit whose pilot is the true regression function of a named
/// process (`piecewise`, `continuous`, `continuous-jump[:J]`, `constant[:c]`).
#[pyfunction]
#[pyo3(signature = (
    data, process, bandwidth, targets=None, range_bandwidth=None, range_multiplier=1.0,
    kernel="uniform", range_kernel="uniform"
))]
#[allow(clippy::too_many_arguments)]
fn alct(
    py: Python<'_>,
    data: &PyDataset,
    process: &str,
    bandwidth: Scalars,
    targets: Option<Coords>,
    range_bandwidth: Option<f64>,
    range_multiplier: f64,
    kernel: &str,
    range_kernel: &str,
) -> PyResult<PyFit> {
    let g = dgp(process)?;
    let spec = EstimatorSpec::alc(
        self::kernel(kernel)?,
        bandwidth.per_dim(data.inner.dim()),
        range(range_bandwidth, range_multiplier),
        PilotPolicy::oracle(move |x| g.value(x)),
    )
    .with_range_kernel(self::kernel(range_kernel)?);
    run(py, data, targets, spec)
}

/// Anisotropic fit with caller-supplied pilot values at the data and targets.
#[pyfunction]
#[pyo3(signature = (data, targets, bandwidth, range_bandwidth, pilot_data, pilot_targets, kernel="uniform", range_kernel="uniform"))]
#[allow(clippy::too_many_arguments)]
fn alc_with_pilot(
    py: Python<'_>,
    data: &PyDataset,
    targets: Coords,
    bandwidth: Scalars,
    range_bandwidth: f64,
    pilot_data: Vec<f64>,
    pilot_targets: Vec<f64>,
    kernel: &str,
    range_kernel: &str,
) -> PyResult<PyFit> {
    let targets = targets.points()?;
    let h = bandwidth.per_dim(data.inner.dim());
    let bw = core::Bandwidths::new(h.clone(), range_bandwidth).py()?;
    let (k, rk) = (self::kernel(kernel)?, self::kernel(range_kernel)?);
    let inner = py
        .detach(|| core::alc_fit(&data.inner, &targets, k, rk, &bw, &pilot_data, &pilot_targets))
        .py()?;
    Ok(PyFit { inner, domain: h })
}

/// Isotropic bandwidth by `aicc` or `lscv` over `grid` (one list per
/// dimension, or one list shared by all), default a geometric grid.
#[pyfunction]
#[pyo3(signature = (data, method="aicc", kernel="uniform", grid=None))]
fn select_bandwidth(
    py: Python<'_>,
    data: &PyDataset,
    method: &str,
    kernel: &str,
    grid: Option<Coords>,
) -> PyResult<Vec<f64>> {
    let method = match method {
        "aicc" => DomainMethod::Aicc,
        "lscv" => DomainMethod::Lscv,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown selection method '{other}' (aicc, lscv)"
            )))
        }
    };
    let grid = match grid {
        None => None,
        Some(Coords::Flat(v)) => Some(BandwidthGrid::new(vec![v; data.inner.dim()]).py()?),
        Some(Coords::Rows(per_dim)) => Some(BandwidthGrid::new(per_dim).py()?),
    };
    let plan = BandwidthPlan {
        method,
        grid,
        ..BandwidthPlan::default()
    };
    let k = self::kernel(kernel)?;
    py.detach(|| plan.resolve_domain(&data.inner, k)).py()
}

/// One simulated sample from a named process.
#[pyfunction]
#[pyo3(signature = (process, n=400, sigma=0.5, seed=0))]
fn simulate(process: &str, n: usize, sigma: f64, seed: u64) -> PyResult<PyDataset> {
    let spec = core::DgpSpec {
        dgp: dgp(process)?,
        n,
        sigma,
        seed,
    };
    Ok(PyDataset {
        inner: core::simulate_dataset(&spec).py()?,
    })
}

/// True regression function of a named process at each point.
#[pyfunction]
fn process_value(process: &str, x: Coords) -> PyResult<Vec<f64>> {
    let g = dgp(process)?;
    let points = x.points()?;
    points.rows().map(|p| core::dgp_eval(&g, p).py()).collect()
}

/// Mean squared error over the defined estimates.
#[pyfunction]
#[pyo3(signature = (truth, estimates, undefined=None))]
fn mese(truth: Vec<f64>, estimates: Vec<f64>, undefined: Option<Vec<bool>>) -> PyResult<f64> {
    let undefined = undefined.unwrap_or_else(|| estimates.iter().map(|v| v.is_nan()).collect());
    core::mese(&truth, &estimates, &undefined).py()
}

/// Monte Carlo MESE table, one dict per `(sigma, n, estimator)` cell.
#[pyfunction]
#[pyo3(signature = (
    process="piecewise", ns=vec![400, 800, 1600], sigmas=vec![0.1, 0.5, 1.0, 2.0], replicates=125,
    seed=0, estimators=vec!["lc".to_string(), "alc".to_string(), "alct".to_string()], range_multiplier=0.5
))]
#[allow(clippy::too_many_arguments)]
fn monte_carlo<'py>(
    py: Python<'py>,
    process: &str,
    ns: Vec<usize>,
    sigmas: Vec<f64>,
    replicates: usize,
    seed: u64,
    estimators: Vec<String>,
    range_multiplier: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut pipeline = core::PipelineConfig::default();
    pipeline.plan.range_rule = core::RangeRule::Multiplier(range_multiplier);
    let cfg = core::McConfig {
        dgp: dgp(process)?,
        ns,
        sigmas,
        replicates,
        estimators: estimators
            .iter()
            .map(|e| e.parse::<McEstimator>().py())
            .collect::<PyResult<_>>()?,
        base_seed: seed,
        pipeline,
    };
    let table = py.detach(|| core::run_monte_carlo(&cfg)).py()?;
    table
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("sigma", r.sigma)?;
            d.set_item("n", r.n)?;
            d.set_item("estimator", r.estimator.name())?;
            d.set_item("mean_mese", r.mean_mese)?;
            d.set_item("sd_mese", r.sd_mese)?;
            d.set_item("failures", r.failures)?;
            d.set_item("replicates", r.replicate_mese.clone())?;
            Ok(d)
        })
        .collect()
}

/// RGB image with real-valued channels, row-major.
#[pyclass(name = "Image", module = "anisosmooth", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyImage {
    inner: core::ImageFrame,
}

#[pymethods]
impl PyImage {
    /// `channels` is one list per channel (r, g, b) or a single gray list.
    #[new]
    fn new(width: usize, height: usize, channels: Coords) -> PyResult<Self> {
        let inner = match channels {
            Coords::Flat(gray) => core::ImageFrame::gray(width, height, gray),
            Coords::Rows(c) => match <[Vec<f64>; 3]>::try_from(c) {
                Ok(rgb) => core::ImageFrame::new(width, height, rgb),
                Err(_) => return Err(PyValueError::new_err("expected three channels")),
            },
        }
        .py()?;
        Ok(PyImage { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyImage {
            inner: core::load_image(&path).py()?,
        })
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_png(&path).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn channel(&self, name: &str) -> PyResult<Vec<f64>> {
        let c: Channel = name.parse().py()?;
        Ok(self.inner.channel(c).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

/// Smooths each listed channel with its own selected bandwidth. Returns
/// `(smoothed, residual, info)` where `info` maps channel names to
/// bandwidths and undefined pixel counts.
#[pyfunction]
#[pyo3(signature = (image, estimator="alc", channels="rgb", range_multiplier=None, bandwidth=None, fill_nearest=false))]
fn smooth_image<'py>(
    py: Python<'py>,
    image: &PyImage,
    estimator: &str,
    channels: &str,
    range_multiplier: Option<f64>,
    bandwidth: Option<Scalars>,
    fill_nearest: bool,
) -> PyResult<(PyImage, PyImage, Bound<'py, PyDict>)> {
    let mut smoother = core::ImageSmoother {
        fill_nearest,
        ..core::ImageSmoother::default()
    };
    smoother.kind = match estimator {
        "lc" => core::EstimatorKind::Lc,
        "alc" => core::EstimatorKind::Alc,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown image estimator '{other}' (lc, alc)"
            )))
        }
    };
    if let Some(m) = range_multiplier {
        smoother.plan.range_rule = core::RangeRule::Multiplier(m);
    }
    if let Some(h) = bandwidth {
        smoother.plan.method = DomainMethod::Fixed(h.per_dim(2));
    }
    let channels = channels
        .chars()
        .map(|c| c.to_string().parse::<Channel>().py())
        .collect::<PyResult<Vec<_>>>()?;
    let out = py.detach(|| smoother.smooth(&image.inner, &channels)).py()?;
    let info = PyDict::new(py);
    for (c, s) in &out.channels {
        let d = PyDict::new(py);
        d.set_item("domain_bandwidth", s.domain_bandwidth.clone())?;
        d.set_item("range_bandwidth", s.range_bandwidth)?;
        d.set_item("undefined", s.undefined.iter().filter(|u| **u).count())?;
        info.set_item(c.to_string(), d)?;
    }
    Ok((PyImage { inner: out.smoothed }, PyImage { inner: out.residual }, info))
}

#[pymodule]
fn anisosmooth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SelectionError", m.py().get_type::<SelectionError>())?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyFit>()?;
    m.add_class::<PyImage>()?;
    m.add_function(wrap_pyfunction!(lc, m)?)?;
    m.add_function(wrap_pyfunction!(alc, m)?)?;
    m.add_function(wrap_pyfunction!(alct, m)?)?;
    m.add_function(wrap_pyfunction!(alc_with_pilot, m)?)?;
    m.add_function(wrap_pyfunction!(select_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(process_value, m)?)?;
    m.add_function(wrap_pyfunction!(mese, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(smooth_image, m)?)?;
    Ok(())
}

//! Python bindings. Images cross the boundary as nested lists of floats.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use thermoscan::watershed::PreTransform;
use thermoscan::{
    BitDepth, BoundaryPolicy, CameraModel, CaptureSchedule, Connectivity, Error, KltMode, SceneConfig, SegmentOptions,
    ThermalSeries, Verdict, WindowSpec,
};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } | Error::Input(_) | Error::Format { .. } | Error::Truncated { .. } => PyOSError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Grayscale image with float pixels.
#[pyclass(name = "GrayImage", module = "thermoscan", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGrayImage {
    inner: thermoscan::GrayImage,
}

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = thermoscan::GrayImage::from_rows(&rows).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            inner: thermoscan::GrayImage::filled(width, height, value),
        }
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn get(&self, row: usize, col: usize) -> PyResult<f64> {
        if row >= self.inner.height() || col >= self.inner.width() {
            return Err(PyValueError::new_err(format!("({row}, {col}) outside image")));
        }
        Ok(self.inner.get(row, col))
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner.pixels().chunks(self.inner.width()).map(|r| r.to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.inner.width(), self.inner.height())
    }
}

fn boundary(name: &str) -> PyResult<BoundaryPolicy> {
    match name {
        "replicate" => Ok(BoundaryPolicy::ReplicateEdge),
        "zero" => Ok(BoundaryPolicy::ZeroPad),
        other => Err(PyValueError::new_err(format!("boundary must be 'replicate' or 'zero', got {other:?}"))),
    }
}

#[pyfunction]
#[pyo3(signature = (image, size = 3, boundary_policy = "replicate"))]
fn median_filter(image: &PyGrayImage, size: usize, boundary_policy: &str) -> PyResult<PyGrayImage> {
    let window = WindowSpec::new(size, size).map_err(to_py)?;
    let inner = thermoscan::median_filter(&image.inner, window, boundary(boundary_policy)?).map_err(to_py)?;
    Ok(PyGrayImage { inner })
}

#[pyfunction]
fn bicubic_resize(image: &PyGrayImage, width: usize, height: usize) -> PyResult<PyGrayImage> {
    let inner = thermoscan::bicubic_resize(&image.inner, width, height).map_err(to_py)?;
    Ok(PyGrayImage { inner })
}

/// Min-max rescale to integer levels 0..=255.
#[pyfunction]
fn quantize(image: &PyGrayImage) -> PyGrayImage {
    PyGrayImage {
        inner: thermoscan::quantize(&image.inner),
    }
}

#[pyfunction]
fn equalize(image: &PyGrayImage) -> PyResult<PyGrayImage> {
    let inner = thermoscan::equalize(&image.inner).map_err(to_py)?;
    Ok(PyGrayImage { inner })
}

/// Eigen-decomposition of the covariance of equal-length vectors.
/// Returns a dict with `mean`, `eigenvalues` (descending), `eigenvectors`
/// and `covariance` as nested lists.
#[pyfunction]
fn klt_basis<'py>(py: Python<'py>, vectors: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let obs = thermoscan::ObservationSet::new(&vectors, KltMode::Column).map_err(to_py)?;
    let basis = thermoscan::compute_basis(&obs);
    let m = basis.dim();
    let square = |v: &[f64]| v.chunks(m).map(|r| r.to_vec()).collect::<Vec<_>>();
    let out = PyDict::new(py);
    out.set_item("mean", basis.mean.clone())?;
    out.set_item("eigenvalues", basis.eigenvalues.clone())?;
    out.set_item("eigenvectors", square(&basis.eigenvectors))?;
    out.set_item("covariance", square(&basis.covariance))?;
    Ok(out)
}

/// Watershed labels (0 marks dams) and the basin count.
#[pyfunction]
#[pyo3(signature = (image, connectivity = 8, h = 0, gradient = false))]
fn segment(image: &PyGrayImage, connectivity: u8, h: u32, gradient: bool) -> PyResult<(Vec<Vec<u32>>, usize)> {
    let connectivity = Connectivity::try_from(connectivity).map_err(PyValueError::new_err)?;
    let opts = SegmentOptions {
        connectivity,
        pre_transform: if gradient { PreTransform::GradientMagnitude } else { PreTransform::Direct },
        h,
    };
    let map = thermoscan::segment(&image.inner, &opts);
    let rows = map.labels.chunks(map.width).map(|r| r.to_vec()).collect();
    Ok((rows, map.basin_count))
}

#[pyclass(name = "ConfusionMatrix", module = "thermoscan", frozen)]
pub struct PyConfusionMatrix {
    inner: thermoscan::ConfusionMatrix,
}

#[pymethods]
impl PyConfusionMatrix {
    #[getter]
    fn tp(&self) -> u64 {
        self.inner.tp
    }
    #[getter]
    fn fp(&self) -> u64 {
        self.inner.fp
    }
    #[getter]
    fn tn(&self) -> u64 {
        self.inner.tn
    }
    #[getter(r#fn)]
    fn fn_(&self) -> u64 {
        self.inner.fn_
    }
    #[getter]
    fn accuracy(&self) -> f64 {
        self.inner.accuracy()
    }
    #[getter]
    fn tp_rate(&self) -> f64 {
        self.inner.tp_rate()
    }
    #[getter]
    fn fp_rate(&self) -> f64 {
        self.inner.fp_rate()
    }
    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!("ConfusionMatrix(tp={}, fp={}, tn={}, fn={})", c.tp, c.fp, c.tn, c.fn_)
    }
}

#[pyfunction]
fn score_run(predictions: Vec<bool>, ground_truth: Vec<bool>) -> PyResult<PyConfusionMatrix> {
    let verdicts: Vec<Verdict> = predictions
        .into_iter()
        .map(|p| if p { Verdict::MinePresent } else { Verdict::NoMine })
        .collect();
    let inner = thermoscan::score_run(&verdicts, &ground_truth).map_err(to_py)?;
    Ok(PyConfusionMatrix { inner })
}

#[pyfunction]
fn read_frame(path: PathBuf) -> PyResult<PyGrayImage> {
    Ok(PyGrayImage {
        inner: thermoscan::read_frame(path).map_err(to_py)?,
    })
}

#[pyfunction]
#[pyo3(signature = (image, path, bits = 16))]
fn write_frame(image: &PyGrayImage, path: PathBuf, bits: u32) -> PyResult<()> {
    let depth = BitDepth::from_bits(bits).map_err(to_py)?;
    thermoscan::write_frame(&image.inner, path, depth).map_err(to_py)
}

#[pyclass(name = "PipelineConfig", module = "thermoscan", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyPipelineConfig {
    inner: thermoscan::PipelineConfig,
}

#[pymethods]
impl PyPipelineConfig {
    #[new]
    fn new() -> Self {
        Self {
            inner: thermoscan::PipelineConfig::default(),
        }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: thermoscan::PipelineConfig::from_toml_str(text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: thermoscan::PipelineConfig::load(path).map_err(to_py)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn config_hash(&self) -> String {
        self.inner.config_hash()
    }
}

/// Runs the full pipeline on a directory of frames; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (series_dir, config = None, altitude_m = None, seed = None))]
fn process_series<'py>(
    py: Python<'py>,
    series_dir: PathBuf,
    config: Option<&PyPipelineConfig>,
    altitude_m: Option<f64>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let config = config.map(|c| c.inner.clone()).unwrap_or_default();
    let altitude = altitude_m.unwrap_or(config.schedule.altitude_m);
    let report = py
        .detach(|| {
            let series = ThermalSeries::load_dir(&series_dir, altitude)?;
            thermoscan::run_pipeline(&series, &config, seed).map(|o| o.report)
        })
        .map_err(to_py)?;
    json_to_py(py, &report)
}

/// Renders one synthetic series at the default scene and schedule.
/// Returns `(frames, truth)` where frames are `(iso_timestamp, GrayImage)` pairs.
#[pyfunction]
#[pyo3(signature = (location_id, mine_present = true, seed = 1, altitude_m = 1.5))]
fn render_series<'py>(
    py: Python<'py>,
    location_id: &str,
    mine_present: bool,
    seed: u64,
    altitude_m: f64,
) -> PyResult<(Vec<(String, PyGrayImage)>, Bound<'py, PyAny>)> {
    let scene = SceneConfig {
        mine_present,
        seed,
        ..Default::default()
    };
    let schedule = CaptureSchedule {
        altitude_m,
        ..Default::default()
    };
    let (series, truth) = thermoscan::render_series(location_id, &scene, &CameraModel::default(), &schedule).map_err(to_py)?;
    let frames = series
        .frames()
        .iter()
        .map(|f| (f.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string(), PyGrayImage { inner: f.image.clone() }))
        .collect();
    Ok((frames, json_to_py(py, &truth)?))
}

#[pymodule(name = "thermoscan")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add_class::<PyConfusionMatrix>()?;
    m.add_class::<PyPipelineConfig>()?;
    m.add_function(wrap_pyfunction!(median_filter, m)?)?;
    m.add_function(wrap_pyfunction!(bicubic_resize, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(equalize, m)?)?;
    m.add_function(wrap_pyfunction!(klt_basis, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(score_run, m)?)?;
    m.add_function(wrap_pyfunction!(read_frame, m)?)?;
    m.add_function(wrap_pyfunction!(write_frame, m)?)?;
    m.add_function(wrap_pyfunction!(process_series, m)?)?;
    m.add_function(wrap_pyfunction!(render_series, m)?)?;
    Ok(())
}

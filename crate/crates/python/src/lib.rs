//! Python bindings for `evdeg`.
//!
//! Streams, images and voxel grids are opaque classes that convert to and
//! from plain Python lists. Crate errors map to `ValueError` for bad input,
//! `FileNotFoundError` for missing files and `OSError` otherwise.

use pyo3::exceptions::{PyFileNotFoundError, PyOSError, PyValueError};
use pyo3::prelude::*;

use ::evdeg::degradation::{DegradeParams, NoiseParams};
use ::evdeg::{Error, Event};

fn to_py(err: Error) -> PyErr {
    if let Error::Path { source, .. } = &err {
        if source.kind() == std::io::ErrorKind::NotFound {
            return PyFileNotFoundError::new_err(err.to_string());
        }
    }
    if err.is_input_error() {
        PyValueError::new_err(err.to_string())
    } else {
        PyOSError::new_err(err.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for ::evdeg::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "EventStream", module = "evdeg", skip_from_py_object)]
#[derive(Clone)]
pub struct PyEventStream {
    inner: ::evdeg::EventStream,
}

#[pymethods]
impl PyEventStream {
    /// `events` is a list of `(t_seconds, x, y, p)` tuples. The stream is
    /// put into canonical order.
    #[new]
    #[pyo3(signature = (width, height, t_start, t_end, events = Vec::new()))]
    fn new(width: usize, height: usize, t_start: f64, t_end: f64, events: Vec<(f64, u16, u16, i8)>) -> PyResult<Self> {
        let events = events.into_iter().map(|(t, x, y, p)| Event::new(t, x, y, p)).collect();
        let inner = ::evdeg::canonical_sort(::evdeg::EventStream::new(width, height, t_start, t_end, events));
        ::evdeg::validate(&inner).map_err(|v| PyValueError::new_err(v.to_string()))?;
        Ok(Self { inner })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    #[getter]
    fn t_start(&self) -> f64 {
        self.inner.t_start
    }

    #[getter]
    fn t_end(&self) -> f64 {
        self.inner.t_end
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "EventStream({}x{}, {} events, [{}, {}])",
            self.inner.width,
            self.inner.height,
            self.inner.len(),
            self.inner.t_start,
            self.inner.t_end
        )
    }

    fn __eq__(&self, other: PyRef<'_, Self>) -> bool {
        self.inner == other.inner
    }

    fn to_list(&self) -> Vec<(f64, u16, u16, i8)> {
        self.inner.iter().map(|e| (e.t, e.x, e.y, e.p)).collect()
    }

    /// `{"count", "on_count", "off_count", "duration"}`.
    fn stats(&self) -> std::collections::BTreeMap<&'static str, f64> {
        let st = ::evdeg::stream_stats(&self.inner);
        [
            ("count", st.count as f64),
            ("on_count", st.on_count as f64),
            ("off_count", st.off_count as f64),
            ("duration", st.duration),
        ]
        .into_iter()
        .collect()
    }

    fn per_pixel_rate(&self) -> Vec<f64> {
        ::evdeg::stream_stats(&self.inner).per_pixel_rate
    }
}

#[pyclass(name = "Image", module = "evdeg", skip_from_py_object)]
#[derive(Clone)]
pub struct PyImage {
    inner: ::evdeg::Image,
}

#[pymethods]
impl PyImage {
    /// Row-major intensities.
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: ::evdeg::Image::new(width, height, data).py()?,
        })
    }

    #[staticmethod]
    fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            inner: ::evdeg::Image::filled(width, height, value),
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

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err("pixel out of range"));
        }
        Ok(self.inner.get(x, y))
    }

    fn to_list(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(name = "VoxelGrid", module = "evdeg", skip_from_py_object)]
#[derive(Clone)]
pub struct PyVoxelGrid {
    inner: ::evdeg::VoxelGrid,
}

#[pymethods]
impl PyVoxelGrid {
    /// `(height, width, channels)`.
    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        self.inner.shape()
    }

    #[getter]
    fn t0(&self) -> f64 {
        self.inner.t0
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration
    }

    fn get(&self, h: usize, w: usize, n: usize) -> PyResult<f32> {
        let (gh, gw, gn) = self.inner.shape();
        if h >= gh || w >= gw || n >= gn {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.get(h, w, n))
    }

    /// Channel counts of pixel `(h, w)`.
    fn pixel(&self, h: usize, w: usize) -> PyResult<Vec<f32>> {
        let (gh, gw, _) = self.inner.shape();
        if h >= gh || w >= gw {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.pixel(h, w).to_vec())
    }

    /// Flat `(h, w, n)` row-major values.
    fn to_list(&self) -> Vec<f32> {
        self.inner.data().to_vec()
    }

    fn net_polarity(&self) -> Vec<i64> {
        ::evdeg::net_polarity(&self.inner)
    }
}

fn frame_sequence(frames: Vec<PyRef<'_, PyImage>>, timestamps: Vec<f64>) -> PyResult<::evdeg::FrameSequence> {
    let frames = frames.iter().map(|f| f.inner.clone()).collect();
    ::evdeg::FrameSequence::new(frames, timestamps).py()
}

fn wrap_stream(inner: ::evdeg::EventStream) -> PyEventStream {
    PyEventStream { inner }
}

fn wrap_image(inner: ::evdeg::Image) -> PyImage {
    PyImage { inner }
}

#[pyfunction]
fn log_map(intensity: f64) -> f64 {
    ::evdeg::log_map(intensity)
}

/// Ideal events for frames at `timestamps` (seconds) under a uniform
/// threshold, or a per-pixel `threshold_map` when given.
#[pyfunction]
#[pyo3(signature = (frames, timestamps, threshold, threshold_map = None))]
fn simulate_events(
    frames: Vec<PyRef<'_, PyImage>>,
    timestamps: Vec<f64>,
    threshold: f64,
    threshold_map: Option<Vec<f64>>,
) -> PyResult<PyEventStream> {
    let seq = frame_sequence(frames, timestamps)?;
    let (w, h) = seq.dims().ok_or_else(|| PyValueError::new_err("no frames"))?;
    let mut sensor = ::evdeg::SensorModel::ideal(w, h, threshold).py()?;
    if let Some(map) = threshold_map {
        sensor = sensor.with_threshold_map(map).py()?;
    }
    Ok(wrap_stream(::evdeg::simulate_events(&seq, &sensor).py()?))
}

#[pyfunction]
fn synthesize_blur(frames: Vec<PyRef<'_, PyImage>>, first: usize, count: usize) -> PyResult<PyImage> {
    let n = frames.len();
    let seq = frame_sequence(frames, (0..n).map(|i| i as f64).collect())?;
    Ok(wrap_image(::evdeg::synthesize_blur(&seq, first, count).py()?))
}

/// Row-major biased threshold map.
#[pyfunction]
fn bias_thresholds(width: usize, height: usize, c_nominal: f64, sigma: f64, seed: u64) -> PyResult<Vec<f64>> {
    let sensor = ::evdeg::SensorModel::ideal(width, height, c_nominal).py()?;
    Ok(::evdeg::bias_thresholds(&sensor, sigma, seed).py()?.threshold_map)
}

#[pyfunction]
fn limit_bandwidth(stream: PyRef<'_, PyEventStream>, sampling_period: f64) -> PyResult<PyEventStream> {
    Ok(wrap_stream(::evdeg::limit_bandwidth(&stream.inner, sampling_period).py()?))
}

#[pyfunction]
#[pyo3(signature = (stream, shot_rate = 0.0, leak_rate = 0.0, hot_fraction = 0.0, hot_rate = 0.0, seed = 0, intensity_hint = None))]
fn inject_noise(
    stream: PyRef<'_, PyEventStream>,
    shot_rate: f64,
    leak_rate: f64,
    hot_fraction: f64,
    hot_rate: f64,
    seed: u64,
    intensity_hint: Option<PyRef<'_, PyImage>>,
) -> PyResult<PyEventStream> {
    let params = NoiseParams {
        shot_rate,
        leak_rate,
        hot_pixel_fraction: hot_fraction,
        hot_pixel_rate: hot_rate,
        seed,
    };
    let hint = intensity_hint.as_ref().map(|h| &h.inner);
    Ok(wrap_stream(::evdeg::inject_noise(&stream.inner, &params, hint).py()?))
}

/// `(E_u, E_d)` for the frames.
#[pyfunction]
#[pyo3(signature = (frames, timestamps, threshold, sigma = 0.0, sampling_period = 0.0, shot_rate = 0.0, leak_rate = 0.0, hot_fraction = 0.0, hot_rate = 0.0, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn make_pair(
    frames: Vec<PyRef<'_, PyImage>>,
    timestamps: Vec<f64>,
    threshold: f64,
    sigma: f64,
    sampling_period: f64,
    shot_rate: f64,
    leak_rate: f64,
    hot_fraction: f64,
    hot_rate: f64,
    seed: u64,
) -> PyResult<(PyEventStream, PyEventStream)> {
    let seq = frame_sequence(frames, timestamps)?;
    let (w, h) = seq.dims().ok_or_else(|| PyValueError::new_err("no frames"))?;
    let ideal = ::evdeg::SensorModel::ideal(w, h, threshold).py()?;
    let deg = DegradeParams {
        sigma,
        sampling_period,
        noise: NoiseParams {
            shot_rate,
            leak_rate,
            hot_pixel_fraction: hot_fraction,
            hot_pixel_rate: hot_rate,
            seed,
        },
    };
    let (u, d) = ::evdeg::make_pair(&seq, &ideal, &deg).py()?;
    Ok((wrap_stream(u), wrap_stream(d)))
}

#[pyfunction]
#[pyo3(signature = (stream, t0, duration, channels = 10))]
fn voxelize(stream: PyRef<'_, PyEventStream>, t0: f64, duration: f64, channels: usize) -> PyResult<PyVoxelGrid> {
    Ok(PyVoxelGrid {
        inner: ::evdeg::voxelize(&stream.inner, t0, duration, channels).py()?,
    })
}

#[pyfunction]
fn edi_weight(counts: Vec<f32>, c: f64, reference: usize) -> PyResult<f64> {
    if reference > counts.len() {
        return Err(PyValueError::new_err("reference beyond channel count"));
    }
    Ok(::evdeg::edi_weight(&counts, c, reference))
}

#[pyfunction]
#[pyo3(signature = (blurry, grid, c, reference, clamp = true))]
fn edi_reconstruct(
    blurry: PyRef<'_, PyImage>,
    grid: PyRef<'_, PyVoxelGrid>,
    c: f64,
    reference: usize,
    clamp: bool,
) -> PyResult<PyImage> {
    let cfg = ::evdeg::EdiConfig::new(c, reference);
    let out = if clamp {
        ::evdeg::edi_reconstruct(&blurry.inner, &grid.inner, &cfg)
    } else {
        ::evdeg::edi_reconstruct_unclamped(&blurry.inner, &grid.inner, &cfg)
    };
    Ok(wrap_image(out.py()?))
}

#[pyfunction]
fn edi_sequence(blurry: PyRef<'_, PyImage>, grid: PyRef<'_, PyVoxelGrid>, c: f64) -> PyResult<Vec<PyImage>> {
    Ok(::evdeg::edi_sequence(&blurry.inner, &grid.inner, c)
        .py()?
        .into_iter()
        .map(wrap_image)
        .collect())
}

#[pyfunction]
#[pyo3(signature = (stream, radius = 1, window = 0.01, min_support = 2))]
fn scf_filter(stream: PyRef<'_, PyEventStream>, radius: usize, window: f64, min_support: usize) -> PyResult<PyEventStream> {
    Ok(wrap_stream(::evdeg::scf_filter(&stream.inner, radius, window, min_support).py()?))
}

#[pyfunction]
fn hot_pixel_filter(stream: PyRef<'_, PyEventStream>, rate_threshold: f64) -> PyResult<PyEventStream> {
    Ok(wrap_stream(::evdeg::hot_pixel_filter(&stream.inner, rate_threshold).py()?))
}

#[pyfunction]
fn psnr(a: PyRef<'_, PyImage>, b: PyRef<'_, PyImage>) -> PyResult<f64> {
    ::evdeg::psnr(&a.inner, &b.inner).py()
}

#[pyfunction]
fn ssim(a: PyRef<'_, PyImage>, b: PyRef<'_, PyImage>) -> PyResult<f64> {
    ::evdeg::ssim(&a.inner, &b.inner).py()
}

#[pyfunction]
fn deblur_l1(deblurred: PyRef<'_, PyImage>, sharp: PyRef<'_, PyImage>) -> PyResult<f64> {
    ::evdeg::deblur_l1(&deblurred.inner, &sharp.inner).py()
}

#[pyfunction]
#[pyo3(signature = (restored, reference, degraded, alpha = 0.5))]
fn event_l1_response(
    restored: PyRef<'_, PyVoxelGrid>,
    reference: PyRef<'_, PyVoxelGrid>,
    degraded: PyRef<'_, PyVoxelGrid>,
    alpha: f64,
) -> PyResult<f64> {
    let cfg = ::evdeg::MetricConfig {
        alpha,
        ..Default::default()
    };
    ::evdeg::event_l1_response(&restored.inner, &reference.inner, &degraded.inner, &cfg).py()
}

#[pyfunction]
fn read_events(path: std::path::PathBuf) -> PyResult<PyEventStream> {
    Ok(wrap_stream(::evdeg::io::read_events(path).py()?))
}

#[pyfunction]
fn write_events(path: std::path::PathBuf, stream: PyRef<'_, PyEventStream>) -> PyResult<()> {
    ::evdeg::io::write_events(path, &stream.inner).py()
}

#[pyfunction]
fn read_voxel(path: std::path::PathBuf) -> PyResult<PyVoxelGrid> {
    Ok(PyVoxelGrid {
        inner: ::evdeg::io::read_voxel(path).py()?,
    })
}

#[pyfunction]
fn write_voxel(path: std::path::PathBuf, grid: PyRef<'_, PyVoxelGrid>) -> PyResult<()> {
    ::evdeg::io::write_voxel(path, &grid.inner).py()
}

#[pyfunction]
fn read_image(path: std::path::PathBuf) -> PyResult<PyImage> {
    Ok(wrap_image(::evdeg::io::read_image(path).py()?))
}

#[pyfunction]
fn write_image(path: std::path::PathBuf, image: PyRef<'_, PyImage>) -> PyResult<()> {
    ::evdeg::io::write_image(path, &image.inner).py()
}

#[pymodule]
fn evdeg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEventStream>()?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyVoxelGrid>()?;
    m.add_function(wrap_pyfunction!(log_map, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_events, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_blur, m)?)?;
    m.add_function(wrap_pyfunction!(bias_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(limit_bandwidth, m)?)?;
    m.add_function(wrap_pyfunction!(inject_noise, m)?)?;
    m.add_function(wrap_pyfunction!(make_pair, m)?)?;
    m.add_function(wrap_pyfunction!(voxelize, m)?)?;
    m.add_function(wrap_pyfunction!(edi_weight, m)?)?;
    m.add_function(wrap_pyfunction!(edi_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(edi_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(scf_filter, m)?)?;
    m.add_function(wrap_pyfunction!(hot_pixel_filter, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(deblur_l1, m)?)?;
    m.add_function(wrap_pyfunction!(event_l1_response, m)?)?;
    m.add_function(wrap_pyfunction!(read_events, m)?)?;
    m.add_function(wrap_pyfunction!(write_events, m)?)?;
    m.add_function(wrap_pyfunction!(read_voxel, m)?)?;
    m.add_function(wrap_pyfunction!(write_voxel, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(write_image, m)?)?;
    Ok(())
}

//! Python bindings: channel parameters, constellations, bound estimators and
//! the sweep driver.

// The pyo3 0.22 macros trip this lint on every `PyResult` signature.
#![allow(clippy::useless_conversion)]

use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use phasenoise_capacity::bounds::{self, BoundSettings};
use phasenoise_capacity::channel::{self, CMatrix, ChannelMatrix, Normalization};
use phasenoise_capacity::cli::{self, ExperimentConfig};
use phasenoise_capacity::inforate::RateConfig;
use phasenoise_capacity::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::OptimizationFailure { .. } | Error::NumericUnderflow { .. } | Error::Quadrature { .. } => {
            PyArithmeticError::new_err(e.to_string())
        }
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::Domain(_)
        | Error::Config(_)
        | Error::Parse { .. }
        | Error::PeakConstraint { .. }
        | Error::RankDeficient { .. } => PyValueError::new_err(e.to_string()),
        Error::Schema(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "ChannelParams", module = "phasenoise")]
#[derive(Clone)]
struct PyChannelParams {
    inner: channel::ChannelParams,
}

#[pymethods]
impl PyChannelParams {
    /// `matrix` is an optional square list of lists of complex numbers.
    #[new]
    #[pyo3(signature = (antennas, sigma_delta, snr, matrix=None))]
    fn new(antennas: usize, sigma_delta: f64, snr: f64, matrix: Option<Vec<Vec<Complex64>>>) -> PyResult<Self> {
        let m = match matrix {
            Some(rows) => ChannelMatrix::General(CMatrix::from_rows(rows).map_err(to_py)?),
            None => ChannelMatrix::Unitary,
        };
        let inner = channel::ChannelParams::new(antennas, sigma_delta, m, snr).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn antennas(&self) -> usize {
        self.inner.antennas
    }

    #[getter]
    fn sigma_delta(&self) -> f64 {
        self.inner.sigma_delta
    }

    #[getter]
    fn snr(&self) -> f64 {
        self.inner.snr
    }

    fn is_unitary(&self) -> bool {
        self.inner.is_unitary()
    }

    fn with_snr(&self, snr: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_snr(snr).map_err(to_py)?,
        })
    }

    /// Runs the channel on `inputs` and returns `(outputs, phases)`.
    #[pyo3(signature = (inputs, seed, initial_phase=None, noiseless=false))]
    fn simulate(
        &self,
        inputs: Vec<Vec<Complex64>>,
        seed: u64,
        initial_phase: Option<f64>,
        noiseless: bool,
    ) -> PyResult<(Vec<Vec<Complex64>>, Vec<f64>)> {
        let opts = channel::SimulationOptions {
            initial_phase,
            noiseless,
        };
        let (y, traj) = channel::simulate(&self.inner, &inputs, seed, opts).map_err(to_py)?;
        Ok((y, traj.theta))
    }

    fn __repr__(&self) -> String {
        format!(
            "ChannelParams(antennas={}, sigma_delta={}, snr={}, unitary={})",
            self.inner.antennas,
            self.inner.sigma_delta,
            self.inner.snr,
            self.inner.is_unitary()
        )
    }
}

#[pyclass(name = "Constellation", module = "phasenoise")]
#[derive(Clone)]
struct PyConstellation {
    inner: channel::Constellation,
}

#[pymethods]
impl PyConstellation {
    /// Accepts names such as `"QAM-64"` or `"PSK-8"`.
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: name.parse().map_err(to_py)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn symbols(&self) -> Vec<Complex64> {
        self.inner.symbols.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Symbols scaled for `snr` over `antennas` antennas; `mode` is
    /// `"peak"` or `"average"`.
    #[pyo3(signature = (snr, antennas, mode="peak"))]
    fn normalized(&self, snr: f64, antennas: usize, mode: &str) -> PyResult<Self> {
        let mode: Normalization = mode.parse().map_err(to_py)?;
        Ok(Self {
            inner: self.inner.normalized(snr, antennas, mode),
        })
    }
}

#[pyclass(name = "BoundRecord", module = "phasenoise", get_all)]
#[derive(Clone)]
struct PyBoundRecord {
    snr_db: f64,
    kind: String,
    value_bits: f64,
    std_error_bits: f64,
    opt_alpha: Option<f64>,
    opt_xi: Option<f64>,
    n_samples: usize,
    seed: u64,
    meta: String,
}

#[pymethods]
impl PyBoundRecord {
    fn __repr__(&self) -> String {
        format!(
            "BoundRecord(kind={:?}, snr_db={}, value_bits={:.6}, std_error_bits={:.2e})",
            self.kind, self.snr_db, self.value_bits, self.std_error_bits
        )
    }
}

impl From<bounds::BoundRecord> for PyBoundRecord {
    fn from(r: bounds::BoundRecord) -> Self {
        Self {
            snr_db: r.snr_db,
            kind: r.kind.as_str().to_string(),
            value_bits: r.value_bits,
            std_error_bits: r.std_error_bits,
            opt_alpha: r.opt_alpha,
            opt_xi: r.opt_xi,
            n_samples: r.n_samples,
            seed: r.seed,
            meta: r.meta,
        }
    }
}

fn settings(
    n_samples: usize,
    q_levels: usize,
    block_length: usize,
    n_blocks: usize,
    adaptive_window: bool,
    seed: u64,
) -> BoundSettings {
    BoundSettings {
        n_samples,
        q_levels,
        block_length,
        n_blocks,
        adaptive_window,
        seed,
        ..BoundSettings::default()
    }
}

/// Upper bound with the full conditional phase entropy.
#[pyfunction]
#[pyo3(signature = (params, seed=1, q_levels=200, block_length=2000, n_blocks=4, adaptive_window=true))]
fn upper_bound_u(
    py: Python<'_>,
    params: &PyChannelParams,
    seed: u64,
    q_levels: usize,
    block_length: usize,
    n_blocks: usize,
    adaptive_window: bool,
) -> PyResult<PyBoundRecord> {
    let s = settings(BoundSettings::default().n_samples, q_levels, block_length, n_blocks, adaptive_window, seed);
    let p = params.inner.clone();
    py.allow_threads(|| bounds::upper_bound_u(&p, &s)).map(Into::into).map_err(to_py)
}

/// Simplified upper bound with the one-step phase entropy.
#[pyfunction]
#[pyo3(signature = (params, seed=1, n_samples=100_000))]
fn upper_bound_us(py: Python<'_>, params: &PyChannelParams, seed: u64, n_samples: usize) -> PyResult<PyBoundRecord> {
    let d = BoundSettings::default();
    let s = settings(n_samples, d.q_levels, d.block_length, d.n_blocks, d.adaptive_window, seed);
    let p = params.inner.clone();
    py.allow_threads(|| bounds::upper_bound_us(&p, &s)).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn memoryless_plus_correction(params: &PyChannelParams) -> PyResult<PyBoundRecord> {
    bounds::memoryless_plus_correction(&params.inner, &BoundSettings::default())
        .map(Into::into)
        .map_err(to_py)
}

/// High-SNR capacity expansion; `unit` is `"bits"` or `"nats"`.
#[pyfunction]
#[pyo3(signature = (antennas, sigma_delta, snr, unit="bits"))]
fn asymptotic_capacity(antennas: usize, sigma_delta: f64, snr: f64, unit: &str) -> PyResult<f64> {
    let nats = bounds::asymptotic_capacity_nats(antennas, sigma_delta, snr).map_err(to_py)?;
    match unit {
        "nats" => Ok(nats),
        "bits" => Ok(nats / std::f64::consts::LN_2),
        other => Err(PyValueError::new_err(format!("unknown unit '{other}'"))),
    }
}

/// Peak-versus-average high-SNR gap in nats.
#[pyfunction]
fn avg_peak_gap(antennas: usize) -> PyResult<f64> {
    bounds::avg_peak_gap(antennas).map_err(to_py)
}

/// `(lower, upper)` in nats from the high-SNR expansion evaluated at
/// `λ_min ρ` and `λ_max ρ`.
#[pyfunction]
fn nonunitary_asymptotic_bounds(
    antennas: usize,
    sigma_delta: f64,
    lambda_min: f64,
    lambda_max: f64,
    snr: f64,
) -> PyResult<(f64, f64)> {
    bounds::nonunitary_bounds(
        |s| bounds::asymptotic_capacity_nats(antennas, sigma_delta, s),
        lambda_min,
        lambda_max,
        snr,
    )
    .map_err(to_py)
}

/// Achievable rate of i.i.d. uniform inputs from `constellation`.
#[pyfunction]
#[pyo3(signature = (params, constellation, seed=1, q_levels=200, block_length=2000, n_blocks=4, normalization="peak"))]
#[allow(clippy::too_many_arguments)]
fn qam_lower(
    py: Python<'_>,
    params: &PyChannelParams,
    constellation: &PyConstellation,
    seed: u64,
    q_levels: usize,
    block_length: usize,
    n_blocks: usize,
    normalization: &str,
) -> PyResult<PyBoundRecord> {
    let mut cfg = RateConfig::new(block_length, n_blocks, seed);
    cfg.normalization = normalization.parse().map_err(to_py)?;
    let p = params.inner.clone();
    let c = constellation.inner.clone();
    py.allow_threads(|| bounds::qam_lower(&p, &c, q_levels, &cfg)).map(Into::into).map_err(to_py)
}

/// Extreme eigenvalues `(λ_min, λ_max)` of `HᴴH`.
#[pyfunction]
fn singular_value_bounds(matrix: Vec<Vec<Complex64>>) -> PyResult<(f64, f64)> {
    let h = CMatrix::from_rows(matrix).map_err(to_py)?;
    channel::singular_value_bounds(&h).map_err(to_py)
}

/// Antenna spacing in metres for a unitary line-of-sight channel.
#[pyfunction]
fn los_antenna_spacing(freq_ghz: f64, range_m: f64, antennas: usize) -> PyResult<f64> {
    let wl = channel::wavelength_from_ghz(freq_ghz).map_err(to_py)?;
    channel::los_antenna_spacing(wl, range_m, antennas).map_err(to_py)
}

/// Runs the sweep described by a configuration file; returns the CSV path.
#[pyfunction]
fn run_sweep(py: Python<'_>, config: std::path::PathBuf) -> PyResult<String> {
    let cfg = ExperimentConfig::load(&config).map_err(to_py)?;
    let out = py.allow_threads(|| cli::run_sweep(&cfg)).map_err(to_py)?;
    if let Some((kind, snr, e)) = out.failures.into_iter().next() {
        return Err(to_py(Error::Config(format!("{kind} at {snr} dB failed: {e}"))));
    }
    Ok(cfg.csv_path().display().to_string())
}

#[pymodule]
fn phasenoise(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannelParams>()?;
    m.add_class::<PyConstellation>()?;
    m.add_class::<PyBoundRecord>()?;
    m.add_function(wrap_pyfunction!(upper_bound_u, m)?)?;
    m.add_function(wrap_pyfunction!(upper_bound_us, m)?)?;
    m.add_function(wrap_pyfunction!(memoryless_plus_correction, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(avg_peak_gap, m)?)?;
    m.add_function(wrap_pyfunction!(nonunitary_asymptotic_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(qam_lower, m)?)?;
    m.add_function(wrap_pyfunction!(singular_value_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(los_antenna_spacing, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}

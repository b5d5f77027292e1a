//! Python bindings: configuration loading, single-block runs, penalty-loop
//! convergence traces, and the unit conversions.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cscn::harness::{self, Scheme};
use cscn::model::{self, SystemConfig};
use cscn::scenario::{build_popularity, place_nodes, sample_window, Substreams};
use std::str::FromStr;

fn runtime_err(e: cscn::Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Validated system configuration.
#[pyclass(name = "Config", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: SystemConfig,
}

#[pymethods]
impl PyConfig {
    /// Desk-scale reference profile.
    #[staticmethod]
    fn desk() -> Self {
        PyConfig {
            inner: model::desk_profile(),
        }
    }

    /// Paper-scale reference profile.
    #[staticmethod]
    fn paper() -> Self {
        PyConfig {
            inner: model::paper_profile(),
        }
    }

    /// Parses and validates a config from TOML text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        model::load_config(text)
            .map(|inner| PyConfig { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn num_sbs(&self) -> usize {
        self.inner.num_sbs
    }

    #[getter]
    fn num_antennas(&self) -> usize {
        self.inner.num_antennas
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users
    }

    #[getter]
    fn num_files(&self) -> usize {
        self.inner.num_files
    }

    #[getter]
    fn block_length(&self) -> usize {
        self.inner.block_length
    }

    #[getter]
    fn fractional_capacity(&self) -> f64 {
        self.inner.fractional_capacity
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    /// SHA-256 digest of the full parameter set.
    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(num_sbs={}, num_antennas={}, num_users={}, num_files={}, block_length={}, seed={})",
            self.inner.num_sbs,
            self.inner.num_antennas,
            self.inner.num_users,
            self.inner.num_files,
            self.inner.block_length,
            self.inner.seed
        )
    }
}

/// Aggregated result of one block run.
#[pyclass(name = "BlockSummary")]
struct PyBlockSummary {
    #[pyo3(get)]
    scheme: String,
    #[pyo3(get)]
    block: u64,
    #[pyo3(get)]
    mean_power_w: f64,
    #[pyo3(get)]
    mean_edge_w: f64,
    #[pyo3(get)]
    mean_fronthaul_w: f64,
    #[pyo3(get)]
    infeasible_slots: usize,
    /// Total power per feasible slot, NaN for infeasible ones.
    #[pyo3(get)]
    slot_totals: Vec<f64>,
}

/// Runs one block under a caching scheme ("proposed", "uc", "lru", "gac").
#[pyfunction]
#[pyo3(signature = (config, scheme = "proposed", block = 1))]
fn run_block(config: &PyConfig, scheme: &str, block: u64) -> PyResult<PyBlockSummary> {
    let scheme = Scheme::from_str(scheme).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = harness::run_block(scheme, block, &config.inner).map_err(runtime_err)?;
    Ok(PyBlockSummary {
        scheme: report.scheme.to_string(),
        block: report.block,
        mean_power_w: report.mean_power.total,
        mean_edge_w: report.mean_power.edge,
        mean_fronthaul_w: report.mean_power.fronthaul,
        infeasible_slots: report.infeasible_slots,
        slot_totals: report
            .slots
            .iter()
            .map(|s| s.power.map(|p| p.total).unwrap_or(f64::NAN))
            .collect(),
    })
}

/// Penalty-loop trace for one slot under uniform caching:
/// a list of (iteration, objective_w, lambda, omega_max) tuples.
#[pyfunction]
#[pyo3(signature = (config, slot = 0, block = 1))]
fn convergence_trace(
    config: &PyConfig,
    slot: usize,
    block: u64,
) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let cfg = &config.inner;
    if slot >= cfg.block_length {
        return Err(PyValueError::new_err(format!(
            "slot {slot} out of range for block length {}",
            cfg.block_length
        )));
    }
    let streams = Substreams::new(cfg.seed);
    let geometry = place_nodes(cfg, &streams).map_err(runtime_err)?;
    let profile = build_popularity(cfg, &streams);
    let window = sample_window(&geometry, &profile, cfg, block, &streams);
    let cache = cscn::baselines::uniform_caching(cfg);
    let mut rng = streams.delivery_init(block, slot as u64, 0);
    let sol = cscn::delivery::penalty_cccp(
        &cache,
        &window.requests[slot],
        &window.channels,
        slot,
        cfg,
        &mut rng,
    )
    .map_err(runtime_err)?;
    Ok(sol
        .trace
        .iter()
        .map(|r| (r.iteration, r.objective, r.lambda, r.omega_max))
        .collect())
}

/// dB ratio to linear ratio.
#[pyfunction]
fn db_to_linear(db: f64) -> f64 {
    model::db_to_linear(db)
}

/// dBm to Watts.
#[pyfunction]
fn dbm_to_watts(dbm: f64) -> f64 {
    model::dbm_to_watts(dbm)
}

#[pymodule]
fn cscn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyBlockSummary>()?;
    m.add_function(wrap_pyfunction!(run_block, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_trace, m)?)?;
    m.add_function(wrap_pyfunction!(db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_watts, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

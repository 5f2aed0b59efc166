//! Python bindings for the `covert_aoi` simulator.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use covert_aoi::channel::{next_channel_state, sample_topology, substream};
use covert_aoi::config::{db_to_linear, linear_to_db, ConfigFile};
use covert_aoi::detection;
use covert_aoi::experiments::{self, SweepSpec};
use covert_aoi::noma;
use covert_aoi::simulation;
use covert_aoi::solver;
use covert_aoi::{NoiseUncertainty, PowerAllocation};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn nu(nominal: f64, factor: f64) -> PyResult<NoiseUncertainty> {
    NoiseUncertainty::new(nominal, factor).map_err(value_err)
}

/// Scenario parameters in SI units. Keyword arguments override defaults.
#[pyclass(name = "ScenarioConfig", module = "covert_aoi")]
struct PyScenario {
    inner: covert_aoi::ScenarioConfig,
}

macro_rules! scenario_fields {
    ($($field:ident: $ty:ty),* $(,)?) => {
        #[pymethods]
        impl PyScenario {
            #[new]
            #[pyo3(signature = (**kwargs))]
            fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
                let mut inner = covert_aoi::ScenarioConfig::default();
                if let Some(kw) = kwargs {
                    for (key, value) in kw.iter() {
                        let key: String = key.extract()?;
                        match key.as_str() {
                            $(stringify!($field) => inner.$field = value.extract::<$ty>()?,)*
                            other => return Err(value_err(format!("unknown field {other:?}"))),
                        }
                    }
                }
                inner.validate().map_err(value_err)?;
                Ok(Self { inner })
            }

            /// Reads the `[scenario]` section of a TOML config.
            #[staticmethod]
            fn from_toml(text: &str) -> PyResult<Self> {
                let file = ConfigFile::parse(text).map_err(value_err)?;
                Ok(Self { inner: file.scenario })
            }

            fn validate(&self) -> PyResult<()> {
                self.inner.validate().map_err(value_err)
            }

            fn min_rate(&self) -> f64 {
                self.inner.min_rate()
            }

            fn usable_slot_time(&self) -> f64 {
                self.inner.usable_slot_time()
            }

            fn __repr__(&self) -> String {
                format!("{:?}", self.inner)
            }

            $(
                #[getter]
                fn $field(&self) -> $ty {
                    self.inner.$field
                }
            )*
        }
    };
}

scenario_fields!(
    num_users: usize,
    bandwidth: f64,
    packet_size: f64,
    aoc: f64,
    measurement_time: f64,
    covert_budget: f64,
    user_noise: f64,
    willie_noise_nominal: f64,
    noise_uncertainty: f64,
    pathloss_exponent: f64,
    power_budget: f64,
    area_radius: f64,
    rng_seed: u64,
);

/// Outcome of the alternating optimization.
#[pyclass(name = "SolveResult", module = "covert_aoi", frozen)]
struct PySolveResult {
    inner: solver::SolveResult,
}

#[pymethods]
impl PySolveResult {
    /// `order[k]` is the user decoded at SIC position `k`.
    #[getter]
    fn order(&self) -> Vec<usize> {
        self.inner.order.clone()
    }

    /// Powers in SIC order.
    #[getter]
    fn power(&self) -> Vec<f64> {
        self.inner.power.powers.clone()
    }

    /// Powers indexed by user.
    #[getter]
    fn user_powers(&self) -> Vec<f64> {
        self.inner.user_powers().powers
    }

    /// Ages in SIC order.
    #[getter]
    fn aoi(&self) -> Vec<f64> {
        self.inner.aoi.values.clone()
    }

    #[getter]
    fn user_aoi(&self) -> Vec<f64> {
        self.inner.user_aoi()
    }

    #[getter]
    fn avg_aoi(&self) -> f64 {
        self.inner.avg_aoi
    }

    #[getter]
    fn avg_aoi_history(&self) -> Vec<f64> {
        self.inner.avg_aoi_history.clone()
    }

    #[getter]
    fn outer_iterations(&self) -> usize {
        self.inner.outer_iterations
    }

    #[getter]
    fn sca_iterations_total(&self) -> usize {
        self.inner.sca_iterations_total
    }

    /// One of `"Converged"`, `"Infeasible"`, `"MaxIterations"`.
    #[getter]
    fn status(&self) -> String {
        format!("{:?}", self.inner.status)
    }

    #[getter]
    fn covert_margin(&self) -> f64 {
        self.inner.covert_margin
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(status={:?}, avg_aoi={:e}, power={:?})",
            self.inner.status, self.inner.avg_aoi, self.inner.power.powers
        )
    }
}

/// Returns `(optimal_threshold, min_total_error)` of Willie's radiometer.
#[pyfunction]
fn optimal_detection(total_power: f64, willie_gain: f64, nominal: f64, factor: f64) -> PyResult<(f64, f64)> {
    let r = detection::optimal_detection(total_power, willie_gain, &nu(nominal, factor)?);
    Ok((r.optimal_threshold, r.min_total_error))
}

#[pyfunction]
fn total_error(threshold: f64, total_power: f64, willie_gain: f64, nominal: f64, factor: f64) -> PyResult<f64> {
    Ok(detection::total_error(threshold, total_power, willie_gain, &nu(nominal, factor)?))
}

/// Largest total power that keeps Willie's minimum error at `1 - covert_budget`.
#[pyfunction]
fn covert_power_cap(willie_gain: f64, nominal: f64, factor: f64, covert_budget: f64) -> PyResult<f64> {
    Ok(detection::covert_power_cap(willie_gain, &nu(nominal, factor)?, covert_budget))
}

/// Ascending-gain SIC decoding order.
#[pyfunction]
fn sic_order(gains: Vec<f64>) -> Vec<usize> {
    noma::sic_order(&gains)
}

/// Spectral efficiencies (bits/s/Hz) for powers and gains in SIC order.
#[pyfunction]
fn rates(powers: Vec<f64>, gains: Vec<f64>, noise: f64) -> PyResult<Vec<f64>> {
    if powers.len() != gains.len() {
        return Err(value_err("powers and gains differ in length"));
    }
    Ok(noma::rates(&PowerAllocation::new(powers), &gains, noise))
}

/// Concave lower bound on user `k`'s rate, tight at `anchor`.
#[pyfunction]
fn linearized_rate(k: usize, powers: Vec<f64>, anchor: Vec<f64>, gains: Vec<f64>, noise: f64) -> PyResult<f64> {
    if powers.len() != gains.len() || anchor.len() != gains.len() || k >= gains.len() {
        return Err(value_err("inconsistent lengths or user index"));
    }
    Ok(noma::linearized_rate(
        k,
        &PowerAllocation::new(powers),
        &PowerAllocation::new(anchor),
        &gains,
        noise,
    ))
}

/// Runs the alternating AoI / power optimization on one channel state.
#[pyfunction]
fn solve(py: Python<'_>, config: &PyScenario, gains: Vec<f64>, willie_gain: f64) -> PyResult<PySolveResult> {
    if gains.is_empty() || gains.iter().any(|&g| !(g > 0.0)) || !(willie_gain > 0.0) {
        return Err(value_err("gains must be positive and non-empty"));
    }
    let cfg = config.inner.clone();
    let inner = py.detach(move || solver::alternating_solve(&gains, willie_gain, &cfg));
    Ok(PySolveResult { inner })
}

/// Re-checks a result against the exact constraints; returns
/// `(passed, worst_violation)`.
#[pyfunction]
fn audit(result: &PySolveResult, config: &PyScenario, gains: Vec<f64>, willie_gain: f64) -> (bool, f64) {
    let r = solver::verify_kkt_feasibility(&result.inner, &gains, willie_gain, &config.inner);
    (r.passed, r.worst_violation)
}

/// Draws the topology and first-slot channel for `seed`; returns
/// `(user_gains, willie_gain)`.
#[pyfunction]
fn sample_channel(config: &PyScenario, seed: u64) -> (Vec<f64>, f64) {
    let cfg = &config.inner;
    let topo = sample_topology(cfg, &mut substream(seed, 0));
    let ch = next_channel_state(&topo, cfg, 0, &mut substream(seed, 1));
    (ch.user_gains, ch.willie_gain)
}

#[pyfunction]
fn fragment_packet(required: f64, slot_len: f64) -> PyResult<usize> {
    simulation::fragment_packet(required, slot_len).map_err(value_err)
}

type Row = (f64, String, f64, f64, usize, usize);

fn to_rows(rows: Vec<experiments::ResultRow>) -> Vec<Row> {
    rows.into_iter()
        .map(|r| (r.value, r.metric, r.mean, r.stderr, r.trials, r.excluded))
        .collect()
}

/// Average AoI versus user count. Rows are
/// `(value, metric, mean, stderr, trials, excluded)`.
#[pyfunction]
fn sweep_users(
    py: Python<'_>,
    config: &PyScenario,
    k_values: Vec<usize>,
    p_max_values: Vec<f64>,
    trials: usize,
    seed: u64,
) -> PyResult<Vec<Row>> {
    let mut file = ConfigFile {
        scenario: config.inner.clone(),
        ..ConfigFile::default()
    };
    file.sweep_users.k_values = k_values;
    file.sweep_users.p_max_values = p_max_values;
    file.sweep_users.trials = trials;
    let spec = SweepSpec::users(&file, seed);
    py.detach(move || experiments::sweep_users(&spec))
        .map(to_rows)
        .map_err(value_err)
}

/// Willie's minimum error versus power budget, per Willie distance.
#[pyfunction]
fn sweep_power(
    py: Python<'_>,
    config: &PyScenario,
    p_max_values: Vec<f64>,
    willie_distances: Vec<f64>,
    trials: usize,
    seed: u64,
) -> PyResult<Vec<Row>> {
    let mut file = ConfigFile {
        scenario: config.inner.clone(),
        ..ConfigFile::default()
    };
    file.sweep_power.num_users = config.inner.num_users;
    file.sweep_power.p_max_values = p_max_values;
    file.sweep_power.willie_distances = willie_distances;
    file.sweep_power.trials = trials;
    let spec = SweepSpec::power(&file, seed);
    py.detach(move || experiments::sweep_power(&spec))
        .map(to_rows)
        .map_err(value_err)
}

/// Paired AoC-aware / static-power run. Returns
/// `(rows, aware_violations, static_violations)` where each row is
/// `(slot, h_aw, pa_aware, pa_static, xi_aware, xi_static, threshold)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn run_fig5(
    py: Python<'_>,
    config: &PyScenario,
    seed: u64,
    num_slots: usize,
) -> PyResult<(Vec<(u64, f64, f64, f64, f64, f64, f64)>, usize, usize)> {
    let cfg = config.inner.clone();
    let run = py
        .detach(move || experiments::run_fig5(&cfg, seed, num_slots))
        .map_err(value_err)?;
    let rows = run
        .rows
        .iter()
        .map(|r| (r.slot, r.h_aw, r.pa_aware, r.pa_static, r.xi_aware, r.xi_static, r.threshold))
        .collect();
    Ok((rows, run.aware_violations(), run.static_violations()))
}

#[pyfunction(name = "db_to_linear")]
fn py_db_to_linear(db: f64) -> f64 {
    db_to_linear(db)
}

#[pyfunction(name = "linear_to_db")]
fn py_linear_to_db(x: f64) -> f64 {
    linear_to_db(x)
}

#[pymodule]
#[pyo3(name = "covert_aoi")]
pub fn covert_aoi_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(optimal_detection, m)?)?;
    m.add_function(wrap_pyfunction!(total_error, m)?)?;
    m.add_function(wrap_pyfunction!(covert_power_cap, m)?)?;
    m.add_function(wrap_pyfunction!(sic_order, m)?)?;
    m.add_function(wrap_pyfunction!(rates, m)?)?;
    m.add_function(wrap_pyfunction!(linearized_rate, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(audit, m)?)?;
    m.add_function(wrap_pyfunction!(sample_channel, m)?)?;
    m.add_function(wrap_pyfunction!(fragment_packet, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_users, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_power, m)?)?;
    m.add_function(wrap_pyfunction!(run_fig5, m)?)?;
    m.add_function(wrap_pyfunction!(py_db_to_linear, m)?)?;
    m.add_function(wrap_pyfunction!(py_linear_to_db, m)?)?;
    Ok(())
}

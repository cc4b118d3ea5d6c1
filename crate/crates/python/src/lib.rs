//! Python bindings: configuration, scenarios, the five schemes, sweeps and
//! the theory checks.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ma_spectrum::beamforming;
use ma_spectrum::channel::{self, generate_scenario};
use ma_spectrum::harness::{self, Scheme, SweepAxis, SweepSpec};
use ma_spectrum::rng::{seeded_rng, streams};
use ma_spectrum::theory;
use ma_spectrum::{Apv, ComplexVec, Point, ScenarioConfig, SolveReport};

fn py_err(e: ma_spectrum::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_vec(v: &[Complex64]) -> ComplexVec {
    ComplexVec::from_column_slice(v)
}

fn to_apv(positions: &[(f64, f64)]) -> Apv {
    Apv::unchecked(positions.iter().map(|&(x, y)| Point::new(x, y)).collect())
}

fn from_apv(apv: &Apv) -> Vec<(f64, f64)> {
    apv.positions().iter().map(|p| (p.x, p.y)).collect()
}

/// Simulation configuration. All powers are in watts; see `from_toml` for
/// the dBm aliases.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: ScenarioConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        Self { inner: ScenarioConfig::default() }
    }

    #[staticmethod]
    fn desk() -> Self {
        Self { inner: ScenarioConfig::desk() }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let inner = ScenarioConfig::from_toml_str(text).map_err(py_err)?;
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(py_err)
    }

    #[getter]
    fn n_antennas(&self) -> usize {
        self.inner.n_antennas
    }
    #[setter]
    fn set_n_antennas(&mut self, v: usize) {
        self.inner.n_antennas = v;
    }
    #[getter]
    fn k_prs(&self) -> usize {
        self.inner.k_prs
    }
    #[setter]
    fn set_k_prs(&mut self, v: usize) {
        self.inner.k_prs = v;
    }
    #[getter]
    fn region_size(&self) -> f64 {
        self.inner.region_size
    }
    #[setter]
    fn set_region_size(&mut self, v: f64) {
        self.inner.region_size = v;
    }
    #[getter]
    fn wavelength(&self) -> f64 {
        self.inner.wavelength
    }
    #[getter]
    fn min_spacing(&self) -> f64 {
        self.inner.min_spacing
    }
    #[getter]
    fn grid_points_per_axis(&self) -> usize {
        self.inner.grid_points_per_axis
    }
    #[setter]
    fn set_grid_points_per_axis(&mut self, v: usize) {
        self.inner.grid_points_per_axis = v;
    }
    #[getter]
    fn p_max(&self) -> f64 {
        self.inner.p_max
    }
    #[getter]
    fn noise_power(&self) -> f64 {
        self.inner.noise_power
    }
    #[getter]
    fn it_threshold(&self) -> f64 {
        self.inner.it_threshold
    }
    #[setter]
    fn set_it_threshold(&mut self, v: f64) {
        self.inner.it_threshold = v;
    }
    #[getter]
    fn paths_per_receiver(&self) -> usize {
        self.inner.paths_per_receiver
    }
    #[setter]
    fn set_paths_per_receiver(&mut self, v: usize) {
        self.inner.paths_per_receiver = v;
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(n_antennas={}, k_prs={}, region_size={}, grid_points_per_axis={})",
            self.inner.n_antennas, self.inner.k_prs, self.inner.region_size, self.inner.grid_points_per_axis
        )
    }
}

/// One channel realisation: path sets for the secondary receiver and every
/// primary receiver.
#[pyclass(name = "Scenario", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: channel::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn generate(cfg: &PyConfig, seed: u64) -> Self {
        Self {
            inner: generate_scenario(&cfg.inner, &mut seeded_rng(seed, streams::SCENARIO)),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: channel::Scenario::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    #[getter]
    fn distances(&self) -> Vec<f64> {
        self.inner.distances.clone()
    }

    /// Channel vector of receiver `receiver` (0 = secondary receiver,
    /// `k >= 1` = primary receiver k) at the given positions.
    fn channel(&self, positions: Vec<(f64, f64)>, receiver: usize, wavelength: f64) -> PyResult<Vec<Complex64>> {
        let apv = to_apv(&positions);
        let h = match receiver {
            0 => self.inner.sr_channel(&apv, wavelength),
            k => self.inner.pr_channel(&apv, k - 1, wavelength).map_err(py_err)?,
        };
        Ok(h.iter().copied().collect())
    }
}

#[pyclass(name = "Report", skip_from_py_object)]
struct PyReport {
    inner: SolveReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn scheme(&self) -> String {
        self.inner.scheme.clone()
    }
    #[getter]
    fn snr(&self) -> f64 {
        self.inner.snr
    }
    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }
    #[getter]
    fn interference(&self) -> Vec<f64> {
        self.inner.interference.clone()
    }
    #[getter]
    fn objective_trace(&self) -> Vec<f64> {
        self.inner.objective_trace.clone()
    }
    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        from_apv(&self.inner.apv)
    }
    #[getter]
    fn beamformer(&self) -> Vec<Complex64> {
        self.inner.beamformer.vector().iter().copied().collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(scheme={:?}, snr_db={:.3}, feasible={})",
            self.inner.scheme, self.inner.snr_db, self.inner.feasible
        )
    }
}

/// Runs `scheme` (one of ao, pso, mrt, zf, fpa) with random streams derived
/// from `seed`.
#[pyfunction]
fn run_scheme(scheme: &str, scenario: &PyScenario, cfg: &PyConfig, seed: u64) -> PyResult<PyReport> {
    let scheme: Scheme = scheme.parse().map_err(py_err)?;
    let inner = harness::run_scheme(scheme, &scenario.inner, &cfg.inner, seed).map_err(py_err)?;
    Ok(PyReport { inner })
}

#[pyfunction]
fn mrt(h0: Vec<Complex64>, p_max: f64) -> PyResult<Vec<Complex64>> {
    let w = beamforming::mrt(&to_vec(&h0), p_max).map_err(py_err)?;
    Ok(w.vector().iter().copied().collect())
}

#[pyfunction]
fn zf(h0: Vec<Complex64>, pr_channels: Vec<Vec<Complex64>>, p_max: f64) -> PyResult<Vec<Complex64>> {
    let prs: Vec<ComplexVec> = pr_channels.iter().map(|h| to_vec(h)).collect();
    let sol = beamforming::zf(&to_vec(&h0), &prs, p_max).map_err(py_err)?;
    Ok(sol.beamformer.vector().iter().copied().collect())
}

/// Runs a sweep and returns the trial rows as dictionaries.
#[pyfunction]
#[pyo3(signature = (cfg, axis, values, trials, seed, schemes=None))]
fn run_sweep<'py>(
    py: Python<'py>,
    cfg: &PyConfig,
    axis: &str,
    values: Vec<f64>,
    trials: usize,
    seed: u64,
    schemes: Option<&str>,
) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
    let axis: SweepAxis = axis.parse().map_err(py_err)?;
    let mut spec = SweepSpec::new(axis, trials, seed);
    spec.values = values;
    if let Some(s) = schemes {
        spec.schemes = Scheme::parse_list(s).map_err(py_err)?;
    }
    let res = py
        .detach(|| harness::run_sweep(&cfg.inner, &spec))
        .map_err(py_err)?;
    res.rows
        .iter()
        .map(|r| {
            let d = pyo3::types::PyDict::new(py);
            d.set_item("sweep_axis", &r.sweep_axis)?;
            d.set_item("axis_value", r.axis_value)?;
            d.set_item("scheme", &r.scheme)?;
            d.set_item("trial", r.trial)?;
            d.set_item("seed", r.seed)?;
            d.set_item("snr_db", r.snr_db)?;
            d.set_item("max_interference_dbm", r.max_interference_dbm)?;
            d.set_item("iterations", r.iterations)?;
            d.set_item("feasible", r.feasible)?;
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn beam_gain(positions: Vec<(f64, f64)>, theta: f64, phi: f64, sr_dir: (f64, f64), wavelength: f64) -> f64 {
    theory::beam_gain(&to_apv(&positions), theta, phi, sr_dir, wavelength)
}

#[pyfunction]
fn prime_factors(n: u64) -> Vec<u64> {
    theory::prime_factors(n)
}

/// Two-antenna spacing construction. Returns `(positions or None,
/// certificate as JSON)`.
#[pyfunction]
fn theorem1_construct(
    scenario: &PyScenario,
    cfg: &PyConfig,
    d_max: u64,
    seed: u64,
) -> PyResult<(Option<Vec<(f64, f64)>>, String)> {
    let out = theory::theorem1_construct(&scenario.inner, &cfg.inner, d_max, &mut seeded_rng(seed, streams::THEORY))
        .map_err(py_err)?;
    let cert = serde_json::to_string(&out.certificate).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok((out.apv.as_ref().map(from_apv), cert))
}

#[pyfunction]
fn dbm_to_watts(dbm: f64) -> f64 {
    ma_spectrum::dbm_to_watts(dbm)
}

#[pyfunction]
fn watts_to_dbm(watts: f64) -> f64 {
    ma_spectrum::watts_to_dbm(watts)
}

#[pymodule]
fn maspectrum(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run_scheme, m)?)?;
    m.add_function(wrap_pyfunction!(mrt, m)?)?;
    m.add_function(wrap_pyfunction!(zf, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(beam_gain, m)?)?;
    m.add_function(wrap_pyfunction!(prime_factors, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_construct, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_to_watts, m)?)?;
    m.add_function(wrap_pyfunction!(watts_to_dbm, m)?)?;
    Ok(())
}

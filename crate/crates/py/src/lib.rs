//! Python bindings: load scenarios, run them, sweep parameters and query
//! the analytic bound and shaper arithmetic.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qosnp_sim::harness::{self, HarnessError, RunRecord, ScenarioConfig, SweepAxis, SweepParam};
use qosnp_sim::net::{self, CbsState, StreamId, GIGABIT};
use qosnp_sim::sim::SimTime;
use qosnp_sim::world::SetupStatus;

fn err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Invalid(_) | HarnessError::InapplicableParameter { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn status_str(s: SetupStatus) -> &'static str {
    match s {
        SetupStatus::Connected => "connected",
        SetupStatus::Failed => "failed",
        SetupStatus::Pending => "pending",
        SetupStatus::NotStarted => "not_started",
    }
}

/// A parsed, validated scenario.
#[pyclass(name = "Scenario", module = "qosnp", frozen)]
struct PyScenario {
    cfg: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    #[getter]
    fn name(&self) -> &str {
        &self.cfg.name
    }

    #[getter]
    fn hash(&self) -> String {
        self.cfg.hash()
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.cfg.seeds()
    }

    #[getter]
    fn t_end_ns(&self) -> u64 {
        self.cfg.t_end().as_nanos()
    }

    /// Counts of nodes, links, services, subscriptions and cross-traffic flows.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let t = self.cfg.topology_description().map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("nodes", t.nodes.len())?;
        d.set_item("links", t.links.len())?;
        d.set_item("services", t.services.len())?;
        d.set_item("subscriptions", t.subscriptions.len())?;
        d.set_item("cross_traffic", t.cross_traffic.len())?;
        Ok(d)
    }

    /// Copy with one sweep parameter applied.
    fn with_param(&self, param: &str, value: u64) -> PyResult<PyScenario> {
        let p: SweepParam = param
            .parse()
            .map_err(|e: String| PyValueError::new_err(e))?;
        Ok(PyScenario {
            cfg: self.cfg.with_param(p, value).map_err(err)?,
        })
    }

    /// Copy with a different simulated duration.
    fn with_t_end_ns(&self, t_end_ns: u64) -> PyScenario {
        let mut cfg = self.cfg.clone();
        cfg.run.t_end = qosnp_sim::sim::SimDuration::from_nanos(t_end_ns);
        PyScenario { cfg }
    }

    #[pyo3(signature = (seed = None))]
    fn run(&self, py: Python<'_>, seed: Option<u64>) -> PyResult<PyRun> {
        let seed = seed.unwrap_or(self.cfg.run.seed);
        let cfg = &self.cfg;
        let rec = py
            .detach(|| harness::run_scenario(cfg, seed, None))
            .map_err(err)?;
        Ok(PyRun { rec })
    }

    /// Analytic worst-case latency of a reserved stream in nanoseconds.
    fn bound_ns(&self, stream: u32) -> PyResult<u64> {
        Ok(harness::scenario_bound(&self.cfg, StreamId(stream))
            .map_err(err)?
            .as_nanos())
    }

    /// Cartesian sweep over `axes`, a list of (parameter, values) pairs.
    #[pyo3(signature = (axes, seeds = None))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        axes: Vec<(String, Vec<u64>)>,
        seeds: Option<Vec<u64>>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let axes = axes
            .into_iter()
            .map(|(p, values)| {
                let param = p.parse().map_err(|e: String| PyValueError::new_err(e))?;
                Ok(SweepAxis { param, values })
            })
            .collect::<PyResult<Vec<_>>>()?;
        let seeds = seeds.unwrap_or_else(|| self.cfg.seeds());
        let cfg = &self.cfg;
        let rows = py
            .detach(|| harness::sweep(cfg, &axes, &seeds))
            .map_err(err)?;
        rows.iter()
            .map(|r| {
                let d = PyDict::new(py);
                for (a, v) in axes.iter().zip(&r.values) {
                    d.set_item(a.param.as_str(), v)?;
                }
                d.set_item("seed", r.seed)?;
                d.set_item("subscriptions", r.subscriptions)?;
                d.set_item("connected", r.connected)?;
                d.set_item("failed", r.failed)?;
                d.set_item("setup_min_ns", r.setup_min_ns)?;
                d.set_item("setup_avg_ns", r.setup_avg_ns)?;
                d.set_item("setup_max_ns", r.setup_max_ns)?;
                d.set_item("latency_samples", r.latency_samples)?;
                d.set_item("latency_p99_ns", r.latency_p99_ns)?;
                d.set_item("latency_max_ns", r.latency_max_ns)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Scenario({:?}, hash={})", self.cfg.name, self.cfg.hash())
    }
}

/// Results of one seed.
#[pyclass(name = "Run", module = "qosnp", frozen)]
struct PyRun {
    rec: RunRecord,
}

#[pymethods]
impl PyRun {
    #[getter]
    fn seed(&self) -> u64 {
        self.rec.seed
    }

    #[getter]
    fn events(&self) -> u64 {
        self.rec.stats.events_processed
    }

    #[getter]
    fn conservation_holds(&self) -> bool {
        self.rec.conservation.holds()
    }

    /// One dict per subscription with its status and setup timeline.
    fn setups<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.rec
            .metrics
            .setups
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("name", &self.rec.subscription_names[s.subscription])?;
                d.set_item("service", s.service.0)?;
                d.set_item("class", s.class.as_str())?;
                d.set_item("status", status_str(s.status))?;
                d.set_item("start_ns", s.start.as_nanos())?;
                d.set_item("negotiation_ns", s.negotiation_time().map(|x| x.as_nanos()))?;
                d.set_item("establishment_ns", s.establishment().map(|x| x.as_nanos()))?;
                d.set_item("setup_ns", s.setup_time().map(|x| x.as_nanos()))?;
                d.set_item("reason", s.reason.as_deref())?;
                Ok(d)
            })
            .collect()
    }

    /// End-to-end latencies, optionally restricted to one class name.
    #[pyo3(signature = (class_name = None))]
    fn latencies_ns(&self, class_name: Option<&str>) -> Vec<u64> {
        self.rec
            .metrics
            .latencies
            .iter()
            .filter(|l| class_name.is_none_or(|c| l.class.as_str() == c))
            .map(|l| l.latency().as_nanos())
            .collect()
    }

    fn setup_csv(&self) -> PyResult<String> {
        let bytes = harness::setup_csv(std::slice::from_ref(&self.rec)).map_err(err)?;
        String::from_utf8(bytes).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Credit-based shaper state for experimenting with the arithmetic.
#[pyclass(name = "CreditShaper", module = "qosnp")]
struct PyShaper {
    inner: CbsState,
}

#[pymethods]
impl PyShaper {
    #[new]
    #[pyo3(signature = (idle_slope_bps, rate_bps = GIGABIT))]
    fn new(idle_slope_bps: u64, rate_bps: u64) -> PyResult<Self> {
        if rate_bps == 0 || idle_slope_bps > rate_bps {
            return Err(PyValueError::new_err(
                "need 0 <= idle slope <= rate and rate > 0",
            ));
        }
        Ok(PyShaper {
            inner: CbsState::new(idle_slope_bps, rate_bps, SimTime::ZERO),
        })
    }

    fn advance(&mut self, now_ns: u64, backlogged: bool) {
        self.inner.advance(SimTime::from_nanos(now_ns), backlogged);
    }

    fn start_transmission(&mut self, now_ns: u64, backlogged: bool) {
        self.inner
            .start_transmission(SimTime::from_nanos(now_ns), backlogged);
    }

    fn end_transmission(&mut self, now_ns: u64, backlogged_after: bool) {
        self.inner
            .end_transmission(SimTime::from_nanos(now_ns), backlogged_after);
    }

    #[getter]
    fn credit_bits(&self) -> f64 {
        self.inner.credit_bits()
    }

    #[getter]
    fn can_send(&self) -> bool {
        self.inner.can_send()
    }

    /// Nanoseconds until credit is non-negative at the idle slope.
    fn time_to_non_negative_ns(&self) -> u64 {
        self.inner.time_to_non_negative().as_nanos()
    }
}

#[pyfunction]
fn load_scenario(path: &str) -> PyResult<PyScenario> {
    Ok(PyScenario {
        cfg: harness::load_scenario(path).map_err(err)?,
    })
}

/// Parses scenario text; relative file references resolve against `base_dir`.
#[pyfunction]
#[pyo3(signature = (name, text, base_dir = "."))]
fn parse_scenario(name: &str, text: &str, base_dir: &str) -> PyResult<PyScenario> {
    Ok(PyScenario {
        cfg: harness::parse_scenario(name, text, Path::new(base_dir)).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (size_bytes, rate_bps = GIGABIT))]
fn transmission_time_ns(size_bytes: u32, rate_bps: u64) -> PyResult<u64> {
    net::transmission_time(size_bytes, rate_bps)
        .map(|d| d.as_nanos())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn qosnp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRun>()?;
    m.add_class::<PyShaper>()?;
    m.add_function(wrap_pyfunction!(load_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(parse_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(transmission_time_ns, m)?)?;
    m.add("SCHEMA_VERSION", harness::SCHEMA_VERSION)?;
    Ok(())
}

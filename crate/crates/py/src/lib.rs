//! Python bindings for `cvidm`.
//!
//! Parameter sets are plain classes with read/write attributes. Whole runs
//! (simulation, map sweeps, verification) take a TOML configuration string in
//! the same format as the command-line tool.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cvidm::config::RunConfig;
use cvidm::map::{region_area, stability_map, AxisRange, GridSpec};
use cvidm::model;
use cvidm::sim::{measure_growth, run};
use cvidm::stability::{analytic_partials, linear_coefficients, stability_lhs, StabilityVerdict};
use cvidm::{EquilibriumState, Neighbor, VehicleClass, VehicleState, WeightScheme};

fn err(e: cvidm::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "IdmParams", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyIdmParams {
    desired_velocity: f64,
    safe_time_headway: f64,
    max_acceleration: f64,
    comfortable_deceleration: f64,
    acceleration_exponent: f64,
    jam_distance: f64,
    vehicle_length: f64,
    reaction_time: f64,
}

impl From<cvidm::IdmParams> for PyIdmParams {
    fn from(p: cvidm::IdmParams) -> Self {
        Self {
            desired_velocity: p.desired_velocity,
            safe_time_headway: p.safe_time_headway,
            max_acceleration: p.max_acceleration,
            comfortable_deceleration: p.comfortable_deceleration,
            acceleration_exponent: p.acceleration_exponent,
            jam_distance: p.jam_distance,
            vehicle_length: p.vehicle_length,
            reaction_time: p.reaction_time,
        }
    }
}

impl PyIdmParams {
    fn inner(&self) -> cvidm::IdmParams {
        cvidm::IdmParams {
            desired_velocity: self.desired_velocity,
            safe_time_headway: self.safe_time_headway,
            max_acceleration: self.max_acceleration,
            comfortable_deceleration: self.comfortable_deceleration,
            acceleration_exponent: self.acceleration_exponent,
            jam_distance: self.jam_distance,
            vehicle_length: self.vehicle_length,
            reaction_time: self.reaction_time,
        }
    }
}

#[pymethods]
impl PyIdmParams {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = Self::from(cvidm::IdmParams::default());
        if let Some(kw) = kwargs {
            for (k, v) in kw.iter() {
                let name: String = k.extract()?;
                let x: f64 = v.extract()?;
                match name.as_str() {
                    "desired_velocity" => p.desired_velocity = x,
                    "safe_time_headway" => p.safe_time_headway = x,
                    "max_acceleration" => p.max_acceleration = x,
                    "comfortable_deceleration" => p.comfortable_deceleration = x,
                    "acceleration_exponent" => p.acceleration_exponent = x,
                    "jam_distance" => p.jam_distance = x,
                    "vehicle_length" => p.vehicle_length = x,
                    "reaction_time" => p.reaction_time = x,
                    _ => return Err(PyValueError::new_err(format!("unknown IDM parameter `{name}`"))),
                }
            }
        }
        Ok(p)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner().validate().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("IdmParams({:?})", self.inner())
    }
}

/// Connected-vehicle feedback settings. `weights` is one of `geometric`
/// (uses `ratio`), `inverse_distance_power` (`exponent`, `reference_gap`)
/// or `uniform_constant` (`value`).
#[pyclass(name = "ConnectivityParams", skip_from_py_object)]
#[derive(Clone)]
struct PyConnectivityParams {
    inner: cvidm::ConnectivityParams,
}

#[pymethods]
impl PyConnectivityParams {
    #[new]
    #[pyo3(signature = (kv=0.3, ka=0.3, max_neighbors=2, comm_range=1000.0, weights="geometric", ratio=0.5, exponent=1.0, reference_gap=10.0, value=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kv: f64,
        ka: f64,
        max_neighbors: usize,
        comm_range: f64,
        weights: &str,
        ratio: f64,
        exponent: f64,
        reference_gap: f64,
        value: f64,
    ) -> PyResult<Self> {
        let weights = match weights {
            "geometric" => WeightScheme::Geometric { ratio },
            "inverse_distance_power" => WeightScheme::InverseDistancePower {
                exponent,
                reference_gap,
            },
            "uniform_constant" => WeightScheme::UniformConstant { value },
            other => return Err(PyValueError::new_err(format!("unknown weight scheme `{other}`"))),
        };
        Ok(Self {
            inner: cvidm::ConnectivityParams {
                kv,
                ka,
                max_neighbors,
                comm_range,
                weights,
            },
        })
    }

    /// Settings under which the model reduces to plain IDM.
    #[staticmethod]
    fn disabled() -> Self {
        Self {
            inner: cvidm::ConnectivityParams::disabled(),
        }
    }

    #[getter]
    fn kv(&self) -> f64 {
        self.inner.kv
    }
    #[setter]
    fn set_kv(&mut self, x: f64) {
        self.inner.kv = x;
    }
    #[getter]
    fn ka(&self) -> f64 {
        self.inner.ka
    }
    #[setter]
    fn set_ka(&mut self, x: f64) {
        self.inner.ka = x;
    }
    #[getter]
    fn max_neighbors(&self) -> usize {
        self.inner.max_neighbors
    }
    #[setter]
    fn set_max_neighbors(&mut self, m: usize) {
        self.inner.max_neighbors = m;
    }
    #[getter]
    fn comm_range(&self) -> f64 {
        self.inner.comm_range
    }
    #[setter]
    fn set_comm_range(&mut self, x: f64) {
        self.inner.comm_range = x;
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("ConnectivityParams({:?})", self.inner)
    }
}

fn idm_or_default(p: Option<&PyIdmParams>) -> cvidm::IdmParams {
    p.map(PyIdmParams::inner).unwrap_or_default()
}

fn cp_or_default(cp: Option<&PyConnectivityParams>) -> cvidm::ConnectivityParams {
    cp.map(|c| c.inner).unwrap_or_default()
}

fn class_of(symbol: &str) -> PyResult<VehicleClass> {
    match symbol {
        "C" | "c" => Ok(VehicleClass::Connected),
        "H" | "h" => Ok(VehicleClass::HumanDriven),
        _ => Err(PyValueError::new_err(format!("`{symbol}` is not a vehicle class (C or H)"))),
    }
}

fn config(toml: Option<&str>) -> PyResult<RunConfig> {
    RunConfig::from_toml(toml.unwrap_or("")).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (s, v, dv, idm=None))]
fn idm_acceleration(s: f64, v: f64, dv: f64, idm: Option<&PyIdmParams>) -> PyResult<f64> {
    model::idm_acceleration(s, v, dv, &idm_or_default(idm)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (v, dv, idm=None))]
fn desired_gap(v: f64, dv: f64, idm: Option<&PyIdmParams>) -> PyResult<f64> {
    model::desired_gap(v, dv, &idm_or_default(idm)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (v, idm=None))]
fn equilibrium_gap(v: f64, idm: Option<&PyIdmParams>) -> PyResult<f64> {
    model::equilibrium_gap(v, &idm_or_default(idm)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (s, idm=None))]
fn equilibrium_speed(s: f64, idm: Option<&PyIdmParams>) -> PyResult<f64> {
    model::equilibrium_speed(s, &idm_or_default(idm)).map_err(err)
}

/// `(idm, cv)` acceleration terms. Neighbours are `(gap, speed, acceleration)`
/// tuples, nearest first.
#[pyfunction]
#[pyo3(signature = (gap, speed, leader_speed, vehicle_class="C", neighbors=Vec::new(), idm=None, connectivity=None))]
fn acceleration(
    gap: f64,
    speed: f64,
    leader_speed: f64,
    vehicle_class: &str,
    neighbors: Vec<(f64, f64, f64)>,
    idm: Option<&PyIdmParams>,
    connectivity: Option<&PyConnectivityParams>,
) -> PyResult<(f64, f64)> {
    let p = idm_or_default(idm);
    let state = |position, velocity, class| VehicleState {
        position,
        velocity,
        acceleration: 0.0,
        class,
        length: p.vehicle_length,
    };
    let follower = state(0.0, speed, class_of(vehicle_class)?);
    let leader = state(gap + p.vehicle_length, leader_speed, VehicleClass::HumanDriven);
    let neighbors: Vec<Neighbor> = neighbors
        .into_iter()
        .map(|(gap, velocity, acceleration)| Neighbor {
            gap,
            velocity,
            acceleration,
        })
        .collect();
    let b = model::acceleration_breakdown(&follower, &leader, &neighbors, &p, &cp_or_default(connectivity))
        .map_err(err)?;
    Ok((b.idm, b.cv))
}

/// `(g1, g2, g3)` at the equilibrium with speed `v`.
#[pyfunction]
#[pyo3(signature = (v, idm=None))]
fn partials(v: f64, idm: Option<&PyIdmParams>) -> PyResult<(f64, f64, f64)> {
    let p = idm_or_default(idm);
    let eq = EquilibriumState::at_speed(v, &p).map_err(err)?;
    let d = analytic_partials(&p, &eq);
    Ok((d.g1, d.g2, d.g3))
}

/// Criterion at one parameter point: a dict with the inputs, `lhs` and
/// `verdict` (`stable`, `unstable` or `marginal`).
#[pyfunction]
#[pyo3(signature = (v_e=20.0, neighbors=2, cv_spacing=3, idm=None, connectivity=None))]
fn criterion<'py>(
    py: Python<'py>,
    v_e: f64,
    neighbors: usize,
    cv_spacing: usize,
    idm: Option<&PyIdmParams>,
    connectivity: Option<&PyConnectivityParams>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = linear_coefficients(
        &idm_or_default(idm),
        &cp_or_default(connectivity),
        v_e,
        cv_spacing,
        neighbors,
    )
    .map_err(err)?;
    let lhs = stability_lhs(&c);
    let d = PyDict::new(py);
    d.set_item("g1", c.g1)?;
    d.set_item("g2", c.g2)?;
    d.set_item("g3", c.g3)?;
    d.set_item("f4", c.f4)?;
    d.set_item("f5", c.f5)?;
    d.set_item("weight_sum", c.weight_sum)?;
    d.set_item("lhs", lhs)?;
    d.set_item("verdict", StabilityVerdict::from_lhs(lhs).verdict().as_str())?;
    Ok(d)
}

/// Sweep over `(T_d, a_m)`. Axes are `(min, max, count)`. Returns a dict with
/// `cells` as `(T_d, a_m, lhs or None, verdict)` rows and the stable `area`
/// fraction.
#[pyfunction]
#[pyo3(name = "stability_map", signature = (max_acceleration=(0.3, 2.5, 50), time_headway=(0.5, 2.5, 50), v_e=20.0, neighbors=2, cv_spacing=3, idm=None, connectivity=None))]
#[allow(clippy::too_many_arguments)]
fn stability_map_py<'py>(
    py: Python<'py>,
    max_acceleration: (f64, f64, usize),
    time_headway: (f64, f64, usize),
    v_e: f64,
    neighbors: usize,
    cv_spacing: usize,
    idm: Option<&PyIdmParams>,
    connectivity: Option<&PyConnectivityParams>,
) -> PyResult<Bound<'py, PyDict>> {
    let axis = |(min, max, count): (f64, f64, usize)| AxisRange::new(min, max, count);
    let spec = GridSpec {
        max_acceleration: axis(max_acceleration),
        time_headway: axis(time_headway),
        idm: idm_or_default(idm),
        connectivity: cp_or_default(connectivity),
        equilibrium_speed: v_e,
        cv_spacing,
        neighbors,
    };
    let grid = py.detach(|| stability_map(&spec)).map_err(err)?;
    let cells: Vec<(f64, f64, Option<f64>, &str)> = grid
        .iter()
        .map(|(t, a, c)| (t, a, c.lhs(), c.verdict().as_str()))
        .collect();
    let d = PyDict::new(py);
    d.set_item("cells", cells)?;
    d.set_item("area", region_area(&grid).map_err(err)?)?;
    Ok(d)
}

/// Runs the scenario described by a TOML configuration (defaults when
/// omitted). Returns times, per-vehicle series and the growth summary.
#[pyfunction]
#[pyo3(signature = (config_toml=None))]
fn simulate<'py>(py: Python<'py>, config_toml: Option<&str>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(config_toml)?;
    let scenario = cfg.scenario().map_err(err)?;
    let traj = py.detach(|| run(&scenario, &cfg.sim)).map_err(err)?;
    let series = |f: fn(&cvidm::sim::Sample) -> f64| -> Vec<Vec<f64>> {
        traj.samples.iter().map(|frame| frame.iter().map(f).collect()).collect()
    };
    let d = PyDict::new(py);
    d.set_item("t", &traj.times)?;
    d.set_item("classes", traj.classes.iter().map(|c| c.symbol().to_string()).collect::<Vec<_>>())?;
    d.set_item("x", series(|s| s.position))?;
    d.set_item("v", series(|s| s.velocity))?;
    d.set_item("a", series(|s| s.acceleration))?;
    let gaps: Vec<Vec<Option<f64>>> = traj
        .samples
        .iter()
        .map(|frame| frame.iter().map(|s| s.gap).collect())
        .collect();
    d.set_item("gap", gaps)?;
    d.set_item("equilibrium_gap", scenario.initial.gap)?;
    d.set_item("collision", traj.collision().map(|c| (c.time, c.follower, c.leader, c.gap)))?;
    if scenario.perturbation.is_some() {
        match measure_growth(&traj, &scenario.initial) {
            Ok(r) => {
                d.set_item("growth", r.class.as_str())?;
                d.set_item("ratio", r.ratio)?;
                d.set_item("peak_deviation", r.peak_deviation)?;
            }
            Err(cvidm::Error::Indeterminate) => d.set_item("growth", "indeterminate")?,
            Err(e) => return Err(err(e)),
        }
    }
    Ok(d)
}

/// Analytic verdicts against simulated growth for the configured points.
/// Returns one dict per point.
#[pyfunction]
#[pyo3(signature = (config_toml=None))]
fn verify<'py>(py: Python<'py>, config_toml: Option<&str>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let spec = config(config_toml)?.verify_spec();
    let report = py.detach(|| cvidm::verify::verify(&spec)).map_err(err)?;
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("neighbors", r.neighbors)?;
            d.set_item("max_acceleration", r.max_acceleration)?;
            d.set_item("time_headway", r.time_headway)?;
            d.set_item("lhs", r.lhs)?;
            d.set_item("analytic", r.analytic.as_str())?;
            d.set_item("simulated", r.simulated.as_str())?;
            d.set_item("ratio", r.ratio)?;
            d.set_item("retained", r.retained)?;
            d.set_item("agrees", r.agrees())?;
            Ok(d)
        })
        .collect()
}

/// The full default configuration as TOML.
#[pyfunction]
fn default_config() -> PyResult<String> {
    RunConfig::default().to_toml().map_err(err)
}

#[pymodule]
#[pyo3(name = "cvidm")]
fn cvidm_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyIdmParams>()?;
    m.add_class::<PyConnectivityParams>()?;
    m.add_function(wrap_pyfunction!(idm_acceleration, m)?)?;
    m.add_function(wrap_pyfunction!(desired_gap, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_gap, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium_speed, m)?)?;
    m.add_function(wrap_pyfunction!(acceleration, m)?)?;
    m.add_function(wrap_pyfunction!(partials, m)?)?;
    m.add_function(wrap_pyfunction!(criterion, m)?)?;
    m.add_function(wrap_pyfunction!(stability_map_py, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}

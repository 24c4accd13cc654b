//! Python bindings: poses, beliefs, the observation model, the filter, grouping,
//! the AMAV planner and whole-scenario runs.

use nalgebra::Matrix2;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use transformloc_core::cli::output::trace_to_csv;
use transformloc_core::error::Error;
use transformloc_core::estimation::{self, process_noise};
use transformloc_core::grouping;
use transformloc_core::scheduling;
use transformloc_core::sensing::{self, FovParams, RangeBearing, SensorNoise};
use transformloc_core::sim::config::{ScenarioConfig, Strategy};
use transformloc_core::sim::metrics::{compute_metrics, MetricsSummary};
use transformloc_core::sim::{run_strategy, SimTrace};
use transformloc_core::world::{self, MotionPrimitive, NoiseModel, Vec2};

type Point = (f64, f64);
type Mat = [[f64; 2]; 2];

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn vec2(p: Point) -> Vec2 {
    Vec2::new(p.0, p.1)
}

fn rows(m: &Matrix2<f64>) -> Mat {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn scenario(config_toml: Option<&str>) -> PyResult<ScenarioConfig> {
    match config_toml {
        Some(text) => ScenarioConfig::from_toml_str(text).map_err(py_err),
        None => Ok(ScenarioConfig::default()),
    }
}

/// AMAV pose `(x1, x2, phi)`; the heading is wrapped into (-pi, pi].
#[pyclass(frozen)]
#[derive(Clone, Copy)]
struct Pose(world::Pose);

#[pymethods]
impl Pose {
    #[new]
    fn new(x1: f64, x2: f64, phi: f64) -> Self {
        Self(world::Pose::new(x1, x2, phi))
    }

    #[getter]
    fn x1(&self) -> f64 {
        self.0.x1
    }

    #[getter]
    fn x2(&self) -> f64 {
        self.0.x2
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.0.phi
    }

    fn position(&self) -> Point {
        (self.0.x1, self.0.x2)
    }

    fn __repr__(&self) -> String {
        format!("Pose({}, {}, {})", self.0.x1, self.0.x2, self.0.phi)
    }
}

/// Gaussian position belief with a 2x2 covariance given as nested lists.
#[pyclass(frozen)]
#[derive(Clone, Copy)]
struct Belief(estimation::Belief);

#[pymethods]
impl Belief {
    #[new]
    fn new(mean: Point, cov: Mat) -> Self {
        let c = Matrix2::new(cov[0][0], cov[0][1], cov[1][0], cov[1][1]);
        Self(estimation::Belief::new(vec2(mean), c))
    }

    #[staticmethod]
    fn at_launch(position: Point, variance: f64) -> Self {
        Self(estimation::Belief::at_launch(vec2(position), variance))
    }

    #[getter]
    fn mean(&self) -> Point {
        (self.0.mean.x, self.0.mean.y)
    }

    #[getter]
    fn cov(&self) -> Mat {
        rows(&self.0.cov)
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn __repr__(&self) -> String {
        format!("Belief(mean={:?}, cov={:?})", self.mean(), self.cov())
    }
}

#[pyfunction]
fn wrap_angle(angle: f64) -> f64 {
    world::wrap_angle(angle)
}

/// Advances a pose by one unicycle step.
#[pyfunction]
#[pyo3(signature = (pose, u, omega, dt = 1.0))]
fn step_amav(pose: &Pose, u: f64, omega: f64, dt: f64) -> Pose {
    Pose(world::step_amav(&pose.0, &MotionPrimitive::new(u, omega), dt))
}

#[pyfunction]
#[pyo3(signature = (pose, point, angle_deg = 120.0, r_max = 1.0))]
fn fov_contains(pose: &Pose, point: Point, angle_deg: f64, r_max: f64) -> PyResult<bool> {
    let fov = FovParams::new(angle_deg.to_radians(), r_max).map_err(py_err)?;
    Ok(sensing::fov_contains(&pose.0, &fov, &vec2(point)))
}

/// Noiseless `(range, bearing)` of `point` seen from `pose`.
#[pyfunction]
fn predict_observation(pose: &Pose, point: Point) -> PyResult<Point> {
    let z = sensing::predict_observation(&pose.0, &vec2(point)).map_err(py_err)?;
    Ok((z.range, z.bearing))
}

#[pyfunction]
fn jacobian(pose: &Pose, point: Point) -> PyResult<Mat> {
    sensing::jacobian_h(&pose.0, &vec2(point)).map(|j| rows(&j)).map_err(py_err)
}

/// Dead-reckoning prediction with velocity-proportional process noise.
#[pyfunction]
#[pyo3(signature = (belief, v_meas, motion_fraction = 0.2, dt = 1.0))]
fn predict(belief: &Belief, v_meas: Point, motion_fraction: f64, dt: f64) -> PyResult<Belief> {
    let noise = NoiseModel::new(motion_fraction, 0.0).map_err(py_err)?;
    let v = vec2(v_meas);
    Ok(Belief(estimation::predict(&belief.0, &v, &process_noise(&v, &noise), dt)))
}

/// EKF update with one `(range, bearing)` reading taken from `pose`. The
/// measurement noise is evaluated at the reading predicted from the prior mean.
#[pyfunction]
#[pyo3(signature = (belief, z, pose, range_fraction = 0.1, bearing_fraction = 0.05))]
fn correct(belief: &Belief, z: Point, pose: &Pose, range_fraction: f64, bearing_fraction: f64) -> PyResult<Belief> {
    let noise = SensorNoise {
        range: NoiseModel::new(range_fraction, 0.0).map_err(py_err)?,
        bearing: NoiseModel::new(bearing_fraction, 0.0).map_err(py_err)?,
    };
    let expected = sensing::predict_observation(&pose.0, &belief.0.mean).map_err(py_err)?;
    let obs = RangeBearing {
        range: z.0,
        bearing: z.1,
    };
    estimation::correct(&belief.0, &obs, &pose.0, &noise.covariance(&expected))
        .map(Belief)
        .map_err(py_err)
}

/// Nearest-AMAV grouping. Returns `{"groups", "owner", "fallback"}`.
#[pyfunction]
fn assign_groups(py: Python<'_>, amavs: Vec<Point>, bmavs: Vec<Point>) -> PyResult<Py<PyAny>> {
    let a: Vec<Vec2> = amavs.into_iter().map(vec2).collect();
    let b: Vec<Vec2> = bmavs.into_iter().map(vec2).collect();
    let g = grouping::assign_groups(&a, &b).map_err(py_err)?;
    let dict = pyo3::types::PyDict::new(py);
    let groups: Vec<Vec<usize>> = g.groups.iter().map(|s| s.iter().copied().collect()).collect();
    dict.set_item("groups", groups)?;
    dict.set_item("owner", g.owner)?;
    dict.set_item("fallback", g.fallback)?;
    Ok(dict.into_any().unbind())
}

/// Best command sequence for one AMAV over its group, using the planner
/// settings of `config_toml` (default scenario when omitted). Returns
/// `([(u, omega), ...], predicted_cost)`.
#[pyfunction]
#[pyo3(signature = (start, beliefs, bmav_cmds, config_toml = None))]
fn plan_amav(
    start: &Pose,
    beliefs: Vec<Belief>,
    bmav_cmds: Vec<Point>,
    config_toml: Option<&str>,
) -> PyResult<(Vec<Point>, f64)> {
    if beliefs.len() != bmav_cmds.len() {
        return Err(PyValueError::new_err("beliefs and bmav_cmds differ in length"));
    }
    let cfg = scenario(config_toml)?.planner_config().map_err(py_err)?;
    let group: Vec<estimation::Belief> = beliefs.iter().map(|b| b.0).collect();
    let cmds: Vec<Vec2> = bmav_cmds.into_iter().map(vec2).collect();
    let plan = scheduling::plan_amav(&start.0, &group, &cmds, &cfg).map_err(py_err)?;
    Ok((plan.commands.iter().map(|c| (c.u, c.omega)).collect(), plan.predicted_cost))
}

/// Result of one simulated scenario.
#[pyclass(frozen)]
struct Run {
    trace: SimTrace,
    metrics: MetricsSummary,
}

#[pymethods]
impl Run {
    #[getter]
    fn strategy(&self) -> &'static str {
        self.trace.strategy.name()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.trace.seed
    }

    #[getter]
    fn ate_mean(&self) -> f64 {
        self.metrics.ate_mean
    }

    #[getter]
    fn ate_p50(&self) -> f64 {
        self.metrics.ate_p50
    }

    #[getter]
    fn ate_p95(&self) -> f64 {
        self.metrics.ate_p95
    }

    #[getter]
    fn xi_t(&self) -> f64 {
        self.metrics.xi_t
    }

    /// Per-BMAV ATE over steps 1..=T.
    #[getter]
    fn ate_series(&self) -> Vec<Vec<f64>> {
        self.metrics.ate_series.clone()
    }

    fn success_rate(&self, eps: f64, tau: usize) -> Option<f64> {
        self.metrics.success_rate(eps, tau)
    }

    fn observation_count(&self) -> usize {
        self.trace.observation_count()
    }

    fn metrics_json(&self) -> String {
        self.metrics.to_json()
    }

    fn trace_csv(&self) -> String {
        String::from_utf8(trace_to_csv(&self.trace)).expect("CSV output is UTF-8")
    }
}

/// Runs a scenario. `strategy` and `seed` override the values in the config.
#[pyfunction]
#[pyo3(signature = (config_toml = None, strategy = None, seed = None))]
fn simulate(py: Python<'_>, config_toml: Option<&str>, strategy: Option<&str>, seed: Option<u64>) -> PyResult<Run> {
    let mut cfg = scenario(config_toml)?;
    if let Some(s) = strategy {
        cfg.strategy = s.parse::<Strategy>().map_err(py_err)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let trace = py.detach(|| run_strategy(&cfg, cfg.strategy)).map_err(py_err)?;
    let metrics = compute_metrics(&trace, &cfg.metrics);
    Ok(Run { trace, metrics })
}

#[pymodule]
fn transformloc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Pose>()?;
    m.add_class::<Belief>()?;
    m.add_class::<Run>()?;
    m.add_function(wrap_pyfunction!(wrap_angle, m)?)?;
    m.add_function(wrap_pyfunction!(step_amav, m)?)?;
    m.add_function(wrap_pyfunction!(fov_contains, m)?)?;
    m.add_function(wrap_pyfunction!(predict_observation, m)?)?;
    m.add_function(wrap_pyfunction!(jacobian, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(correct, m)?)?;
    m.add_function(wrap_pyfunction!(assign_groups, m)?)?;
    m.add_function(wrap_pyfunction!(plan_amav, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}

//! Python bindings: networks, solves, trajectories and the projection kernel.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use sweepnet::analysis::{self, events_csv, macro_metrics, reference_volume, StrainMeasure};
use sweepnet::config::{run, RunConfig};
use sweepnet::generators::{self, GridSpec, PeriodicSpec};
use sweepnet::io;
use sweepnet::lattice::{assemble, validate_assumptions, AssembledSystem, LatticeDefinition, LoadSchedule};
use sweepnet::linalg::DEFAULT_RANK_TOL;
use sweepnet::qp::{self, PolyhedralSet, DEFAULT_QP_TOL};
use sweepnet::sweep::{safe_load_schedule, Space};
use sweepnet::trajectory::{Bound as SpringBound, SolverKind};
use sweepnet::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_)
        | Error::DimensionMismatch(_)
        | Error::Schema(_)
        | Error::InvalidInitialCondition(_)
        | Error::DegenerateSpring { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{what}: rows have different lengths")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn bounds(list: &[SpringBound]) -> Vec<(usize, String)> {
    list.iter().map(|(i, s)| (i + 1, s.as_str().to_string())).collect()
}

/// A lattice together with its load schedule.
#[pyclass(frozen, module = "sweepnet_py")]
struct Network {
    def: LatticeDefinition,
    loads: LoadSchedule,
    system: OnceLock<AssembledSystem>,
}

impl Network {
    fn wrap((def, loads): (LatticeDefinition, LoadSchedule)) -> Self {
        Network { def, loads, system: OnceLock::new() }
    }

    fn system(&self) -> PyResult<&AssembledSystem> {
        if let Some(s) = self.system.get() {
            return Ok(s);
        }
        let sys = assemble(&self.def, DEFAULT_RANK_TOL).map_err(py_err)?;
        Ok(self.system.get_or_init(|| sys))
    }
}

#[pymethods]
impl Network {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        io::load_network(path.as_ref()).map(Network::wrap).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        io::parse_network(text).map(Network::wrap).map_err(py_err)
    }

    #[staticmethod]
    fn example1() -> PyResult<Self> {
        generators::build_example1().map(Network::wrap).map_err(py_err)
    }

    /// The 15-row triangular grid with a hexagonal hole.
    #[staticmethod]
    fn grid() -> PyResult<Self> {
        generators::build_tri_grid_with_hole(&GridSpec::standard()).map(Network::wrap).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (nx=6, ny=6, jitter=0.05, seed=7))]
    fn periodic(nx: usize, ny: usize, jitter: f64, seed: u64) -> PyResult<Self> {
        let spec = PeriodicSpec { nx, ny, jitter, seed, ..PeriodicSpec::default() };
        generators::build_periodic_tri_grid(&spec).map(Network::wrap).map_err(py_err)
    }

    /// Initial stress used for the prestressed run of `example1()`.
    #[staticmethod]
    fn example1_prestress() -> Vec<f64> {
        generators::example1_prestress().iter().copied().collect()
    }

    fn to_json(&self) -> PyResult<String> {
        io::network_to_string(&self.def, &self.loads).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        io::save_network(path.as_ref(), &self.def, &self.loads).map_err(py_err)
    }

    #[getter]
    fn n_nodes(&self) -> usize {
        self.def.n_nodes()
    }

    #[getter]
    fn n_springs(&self) -> usize {
        self.def.n_springs()
    }

    #[getter]
    fn n_constraints(&self) -> usize {
        self.def.n_constraints()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.def.dim
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.loads.horizon
    }

    /// Rigidity report plus the list of violated assumptions.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = validate_assumptions(&self.def, DEFAULT_RANK_TOL).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("n", r.n)?;
        d.set_item("m", r.m)?;
        d.set_item("d", r.d)?;
        d.set_item("q", r.q)?;
        d.set_item("zero_modes", r.zero_modes)?;
        d.set_item("self_stress_states", r.self_stress_states)?;
        d.set_item("rigid_motion_dim", r.rigid_motion_dim)?;
        d.set_item("kinematically_determinate", r.kinematically_determinate)?;
        d.set_item("statically_determinate", r.statically_determinate)?;
        d.set_item("dim_u", r.dim_u())?;
        d.set_item("dim_v", r.dim_v)?;
        let failures: Vec<String> = r.failures().iter().map(|(a, why)| format!("{a}: {why}")).collect();
        d.set_item("failures", failures)?;
        Ok(d)
    }

    /// Assembles (once) and returns `(dim_u, dim_v)`.
    fn assemble(&self) -> PyResult<(usize, usize)> {
        let s = self.system()?;
        Ok((s.dim_u, s.dim_v))
    }

    /// First time at which the forces break the safe-load condition.
    fn check_safe_load(&self) -> PyResult<Option<f64>> {
        safe_load_schedule(self.system()?, &self.loads).map_err(py_err)
    }

    #[pyo3(signature = (solver="leapfrog", space="reduced", mesh=1e-4, steps=None, prestress=None))]
    fn solve(
        &self,
        py: Python<'_>,
        solver: &str,
        space: &str,
        mesh: f64,
        steps: Option<usize>,
        prestress: Option<Vec<f64>>,
    ) -> PyResult<Trajectory> {
        let solver = match solver {
            "leapfrog" => SolverKind::Leapfrog,
            "catchup" => SolverKind::CatchUp,
            other => return Err(PyValueError::new_err(format!("unknown solver '{other}'"))),
        };
        let space = match space {
            "full" => Space::Full,
            "reduced" => Space::Reduced,
            other => return Err(PyValueError::new_err(format!("unknown space '{other}'"))),
        };
        let cfg = RunConfig { solver, space, mesh, steps, ..RunConfig::default() };
        let sigma0 = prestress.map(DVector::from_vec);
        let sys = self.system()?;
        let inner = py
            .detach(|| run(sys, &self.loads, sigma0.as_ref(), &cfg))
            .map_err(py_err)?;
        Ok(Trajectory { inner })
    }

    /// Volume-averaged stress tensor of a spring stress vector.
    #[pyo3(signature = (sigma, volume=None))]
    fn total_stress(&self, sigma: Vec<f64>, volume: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
        let vol = volume.unwrap_or_else(|| reference_volume(&self.def));
        let t = analysis::total_stress(self.system()?, &DVector::from_vec(sigma), vol).map_err(py_err)?;
        Ok(rows_of(&t))
    }

    /// Macroscopic metrics of a trajectory computed on this network.
    #[pyo3(signature = (trajectory, bins=20, label="run", strain="auto"))]
    fn analyze<'py>(
        &self,
        py: Python<'py>,
        trajectory: &Trajectory,
        bins: usize,
        label: &str,
        strain: &str,
    ) -> PyResult<Bound<'py, PyDict>> {
        let measure = match strain {
            "auto" => StrainMeasure::default_for(&self.def, &self.loads),
            "time" => StrainMeasure::Time,
            other => return Err(PyValueError::new_err(format!("unknown strain measure '{other}'"))),
        };
        let vol = reference_volume(&self.def);
        let r = macro_metrics(&trajectory.inner, self.system()?, &self.loads, vol, measure, bins, label)
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("label", &r.label)?;
        d.set_item("stiffness", r.stiffness)?;
        d.set_item("first_event_time", r.first_event_time)?;
        d.set_item("first_event_strain", r.first_event_strain)?;
        d.set_item("yield_strength", r.yield_strength)?;
        d.set_item("tensile_strength", r.tensile_strength)?;
        d.set_item("event_histogram", r.event_histogram.clone())?;
        let curve: Vec<(f64, f64, f64, f64, f64)> =
            r.curve.iter().map(|p| (p.time, p.strain, p.s11, p.s22, p.s12)).collect();
        d.set_item("curve", curve)?;
        Ok(d)
    }
}

#[pyclass(frozen, module = "sweepnet_py")]
struct Trajectory {
    inner: sweepnet::trajectory::Trajectory,
}

#[pymethods]
impl Trajectory {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times()
    }

    /// Spring stresses, one list per stored time.
    #[getter]
    fn sigma(&self) -> Vec<Vec<f64>> {
        self.inner.states.iter().map(|s| s.sigma.iter().copied().collect()).collect()
    }

    #[getter]
    fn stabilized_at(&self) -> Option<f64> {
        self.inner.stabilized_at
    }

    /// `(time, activated, released)` per event; springs are 1-based.
    #[getter]
    #[allow(clippy::type_complexity)]
    fn events(&self) -> Vec<(f64, Vec<(usize, String)>, Vec<(usize, String)>)> {
        self.inner
            .events
            .iter()
            .map(|e| (e.time, bounds(&e.newly_active), bounds(&e.newly_released)))
            .collect()
    }

    /// Stress at any time in `[0, T]`.
    fn sigma_at(&self, t: f64) -> Vec<f64> {
        self.inner.state_at(t).sigma.iter().copied().collect()
    }

    fn to_csv(&self) -> String {
        io::trajectory_csv(&self.inner)
    }

    fn events_csv(&self) -> String {
        events_csv(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.states.len()
    }
}

/// Projection of `x` onto `{y : A y <= b, A_eq y = b_eq}` in the norm of `S`.
/// Returns the projected point and its active inequality rows.
#[pyfunction]
#[pyo3(signature = (s, x, a, b, a_eq=None, b_eq=None, tol=DEFAULT_QP_TOL))]
fn project(
    s: Vec<Vec<f64>>,
    x: Vec<f64>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    a_eq: Option<Vec<Vec<f64>>>,
    b_eq: Option<Vec<f64>>,
    tol: f64,
) -> PyResult<(Vec<f64>, Vec<usize>)> {
    let n = x.len();
    let a_eq = match a_eq {
        Some(rows) => matrix(&rows, "a_eq")?,
        None => DMatrix::zeros(0, n),
    };
    let b_eq = DVector::from_vec(b_eq.unwrap_or_default());
    let a = if a.is_empty() { DMatrix::zeros(0, n) } else { matrix(&a, "a")? };
    let set = PolyhedralSet::new(a, DVector::from_vec(b), a_eq, b_eq).map_err(py_err)?;
    let r = qp::project(&matrix(&s, "s")?, &DVector::from_vec(x), &set, tol).map_err(py_err)?;
    Ok((r.point.iter().copied().collect(), r.active_inequalities))
}

#[pymodule]
fn sweepnet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(project, m)?)?;
    Ok(())
}

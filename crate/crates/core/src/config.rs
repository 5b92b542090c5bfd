//! Run configuration and the one-call solve driver used by the CLI and the
//! Python bindings.

use crate::analysis::DEFAULT_BINS;
use crate::catchup::{catchup, TimePartition, DEFAULT_EVENT_TOL};
use crate::error::{Error, Result};
use crate::lattice::{assemble, AssembledSystem, LatticeDefinition, LoadSchedule};
use crate::leapfrog::{leapfrog, LeapfrogOptions};
use crate::linalg::{Vector, DEFAULT_RANK_TOL};
use crate::qp::DEFAULT_QP_TOL;
use crate::sweep::{initial_state, MovingSetSpec, Space};
use crate::trajectory::{SolverKind, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub solver: SolverKind,
    pub space: Space,
    /// Largest catch-up step.
    pub mesh: f64,
    /// Overrides `mesh` with a fixed number of uniform steps.
    pub steps: Option<usize>,
    pub rank_tol: f64,
    pub qp_tol: f64,
    pub active_tol: f64,
    pub stabilization_tol: f64,
    pub event_tol: f64,
    pub bins: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lf = LeapfrogOptions::default();
        RunConfig {
            solver: SolverKind::Leapfrog,
            space: Space::Reduced,
            mesh: 1e-4,
            steps: None,
            rank_tol: DEFAULT_RANK_TOL,
            qp_tol: DEFAULT_QP_TOL,
            active_tol: lf.active_tol,
            stabilization_tol: lf.stabilization_tol,
            event_tol: DEFAULT_EVENT_TOL,
            bins: DEFAULT_BINS,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mesh", self.mesh),
            ("rank tolerance", self.rank_tol),
            ("projection tolerance", self.qp_tol),
            ("active tolerance", self.active_tol),
            ("stabilization tolerance", self.stabilization_tol),
            ("event tolerance", self.event_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.steps == Some(0) {
            return Err(Error::InvalidInput("steps must be positive".into()));
        }
        if self.bins == 0 {
            return Err(Error::InvalidInput("bins must be positive".into()));
        }
        Ok(())
    }

    pub fn leapfrog_options(&self) -> LeapfrogOptions {
        LeapfrogOptions {
            active_tol: self.active_tol,
            stabilization_tol: self.stabilization_tol,
            qp_tol: self.qp_tol,
            ..LeapfrogOptions::default()
        }
    }

    pub fn partition(&self, horizon: f64) -> Result<TimePartition> {
        match self.steps {
            Some(k) => TimePartition::uniform(horizon, k),
            None => TimePartition::with_mesh(horizon, self.mesh),
        }
    }
}

/// Integrates an assembled system from `σ₀` (zero when `None`).
pub fn run(sys: &AssembledSystem, loads: &LoadSchedule, sigma0: Option<&Vector>, cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let spec = MovingSetSpec::new(sys, cfg.space);
    let zero = Vector::zeros(sys.m);
    let state0 = initial_state(sys, &spec, sigma0.unwrap_or(&zero), loads)?;
    match cfg.solver {
        SolverKind::Leapfrog => leapfrog(&spec, &state0, loads, &cfg.leapfrog_options()),
        SolverKind::CatchUp => {
            let mut traj = catchup(&spec, &state0, loads, &cfg.partition(loads.horizon)?, cfg.qp_tol)?;
            if cfg.event_tol != DEFAULT_EVENT_TOL {
                let lower = spec.box_lower.component_mul(&spec.stiffness);
                let upper = spec.box_upper.component_mul(&spec.stiffness);
                traj.events = crate::catchup::detect_events(&spec, &traj.states, &lower, &upper, loads, cfg.event_tol);
            }
            Ok(traj)
        }
    }
}

/// Assembles and integrates in one call.
pub fn solve(
    def: &LatticeDefinition,
    loads: &LoadSchedule,
    sigma0: Option<&Vector>,
    cfg: &RunConfig,
) -> Result<(AssembledSystem, Trajectory)> {
    cfg.validate()?;
    loads.validate(def)?;
    let sys = assemble(def, cfg.rank_tol)?;
    let traj = run(&sys, loads, sigma0, cfg)?;
    Ok((sys, traj))
}

//! Event-based integration for a moving set that translates at constant
//! velocity `ċ`. Relative to the frozen set `𝒞_c` the solution moves with
//! `ż = proj^S(-ċ, T_{𝒞_c}(z))` until a new bound is hit, so the whole
//! trajectory is piecewise linear and can be computed event by event.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice::LoadSchedule;
use crate::linalg::{DenseMatrix, Vector};
use crate::qp::{PolyhedralSet, Projector, DEFAULT_QP_TOL};
use crate::sweep::{MovingSetSpec, Space, SweepingState};
use crate::trajectory::{bound_of_row, Bound, EventRecord, SolverKind, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeapfrogOptions {
    /// Absolute slack under which a bound counts as active.
    pub active_tol: f64,
    /// Stop once `‖ż‖_S <= stabilization_tol·‖ċ‖_S`.
    pub stabilization_tol: f64,
    /// Relative tolerance for grouping simultaneous bound hits.
    pub tie_tol: f64,
    pub qp_tol: f64,
    pub max_events: usize,
}

impl Default for LeapfrogOptions {
    fn default() -> Self {
        LeapfrogOptions { active_tol: 1e-9, stabilization_tol: 1e-10, tie_tol: 1e-12, qp_tol: DEFAULT_QP_TOL, max_events: 100_000 }
    }
}

/// The moving set frozen at some time: `(rows; -rows) z <= b`.
#[derive(Debug, Clone)]
pub struct FrozenSet<'a> {
    pub spec: &'a MovingSetSpec,
    pub b: Vector,
}

impl<'a> FrozenSet<'a> {
    pub fn at(spec: &'a MovingSetSpec, t: f64, loads: &LoadSchedule) -> Self {
        FrozenSet { spec, b: spec.bounds(t, loads) }
    }

    /// Slack `b - A z` of every inequality row.
    pub fn slack(&self, z: &Vector) -> Vector {
        let rz = &self.spec.rows * z;
        let m = self.spec.m();
        Vector::from_fn(2 * m, |j, _| if j < m { self.b[j] - rz[j] } else { self.b[j] + rz[j - m] })
    }

    /// Rows within `active_tol` of their bound.
    pub fn active_rows(&self, z: &Vector, active_tol: f64) -> Result<Vec<usize>> {
        let slack = self.slack(z);
        let worst = slack.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        if worst < -active_tol {
            return Err(Error::InvalidState(format!("point violates the frozen set by {:.3e}", -worst)));
        }
        Ok((0..slack.len()).filter(|&j| slack[j] <= active_tol).collect())
    }
}

/// Tangent cone of the frozen set at `z`: the equality rows plus `x_j <= 0`
/// for active upper bounds and `x_j >= 0` for active lower bounds.
pub fn tangent_cone(frozen: &FrozenSet<'_>, z: &Vector, active_tol: f64) -> Result<PolyhedralSet> {
    let rows = frozen.active_rows(z, active_tol)?;
    let a_full = frozen.spec.inequality_matrix();
    let n = frozen.spec.n_vars();
    let mut a = DenseMatrix::zeros(rows.len(), n);
    for (k, &j) in rows.iter().enumerate() {
        a.set_row(k, &a_full.row(j));
    }
    PolyhedralSet::new(
        a,
        Vector::zeros(rows.len()),
        frozen.spec.equality_rows.clone(),
        frozen.spec.equality_rhs(),
    )
}

/// `ż = proj^S(-drive, T(z))` using a projector prepared for the spec's rows.
pub fn event_velocity(
    frozen: &FrozenSet<'_>,
    projector: &Projector,
    z: &Vector,
    drive: &Vector,
    active_tol: f64,
) -> Result<Vector> {
    let rows = frozen.active_rows(z, active_tol)?;
    let zeros = Vector::zeros(2 * frozen.spec.m());
    let res = projector.project_subset(&(-drive), &zeros, &frozen.spec.equality_rhs(), &rows)?;
    Ok(res.point)
}

/// Smallest step `τ > 0` at which an inactive bound becomes active along
/// `z + τ ż`, with every row reached within `tie_tol` (relative) of it.
pub fn next_event_time(
    frozen: &FrozenSet<'_>,
    z: &Vector,
    zdot: &Vector,
    active_tol: f64,
    tie_tol: f64,
) -> Option<(f64, Vec<usize>)> {
    let slack = frozen.slack(z);
    let rz = &frozen.spec.rows * zdot;
    let m = frozen.spec.m();
    let rate = Vector::from_fn(2 * m, |j, _| if j < m { rz[j] } else { -rz[j - m] });
    let scale = rate.amax();
    if scale == 0.0 {
        return None;
    }
    let mut candidates = Vec::new();
    for j in 0..2 * m {
        if slack[j] > active_tol && rate[j] > 1e-13 * scale {
            candidates.push((slack[j] / rate[j], j));
        }
    }
    let tau = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    if !tau.is_finite() {
        return None;
    }
    let rows = candidates.iter().filter(|c| c.0 <= tau * (1.0 + tie_tol)).map(|c| c.1).collect();
    Some((tau, rows))
}

fn s_norm(s: &DenseMatrix, x: &Vector) -> f64 {
    x.dot(&(s * x)).max(0.0).sqrt()
}

fn drive_for(spec: &MovingSetSpec, t: f64, loads: &LoadSchedule) -> Vector {
    let rate = spec.translation_rate(t, loads);
    match spec.space {
        Space::Full => rate,
        Space::Reduced => spec.reduce(&rate),
    }
}

/// Event-based integration over `[0, loads.horizon]`. Requires constant
/// force; piecewise-constant displacement and box-strain rates are handled
/// segment by segment.
pub fn leapfrog(
    spec: &MovingSetSpec,
    state0: &SweepingState,
    loads: &LoadSchedule,
    opts: &LeapfrogOptions,
) -> Result<Trajectory> {
    let horizon = loads.horizon;
    if !loads.force.is_constant_on(horizon) {
        return Err(Error::UnsupportedLoad("the event-based solver needs a constant force".into()));
    }
    if state0.time != 0.0 {
        return Err(Error::InvalidState("leapfrog must start at t = 0".into()));
    }
    let projector = spec.projector(opts.qp_tol)?;
    let m = spec.m();
    let bounds_of = |rows: &[usize]| -> BTreeSet<Bound> { rows.iter().map(|&j| bound_of_row(j, m)).collect() };

    let mut knots = vec![0.0];
    knots.extend(loads.rate_breakpoints());
    knots.push(horizon);

    let mut states = vec![state0.clone()];
    let mut events: Vec<EventRecord> = Vec::new();
    let mut y = state0.y.clone();
    let mut stabilized_at = None;

    for seg in knots.windows(2) {
        let (ts, te) = (seg[0], seg[1]);
        let frozen = FrozenSet::at(spec, ts, loads);
        let drive = drive_for(spec, ts, loads);
        let drive_norm = s_norm(&spec.metric, &drive);
        let tau_s = spec.translation(ts, loads);
        let mut z = y.clone();
        let mut t = ts;
        stabilized_at = None;
        loop {
            let active = frozen.active_rows(&z, opts.active_tol)?;
            let zdot = if drive_norm == 0.0 {
                Vector::zeros(z.len())
            } else {
                let zeros = Vector::zeros(2 * m);
                projector
                    .project_subset(&(-&drive), &zeros, &spec.equality_rhs(), &active)
                    .map_err(|e| match e {
                        Error::Infeasible => Error::SafeLoadViolation { time: t },
                        other => other,
                    })?
                    .point
            };
            let stalled = s_norm(&spec.metric, &zdot) <= opts.stabilization_tol * drive_norm;
            // bounds that the new velocity leaves strictly are released at
            // the event that just happened
            if let (false, Some(last)) = (stalled, events.last_mut()) {
                if last.time == t {
                    let rz = &spec.rows * &zdot;
                    let scale = rz.amax().max(f64::MIN_POSITIVE);
                    for &j in &active {
                        let inward = if j < m { rz[j] < -1e-9 * scale } else { rz[j - m] > 1e-9 * scale };
                        let b = bound_of_row(j, m);
                        if inward && !last.newly_released.contains(&b) {
                            last.newly_released.push(b);
                        }
                    }
                }
            }
            if stalled {
                stabilized_at = Some(t);
                break;
            }
            let Some((tau, _hits)) = next_event_time(&frozen, &z, &zdot, opts.active_tol, opts.tie_tol) else {
                z += &zdot * (te - t);
                break;
            };
            if t + tau >= te {
                z += &zdot * (te - t);
                break;
            }
            if events.len() >= opts.max_events {
                return Err(Error::NoConvergence(format!("more than {} events", opts.max_events)));
            }
            z += &zdot * tau;
            t += tau;
            let after = frozen.active_rows(&z, opts.active_tol)?;
            let before = bounds_of(&active);
            let newly_active: Vec<Bound> = bounds_of(&after).difference(&before).copied().collect();
            let y_ev = &z + spec.reduce(&(spec.translation(t, loads) - &tau_s));
            let sigma = (spec.lift(&z) - &tau_s).component_mul(&spec.stiffness);
            let state = spec.state(y_ev, t, loads);
            events.push(EventRecord {
                index: events.len() + 1,
                time: t,
                newly_active,
                newly_released: Vec::new(),
                sigma,
                relative_velocity: zdot,
            });
            states.push(state);
        }
        y = &z + spec.reduce(&(spec.translation(te, loads) - &tau_s));
        if states.last().map(|s| s.time) != Some(te) {
            states.push(spec.state(y.clone(), te, loads));
        }
    }
    Ok(Trajectory { states, solver: SolverKind::Leapfrog, space: spec.space, events, stabilized_at })
}

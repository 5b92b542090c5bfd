//! Catch-up time stepping: `y_{i+1} = proj^S(y_i, 𝒞(t_{i+1}))`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::lattice::LoadSchedule;
use crate::linalg::{DenseMatrix, Vector};
use crate::qp::{project, PolyhedralSet};
use crate::sweep::{MovingSetSpec, SweepingState};
use crate::trajectory::{Bound, EventRecord, Side, SolverKind, Trajectory};

/// Relative width of the band around a limit that counts as yielding.
pub const DEFAULT_EVENT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct TimePartition {
    points: Vec<f64>,
}

impl TimePartition {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("partition needs at least two points".into()));
        }
        if points[0] != 0.0 {
            return Err(Error::InvalidInput("partition must start at 0".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("partition must be finite and strictly increasing".into()));
        }
        Ok(TimePartition { points })
    }

    /// `steps` equal steps on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidInput("uniform partition needs steps > 0 and horizon > 0".into()));
        }
        let mut points: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
        points[steps] = horizon;
        Self::new(points)
    }

    /// Uniform partition whose step does not exceed `mesh`.
    pub fn with_mesh(horizon: f64, mesh: f64) -> Result<Self> {
        if !(mesh > 0.0) {
            return Err(Error::InvalidInput("mesh must be positive".into()));
        }
        let steps = ((horizon / mesh) - 1e-9).ceil().max(1.0) as usize;
        Self::uniform(horizon, steps)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().expect("non-empty")
    }
}

/// The raw recursion `x_{i+1} = proj^S(x_i, C(t_{i+1}))` for any family of
/// polyhedra.
pub fn abstract_catchup<F>(s: &DenseMatrix, set_at: F, x0: &Vector, partition: &TimePartition, tol: f64) -> Result<Vec<Vector>>
where
    F: Fn(f64) -> PolyhedralSet,
{
    let mut xs = Vec::with_capacity(partition.points.len());
    xs.push(x0.clone());
    for &t in &partition.points[1..] {
        let prev = xs.last().expect("non-empty");
        let next = project(s, prev, &set_at(t), tol).map_err(|e| match e {
            Error::Infeasible => Error::SafeLoadViolation { time: t },
            other => other,
        })?;
        xs.push(next.point);
    }
    Ok(xs)
}

/// Catch-up integration on a prepared moving set. Events are detected
/// afterwards from the stress history.
pub fn catchup(
    spec: &MovingSetSpec,
    state0: &SweepingState,
    loads: &LoadSchedule,
    partition: &TimePartition,
    tol: f64,
) -> Result<Trajectory> {
    if state0.time != 0.0 {
        return Err(Error::InvalidState("catch-up must start at t = 0".into()));
    }
    let projector = spec.projector(tol)?;
    let b_eq = spec.equality_rhs();
    let mut states = Vec::with_capacity(partition.points.len());
    states.push(state0.clone());
    let mut y = state0.y.clone();
    for &t in &partition.points[1..] {
        let b = spec.bounds(t, loads);
        let res = projector.project(&y, &b, &b_eq).map_err(|e| match e {
            Error::Infeasible => Error::SafeLoadViolation { time: t },
            other => other,
        })?;
        y = res.point;
        states.push(spec.state(y.clone(), t, loads));
    }
    let lower = spec.box_lower.component_mul(&spec.stiffness);
    let upper = spec.box_upper.component_mul(&spec.stiffness);
    let events = detect_events(spec, &states, &lower, &upper, loads, DEFAULT_EVENT_TOL);
    Ok(Trajectory { states, solver: SolverKind::CatchUp, space: spec.space, events, stabilized_at: None })
}

/// Springs whose stress lies within `event_tol·(c⁺ - c⁻)` of a limit.
pub fn active_bounds(sigma: &Vector, lower: &Vector, upper: &Vector, event_tol: f64) -> BTreeSet<Bound> {
    let mut out = BTreeSet::new();
    for i in 0..sigma.len() {
        let band = event_tol * (upper[i] - lower[i]);
        if (upper[i] - sigma[i]).abs() <= band {
            out.insert((i, Side::Upper));
        }
        if (sigma[i] - lower[i]).abs() <= band {
            out.insert((i, Side::Lower));
        }
    }
    out
}

/// Scans a stress history for springs reaching a limit. A record is emitted
/// at each step where a bound becomes active; releases are attached to the
/// latest record.
pub fn detect_events(
    spec: &MovingSetSpec,
    states: &[SweepingState],
    lower: &Vector,
    upper: &Vector,
    loads: &LoadSchedule,
    event_tol: f64,
) -> Vec<EventRecord> {
    let mut events: Vec<EventRecord> = Vec::new();
    let Some(first) = states.first() else { return events };
    let mut prev = active_bounds(&first.sigma, lower, upper, event_tol);
    for w in states.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let now = active_bounds(&b.sigma, lower, upper, event_tol);
        let newly_active: Vec<Bound> = now.difference(&prev).copied().collect();
        let newly_released: Vec<Bound> = prev.difference(&now).copied().collect();
        if !newly_active.is_empty() {
            let dt = b.time - a.time;
            let shift = spec.reduce(&(spec.translation(b.time, loads) - spec.translation(a.time, loads)));
            let relative_velocity = (&b.y - &a.y - shift) / dt;
            events.push(EventRecord {
                index: events.len() + 1,
                time: b.time,
                newly_active,
                newly_released,
                sigma: b.sigma.clone(),
                relative_velocity,
            });
        } else if !newly_released.is_empty() {
            if let Some(last) = events.last_mut() {
                last.newly_released.extend(newly_released);
            }
        }
        prev = now;
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qp::DEFAULT_QP_TOL;

    fn interval(lo: f64, hi: f64) -> PolyhedralSet {
        PolyhedralSet::inequalities(DenseMatrix::from_row_slice(2, 1, &[1.0, -1.0]), Vector::from_column_slice(&[hi, -lo]))
            .unwrap()
    }

    #[test]
    fn partition_validation() {
        assert!(TimePartition::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(TimePartition::new(vec![0.1, 1.0]).is_err());
        let p = TimePartition::with_mesh(0.08, 1e-4).unwrap();
        assert_eq!(p.points().len(), 801);
        assert_eq!(p.horizon(), 0.08);
    }

    #[test]
    fn shrinking_interval_closed_form() {
        // [t, 10] sweeps x0 = 0.3: x_i = max(x0, t_i)
        let s = DenseMatrix::identity(1, 1);
        let p = TimePartition::uniform(1.0, 20).unwrap();
        let xs = abstract_catchup(&s, |t| interval(t, 10.0), &Vector::from_element(1, 0.3), &p, DEFAULT_QP_TOL).unwrap();
        for (x, &t) in xs.iter().zip(p.points()) {
            assert!((x[0] - 0.3f64.max(t)).abs() < 1e-14);
        }
    }

    #[test]
    fn interior_point_stays() {
        let s = DenseMatrix::identity(1, 1);
        let p = TimePartition::uniform(1.0, 5).unwrap();
        let xs = abstract_catchup(&s, |_| interval(-1.0, 1.0), &Vector::from_element(1, 0.5), &p, DEFAULT_QP_TOL).unwrap();
        assert!(xs.iter().all(|x| x[0] == 0.5));
    }

    #[test]
    fn translating_box_drags_corner() {
        // unit box moving with velocity (1, 1/2) sweeps a point that starts at
        // its lower-left corner: the point stays on the corner
        let s = DenseMatrix::identity(2, 2);
        let p = TimePartition::uniform(1.0, 10).unwrap();
        let set_at = |t: f64| {
            let mut a = DenseMatrix::zeros(4, 2);
            a[(0, 0)] = 1.0;
            a[(1, 1)] = 1.0;
            a[(2, 0)] = -1.0;
            a[(3, 1)] = -1.0;
            let (cx, cy) = (t, 0.5 * t);
            PolyhedralSet::inequalities(a, Vector::from_column_slice(&[cx + 1.0, cy + 1.0, -cx, -cy])).unwrap()
        };
        let xs = abstract_catchup(&s, set_at, &Vector::from_column_slice(&[0.0, 0.0]), &p, DEFAULT_QP_TOL).unwrap();
        for (x, &t) in xs.iter().zip(p.points()) {
            assert!((x[0] - t).abs() < 1e-14 && (x[1] - 0.5 * t).abs() < 1e-14);
        }
    }

    #[test]
    fn infeasible_step_reports_time() {
        let s = DenseMatrix::identity(1, 1);
        let p = TimePartition::uniform(1.0, 4).unwrap();
        let r = abstract_catchup(&s, |t| interval(t, 0.6), &Vector::from_element(1, 0.0), &p, DEFAULT_QP_TOL);
        assert!(matches!(r, Err(Error::SafeLoadViolation { time }) if time == 0.75));
    }
}

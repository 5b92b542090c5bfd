use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::sweep::{Space, SweepingState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Spring index (0-based) and the limit it sits on.
pub type Bound = (usize, Side);

/// Row `j` of `(rows; -rows)` as a spring bound.
pub fn bound_of_row(j: usize, m: usize) -> Bound {
    if j < m {
        (j, Side::Upper)
    } else {
        (j - m, Side::Lower)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub index: usize,
    pub time: f64,
    pub newly_active: Vec<Bound>,
    pub newly_released: Vec<Bound>,
    pub sigma: Vector,
    /// Velocity relative to the moving set just before the event.
    pub relative_velocity: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    CatchUp,
    Leapfrog,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::CatchUp => "catchup",
            SolverKind::Leapfrog => "leapfrog",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "catchup" | "catch-up" => Ok(SolverKind::CatchUp),
            "leapfrog" => Ok(SolverKind::Leapfrog),
            other => Err(Error::InvalidInput(format!("unknown solver '{other}' (expected catchup or leapfrog)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SweepingState>,
    pub solver: SolverKind,
    pub space: Space,
    pub events: Vec<EventRecord>,
    /// Time from which the stresses no longer change (leapfrog only).
    pub stabilized_at: Option<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn terminal(&self) -> &SweepingState {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// State at time `t` by linear interpolation between stored states; exact
    /// for leapfrog output, which is affine between stored states.
    pub fn state_at(&self, t: f64) -> SweepingState {
        let first = &self.states[0];
        if t <= first.time {
            return first.clone();
        }
        let last = self.terminal();
        if t >= last.time {
            return last.clone();
        }
        let k = self.states.partition_point(|s| s.time <= t);
        let (a, b) = (&self.states[k - 1], &self.states[k]);
        if b.time == a.time {
            return b.clone();
        }
        let w = (t - a.time) / (b.time - a.time);
        let mix = |x: &Vector, y: &Vector| x * (1.0 - w) + y * w;
        SweepingState {
            time: t,
            y: mix(&a.y, &b.y),
            sigma: mix(&a.sigma, &b.sigma),
            epsilon: mix(&a.epsilon, &b.epsilon),
        }
    }

    pub fn sample(&self, times: &[f64]) -> Vec<SweepingState> {
        times.iter().map(|&t| self.state_at(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(t: f64, v: f64) -> SweepingState {
        let x = Vector::from_element(1, v);
        SweepingState { time: t, y: x.clone(), sigma: x.clone(), epsilon: x }
    }

    #[test]
    fn interpolation_between_states() {
        let traj = Trajectory {
            states: vec![st(0.0, 0.0), st(1.0, 2.0), st(3.0, 2.0)],
            solver: SolverKind::Leapfrog,
            space: Space::Full,
            events: vec![],
            stabilized_at: None,
        };
        assert_eq!(traj.state_at(0.5).sigma[0], 1.0);
        assert_eq!(traj.state_at(2.0).sigma[0], 2.0);
        assert_eq!(traj.state_at(9.0).time, 3.0);
        assert_eq!(traj.state_at(-1.0).time, 0.0);
    }

    #[test]
    fn rows_map_to_bounds() {
        assert_eq!(bound_of_row(2, 5), (2, Side::Upper));
        assert_eq!(bound_of_row(7, 5), (2, Side::Lower));
    }
}

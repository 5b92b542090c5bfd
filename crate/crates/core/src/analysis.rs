//! Total stress, stress-strain curves and macroscopic metrics.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{AssembledSystem, LatticeDefinition, LoadSchedule};
use crate::linalg::{DenseMatrix, Vector};
use crate::trajectory::Trajectory;

/// Offset used for the yield strength.
pub const YIELD_OFFSET: f64 = 0.002;
pub const DEFAULT_BINS: usize = 20;

/// `(1/V) 𝒟ᵀ diag(σ) diag(φ₀) 𝒟`.
pub fn total_stress(sys: &AssembledSystem, sigma: &Vector, volume: f64) -> Result<DenseMatrix> {
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(Error::InvalidInput(format!("volume must be positive, got {volume}")));
    }
    if sigma.len() != sys.m {
        return Err(Error::DimensionMismatch(format!("stress has length {}, expected {}", sigma.len(), sys.m)));
    }
    let weights = sigma.component_mul(&sys.reference_lengths) / volume;
    let dirs = &sys.directions;
    let mut scaled = dirs.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= weights[i];
    }
    Ok(dirs.transpose() * scaled)
}

/// Box volume for periodic lattices, bounding-box volume otherwise.
pub fn reference_volume(def: &LatticeDefinition) -> f64 {
    if let Some(b) = &def.periodic_box {
        return b.iter().product();
    }
    (0..def.dim)
        .map(|k| {
            let xs = (0..def.n_nodes()).map(|j| def.coords[def.dim * j + k]);
            let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            (hi - lo).max(f64::MIN_POSITIVE)
        })
        .product()
}

/// How the horizontal axis of a stress-strain curve is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrainMeasure {
    Time,
    /// Engineering strain of a periodic box axis.
    BoxStrain { axis: usize },
    /// Largest prescribed displacement divided by a reference span.
    ConstraintDisplacement { span: f64 },
}

impl StrainMeasure {
    /// Box strain along the fastest stretched axis when there is one,
    /// otherwise prescribed displacement over the node extent along the
    /// axis of the fastest moving constraint row.
    pub fn default_for(def: &LatticeDefinition, loads: &LoadSchedule) -> Self {
        if let Some(g) = &loads.box_strain_rate {
            let v = g.value(0.0);
            let axis = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
            return StrainMeasure::BoxStrain { axis };
        }
        let rate = loads.r_rate(0.0);
        let Some(row) = (0..rate.len()).max_by(|&a, &b| rate[a].abs().total_cmp(&rate[b].abs())) else {
            return StrainMeasure::Time;
        };
        if rate[row] == 0.0 {
            return StrainMeasure::Time;
        }
        let r = def.constraints.row(row);
        let col = (0..r.len()).max_by(|&a, &b| r[a].abs().total_cmp(&r[b].abs())).unwrap_or(0);
        let axis = col % def.dim;
        let xs = (0..def.n_nodes()).map(|j| def.coords[def.dim * j + axis]);
        let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if hi > lo {
            StrainMeasure::ConstraintDisplacement { span: hi - lo }
        } else {
            StrainMeasure::Time
        }
    }

    pub fn strain(&self, t: f64, loads: &LoadSchedule) -> f64 {
        match *self {
            StrainMeasure::Time => t,
            StrainMeasure::BoxStrain { axis } => loads.box_strain(t).map(|g| g[axis]).unwrap_or(0.0),
            StrainMeasure::ConstraintDisplacement { span } => {
                let dr = loads.r(t) - loads.r(0.0);
                dr.amax() / span
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub time: f64,
    pub strain: f64,
    /// Total stress components (xx, yy, xy); yy and xy are 0 in 1-D.
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub label: String,
    pub stiffness: f64,
    pub first_event_time: Option<f64>,
    pub first_event_strain: Option<f64>,
    pub yield_strength: Option<f64>,
    pub tensile_strength: f64,
    pub curve: Vec<CurvePoint>,
    /// Spring activations per time bin over `[0, T]`.
    pub event_histogram: Vec<usize>,
    pub horizon: f64,
}

pub fn stress_curve(
    traj: &Trajectory,
    sys: &AssembledSystem,
    loads: &LoadSchedule,
    volume: f64,
    measure: StrainMeasure,
) -> Result<Vec<CurvePoint>> {
    traj.states
        .iter()
        .map(|s| {
            let st = total_stress(sys, &s.sigma, volume)?;
            let (s22, s12) = if sys.d >= 2 { (st[(1, 1)], st[(0, 1)]) } else { (0.0, 0.0) };
            Ok(CurvePoint { time: s.time, strain: measure.strain(s.time, loads), s11: st[(0, 0)], s22, s12 })
        })
        .collect()
}

fn curve_at(curve: &[CurvePoint], t: f64) -> (f64, f64) {
    let k = curve.partition_point(|p| p.time <= t);
    if k == 0 {
        return (curve[0].strain, curve[0].s11);
    }
    if k == curve.len() {
        let p = curve[k - 1];
        return (p.strain, p.s11);
    }
    let (a, b) = (curve[k - 1], curve[k]);
    if b.time == a.time {
        return (b.strain, b.s11);
    }
    let w = (t - a.time) / (b.time - a.time);
    (a.strain + w * (b.strain - a.strain), a.s11 + w * (b.s11 - a.s11))
}

/// Intersection of the curve with the line `E (ε - offset)`.
pub fn offset_yield(curve: &[CurvePoint], stiffness: f64, offset: f64) -> Option<f64> {
    let g = |p: &CurvePoint| p.s11 - stiffness * (p.strain - offset);
    for w in curve.windows(2) {
        let (ga, gb) = (g(&w[0]), g(&w[1]));
        if ga > 0.0 && gb <= 0.0 {
            let a = ga / (ga - gb);
            return Some(w[0].s11 + a * (w[1].s11 - w[0].s11));
        }
    }
    None
}

pub fn macro_metrics(
    traj: &Trajectory,
    sys: &AssembledSystem,
    loads: &LoadSchedule,
    volume: f64,
    measure: StrainMeasure,
    bins: usize,
    label: &str,
) -> Result<AnalysisReport> {
    if bins == 0 {
        return Err(Error::InvalidInput("histogram needs at least one bin".into()));
    }
    let curve = stress_curve(traj, sys, loads, volume, measure)?;
    let last = *curve.last().expect("trajectory is non-empty");
    let first_event_time = traj.events.first().map(|e| e.time);
    let (strain1, s1) = match first_event_time {
        Some(t1) => curve_at(&curve, t1),
        None => (last.strain, last.s11),
    };
    // stresses below rounding level of the limits count as zero
    let limits = sys.upper.abs().sup(&sys.lower.abs());
    let noise = 1e-12 * total_stress(sys, &limits, volume)?.amax();
    if strain1 == 0.0 || !(s1 / strain1).is_finite() || s1.abs() <= noise {
        return Err(Error::DegenerateMetrics("cannot take a stiffness from a zero strain or stress".into()));
    }
    let stiffness = s1 / strain1;
    let yield_strength = offset_yield(&curve, stiffness, YIELD_OFFSET);
    let horizon = loads.horizon;
    let mut event_histogram = vec![0usize; bins];
    for e in &traj.events {
        let k = ((e.time / horizon) * bins as f64).floor().clamp(0.0, (bins - 1) as f64) as usize;
        event_histogram[k] += e.newly_active.len();
    }
    Ok(AnalysisReport {
        label: label.to_string(),
        stiffness,
        first_event_time,
        first_event_strain: first_event_time.map(|_| strain1),
        yield_strength,
        tensile_strength: last.s11,
        curve,
        event_histogram,
        horizon,
    })
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "none".to_string())
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("time,strain,s11,s22,s12\n");
    for p in curve {
        let _ = writeln!(out, "{},{},{},{},{}", fmt_f64(p.time), fmt_f64(p.strain), fmt_f64(p.s11), fmt_f64(p.s22), fmt_f64(p.s12));
    }
    out
}

/// One row per spring activation; spring ids are 1-based.
pub fn events_csv(traj: &Trajectory) -> String {
    let mut out = String::from("ordinal,time,spring,side\n");
    for e in &traj.events {
        for (spring, side) in &e.newly_active {
            let _ = writeln!(out, "{},{},{},{}", e.index, fmt_f64(e.time), spring + 1, side);
        }
    }
    out
}

pub fn report_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "label={}", r.label);
    let _ = writeln!(out, "stiffness={}", fmt_f64(r.stiffness));
    let _ = writeln!(out, "first_event_time={}", opt(r.first_event_time));
    let _ = writeln!(out, "first_event_strain={}", opt(r.first_event_strain));
    let _ = writeln!(out, "yield_strength={}", opt(r.yield_strength));
    let _ = writeln!(out, "tensile_strength={}", fmt_f64(r.tensile_strength));
    let _ = writeln!(out, "horizon={}", fmt_f64(r.horizon));
    let hist: Vec<String> = r.event_histogram.iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "event_histogram={}", hist.join(" "));
    out
}

//! Network files (JSON) and trajectory / event CSV files.
//!
//! Node, spring and axis ids in files are 1-based.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::fmt_f64;
use crate::error::{Error, Result};
use crate::lattice::{LatticeDefinition, LoadSchedule, PiecewiseConstant, PiecewiseLinear, Spring};
use crate::linalg::{DenseMatrix, Vector};
use crate::sweep::{Space, SweepingState};
use crate::trajectory::{EventRecord, Side, SolverKind, Trajectory};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    meta: Option<RawMeta>,
    nodes: Option<Vec<RawNode>>,
    springs: Option<Vec<RawSpring>>,
    #[serde(default)]
    constraints: Option<RawConstraints>,
    #[serde(default)]
    loads: Option<RawLoads>,
    horizon: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeta {
    dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    periodic_box: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    id: Option<usize>,
    coords: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpring {
    id: Option<usize>,
    origin: Option<usize>,
    terminus: Option<usize>,
    stiffness: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shift: Option<Vec<i32>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTerm {
    node: usize,
    axis: usize,
    coef: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    terms: Vec<RawTerm>,
    #[serde(default)]
    offset: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRateSegment {
    start: f64,
    rates: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    rows: Vec<RawRow>,
    #[serde(default)]
    rate_segments: Vec<RawRateSegment>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKnot {
    time: f64,
    values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoads {
    #[serde(default)]
    force: Vec<RawKnot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    box_strain: Option<Vec<RawRateSegment>>,
}

fn missing(what: &str, field: &str) -> Error {
    Error::Schema(format!("{what}: missing field {field}"))
}

fn segments(raw: &[RawRateSegment], len: usize, what: &str) -> Result<PiecewiseConstant> {
    if raw.is_empty() {
        return Ok(PiecewiseConstant::constant(Vector::zeros(len)));
    }
    for (k, s) in raw.iter().enumerate() {
        if s.rates.len() != len {
            return Err(Error::Schema(format!("{what} segment {}: expected {len} rates, got {}", k + 1, s.rates.len())));
        }
    }
    PiecewiseConstant::new(
        raw.iter().map(|s| s.start).collect(),
        raw.iter().map(|s| Vector::from_column_slice(&s.rates)).collect(),
    )
    .map_err(|e| Error::Schema(format!("{what}: {e}")))
}

/// Parses a network document.
pub fn parse_network(text: &str) -> Result<(LatticeDefinition, LoadSchedule)> {
    let raw: RawNetwork = serde_json::from_str(text)
        .map_err(|e| Error::Schema(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let meta = raw.meta.ok_or_else(|| missing("document", "meta"))?;
    let dim = meta.dimension.ok_or_else(|| missing("meta", "dimension"))?;
    if !(1..=3).contains(&dim) {
        return Err(Error::Schema(format!("meta: dimension must be 1, 2 or 3, got {dim}")));
    }
    let nodes = raw.nodes.ok_or_else(|| missing("document", "nodes"))?;
    let n = nodes.len();
    let mut coords = vec![f64::NAN; n * dim];
    let mut seen = vec![false; n];
    for (k, node) in nodes.iter().enumerate() {
        let what = format!("node #{}", k + 1);
        let id = node.id.ok_or_else(|| missing(&what, "id"))?;
        if id == 0 || id > n {
            return Err(Error::Schema(format!("node {id}: ids must be 1..{n}")));
        }
        if seen[id - 1] {
            return Err(Error::Schema(format!("node {id}: duplicate id")));
        }
        seen[id - 1] = true;
        let c = node.coords.as_ref().ok_or_else(|| missing(&format!("node {id}"), "coords"))?;
        if c.len() != dim {
            return Err(Error::Schema(format!("node {id}: expected {dim} coordinates, got {}", c.len())));
        }
        coords[dim * (id - 1)..dim * id].copy_from_slice(c);
    }
    let raw_springs = raw.springs.ok_or_else(|| missing("document", "springs"))?;
    let m = raw_springs.len();
    let mut springs: Vec<Option<Spring>> = vec![None; m];
    for (k, s) in raw_springs.iter().enumerate() {
        let id = s.id.ok_or_else(|| missing(&format!("spring #{}", k + 1), "id"))?;
        if id == 0 || id > m {
            return Err(Error::Schema(format!("spring {id}: ids must be 1..{m}")));
        }
        if springs[id - 1].is_some() {
            return Err(Error::Schema(format!("spring {id}: duplicate id")));
        }
        let what = format!("spring {id}");
        let node_ref = |v: Option<usize>, field: &str| -> Result<usize> {
            let j = v.ok_or_else(|| missing(&what, field))?;
            if j == 0 || j > n {
                return Err(Error::Schema(format!("{what}: {field} refers to missing node {j}")));
            }
            Ok(j - 1)
        };
        let spring = Spring {
            origin: node_ref(s.origin, "origin")?,
            terminus: node_ref(s.terminus, "terminus")?,
            stiffness: s.stiffness.ok_or_else(|| missing(&what, "stiffness"))?,
            lower: s.lower.ok_or_else(|| missing(&what, "lower"))?,
            upper: s.upper.ok_or_else(|| missing(&what, "upper"))?,
            image_shift: s.shift.clone(),
        };
        if !(spring.lower < spring.upper) {
            return Err(Error::Schema(format!("{what}: lower limit must be below upper limit")));
        }
        springs[id - 1] = Some(spring);
    }
    let springs: Vec<Spring> = springs.into_iter().map(|s| s.expect("ids are dense")).collect();

    let cons = raw.constraints.unwrap_or(RawConstraints { rows: vec![], rate_segments: vec![] });
    let q = cons.rows.len();
    let mut r = DenseMatrix::zeros(q, n * dim);
    let mut offset = Vector::zeros(q);
    for (k, row) in cons.rows.iter().enumerate() {
        for t in &row.terms {
            if t.node == 0 || t.node > n || t.axis == 0 || t.axis > dim {
                return Err(Error::Schema(format!("constraint row {}: bad node {} or axis {}", k + 1, t.node, t.axis)));
            }
            r[(k, dim * (t.node - 1) + t.axis - 1)] += t.coef;
        }
        offset[k] = row.offset;
    }
    let rate = segments(&cons.rate_segments, q, "constraint rate")?;

    let loads_raw = raw.loads.unwrap_or(RawLoads { force: vec![], box_strain: None });
    let force = if loads_raw.force.is_empty() {
        PiecewiseLinear::constant(Vector::zeros(n * dim))
    } else {
        for (k, knot) in loads_raw.force.iter().enumerate() {
            if knot.values.len() != n * dim {
                return Err(Error::Schema(format!("force knot {}: expected {} values", k + 1, n * dim)));
            }
        }
        PiecewiseLinear::new(
            loads_raw.force.iter().map(|k| k.time).collect(),
            loads_raw.force.iter().map(|k| Vector::from_column_slice(&k.values)).collect(),
        )
        .map_err(|e| Error::Schema(format!("force: {e}")))?
    };
    let box_strain_rate = match &loads_raw.box_strain {
        Some(segs) => Some(segments(segs, dim, "box strain")?),
        None => None,
    };
    let horizon = raw.horizon.ok_or_else(|| missing("document", "horizon"))?;

    let def = LatticeDefinition { dim, coords, springs, constraints: r, periodic_box: meta.periodic_box };
    def.validate().map_err(|e| Error::Schema(e.to_string()))?;
    let loads = LoadSchedule { displacement_offset: offset, displacement_rate: rate, force, box_strain_rate, horizon };
    loads.validate(&def).map_err(|e| Error::Schema(e.to_string()))?;
    Ok((def, loads))
}

pub fn network_to_string(def: &LatticeDefinition, loads: &LoadSchedule) -> Result<String> {
    let dim = def.dim;
    let nodes = (0..def.n_nodes())
        .map(|j| RawNode { id: Some(j + 1), coords: Some(def.node(j).to_vec()) })
        .collect();
    let springs = def
        .springs
        .iter()
        .enumerate()
        .map(|(i, s)| RawSpring {
            id: Some(i + 1),
            origin: Some(s.origin + 1),
            terminus: Some(s.terminus + 1),
            stiffness: Some(s.stiffness),
            lower: Some(s.lower),
            upper: Some(s.upper),
            shift: s.image_shift.clone(),
        })
        .collect();
    let rows = (0..def.n_constraints())
        .map(|k| RawRow {
            terms: (0..def.constraints.ncols())
                .filter(|&c| def.constraints[(k, c)] != 0.0)
                .map(|c| RawTerm { node: c / dim + 1, axis: c % dim + 1, coef: def.constraints[(k, c)] })
                .collect(),
            offset: loads.displacement_offset[k],
        })
        .collect();
    let seg = |pc: &PiecewiseConstant| -> Vec<RawRateSegment> {
        pc.starts
            .iter()
            .zip(&pc.values)
            .map(|(&start, v)| RawRateSegment { start, rates: v.iter().copied().collect() })
            .collect()
    };
    let force = loads
        .force
        .times
        .iter()
        .zip(&loads.force.values)
        .map(|(&time, v)| RawKnot { time, values: v.iter().copied().collect() })
        .collect();
    let raw = RawNetwork {
        meta: Some(RawMeta { dimension: Some(dim), periodic_box: def.periodic_box.clone() }),
        nodes: Some(nodes),
        springs: Some(springs),
        constraints: Some(RawConstraints { rows, rate_segments: seg(&loads.displacement_rate) }),
        loads: Some(RawLoads { force, box_strain: loads.box_strain_rate.as_ref().map(seg) }),
        horizon: Some(loads.horizon),
    };
    serde_json::to_string_pretty(&raw).map_err(|e| Error::Schema(e.to_string()))
}

pub fn load_network(path: &Path) -> Result<(LatticeDefinition, LoadSchedule)> {
    parse_network(&std::fs::read_to_string(path)?)
}

pub fn save_network(path: &Path, def: &LatticeDefinition, loads: &LoadSchedule) -> Result<()> {
    let mut text = network_to_string(def, loads)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `time,y_1..y_k,sigma_1..sigma_m`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::new();
    let Some(first) = traj.states.first() else { return out };
    let mut header = vec!["time".to_string()];
    header.extend((1..=first.y.len()).map(|i| format!("y_{i}")));
    header.extend((1..=first.sigma.len()).map(|i| format!("sigma_{i}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for s in &traj.states {
        let mut cells = vec![fmt_f64(s.time)];
        cells.extend(s.y.iter().map(|&v| fmt_f64(v)));
        cells.extend(s.sigma.iter().map(|&v| fmt_f64(v)));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    std::fs::write(path, trajectory_csv(traj))?;
    Ok(())
}

fn parse_cell(cell: &str, line: usize) -> Result<f64> {
    cell.trim().parse::<f64>().map_err(|_| Error::Schema(format!("line {line}: '{cell}' is not a number")))
}

/// Reads a trajectory CSV back. Elastic elongations are recovered as
/// `σ / k` from the stiffness vector.
pub fn parse_trajectory(text: &str, stiffness: &Vector, solver: SolverKind, space: Space) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Schema("empty trajectory file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"time") {
        return Err(Error::Schema("line 1: first column must be time".into()));
    }
    let ny = cols.iter().filter(|c| c.starts_with("y_")).count();
    let ns = cols.iter().filter(|c| c.starts_with("sigma_")).count();
    if ns != stiffness.len() || 1 + ny + ns != cols.len() {
        return Err(Error::Schema(format!("line 1: expected time, y and {} sigma columns", stiffness.len())));
    }
    let mut states = Vec::new();
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(Error::Schema(format!("line {}: expected {} cells, got {}", i + 1, cols.len(), cells.len())));
        }
        let vals = cells.iter().map(|c| parse_cell(c, i + 1)).collect::<Result<Vec<f64>>>()?;
        let y = Vector::from_column_slice(&vals[1..1 + ny]);
        let sigma = Vector::from_column_slice(&vals[1 + ny..]);
        let epsilon = sigma.component_div(stiffness);
        states.push(SweepingState { time: vals[0], y, sigma, epsilon });
    }
    if states.is_empty() {
        return Err(Error::Schema("trajectory has no rows".into()));
    }
    Ok(Trajectory { states, solver, space, events: Vec::new(), stabilized_at: None })
}

/// Reads `ordinal,time,spring,side` rows into event records (stress and
/// velocity are not stored in the file and come back empty).
pub fn parse_events(text: &str) -> Result<Vec<EventRecord>> {
    let mut events: Vec<EventRecord> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 4 {
            return Err(Error::Schema(format!("line {}: expected 4 cells", i + 1)));
        }
        let ordinal: usize = cells[0].parse().map_err(|_| Error::Schema(format!("line {}: bad ordinal", i + 1)))?;
        let time = parse_cell(cells[1], i + 1)?;
        let spring: usize = cells[2].parse().map_err(|_| Error::Schema(format!("line {}: bad spring id", i + 1)))?;
        if spring == 0 {
            return Err(Error::Schema(format!("line {}: spring ids start at 1", i + 1)));
        }
        let side = match cells[3] {
            "lower" => Side::Lower,
            "upper" => Side::Upper,
            other => return Err(Error::Schema(format!("line {}: unknown side '{other}'", i + 1))),
        };
        match events.last_mut() {
            Some(e) if e.index == ordinal => e.newly_active.push((spring - 1, side)),
            _ => events.push(EventRecord {
                index: ordinal,
                time,
                newly_active: vec![(spring - 1, side)],
                newly_released: vec![],
                sigma: Vector::zeros(0),
                relative_velocity: Vector::zeros(0),
            }),
        }
    }
    Ok(events)
}

//! Builders for the reference lattices: the 6-node toy truss, the
//! triangular grid with a hexagonal hole, a periodic triangular grid and a
//! couple of small rigidity fixtures.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{validate_assumptions, vector, LatticeDefinition, LoadSchedule, PiecewiseConstant, Spring};
use crate::linalg::{DenseMatrix, Vector, DEFAULT_RANK_TOL};

/// Stress scale of the toy truss.
pub const EXAMPLE1_C0: f64 = 0.001;
/// Speed of node 6 along x. Chosen so that the yield times come out at
/// 0.042 / 0.055 (zero start) and 0.027 / 0.046 / 0.064 (prestressed start).
pub const EXAMPLE1_LOAD_RATE: f64 = 0.1;
pub const EXAMPLE1_HORIZON: f64 = 0.08;

const EXAMPLE1_Q: [[f64; 10]; 6] = [
    [1., 0., 1., 0., 1., 0., 1., 0., 0., 0.],
    [0., 1., -1., 0., 0., 1., 0., 1., 0., 0.],
    [-1., 0., 0., 1., 0., -1., 0., 0., 1., 0.],
    [0., -1., 0., -1., -1., 0., 0., 0., 0., 1.],
    [0., 0., 0., 0., 0., 0., -1., -1., 0., 0.],
    [0., 0., 0., 0., 0., 0., 0., 0., -1., -1.],
];

const EXAMPLE1_XI: [f64; 12] = [2., -1., 2., 1., 4., -1., 4., 1., 0., 0., 6., 0.];

/// Self-stress basis of the toy truss as printed with the model (10 × 2).
const EXAMPLE1_V: [[f64; 2]; 10] = [
    [-0.247641312342202, 0.409252171336287],
    [-0.247641312342202, 0.409252171336286],
    [-0.404312022261124, -0.120407185624592],
    [-0.404312022261124, -0.120407185624592],
    [0.497928264380854, -0.079402340433155],
    [0.497928264380854, -0.079402340433155],
    [0.116775452487286, 0.394784775694451],
    [0.116775452487287, 0.394784775694451],
    [0.116775452487287, 0.394784775694451],
    [0.116775452487286, 0.394784775694451],
];

pub fn example1_incidence() -> DenseMatrix {
    DenseMatrix::from_fn(6, 10, |i, j| EXAMPLE1_Q[i][j])
}

pub fn example1_limits() -> Vector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    vector(&[1., 1., 1., 1., s, s, 10., 10., 10., 10.]) * EXAMPLE1_C0
}

/// The 6-node, 10-spring truss with node 5 fixed and node 6 pulled along x.
pub fn build_example1() -> Result<(LatticeDefinition, LoadSchedule)> {
    let c = example1_limits();
    let mut r = DenseMatrix::zeros(4, 12);
    for a in 0..4 {
        r[(a, 8 + a)] = 1.0;
    }
    let lower: Vec<f64> = c.iter().map(|v| -v).collect();
    let def = LatticeDefinition::from_incidence(
        2,
        &example1_incidence(),
        EXAMPLE1_XI.to_vec(),
        &[1.0; 10],
        &lower,
        c.as_slice(),
        r,
    )?;
    let xi = Vector::from_column_slice(&EXAMPLE1_XI);
    let offset = -(&def.constraints * xi);
    let loads = LoadSchedule::displacement(offset, vector(&[0., 0., -EXAMPLE1_LOAD_RATE, 0.]), 12, EXAMPLE1_HORIZON);
    finish(def, loads)
}

pub fn example1_printed_basis() -> DenseMatrix {
    DenseMatrix::from_fn(10, 2, |i, j| EXAMPLE1_V[i][j])
}

/// `c₀ K V (1, -1)ᵀ` with the printed basis (K = I).
pub fn example1_prestress() -> Vector {
    example1_printed_basis() * vector(&[1.0, -1.0]) * EXAMPLE1_C0
}

#[derive(Debug, Clone, PartialEq)]
pub enum HoleSpec {
    None,
    /// All nodes within this hexagonal (lattice) distance of the central node.
    Hexagon { radius: usize },
    /// Explicit 0-based node indices of the full grid.
    Nodes(Vec<usize>),
}

/// Triangular grid clamped at the top and bottom rows. Even rows hold `cols`
/// nodes shifted by half a spacing, odd rows `cols + 1` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub hole: HoleSpec,
    /// Keep the springs between neighbours of the clamped rows.
    pub include_boundary_row_springs: bool,
    /// Upward speed of the top row.
    pub pull_rate: f64,
    pub horizon: f64,
    pub stiffness: f64,
    pub limit: f64,
}

impl GridSpec {
    /// 15 rows, hexagonal hole of radius 2: n = 198, m = 496, q = 56.
    pub fn standard() -> Self {
        GridSpec {
            rows: 15,
            cols: 14,
            hole: HoleSpec::Hexagon { radius: 2 },
            include_boundary_row_springs: false,
            pull_rate: 1.0,
            horizon: 0.08,
            stiffness: 1.0,
            limit: 0.001,
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::standard()
    }
}

struct GridNode {
    row: usize,
    // twice the x coordinate
    x2: i64,
}

fn grid_nodes(rows: usize, cols: usize) -> Vec<GridNode> {
    let mut nodes = Vec::new();
    for row in 0..rows {
        let (count, off) = if row % 2 == 0 { (cols, 1) } else { (cols + 1, 0) };
        for c in 0..count {
            nodes.push(GridNode { row, x2: 2 * c as i64 + off });
        }
    }
    nodes
}

fn hex_distance(a: &GridNode, b: &GridNode) -> i64 {
    let dr = (a.row as i64 - b.row as i64).abs();
    let dx = (a.x2 - b.x2).abs();
    dr + ((dx - dr).max(0)) / 2
}

pub fn build_tri_grid_with_hole(spec: &GridSpec) -> Result<(LatticeDefinition, LoadSchedule)> {
    if spec.rows < 2 || spec.cols < 1 {
        return Err(Error::InvalidInput("grid needs at least 2 rows and 1 column".into()));
    }
    let nodes = grid_nodes(spec.rows, spec.cols);
    let centre_row = spec.rows / 2;
    let centre = nodes
        .iter()
        .position(|n| n.row == centre_row)
        .map(|first| {
            let count = nodes.iter().filter(|n| n.row == centre_row).count();
            first + count / 2
        })
        .expect("grid has a middle row");
    let hole: Vec<usize> = match &spec.hole {
        HoleSpec::None => Vec::new(),
        HoleSpec::Hexagon { radius } => {
            let r = *radius as i64;
            let c = &nodes[centre];
            if c.row < *radius + 1 || c.row + *radius + 1 >= spec.rows {
                return Err(Error::InvalidInput(format!("hexagonal hole of radius {radius} reaches the clamped rows")));
            }
            (0..nodes.len()).filter(|&i| hex_distance(&nodes[i], c) <= r).collect()
        }
        HoleSpec::Nodes(list) => {
            if let Some(bad) = list.iter().find(|&&i| i >= nodes.len()) {
                return Err(Error::InvalidInput(format!("hole node {bad} is outside the grid")));
            }
            if let Some(&i) = list.iter().find(|&&i| nodes[i].row == 0 || nodes[i].row == spec.rows - 1) {
                return Err(Error::InvalidInput(format!("hole node {i} lies on a clamped row")));
            }
            list.clone()
        }
    };
    let mut removed = vec![false; nodes.len()];
    for &i in &hole {
        removed[i] = true;
    }
    let mut new_index = vec![usize::MAX; nodes.len()];
    let mut coords = Vec::new();
    let h = 3f64.sqrt() / 2.0;
    for (i, n) in nodes.iter().enumerate() {
        if !removed[i] {
            new_index[i] = coords.len() / 2;
            coords.push(n.x2 as f64 / 2.0);
            coords.push(n.row as f64 * h);
        }
    }
    let lookup: std::collections::HashMap<(i64, usize), usize> =
        nodes.iter().enumerate().map(|(i, n)| ((n.x2, n.row), i)).collect();
    let last_row = spec.rows - 1;
    let mut springs = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        for (dx, dr) in [(2i64, 0usize), (1, 1), (-1, 1)] {
            let Some(&j) = lookup.get(&(n.x2 + dx, n.row + dr)) else { continue };
            if dr == 0 && !spec.include_boundary_row_springs && (n.row == 0 || n.row == last_row) {
                continue;
            }
            if removed[i] || removed[j] {
                continue;
            }
            springs.push(Spring::new(new_index[i], new_index[j], spec.stiffness, -spec.limit, spec.limit));
        }
    }
    let n_nodes = coords.len() / 2;
    let clamped: Vec<(usize, bool)> = nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| !removed[*i] && (n.row == 0 || n.row == last_row))
        .map(|(i, n)| (new_index[i], n.row == last_row))
        .collect();
    let q = 2 * clamped.len();
    let mut r = DenseMatrix::zeros(q, 2 * n_nodes);
    let mut rate = Vector::zeros(q);
    for (k, &(node, top)) in clamped.iter().enumerate() {
        r[(2 * k, 2 * node)] = 1.0;
        r[(2 * k + 1, 2 * node + 1)] = 1.0;
        if top {
            // R(ζ + ξ₀) + r = 0, so y grows when r decreases
            rate[2 * k + 1] = -spec.pull_rate;
        }
    }
    let def = LatticeDefinition { dim: 2, coords, springs, constraints: r, periodic_box: None };
    let xi = Vector::from_column_slice(&def.coords);
    let offset = -(&def.constraints * xi);
    let nd = def.coords.len();
    finish(def, LoadSchedule::displacement(offset, rate, nd, spec.horizon))
}

/// Periodic triangular grid for uniaxial box loading.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpec {
    pub nx: usize,
    /// Must be even so the row stagger is periodic.
    pub ny: usize,
    /// Uniform random node displacement amplitude (in lattice spacings).
    pub jitter: f64,
    pub seed: u64,
    pub strain_rate: f64,
    pub horizon: f64,
    pub stiffness: f64,
    pub limit: f64,
}

impl Default for PeriodicSpec {
    fn default() -> Self {
        PeriodicSpec {
            nx: 6,
            ny: 6,
            jitter: 0.05,
            seed: 7,
            strain_rate: 1.0,
            horizon: 0.04,
            stiffness: 1.0,
            limit: 0.001,
        }
    }
}

/// Periodic triangular grid in an `nx × ny·√3/2` box with node 0 pinned and
/// the box stretched along x.
pub fn build_periodic_tri_grid(spec: &PeriodicSpec) -> Result<(LatticeDefinition, LoadSchedule)> {
    if spec.nx < 2 || spec.ny < 2 || spec.ny % 2 != 0 {
        return Err(Error::InvalidInput("periodic grid needs nx >= 2 and an even ny >= 2".into()));
    }
    if !(spec.jitter >= 0.0 && spec.jitter < 0.25) {
        return Err(Error::InvalidInput("jitter must lie in [0, 0.25)".into()));
    }
    let h = 3f64.sqrt() / 2.0;
    let (nx, ny) = (spec.nx, spec.ny);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut coords = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (dx, dy) = if spec.jitter > 0.0 {
                (rng.gen_range(-spec.jitter..spec.jitter), rng.gen_range(-spec.jitter..spec.jitter))
            } else {
                (0.0, 0.0)
            };
            coords.push(i as f64 + 0.5 * (j % 2) as f64 + dx);
            coords.push(j as f64 * h + dy);
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut springs = Vec::with_capacity(3 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            // right, upper-left and upper-right neighbours
            let odd = j % 2;
            let ul = i as i64 - 1 + odd as i64;
            let ur = i as i64 + odd as i64;
            let targets = [(i as i64 + 1, j), (ul, j + 1), (ur, j + 1)];
            for (ti, tj) in targets {
                let sx = ti.div_euclid(nx as i64);
                let sy = (tj / ny) as i64;
                let t = id(ti.rem_euclid(nx as i64) as usize, tj % ny);
                // origin is the neighbour; seen from it the base node is the
                // image shifted by -(sx, sy)
                let mut s = Spring::new(t, id(i, j), spec.stiffness, -spec.limit, spec.limit);
                s.image_shift = Some(vec![-sx as i32, -sy as i32]);
                springs.push(s);
            }
        }
    }
    let n = nx * ny;
    let mut r = DenseMatrix::zeros(2, 2 * n);
    r[(0, 0)] = 1.0;
    r[(1, 1)] = 1.0;
    let def = LatticeDefinition {
        dim: 2,
        coords,
        springs,
        constraints: r,
        periodic_box: Some(vec![nx as f64, ny as f64 * h]),
    };
    let xi = Vector::from_column_slice(&def.coords);
    let offset = -(&def.constraints * xi);
    let mut loads = LoadSchedule::displacement(offset, Vector::zeros(2), 2 * n, spec.horizon);
    loads.box_strain_rate = Some(PiecewiseConstant::constant(vector(&[spec.strain_rate, 0.0])));
    finish(def, loads)
}

/// A single triangle, unconstrained.
pub fn triangle() -> LatticeDefinition {
    let h = 3f64.sqrt() / 2.0;
    LatticeDefinition {
        dim: 2,
        coords: vec![0.0, 0.0, 1.0, 0.0, 0.5, h],
        springs: vec![
            Spring::new(0, 1, 1.0, -1.0, 1.0),
            Spring::new(1, 2, 1.0, -1.0, 1.0),
            Spring::new(2, 0, 1.0, -1.0, 1.0),
        ],
        constraints: DenseMatrix::zeros(0, 6),
        periodic_box: None,
    }
}

/// Unit square with both diagonals, unconstrained.
pub fn square_frame() -> LatticeDefinition {
    LatticeDefinition {
        dim: 2,
        coords: vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
        springs: vec![
            Spring::new(0, 1, 1.0, -1.0, 1.0),
            Spring::new(1, 2, 1.0, -1.0, 1.0),
            Spring::new(2, 3, 1.0, -1.0, 1.0),
            Spring::new(3, 0, 1.0, -1.0, 1.0),
            Spring::new(0, 2, 1.0, -1.0, 1.0),
            Spring::new(1, 3, 1.0, -1.0, 1.0),
        ],
        constraints: DenseMatrix::zeros(0, 8),
        periodic_box: None,
    }
}

fn finish(def: LatticeDefinition, loads: LoadSchedule) -> Result<(LatticeDefinition, LoadSchedule)> {
    loads.validate(&def)?;
    validate_assumptions(&def, DEFAULT_RANK_TOL)?.check()?;
    Ok((def, loads))
}

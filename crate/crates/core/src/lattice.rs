//! Lattice definitions, load schedules and the time-independent matrices of
//! the sweeping process.

use nalgebra::DVector;

use crate::error::{Assumption, Error, Result};
use crate::linalg::{nullspace_basis, numerical_rank, pseudoinverse, weighted_gram, DenseMatrix, Vector};

/// One spring. Node indices are 0-based. For periodic lattices `image_shift`
/// says which periodic image of the terminus the spring attaches to.
#[derive(Debug, Clone, PartialEq)]
pub struct Spring {
    pub origin: usize,
    pub terminus: usize,
    pub stiffness: f64,
    pub lower: f64,
    pub upper: f64,
    pub image_shift: Option<Vec<i32>>,
}

impl Spring {
    pub fn new(origin: usize, terminus: usize, stiffness: f64, lower: f64, upper: f64) -> Self {
        Spring { origin, terminus, stiffness, lower, upper, image_shift: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDefinition {
    pub dim: usize,
    /// Reference coordinates, node `j` axis `k` at `dim * j + k`.
    pub coords: Vec<f64>,
    pub springs: Vec<Spring>,
    /// Constraint matrix `R` (q × n·d).
    pub constraints: DenseMatrix,
    /// Box edge lengths for periodic lattices.
    pub periodic_box: Option<Vec<f64>>,
}

impl LatticeDefinition {
    pub fn n_nodes(&self) -> usize {
        self.coords.len() / self.dim.max(1)
    }

    pub fn n_springs(&self) -> usize {
        self.springs.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.nrows()
    }

    pub fn node(&self, j: usize) -> &[f64] {
        &self.coords[self.dim * j..self.dim * (j + 1)]
    }

    /// Builds a definition from an incidence matrix `Q` (n × m, +1 at the
    /// origin and -1 at the terminus of each column).
    pub fn from_incidence(
        dim: usize,
        incidence: &DenseMatrix,
        coords: Vec<f64>,
        stiffness: &[f64],
        lower: &[f64],
        upper: &[f64],
        constraints: DenseMatrix,
    ) -> Result<Self> {
        let (n, m) = incidence.shape();
        if stiffness.len() != m || lower.len() != m || upper.len() != m {
            return Err(Error::DimensionMismatch(format!("incidence has {m} columns but spring data lengths differ")));
        }
        let mut springs = Vec::with_capacity(m);
        for i in 0..m {
            let col = incidence.column(i);
            let mut origin = None;
            let mut terminus = None;
            for j in 0..n {
                match col[j] {
                    v if v == 1.0 && origin.is_none() => origin = Some(j),
                    v if v == -1.0 && terminus.is_none() => terminus = Some(j),
                    v if v == 0.0 => {}
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "incidence column {} must hold exactly one +1 and one -1",
                            i + 1
                        )))
                    }
                }
            }
            let (Some(o), Some(t)) = (origin, terminus) else {
                return Err(Error::InvalidInput(format!(
                    "incidence column {} must hold exactly one +1 and one -1",
                    i + 1
                )));
            };
            springs.push(Spring::new(o, t, stiffness[i], lower[i], upper[i]));
        }
        let def = LatticeDefinition { dim, coords, springs, constraints, periodic_box: None };
        def.validate()?;
        if def.n_nodes() != n {
            return Err(Error::DimensionMismatch(format!(
                "incidence has {n} rows but coordinates describe {} nodes",
                def.n_nodes()
            )));
        }
        Ok(def)
    }

    pub fn incidence(&self) -> DenseMatrix {
        let mut q = DenseMatrix::zeros(self.n_nodes(), self.n_springs());
        for (i, s) in self.springs.iter().enumerate() {
            q[(s.origin, i)] = 1.0;
            q[(s.terminus, i)] = -1.0;
        }
        q
    }

    pub fn stiffness(&self) -> Vector {
        Vector::from_iterator(self.n_springs(), self.springs.iter().map(|s| s.stiffness))
    }

    pub fn lower_limits(&self) -> Vector {
        Vector::from_iterator(self.n_springs(), self.springs.iter().map(|s| s.lower))
    }

    pub fn upper_limits(&self) -> Vector {
        Vector::from_iterator(self.n_springs(), self.springs.iter().map(|s| s.upper))
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidInput(format!("dimension must be 1, 2 or 3, got {}", self.dim)));
        }
        if self.coords.len() % self.dim != 0 {
            return Err(Error::DimensionMismatch("coordinate count is not a multiple of the dimension".into()));
        }
        if self.coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite node coordinate".into()));
        }
        let n = self.n_nodes();
        let nd = n * self.dim;
        if self.constraints.ncols() != nd {
            return Err(Error::DimensionMismatch(format!(
                "constraint matrix has {} columns, expected n·d = {nd}",
                self.constraints.ncols()
            )));
        }
        if self.constraints.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite constraint coefficient".into()));
        }
        if let Some(b) = &self.periodic_box {
            if b.len() != self.dim || b.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
                return Err(Error::InvalidInput("periodic box needs one positive length per axis".into()));
            }
        }
        for (i, s) in self.springs.iter().enumerate() {
            let id = i + 1;
            if s.origin >= n || s.terminus >= n {
                return Err(Error::InvalidInput(format!("spring {id} references a missing node")));
            }
            if s.origin == s.terminus {
                return Err(Error::InvalidInput(format!("spring {id} connects a node to itself")));
            }
            if !(s.stiffness.is_finite() && s.stiffness > 0.0) {
                return Err(Error::InvalidInput(format!("spring {id} stiffness must be positive")));
            }
            if !(s.lower.is_finite() && s.upper.is_finite() && s.lower < s.upper) {
                return Err(Error::InvalidInput(format!("spring {id} needs lower < upper limit")));
            }
            if let Some(shift) = &s.image_shift {
                if shift.len() != self.dim {
                    return Err(Error::InvalidInput(format!("spring {id} image shift has wrong length")));
                }
                if self.periodic_box.is_none() && shift.iter().any(|&k| k != 0) {
                    return Err(Error::InvalidInput(format!("spring {id} has an image shift but no periodic box")));
                }
            }
        }
        Ok(())
    }

    /// Vector from the terminus (or its periodic image) to the origin.
    fn chord(&self, i: usize) -> Vec<f64> {
        let s = &self.springs[i];
        let o = self.node(s.origin);
        let t = self.node(s.terminus);
        (0..self.dim)
            .map(|k| {
                let image = match (&s.image_shift, &self.periodic_box) {
                    (Some(shift), Some(b)) => shift[k] as f64 * b[k],
                    _ => 0.0,
                };
                o[k] - (t[k] + image)
            })
            .collect()
    }
}

/// Compatibility matrix `D` (m × n·d), unit directions 𝒟 (m × d) and
/// reference lengths.
pub fn compatibility_matrix(def: &LatticeDefinition) -> Result<(DenseMatrix, DenseMatrix, Vector)> {
    def.validate()?;
    let d = def.dim;
    let m = def.n_springs();
    let nd = def.coords.len();
    let mut jac = DenseMatrix::zeros(m, nd);
    let mut dirs = DenseMatrix::zeros(m, d);
    let mut lengths = Vector::zeros(m);
    for (i, s) in def.springs.iter().enumerate() {
        let chord = def.chord(i);
        let len = chord.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len == 0.0 {
            return Err(Error::DegenerateSpring { spring: i + 1 });
        }
        lengths[i] = len;
        for k in 0..d {
            let u = chord[k] / len;
            dirs[(i, k)] = u;
            jac[(i, d * s.origin + k)] += u;
            jac[(i, d * s.terminus + k)] -= u;
        }
    }
    Ok((jac, dirs, lengths))
}

/// Rank diagnostics of a lattice with its constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RigidityReport {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub q: usize,
    pub zero_modes: usize,
    pub self_stress_states: usize,
    pub rigid_motion_dim: usize,
    pub index_residual: i64,
    pub constraint_rank: usize,
    pub enhanced_rank: usize,
    pub kinematically_determinate: bool,
    pub statically_determinate: bool,
    /// `m - n·d + q`, meaningful as dim 𝒱 under kinematic determinacy.
    pub dim_v: i64,
}

impl RigidityReport {
    pub fn independent_constraints(&self) -> bool {
        self.constraint_rank == self.q
    }

    pub fn self_stress_exists(&self) -> bool {
        self.dim_v > 0
    }

    pub fn dim_u(&self) -> i64 {
        (self.n * self.d) as i64 - self.q as i64
    }

    pub fn all_assumptions_hold(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn failures(&self) -> Vec<(Assumption, String)> {
        let mut out = Vec::new();
        if !self.independent_constraints() {
            out.push((
                Assumption::IndependentConstraints,
                format!("rank R = {} but q = {}", self.constraint_rank, self.q),
            ));
        }
        if !self.kinematically_determinate {
            out.push((
                Assumption::KinematicDeterminacy,
                format!("rank of (D; R) is {} < n·d = {}", self.enhanced_rank, self.n * self.d),
            ));
        }
        if !self.self_stress_exists() {
            out.push((Assumption::SelfStressExists, format!("m - n·d + q = {}", self.dim_v)));
        }
        out
    }

    /// First failed assumption as an error.
    pub fn check(&self) -> Result<()> {
        match self.failures().into_iter().next() {
            None => Ok(()),
            Some((which, detail)) => Err(Error::AssumptionViolated { which, detail }),
        }
    }
}

pub fn validate_assumptions(def: &LatticeDefinition, rank_tol: f64) -> Result<RigidityReport> {
    let (jac, _, _) = compatibility_matrix(def)?;
    rigidity_from(def, &jac, rank_tol)
}

fn rigidity_from(def: &LatticeDefinition, jac: &DenseMatrix, rank_tol: f64) -> Result<RigidityReport> {
    let n = def.n_nodes();
    let d = def.dim;
    let m = def.n_springs();
    let q = def.n_constraints();
    let nd = n * d;
    let rank_d = numerical_rank(jac, rank_tol)?;
    let zero_modes = nd - rank_d;
    let self_stress_states = m - rank_d;
    let index_residual = zero_modes as i64 - self_stress_states as i64 - (nd as i64 - m as i64);
    let constraint_rank = numerical_rank(&def.constraints, rank_tol)?;
    let mut enhanced = DenseMatrix::zeros(m + q, nd);
    enhanced.view_mut((0, 0), (m, nd)).copy_from(jac);
    enhanced.view_mut((m, 0), (q, nd)).copy_from(&def.constraints);
    let enhanced_rank = numerical_rank(&enhanced, rank_tol)?;
    let dim_v = m as i64 - nd as i64 + q as i64;
    Ok(RigidityReport {
        n,
        m,
        d,
        q,
        zero_modes,
        self_stress_states,
        rigid_motion_dim: d * (d + 1) / 2,
        index_residual,
        constraint_rank,
        enhanced_rank,
        kinematically_determinate: enhanced_rank == nd,
        statically_determinate: dim_v == 0,
        dim_v,
    })
}

/// Piecewise-constant vector function: `values[k]` holds on
/// `[starts[k], starts[k + 1])`, the last value holds to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub starts: Vec<f64>,
    pub values: Vec<Vector>,
}

impl PiecewiseConstant {
    pub fn constant(value: Vector) -> Self {
        PiecewiseConstant { starts: vec![0.0], values: vec![value] }
    }

    pub fn new(starts: Vec<f64>, values: Vec<Vector>) -> Result<Self> {
        let pc = PiecewiseConstant { starts, values };
        pc.validate()?;
        Ok(pc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.starts.is_empty() || self.starts.len() != self.values.len() {
            return Err(Error::InvalidInput("piecewise-constant schedule needs one value per segment".into()));
        }
        if self.starts[0] != 0.0 {
            return Err(Error::InvalidInput("first rate segment must start at t = 0".into()));
        }
        if self.starts.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("segment starts must be strictly increasing".into()));
        }
        let len = self.values[0].len();
        if self.values.iter().any(|v| v.len() != len || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("segment values must be finite and of equal length".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn segment(&self, t: f64) -> usize {
        self.starts.iter().rposition(|&s| s <= t).unwrap_or(0)
    }

    pub fn value(&self, t: f64) -> &Vector {
        &self.values[self.segment(t)]
    }

    /// `∫_0^t` of the function.
    pub fn integral(&self, t: f64) -> Vector {
        let mut acc = Vector::zeros(self.len());
        for k in 0..self.starts.len() {
            let a = self.starts[k];
            if a >= t {
                break;
            }
            let b = self.starts.get(k + 1).copied().unwrap_or(f64::INFINITY).min(t);
            acc += &self.values[k] * (b - a);
        }
        acc
    }

    /// Segment boundaries strictly inside `(0, horizon)`.
    pub fn breakpoints(&self, horizon: f64) -> Vec<f64> {
        self.starts.iter().copied().filter(|&s| s > 0.0 && s < horizon).collect()
    }
}

/// Piecewise-linear vector function through `(times[k], values[k])`, held
/// constant outside the knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    pub times: Vec<f64>,
    pub values: Vec<Vector>,
}

impl PiecewiseLinear {
    pub fn constant(value: Vector) -> Self {
        PiecewiseLinear { times: vec![0.0], values: vec![value] }
    }

    pub fn new(times: Vec<f64>, values: Vec<Vector>) -> Result<Self> {
        let pl = PiecewiseLinear { times, values };
        pl.validate()?;
        Ok(pl)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.values.len() {
            return Err(Error::InvalidInput("piecewise-linear schedule needs one value per knot".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) || self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("knot times must be finite and strictly increasing".into()));
        }
        let len = self.values[0].len();
        if self.values.iter().any(|v| v.len() != len || v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidInput("knot values must be finite and of equal length".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, t: f64) -> Vector {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= self.times[last] {
            return self.values[last].clone();
        }
        let k = self.times.iter().rposition(|&s| s <= t).unwrap_or(0);
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let a = (t - t0) / (t1 - t0);
        &self.values[k] * (1.0 - a) + &self.values[k + 1] * a
    }

    /// True when the function does not change over `[0, horizon]`.
    pub fn is_constant_on(&self, horizon: f64) -> bool {
        let v0 = self.value(0.0);
        self.times
            .iter()
            .filter(|&&t| t > 0.0 && t <= horizon)
            .chain(std::iter::once(&horizon))
            .all(|&t| self.value(t) == v0)
    }
}

/// External loads: displacement constraint right-hand side `r(t)`, nodal
/// forces `f(t)` and, for periodic lattices, box strains `γ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    pub displacement_offset: Vector,
    pub displacement_rate: PiecewiseConstant,
    pub force: PiecewiseLinear,
    /// Rate of the engineering strain of each box axis.
    pub box_strain_rate: Option<PiecewiseConstant>,
    pub horizon: f64,
}

impl LoadSchedule {
    /// Constant displacement rate, zero force, no box strain.
    pub fn displacement(offset: Vector, rate: Vector, nd: usize, horizon: f64) -> Self {
        LoadSchedule {
            displacement_offset: offset,
            displacement_rate: PiecewiseConstant::constant(rate),
            force: PiecewiseLinear::constant(Vector::zeros(nd)),
            box_strain_rate: None,
            horizon,
        }
    }

    pub fn r(&self, t: f64) -> Vector {
        &self.displacement_offset + self.displacement_rate.integral(t)
    }

    pub fn r_rate(&self, t: f64) -> &Vector {
        self.displacement_rate.value(t)
    }

    pub fn f(&self, t: f64) -> Vector {
        self.force.value(t)
    }

    pub fn box_strain(&self, t: f64) -> Option<Vector> {
        self.box_strain_rate.as_ref().map(|g| g.integral(t))
    }

    pub fn validate(&self, def: &LatticeDefinition) -> Result<()> {
        let q = def.n_constraints();
        let nd = def.coords.len();
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {}", self.horizon)));
        }
        self.displacement_rate.validate()?;
        self.force.validate()?;
        if self.displacement_offset.len() != q || self.displacement_rate.len() != q {
            return Err(Error::DimensionMismatch(format!("displacement load must have length q = {q}")));
        }
        if self.displacement_offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite displacement offset".into()));
        }
        if self.force.len() != nd {
            return Err(Error::DimensionMismatch(format!("force load must have length n·d = {nd}")));
        }
        if let Some(g) = &self.box_strain_rate {
            g.validate()?;
            if def.periodic_box.is_none() {
                return Err(Error::InvalidInput("box strain load needs a periodic box".into()));
            }
            if g.len() != def.dim {
                return Err(Error::DimensionMismatch("box strain rate needs one entry per axis".into()));
            }
        }
        Ok(())
    }

    /// Times inside `(0, horizon)` where a rate changes.
    pub fn rate_breakpoints(&self) -> Vec<f64> {
        let mut out = self.displacement_rate.breakpoints(self.horizon);
        if let Some(g) = &self.box_strain_rate {
            out.extend(g.breakpoints(self.horizon));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Every time-independent matrix the sweeping process needs.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub q: usize,
    pub dim_u: usize,
    pub dim_v: usize,
    pub stiffness: Vector,
    pub lower: Vector,
    pub upper: Vector,
    pub compatibility: DenseMatrix,
    pub directions: DenseMatrix,
    pub reference_lengths: Vector,
    pub constraints: DenseMatrix,
    pub r_pinv: DenseMatrix,
    pub r_null: DenseMatrix,
    pub u_basis: DenseMatrix,
    pub v_basis: DenseMatrix,
    pub p_u: DenseMatrix,
    pub p_v: DenseMatrix,
    pub h: DenseMatrix,
    pub g: DenseMatrix,
    pub f: DenseMatrix,
    pub s_v: DenseMatrix,
    pub g_v: DenseMatrix,
    pub w: DenseMatrix,
    /// Elongation per unit box strain, m × d (zero without a periodic box).
    pub box_elongation: DenseMatrix,
    /// Translation per unit box strain, `-V P_V E`.
    pub b: DenseMatrix,
    pub rigidity: RigidityReport,
}

impl AssembledSystem {
    pub fn k(&self) -> DenseMatrix {
        DenseMatrix::from_diagonal(&self.stiffness)
    }

    pub fn k_inv(&self) -> DenseMatrix {
        DenseMatrix::from_diagonal(&self.stiffness.map(|k| 1.0 / k))
    }
}

/// Assembles all matrices after checking the standing assumptions.
pub fn assemble(def: &LatticeDefinition, rank_tol: f64) -> Result<AssembledSystem> {
    let (jac, dirs, lengths) = compatibility_matrix(def)?;
    let rigidity = rigidity_from(def, &jac, rank_tol)?;
    rigidity.check()?;
    let n = def.n_nodes();
    let d = def.dim;
    let m = def.n_springs();
    let q = def.n_constraints();
    let nd = n * d;
    let stiffness = def.stiffness();
    let k = DenseMatrix::from_diagonal(&stiffness);
    let k_inv = DenseMatrix::from_diagonal(&stiffness.map(|v| 1.0 / v));

    let r = &def.constraints;
    let r_pinv = pseudoinverse(r, rank_tol)?;
    let r_null = nullspace_basis(r, rank_tol)?;
    let u_basis = &jac * &r_null;
    let ut_k = u_basis.transpose() * &k;
    let v_basis = if ut_k.nrows() == 0 {
        DenseMatrix::identity(m, m)
    } else {
        nullspace_basis(&ut_k, rank_tol)?
    };
    let dim_u = u_basis.ncols();
    let dim_v = v_basis.ncols();
    if dim_u + dim_v != m {
        return Err(Error::AssumptionViolated {
            which: Assumption::KinematicDeterminacy,
            detail: format!("dim U + dim V = {} differs from m = {m}", dim_u + dim_v),
        });
    }

    let p_u = coordinate_projector(&u_basis, &k)?;
    let s_v = weighted_gram(&v_basis, &k)?;
    let p_v = coordinate_projector(&v_basis, &k)?;

    // H: top m rows of pinv((Dᵀ | Rᵀ))
    let mut eq = DenseMatrix::zeros(nd, m + q);
    eq.view_mut((0, 0), (nd, m)).copy_from(&jac.transpose());
    eq.view_mut((0, m), (nd, q)).copy_from(&r.transpose());
    let eq_pinv = pseudoinverse(&eq, rank_tol)?;
    let h = eq_pinv.rows(0, m).into_owned();

    let g_v = &p_v * &jac * &r_pinv;
    let g = &v_basis * &g_v;
    let f = &u_basis * &p_u * &k_inv * &h;
    let w = (&p_v * &k_inv).transpose() * &s_v;

    let mut box_elongation = DenseMatrix::zeros(m, d);
    if let Some(lens) = &def.periodic_box {
        for (i, s) in def.springs.iter().enumerate() {
            if let Some(shift) = &s.image_shift {
                for a in 0..d {
                    box_elongation[(i, a)] = -dirs[(i, a)] * shift[a] as f64 * lens[a];
                }
            }
        }
    }
    let b = -(&v_basis * &p_v * &box_elongation);

    Ok(AssembledSystem {
        n,
        m,
        d,
        q,
        dim_u,
        dim_v,
        stiffness,
        lower: def.lower_limits(),
        upper: def.upper_limits(),
        compatibility: jac,
        directions: dirs,
        reference_lengths: lengths,
        constraints: r.clone(),
        r_pinv,
        r_null,
        u_basis,
        v_basis,
        p_u,
        p_v,
        h,
        g,
        f,
        s_v,
        g_v,
        w,
        box_elongation,
        b,
        rigidity,
    })
}

/// `(Bᵀ K B)⁻¹ Bᵀ K` for a basis `B` with full column rank.
pub fn coordinate_projector(basis: &DenseMatrix, k: &DenseMatrix) -> Result<DenseMatrix> {
    let gram = weighted_gram(basis, k)?;
    let rhs = basis.transpose() * k;
    if gram.nrows() == 0 {
        return Ok(rhs);
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("basis is rank deficient in the stiffness metric".into()))?;
    Ok(chol.solve(&rhs))
}

/// `V P_V`, the K-orthogonal projector onto 𝒱; independent of the basis.
pub fn basis_independent_projector(sys: &AssembledSystem) -> DenseMatrix {
    &sys.v_basis * &sys.p_v
}

/// Convenience: a vector from a slice.
pub fn vector(xs: &[f64]) -> Vector {
    DVector::from_column_slice(xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_RANK_TOL;

    fn two_nodes() -> LatticeDefinition {
        LatticeDefinition {
            dim: 2,
            coords: vec![0.0, 0.0, 1.0, 0.0],
            springs: vec![Spring::new(0, 1, 1.0, -1.0, 1.0)],
            constraints: DenseMatrix::zeros(0, 4),
            periodic_box: None,
        }
    }

    #[test]
    fn single_spring_compatibility() {
        let (jac, dirs, len) = compatibility_matrix(&two_nodes()).unwrap();
        assert_eq!(jac, DenseMatrix::from_row_slice(1, 4, &[-1.0, 0.0, 1.0, 0.0]));
        assert_eq!(dirs, DenseMatrix::from_row_slice(1, 2, &[-1.0, 0.0]));
        assert_eq!(len[0], 1.0);
    }

    #[test]
    fn translations_are_zero_modes() {
        let (jac, _, _) = compatibility_matrix(&two_nodes()).unwrap();
        let zeta = vector(&[1.0, 0.0, 1.0, 0.0]);
        assert_eq!((&jac * zeta).amax(), 0.0);
    }

    #[test]
    fn zero_length_spring_is_rejected() {
        let mut def = two_nodes();
        def.coords = vec![0.5, 0.5, 0.5, 0.5];
        assert!(matches!(compatibility_matrix(&def), Err(Error::DegenerateSpring { spring: 1 })));
    }

    #[test]
    fn incidence_round_trip() {
        let def = two_nodes();
        let q = def.incidence();
        let back = LatticeDefinition::from_incidence(2, &q, def.coords.clone(), &[1.0], &[-1.0], &[1.0], DenseMatrix::zeros(0, 4)).unwrap();
        assert_eq!(back, def);
        let bad = DenseMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(LatticeDefinition::from_incidence(2, &bad, def.coords.clone(), &[1.0], &[-1.0], &[1.0], DenseMatrix::zeros(0, 4)).is_err());
    }

    #[test]
    fn invalid_limits_and_stiffness() {
        let mut def = two_nodes();
        def.springs[0].lower = 2.0;
        assert!(def.validate().is_err());
        let mut def = two_nodes();
        def.springs[0].stiffness = 0.0;
        assert!(def.validate().is_err());
    }

    #[test]
    fn assembly_rejects_missing_self_stress() {
        let mut def = two_nodes();
        let mut r = DenseMatrix::zeros(3, 4);
        r[(0, 0)] = 1.0;
        r[(1, 1)] = 1.0;
        r[(2, 3)] = 1.0;
        def.constraints = r;
        let rep = validate_assumptions(&def, DEFAULT_RANK_TOL).unwrap();
        assert!(rep.kinematically_determinate);
        assert!(rep.statically_determinate);
        match assemble(&def, DEFAULT_RANK_TOL) {
            Err(Error::AssumptionViolated { which, .. }) => assert_eq!(which, Assumption::SelfStressExists),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn piecewise_constant_integral() {
        let pc = PiecewiseConstant::new(vec![0.0, 1.0], vec![vector(&[1.0]), vector(&[-2.0])]).unwrap();
        assert_eq!(pc.integral(0.5)[0], 0.5);
        assert_eq!(pc.integral(2.0)[0], 1.0 - 2.0);
        assert_eq!(pc.value(1.5)[0], -2.0);
        assert_eq!(pc.breakpoints(3.0), vec![1.0]);
        assert!(PiecewiseConstant::new(vec![0.5], vec![vector(&[1.0])]).is_err());
    }

    #[test]
    fn piecewise_linear_interpolates_and_clamps() {
        let pl = PiecewiseLinear::new(vec![0.0, 2.0], vec![vector(&[0.0]), vector(&[4.0])]).unwrap();
        assert_eq!(pl.value(1.0)[0], 2.0);
        assert_eq!(pl.value(5.0)[0], 4.0);
        assert_eq!(pl.value(-1.0)[0], 0.0);
        assert!(!pl.is_constant_on(1.0));
        assert!(PiecewiseLinear::constant(vector(&[3.0])).is_constant_on(1.0));
    }
}

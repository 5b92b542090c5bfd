//! The moving set of the sweeping process and the change of variables
//! between the sweeping variable `y` and spring stresses.
//!
//! In the full space `y ∈ ℝᵐ` and the moving set is
//! `K⁻¹c⁻ + τ(t) <= y <= K⁻¹c⁺ + τ(t)`, `UᵀK y = 0`, with the translation
//! `τ(t) = G r(t) + B γ(t) - F f(t)`. In the reduced space `y_V ∈ ℝ^dim𝒱`
//! and the rows are `W y_V` instead of `y`.

use crate::error::{Error, Result};
use crate::lattice::{AssembledSystem, LoadSchedule};
use crate::linalg::{DenseMatrix, Vector};
use crate::qp::{PolyhedralSet, Projector};

/// Tolerance for accepting an initial stress outside the elastic range.
pub const INITIAL_CLAMP_TOL: f64 = 1e-9;
/// Relative equilibrium residual accepted (and projected away) in `σ₀`.
pub const EQUILIBRIUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Full,
    Reduced,
}

impl Space {
    pub fn as_str(self) -> &'static str {
        match self {
            Space::Full => "full",
            Space::Reduced => "reduced",
        }
    }
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Space::Full),
            "reduced" => Ok(Space::Reduced),
            other => Err(Error::InvalidInput(format!("unknown space '{other}' (expected full or reduced)"))),
        }
    }
}

/// Description of `𝒞(t)` in one of the two coordinate systems.
#[derive(Debug, Clone)]
pub struct MovingSetSpec {
    pub space: Space,
    pub box_lower: Vector,
    pub box_upper: Vector,
    /// `I` (full) or `W` (reduced); row `j` is bounded by spring `j`'s limits.
    pub rows: DenseMatrix,
    /// `UᵀK` in the full space, empty in the reduced space.
    pub equality_rows: DenseMatrix,
    /// `K` (full) or `S_V` (reduced).
    pub metric: DenseMatrix,
    /// Maps the sweeping variable to ℝᵐ: `I` or `V`.
    pub lift: DenseMatrix,
    /// Maps ℝᵐ to the sweeping variable: `I` or `P_V`.
    pub reduce: DenseMatrix,
    pub g: DenseMatrix,
    pub f: DenseMatrix,
    pub b: DenseMatrix,
    pub stiffness: Vector,
}

impl MovingSetSpec {
    pub fn new(sys: &AssembledSystem, space: Space) -> Self {
        let m = sys.m;
        let k_inv = sys.stiffness.map(|k| 1.0 / k);
        let (rows, equality_rows, metric, lift, reduce) = match space {
            Space::Full => (
                DenseMatrix::identity(m, m),
                sys.u_basis.transpose() * sys.k(),
                sys.k(),
                DenseMatrix::identity(m, m),
                DenseMatrix::identity(m, m),
            ),
            Space::Reduced => (
                sys.w.clone(),
                DenseMatrix::zeros(0, sys.dim_v),
                sys.s_v.clone(),
                sys.v_basis.clone(),
                sys.p_v.clone(),
            ),
        };
        MovingSetSpec {
            space,
            box_lower: sys.lower.component_mul(&k_inv),
            box_upper: sys.upper.component_mul(&k_inv),
            rows,
            equality_rows,
            metric,
            lift,
            reduce,
            g: sys.g.clone(),
            f: sys.f.clone(),
            b: sys.b.clone(),
            stiffness: sys.stiffness.clone(),
        }
    }

    /// Number of springs.
    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    /// Dimension of the sweeping variable.
    pub fn n_vars(&self) -> usize {
        self.rows.ncols()
    }

    /// `(rows; -rows)`: upper bounds first, then lower bounds.
    pub fn inequality_matrix(&self) -> DenseMatrix {
        let m = self.m();
        let n = self.n_vars();
        let mut a = DenseMatrix::zeros(2 * m, n);
        a.view_mut((0, 0), (m, n)).copy_from(&self.rows);
        a.view_mut((m, 0), (m, n)).copy_from(&(-&self.rows));
        a
    }

    pub fn equality_rhs(&self) -> Vector {
        Vector::zeros(self.equality_rows.nrows())
    }

    /// `τ(t) = G r(t) + B γ(t) - F f(t)`.
    pub fn translation(&self, t: f64, loads: &LoadSchedule) -> Vector {
        let mut tau = &self.g * loads.r(t) - &self.f * loads.f(t);
        if let Some(gamma) = loads.box_strain(t) {
            tau += &self.b * gamma;
        }
        tau
    }

    /// `dτ/dt` for constant force, right-continuous at rate breakpoints.
    pub fn translation_rate(&self, t: f64, loads: &LoadSchedule) -> Vector {
        let mut rate = &self.g * loads.r_rate(t);
        if let Some(g) = &loads.box_strain_rate {
            rate += &self.b * g.value(t);
        }
        rate
    }

    /// Right-hand side of `(rows; -rows) y <= b` for a given translation.
    pub fn bounds_for(&self, tau: &Vector) -> Vector {
        let m = self.m();
        let mut b = Vector::zeros(2 * m);
        for j in 0..m {
            b[j] = self.box_upper[j] + tau[j];
            b[m + j] = -(self.box_lower[j] + tau[j]);
        }
        b
    }

    pub fn bounds(&self, t: f64, loads: &LoadSchedule) -> Vector {
        self.bounds_for(&self.translation(t, loads))
    }

    pub fn moving_set_at(&self, t: f64, loads: &LoadSchedule) -> PolyhedralSet {
        PolyhedralSet {
            a: self.inequality_matrix(),
            b: self.bounds(t, loads),
            a_eq: self.equality_rows.clone(),
            b_eq: self.equality_rhs(),
        }
    }

    pub fn projector(&self, tol: f64) -> Result<Projector> {
        Projector::new(&self.metric, &self.inequality_matrix(), &self.equality_rows, tol)
    }

    pub fn lift(&self, y: &Vector) -> Vector {
        &self.lift * y
    }

    pub fn reduce(&self, x: &Vector) -> Vector {
        &self.reduce * x
    }

    /// `(ε, σ)` with `ε = lift(y) - τ(t)`, `σ = K ε`.
    pub fn recover_stress(&self, y: &Vector, t: f64, loads: &LoadSchedule) -> (Vector, Vector) {
        let eps = self.lift(y) - self.translation(t, loads);
        let sigma = eps.component_mul(&self.stiffness);
        (eps, sigma)
    }

    pub fn state(&self, y: Vector, t: f64, loads: &LoadSchedule) -> SweepingState {
        let (epsilon, sigma) = self.recover_stress(&y, t, loads);
        SweepingState { time: t, y, sigma, epsilon }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepingState {
    pub time: f64,
    pub y: Vector,
    pub sigma: Vector,
    pub epsilon: Vector,
}

/// Initial state from admissible, equilibrated stresses `σ₀`.
pub fn initial_state(
    sys: &AssembledSystem,
    spec: &MovingSetSpec,
    sigma0: &Vector,
    loads: &LoadSchedule,
) -> Result<SweepingState> {
    let m = sys.m;
    if sigma0.len() != m {
        return Err(Error::DimensionMismatch(format!("initial stress has length {}, expected {m}", sigma0.len())));
    }
    if sigma0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInitialCondition("non-finite initial stress".into()));
    }
    // equilibrium first: small residuals from rounded input are projected
    // away along K U, larger ones are rejected
    let f0 = loads.f(0.0);
    let hf = &sys.h * &f0;
    let residual = sys.u_basis.transpose() * (sigma0 - &hf);
    let scale = sigma0.amax().max(hf.amax()).max(sys.upper.amax()).max(sys.lower.amax());
    if residual.len() > 0 && residual.amax() > EQUILIBRIUM_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidInitialCondition(format!(
            "initial stress is not in equilibrium with f(0) (residual {:.3e})",
            residual.amax()
        )));
    }
    let excess = sigma0 - &hf;
    let correction = (&sys.u_basis * (&sys.p_u * excess.component_div(&sys.stiffness))).component_mul(&sys.stiffness);
    let mut sigma = sigma0 - correction;
    for i in 0..m {
        let (lo, hi) = (sys.lower[i], sys.upper[i]);
        if sigma[i] > hi {
            if sigma[i] - hi > INITIAL_CLAMP_TOL {
                return Err(Error::InvalidInitialCondition(format!(
                    "stress of spring {} is {} above its upper limit {hi}",
                    i + 1,
                    sigma[i]
                )));
            }
            sigma[i] = hi;
        } else if sigma[i] < lo {
            if lo - sigma[i] > INITIAL_CLAMP_TOL {
                return Err(Error::InvalidInitialCondition(format!(
                    "stress of spring {} is {} below its lower limit {lo}",
                    i + 1,
                    sigma[i]
                )));
            }
            sigma[i] = lo;
        }
    }
    let eps = sigma.component_div(&sys.stiffness);
    let full = &eps + spec.translation(0.0, loads);
    let y = match spec.space {
        Space::Full => full,
        Space::Reduced => spec.reduce(&full),
    };
    let set = spec.moving_set_at(0.0, loads);
    let viol = set.violation(&y);
    if viol > INITIAL_CLAMP_TOL.max(1e-8 * scale) {
        return Err(Error::InvalidInitialCondition(format!(
            "initial point lies outside the moving set (violation {viol:.3e})"
        )));
    }
    Ok(SweepingState { time: 0.0, y, sigma, epsilon: eps })
}

/// Whether the yield box shifted by `-F f` meets the hyperplane of
/// self-equilibrated elongations.
pub fn safe_load_check(sys: &AssembledSystem, f: &Vector) -> Result<bool> {
    if f.len() != sys.n * sys.d {
        return Err(Error::DimensionMismatch(format!("force has length {}, expected {}", f.len(), sys.n * sys.d)));
    }
    let spec = MovingSetSpec::new(sys, Space::Full);
    let tau = -(&sys.f * f);
    let b = spec.bounds_for(&tau);
    let projector = spec.projector(crate::qp::DEFAULT_QP_TOL)?;
    match projector.project(&Vector::zeros(sys.m), &b, &spec.equality_rhs()) {
        Ok(_) => Ok(true),
        Err(Error::Infeasible) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Safe-load check at every force knot in `[0, T]` and at both ends. The
/// feasible forces form a convex set, so checking knots covers the segments
/// between them. Returns the first failing time.
pub fn safe_load_schedule(sys: &AssembledSystem, loads: &LoadSchedule) -> Result<Option<f64>> {
    let mut times = vec![0.0];
    times.extend(loads.force.times.iter().copied().filter(|&t| t > 0.0 && t < loads.horizon));
    times.push(loads.horizon);
    for t in times {
        if !safe_load_check(sys, &loads.f(t))? {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Largest violation of the state invariants: Hooke's law, admissibility
/// and equilibrium with `f(t)`.
pub fn state_residual(sys: &AssembledSystem, state: &SweepingState, loads: &LoadSchedule) -> f64 {
    let hooke = (&state.sigma - state.epsilon.component_mul(&sys.stiffness)).amax();
    let admissible = (0..sys.m)
        .map(|i| (state.sigma[i] - sys.upper[i]).max(sys.lower[i] - state.sigma[i]).max(0.0))
        .fold(0.0_f64, f64::max);
    let eq = sys.u_basis.transpose() * (&state.sigma - &sys.h * loads.f(state.time));
    let eq = if eq.len() == 0 { 0.0 } else { eq.amax() };
    hooke.max(admissible).max(eq)
}

//! Weighted projection onto polyhedra.
//!
//! `proj^S(x, C) = argmin_{y in C} (y - x)ᵀ S (y - x)` for
//! `C = {y : A y <= b, A_eq y = b_eq}`. Equalities are eliminated through an
//! orthonormal kernel basis `Z` of `A_eq`; the remaining strictly convex QP in
//! `w` (with `y = y_p + Z w`) is solved by the dual active-set method of
//! Goldfarb and Idnani, which starts at the unconstrained minimizer (the point
//! itself) and reports infeasibility when no dual step is possible.

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, nullspace_basis, pseudoinverse, DenseMatrix, Vector, DEFAULT_RANK_TOL};

/// Default absolute feasibility and optimality tolerance.
pub const DEFAULT_QP_TOL: f64 = 1e-10;

/// `{y : A y <= b, A_eq y = b_eq}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralSet {
    pub a: DenseMatrix,
    pub b: Vector,
    pub a_eq: DenseMatrix,
    pub b_eq: Vector,
}

impl PolyhedralSet {
    pub fn new(a: DenseMatrix, b: Vector, a_eq: DenseMatrix, b_eq: Vector) -> Result<Self> {
        let set = PolyhedralSet { a, b, a_eq, b_eq };
        set.validate()?;
        Ok(set)
    }

    /// Set with inequality rows only.
    pub fn inequalities(a: DenseMatrix, b: Vector) -> Result<Self> {
        let n = a.ncols();
        Self::new(a, b, DenseMatrix::zeros(0, n), Vector::zeros(0))
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.ncols() != self.a_eq.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "inequality rows have {} columns, equality rows {}",
                self.a.ncols(),
                self.a_eq.ncols()
            )));
        }
        if self.a.nrows() != self.b.len() || self.a_eq.nrows() != self.b_eq.len() {
            return Err(Error::DimensionMismatch("right-hand side length".into()));
        }
        let finite = self.a.iter().chain(self.b.iter()).chain(self.a_eq.iter()).chain(self.b_eq.iter());
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("polyhedral set has non-finite entries".into()));
        }
        Ok(())
    }

    /// Largest constraint violation at `y` (0 when feasible).
    pub fn violation(&self, y: &Vector) -> f64 {
        let ineq = (&self.a * y - &self.b).iter().fold(0.0_f64, |m, v| m.max(*v));
        let eq = (&self.a_eq * y - &self.b_eq).amax();
        ineq.max(eq)
    }

    pub fn contains(&self, y: &Vector, tol: f64) -> bool {
        self.violation(y) <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vector,
    /// Inequality rows (0-based) in the final active set.
    pub active_inequalities: Vec<usize>,
    pub kkt_residual: f64,
}

/// Projection problem with a fixed metric and fixed constraint rows, prepared
/// once so that repeated projections with different right-hand sides only
/// pay for the active-set iterations.
#[derive(Debug, Clone)]
pub struct Projector {
    s: DenseMatrix,
    a: DenseMatrix,
    a_eq: DenseMatrix,
    aeq_pinv: DenseMatrix,
    z: DenseMatrix,
    zt_s: DenseMatrix,
    // constraint normals in w coordinates, one row per inequality
    az: DenseMatrix,
    chol: Cholesky<f64, Dyn>,
    j0: DenseMatrix,
    tol: f64,
}

impl Projector {
    pub fn new(s: &DenseMatrix, a: &DenseMatrix, a_eq: &DenseMatrix, tol: f64) -> Result<Self> {
        let n = s.nrows();
        if s.ncols() != n {
            return Err(Error::DimensionMismatch("metric must be square".into()));
        }
        if a.ncols() != n || a_eq.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "metric is {n}x{n} but constraints have {} and {} columns",
                a.ncols(),
                a_eq.ncols()
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        if s.iter().chain(a.iter()).chain(a_eq.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite projection data".into()));
        }
        let asym = max_abs(&(s - s.transpose()));
        if asym > 1e-9 * max_abs(s).max(1.0) {
            return Err(Error::InvalidInput("metric is not symmetric".into()));
        }
        let (z, aeq_pinv) = if a_eq.nrows() == 0 {
            (DenseMatrix::identity(n, n), DenseMatrix::zeros(n, 0))
        } else {
            (nullspace_basis(a_eq, DEFAULT_RANK_TOL)?, pseudoinverse(a_eq, DEFAULT_RANK_TOL)?)
        };
        let zt_s = z.transpose() * s;
        let h = &zt_s * &z;
        let h = (&h + h.transpose()) * 0.5;
        let k = h.nrows();
        let chol = Cholesky::new(h)
            .ok_or_else(|| Error::InvalidInput("metric is not positive definite".into()))?;
        let j0 = if k == 0 {
            DenseMatrix::zeros(0, 0)
        } else {
            let l = chol.l();
            let linv = l
                .solve_lower_triangular(&DenseMatrix::identity(k, k))
                .ok_or_else(|| Error::InvalidInput("singular reduced metric".into()))?;
            linv.transpose()
        };
        let az = a * &z;
        Ok(Projector { s: s.clone(), a: a.clone(), a_eq: a_eq.clone(), aeq_pinv, z, zt_s, az, chol, j0, tol })
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn n_inequalities(&self) -> usize {
        self.a.nrows()
    }

    pub fn metric(&self) -> &DenseMatrix {
        &self.s
    }

    /// Projects `x` onto `{A y <= b, A_eq y = b_eq}`.
    pub fn project(&self, x: &Vector, b: &Vector, b_eq: &Vector) -> Result<ProjectionResult> {
        let rows: Vec<usize> = (0..self.a.nrows()).collect();
        self.project_subset(x, b, b_eq, &rows)
    }

    /// Projection keeping only the inequality rows listed in `rows`.
    pub fn project_subset(
        &self,
        x: &Vector,
        b: &Vector,
        b_eq: &Vector,
        rows: &[usize],
    ) -> Result<ProjectionResult> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch(format!("point has length {}, expected {n}", x.len())));
        }
        if b.len() != self.a.nrows() || b_eq.len() != self.a_eq.nrows() {
            return Err(Error::DimensionMismatch("right-hand side length".into()));
        }
        if rows.iter().any(|&r| r >= self.a.nrows()) {
            return Err(Error::InvalidInput("row subset index out of range".into()));
        }
        if x.iter().chain(b.iter()).chain(b_eq.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite projection data".into()));
        }

        let y_p = &self.aeq_pinv * b_eq;
        if self.a_eq.nrows() > 0 {
            let res = (&self.a_eq * &y_p - b_eq).amax();
            if res > self.tol.max(1e-9 * (1.0 + b_eq.amax())) {
                return Err(Error::Infeasible);
            }
        }
        // ½ wᵀHw + gᵀw with g = Zᵀ S (y_p - x)
        let g = &self.zt_s * (&y_p - x);
        // GI form: nᵀw >= c with n = -(AZ)_row, c = -(b - A y_p)
        let shift = &self.a * &y_p;
        let rhs: Vec<f64> = rows.iter().map(|&r| -(b[r] - shift[r])).collect();
        let (w, active, u) = self.goldfarb_idnani(&g, rows, &rhs)?;

        let point = &y_p + &self.z * &w;
        let active_inequalities: Vec<usize> = active.iter().map(|&i| rows[i]).collect();

        // KKT residual: primal violation over listed rows, stationarity, dual sign
        let mut viol = 0.0_f64;
        let ay = &self.a * &point;
        for &r in rows {
            viol = viol.max(ay[r] - b[r]);
        }
        if self.a_eq.nrows() > 0 {
            viol = viol.max((&self.a_eq * &point - b_eq).amax());
        }
        let h_w = self.chol.l() * (self.chol.l().transpose() * &w);
        let mut stat = h_w + &g;
        for (pos, &i) in active.iter().enumerate() {
            let row = rows[i];
            // n = -(AZ)_row, stationarity: Hw + g - Σ u n = 0
            stat += self.az.row(row).transpose() * u[pos];
        }
        let neg = u.iter().fold(0.0_f64, |m, v| m.max(-v));
        let kkt_residual = viol.max(stat.amax()).max(neg);
        Ok(ProjectionResult { point, active_inequalities, kkt_residual })
    }

    /// Dual active-set iterations in `w` coordinates. `rows[i]` selects the
    /// row of `az`, `rhs[i]` its GI right-hand side. Returns `w`, the active
    /// positions into `rows` and their multipliers.
    fn goldfarb_idnani(&self, g: &Vector, rows: &[usize], rhs: &[f64]) -> Result<(Vector, Vec<usize>, Vec<f64>)> {
        let k = self.j0.nrows();
        let l = rows.len();
        let normal = |i: usize| -> Vector { -self.az.row(rows[i]).transpose() };

        // unconstrained minimizer
        let mut w = if k == 0 { Vector::zeros(0) } else { -self.chol.solve(g) };
        let mut j = self.j0.clone();
        let mut r_mat = DenseMatrix::zeros(k.max(1), k.max(1));
        let mut active: Vec<usize> = Vec::new();
        let mut u: Vec<f64> = Vec::new();
        let mut is_active = vec![false; l];

        if k == 0 {
            // only the point y_p is available
            for i in 0..l {
                if -rhs[i] < -self.tol {
                    return Err(Error::Infeasible);
                }
            }
            return Ok((w, active, u));
        }

        let max_iter = 50 * (l + k) + 100;
        let mut iter = 0usize;
        loop {
            // step 1: most violated constraint, lowest index on ties
            let mut p = None;
            let mut worst = -self.tol;
            for i in 0..l {
                if is_active[i] {
                    continue;
                }
                let s = normal(i).dot(&w) - rhs[i];
                if s < worst {
                    worst = s;
                    p = Some(i);
                }
            }
            let Some(p) = p else {
                return Ok((w, active, u));
            };
            let np = normal(p);
            let mut u_p = 0.0_f64;

            // step 2: move toward satisfying constraint p
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(Error::NoConvergence(format!("active-set iteration limit {max_iter} reached")));
                }
                let q = active.len();
                let d = j.transpose() * &np;
                let d2_norm = d.rows(q, k - q).norm();
                let dependent = d2_norm <= 1e-11 * d.norm() || q == k;
                let z = if dependent { Vector::zeros(k) } else { j.columns(q, k - q) * d.rows(q, k - q) };
                // r = R⁻¹ d₁
                let mut r = vec![0.0; q];
                for a in (0..q).rev() {
                    let mut acc = d[a];
                    for c in (a + 1)..q {
                        acc -= r_mat[(a, c)] * r[c];
                    }
                    r[a] = acc / r_mat[(a, a)];
                }
                let rmax = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let mut t1 = f64::INFINITY;
                let mut drop_pos = None;
                for (pos, &rv) in r.iter().enumerate() {
                    if rv > 1e-14 * rmax.max(1e-300) && rv > 0.0 {
                        let ratio = u[pos] / rv;
                        if ratio < t1 {
                            t1 = ratio;
                            drop_pos = Some(pos);
                        }
                    }
                }
                let s_p = np.dot(&w) - rhs[p];
                let t2 = if dependent {
                    f64::INFINITY
                } else {
                    let zn = z.dot(&np);
                    if zn > 0.0 {
                        -s_p / zn
                    } else {
                        f64::INFINITY
                    }
                };
                let t = t1.min(t2);
                if !t.is_finite() {
                    return Err(Error::Infeasible);
                }
                if !t2.is_finite() {
                    // dual-only step, then drop the blocking constraint
                    for (pos, rv) in r.iter().enumerate() {
                        u[pos] -= t * rv;
                    }
                    u_p += t;
                    let pos = drop_pos.expect("finite t1 has a blocking index");
                    self.drop_constraint(&mut j, &mut r_mat, &mut active, &mut u, &mut is_active, pos);
                    continue;
                }
                w += &z * t;
                for (pos, rv) in r.iter().enumerate() {
                    u[pos] -= t * rv;
                }
                u_p += t;
                if t2 <= t1 {
                    add_constraint(&mut j, &mut r_mat, &d, q, k);
                    active.push(p);
                    u.push(u_p);
                    is_active[p] = true;
                    break;
                }
                let pos = drop_pos.expect("partial step has a blocking index");
                self.drop_constraint(&mut j, &mut r_mat, &mut active, &mut u, &mut is_active, pos);
            }
        }
    }

    fn drop_constraint(
        &self,
        j: &mut DenseMatrix,
        r_mat: &mut DenseMatrix,
        active: &mut Vec<usize>,
        u: &mut Vec<f64>,
        is_active: &mut [bool],
        pos: usize,
    ) {
        let q = active.len();
        is_active[active[pos]] = false;
        active.remove(pos);
        u.remove(pos);
        // shift R columns left
        for c in pos..q - 1 {
            for rr in 0..q {
                r_mat[(rr, c)] = r_mat[(rr, c + 1)];
            }
        }
        for rr in 0..q {
            r_mat[(rr, q - 1)] = 0.0;
        }
        // restore triangular form with rotations on rows i, i+1
        for i in pos..q - 1 {
            let a = r_mat[(i, i)];
            let bb = r_mat[(i + 1, i)];
            let h = a.hypot(bb);
            if h == 0.0 {
                continue;
            }
            let (c, s) = (a / h, bb / h);
            for col in i..q - 1 {
                let x1 = r_mat[(i, col)];
                let x2 = r_mat[(i + 1, col)];
                r_mat[(i, col)] = c * x1 + s * x2;
                r_mat[(i + 1, col)] = -s * x1 + c * x2;
            }
            r_mat[(i + 1, i)] = 0.0;
            rotate_columns(j, i, c, s);
        }
    }
}

/// Rotates columns `i` and `i + 1` of `j`.
fn rotate_columns(j: &mut DenseMatrix, i: usize, c: f64, s: f64) {
    for row in 0..j.nrows() {
        let a = j[(row, i)];
        let b = j[(row, i + 1)];
        j[(row, i)] = c * a + s * b;
        j[(row, i + 1)] = -s * a + c * b;
    }
}

fn add_constraint(j: &mut DenseMatrix, r_mat: &mut DenseMatrix, d: &Vector, q: usize, k: usize) {
    let mut d = d.clone();
    for idx in ((q + 1)..k).rev() {
        let a = d[idx - 1];
        let b = d[idx];
        if b == 0.0 {
            continue;
        }
        let h = a.hypot(b);
        let (c, s) = (a / h, b / h);
        d[idx - 1] = h;
        d[idx] = 0.0;
        rotate_columns(j, idx - 1, c, s);
    }
    for rr in 0..=q {
        r_mat[(rr, q)] = d[rr];
    }
}

/// One-shot projection of `x` onto `set` in the metric `s`.
pub fn project(s: &DenseMatrix, x: &Vector, set: &PolyhedralSet, tol: f64) -> Result<ProjectionResult> {
    set.validate()?;
    Projector::new(s, &set.a, &set.a_eq, tol)?.project(x, &set.b, &set.b_eq)
}

/// Projection onto a polyhedral cone (all right-hand sides zero).
pub fn project_cone(s: &DenseMatrix, x: &Vector, cone: &PolyhedralSet, tol: f64) -> Result<ProjectionResult> {
    cone.validate()?;
    if cone.b.iter().chain(cone.b_eq.iter()).any(|v| *v != 0.0) {
        return Err(Error::InvalidInput("cone must have zero right-hand sides".into()));
    }
    project(s, x, cone, tol)
}

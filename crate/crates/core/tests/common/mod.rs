#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sweepnet::lattice::{LatticeDefinition, Spring};
use sweepnet::qp::PolyhedralSet;

pub type M = DMatrix<f64>;
pub type V = DVector<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn rand_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize, amp: f64) -> M {
    M::from_fn(rows, cols, |_, _| r.gen_range(-amp..amp))
}

pub fn rand_vector(r: &mut ChaCha8Rng, len: usize, amp: f64) -> V {
    V::from_fn(len, |_, _| r.gen_range(-amp..amp))
}

/// Symmetric positive definite weight with eigenvalues bounded below by 0.5.
pub fn rand_spd(r: &mut ChaCha8Rng, n: usize) -> M {
    let a = rand_matrix(r, n, n, 1.0);
    a.transpose() * a + M::identity(n, n) * 0.5
}

pub struct QpInstance {
    pub s: M,
    pub x: V,
    pub set: PolyhedralSet,
}

/// A random nonempty polyhedron in dimension `n ≤ 4` with `l ≤ 6` rows and at
/// most one equality, plus a weight and a point to project.
pub fn rand_qp(r: &mut ChaCha8Rng) -> QpInstance {
    let n = r.gen_range(1..=4);
    let l = r.gen_range(1..=6);
    let s = rand_spd(r, n);
    let inner = rand_vector(r, n, 1.0);
    let a = rand_matrix(r, l, n, 1.0);
    let slack = V::from_fn(l, |_, _| if r.gen_bool(0.3) { 0.0 } else { r.gen_range(0.0..1.0) });
    let b = &a * &inner + slack;
    let (a_eq, b_eq) = if n > 1 && r.gen_bool(0.3) {
        let row = rand_matrix(r, 1, n, 1.0);
        let rhs = &row * &inner;
        (row, rhs)
    } else {
        (M::zeros(0, n), V::zeros(0))
    };
    let x = rand_vector(r, n, 3.0);
    QpInstance { s, x, set: PolyhedralSet::new(a, b, a_eq, b_eq).unwrap() }
}

/// Exhaustive active-set enumeration: solve the equality-constrained problem
/// for every subset of inequality rows and keep the best feasible candidate.
pub fn enumerate_projection(s: &M, x: &V, set: &PolyhedralSet) -> Option<V> {
    let n = x.len();
    let l = set.a.nrows();
    let mut best: Option<(f64, V)> = None;
    for mask in 0u32..(1 << l) {
        let rows: Vec<usize> = (0..l).filter(|j| mask >> j & 1 == 1).collect();
        let k = rows.len() + set.a_eq.nrows();
        let mut kkt = M::zeros(n + k, n + k);
        let mut rhs = V::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(s);
        rhs.rows_mut(0, n).copy_from(&(s * x));
        let mut put = |c: usize, row: nalgebra::DMatrixView<f64>, val: f64| {
            for i in 0..n {
                kkt[(n + c, i)] = row[(0, i)];
                kkt[(i, n + c)] = row[(0, i)];
            }
            rhs[n + c] = val;
        };
        for (c, &j) in rows.iter().enumerate() {
            put(c, set.a.rows(j, 1), set.b[j]);
        }
        for e in 0..set.a_eq.nrows() {
            put(rows.len() + e, set.a_eq.rows(e, 1), set.b_eq[e]);
        }
        let lu = kkt.full_piv_lu();
        if !lu.is_invertible() {
            continue;
        }
        let Some(sol) = lu.solve(&rhs) else { continue };
        let y = sol.rows(0, n).into_owned();
        if !sol.iter().all(|v| v.is_finite()) {
            continue;
        }
        let feasible = (0..l).all(|j| (set.a.row(j) * &y)[0] <= set.b[j] + 1e-9)
            && (0..set.a_eq.nrows()).all(|e| ((set.a_eq.row(e) * &y)[0] - set.b_eq[e]).abs() <= 1e-9);
        if !feasible {
            continue;
        }
        let d = &y - x;
        let obj = (d.transpose() * s * &d)[0];
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, y));
        }
    }
    best.map(|(_, y)| y)
}

pub fn s_norm(s: &M, v: &V) -> f64 {
    (v.transpose() * s * v)[0].max(0.0).sqrt()
}

/// Jittered square grid with random diagonals, node 0 pinned, node 1 held
/// vertically and up to three extra random constraint rows. Not every
/// output satisfies the standing assumptions.
pub fn rand_lattice(r: &mut ChaCha8Rng) -> LatticeDefinition {
    let (nx, ny) = (r.gen_range(2..=4), r.gen_range(2..=4));
    let mut coords = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            coords.push(i as f64 + r.gen_range(-0.2..0.2));
            coords.push(j as f64 + r.gen_range(-0.2..0.2));
        }
    }
    let id = |i: usize, j: usize| j * nx + i;
    let mut pairs = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                pairs.push((id(i, j), id(i + 1, j)));
            }
            if j + 1 < ny {
                pairs.push((id(i, j), id(i, j + 1)));
            }
            if i + 1 < nx && j + 1 < ny {
                match r.gen_range(0..3) {
                    0 => pairs.push((id(i, j), id(i + 1, j + 1))),
                    1 => pairs.push((id(i + 1, j), id(i, j + 1))),
                    _ => {
                        pairs.push((id(i, j), id(i + 1, j + 1)));
                        pairs.push((id(i + 1, j), id(i, j + 1)));
                    }
                }
            }
        }
    }
    let springs = pairs
        .into_iter()
        .map(|(a, b)| {
            let (a, b) = if r.gen_bool(0.5) { (a, b) } else { (b, a) };
            Spring::new(a, b, r.gen_range(0.5..2.0), -r.gen_range(0.5..2.0), r.gen_range(0.5..2.0))
        })
        .collect();
    let nd = 2 * nx * ny;
    let extra = r.gen_range(0..=3);
    let mut rows = vec![(0, 1.0, 0.0), (0, 0.0, 1.0), (id(1, 0), 0.0, 1.0)];
    for _ in 0..extra {
        let ang: f64 = r.gen_range(0.0..std::f64::consts::TAU);
        rows.push((r.gen_range(0..nx * ny), ang.cos(), ang.sin()));
    }
    let mut constraints = M::zeros(rows.len(), nd);
    for (k, &(node, cx, cy)) in rows.iter().enumerate() {
        constraints[(k, 2 * node)] = cx;
        constraints[(k, 2 * node + 1)] = cy;
    }
    LatticeDefinition { dim: 2, coords, springs, constraints, periodic_box: None }
}

/// Largest deviation of the solver from the enumeration oracle.
pub fn oracle_gap(inst: &QpInstance) -> f64 {
    let got = sweepnet::qp::project(&inst.s, &inst.x, &inst.set, 1e-10).unwrap().point;
    let want = enumerate_projection(&inst.s, &inst.x, &inst.set).expect("instances are feasible");
    (got - want).amax()
}

/// Idempotence gap, non-expansiveness excess and worst variational
/// inequality excess (relative to the allowed slack) for one instance.
pub fn qp_properties(inst: &QpInstance, r: &mut ChaCha8Rng, probes: usize) -> (f64, f64, f64) {
    use sweepnet::qp::project;
    let tol = 1e-10;
    let (s, set) = (&inst.s, &inst.set);
    let y = project(s, &inst.x, set, tol).unwrap().point;
    let yy = project(s, &y, set, tol).unwrap().point;
    let idem = (&yy - &y).amax();
    let x2 = rand_vector(r, inst.x.len(), 3.0);
    let y2 = project(s, &x2, set, tol).unwrap().point;
    let nonexp = s_norm(s, &(&y - &y2)) - s_norm(s, &(&inst.x - &x2));
    let mut vi = f64::NEG_INFINITY;
    for _ in 0..probes {
        let z = rand_vector(r, inst.x.len(), 3.0);
        let c = project(s, &z, set, tol).unwrap().point;
        let lhs = ((&inst.x - &y).transpose() * s * (&c - &y))[0];
        let slack = 1e-9 * (1.0 + inst.x.norm()) * (1.0 + c.norm());
        vi = vi.max(lhs - slack);
    }
    (idem, nonexp, vi)
}

fn penrose(a: &M, p: &M) -> f64 {
    let ap = a * p;
    let pa = p * a;
    [(&ap * a - a).norm(), (&pa * p - p).norm(), (&ap - ap.transpose()).norm(), (&pa - pa.transpose()).norm()]
        .into_iter()
        .fold(0.0, f64::max)
}

/// Every structural invariant of an assembled system, as a list of failures.
pub fn assembly_violations(sys: &sweepnet::lattice::AssembledSystem, r: &mut ChaCha8Rng) -> Vec<String> {
    use sweepnet::linalg::{nullspace_basis, numerical_rank, pseudoinverse, spectral_norm};
    let mut out = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            out.push(what);
        }
    };
    let (m, nd, q) = (sys.m, sys.n * sys.d, sys.q);
    let tol = 1e-10;
    let k = sys.k();
    let jac = &sys.compatibility;

    let rn = spectral_norm(&sys.constraints).max(1.0);
    check(penrose(&sys.constraints, &sys.r_pinv) <= 10.0 * tol * rn, "Penrose identities for R".into());
    let jp = pseudoinverse(jac, tol).unwrap();
    let jn = spectral_norm(jac).max(1.0);
    let pr = penrose(jac, &jp);
    check(pr <= 10.0 * tol * jn, format!("Penrose identities for the compatibility matrix ({pr:e})"));
    let rank = numerical_rank(jac, tol).unwrap();
    let kernel = nullspace_basis(jac, tol).unwrap();
    check(rank + kernel.ncols() == nd, "rank-nullity".into());
    check(sys.rigidity.index_residual == 0, "index theorem residual".into());

    check(sys.dim_u == nd - q, format!("dim U = {} but nd - q = {}", sys.dim_u, nd - q));
    check(sys.dim_v + nd == m + q, format!("dim V = {}", sys.dim_v));
    let orth = (sys.u_basis.transpose() * &k * &sys.v_basis).amax();
    check(orth <= 1e-8, format!("UᵀKV = {orth:e}"));
    let vp = &sys.v_basis * &sys.p_v;
    let up = &sys.u_basis * &sys.p_u;
    let idem = (&vp * &vp - &vp).amax();
    check(idem <= 1e-10, format!("(VP_V)² - VP_V = {idem:e}"));
    let split = (&up + &vp - M::identity(m, m)).amax();
    check(split <= 1e-10, format!("U P_U + V P_V - I = {split:e}"));
    let adj = (&k * &vp - vp.transpose() * &k).amax();
    check(adj <= 1e-10, format!("K VP_V not symmetric ({adj:e})"));
    for i in 0..m {
        let n = sys.directions.row(i).norm();
        check((n - 1.0).abs() <= 1e-12, format!("direction {i} has norm {n}"));
    }
    let w_eq_v = (&sys.w - &sys.v_basis).amax();
    check(w_eq_v <= 1e-10, format!("W differs from V by {w_eq_v:e}"));

    let rv = rand_vector(r, q, 1.0);
    let gr = &sys.g * &rv;
    let off = (&gr - &vp * &gr).norm();
    check(off <= 1e-8 * gr.norm().max(1e-300), format!("G r leaves V ({off:e})"));
    let fv = rand_vector(r, nd, 1.0);
    let ff = &sys.f * &fv;
    let off = (&ff - &up * &ff).norm();
    check(off <= 1e-8 * ff.norm().max(1e-300), format!("F f leaves U ({off:e})"));
    out
}

pub fn solve_with(
    def: &LatticeDefinition,
    loads: &sweepnet::lattice::LoadSchedule,
    sigma0: Option<&V>,
    solver: sweepnet::trajectory::SolverKind,
    space: sweepnet::sweep::Space,
    mesh: f64,
) -> (sweepnet::lattice::AssembledSystem, sweepnet::trajectory::Trajectory) {
    let cfg = sweepnet::config::RunConfig { solver, space, mesh, ..Default::default() };
    sweepnet::config::solve(def, loads, sigma0, &cfg).unwrap()
}

/// Largest `‖V y_V(t) - y(t)‖` over the time stamps of the full-space run;
/// the reduced run is sampled by interpolation (exact for leapfrog output and
/// for catch-up runs on the same partition).
pub fn full_reduced_gap(
    sys: &sweepnet::lattice::AssembledSystem,
    full: &sweepnet::trajectory::Trajectory,
    reduced: &sweepnet::trajectory::Trajectory,
) -> f64 {
    full.states
        .iter()
        .map(|s| {
            let r = reduced.state_at(s.time);
            (&sys.v_basis * &r.y - &s.y).norm()
        })
        .fold(0.0, f64::max)
}

//! Dense convex QP/LP solver: one primal-dual interior-point backend with
//! deterministic infeasibility certification.
//!
//! Feasibility is decided by a phase-1 LP (minimize the largest constraint
//! violation) before the main iteration runs, so `Infeasible` is a certified
//! answer, not a failure mode of the barrier iteration. LP unboundedness is
//! certified by a ray test over the boxed recession cone. All arithmetic is
//! fixed-order; identical inputs give identical results.

use crate::geometry::Polytope;
use crate::linalg::{dot, Matrix};

/// Cumulative interior-point statistics (calls, iterations); useful when
/// profiling set computations that issue thousands of LPs.
pub static IPM_CALLS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
pub static IPM_ITERS: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);

const REG: f64 = 1e-10;
const MAX_ITERS: usize = 200;
const TOL_PRIM: f64 = 1e-9;
const TOL_DUAL: f64 = 1e-9;
// gap target: tight for point accuracy under degenerate complementarity,
// loose fallback accepted only once the gap has stopped contracting
const TOL_GAP_TIGHT: f64 = 1e-12;
const TOL_GAP_LOOSE: f64 = 1e-9;
const PHASE1_INFEASIBLE: f64 = 1e-8;
const STEP_FRACTION: f64 = 0.995;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Linear equality block `A x = b`.
#[derive(Debug, Clone)]
pub struct EqConstraint {
    pub a: Matrix,
    pub b: Vec<f64>,
}

/// `min 1/2 x'Hx + g'x  s.t.  x in ineq polytope, Aeq x = beq`.
///
/// The hessian must be symmetric PSD (zero for an LP); a uniform `1e-10`
/// diagonal regularization is applied inside the iteration, and positive
/// semidefiniteness is certified against that regularized matrix at
/// construction time.
#[derive(Debug, Clone)]
pub struct ConvexProgram {
    pub hessian: Matrix,
    pub gradient: Vec<f64>,
    pub ineq: Polytope,
    pub eq: Option<EqConstraint>,
}

impl ConvexProgram {
    pub fn qp(hessian: Matrix, gradient: Vec<f64>, ineq: Polytope, eq: Option<EqConstraint>) -> Self {
        let n = gradient.len();
        assert_eq!((hessian.rows(), hessian.cols()), (n, n));
        assert_eq!(ineq.dim(), n);
        assert!(hessian.is_symmetric(1e-10), "hessian must be symmetric");
        if let Some(e) = &eq {
            assert_eq!(e.a.cols(), n);
            assert_eq!(e.a.rows(), e.b.len());
        }
        let reg = regularized(&hessian);
        assert!(
            crate::linalg::cholesky(&reg).is_ok(),
            "hessian must be PSD after 1e-10 regularization"
        );
        ConvexProgram { hessian, gradient, ineq, eq }
    }

    pub fn lp(gradient: Vec<f64>, ineq: Polytope, eq: Option<EqConstraint>) -> Self {
        let n = gradient.len();
        ConvexProgram { hessian: Matrix::zeros(n, n), gradient, ineq, eq }
    }

    fn is_lp(&self) -> bool {
        self.hessian.max_abs() == 0.0
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.hessian.mul_vec(x)) + dot(&self.gradient, x)
    }

    /// Largest constraint violation at `x` (negative means strictly inside).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let mut v = f64::NEG_INFINITY;
        let g = self.ineq.normals();
        let h = self.ineq.offsets();
        for i in 0..g.rows() {
            v = v.max(dot(g.row(i), x) - h[i]);
        }
        if let Some(e) = &self.eq {
            for i in 0..e.a.rows() {
                v = v.max((dot(e.a.row(i), x) - e.b[i]).abs());
            }
        }
        if v == f64::NEG_INFINITY {
            v = 0.0;
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub point: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub dual_ineq: Option<Vec<f64>>,
    pub dual_eq: Option<Vec<f64>>,
    /// Phase-1 optimum when a phase-1 LP ran (the infeasibility certificate).
    pub phase1_violation: Option<f64>,
}

impl SolveResult {
    fn empty(status: SolveStatus, iterations: usize) -> Self {
        SolveResult {
            status,
            point: None,
            objective: None,
            iterations,
            dual_ineq: None,
            dual_eq: None,
            phase1_violation: None,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolverFailure {
    #[error("interior-point iteration limit ({0} iterations) reached")]
    IterationLimit(usize),
}

/// Solve the program. `warm`, when supplied and feasible, both certifies
/// feasibility (taking the place of the phase-1 LP) and seeds the iteration.
pub fn solve(p: &ConvexProgram, warm: Option<&[f64]>) -> SolveResult {
    let mut phase1_val = None;
    let start = match warm {
        Some(w) if p.violation(w) <= 1e-9 => w.to_vec(),
        maybe => {
            let seed = maybe.map(|w| w.to_vec()).unwrap_or_else(|| vec![0.0; p.gradient.len()]);
            match phase1(&p.ineq, p.eq.as_ref(), Some(&seed)) {
                Ok(ph) => {
                    phase1_val = Some(ph.violation);
                    if ph.violation > PHASE1_INFEASIBLE {
                        let mut r = SolveResult::empty(SolveStatus::Infeasible, ph.iterations);
                        r.phase1_violation = phase1_val;
                        return r;
                    }
                    ph.point
                }
                Err(SolverFailure::IterationLimit(it)) => {
                    return SolveResult::empty(SolveStatus::IterationLimit, it)
                }
            }
        }
    };
    let mut result = solve_from(p, &start);
    result.phase1_violation = phase1_val;
    result
}

/// LP entry point: identical contract with a zero hessian; unboundedness is
/// reported as a distinct status backed by a ray certificate.
pub fn solve_lp(c: &[f64], ineq: &Polytope, eq: Option<&EqConstraint>) -> SolveResult {
    let p = ConvexProgram::lp(c.to_vec(), ineq.clone(), eq.cloned());
    solve(&p, None)
}

pub struct Phase1 {
    /// Optimal value of the largest-violation LP (clamped below at -1).
    pub violation: f64,
    /// Decision part of the phase-1 optimum.
    pub point: Vec<f64>,
    pub iterations: usize,
}

/// Phase-1 LP: minimize the largest constraint violation `sigma` subject to
/// `Gx - sigma <= h`, relaxed equality rows, and `sigma >= -1`. Always
/// feasible and bounded, and started strictly feasible by construction.
pub fn phase1(ineq: &Polytope, eq: Option<&EqConstraint>, start: Option<&[f64]>) -> Result<Phase1, SolverFailure> {
    let nx = ineq.dim();
    let g = ineq.normals();
    let h = ineq.offsets();
    let me = eq.map_or(0, |e| e.a.rows());
    let rows = g.rows() + 2 * me + 1;
    let mut gp = Matrix::zeros(rows, nx + 1);
    let mut hp = vec![0.0; rows];
    for i in 0..g.rows() {
        for j in 0..nx {
            gp[(i, j)] = g[(i, j)];
        }
        gp[(i, nx)] = -1.0;
        hp[i] = h[i];
    }
    if let Some(e) = eq {
        for i in 0..me {
            let r1 = g.rows() + 2 * i;
            for j in 0..nx {
                gp[(r1, j)] = e.a[(i, j)];
                gp[(r1 + 1, j)] = -e.a[(i, j)];
            }
            gp[(r1, nx)] = -1.0;
            gp[(r1 + 1, nx)] = -1.0;
            hp[r1] = e.b[i];
            hp[r1 + 1] = -e.b[i];
        }
    }
    // sigma >= -1 keeps the LP bounded; only the sign of the optimum matters
    let last = rows - 1;
    gp[(last, nx)] = -1.0;
    hp[last] = 1.0;

    let mut x0: Vec<f64> = start.map(|s| s.to_vec()).unwrap_or_else(|| vec![0.0; nx]);
    let mut worst = 0.0f64;
    for i in 0..rows - 1 {
        worst = worst.max(dot(&gp.row(i)[..nx], &x0) - hp[i]);
    }
    x0.push(worst + 1.0); // strictly feasible with margin 1

    let mut c = vec![0.0; nx + 1];
    c[nx] = 1.0;
    let hess = regularized(&Matrix::zeros(nx + 1, nx + 1));
    let out = ipm(&hess, &c, &gp, &hp, None, &x0, true, Profile::ValueOnly);
    match out.status {
        IpmStatus::Converged => {
            let mut point = out.x;
            let sigma = point.pop().unwrap();
            Ok(Phase1 { violation: sigma, point, iterations: out.iterations })
        }
        _ => Err(SolverFailure::IterationLimit(out.iterations)),
    }
}

fn regularized(hessian: &Matrix) -> Matrix {
    let n = hessian.rows();
    let mut reg = hessian.clone();
    for i in 0..n {
        reg[(i, i)] += REG;
    }
    reg
}

fn solve_from(p: &ConvexProgram, start: &[f64]) -> SolveResult {
    let nx = p.gradient.len();
    let hess = regularized(&p.hessian);
    let g = p.ineq.normals();
    let h = p.ineq.offsets();

    if g.rows() == 0 && p.eq.is_none() {
        // unconstrained: single Newton solve (LP only bounded when c = 0)
        if p.is_lp() {
            if p.gradient.iter().all(|&v| v == 0.0) {
                let x = vec![0.0; nx];
                return SolveResult {
                    status: SolveStatus::Optimal,
                    objective: Some(0.0),
                    point: Some(x),
                    iterations: 0,
                    dual_ineq: Some(vec![]),
                    dual_eq: None,
                    phase1_violation: None,
                };
            }
            return SolveResult::empty(SolveStatus::Unbounded, 0);
        }
        let neg = Matrix::col_vec(&p.gradient).scale(-1.0);
        let x = match crate::linalg::solve_linear(&hess, &neg) {
            Ok(x) => x.data().to_vec(),
            Err(_) => return SolveResult::empty(SolveStatus::IterationLimit, 0),
        };
        return SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(p.objective(&x)),
            point: Some(x),
            iterations: 1,
            dual_ineq: Some(vec![]),
            dual_eq: None,
            phase1_violation: None,
        };
    }

    let out = ipm(&hess, &p.gradient, g, h, p.eq.as_ref(), start, false, Profile::Standard);
    match out.status {
        IpmStatus::Converged => SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(p.objective(&out.x)),
            point: Some(out.x),
            iterations: out.iterations,
            dual_ineq: Some(out.z),
            dual_eq: if p.eq.is_some() { Some(out.y) } else { None },
            phase1_violation: None,
        },
        IpmStatus::Diverged | IpmStatus::IterationLimit | IpmStatus::NumericalBreakdown => {
            if p.is_lp() && lp_dual_infeasible(p) {
                return SolveResult::empty(SolveStatus::Unbounded, out.iterations);
            }
            SolveResult::empty(SolveStatus::IterationLimit, out.iterations)
        }
    }
}

/// Unboundedness certificate for a (primal-feasible) LP: the dual system
/// `c + G'z + A'y = 0, z >= 0` is infeasible iff the primal objective is
/// unbounded below. Tested by minimizing the stationarity gap `t` over
/// boxed multipliers; unlike a primal ray LP this problem always has a
/// strictly interior point, so the barrier iteration is well posed.
fn lp_dual_infeasible(p: &ConvexProgram) -> bool {
    let nx = p.gradient.len();
    let g = p.ineq.normals();
    let mg = g.rows();
    let me = p.eq.as_ref().map_or(0, |e| e.a.rows());
    let nv = mg + me + 1; // (z, y, t)
    let mult_box = 1e8;
    // rows: +-stationarity (2nx), z >= 0 (mg), |z|,|y| boxes
    let rows = 2 * nx + 2 * mg + 2 * me;
    let mut gr = Matrix::zeros(rows, nv);
    let mut hr = vec![0.0; rows];
    for j in 0..nx {
        for i in 0..mg {
            gr[(2 * j, i)] = g[(i, j)];
            gr[(2 * j + 1, i)] = -g[(i, j)];
        }
        if let Some(e) = &p.eq {
            for i in 0..me {
                gr[(2 * j, mg + i)] = e.a[(i, j)];
                gr[(2 * j + 1, mg + i)] = -e.a[(i, j)];
            }
        }
        gr[(2 * j, nv - 1)] = -1.0;
        gr[(2 * j + 1, nv - 1)] = -1.0;
        hr[2 * j] = -p.gradient[j];
        hr[2 * j + 1] = p.gradient[j];
    }
    for i in 0..mg {
        gr[(2 * nx + 2 * i, i)] = -1.0; // z_i >= 0
        gr[(2 * nx + 2 * i + 1, i)] = 1.0; // z_i <= box
        hr[2 * nx + 2 * i + 1] = mult_box;
    }
    for i in 0..me {
        gr[(2 * nx + 2 * mg + 2 * i, mg + i)] = 1.0;
        hr[2 * nx + 2 * mg + 2 * i] = mult_box;
        gr[(2 * nx + 2 * mg + 2 * i + 1, mg + i)] = -1.0;
        hr[2 * nx + 2 * mg + 2 * i + 1] = mult_box;
    }
    let cinf = p.gradient.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut x0 = vec![0.0; nv];
    x0[nv - 1] = cinf + 1.0; // strictly interior in t
    let mut c = vec![0.0; nv];
    c[nv - 1] = 1.0;
    let out = ipm(
        &regularized(&Matrix::zeros(nv, nv)),
        &c,
        &gr,
        &hr,
        None,
        &x0,
        true,
        Profile::ValueOnly,
    );
    out.status == IpmStatus::Converged && out.x[nv - 1] > 1e-8 * (1.0 + cinf)
}

/// Stationarity residual of the KKT system at a reported optimum.
pub fn kkt_stationarity(p: &ConvexProgram, res: &SolveResult) -> f64 {
    let (x, z) = match (&res.point, &res.dual_ineq) {
        (Some(x), Some(z)) => (x, z),
        _ => return f64::INFINITY,
    };
    let mut r = p.hessian.mul_vec(x);
    for (ri, gi) in r.iter_mut().zip(&p.gradient) {
        *ri += gi;
    }
    let g = p.ineq.normals();
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            r[j] += g[(i, j)] * z[i];
        }
    }
    if let (Some(e), Some(y)) = (&p.eq, &res.dual_eq) {
        for i in 0..e.a.rows() {
            for j in 0..e.a.cols() {
                r[j] += e.a[(i, j)] * y[i];
            }
        }
    }
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------------------
// Core Mehrotra predictor-corrector iteration
// ---------------------------------------------------------------------------

/// What a caller needs from the iteration. `Standard` certifies the full
/// KKT system to the advertised tolerances. `ValueOnly` marks solves whose
/// only consumer is the optimal objective value (phase-1 certificates,
/// feasibility decisions); there the duality gap dominates the value error
/// and a dual residual stuck at the scaling-clamp floor is acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Profile {
    Standard,
    ValueOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum IpmStatus {
    Converged,
    IterationLimit,
    Diverged,
    NumericalBreakdown,
}

struct IpmOut {
    status: IpmStatus,
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    iterations: usize,
}

/// `strictly_feasible_start` marks starts whose slacks are all positive at
/// `x0`, which lets the iteration begin primal-feasible.
#[allow(clippy::too_many_arguments)]
fn ipm(
    hess: &Matrix,
    grad: &[f64],
    g: &Matrix,
    h: &[f64],
    eq: Option<&EqConstraint>,
    x0: &[f64],
    strictly_feasible_start: bool,
    profile: Profile,
) -> IpmOut {
    let nx = grad.len();
    let mg = g.rows();
    let me = eq.map_or(0, |e| e.a.rows());
    debug_assert!(mg > 0 || me > 0);

    let hinf = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let binf = eq.map_or(0.0, |e| e.b.iter().fold(0.0f64, |m, v| m.max(v.abs())));
    let cinf = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diverge_bound = 1e9 * (1.0 + hinf + binf);

    let mut x = x0.to_vec();
    let mut y = vec![0.0; me];
    let mut s = vec![0.0; mg];
    let mut z = vec![1.0; mg];
    let slack_floor = if strictly_feasible_start { 1e-12 } else { 1e-2 * (1.0 + hinf) };
    for i in 0..mg {
        s[i] = (h[i] - dot(g.row(i), &x)).max(slack_floor);
    }

    IPM_CALLS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    let mut iterations = 0;
    // best-so-far iterate by certified residual score; returned when the
    // iteration can no longer improve on a loose-certified optimum
    let mut best_score = f64::INFINITY;
    let mut best: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    let mut best_iter = 0usize;
    for iter in 0..MAX_ITERS {
        iterations = iter + 1;
        IPM_ITERS.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        // residuals
        let mut rd = hess.mul_vec(&x);
        for j in 0..nx {
            rd[j] += grad[j];
        }
        for i in 0..mg {
            let zi = z[i];
            let row = g.row(i);
            for j in 0..nx {
                rd[j] += row[j] * zi;
            }
        }
        if let Some(e) = eq {
            for i in 0..me {
                let yi = y[i];
                let row = e.a.row(i);
                for j in 0..nx {
                    rd[j] += row[j] * yi;
                }
            }
        }
        let mut rp = vec![0.0; mg];
        for i in 0..mg {
            rp[i] = dot(g.row(i), &x) + s[i] - h[i];
        }
        let mut re = vec![0.0; me];
        if let Some(e) = eq {
            for i in 0..me {
                re[i] = dot(e.a.row(i), &x) - e.b[i];
            }
        }

        let gap: f64 = dot(&s, &z);
        let obj = 0.5 * dot(&x, &hess.mul_vec(&x)) + dot(grad, &x);
        let prim = rp.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 + hinf);
        let peq = re.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 + binf);
        let dual = rd.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (1.0 + cinf);
        let score = prim.max(peq).max(dual).max(gap / (1.0 + obj.abs()));
        if score < best_score {
            best_score = score;
            best = Some((x.clone(), z.clone(), y.clone()));
            best_iter = iter;
        }
        let full_kkt = dual <= TOL_DUAL && gap <= TOL_GAP_TIGHT * (1.0 + obj.abs());
        let value_settled = profile == Profile::ValueOnly
            && iter >= 30
            && dual <= 1e-6
            && gap <= 1e-13 * (1.0 + obj.abs());
        if prim <= TOL_PRIM && peq <= TOL_PRIM && (full_kkt || value_settled) {
            return IpmOut { status: IpmStatus::Converged, x, z, y, iterations: iter };
        }
        if iter.saturating_sub(best_iter) >= 12 && best_score <= TOL_GAP_LOOSE {
            let (bx, bz, by) = best.unwrap();
            return IpmOut { status: IpmStatus::Converged, x: bx, z: bz, y: by, iterations: iter };
        }
        if x.iter().any(|v| v.abs() > diverge_bound) {
            if best_score <= TOL_GAP_LOOSE {
                let (bx, bz, by) = best.unwrap();
                return IpmOut { status: IpmStatus::Converged, x: bx, z: bz, y: by, iterations };
            }
            return IpmOut { status: IpmStatus::Diverged, x, z, y, iterations };
        }

        // KKT matrix [H + G'DG, A'; A, 0] with D = z/s
        let dim = nx + me;
        let mut kkt = Matrix::zeros(dim, dim);
        for i in 0..nx {
            for j in 0..nx {
                kkt[(i, j)] = hess[(i, j)];
            }
        }
        for i in 0..mg {
            // clamp keeps the normal matrix factorizable once complementary
            // pairs split many orders of magnitude apart
            let d = (z[i] / s[i]).clamp(1e-14, 1e14);
            let row = g.row(i);
            for a in 0..nx {
                let da = d * row[a];
                if da == 0.0 {
                    continue;
                }
                for b in a..nx {
                    kkt[(a, b)] += da * row[b];
                }
            }
        }
        for a in 0..nx {
            for b in 0..a {
                kkt[(a, b)] = kkt[(b, a)];
            }
        }
        if let Some(e) = eq {
            for i in 0..me {
                for j in 0..nx {
                    kkt[(nx + i, j)] = e.a[(i, j)];
                    kkt[(j, nx + i)] = e.a[(i, j)];
                }
                // dual regularization makes the system quasidefinite
                kkt[(nx + i, nx + i)] = -1e-10;
            }
        }
        let lu = match KktSolver::build(kkt, nx) {
            Some(lu) => lu,
            None => {
                // factorization loss this deep in the iteration usually means
                // a dual-degenerate optimum; fall back to the best iterate if
                // it is already loose-certified
                if best_score <= TOL_GAP_LOOSE {
                    let (bx, bz, by) = best.unwrap();
                    return IpmOut { status: IpmStatus::Converged, x: bx, z: bz, y: by, iterations };
                }
                return IpmOut { status: IpmStatus::NumericalBreakdown, x, z, y, iterations };
            }
        };

        let mu = if mg > 0 { gap / mg as f64 } else { 0.0 };
        // affine scaling direction: rc = s.*z
        let rc: Vec<f64> = s.iter().zip(&z).map(|(si, zi)| si * zi).collect();
        let (_dx_a, _dy_a, ds_a, dz_a) = newton_step(&lu, g, eq, &rd, &rp, &re, &rc, &s, &z, nx, me);
        let (ap_a, ad_a) = step_lengths(&s, &ds_a, &z, &dz_a);
        let mu_aff = if mg > 0 {
            let mut acc = 0.0;
            for i in 0..mg {
                acc += (s[i] + ap_a * ds_a[i]) * (z[i] + ad_a * dz_a[i]);
            }
            acc / mg as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).clamp(0.0, 1.0) } else { 0.0 };

        // corrector: rc = s.*z + ds_a.*dz_a - sigma*mu
        let rc2: Vec<f64> = (0..mg)
            .map(|i| s[i] * z[i] + ds_a[i] * dz_a[i] - sigma * mu)
            .collect();
        let (dx, dy, ds, dz) = newton_step(&lu, g, eq, &rd, &rp, &re, &rc2, &s, &z, nx, me);
        let (ap, ad) = step_lengths(&s, &ds, &z, &dz);

        for j in 0..nx {
            x[j] += ap * dx[j];
        }
        for i in 0..mg {
            s[i] += ap * ds[i];
            z[i] += ad * dz[i];
        }
        for i in 0..me {
            y[i] += ad * dy[i];
        }
    }
    if best_score <= TOL_GAP_LOOSE {
        let (bx, bz, by) = best.unwrap();
        return IpmOut { status: IpmStatus::Converged, x: bx, z: bz, y: by, iterations };
    }
    IpmOut { status: IpmStatus::IterationLimit, x, z, y, iterations }
}

/// One Newton solve for the reduced KKT system; returns (dx, dy, ds, dz).
#[allow(clippy::too_many_arguments)]
fn newton_step(
    lu: &KktSolver,
    g: &Matrix,
    eq: Option<&EqConstraint>,
    rd: &[f64],
    rp: &[f64],
    re: &[f64],
    rc: &[f64],
    s: &[f64],
    z: &[f64],
    nx: usize,
    me: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let mg = s.len();
    // rhs_x = -rd + G'[(rc - z.*rp)/s]
    let mut rhs = vec![0.0; nx + me];
    for j in 0..nx {
        rhs[j] = -rd[j];
    }
    for i in 0..mg {
        let w = (rc[i] - z[i] * rp[i]) / s[i];
        let row = g.row(i);
        for j in 0..nx {
            rhs[j] += row[j] * w;
        }
    }
    for i in 0..me {
        rhs[nx + i] = -re[i];
    }
    let sol = lu.solve(&rhs);
    let dx = sol[..nx].to_vec();
    let dy = sol[nx..].to_vec();
    let mut ds = vec![0.0; mg];
    let mut dz = vec![0.0; mg];
    for i in 0..mg {
        ds[i] = -rp[i] - dot(g.row(i), &dx);
        dz[i] = (-rc[i] - z[i] * ds[i]) / s[i];
    }
    let _ = eq;
    (dx, dy, ds, dz)
}

fn step_lengths(s: &[f64], ds: &[f64], z: &[f64], dz: &[f64]) -> (f64, f64) {
    let mut ap = 1.0f64 / STEP_FRACTION;
    let mut ad = 1.0f64 / STEP_FRACTION;
    for i in 0..s.len() {
        if ds[i] < 0.0 {
            ap = ap.min(-s[i] / ds[i]);
        }
        if dz[i] < 0.0 {
            ad = ad.min(-z[i] / dz[i]);
        }
    }
    ((STEP_FRACTION * ap).min(1.0), (STEP_FRACTION * ad).min(1.0))
}

/// KKT solver: LU with partial pivoting, a regularization retry ladder for
/// factorization breakdowns, and one iterative-refinement pass per solve.
/// Unlike [`crate::linalg::solve_linear`] the pivot check only rejects exact
/// zeros: the KKT matrix becomes deliberately ill-conditioned near
/// convergence and the induced error lives in directions the iteration no
/// longer needs.
struct KktSolver {
    mat: Matrix,
    lu: Lu,
}

impl KktSolver {
    fn build(kkt: Matrix, nx: usize) -> Option<KktSolver> {
        let kmax = kkt.max_abs().max(1.0);
        for delta in [0.0, 1e-12 * kmax, 1e-8 * kmax, 1e-4 * kmax] {
            let mut m = kkt.clone();
            for i in 0..nx {
                m[(i, i)] += delta;
            }
            if let Some(lu) = Lu::factor(m.clone()) {
                return Some(KktSolver { mat: m, lu });
            }
        }
        None
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.lu.solve(rhs);
        // one refinement pass recovers digits lost to extreme scaling
        let ax = self.mat.mul_vec(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let corr = self.lu.solve(&r);
        for (xi, ci) in x.iter_mut().zip(&corr) {
            *xi += ci;
        }
        x
    }
}

struct Lu {
    m: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Matrix) -> Option<Lu> {
        let n = a.rows();
        let mut perm = Vec::with_capacity(n);
        for k in 0..n {
            let mut piv = k;
            let mut pmax = a[(k, k)].abs();
            for i in (k + 1)..n {
                let v = a[(i, k)].abs();
                if v > pmax {
                    pmax = v;
                    piv = i;
                }
            }
            if pmax == 0.0 {
                return None;
            }
            perm.push(piv);
            if piv != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = t;
                }
            }
            let d = a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / d;
                a[(i, k)] = f;
                if f == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    a[(i, j)] -= f * a[(k, j)];
                }
            }
        }
        Some(Lu { m: a, perm })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.m.rows();
        let mut x = rhs.to_vec();
        // the factorization swaps whole rows, so permute first, then run
        // clean triangular solves
        for k in 0..n {
            x.swap(k, self.perm[k]);
        }
        for k in 0..n {
            let xk = x[k];
            if xk != 0.0 {
                for i in (k + 1)..n {
                    x[i] -= self.m[(i, k)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for j in (i + 1)..n {
                v -= self.m[(i, j)] * x[j];
            }
            x[i] = v / self.m[(i, i)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polytope;

    fn box_polytope(halfwidths: &[f64]) -> Polytope {
        let n = halfwidths.len();
        let mut g = Matrix::zeros(2 * n, n);
        let mut h = vec![0.0; 2 * n];
        for j in 0..n {
            g[(2 * j, j)] = 1.0;
            h[2 * j] = halfwidths[j];
            g[(2 * j + 1, j)] = -1.0;
            h[2 * j + 1] = halfwidths[j];
        }
        Polytope::from_raw(g, h)
    }


    #[test]
    fn unconstrained_qp_from_calculus() {
        // min 1/2 x^2 - x  ->  x = 1, objective -0.5
        let p = ConvexProgram::qp(
            Matrix::identity(1),
            vec![-1.0],
            Polytope::from_raw(Matrix::zeros(0, 1), vec![]),
            None,
        );
        let r = solve(&p, None);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.point.unwrap()[0] - 1.0).abs() < 1e-8);
        assert!((r.objective.unwrap() + 0.5).abs() < 1e-8);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        // x >= 2 and x <= 1
        let g = Matrix::from_rows(&[vec![-1.0], vec![1.0]]);
        let p = ConvexProgram::lp(vec![1.0], Polytope::from_raw(g, vec![-2.0, 1.0]), None);
        let r = solve(&p, None);
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.phase1_violation.unwrap() > 1e-8);
    }

    #[test]
    fn lp_box_maximum() {
        // max x on [-1, 1]  ==  min -x
        let r = solve_lp(&[-1.0], &box_polytope(&[1.0]), None);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.point.unwrap()[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lp_halfline_unbounded() {
        // max x on {x >= 0}
        let g = Matrix::from_rows(&[vec![-1.0]]);
        let r = solve_lp(&[-1.0], &Polytope::from_raw(g, vec![0.0]), None);
        assert_eq!(r.status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_constrained_qp() {
        // min 1/2 |x|^2 s.t. sum x = 1 -> uniform
        let eq = EqConstraint { a: Matrix::from_rows(&[vec![1.0, 1.0, 1.0]]), b: vec![1.0] };
        let p = ConvexProgram::qp(
            Matrix::identity(3),
            vec![0.0; 3],
            box_polytope(&[10.0, 10.0, 10.0]),
            Some(eq),
        );
        let r = solve(&p, None);
        assert_eq!(r.status, SolveStatus::Optimal);
        for v in r.point.unwrap() {
            assert!((v - 1.0 / 3.0).abs() < 1e-7);
        }
    }

    #[test]
    fn warm_start_feasible_skips_phase1() {
        let p = ConvexProgram::qp(Matrix::identity(2), vec![-1.0, 0.0], box_polytope(&[1.0, 1.0]), None);
        let warm = vec![0.5, 0.0];
        let r = solve(&p, Some(&warm));
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!(r.phase1_violation.is_none());
        let x = r.point.unwrap();
        // the optimum sits exactly on the boundary (degenerate
        // complementarity), which limits point accuracy to sqrt(gap)
        assert!((x[0] - 1.0).abs() < 1e-5 && x[1].abs() < 1e-5);
    }

    #[test]
    fn determinism_repeated_runs() {
        let mut st = 99u64;
        let mut rnd = move || {
            st ^= st << 13;
            st ^= st >> 7;
            st ^= st << 17;
            (st >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..10 {
            let n = 4;
            let mut hdata = vec![0.0; n * n];
            for v in hdata.iter_mut() {
                *v = rnd();
            }
            let half = Matrix::from_vec(n, n, hdata);
            let mut hess = half.transpose().mul(&half);
            for i in 0..n {
                hess[(i, i)] += 1.0;
            }
            let grad: Vec<f64> = (0..n).map(|_| rnd()).collect();
            let p = ConvexProgram::qp(hess, grad, box_polytope(&[1.0; 4]), None);
            let r1 = solve(&p, None);
            let r2 = solve(&p, None);
            assert_eq!(r1.status, r2.status);
            let (x1, x2) = (r1.point.unwrap(), r2.point.unwrap());
            for (a, b) in x1.iter().zip(&x2) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn kkt_residual_small_on_random_qps() {
        let mut st = 7u64;
        let mut rnd = move || {
            st ^= st << 13;
            st ^= st >> 7;
            st ^= st << 17;
            (st >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..25 {
            let n = 3;
            let mut hdata = vec![0.0; n * n];
            for v in hdata.iter_mut() {
                *v = rnd();
            }
            let half = Matrix::from_vec(n, n, hdata);
            let mut hess = half.transpose().mul(&half);
            for i in 0..n {
                hess[(i, i)] += 0.5;
            }
            let grad: Vec<f64> = (0..n).map(|_| rnd() * 2.0).collect();
            let p = ConvexProgram::qp(hess, grad, box_polytope(&[1.0; 3]), None);
            let r = solve(&p, None);
            assert_eq!(r.status, SolveStatus::Optimal);
            assert!(kkt_stationarity(&p, &r) <= 1e-7);
            assert!(p.violation(r.point.as_ref().unwrap()) <= 1e-7);
        }
    }
}

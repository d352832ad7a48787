//! Offline controller synthesis.
//!
//! Starting from a validated plant/exosystem pair this produces everything
//! the online controller consumes: the regulator solution (Pi, Gamma, L),
//! the Lyapunov terminal cost P, the exosystem-invariant weight T, and a
//! finitely determined terminal set. For purely periodic references the
//! terminal set is the maximal output admissible set of the augmented
//! system; when a non-periodic part is present that set is not finitely
//! determined, so the construction splits into the periodic-part set, the
//! invariant weight T_n, and the scalar bound Upsilon on the non-periodic
//! reference magnitude.

use crate::geometry::{Ellipsoid, GeometryError, Polytope};
use crate::linalg::{cholesky, dlyap, dot, eig2, solve_linear, LinalgError, Matrix};
use crate::model::{split, ExosystemModel, PlantModel, SplitExosystem};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("model validation failed:\n{0}")]
    ValidationFailed(String),
    #[error("regulator equations are rank deficient (resonant plant/exosystem pair): {0}")]
    ResonantSystem(String),
    #[error("admissible set not finitely determined after {iterations} iterations ({rows} rows)")]
    NotFinitelyDetermined { iterations: usize, rows: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Solution of `A Pi + B Gamma = Pi S`, `C Pi = Qe`, with the feedforward
/// gain `L = Gamma - K Pi`.
#[derive(Debug, Clone)]
pub struct RegulatorSolution {
    pub pi: Matrix,
    pub gamma: Matrix,
    pub l: Matrix,
}

/// Solve the regulator equations through the Kronecker-vectorized linear
/// system in `(vec Pi, vec Gamma)`. Square when p = m; a rank-deficient
/// system reports [`SynthesisError::ResonantSystem`].
pub fn solve_regulator(plant: &PlantModel, exo: &ExosystemModel) -> Result<RegulatorSolution, SynthesisError> {
    let (n, m, p) = (plant.n(), plant.m(), plant.p());
    let q = exo.q();
    let s = exo.s();
    let iq = Matrix::identity(q);
    // rows 1..n*q:   (Iq (x) A - S' (x) In) vec(Pi) + (Iq (x) B) vec(Gamma) = 0
    // rows ..+p*q:   (Iq (x) C) vec(Pi) = vec(Qe)
    let top_pi = iq.kron(&plant.a).sub(&s.transpose().kron(&Matrix::identity(n)));
    let top_ga = iq.kron(&plant.b);
    let bot_pi = iq.kron(&plant.c);
    let bot_ga = Matrix::zeros(p * q, m * q);
    let sys = Matrix::vstack(&[
        &Matrix::hstack(&[&top_pi, &top_ga]),
        &Matrix::hstack(&[&bot_pi, &bot_ga]),
    ]);
    let mut rhs = vec![0.0; n * q];
    rhs.extend_from_slice(&exo.qe.vec_col());
    if sys.rows() != sys.cols() {
        return Err(SynthesisError::ResonantSystem(format!(
            "regulator system is {}x{}; p = m is required for a square solve",
            sys.rows(),
            sys.cols()
        )));
    }
    let sol = solve_linear(&sys, &Matrix::col_vec(&rhs))
        .map_err(|e| SynthesisError::ResonantSystem(e.to_string()))?;
    let pi = Matrix::from_vec_col(n, q, &sol.data()[..n * q]);
    let gamma = Matrix::from_vec_col(m, q, &sol.data()[n * q..]);
    let res1 = plant.a.mul(&pi).add(&plant.b.mul(&gamma)).sub(&pi.mul(&s)).norm_fro();
    let res2 = plant.c.mul(&pi).sub(&exo.qe).norm_fro();
    if res1 > 1e-8 * (1.0 + pi.norm_fro()) || res2 > 1e-8 {
        return Err(SynthesisError::ResonantSystem(format!(
            "regulator residuals too large: {res1:.3e}, {res2:.3e}"
        )));
    }
    let l = gamma.sub(&plant.k.mul(&pi));
    Ok(RegulatorSolution { pi, gamma, l })
}

/// `T = sum_{i=1..k0} (S^i)' T0 S^i`, symmetrized to remove roundoff drift.
pub fn weight_t_periodic(sp: &Matrix, k0: usize, t0: &Matrix) -> Matrix {
    let d = sp.rows();
    assert_eq!((t0.rows(), t0.cols()), (d, d));
    let mut acc = Matrix::zeros(d, d);
    let mut spow = Matrix::identity(d);
    for _ in 0..k0 {
        spow = sp.mul(&spow);
        acc = acc.add(&spow.transpose().mul(t0).mul(&spow));
    }
    acc.symmetrized()
}

/// Per-block invariant weight for non-periodic 2x2 blocks:
/// `T_i = Lambda_i (E_i E_i^H)^{-1}` with `E_i` the unit-norm eigenvector
/// pair of the block. `lambdas[i]` is the positive diagonal of `Lambda_i`.
/// The result is certified SPD by Cholesky after symmetrization.
pub fn weight_t_nonperiodic(blocks: &[&Matrix], lambdas: &[[f64; 2]]) -> Result<Matrix, SynthesisError> {
    assert_eq!(blocks.len(), lambdas.len());
    let mut parts = Vec::with_capacity(blocks.len());
    for (blk, lam) in blocks.iter().zip(lambdas) {
        assert!(lam[0] > 0.0 && lam[1] > 0.0, "Lambda must be positive");
        let e = eig2(blk)?;
        // E E^H = v v^H + conj(v) conj(v)^H = 2 Re(v v^H), real symmetric
        let v = e.vectors[0];
        let mut g = Matrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                g[(i, j)] = 2.0 * (v[i].re * v[j].re + v[i].im * v[j].im);
            }
        }
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        if det.abs() < 1e-14 {
            return Err(SynthesisError::Linalg(LinalgError::DefectiveBlock));
        }
        let inv = Matrix::from_rows(&[
            vec![g[(1, 1)] / det, -g[(0, 1)] / det],
            vec![-g[(1, 0)] / det, g[(0, 0)] / det],
        ]);
        let ti = Matrix::from_diag(&[lam[0], lam[1]]).mul(&inv).symmetrized();
        parts.push(ti);
    }
    let refs: Vec<&Matrix> = parts.iter().collect();
    let tn = Matrix::block_diag(&refs);
    cholesky(&tn)?;
    Ok(tn)
}

/// Maximal output admissible set by the direct recursion
/// `O_{t+1} = O_t intersect {z : H M^{t+1} z <= h}`.
///
/// `iterations` counts candidate-generation passes; the determination index
/// is `iterations - 1`. Redundancy pruning runs every `prune_every` passes
/// and once on the fixed point. Errors with
/// [`SynthesisError::NotFinitelyDetermined`] at `cap` passes, which is the
/// expected outcome when the augmented dynamics contain a non-periodic
/// unit-circle block.
pub fn moas(
    m_aug: &Matrix,
    constraint: &Polytope,
    cap: usize,
    prune_every: usize,
) -> Result<MoasResult, SynthesisError> {
    let dim = constraint.dim();
    assert_eq!((m_aug.rows(), m_aug.cols()), (dim, dim));
    assert!(
        constraint.contains(&vec![0.0; dim], -1e-12),
        "constraint set must contain the origin in its interior"
    );
    let h0 = constraint.normals().clone();
    let rhs0 = constraint.offsets().to_vec();
    let origin = vec![0.0; dim];
    let mut work = constraint.clone();
    let mut mpow = m_aug.clone();
    let mut row_counts = Vec::new();
    for pass in 1..=cap {
        let cand = h0.mul(&mpow);
        let lin = work.lineality_basis();
        let verdicts = crate::par::map_indexed(h0.rows(), |i| {
            work.row_exceeds(cand.row(i), rhs0[i] + 1e-9, &lin, Some(&origin))
        });
        let mut new_rows = Vec::new();
        for (i, v) in verdicts.into_iter().enumerate() {
            if v? {
                new_rows.push(i);
            }
        }
        if new_rows.is_empty() {
            let set = work.remove_redundancy()?;
            row_counts.push(set.rows());
            return Ok(MoasResult { set, iterations: pass, row_counts });
        }
        let mut add = Matrix::zeros(new_rows.len(), dim);
        let mut add_rhs = Vec::with_capacity(new_rows.len());
        for (io, &i) in new_rows.iter().enumerate() {
            for j in 0..dim {
                add[(io, j)] = cand[(i, j)];
            }
            add_rhs.push(rhs0[i]);
        }
        work = work.intersect(&Polytope::from_raw(add, add_rhs));
        if pass % prune_every == 0 {
            work = work.remove_redundancy()?;
        }
        row_counts.push(work.rows());
        mpow = mpow.mul(m_aug);
    }
    Err(SynthesisError::NotFinitelyDetermined { iterations: cap, rows: work.rows() })
}

#[derive(Debug, Clone)]
pub struct MoasResult {
    pub set: Polytope,
    pub iterations: usize,
    /// Working-set row count after each pass (pruned counts included).
    pub row_counts: Vec<usize>,
}

impl MoasResult {
    /// Determination index `t_0` (the recursion step at which the set stops
    /// changing).
    pub fn t0(&self) -> usize {
        self.iterations - 1
    }
}

/// Largest `rho` such that eroding `Z` by the image under `[Pi_n; Gamma_n]`
/// of the `T_n`-ball of radius `rho` leaves it nonempty, from the single LP
/// over `(z, rho)`. `Untightened` when the image map is zero (or the LP is
/// unbounded): the non-periodic reference is then unconstrained by `Z`.
pub fn upsilon(
    z: &Polytope,
    pi_n: &Matrix,
    gamma_n: &Matrix,
    tn: &Matrix,
) -> Result<UpsilonValue, SynthesisError> {
    let d = Matrix::vstack(&[pi_n, gamma_n]);
    assert_eq!(d.rows(), z.dim());
    if d.max_abs() <= 1e-14 {
        return Ok(UpsilonValue::Untightened);
    }
    let chol = cholesky(tn)?;
    let dim = z.dim();
    let rows = z.rows();
    let h = z.normals();
    let mut g = Matrix::zeros(rows + 1, dim + 1);
    let mut rhs = Vec::with_capacity(rows + 1);
    for i in 0..rows {
        for j in 0..dim {
            g[(i, j)] = h[(i, j)];
        }
        let a = d.tr_mul_vec(h.row(i));
        let s = dot(&a, &crate::linalg::cholesky_solve(&chol, &a)).max(0.0).sqrt();
        g[(i, dim)] = s;
        rhs.push(z.offsets()[i]);
    }
    g[(rows, dim)] = -1.0; // rho >= 0
    rhs.push(0.0);
    let mut c = vec![0.0; dim + 1];
    c[dim] = -1.0;
    let r = crate::solver::solve_lp(&c, &Polytope::from_raw(g, rhs), None);
    match r.status {
        crate::solver::SolveStatus::Optimal => Ok(UpsilonValue::Finite(r.point.unwrap()[dim])),
        crate::solver::SolveStatus::Unbounded => Ok(UpsilonValue::Untightened),
        _ => Err(SynthesisError::Geometry(GeometryError::Solver(
            crate::solver::SolverFailure::IterationLimit(r.iterations),
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpsilonValue {
    Finite(f64),
    Untightened,
}

impl UpsilonValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            UpsilonValue::Finite(v) => Some(*v),
            UpsilonValue::Untightened => None,
        }
    }
}

/// Terminal constraint data. `Periodic` carries the maximal output
/// admissible set of the full augmented system; `Mixed` carries the
/// periodic-part set together with the non-periodic weight and bound.
#[derive(Debug, Clone)]
pub enum TerminalSet {
    Periodic { oinf: Polytope, iterations: usize },
    Mixed { op_inf: Polytope, tn: Matrix, upsilon: UpsilonValue, iterations: usize },
}

impl TerminalSet {
    pub fn iterations(&self) -> usize {
        match self {
            TerminalSet::Periodic { iterations, .. } | TerminalSet::Mixed { iterations, .. } => *iterations,
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            TerminalSet::Periodic { oinf, .. } => oinf.rows(),
            TerminalSet::Mixed { op_inf, .. } => op_inf.rows(),
        }
    }
}

/// Cost weights: stage `Q`, terminal `P` from the discrete Lyapunov
/// equation, and the reference weight `T` (block `diag(T_p, T_n)` scattered
/// back into declaration order).
#[derive(Debug, Clone)]
pub struct CostWeights {
    pub q: Matrix,
    pub p: Matrix,
    pub t: Matrix,
    pub tp: Matrix,
    pub tn: Matrix,
}

/// Residuals and set statistics recorded while the design was built.
#[derive(Debug, Clone)]
pub struct SynthesisSummary {
    pub regulator_residual: f64,
    pub output_map_residual: f64,
    pub lyapunov_residual: f64,
    pub t_invariance_residual: f64,
    pub terminal_iterations: usize,
    pub terminal_rows: usize,
    pub upsilon: Option<f64>,
}

/// Options for [`ControllerDesign::synthesize`]. `lambda` lists the positive
/// diagonal of `Lambda` for each non-periodic block in declaration order.
#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    pub q: Option<Matrix>,
    pub t0: Option<Matrix>,
    pub lambda: Vec<[f64; 2]>,
    pub horizon: usize,
    pub moas_cap: Option<usize>,
}

impl SynthesisOptions {
    pub fn new(horizon: usize) -> Self {
        SynthesisOptions { q: None, t0: None, lambda: Vec::new(), horizon, moas_cap: None }
    }
}

/// The persisted offline artifact: everything the online controller needs.
#[derive(Debug, Clone)]
pub struct ControllerDesign {
    pub plant: PlantModel,
    pub exo: ExosystemModel,
    pub parts: SplitExosystem,
    pub regulator: RegulatorSolution,
    pub weights: CostWeights,
    pub terminal: TerminalSet,
    pub horizon: usize,
    pub summary: SynthesisSummary,
}

impl ControllerDesign {
    /// Run the full offline pipeline. Fails when validation fails or any
    /// stage cannot be certified.
    pub fn synthesize(
        plant: PlantModel,
        exo: ExosystemModel,
        options: SynthesisOptions,
    ) -> Result<Self, SynthesisError> {
        assert!(options.horizon >= 1, "horizon must be at least 1");
        let report = crate::model::validate(&plant, &exo);
        if !report.passed() {
            return Err(SynthesisError::ValidationFailed(report.to_string()));
        }
        let n = plant.n();
        let q = exo.q();
        let parts = split(&exo);
        let s = exo.s();

        let regulator = solve_regulator(&plant, &exo)?;
        let reg_res = plant
            .a
            .mul(&regulator.pi)
            .add(&plant.b.mul(&regulator.gamma))
            .sub(&regulator.pi.mul(&s))
            .norm_fro();
        let out_res = plant.c.mul(&regulator.pi).sub(&exo.qe).norm_fro();

        let qw = options.q.unwrap_or_else(|| Matrix::identity(n));
        assert_eq!((qw.rows(), qw.cols()), (n, n));
        cholesky(&qw)?;
        let acl = plant.acl();
        let p = dlyap(&acl, &qw)?;
        let lyap_res = acl.transpose().mul(&p).mul(&acl).sub(&p).add(&qw).norm_fro() / qw.norm_fro();

        // weight T: periodic sum + non-periodic eigenvector construction
        let qp = exo.q_p();
        let qn = exo.q_n();
        let tp = if qp > 0 {
            let t0 = options.t0.clone().unwrap_or_else(|| Matrix::identity(qp));
            assert_eq!((t0.rows(), t0.cols()), (qp, qp));
            weight_t_periodic(&parts.sp, exo.k0, &t0)
        } else {
            Matrix::zeros(0, 0)
        };
        let n_blocks: Vec<&Matrix> = exo
            .blocks
            .iter()
            .filter(|b| b.kind == crate::model::BlockKind::NonPeriodic)
            .map(|b| &b.m)
            .collect();
        let lambdas: Vec<[f64; 2]> = if options.lambda.is_empty() {
            vec![[1.0, 1.0]; n_blocks.len()]
        } else {
            assert_eq!(options.lambda.len(), n_blocks.len(), "one Lambda per non-periodic block");
            options.lambda.clone()
        };
        let tn = if qn > 0 { weight_t_nonperiodic(&n_blocks, &lambdas)? } else { Matrix::zeros(0, 0) };

        // scatter diag(Tp, Tn) back into declaration order
        let mut t = Matrix::zeros(q, q);
        for (io, &i) in parts.periodic_cols.iter().enumerate() {
            for (jo, &j) in parts.periodic_cols.iter().enumerate() {
                t[(i, j)] = tp[(io, jo)];
            }
        }
        for (io, &i) in parts.nonperiodic_cols.iter().enumerate() {
            for (jo, &j) in parts.nonperiodic_cols.iter().enumerate() {
                t[(i, j)] = tn[(io, jo)];
            }
        }
        cholesky(&t)?;
        let t_res = s.transpose().mul(&t).mul(&s).sub(&t).norm_fro() / t.norm_fro();

        let z = Polytope::new(plant.z.normals().clone(), plant.z.offsets().to_vec());
        let cap = options.moas_cap.unwrap_or_else(|| (5 * exo.k0).max(100));
        let terminal = if qn == 0 {
            let gmap = augmented_output_map(&Matrix::identity(n), &regulator.pi, &plant.k, &regulator.gamma);
            let constraint = Polytope::new(z.normals().mul(&gmap), z.offsets().to_vec());
            let m_aug = Matrix::block_diag(&[&acl, &s]);
            let res = moas(&m_aug, &constraint, cap, exo.k0)?;
            TerminalSet::Periodic { oinf: res.set, iterations: res.iterations }
        } else {
            let pi_p = regulator.pi.columns(&parts.periodic_cols);
            let ga_p = regulator.gamma.columns(&parts.periodic_cols);
            let pi_n = regulator.pi.columns(&parts.nonperiodic_cols);
            let ga_n = regulator.gamma.columns(&parts.nonperiodic_cols);
            let gmap = augmented_output_map(&Matrix::identity(n), &pi_p, &plant.k, &ga_p);
            let constraint = Polytope::new(z.normals().mul(&gmap), z.offsets().to_vec());
            let m_aug = Matrix::block_diag(&[&acl, &parts.sp]);
            let res = moas(&m_aug, &constraint, cap, exo.k0)?;
            let ups = upsilon(&z, &pi_n, &ga_n, &tn)?;
            TerminalSet::Mixed { op_inf: res.set, tn: tn.clone(), upsilon: ups, iterations: res.iterations }
        };

        let summary = SynthesisSummary {
            regulator_residual: reg_res,
            output_map_residual: out_res,
            lyapunov_residual: lyap_res,
            t_invariance_residual: t_res,
            terminal_iterations: terminal.iterations(),
            terminal_rows: terminal.rows(),
            upsilon: match &terminal {
                TerminalSet::Mixed { upsilon, .. } => upsilon.finite(),
                TerminalSet::Periodic { .. } => None,
            },
        };

        Ok(ControllerDesign {
            plant,
            exo,
            parts,
            regulator,
            weights: CostWeights { q: qw, p, t, tp, tn },
            terminal,
            horizon: options.horizon,
            summary,
        })
    }

    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn m(&self) -> usize {
        self.plant.m()
    }

    pub fn p(&self) -> usize {
        self.plant.p()
    }

    pub fn q(&self) -> usize {
        self.exo.q()
    }

    /// Decision variables the artificial reference adds on top of the `N*m`
    /// input moves (free periodic part plus pinned non-periodic part).
    pub fn additional_decision_variables(&self) -> usize {
        self.exo.q()
    }

    pub fn pi_p(&self) -> Matrix {
        self.regulator.pi.columns(&self.parts.periodic_cols)
    }

    pub fn pi_n(&self) -> Matrix {
        self.regulator.pi.columns(&self.parts.nonperiodic_cols)
    }

    pub fn gamma_p(&self) -> Matrix {
        self.regulator.gamma.columns(&self.parts.periodic_cols)
    }

    pub fn gamma_n(&self) -> Matrix {
        self.regulator.gamma.columns(&self.parts.nonperiodic_cols)
    }

    /// Periodic / non-periodic components of a reference vector in
    /// declaration order.
    pub fn split_reference(&self, r: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let alpha = self.parts.periodic_cols.iter().map(|&i| r[i]).collect();
        let beta = self.parts.nonperiodic_cols.iter().map(|&i| r[i]).collect();
        (alpha, beta)
    }

    /// `T_n`-norm of the non-periodic part.
    pub fn beta_norm(&self, beta: &[f64]) -> f64 {
        if beta.is_empty() {
            0.0
        } else {
            crate::linalg::quad_form(beta, &self.weights.tn).max(0.0).sqrt()
        }
    }

    /// Scaling factor `f = 1 - |beta|_Tn / Upsilon`, clamped to `[0, 1]`.
    pub fn terminal_scaling(&self, beta: &[f64]) -> f64 {
        match &self.terminal {
            TerminalSet::Periodic { .. } => 1.0,
            TerminalSet::Mixed { upsilon, .. } => match upsilon {
                UpsilonValue::Untightened => 1.0,
                UpsilonValue::Finite(u) => (1.0 - self.beta_norm(beta) / u).clamp(0.0, 1.0),
            },
        }
    }

    /// Membership of the terminal set `Z_f` at an augmented point
    /// `(xbar, rbar)`; the Mixed variant evaluates the scaled description.
    pub fn zf_contains(&self, xbar: &[f64], rbar: &[f64], tol: f64) -> bool {
        let (alpha, beta) = self.split_reference(rbar);
        match &self.terminal {
            TerminalSet::Periodic { oinf, .. } => {
                let mut z = xbar.to_vec();
                z.extend_from_slice(rbar);
                oinf.contains(&z, tol)
            }
            TerminalSet::Mixed { op_inf, upsilon, .. } => {
                if let UpsilonValue::Finite(u) = upsilon {
                    if self.beta_norm(&beta) > u + tol {
                        return false;
                    }
                }
                let f = self.terminal_scaling(&beta);
                let mut z = xbar.to_vec();
                z.extend_from_slice(&alpha);
                (0..op_inf.rows()).all(|i| {
                    dot(op_inf.normals().row(i), &z) <= f * op_inf.offsets()[i] + tol
                })
            }
        }
    }

    /// Admissible-reference membership: `r` such that `[0; r]` lies in the
    /// terminal set.
    pub fn rf_contains(&self, r: &[f64], tol: f64) -> bool {
        self.zf_contains(&vec![0.0; self.n()], r, tol)
    }

    /// The admissible-reference set as an explicit object: an H-rep slice in
    /// the periodic case, a membership evaluator in the mixed case (the set
    /// is not polyhedral there).
    pub fn rf_slice(&self) -> AdmissibleReferences {
        match &self.terminal {
            TerminalSet::Periodic { oinf, .. } => {
                let n = self.n();
                let q = self.q();
                let mut h = Matrix::zeros(oinf.rows(), q);
                for i in 0..oinf.rows() {
                    for j in 0..q {
                        h[(i, j)] = oinf.normals()[(i, n + j)];
                    }
                }
                AdmissibleReferences::Poly(Polytope::new(h, oinf.offsets().to_vec()))
            }
            TerminalSet::Mixed { .. } => AdmissibleReferences::Evaluator,
        }
    }

    /// Membership of `R_f^m`: the stage constraints hold along the free
    /// response `S^k r` for `k < N` and the endpoint enters the terminal set.
    pub fn rfm_contains(&self, r: &[f64], tol: f64) -> bool {
        let s = self.exo.s();
        let gref = Matrix::vstack(&[&self.regulator.pi, &self.regulator.gamma]);
        let mut rk = r.to_vec();
        for _ in 0..self.horizon {
            if !self.plant.z.contains(&gref.mul_vec(&rk), tol) {
                return false;
            }
            rk = s.mul_vec(&rk);
        }
        self.zf_contains(&vec![0.0; self.n()], &rk, tol)
    }
}

/// `[[I, Pi], [K, Gamma]]`, the map from augmented state to constrained
/// output.
pub fn augmented_output_map(eye: &Matrix, pi: &Matrix, k: &Matrix, gamma: &Matrix) -> Matrix {
    let top = Matrix::hstack(&[eye, pi]);
    let bot = Matrix::hstack(&[k, gamma]);
    Matrix::vstack(&[&top, &bot])
}

#[derive(Debug, Clone)]
pub enum AdmissibleReferences {
    Poly(Polytope),
    /// Mixed case: the set couples the blocks through the scaling `f`, so no
    /// H-representation exists; use [`ControllerDesign::rf_contains`].
    Evaluator,
}

/// Bisection oracle for `Upsilon`: largest `rho` whose ellipsoid-image
/// erosion leaves `Z` nonempty. Independent route used by tests against the
/// single-LP computation.
pub fn upsilon_bisection(
    z: &Polytope,
    pi_n: &Matrix,
    gamma_n: &Matrix,
    tn: &Matrix,
    tol: f64,
) -> Result<f64, SynthesisError> {
    let d = Matrix::vstack(&[pi_n, gamma_n]);
    let empty_at = |rho: f64| -> Result<bool, SynthesisError> {
        let e = Ellipsoid::new(tn.clone(), rho).map_err(SynthesisError::Geometry)?;
        let eroded = z.erode_by_ellipsoid_image(&d, &e)?;
        Ok(eroded.is_empty()?)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while !empty_at(hi)? {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(SynthesisError::Geometry(GeometryError::Unbounded));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if empty_at(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

//! Online artificial-reference controller.
//!
//! Each step solves a condensed QP in the free part of the artificial
//! reference and the input moves. Predicted states are eliminated through
//! the closed-loop recursion, so the constraint matrix and hessian are fixed
//! per design and only the gradient and right-hand sides move with the
//! measured state and reference. In the mixed case the non-periodic block of
//! the artificial reference is pinned to the saturated non-periodic part of
//! the current reference, which keeps the terminal constraint linear.

use crate::linalg::{dot, quad_form, Matrix};
use crate::solver::{self, ConvexProgram, EqConstraint, SolveStatus};
use crate::synthesis::{ControllerDesign, TerminalSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpcError {
    #[error("QP infeasible with no previous solution to fall back on")]
    NoFallback,
}

/// Radial projection of the non-periodic reference part onto the
/// `Upsilon`-ball in the `T_n` metric; `None` means no tightening applies.
pub fn saturate_beta(beta: &[f64], tn: &Matrix, upsilon: Option<f64>) -> Vec<f64> {
    let Some(u) = upsilon else { return beta.to_vec() };
    if beta.is_empty() {
        return Vec::new();
    }
    let norm = quad_form(beta, tn).max(0.0).sqrt();
    if norm <= u || norm == 0.0 {
        beta.to_vec()
    } else {
        beta.iter().map(|b| b * u / norm).collect()
    }
}

/// How the QP decision vector is laid out: the free artificial-reference
/// block first, then the input moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    /// Free reference variables (q in the periodic case, q_p in the mixed
    /// case, where the non-periodic block is pinned).
    pub free_ref: usize,
    /// Pinned reference variables (the non-periodic block).
    pub pinned_ref: usize,
    pub horizon: usize,
    pub inputs: usize,
    /// Total free decision variables: `free_ref + horizon * inputs`.
    pub decision_dim: usize,
}

/// A built per-step QP: the convex program plus the objective constant that
/// the condensing dropped (reported costs include it).
pub struct BuiltQp {
    pub program: ConvexProgram,
    pub layout: VariableLayout,
    pub constant: f64,
    pub pinned_beta: Vec<f64>,
}

/// Per-design precomputation for the condensed QP. Everything that does not
/// depend on the measured state or the current reference lives here.
struct QpTemplate {
    layout: VariableLayout,
    sp_pows: Vec<Matrix>,
    hessian: Matrix,
    g_rows: Matrix,
    // rhs(t) = rhs_base (terminal block scaled by f) - rhs_x x - rhs_b beta
    rhs_base: Vec<f64>,
    rhs_x: Matrix,
    rhs_b: Matrix,
    stage_rows: usize,
    // gradient(t) = grad_x x + grad_b beta - 2 Tp alpha_r on the free block
    grad_x: Matrix,
    grad_b: Matrix,
    // dropped objective constant pieces
    kxx: Matrix,
    kxb: Matrix,
    kbb: Matrix,
}

impl QpTemplate {
    fn build(design: &ControllerDesign) -> QpTemplate {
        let n = design.n();
        let m = design.m();
        let big_n = design.horizon;
        let q_p = design.exo.q_p();
        let q_n = design.exo.q_n();
        let dim = q_p + big_n * m;
        let acl = design.plant.acl();
        let pi_p = design.pi_p();
        let pi_n = design.pi_n();
        let ga_p = design.gamma_p();
        let ga_n = design.gamma_n();
        let k = &design.plant.k;

        let mut sp_pows = vec![Matrix::identity(q_p)];
        let mut sn_pows = vec![Matrix::identity(q_n)];
        for kk in 0..big_n {
            sp_pows.push(design.parts.sp.mul(&sp_pows[kk]));
            sn_pows.push(design.parts.sn.mul(&sn_pows[kk]));
        }

        let mut e_mats = Vec::with_capacity(big_n + 1);
        let mut f_mats = Vec::with_capacity(big_n + 1);
        let mut g_mats = Vec::with_capacity(big_n + 1);
        let mut e0 = Matrix::zeros(n, dim);
        for i in 0..n {
            for j in 0..q_p {
                e0[(i, j)] = -pi_p[(i, j)];
            }
        }
        e_mats.push(e0);
        f_mats.push(Matrix::identity(n));
        g_mats.push(pi_n.scale(-1.0));
        for kk in 0..big_n {
            let mut e_next = acl.mul(&e_mats[kk]);
            for i in 0..n {
                for j in 0..m {
                    e_next[(i, q_p + kk * m + j)] += design.plant.b[(i, j)];
                }
            }
            e_mats.push(e_next);
            f_mats.push(acl.mul(&f_mats[kk]));
            g_mats.push(acl.mul(&g_mats[kk]));
        }

        // cost sum |xbar(k)|^2_Q + |xbar(N)|^2_P + |alpha_r - alpha|^2_Tp
        // (+ pinned-beta constant), expressed as 1/2 z'Hz + c'z + const
        let mut hessian = Matrix::zeros(dim, dim);
        let mut grad_x = Matrix::zeros(dim, n);
        let mut grad_b = Matrix::zeros(dim, q_n);
        let mut kxx = Matrix::zeros(n, n);
        let mut kxb = Matrix::zeros(n, q_n);
        let mut kbb = Matrix::zeros(q_n, q_n);
        for kk in 0..=big_n {
            let w = if kk < big_n { &design.weights.q } else { &design.weights.p };
            let we = w.mul(&e_mats[kk]);
            let wf = w.mul(&f_mats[kk]);
            let wg = w.mul(&g_mats[kk]);
            hessian = hessian.add(&e_mats[kk].transpose().mul(&we).scale(2.0));
            grad_x = grad_x.add(&e_mats[kk].transpose().mul(&wf).scale(2.0));
            grad_b = grad_b.add(&e_mats[kk].transpose().mul(&wg).scale(2.0));
            kxx = kxx.add(&f_mats[kk].transpose().mul(&wf));
            kxb = kxb.add(&f_mats[kk].transpose().mul(&wg));
            kbb = kbb.add(&g_mats[kk].transpose().mul(&wg));
        }
        for i in 0..q_p {
            for j in 0..q_p {
                hessian[(i, j)] += 2.0 * design.weights.tp[(i, j)];
            }
        }
        let hessian = hessian.symmetrized();

        // stage constraints HZ [xbar_k + Pip a_k + Pin b_k;
        //                       K xbar_k + Gap a_k + Gan b_k + v_k] <= hZ
        // with a_k = Sp^k alpha free and b_k = Sn^k beta pinned
        let hz = design.plant.z.normals();
        let hz_rhs = design.plant.z.offsets();
        let rz = hz.rows();
        let (term_rows, term_rhs, op_norm): (usize, Vec<f64>, &Matrix) = match &design.terminal {
            TerminalSet::Periodic { oinf, .. } => (oinf.rows(), oinf.offsets().to_vec(), oinf.normals()),
            TerminalSet::Mixed { op_inf, .. } => (op_inf.rows(), op_inf.offsets().to_vec(), op_inf.normals()),
        };
        let rows = big_n * rz + term_rows;
        let mut g_rows = Matrix::zeros(rows, dim);
        let mut rhs_base = vec![0.0; rows];
        let mut rhs_x = Matrix::zeros(rows, n);
        let mut rhs_b = Matrix::zeros(rows, q_n);
        for kk in 0..big_n {
            let mut u_map = Matrix::zeros(n + m, dim);
            let mut p_map = Matrix::zeros(n + m, n);
            let mut q_map = Matrix::zeros(n + m, q_n);
            let ke = k.mul(&e_mats[kk]);
            let kf = k.mul(&f_mats[kk]);
            let kg = k.mul(&g_mats[kk]);
            let pi_p_sk = pi_p.mul(&sp_pows[kk]);
            let ga_p_sk = ga_p.mul(&sp_pows[kk]);
            let pi_n_sk = pi_n.mul(&sn_pows[kk]);
            let ga_n_sk = ga_n.mul(&sn_pows[kk]);
            for i in 0..n {
                for j in 0..dim {
                    u_map[(i, j)] = e_mats[kk][(i, j)];
                }
                for j in 0..q_p {
                    u_map[(i, j)] += pi_p_sk[(i, j)];
                }
                for j in 0..n {
                    p_map[(i, j)] = f_mats[kk][(i, j)];
                }
                for j in 0..q_n {
                    q_map[(i, j)] = g_mats[kk][(i, j)] + pi_n_sk[(i, j)];
                }
            }
            for i in 0..m {
                for j in 0..dim {
                    u_map[(n + i, j)] = ke[(i, j)];
                }
                for j in 0..q_p {
                    u_map[(n + i, j)] += ga_p_sk[(i, j)];
                }
                u_map[(n + i, q_p + kk * m + i)] += 1.0;
                for j in 0..n {
                    p_map[(n + i, j)] = kf[(i, j)];
                }
                for j in 0..q_n {
                    q_map[(n + i, j)] = kg[(i, j)] + ga_n_sk[(i, j)];
                }
            }
            let gu = hz.mul(&u_map);
            let gp = hz.mul(&p_map);
            let gq = hz.mul(&q_map);
            for i in 0..rz {
                let row = kk * rz + i;
                for j in 0..dim {
                    g_rows[(row, j)] = gu[(i, j)];
                }
                for j in 0..n {
                    rhs_x[(row, j)] = gp[(i, j)];
                }
                for j in 0..q_n {
                    rhs_b[(row, j)] = gq[(i, j)];
                }
                rhs_base[row] = hz_rhs[i];
            }
        }
        // terminal rows over (xbar_N, alpha_N); rhs scaled by f at build time
        {
            debug_assert_eq!(op_norm.cols(), n + q_p);
            let mut t_map = Matrix::zeros(n + q_p, dim);
            let mut tx = Matrix::zeros(n + q_p, n);
            let mut tb = Matrix::zeros(n + q_p, q_n);
            for i in 0..n {
                for j in 0..dim {
                    t_map[(i, j)] = e_mats[big_n][(i, j)];
                }
                for j in 0..n {
                    tx[(i, j)] = f_mats[big_n][(i, j)];
                }
                for j in 0..q_n {
                    tb[(i, j)] = g_mats[big_n][(i, j)];
                }
            }
            for i in 0..q_p {
                for j in 0..q_p {
                    t_map[(n + i, j)] = sp_pows[big_n][(i, j)];
                }
            }
            let gt = op_norm.mul(&t_map);
            let gtx = op_norm.mul(&tx);
            let gtb = op_norm.mul(&tb);
            for i in 0..term_rows {
                let row = big_n * rz + i;
                for j in 0..dim {
                    g_rows[(row, j)] = gt[(i, j)];
                }
                for j in 0..n {
                    rhs_x[(row, j)] = gtx[(i, j)];
                }
                for j in 0..q_n {
                    rhs_b[(row, j)] = gtb[(i, j)];
                }
                rhs_base[row] = term_rhs[i];
            }
        }

        QpTemplate {
            layout: VariableLayout {
                free_ref: q_p,
                pinned_ref: q_n,
                horizon: big_n,
                inputs: m,
                decision_dim: dim,
            },
            sp_pows,
            hessian,
            g_rows,
            rhs_base,
            rhs_x,
            rhs_b,
            stage_rows: big_n * rz,
            grad_x,
            grad_b,
            kxx,
            kxb,
            kbb,
        }
    }
}

/// Result of one controller step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub u: Vec<f64>,
    /// Optimal artificial reference in declaration order (pinned block
    /// included).
    pub rbar_star: Vec<f64>,
    pub v0_star: Vec<f64>,
    /// Optimal cost including the pinned-block constant.
    pub cost: f64,
    pub feasible: bool,
    pub decision_dim: usize,
    pub qp_iterations: usize,
    /// Largest constraint violation of the shifted previous solution against
    /// the current QP (the recursive-feasibility candidate); `None` on the
    /// first step.
    pub candidate_violation: Option<f64>,
}

/// Controller state: the design, the QP template, and the warm-start memory.
pub struct Controller<'a> {
    design: &'a ControllerDesign,
    template: QpTemplate,
    /// When set, the free artificial-reference block is pinned to the
    /// measured reference (diagnostic mode; disables the
    /// artificial-reference mechanism entirely).
    pub pin_reference: bool,
    prev: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> Controller<'a> {
    pub fn new(design: &'a ControllerDesign) -> Self {
        Controller {
            design,
            template: QpTemplate::build(design),
            pin_reference: false,
            prev: None,
        }
    }

    pub fn layout(&self) -> VariableLayout {
        self.template.layout
    }

    pub fn design(&self) -> &ControllerDesign {
        self.design
    }

    /// Constraint rows of the per-step QP (fixed across steps).
    pub fn constraint_rows(&self) -> usize {
        self.template.g_rows.rows()
    }

    /// Assemble the per-step QP for state `x` and reference `r`.
    pub fn build_qp(&self, x: &[f64], r: &[f64]) -> BuiltQp {
        let t = &self.template;
        let (alpha_r, beta_r) = self.design.split_reference(r);
        let beta = saturate_beta(
            &beta_r,
            &self.design.weights.tn,
            match &self.design.terminal {
                TerminalSet::Mixed { upsilon, .. } => upsilon.finite(),
                TerminalSet::Periodic { .. } => None,
            },
        );
        let f = self.design.terminal_scaling(&beta);

        let mut gradient = t.grad_x.mul_vec(x);
        if t.layout.pinned_ref > 0 {
            let gb = t.grad_b.mul_vec(&beta);
            for (gi, bi) in gradient.iter_mut().zip(&gb) {
                *gi += bi;
            }
        }
        for i in 0..t.layout.free_ref {
            gradient[i] -= 2.0 * dot(self.design.weights.tp.row(i), &alpha_r);
        }

        let mut rhs = t.rhs_base.clone();
        for v in rhs.iter_mut().skip(t.stage_rows) {
            *v *= f;
        }
        let shift_x = t.rhs_x.mul_vec(x);
        for (ri, si) in rhs.iter_mut().zip(&shift_x) {
            *ri -= si;
        }
        if t.layout.pinned_ref > 0 {
            let shift_b = t.rhs_b.mul_vec(&beta);
            for (ri, si) in rhs.iter_mut().zip(&shift_b) {
                *ri -= si;
            }
        }

        let mut constant = quad_form(x, &t.kxx) + quad_form(&alpha_r, &self.design.weights.tp);
        if t.layout.pinned_ref > 0 {
            constant += 2.0 * dot(x, &t.kxb.mul_vec(&beta)) + quad_form(&beta, &t.kbb);
            let diff: Vec<f64> = beta_r.iter().zip(&beta).map(|(a, b)| a - b).collect();
            constant += quad_form(&diff, &self.design.weights.tn);
        }

        let eq = if self.pin_reference && t.layout.free_ref > 0 {
            let mut a = Matrix::zeros(t.layout.free_ref, t.layout.decision_dim);
            for i in 0..t.layout.free_ref {
                a[(i, i)] = 1.0;
            }
            Some(EqConstraint { a, b: alpha_r.clone() })
        } else {
            None
        };

        BuiltQp {
            program: ConvexProgram::qp(
                t.hessian.clone(),
                gradient,
                crate::geometry::Polytope::from_raw(t.g_rows.clone(), rhs),
                eq,
            ),
            layout: t.layout,
            constant,
            pinned_beta: beta,
        }
    }

    /// Shifted previous solution: `alpha <- Sp alpha`, input sequence moved
    /// left with a zero appended.
    fn shift_candidate(&self) -> Option<Vec<f64>> {
        let (alpha, v) = self.prev.as_ref()?;
        let t = &self.template;
        let mut z = t.sp_pows[1].mul_vec(alpha);
        z.extend_from_slice(&v[t.layout.inputs..]);
        z.extend(std::iter::repeat(0.0).take(t.layout.inputs));
        Some(z)
    }

    /// Scatter the free and pinned reference blocks back into declaration
    /// order.
    fn assemble_reference(&self, alpha: &[f64], beta: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.design.q()];
        for (io, &i) in self.design.parts.periodic_cols.iter().enumerate() {
            r[i] = alpha[io];
        }
        for (io, &i) in self.design.parts.nonperiodic_cols.iter().enumerate() {
            r[i] = beta[io];
        }
        r
    }

    fn input_for(&self, x: &[f64], rbar: &[f64], v0: &[f64]) -> Vec<f64> {
        // u = K x + L rbar(0) + v(0)
        let mut u = self.design.plant.k.mul_vec(x);
        let lr = self.design.regulator.l.mul_vec(rbar);
        for i in 0..u.len() {
            u[i] += lr[i] + v0[i];
        }
        u
    }

    /// One controller step: build the QP, warm start from the shift
    /// candidate, solve, and extract the control law. On infeasibility the
    /// candidate's first input is applied instead (reported through
    /// `feasible = false`); with no stored solution that is
    /// [`MpcError::NoFallback`].
    pub fn step(&mut self, x: &[f64], r: &[f64]) -> Result<StepResult, MpcError> {
        assert_eq!(x.len(), self.design.n());
        assert_eq!(r.len(), self.design.q());
        let built = self.build_qp(x, r);
        let layout = built.layout;
        let candidate = self.shift_candidate();
        let candidate_violation = candidate.as_ref().map(|z| built.program.violation(z));
        let warm = if self.pin_reference { None } else { candidate.as_deref() };
        let result = solver::solve(&built.program, warm);

        if result.status == SolveStatus::Optimal {
            let z = result.point.unwrap();
            let alpha = z[..layout.free_ref].to_vec();
            let v = z[layout.free_ref..].to_vec();
            let v0 = v[..layout.inputs].to_vec();
            let rbar = self.assemble_reference(&alpha, &built.pinned_beta);
            let u = self.input_for(x, &rbar, &v0);
            let cost = result.objective.unwrap() + built.constant;
            self.prev = Some((alpha, v));
            return Ok(StepResult {
                u,
                rbar_star: rbar,
                v0_star: v0,
                cost,
                feasible: true,
                decision_dim: layout.decision_dim,
                qp_iterations: result.iterations,
                candidate_violation,
            });
        }

        // infeasible (or uncertified): fall back to the shift candidate,
        // which theory guarantees feasible when the reference follows the
        // exosystem; its absence means the initial state lies outside the
        // region of attraction
        let Some(z) = candidate else {
            return Err(MpcError::NoFallback);
        };
        let alpha = z[..layout.free_ref].to_vec();
        let v = z[layout.free_ref..].to_vec();
        let v0 = v[..layout.inputs].to_vec();
        let rbar = self.assemble_reference(&alpha, &built.pinned_beta);
        let u = self.input_for(x, &rbar, &v0);
        self.prev = Some((alpha, v));
        Ok(StepResult {
            u,
            rbar_star: rbar,
            v0_star: v0,
            cost: f64::NAN,
            feasible: false,
            decision_dim: layout.decision_dim,
            qp_iterations: result.iterations,
            candidate_violation,
        })
    }

    #[cfg(test)]
    pub(crate) fn sn_power(&self, k: usize) -> Matrix {
        self.design.parts.sn.pow(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polytope;
    use crate::model::{BlockKind, ExoBlock, ExosystemModel, PlantModel};
    use crate::synthesis::SynthesisOptions;

    fn rotation(theta: f64) -> Matrix {
        Matrix::from_rows(&[vec![theta.cos(), -theta.sin()], vec![theta.sin(), theta.cos()]])
    }

    fn toy_plant() -> PlantModel {
        let a = Matrix::from_rows(&[vec![0.6, 0.2], vec![0.0, 0.5]]);
        let b = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        let c = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let k = Matrix::from_rows(&[vec![-0.1, -0.3]]);
        PlantModel::new(a, b, c, k, Polytope::box_set(&[4.0, 4.0, 3.0]))
    }

    fn periodic_design() -> ControllerDesign {
        let exo = ExosystemModel::new(
            vec![ExoBlock::new(BlockKind::Periodic, rotation(std::f64::consts::PI / 6.0))],
            Matrix::from_rows(&[vec![1.0, 0.0]]),
            12,
        );
        ControllerDesign::synthesize(toy_plant(), exo, SynthesisOptions::new(5)).unwrap()
    }

    fn mixed_design() -> ControllerDesign {
        let exo = ExosystemModel::new(
            vec![
                ExoBlock::new(BlockKind::Periodic, Matrix::identity(1)),
                ExoBlock::new(BlockKind::NonPeriodic, rotation(0.31)),
            ],
            Matrix::from_rows(&[vec![1.0, 0.5, 0.0]]),
            1,
        );
        ControllerDesign::synthesize(toy_plant(), exo, SynthesisOptions::new(4)).unwrap()
    }

    #[test]
    fn saturation_cases() {
        let tn = Matrix::identity(2);
        assert_eq!(saturate_beta(&[0.3, 0.4], &tn, Some(1.0)), vec![0.3, 0.4]);
        let s = saturate_beta(&[2.0, 0.0], &tn, Some(1.0));
        assert!((s[0] - 1.0).abs() < 1e-12 && s[1].abs() < 1e-12);
        assert_eq!(saturate_beta(&[0.0, 0.0], &tn, Some(1.0)), vec![0.0, 0.0]);
        assert_eq!(saturate_beta(&[5.0, 5.0], &tn, None), vec![5.0, 5.0]);
    }

    #[test]
    fn decision_dimension_and_row_count() {
        let design = mixed_design();
        let ctrl = Controller::new(&design);
        let layout = ctrl.layout();
        assert_eq!(layout.free_ref, 1);
        assert_eq!(layout.pinned_ref, 2);
        assert_eq!(layout.decision_dim, 1 + 4 * 1);
        assert_eq!(design.additional_decision_variables(), 3);
        let built = ctrl.build_qp(&[0.0, 0.0], &[0.1, 0.0, 0.0]);
        let rz = design.plant.z.rows();
        assert_eq!(built.program.ineq.rows(), 4 * rz + design.terminal.rows());
    }

    #[test]
    fn fixed_point_gives_feedforward_law_and_zero_cost() {
        let design = periodic_design();
        let mut ctrl = Controller::new(&design);
        let mut r = vec![1.0, 0.5];
        while !design.rfm_contains(&r, 1e-9) {
            r = r.iter().map(|v| v * 0.5).collect();
        }
        let x = design.regulator.pi.mul_vec(&r);
        let res = ctrl.step(&x, &r).unwrap();
        assert!(res.feasible);
        assert!(res.cost.abs() < 1e-6, "cost {}", res.cost);
        let mut expect = design.plant.k.mul_vec(&x);
        let lr = design.regulator.l.mul_vec(&r);
        for i in 0..expect.len() {
            expect[i] += lr[i];
        }
        for (a, b) in res.u.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn cost_decreases_along_closed_loop() {
        let design = periodic_design();
        let mut ctrl = Controller::new(&design);
        let s = design.exo.s();
        let mut r = vec![1.2, 0.3];
        while !design.rfm_contains(&r, 1e-9) {
            r = r.iter().map(|v| v * 0.5).collect();
        }
        let mut x = vec![0.0; 2];
        let mut prev: Option<(f64, f64)> = None;
        for _ in 0..30 {
            let res = ctrl.step(&x, &r).unwrap();
            assert!(res.feasible);
            let xbar0: Vec<f64> = x
                .iter()
                .zip(design.regulator.pi.mul_vec(&res.rbar_star))
                .map(|(a, b)| a - b)
                .collect();
            let decrement = quad_form(&xbar0, &design.weights.q);
            if let Some((jprev, dec_prev)) = prev {
                assert!(
                    res.cost - jprev <= -dec_prev + 1e-6,
                    "cost increased: {jprev} -> {}",
                    res.cost
                );
            }
            prev = Some((res.cost, decrement));
            if let Some(v) = res.candidate_violation {
                assert!(v <= 1e-7, "candidate violation {v}");
            }
            let au = design.plant.a.mul_vec(&x);
            let bu = design.plant.b.mul_vec(&res.u);
            x = au.iter().zip(&bu).map(|(a, b)| a + b).collect();
            r = s.mul_vec(&r);
        }
    }

    #[test]
    fn pinned_beta_norm_is_invariant_over_the_horizon() {
        let design = mixed_design();
        let ctrl = Controller::new(&design);
        let r = vec![0.05, 0.2, -0.1];
        let built = ctrl.build_qp(&[0.0, 0.0], &r);
        let beta = built.pinned_beta.clone();
        let n0 = design.beta_norm(&beta);
        let bn = ctrl.sn_power(design.horizon).mul_vec(&beta);
        let nn = design.beta_norm(&bn);
        assert!((n0 - nn).abs() <= 1e-9, "{n0} vs {nn}");
    }

    #[test]
    fn joint_weight_scaling_leaves_input_unchanged() {
        let scale = 10.0;
        let exo = || {
            ExosystemModel::new(
                vec![ExoBlock::new(BlockKind::Periodic, rotation(std::f64::consts::PI / 6.0))],
                Matrix::from_rows(&[vec![1.0, 0.0]]),
                12,
            )
        };
        let base = SynthesisOptions {
            q: Some(Matrix::identity(2)),
            t0: Some(Matrix::identity(2)),
            lambda: vec![],
            horizon: 5,
            moas_cap: None,
        };
        let scaled = SynthesisOptions {
            q: Some(Matrix::identity(2).scale(scale)),
            t0: Some(Matrix::identity(2).scale(scale)),
            lambda: vec![],
            horizon: 5,
            moas_cap: None,
        };
        let d1 = ControllerDesign::synthesize(toy_plant(), exo(), base).unwrap();
        let d2 = ControllerDesign::synthesize(toy_plant(), exo(), scaled).unwrap();
        let mut c1 = Controller::new(&d1);
        let mut c2 = Controller::new(&d2);
        let x = vec![0.4, -0.2];
        let r = vec![0.6, 0.1];
        let r1 = c1.step(&x, &r).unwrap();
        let r2 = c2.step(&x, &r).unwrap();
        for (a, b) in r1.u.iter().zip(&r2.u) {
            assert!((a - b).abs() <= 1e-7, "{a} vs {b}");
        }
        assert!((r2.cost - scale * r1.cost).abs() <= 1e-5 * (1.0 + r2.cost.abs()));
    }

    #[test]
    fn infeasible_initial_state_without_history_errors() {
        let design = periodic_design();
        let mut ctrl = Controller::new(&design);
        // state outside every hope of feasibility (bound is 4)
        match ctrl.step(&[3.99, 3.99], &[0.5, 0.0]) {
            Err(MpcError::NoFallback) => {}
            Ok(r) => assert!(r.feasible, "either feasible or NoFallback expected"),
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}

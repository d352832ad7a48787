//! Closed-loop simulation: exosystem propagation with scheduled reference
//! switches, plant integration, per-step logging, and metric extraction.
//!
//! The simulator asserts rather than assumes the controller's guarantees:
//! a feasible step whose applied input violates the constraints aborts the
//! run with diagnostics, and an infeasible step with no fallback surfaces
//! the failing step index.

use crate::linalg::{quad_form, Matrix};
use crate::mpc::{Controller, MpcError};
use crate::synthesis::ControllerDesign;
use thiserror::Error;

/// Initial reference plus scheduled overrides of the exosystem flow.
#[derive(Debug, Clone)]
pub struct ReferenceProgram {
    pub initial: Vec<f64>,
    pub switches: Vec<(usize, Vec<f64>)>,
}

impl ReferenceProgram {
    pub fn new(initial: Vec<f64>, switches: Vec<(usize, Vec<f64>)>) -> Self {
        let mut last = 0;
        for (step, _) in &switches {
            assert!(*step > last || (last == 0 && *step >= 1), "switch steps strictly increasing and >= 1");
            last = *step;
        }
        ReferenceProgram { initial, switches }
    }

    pub fn switch_steps(&self) -> Vec<usize> {
        self.switches.iter().map(|(s, _)| *s).collect()
    }
}

/// Advance the reference one step: the scheduled value when `t + 1` is a
/// switch step, the exosystem flow otherwise.
pub fn exo_step(s: &Matrix, r: &[f64], program: &ReferenceProgram, t: usize) -> Vec<f64> {
    for (step, value) in &program.switches {
        if *step == t + 1 {
            return value.clone();
        }
    }
    s.mul_vec(r)
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("controller has no fallback at step {step} (initial state outside the region of attraction)")]
    NoFallback { step: usize },
    #[error("pinned-reference QP infeasible at step {step}")]
    PinnedInfeasible { step: usize },
    #[error("constraint violated at step {step}: margin {margin:.3e}")]
    ConstraintViolated { step: usize, margin: f64 },
}

/// One row of the closed-loop log.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub r: Vec<f64>,
    pub rbar: Vec<f64>,
    pub v0: Vec<f64>,
    pub cost: f64,
    pub feasible: bool,
    /// Tracking error `e = C x - Qe r`.
    pub e: Vec<f64>,
    /// Largest constraint-row violation of `[x; u]` (negative inside).
    pub margin: f64,
    pub rfm_member: bool,
    pub candidate_violation: Option<f64>,
}

impl StepRecord {
    pub fn e_norm(&self) -> f64 {
        self.e.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimLog {
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Diagnostic mode: pins the artificial reference to the measured
    /// reference; the run aborts at the first infeasible step.
    pub pin_reference: bool,
}

/// Run the closed loop for `steps` steps from `x0`.
pub fn run_closed_loop(
    design: &ControllerDesign,
    program: &ReferenceProgram,
    x0: &[f64],
    steps: usize,
    options: RunOptions,
) -> Result<SimLog, SimError> {
    assert_eq!(x0.len(), design.n());
    assert_eq!(program.initial.len(), design.q());
    let s = design.exo.s();
    let mut controller = Controller::new(design);
    controller.pin_reference = options.pin_reference;
    let mut x = x0.to_vec();
    let mut r = program.initial.clone();
    let mut log = SimLog::default();
    for t in 0..steps {
        let res = match controller.step(&x, &r) {
            Ok(res) => res,
            Err(MpcError::NoFallback) => return Err(SimError::NoFallback { step: t }),
        };
        if options.pin_reference && !res.feasible {
            return Err(SimError::PinnedInfeasible { step: t });
        }
        let mut xu = x.clone();
        xu.extend_from_slice(&res.u);
        let margin = design.plant.z.margin(&xu);
        if res.feasible && margin > 1e-7 {
            return Err(SimError::ConstraintViolated { step: t, margin });
        }
        let cx = design.plant.c.mul_vec(&x);
        let qr = design.exo.qe.mul_vec(&r);
        let e: Vec<f64> = cx.iter().zip(&qr).map(|(a, b)| a - b).collect();
        log.steps.push(StepRecord {
            t,
            x: x.clone(),
            u: res.u.clone(),
            r: r.clone(),
            rbar: res.rbar_star.clone(),
            v0: res.v0_star.clone(),
            cost: res.cost,
            feasible: res.feasible,
            e,
            margin,
            rfm_member: design.rfm_contains(&r, 1e-7),
            candidate_violation: res.candidate_violation,
        });
        // plant propagation: exactly what the log records
        let ax = design.plant.a.mul_vec(&x);
        let bu = design.plant.b.mul_vec(&res.u);
        x = ax.iter().zip(&bu).map(|(a, b)| a + b).collect();
        r = exo_step(&s, &r, program, t);
    }
    Ok(log)
}

/// Summary metrics over a log, segmented at the switch steps.
#[derive(Debug, Clone)]
pub struct Metrics {
    pub steps: usize,
    pub feasible_steps: usize,
    pub max_margin: f64,
    /// Steps (excluding switches) where the optimal cost failed to decrease
    /// by the squared weighted artificial state error.
    pub cost_decrease_violations: usize,
    /// Steps where the cost strictly increased (beyond tolerance).
    pub cost_increase_steps: Vec<usize>,
    /// Max tracking-error norm over the last 50 steps of each segment.
    pub segment_final_errors: Vec<f64>,
    pub rfm_member_steps: usize,
}

pub fn metrics(log: &SimLog, design: &ControllerDesign, switch_steps: &[usize]) -> Metrics {
    let mut max_margin = f64::NEG_INFINITY;
    let mut violations = 0;
    let mut increases = Vec::new();
    let mut feasible = 0;
    let mut rfm = 0;
    for rec in &log.steps {
        max_margin = max_margin.max(rec.margin);
        if rec.feasible {
            feasible += 1;
        }
        if rec.rfm_member {
            rfm += 1;
        }
    }
    for w in log.steps.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if switch_steps.contains(&b.t) || !a.feasible || !b.feasible {
            continue;
        }
        let xbar0: Vec<f64> = a
            .x
            .iter()
            .zip(design.regulator.pi.mul_vec(&a.rbar))
            .map(|(x, p)| x - p)
            .collect();
        let dec = quad_form(&xbar0, &design.weights.q);
        if b.cost - a.cost > -dec + 1e-6 {
            violations += 1;
        }
        if b.cost - a.cost > 1e-9 * (1.0 + a.cost.abs()) {
            increases.push(b.t);
        }
    }
    // segment boundaries: [0, s1), [s1, s2), ..., [sk, end)
    let mut bounds = vec![0];
    bounds.extend_from_slice(switch_steps);
    bounds.push(log.steps.len());
    let mut segment_final_errors = Vec::new();
    for seg in bounds.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        if hi <= lo || hi > log.steps.len() {
            continue;
        }
        let from = hi.saturating_sub(50).max(lo);
        let max_e = log.steps[from..hi]
            .iter()
            .map(|r| r.e_norm())
            .fold(0.0f64, f64::max);
        segment_final_errors.push(max_e);
    }
    Metrics {
        steps: log.steps.len(),
        feasible_steps: feasible,
        max_margin,
        cost_decrease_violations: violations,
        cost_increase_steps: increases,
        segment_final_errors,
        rfm_member_steps: rfm,
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

    fn toy_design() -> ControllerDesign {
        let a = Matrix::from_rows(&[vec![0.6, 0.2], vec![0.0, 0.5]]);
        let b = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        let c = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let k = Matrix::from_rows(&[vec![-0.1, -0.3]]);
        let plant = PlantModel::new(a, b, c, k, Polytope::box_set(&[4.0, 4.0, 3.0]));
        let exo = ExosystemModel::new(
            vec![ExoBlock::new(BlockKind::Periodic, rotation(std::f64::consts::PI / 6.0))],
            Matrix::from_rows(&[vec![1.0, 0.0]]),
            12,
        );
        ControllerDesign::synthesize(plant, exo, SynthesisOptions::new(5)).unwrap()
    }

    #[test]
    fn exo_step_flows_and_switches() {
        let s = Matrix::identity(2);
        let program = ReferenceProgram::new(vec![1.0, 2.0], vec![(3, vec![5.0, 5.0])]);
        assert_eq!(exo_step(&s, &[1.0, 2.0], &program, 0), vec![1.0, 2.0]);
        assert_eq!(exo_step(&s, &[1.0, 2.0], &program, 2), vec![5.0, 5.0]);
    }

    #[test]
    fn exo_step_preserves_invariant_norm() {
        let design = toy_design();
        let s = design.exo.s();
        let program = ReferenceProgram::new(vec![0.7, 0.1], vec![]);
        let t = &design.weights.t;
        let r0 = vec![0.7, 0.1];
        let r1 = exo_step(&s, &r0, &program, 0);
        let n0 = quad_form(&r0, t).sqrt();
        let n1 = quad_form(&r1, t).sqrt();
        assert!((n0 - n1).abs() < 1e-10);
    }

    #[test]
    fn fixed_point_run_has_zero_error_and_cost() {
        let design = toy_design();
        let mut r = vec![0.8, 0.2];
        while !design.rfm_contains(&r, 1e-9) {
            r = r.iter().map(|v| v * 0.5).collect();
        }
        let x0 = design.regulator.pi.mul_vec(&r);
        let program = ReferenceProgram::new(r, vec![]);
        let log = run_closed_loop(&design, &program, &x0, 40, RunOptions::default()).unwrap();
        for rec in &log.steps {
            assert!(rec.feasible);
            assert!(rec.e_norm() < 1e-6, "t {} e {}", rec.t, rec.e_norm());
            assert!(rec.cost.abs() < 1e-6);
        }
        let m = metrics(&log, &design, &[]);
        assert_eq!(m.cost_decrease_violations, 0);
        assert!(m.max_margin <= 1e-7);
        assert_eq!(m.feasible_steps, 40);
    }

    #[test]
    fn convergence_run_with_switch() {
        let design = toy_design();
        let mut r = vec![1.0, 0.0];
        while !design.rfm_contains(&r, 1e-9) {
            r = r.iter().map(|v| v * 0.5).collect();
        }
        let r2: Vec<f64> = r.iter().map(|v| -v).collect();
        let program = ReferenceProgram::new(r, vec![(150, r2)]);
        let log = run_closed_loop(&design, &program, &[0.0, 0.0], 300, RunOptions::default()).unwrap();
        let m = metrics(&log, &design, &[150]);
        assert_eq!(m.feasible_steps, 300);
        assert_eq!(m.cost_decrease_violations, 0);
        assert!(m.max_margin <= 1e-7);
        // both segments settle
        assert_eq!(m.segment_final_errors.len(), 2);
        for e in &m.segment_final_errors {
            assert!(*e < 1e-2, "segment error {e}");
        }
        // cost increases only at the switch
        assert!(m.cost_increase_steps.iter().all(|&t| t == 150));
    }

    #[test]
    fn logs_are_reproducible_and_propagation_exact() {
        let design = toy_design();
        let program = ReferenceProgram::new(vec![0.4, 0.1], vec![]);
        let l1 = run_closed_loop(&design, &program, &[0.1, -0.1], 25, RunOptions::default()).unwrap();
        let l2 = run_closed_loop(&design, &program, &[0.1, -0.1], 25, RunOptions::default()).unwrap();
        for (a, b) in l1.steps.iter().zip(&l2.steps) {
            assert_eq!(a.x, b.x);
            assert_eq!(a.u, b.u);
            assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        }
        // x(t+1) = A x(t) + B u(t), bit exact against the log
        for w in l1.steps.windows(2) {
            let ax = design.plant.a.mul_vec(&w[0].x);
            let bu = design.plant.b.mul_vec(&w[0].u);
            let next: Vec<f64> = ax.iter().zip(&bu).map(|(a, b)| a + b).collect();
            assert_eq!(next, w[1].x);
        }
    }

    #[test]
    fn no_fallback_propagates_step_index() {
        let design = toy_design();
        let program = ReferenceProgram::new(vec![0.5, 0.0], vec![]);
        match run_closed_loop(&design, &program, &[3.99, 3.99], 5, RunOptions::default()) {
            Err(SimError::NoFallback { step }) => assert_eq!(step, 0),
            Ok(_) => {} // large state may still be recoverable for this gentle plant
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}

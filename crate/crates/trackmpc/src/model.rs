//! Problem description: plant, exosystem, and the validator that certifies
//! every standing assumption before synthesis is allowed to run.
//!
//! The block structure of the exosystem and the periodic/non-periodic tag
//! per block are declared by the user and verified here, not detected:
//! deciding numerically whether a rotation angle is a rational multiple of
//! 2*pi is ill posed, so the validator checks the declaration instead.

use crate::geometry::Polytope;
use crate::linalg::{dlyap, eig2, rank, rank_complex, Matrix};

/// Constrained plant `x+ = Ax + Bu` with output `y = Cx`, a stabilizing
/// feedback gain `K`, and the joint state-input constraint polytope `Z`.
#[derive(Debug, Clone)]
pub struct PlantModel {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
    pub k: Matrix,
    pub z: Polytope,
}

impl PlantModel {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, k: Matrix, z: Polytope) -> Self {
        let n = a.rows();
        assert_eq!(a.cols(), n, "A must be square");
        assert_eq!(b.rows(), n, "B row count");
        assert_eq!(c.cols(), n, "C column count");
        assert_eq!((k.rows(), k.cols()), (b.cols(), n), "K must be m x n");
        assert_eq!(z.dim(), n + b.cols(), "Z lives in state-input space");
        PlantModel { a, b, c, k, z }
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn p(&self) -> usize {
        self.c.rows()
    }

    /// Closed-loop matrix `A + BK`.
    pub fn acl(&self) -> Matrix {
        self.a.add(&self.b.mul(&self.k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Periodic,
    NonPeriodic,
}

/// One diagonal block of the exosystem matrix: 1x1 or 2x2.
#[derive(Debug, Clone)]
pub struct ExoBlock {
    pub kind: BlockKind,
    pub m: Matrix,
}

impl ExoBlock {
    pub fn new(kind: BlockKind, m: Matrix) -> Self {
        let d = m.rows();
        assert!(d == m.cols() && (d == 1 || d == 2), "blocks are 1x1 or 2x2");
        ExoBlock { kind, m }
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }
}

/// Reference generator `r+ = S r` with output map `Qe` and declared period
/// `k0` of the periodic part.
#[derive(Debug, Clone)]
pub struct ExosystemModel {
    pub blocks: Vec<ExoBlock>,
    pub qe: Matrix,
    pub k0: usize,
}

impl ExosystemModel {
    pub fn new(blocks: Vec<ExoBlock>, qe: Matrix, k0: usize) -> Self {
        assert!(k0 >= 1, "period must be positive");
        let q: usize = blocks.iter().map(|b| b.dim()).sum();
        assert_eq!(qe.cols(), q, "Qe column count must match the reference dimension");
        ExosystemModel { blocks, qe, k0 }
    }

    pub fn q(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn q_p(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Periodic)
            .map(|b| b.dim())
            .sum()
    }

    pub fn q_n(&self) -> usize {
        self.q() - self.q_p()
    }

    /// Full block-diagonal exosystem matrix in declaration order.
    pub fn s(&self) -> Matrix {
        let parts: Vec<&Matrix> = self.blocks.iter().map(|b| &b.m).collect();
        Matrix::block_diag(&parts)
    }
}

/// Block-diagonal assemblies of the periodic and non-periodic parts plus the
/// column-index partition of the reference vector.
#[derive(Debug, Clone)]
pub struct SplitExosystem {
    pub sp: Matrix,
    pub sn: Matrix,
    pub periodic_cols: Vec<usize>,
    pub nonperiodic_cols: Vec<usize>,
}

/// Column partition and the per-part assemblies used by synthesis and the
/// controller. Reassembling the blocks reproduces `S` exactly.
pub fn split(exo: &ExosystemModel) -> SplitExosystem {
    let mut periodic_cols = Vec::new();
    let mut nonperiodic_cols = Vec::new();
    let mut p_blocks: Vec<&Matrix> = Vec::new();
    let mut n_blocks: Vec<&Matrix> = Vec::new();
    let mut col = 0;
    for b in &exo.blocks {
        let cols = col..col + b.dim();
        match b.kind {
            BlockKind::Periodic => {
                periodic_cols.extend(cols);
                p_blocks.push(&b.m);
            }
            BlockKind::NonPeriodic => {
                nonperiodic_cols.extend(cols);
                n_blocks.push(&b.m);
            }
        }
        col += b.dim();
    }
    let sp = if p_blocks.is_empty() { Matrix::zeros(0, 0) } else { Matrix::block_diag(&p_blocks) };
    let sn = if n_blocks.is_empty() { Matrix::zeros(0, 0) } else { Matrix::block_diag(&n_blocks) };
    SplitExosystem { sp, sn, periodic_cols, nonperiodic_cols }
}

#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

/// Per-assumption pass/fail with measured residuals. Any failed item blocks
/// synthesis.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub items: Vec<CheckItem>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    fn push(&mut self, name: &str, passed: bool, residual: f64, tolerance: f64, detail: String) {
        self.items.push(CheckItem { name: name.into(), passed, residual, tolerance, detail });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for item in &self.items {
            writeln!(
                f,
                "[{}] {:<32} residual {:>12.3e}  (tol {:.1e})  {}",
                if item.passed { "pass" } else { "FAIL" },
                item.name,
                item.residual,
                item.tolerance,
                item.detail
            )?;
        }
        Ok(())
    }
}

/// Check every standing assumption: controllability, the Schur property of
/// `A + BK` (through the Lyapunov certificate), boundedness of `Z` with the
/// origin strictly interior, unit-modulus block eigenvalues, non-resonance
/// of the plant against every exosystem frequency, the declared period of
/// the periodic part, and aperiodicity of the non-periodic blocks.
pub fn validate(plant: &PlantModel, exo: &ExosystemModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = plant.n();
    let m = plant.m();
    let p = plant.p();
    let q = exo.q();

    let dims_ok = exo.qe.rows() == p;
    report.push(
        "dimensions",
        dims_ok,
        0.0,
        0.0,
        format!("n={n} m={m} p={p} q={q} (q_p={}, q_n={})", exo.q_p(), exo.q_n()),
    );
    if !dims_ok {
        return report;
    }

    // (A2) controllability of (A, B)
    let mut ctrb_parts: Vec<Matrix> = Vec::with_capacity(n);
    let mut apow_b = plant.b.clone();
    for _ in 0..n {
        ctrb_parts.push(apow_b.clone());
        apow_b = plant.a.mul(&apow_b);
    }
    let refs: Vec<&Matrix> = ctrb_parts.iter().collect();
    let ctrb = Matrix::hstack(&refs);
    let ctrb_rank = rank(&ctrb, 1e-9).unwrap_or(0);
    report.push(
        "(A2) controllability",
        ctrb_rank == n,
        (n - ctrb_rank) as f64,
        0.0,
        format!("rank of reachability matrix {ctrb_rank}/{n}"),
    );

    // (A2) A+BK Schur via the Lyapunov certificate
    let acl = plant.acl();
    match dlyap(&acl, &Matrix::identity(n)) {
        Ok(pmat) => {
            let res = acl.transpose().mul(&pmat).mul(&acl).sub(&pmat).add(&Matrix::identity(n));
            report.push(
                "(A2) closed-loop Schur",
                res.norm_fro() <= 1e-8 * (n as f64).sqrt(),
                res.norm_fro(),
                1e-8 * (n as f64).sqrt(),
                "Lyapunov certificate for A+BK".into(),
            );
        }
        Err(e) => report.push("(A2) closed-loop Schur", false, f64::NAN, 0.0, e.to_string()),
    }

    // (A3) Z bounded: no lineality and finite support along every axis
    let lin = plant.z.lineality_basis();
    let mut bounded = lin.cols() == 0;
    if bounded {
        'outer: for j in 0..plant.z.dim() {
            for sign in [1.0, -1.0] {
                let mut dir = vec![0.0; plant.z.dim()];
                dir[j] = sign;
                match plant.z.support_capped(&dir, 1e12, &lin, None) {
                    Ok(crate::geometry::Support::Value(v)) if v < 1e11 => {}
                    _ => {
                        bounded = false;
                        break 'outer;
                    }
                }
            }
        }
    }
    report.push("(A3) constraint set bounded", bounded, 0.0, 0.0, String::new());

    // (A3) origin strictly interior: canonical rows make h_i the distance
    let canon = Polytope::new(plant.z.normals().clone(), plant.z.offsets().to_vec());
    let margin = canon.offsets().iter().cloned().fold(f64::INFINITY, f64::min);
    report.push(
        "(A3) origin interior",
        margin >= 1e-9,
        margin,
        1e-9,
        format!("inradius lower bound {margin:.3e}"),
    );

    // (A4) block eigenvalues on the unit circle; 2x2 blocks diagonalizable
    let mut eig_residual = 0.0f64;
    let mut eig_ok = true;
    let mut eig_detail = String::new();
    for (i, blk) in exo.blocks.iter().enumerate() {
        if blk.dim() == 1 {
            let r = (blk.m[(0, 0)].abs() - 1.0).abs();
            eig_residual = eig_residual.max(r);
            if r > 1e-9 {
                eig_ok = false;
                eig_detail = format!("block {i}: |lambda| = {}", blk.m[(0, 0)].abs());
            }
            if blk.kind == BlockKind::NonPeriodic {
                eig_ok = false;
                eig_detail = format!("block {i}: 1x1 blocks are periodic (lambda = +-1)");
            }
            continue;
        }
        match eig2(&blk.m) {
            Ok(e) => {
                let r = (e.values[0].abs() - 1.0).abs().max((e.values[1].abs() - 1.0).abs());
                eig_residual = eig_residual.max(r);
                if r > 1e-9 {
                    eig_ok = false;
                    eig_detail = format!("block {i}: |lambda| = {}", e.values[0].abs());
                }
                if blk.kind == BlockKind::NonPeriodic && e.values[0].im == 0.0 {
                    eig_ok = false;
                    eig_detail = format!("block {i}: non-periodic block needs a complex pair");
                }
            }
            Err(err) => {
                eig_ok = false;
                eig_detail = format!("block {i}: {err}");
            }
        }
    }
    report.push("(A4) unit-circle eigenvalues", eig_ok, eig_residual, 1e-9, eig_detail);

    // (A5) non-resonance: rows of [A - lambda I, B; C, 0] independent at
    // every distinct eigenvalue of S (conjugates share the same rank)
    let mut lambdas: Vec<(f64, f64)> = Vec::new();
    for blk in &exo.blocks {
        let vals = if blk.dim() == 1 {
            vec![(blk.m[(0, 0)], 0.0)]
        } else {
            match eig2(&blk.m) {
                Ok(e) => vec![(e.values[0].re, e.values[0].im.abs())],
                Err(_) => continue,
            }
        };
        for v in vals {
            if !lambdas.iter().any(|l| (l.0 - v.0).hypot(l.1 - v.1) <= 1e-9) {
                lambdas.push(v);
            }
        }
    }
    let mut a5_ok = true;
    let mut a5_detail = String::new();
    for &(lre, lim) in &lambdas {
        let mut re = Matrix::zeros(n + p, n + m);
        let mut im = Matrix::zeros(n + p, n + m);
        for i in 0..n {
            for j in 0..n {
                re[(i, j)] = plant.a[(i, j)];
            }
            re[(i, i)] -= lre;
            im[(i, i)] = -lim;
            for j in 0..m {
                re[(i, n + j)] = plant.b[(i, j)];
            }
        }
        for i in 0..p {
            for j in 0..n {
                re[(n + i, j)] = plant.c[(i, j)];
            }
        }
        let rk = rank_complex(&re, &im, 1e-9).unwrap_or(0);
        if rk != n + p {
            a5_ok = false;
            a5_detail = format!("rank {rk} < {} at lambda = {lre:.6} + {lim:.6}i", n + p);
            break;
        }
    }
    report.push(
        "(A5) non-resonance",
        a5_ok,
        0.0,
        0.0,
        if a5_ok { format!("rank n+p at {} distinct eigenvalues", lambdas.len()) } else { a5_detail },
    );

    // declared period of the periodic part
    let parts = split(exo);
    if parts.sp.rows() > 0 {
        let res = parts.sp.pow(exo.k0).sub(&Matrix::identity(parts.sp.rows())).norm_fro();
        report.push(
            "(A4) periodic part period",
            res <= 1e-8,
            res,
            1e-8,
            format!("|Sp^{} - I|_F", exo.k0),
        );
    }

    // no non-periodic block may be periodic within 4*k0 steps
    for (i, blk) in exo.blocks.iter().enumerate() {
        if blk.kind != BlockKind::NonPeriodic {
            continue;
        }
        let eye = Matrix::identity(blk.dim());
        let mut pw = blk.m.clone();
        let mut min_res = f64::INFINITY;
        for _ in 1..=4 * exo.k0 {
            min_res = min_res.min(pw.sub(&eye).norm_fro());
            pw = pw.mul(&blk.m);
        }
        report.push(
            &format!("non-periodic block {i} aperiodic"),
            min_res > 1e-8,
            min_res,
            1e-8,
            format!("min |M^k - I|_F over k <= {}", 4 * exo.k0),
        );
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(theta: f64) -> Matrix {
        Matrix::from_rows(&[vec![theta.cos(), -theta.sin()], vec![theta.sin(), theta.cos()]])
    }

    fn toy_plant() -> PlantModel {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let b = Matrix::from_rows(&[vec![0.0], vec![1.0]]);
        let c = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let k = Matrix::from_rows(&[vec![-0.5, -1.2]]);
        let z = Polytope::box_set(&[5.0, 5.0, 2.0]);
        PlantModel::new(a, b, c, k, z)
    }

    #[test]
    fn toy_system_validates() {
        let exo = ExosystemModel::new(
            vec![ExoBlock::new(BlockKind::Periodic, Matrix::identity(1))],
            Matrix::from_rows(&[vec![1.0]]),
            1,
        );
        let report = validate(&toy_plant(), &exo);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn uncontrollable_pair_fails() {
        let a = Matrix::identity(2);
        let b = Matrix::zeros(2, 1);
        let c = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let k = Matrix::zeros(1, 2);
        let plant = PlantModel::new(a, b, c, k, Polytope::box_set(&[1.0, 1.0, 1.0]));
        let exo = ExosystemModel::new(
            vec![ExoBlock::new(BlockKind::Periodic, Matrix::identity(1))],
            Matrix::from_rows(&[vec![1.0]]),
            1,
        );
        let report = validate(&plant, &exo);
        let item = report.items.iter().find(|i| i.name.contains("controllability")).unwrap();
        assert!(!item.passed);
    }

    #[test]
    fn contracting_block_fails_a4() {
        let exo = ExosystemModel::new(
            vec![ExoBlock::new(BlockKind::Periodic, Matrix::from_vec(1, 1, vec![0.9]))],
            Matrix::from_rows(&[vec![1.0]]),
            1,
        );
        let report = validate(&toy_plant(), &exo);
        let item = report.items.iter().find(|i| i.name.contains("(A4) unit-circle")).unwrap();
        assert!(!item.passed);
        assert!((item.residual - 0.1).abs() < 1e-12);
    }

    #[test]
    fn secretly_periodic_block_fails() {
        // rotation by 2*pi/8 declared non-periodic is caught within 4*k0
        let exo = ExosystemModel::new(
            vec![
                ExoBlock::new(BlockKind::Periodic, Matrix::identity(1)),
                ExoBlock::new(BlockKind::NonPeriodic, rotation(std::f64::consts::PI / 4.0)),
            ],
            Matrix::from_rows(&[vec![1.0, 0.0, 0.0]]),
            4,
        );
        let report = validate(&toy_plant(), &exo);
        let item = report.items.iter().find(|i| i.name.contains("aperiodic")).unwrap();
        assert!(!item.passed);
    }

    #[test]
    fn split_partitions_and_reassembles() {
        let b0 = ExoBlock::new(BlockKind::Periodic, Matrix::identity(2));
        let b1 = ExoBlock::new(BlockKind::NonPeriodic, rotation(0.31));
        let b2 = ExoBlock::new(BlockKind::Periodic, rotation(std::f64::consts::PI / 2.0));
        let exo = ExosystemModel::new(vec![b0, b1, b2], Matrix::zeros(1, 6), 4);
        let parts = split(&exo);
        assert_eq!(parts.periodic_cols, vec![0, 1, 4, 5]);
        assert_eq!(parts.nonperiodic_cols, vec![2, 3]);
        assert_eq!(parts.sp.rows(), 4);
        assert_eq!(parts.sn.rows(), 2);
        let s = exo.s();
        for (io, &i) in parts.periodic_cols.iter().enumerate() {
            for (jo, &j) in parts.periodic_cols.iter().enumerate() {
                assert_eq!(parts.sp[(io, jo)], s[(i, j)]);
            }
        }
        for (io, &i) in parts.nonperiodic_cols.iter().enumerate() {
            for (jo, &j) in parts.nonperiodic_cols.iter().enumerate() {
                assert_eq!(parts.sn[(io, jo)], s[(i, j)]);
            }
        }
    }

    #[test]
    fn all_periodic_split_is_empty_on_the_nonperiodic_side() {
        let exo = ExosystemModel::new(
            vec![ExoBlock::new(BlockKind::Periodic, rotation(std::f64::consts::PI / 2.0))],
            Matrix::zeros(1, 2),
            4,
        );
        let parts = split(&exo);
        assert_eq!(parts.sn.rows(), 0);
        assert_eq!(exo.q_n(), 0);
    }

    #[test]
    fn validate_is_pure() {
        let exo = ExosystemModel::new(
            vec![ExoBlock::new(BlockKind::Periodic, Matrix::identity(1))],
            Matrix::from_rows(&[vec![1.0]]),
            1,
        );
        let plant = toy_plant();
        let r1 = validate(&plant, &exo);
        let r2 = validate(&plant, &exo);
        assert_eq!(r1.items.len(), r2.items.len());
        for (a, b) in r1.items.iter().zip(&r2.items) {
            assert_eq!(a.passed, b.passed);
            assert!(a.residual == b.residual || (a.residual.is_nan() && b.residual.is_nan()));
        }
    }
}

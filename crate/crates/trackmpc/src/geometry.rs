//! H-representation polytopes and ellipsoids: emptiness, redundancy removal,
//! scaling, products, support-function erosion, and seeded point sampling.
//!
//! All set queries reduce to linear programs through the solver module.
//! Sets produced by the admissible-set recursion can be unbounded along
//! their lineality space (the null space of the row matrix); support queries
//! detect that subspace once per set and restrict the LP to its orthogonal
//! complement, which leaves the optimum unchanged and keeps the iteration
//! away from unbounded optimal faces.

use crate::linalg::{cholesky, cholesky_solve, dot, svd, Matrix};
use crate::solver::{self, EqConstraint, SolveStatus, SolverFailure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("operation requires a nonempty polytope")]
    EmptyInput,
    #[error("polytope does not contain the origin")]
    OriginOutside,
    #[error("ellipsoid shape matrix is not positive definite")]
    ShapeNotPD,
    #[error("polytope is unbounded along a queried direction")]
    Unbounded,
    #[error("solver failure: {0}")]
    Solver(#[from] SolverFailure),
}

/// Polytope `{x : H x <= h}` in H-representation.
///
/// [`Polytope::new`] canonicalizes: rows are normalized to unit Euclidean
/// norm and trivial zero rows are dropped. [`Polytope::from_raw`] keeps rows
/// exactly as given (useful when rows carry problem scaling, e.g. the online
/// QP constraints).
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    normals: Matrix,
    offsets: Vec<f64>,
}

impl Polytope {
    pub fn new(h_mat: Matrix, h_vec: Vec<f64>) -> Self {
        assert_eq!(h_mat.rows(), h_vec.len(), "row count of H must match h");
        let dim = h_mat.cols();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut offsets = Vec::new();
        for i in 0..h_mat.rows() {
            let norm = dot(h_mat.row(i), h_mat.row(i)).sqrt();
            if norm <= 1e-14 {
                // 0'x <= h: drop when trivially true, keep verbatim otherwise
                // so emptiness remains detectable
                if h_vec[i] >= -1e-14 {
                    continue;
                }
                rows.push(h_mat.row(i).to_vec());
                offsets.push(h_vec[i]);
                continue;
            }
            rows.push(h_mat.row(i).iter().map(|v| v / norm).collect());
            offsets.push(h_vec[i] / norm);
        }
        let normals = if rows.is_empty() {
            Matrix::zeros(0, dim)
        } else {
            Matrix::from_rows(&rows)
        };
        Polytope { normals, offsets }
    }

    pub fn from_raw(h_mat: Matrix, h_vec: Vec<f64>) -> Self {
        assert_eq!(h_mat.rows(), h_vec.len());
        Polytope { normals: h_mat, offsets: h_vec }
    }

    /// Axis-aligned box `{|x_i| <= halfwidths[i]}`.
    pub fn box_set(halfwidths: &[f64]) -> Self {
        let n = halfwidths.len();
        let mut h = Matrix::zeros(2 * n, n);
        let mut rhs = vec![0.0; 2 * n];
        for j in 0..n {
            h[(2 * j, j)] = 1.0;
            rhs[2 * j] = halfwidths[j];
            h[(2 * j + 1, j)] = -1.0;
            rhs[2 * j + 1] = halfwidths[j];
        }
        Polytope::from_raw(h, rhs)
    }

    pub fn full_space(dim: usize) -> Self {
        Polytope::from_raw(Matrix::zeros(0, dim), vec![])
    }

    pub fn dim(&self) -> usize {
        self.normals.cols()
    }

    pub fn rows(&self) -> usize {
        self.normals.rows()
    }

    pub fn normals(&self) -> &Matrix {
        &self.normals
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Intersection: row concatenation over the same ambient space.
    pub fn intersect(&self, other: &Polytope) -> Polytope {
        assert_eq!(self.dim(), other.dim());
        Polytope {
            normals: Matrix::vstack(&[&self.normals, &other.normals]),
            offsets: [self.offsets.clone(), other.offsets.clone()].concat(),
        }
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        assert_eq!(v.len(), self.dim(), "dimension mismatch");
        (0..self.rows()).all(|i| dot(self.normals.row(i), v) <= self.offsets[i] + tol)
    }

    /// Largest constraint violation at `v` (negative when strictly inside).
    pub fn margin(&self, v: &[f64]) -> f64 {
        (0..self.rows())
            .map(|i| dot(self.normals.row(i), v) - self.offsets[i])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// True iff the phase-1 LP (minimize the largest violation) has optimum
    /// above `1e-9`.
    pub fn is_empty(&self) -> Result<bool, GeometryError> {
        if self.rows() == 0 {
            return Ok(false);
        }
        let ph = solver::phase1(self, None, None)?;
        Ok(ph.violation > 1e-9)
    }

    /// Orthonormal basis of the lineality space `{d : H d = 0}`; empty
    /// (dim x 0) when the polytope has no unbounded symmetric directions.
    pub fn lineality_basis(&self) -> Matrix {
        let dim = self.dim();
        if self.rows() == 0 {
            return Matrix::identity(dim);
        }
        let gram = self.normals.transpose().mul(&self.normals);
        let (_, sigma, v) = svd(&gram).expect("gram SVD of a finite matrix");
        let smax = sigma.first().copied().unwrap_or(0.0);
        let keep: Vec<usize> = (0..dim)
            .filter(|&j| smax == 0.0 || sigma[j] <= 1e-16 * smax)
            .collect();
        v.columns(&keep)
    }

    /// `mu`-scaling of a set containing the origin: `{x : H x <= mu h}`.
    pub fn scale(&self, mu: f64) -> Result<Polytope, GeometryError> {
        assert!(mu >= 0.0, "scale factor must be nonnegative");
        if !self.contains(&vec![0.0; self.dim()], 1e-9) {
            return Err(GeometryError::OriginOutside);
        }
        Ok(Polytope {
            normals: self.normals.clone(),
            offsets: self.offsets.iter().map(|h| h * mu).collect(),
        })
    }

    /// Cartesian product by block-diagonal stacking of constraints.
    pub fn product(&self, other: &Polytope) -> Polytope {
        let (d1, d2) = (self.dim(), other.dim());
        let mut h = Matrix::zeros(self.rows() + other.rows(), d1 + d2);
        let mut rhs = Vec::with_capacity(self.rows() + other.rows());
        for i in 0..self.rows() {
            for j in 0..d1 {
                h[(i, j)] = self.normals[(i, j)];
            }
            rhs.push(self.offsets[i]);
        }
        for i in 0..other.rows() {
            for j in 0..d2 {
                h[(self.rows() + i, d1 + j)] = other.normals[(i, j)];
            }
            rhs.push(other.offsets[i]);
        }
        Polytope { normals: h, offsets: rhs }
    }

    /// Pontryagin erosion by the ellipsoid image `{D b : b in E}`, rowwise by
    /// the ellipsoid support function.
    pub fn erode_by_ellipsoid_image(&self, d: &Matrix, e: &Ellipsoid) -> Result<Polytope, GeometryError> {
        assert_eq!(d.rows(), self.dim(), "D must map into the polytope space");
        assert_eq!(d.cols(), e.dim());
        let chol = cholesky(e.shape()).map_err(|_| GeometryError::ShapeNotPD)?;
        let mut offsets = Vec::with_capacity(self.rows());
        for i in 0..self.rows() {
            let a = d.tr_mul_vec(self.normals.row(i));
            let q = dot(&a, &cholesky_solve(&chol, &a)).max(0.0);
            offsets.push(self.offsets[i] - e.radius() * q.sqrt());
        }
        Ok(Polytope { normals: self.normals.clone(), offsets })
    }

    /// Drop rows implied by the others. A row is removed when maximizing it
    /// subject to the remaining rows gives a value at most `h_i + 1e-9`.
    pub fn remove_redundancy(&self) -> Result<Polytope, GeometryError> {
        if self.is_empty()? {
            return Err(GeometryError::EmptyInput);
        }
        let interior = solver::phase1(self, None, None)?.point;
        let lin = self.lineality_basis();
        let m = self.rows();
        if m <= 1 {
            return Ok(self.clone());
        }
        // stage 1: test each row against all the others, in parallel
        let verdicts = crate::par::map_indexed(m, |i| {
            let sub = self.without_rows(&[i]);
            sub.row_exceeds(self.normals.row(i), self.offsets[i] + 1e-9, &lin, Some(&interior))
                .map(|exceeds| !exceeds)
        });
        let mut candidates = Vec::new();
        for (i, v) in verdicts.into_iter().enumerate() {
            if v? {
                candidates.push(i);
            }
        }
        // stage 2: confirm candidates sequentially; drops enlarge the
        // remaining feasible set, so each one is re-certified against the
        // surviving rows
        let mut dropped = vec![false; m];
        for &i in &candidates {
            let mut excl: Vec<usize> = (0..m).filter(|&j| dropped[j]).collect();
            excl.push(i);
            excl.sort_unstable();
            let sub = self.without_rows(&excl);
            if !sub.row_exceeds(self.normals.row(i), self.offsets[i] + 1e-9, &lin, Some(&interior))? {
                dropped[i] = true;
            }
        }
        let keep: Vec<usize> = (0..m).filter(|&i| !dropped[i]).collect();
        if keep.len() == m {
            return Ok(self.clone());
        }
        Ok(self.subset(&keep))
    }

    /// Deterministic interior points: random directions, LP maximization,
    /// then a random convex combination with the Chebyshev center.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, GeometryError> {
        let dim = self.dim();
        let (center, radius) = self.chebyshev_center()?;
        if radius <= 1e-12 {
            return Ok(vec![center; count]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let dir = random_unit(&mut rng, dim);
            let r = solver::solve_lp(&dir.iter().map(|v| -v).collect::<Vec<_>>(), self, None);
            let vertex = match r.status {
                SolveStatus::Optimal => r.point.unwrap(),
                SolveStatus::Unbounded => return Err(GeometryError::Unbounded),
                _ => return Err(GeometryError::Solver(SolverFailure::IterationLimit(r.iterations))),
            };
            let w: f64 = rng.gen();
            let p: Vec<f64> = center
                .iter()
                .zip(&vertex)
                .map(|(c, v)| c + w * (v - c))
                .collect();
            debug_assert!(self.contains(&p, 1e-9));
            out.push(p);
        }
        Ok(out)
    }

    /// Chebyshev center and inradius.
    pub fn chebyshev_center(&self) -> Result<(Vec<f64>, f64), GeometryError> {
        let dim = self.dim();
        if self.rows() == 0 {
            return Err(GeometryError::Unbounded);
        }
        let mut g = Matrix::zeros(self.rows() + 1, dim + 1);
        let mut h = vec![0.0; self.rows() + 1];
        for i in 0..self.rows() {
            let norm = dot(self.normals.row(i), self.normals.row(i)).sqrt();
            for j in 0..dim {
                g[(i, j)] = self.normals[(i, j)];
            }
            g[(i, dim)] = norm;
            h[i] = self.offsets[i];
        }
        g[(self.rows(), dim)] = -1.0;
        let lin = self.lineality_basis();
        let eq = if lin.cols() > 0 {
            let mut a = Matrix::zeros(lin.cols(), dim + 1);
            for k in 0..lin.cols() {
                for j in 0..dim {
                    a[(k, j)] = lin[(j, k)];
                }
            }
            Some(EqConstraint { a, b: vec![0.0; lin.cols()] })
        } else {
            None
        };
        let mut c = vec![0.0; dim + 1];
        c[dim] = -1.0;
        let r = solver::solve_lp(&c, &Polytope::from_raw(g, h), eq.as_ref());
        match r.status {
            SolveStatus::Optimal => {
                let mut p = r.point.unwrap();
                let radius = p.pop().unwrap();
                Ok((p, radius))
            }
            SolveStatus::Unbounded => Err(GeometryError::Unbounded),
            SolveStatus::Infeasible => Err(GeometryError::EmptyInput),
            SolveStatus::IterationLimit => {
                Err(GeometryError::Solver(SolverFailure::IterationLimit(r.iterations)))
            }
        }
    }

    /// Two-sided sampled containment is not needed for equality of
    /// H-representations: mutual row implication certified by LPs suffices.
    pub fn same_set(&self, other: &Polytope, tol: f64) -> Result<bool, GeometryError> {
        Ok(self.implies_rows_of(other, tol)? && other.implies_rows_of(self, tol)?)
    }

    fn implies_rows_of(&self, other: &Polytope, tol: f64) -> Result<bool, GeometryError> {
        let lin = self.lineality_basis();
        let interior = solver::phase1(self, None, None)?.point;
        for i in 0..other.rows() {
            if self.row_exceeds(other.normals.row(i), other.offsets[i] + tol, &lin, Some(&interior))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn subset(&self, keep: &[usize]) -> Polytope {
        let mut h = Matrix::zeros(keep.len(), self.dim());
        let mut rhs = Vec::with_capacity(keep.len());
        for (io, &i) in keep.iter().enumerate() {
            for j in 0..self.dim() {
                h[(io, j)] = self.normals[(i, j)];
            }
            rhs.push(self.offsets[i]);
        }
        Polytope { normals: h, offsets: rhs }
    }

    fn without_rows(&self, sorted_excl: &[usize]) -> Polytope {
        let keep: Vec<usize> = (0..self.rows())
            .filter(|i| sorted_excl.binary_search(i).is_err())
            .collect();
        self.subset(&keep)
    }

    /// Decide whether `max dir'x` over the set reaches `threshold`, by a
    /// phase-1 feasibility test of the set intersected with
    /// `{dir'x >= threshold}`. Unlike solving the support LP outright this
    /// stays well posed when `dir` is parallel to an active row (the usual
    /// situation in redundancy tests), because the phase-1 program always
    /// has a strictly interior point.
    pub(crate) fn row_exceeds(
        &self,
        dir: &[f64],
        threshold: f64,
        lineality: &Matrix,
        warm: Option<&[f64]>,
    ) -> Result<bool, GeometryError> {
        let dim = self.dim();
        let dnorm = dot(dir, dir).sqrt();
        if dnorm <= 1e-14 {
            return Ok(0.0 >= threshold);
        }
        if lineality.cols() > 0 {
            let proj = lineality.tr_mul_vec(dir);
            if proj.iter().any(|v| v.abs() > 1e-10 * (1.0 + dnorm)) {
                return Ok(true);
            }
        }
        let mut g = Matrix::zeros(self.rows() + 1, dim);
        let mut h = Vec::with_capacity(self.rows() + 1);
        for i in 0..self.rows() {
            for j in 0..dim {
                g[(i, j)] = self.normals[(i, j)];
            }
            h.push(self.offsets[i]);
        }
        for j in 0..dim {
            g[(self.rows(), j)] = -dir[j] / dnorm;
        }
        h.push(-threshold / dnorm);
        let eq = lineality_eq(lineality, dim);
        match solver::phase1(&Polytope::from_raw(g, h), eq.as_ref(), warm) {
            Ok(ph) => Ok(ph.violation <= 1e-9),
            // undecidable at the tolerance knife edge: keep the row; a
            // retained redundant row never changes the set
            Err(SolverFailure::IterationLimit(_)) => Ok(true),
        }
    }

    /// Support value `max dir'x` over the set, capped at `cap`: returns
    /// `Unbounded` when `dir` has a component in the lineality space (the
    /// value is then arbitrarily large), otherwise the LP value restricted
    /// to the lineality complement, which equals the true support.
    pub(crate) fn support_capped(
        &self,
        dir: &[f64],
        cap: f64,
        lineality: &Matrix,
        warm: Option<&[f64]>,
    ) -> Result<Support, GeometryError> {
        let dim = self.dim();
        if lineality.cols() > 0 {
            let proj = lineality.tr_mul_vec(dir);
            let dnorm = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if proj.iter().any(|v| v.abs() > 1e-10 * (1.0 + dnorm)) {
                return Ok(Support::Unbounded);
            }
        }
        let mut g = Matrix::zeros(self.rows() + 1, dim);
        let mut h = Vec::with_capacity(self.rows() + 1);
        for i in 0..self.rows() {
            for j in 0..dim {
                g[(i, j)] = self.normals[(i, j)];
            }
            h.push(self.offsets[i]);
        }
        for j in 0..dim {
            g[(self.rows(), j)] = dir[j];
        }
        h.push(cap);
        let eq = if lineality.cols() > 0 {
            let mut a = Matrix::zeros(lineality.cols(), dim);
            for k in 0..lineality.cols() {
                for j in 0..dim {
                    a[(k, j)] = lineality[(j, k)];
                }
            }
            Some(EqConstraint { a, b: vec![0.0; lineality.cols()] })
        } else {
            None
        };
        // project the warm point onto the lineality complement; row values
        // are invariant under that shift
        let warm_proj = warm.map(|w| {
            if lineality.cols() == 0 {
                w.to_vec()
            } else {
                let coeff = lineality.tr_mul_vec(w);
                let shift = lineality.mul_vec(&coeff);
                w.iter().zip(&shift).map(|(a, b)| a - b).collect()
            }
        });
        let c: Vec<f64> = dir.iter().map(|v| -v).collect();
        let p = solver::ConvexProgram::lp(c.clone(), Polytope::from_raw(g.clone(), h.clone()), eq.clone());
        let r = solver::solve(&p, warm_proj.as_deref());
        match r.status {
            SolveStatus::Optimal => Ok(Support::Value(-r.objective.unwrap())),
            SolveStatus::Unbounded => Ok(Support::Unbounded),
            SolveStatus::Infeasible => Err(GeometryError::EmptyInput),
            SolveStatus::IterationLimit => {
                // A binding cap makes the objective parallel to an active
                // row; the dual then has no interior and the barrier
                // iteration can stall. Decide the binding case by a phase-1
                // feasibility test of {rows, dir'x >= cap}, which is always
                // well posed; only a certified-inactive cap needs a re-solve.
                let mut g2 = Matrix::zeros(self.rows() + 1, dim);
                let mut h2 = Vec::with_capacity(self.rows() + 1);
                for i in 0..self.rows() {
                    for j in 0..dim {
                        g2[(i, j)] = self.normals[(i, j)];
                    }
                    h2.push(self.offsets[i]);
                }
                for j in 0..dim {
                    g2[(self.rows(), j)] = -dir[j];
                }
                h2.push(-cap);
                let above = Polytope::from_raw(g2, h2);
                let ph = solver::phase1(&above, eq.as_ref(), warm_proj.as_deref())?;
                if ph.violation <= 1e-9 {
                    return Ok(Support::Value(cap));
                }
                let uncapped = solver::ConvexProgram::lp(
                    c,
                    Polytope::from_raw(
                        g.block(0, 0, self.rows(), dim),
                        h[..self.rows()].to_vec(),
                    ),
                    eq,
                );
                let r2 = solver::solve(&uncapped, warm_proj.as_deref());
                match r2.status {
                    SolveStatus::Optimal => Ok(Support::Value(-r2.objective.unwrap())),
                    SolveStatus::Unbounded => Ok(Support::Unbounded),
                    SolveStatus::Infeasible => Err(GeometryError::EmptyInput),
                    SolveStatus::IterationLimit => {
                        Err(GeometryError::Solver(SolverFailure::IterationLimit(r2.iterations)))
                    }
                }
            }
        }
    }
}

fn lineality_eq(lineality: &Matrix, dim: usize) -> Option<EqConstraint> {
    if lineality.cols() == 0 {
        return None;
    }
    let mut a = Matrix::zeros(lineality.cols(), dim);
    for k in 0..lineality.cols() {
        for j in 0..dim {
            a[(k, j)] = lineality[(j, k)];
        }
    }
    Some(EqConstraint { a, b: vec![0.0; lineality.cols()] })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Support {
    Value(f64),
    Unbounded,
}

/// Ellipsoid `{v : v' shape v <= radius^2}` with SPD shape matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    shape: Matrix,
    radius: f64,
}

impl Ellipsoid {
    pub fn new(shape: Matrix, radius: f64) -> Result<Self, GeometryError> {
        assert!(radius >= 0.0);
        cholesky(&shape).map_err(|_| GeometryError::ShapeNotPD)?;
        Ok(Ellipsoid { shape, radius })
    }

    pub fn dim(&self) -> usize {
        self.shape.rows()
    }

    pub fn shape(&self) -> &Matrix {
        &self.shape
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `sqrt(v' shape v)`.
    pub fn norm(&self, v: &[f64]) -> f64 {
        crate::linalg::quad_form(v, &self.shape).max(0.0).sqrt()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.norm(v) <= self.radius + tol
    }
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| {
                // Box-Muller from two uniforms
                let u1: f64 = 1.0 - rng.gen::<f64>();
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-6 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box(dim: usize) -> Polytope {
        Polytope::box_set(&vec![1.0; dim])
    }

    #[test]
    fn emptiness_of_interval_constraints() {
        // {x <= 1, -x <= 0} nonempty; {x <= -1, -x <= 0} empty
        let p1 = Polytope::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]]), vec![1.0, 0.0]);
        assert!(!p1.is_empty().unwrap());
        let p2 = Polytope::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]]), vec![-1.0, 0.0]);
        assert!(p2.is_empty().unwrap());
    }

    #[test]
    fn containment_with_tolerance() {
        let b = unit_box(2);
        assert!(b.contains(&[0.0, 0.0], 1e-9));
        assert!(!b.contains(&[1.0 + 2e-6, 1.0 + 2e-6], 1e-9));
        assert!(b.contains(&[1.0 + 1e-7, 1.0 + 1e-7], 1e-6));
    }

    #[test]
    fn redundancy_drops_implied_interval_bound() {
        let p = Polytope::new(
            Matrix::from_rows(&[vec![1.0], vec![1.0], vec![-1.0]]),
            vec![1.0, 2.0, 0.0],
        );
        let r = p.remove_redundancy().unwrap();
        assert_eq!(r.rows(), 2);
        assert!(r.contains(&[0.5], 1e-9));
        assert!(!r.contains(&[1.5], 1e-9));
    }

    #[test]
    fn redundancy_keeps_irredundant_box() {
        let b = unit_box(2);
        assert_eq!(b.remove_redundancy().unwrap().rows(), 4);
    }

    #[test]
    fn redundancy_one_step_contraction() {
        // |x| <= 1 together with |0.5 x| <= 1: the latter rows are implied
        let p = Polytope::new(
            Matrix::from_rows(&[vec![1.0], vec![-1.0], vec![0.5], vec![-0.5]]),
            vec![1.0, 1.0, 1.0, 1.0],
        );
        assert_eq!(p.remove_redundancy().unwrap().rows(), 2);
    }

    #[test]
    fn redundancy_rejects_empty() {
        let p = Polytope::new(Matrix::from_rows(&[vec![1.0], vec![-1.0]]), vec![-1.0, 0.0]);
        assert!(matches!(p.remove_redundancy(), Err(GeometryError::EmptyInput)));
    }

    #[test]
    fn scaling_box() {
        let b = unit_box(2);
        let half = b.scale(0.5).unwrap();
        assert!(half.contains(&[0.5, 0.5], 1e-9));
        assert!(!half.contains(&[0.6, 0.0], 1e-9));
        assert!(b.scale(1.0).unwrap().same_set(&b, 1e-9).unwrap());
        let point = b.scale(0.0).unwrap();
        assert!(point.contains(&[0.0, 0.0], 1e-12));
        assert!(!point.contains(&[1e-3, 0.0], 1e-9));
    }

    #[test]
    fn scale_requires_origin() {
        let shifted = Polytope::new(
            Matrix::from_rows(&[vec![1.0], vec![-1.0]]),
            vec![3.0, -2.0], // 2 <= x <= 3
        );
        assert!(matches!(shifted.scale(0.5), Err(GeometryError::OriginOutside)));
    }

    #[test]
    fn scale_composes() {
        let b = unit_box(3);
        let ab = b.scale(0.6).unwrap().scale(0.5).unwrap();
        let direct = b.scale(0.3).unwrap();
        assert!(ab.same_set(&direct, 1e-9).unwrap());
    }

    #[test]
    fn product_builds_square_from_intervals() {
        let i = unit_box(1);
        let sq = i.product(&i);
        assert_eq!(sq.dim(), 2);
        assert_eq!(sq.rows(), 4);
        assert!(sq.contains(&[0.9, -0.9], 1e-9));
        assert!(!sq.contains(&[1.1, 0.0], 1e-9));
    }

    #[test]
    fn product_with_full_space_pads_free_coordinates() {
        let i = unit_box(1);
        let p = i.product(&Polytope::full_space(2));
        assert_eq!(p.dim(), 3);
        assert_eq!(p.rows(), 2);
        assert!(p.contains(&[0.5, 1e6, -1e6], 1e-9));
    }

    #[test]
    fn erosion_by_disk() {
        let sq = unit_box(2);
        let e = Ellipsoid::new(Matrix::identity(2), 0.5).unwrap();
        let er = sq.erode_by_ellipsoid_image(&Matrix::identity(2), &e).unwrap();
        assert!(er.contains(&[0.5, 0.5], 1e-9));
        assert!(!er.contains(&[0.51, 0.0], 1e-9));
    }

    #[test]
    fn erosion_zero_radius_is_identity() {
        let sq = unit_box(2);
        let e = Ellipsoid::new(Matrix::identity(2), 0.0).unwrap();
        let er = sq.erode_by_ellipsoid_image(&Matrix::identity(2), &e).unwrap();
        assert!(er.same_set(&sq, 1e-9).unwrap());
    }

    #[test]
    fn erosion_only_along_image_direction() {
        let sq = unit_box(2);
        let d = Matrix::from_rows(&[vec![1.0], vec![0.0]]);
        let e = Ellipsoid::new(Matrix::identity(1), 0.3).unwrap();
        let er = sq.erode_by_ellipsoid_image(&d, &e).unwrap();
        assert!(er.contains(&[0.7, 1.0], 1e-9));
        assert!(!er.contains(&[0.71, 0.0], 1e-9));
    }

    #[test]
    fn erosion_plus_image_stays_inside() {
        // sampled boundary points of the ellipsoid image shifted into the
        // eroded set must stay inside the original set
        let sq = unit_box(2);
        let shape = Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]);
        let e = Ellipsoid::new(shape.clone(), 0.7).unwrap();
        let d = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.2, 0.8]]);
        let er = sq.erode_by_ellipsoid_image(&d, &e).unwrap();
        let chol = cholesky(&shape).unwrap();
        let pts = er.sample_points(40, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..100 {
            // boundary point of E: beta = r * L^{-T} u with |u| = 1
            let u = random_unit(&mut rng, 2);
            let mut beta = u.clone();
            // solve L' beta = u
            for i in (0..2).rev() {
                for j in (i + 1)..2 {
                    beta[i] -= chol[(j, i)] * beta[j];
                }
                beta[i] /= chol[(i, i)];
            }
            let beta: Vec<f64> = beta.iter().map(|b| b * e.radius()).collect();
            assert!((e.norm(&beta) - e.radius()).abs() < 1e-9);
            let shift = d.mul_vec(&beta);
            let p = &pts[k % pts.len()];
            let moved: Vec<f64> = p.iter().zip(&shift).map(|(a, b)| a + b).collect();
            assert!(sq.contains(&moved, 1e-7), "escaped at trial {k}");
        }
    }

    #[test]
    fn sampling_inside_and_deterministic() {
        let b = unit_box(3);
        let pts = b.sample_points(10, 42).unwrap();
        assert_eq!(pts.len(), 10);
        for p in &pts {
            assert!(b.contains(p, 1e-9));
        }
        let again = b.sample_points(10, 42).unwrap();
        assert_eq!(pts, again);
        let other = b.sample_points(10, 43).unwrap();
        assert_ne!(pts, other);
    }

    #[test]
    fn sampling_singleton_returns_origin() {
        let z = unit_box(2).scale(0.0).unwrap();
        for p in z.sample_points(5, 1).unwrap() {
            assert!(p.iter().all(|v| v.abs() <= 1e-9));
        }
    }

    #[test]
    fn redundancy_preserves_membership_sampled() {
        // random 2d polytope with redundant rows mixed in
        let h = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
            vec![1.0, 1.0],
            vec![0.7, 0.7],
            vec![-0.3, 0.9],
        ]);
        let p = Polytope::new(h, vec![1.0, 1.0, 1.0, 1.0, 1.5, 3.0, 1.2]);
        let r = p.remove_redundancy().unwrap();
        assert!(r.rows() < p.rows());
        let inside = p.sample_points(500, 7).unwrap();
        for q in inside {
            assert!(r.contains(&q, 1e-9));
        }
        // near/outside points agree on membership both ways
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let q = [rng.gen::<f64>() * 3.0 - 1.5, rng.gen::<f64>() * 3.0 - 1.5];
            assert_eq!(p.contains(&q, 1e-9), r.contains(&q, 1e-9));
        }
    }

    #[test]
    fn chebyshev_center_of_box() {
        let b = Polytope::box_set(&[2.0, 0.5]);
        let (c, r) = b.chebyshev_center().unwrap();
        assert!(c[0].abs() < 1e-7 && c[1].abs() < 1e-7);
        assert!((r - 0.5).abs() < 1e-7);
    }

    #[test]
    fn lineality_of_slab() {
        // |x_0| <= 1 in R^3: lineality space is span(e1, e2)
        let h = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]]);
        let p = Polytope::from_raw(h, vec![1.0, 1.0]);
        let lin = p.lineality_basis();
        assert_eq!(lin.cols(), 2);
        for k in 0..2 {
            let col: Vec<f64> = (0..3).map(|j| lin[(j, k)]).collect();
            assert!(col[0].abs() < 1e-12);
        }
        // support along e0 is finite, along e1 unbounded
        match p.support_capped(&[1.0, 0.0, 0.0], 10.0, &lin, None).unwrap() {
            Support::Value(v) => assert!((v - 1.0).abs() < 1e-7),
            other => panic!("expected finite support, got {other:?}"),
        }
        assert_eq!(
            p.support_capped(&[0.0, 1.0, 0.0], 10.0, &lin, None).unwrap(),
            Support::Unbounded
        );
    }
}

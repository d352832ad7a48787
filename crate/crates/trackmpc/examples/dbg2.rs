use trackmpc::cli::config;
use trackmpc::geometry::Polytope;
use trackmpc::linalg::{dot, Matrix};
use trackmpc::model::split;
use trackmpc::solver;
use trackmpc::synthesis::*;

fn main() {
    let p = config::load("crates/trackmpc/fixtures/helicopter.toml").unwrap();
    let reg = solve_regulator(&p.plant, &p.exo).unwrap();
    let parts = split(&p.exo);
    let pi_p = reg.pi.columns(&parts.periodic_cols);
    let ga_p = reg.gamma.columns(&parts.periodic_cols);
    let n = p.plant.n();
    let gmap = augmented_output_map(&Matrix::identity(n), &pi_p, &p.plant.k, &ga_p);
    let z = Polytope::new(p.plant.z.normals().clone(), p.plant.z.offsets().to_vec());
    let constraint = Polytope::new(z.normals().mul(&gmap), z.offsets().to_vec());
    let m_aug = Matrix::block_diag(&[&p.plant.acl(), &parts.sp]);
    let h0 = constraint.normals().clone();
    let rhs0 = constraint.offsets().to_vec();
    let cand = h0.mul(&m_aug);
    let lin = constraint.lineality_basis();

    let dir: Vec<f64> = cand.row(0).to_vec();
    let dnorm = dot(&dir, &dir).sqrt();
    let threshold = rhs0[0] + 1e-9;
    eprintln!("dnorm {dnorm} threshold {threshold} scaled {}", threshold / dnorm);
    // replicate row_exceeds construction
    let dim = 12;
    let mut g = Matrix::zeros(constraint.rows() + 1, dim);
    let mut h = Vec::new();
    for i in 0..constraint.rows() {
        for j in 0..dim {
            g[(i, j)] = constraint.normals()[(i, j)];
        }
        h.push(constraint.offsets()[i]);
    }
    for j in 0..dim {
        g[(constraint.rows(), j)] = -dir[j] / dnorm;
    }
    h.push(-threshold / dnorm);
    let mut a = Matrix::zeros(lin.cols(), dim);
    for k in 0..lin.cols() {
        for j in 0..dim {
            a[(k, j)] = lin[(j, k)];
        }
    }
    let eq = solver::EqConstraint { a, b: vec![0.0; lin.cols()] };
    match solver::phase1(&Polytope::from_raw(g.clone(), h.clone()), Some(&eq), Some(&vec![0.0; 12])) {
        Ok(ph) => {
            eprintln!("phase1 violation {}", ph.violation);
            let x = &ph.point;
            eprintln!("|x| {:?}", x.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            let mut worst = f64::NEG_INFINITY;
            for i in 0..constraint.rows() {
                worst = worst.max(dot(constraint.normals().row(i), x) - constraint.offsets()[i]);
            }
            eprintln!("max row violation {worst}");
            eprintln!("dir'x/dnorm = {} vs {}", dot(&dir, x) / dnorm, threshold / dnorm);
            eprintln!("lin'x = {:?}", lin.tr_mul_vec(x));
        }
        Err(e) => eprintln!("phase1 err {e}"),
    }
}

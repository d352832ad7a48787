use trackmpc::cli::config;
use trackmpc::geometry::Polytope;
use trackmpc::linalg::Matrix;
use trackmpc::model::split;
use trackmpc::solver::{IPM_CALLS, IPM_ITERS};
use trackmpc::synthesis::*;
use std::sync::atomic::Ordering;

fn main() {
    let cap: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(40);
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
    let t0 = std::time::Instant::now();
    match moas(&m_aug, &constraint, cap, 96) {
        Ok(r) => eprintln!("moas ok: t0 {} rows {} in {:?}", r.t0(), r.set.rows(), t0.elapsed()),
        Err(e) => eprintln!("moas err after {:?}: {e}", t0.elapsed()),
    }
    eprintln!(
        "ipm calls {} iters {} (avg {:.1})",
        IPM_CALLS.load(Ordering::Relaxed),
        IPM_ITERS.load(Ordering::Relaxed),
        IPM_ITERS.load(Ordering::Relaxed) as f64 / IPM_CALLS.load(Ordering::Relaxed).max(1) as f64
    );
}

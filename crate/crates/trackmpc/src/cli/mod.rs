//! Command-line tool: validate a problem, synthesize a controller design,
//! simulate the closed loop, and inspect admissible-set recursions.
//!
//! Exit codes: 0 success, 1 domain failure (assumptions violated, synthesis
//! or simulation aborted), 2 input error (unreadable/malformed files,
//! mismatched artifact).

pub mod artifact;
pub mod config;
pub mod csvlog;
pub mod svg;

use crate::linalg::Matrix;
use crate::model::{self};
use crate::sim::{self, RunOptions};
use crate::synthesis::{self, ControllerDesign, SynthesisError, TerminalSet};
use artifact::DesignArtifact;
use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser)]
#[command(name = "trackmpc", about = "Tracking MPC synthesis and simulation", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every standing assumption of a problem configuration.
    Validate { config: String },
    /// Run offline synthesis and persist the controller design.
    Synthesize {
        config: String,
        /// Output path for the design artifact.
        #[arg(short, long)]
        out: String,
        /// Run sampled terminal-set invariance checks after synthesis
        /// (seeded by TRACKMPC_SEED, default 0).
        #[arg(long)]
        verify: bool,
    },
    /// Simulate the closed loop from a persisted design.
    Simulate {
        artifact: String,
        config: String,
        /// Output directory for log.csv and the SVG plots.
        #[arg(short, long)]
        out: String,
        /// Pin the artificial reference to the measured reference
        /// (diagnostic; aborts at the first infeasible step).
        #[arg(long)]
        pin_reference: bool,
        /// Override the configured number of steps.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run the output-admissible-set recursion and print set statistics.
    Moas {
        config: String,
        /// Use the full exosystem including non-periodic blocks (expected to
        /// hit the cap).
        #[arg(long)]
        include_nonperiodic: bool,
        /// Iteration cap override.
        #[arg(long)]
        cap: Option<usize>,
    },
}

/// Seed for sampling subcommands, overridable through `TRACKMPC_SEED`.
fn sampling_seed() -> u64 {
    std::env::var("TRACKMPC_SEED").ok().and_then(|v| v.parse().ok()).unwrap_or(0)
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap routes --help/--version through this path with exit 0
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Synthesize { config, out, verify } => cmd_synthesize(&config, &out, verify),
        Command::Simulate { artifact, config, out, pin_reference, steps } => {
            cmd_simulate(&artifact, &config, &out, pin_reference, steps)
        }
        Command::Moas { config, include_nonperiodic, cap } => {
            cmd_moas(&config, include_nonperiodic, cap)
        }
    }
}

fn load_or_exit(path: &str) -> Result<config::LoadedProblem, i32> {
    config::load(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_INPUT
    })
}

fn cmd_validate(path: &str) -> i32 {
    let problem = match load_or_exit(path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let report = model::validate(&problem.plant, &problem.exo);
    print!("{report}");
    if report.passed() {
        println!("all checks passed");
        EXIT_OK
    } else {
        println!("validation FAILED");
        EXIT_DOMAIN
    }
}

fn cmd_synthesize(config_path: &str, out_path: &str, verify: bool) -> i32 {
    let problem = match load_or_exit(config_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let config_bytes = std::fs::read(config_path).expect("config was just read");
    let design = match ControllerDesign::synthesize(problem.plant, problem.exo, problem.options) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("synthesis failed: {e}");
            return EXIT_DOMAIN;
        }
    };
    let s = &design.summary;
    println!("regulator residual      {:.3e}", s.regulator_residual);
    println!("output map residual     {:.3e}", s.output_map_residual);
    println!("Lyapunov residual       {:.3e}", s.lyapunov_residual);
    println!("T invariance residual   {:.3e}", s.t_invariance_residual);
    println!(
        "terminal set            {} rows, determined at t_0 = {}",
        s.terminal_rows,
        design.terminal.iterations() - 1
    );
    match s.upsilon {
        Some(u) => println!("Upsilon                 {u:.6}"),
        None => println!("Upsilon                 (no tightening)"),
    }
    println!(
        "decision variables      {} input + {} additional (artificial reference)",
        design.horizon * design.m(),
        design.additional_decision_variables()
    );
    if verify {
        let seed = sampling_seed();
        match verify_terminal_set(&design, seed, 1000) {
            Ok((worst_image, worst_output)) => {
                println!(
                    "terminal-set check      1000 samples (seed {seed}): image margin {worst_image:.3e}, output margin {worst_output:.3e}"
                );
            }
            Err(e) => {
                eprintln!("terminal-set check failed: {e}");
                return EXIT_DOMAIN;
            }
        }
    }
    let artifact = DesignArtifact::from_design(&design, artifact::sha256_hex(&config_bytes));
    if let Err(e) = artifact.save(out_path) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    println!("design written to {out_path}");
    EXIT_OK
}

/// Sampled invariance check of the synthesized terminal set: every sampled
/// point's one-step image stays inside and its constrained output stays in
/// `Z`. Returns the worst margins (negative means inside).
pub fn verify_terminal_set(
    design: &ControllerDesign,
    seed: u64,
    samples: usize,
) -> Result<(f64, f64), SynthesisError> {
    let set = match &design.terminal {
        TerminalSet::Periodic { oinf, .. } => oinf,
        TerminalSet::Mixed { op_inf, .. } => op_inf,
    };
    let n = design.n();
    let (m_aug, gmap) = match &design.terminal {
        TerminalSet::Periodic { .. } => (
            Matrix::block_diag(&[&design.plant.acl(), &design.exo.s()]),
            synthesis::augmented_output_map(
                &Matrix::identity(n),
                &design.regulator.pi,
                &design.plant.k,
                &design.regulator.gamma,
            ),
        ),
        TerminalSet::Mixed { .. } => (
            Matrix::block_diag(&[&design.plant.acl(), &design.parts.sp]),
            synthesis::augmented_output_map(
                &Matrix::identity(n),
                &design.pi_p(),
                &design.plant.k,
                &design.gamma_p(),
            ),
        ),
    };
    let pts = set.sample_points(samples, seed)?;
    let margins = crate::par::map_indexed(pts.len(), |i| {
        let z = &pts[i];
        let img = m_aug.mul_vec(z);
        let out = gmap.mul_vec(z);
        (set.margin(&img), design.plant.z.margin(&out))
    });
    let mut worst_image = f64::NEG_INFINITY;
    let mut worst_output = f64::NEG_INFINITY;
    for (mi, mo) in margins {
        worst_image = worst_image.max(mi);
        worst_output = worst_output.max(mo);
    }
    Ok((worst_image, worst_output))
}

fn cmd_simulate(
    artifact_path: &str,
    config_path: &str,
    out_dir: &str,
    pin_reference: bool,
    steps_override: Option<usize>,
) -> i32 {
    let problem = match load_or_exit(config_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let config_bytes = std::fs::read(config_path).expect("config was just read");
    let artifact = match DesignArtifact::load(artifact_path) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if let Err(e) = artifact.check_config(&config_bytes) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    let design = match artifact.into_design() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {out_dir}: {e}");
        return EXIT_INPUT;
    }
    let steps = steps_override.unwrap_or(problem.sim_steps);
    let (n, m, q) = (design.n(), design.m(), design.q());
    let options = RunOptions { pin_reference };
    let log = if steps == 0 {
        sim::SimLog::default()
    } else {
        match sim::run_closed_loop(&design, &problem.program, &problem.x0, steps, options) {
            Ok(log) => log,
            Err(e) => {
                eprintln!("simulation aborted: {e}");
                return EXIT_DOMAIN;
            }
        }
    };

    let csv_path = format!("{out_dir}/log.csv");
    if let Err(e) = std::fs::write(&csv_path, csvlog::write(&log, n, m, q)) {
        eprintln!("error: cannot write {csv_path}: {e}");
        return EXIT_INPUT;
    }

    // output vs desired output, one panel per output channel
    let mut tracking_panels = Vec::new();
    for i in 0..design.p() {
        let y: Vec<f64> = log.steps.iter().map(|r| crate::linalg::dot(design.plant.c.row(i), &r.x)).collect();
        let yr: Vec<f64> = log.steps.iter().map(|r| crate::linalg::dot(design.exo.qe.row(i), &r.r)).collect();
        tracking_panels.push(svg::Panel {
            title: format!("output channel {i}"),
            series: vec![
                svg::Series { label: format!("y{i}"), values: y },
                svg::Series { label: format!("y_r{i}"), values: yr },
            ],
        });
    }
    let tracking_path = format!("{out_dir}/tracking.svg");
    if let Err(e) = std::fs::write(&tracking_path, svg::render(&tracking_panels)) {
        eprintln!("error: cannot write {tracking_path}: {e}");
        return EXIT_INPUT;
    }

    let metrics_panels = vec![
        svg::Panel {
            title: "tracking error norm".into(),
            series: vec![svg::Series {
                label: "|e|".into(),
                values: log.steps.iter().map(|r| r.e_norm()).collect(),
            }],
        },
        svg::Panel {
            title: "control input".into(),
            series: (0..m)
                .map(|i| svg::Series {
                    label: format!("u{i}"),
                    values: log.steps.iter().map(|r| r.u[i]).collect(),
                })
                .collect(),
        },
        svg::Panel {
            title: "optimal cost".into(),
            series: vec![svg::Series {
                label: "J".into(),
                values: log.steps.iter().map(|r| r.cost).collect(),
            }],
        },
    ];
    let metrics_path = format!("{out_dir}/metrics.svg");
    if let Err(e) = std::fs::write(&metrics_path, svg::render(&metrics_panels)) {
        eprintln!("error: cannot write {metrics_path}: {e}");
        return EXIT_INPUT;
    }

    let metrics = sim::metrics(&log, &design, &problem.program.switch_steps());
    println!("steps                   {}", metrics.steps);
    println!("feasible steps          {}", metrics.feasible_steps);
    println!("max constraint margin   {:.3e}", metrics.max_margin);
    println!("cost-decrease failures  {}", metrics.cost_decrease_violations);
    println!("cost increases at       {:?}", metrics.cost_increase_steps);
    for (i, e) in metrics.segment_final_errors.iter().enumerate() {
        println!("segment {i} final |e|     {e:.3e}");
    }
    println!("outputs written to {out_dir}");
    EXIT_OK
}

fn cmd_moas(config_path: &str, include_nonperiodic: bool, cap_override: Option<usize>) -> i32 {
    let problem = match load_or_exit(config_path) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let report = model::validate(&problem.plant, &problem.exo);
    if !report.passed() {
        eprint!("{report}");
        eprintln!("validation FAILED");
        return EXIT_DOMAIN;
    }
    let plant = &problem.plant;
    let exo = &problem.exo;
    let regulator = match synthesis::solve_regulator(plant, exo) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DOMAIN;
        }
    };
    let parts = model::split(exo);
    let n = plant.n();
    let z = crate::geometry::Polytope::new(plant.z.normals().clone(), plant.z.offsets().to_vec());
    let (m_aug, gmap, label) = if include_nonperiodic || exo.q_n() == 0 {
        (
            Matrix::block_diag(&[&plant.acl(), &exo.s()]),
            synthesis::augmented_output_map(&Matrix::identity(n), &regulator.pi, &plant.k, &regulator.gamma),
            "full augmented system",
        )
    } else {
        let pi_p = regulator.pi.columns(&parts.periodic_cols);
        let ga_p = regulator.gamma.columns(&parts.periodic_cols);
        (
            Matrix::block_diag(&[&plant.acl(), &parts.sp]),
            synthesis::augmented_output_map(&Matrix::identity(n), &pi_p, &plant.k, &ga_p),
            "periodic-part augmented system",
        )
    };
    let has_nonperiodic_dynamics = include_nonperiodic && exo.q_n() > 0;
    let default_cap = if has_nonperiodic_dynamics { 300 } else { (5 * exo.k0).max(100) };
    let cap = cap_override.unwrap_or(default_cap);
    let constraint = crate::geometry::Polytope::new(z.normals().mul(&gmap), z.offsets().to_vec());
    println!("{label}: dimension {}, cap {cap}", m_aug.rows());
    match synthesis::moas(&m_aug, &constraint, cap, exo.k0) {
        Ok(res) => {
            println!("finitely determined: t_0 = {}, {} rows after pruning", res.t0(), res.set.rows());
            let growth = &res.row_counts;
            print!("rows per pass:");
            for (i, r) in growth.iter().enumerate() {
                if i < 10 || i % 10 == 0 || i + 1 == growth.len() {
                    print!(" {r}");
                } else if i == 10 {
                    print!(" ...");
                }
            }
            println!();
            EXIT_OK
        }
        Err(SynthesisError::NotFinitelyDetermined { iterations, rows }) => {
            if has_nonperiodic_dynamics {
                println!(
                    "not finitely determined after {iterations} iterations ({rows} rows): \
                     expected for non-periodic augmented dynamics"
                );
                EXIT_OK
            } else {
                eprintln!("error: not finitely determined after {iterations} iterations ({rows} rows)");
                EXIT_DOMAIN
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_DOMAIN
        }
    }
}

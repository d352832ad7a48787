//! Problem configuration files: a single TOML document with explicit
//! matrix literals (row-major nested lists).
//!
//! Exosystem blocks are given either as numeric discrete-time matrices or as
//! continuous-time generators that are discretized with the configured
//! sampling period through the closed-form 2x2 exponential.

use crate::geometry::Polytope;
use crate::linalg::{expm2, Matrix};
use crate::model::{BlockKind, ExoBlock, ExosystemModel, PlantModel};
use crate::sim::ReferenceProgram;
use crate::synthesis::SynthesisOptions;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub plant: PlantSection,
    pub constraints: ConstraintSection,
    pub exosystem: ExoSection,
    #[serde(default)]
    pub weights: WeightSection,
    pub controller: ControllerSection,
    pub simulation: SimulationSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantSection {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub k: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSection {
    pub state_bounds: Vec<f64>,
    pub input_bounds: Vec<f64>,
    #[serde(default)]
    pub rows: Vec<Vec<f64>>,
    #[serde(default)]
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExoSection {
    pub k0: usize,
    pub qe: Vec<Vec<f64>>,
    #[serde(default)]
    pub sampling_period: Option<f64>,
    #[serde(rename = "block")]
    pub blocks: Vec<BlockSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockSection {
    pub kind: String,
    #[serde(default)]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub generator: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WeightSection {
    #[serde(default)]
    pub q: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub t0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerSection {
    pub horizon: usize,
    #[serde(default)]
    pub moas_cap: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSection {
    pub steps: usize,
    pub x0: Vec<f64>,
    pub r0: Vec<f64>,
    #[serde(default, rename = "switch")]
    pub switches: Vec<SwitchSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwitchSection {
    pub step: usize,
    pub r: Vec<f64>,
}

/// Everything a command needs, already shaped into model types.
pub struct LoadedProblem {
    pub plant: PlantModel,
    pub exo: ExosystemModel,
    pub options: SynthesisOptions,
    pub program: ReferenceProgram,
    pub sim_steps: usize,
    pub x0: Vec<f64>,
}

pub fn load(path: &str) -> Result<LoadedProblem, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.into(),
        source,
    })?;
    let config: ProblemConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.into(),
        message: e.to_string(),
    })?;
    build(&config)
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<Matrix, ConfigError> {
    if rows.is_empty() {
        return Err(ConfigError::Invalid { field: field.into(), message: "matrix is empty".into() });
    }
    let cols = rows[0].len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(ConfigError::Invalid {
                field: field.into(),
                message: format!("row {i} has {} entries, expected {cols}", r.len()),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::Invalid {
                field: field.into(),
                message: format!("row {i} has a non-finite entry"),
            });
        }
    }
    Ok(Matrix::from_rows(rows))
}

pub fn build(config: &ProblemConfig) -> Result<LoadedProblem, ConfigError> {
    let a = matrix("plant.a", &config.plant.a)?;
    let b = matrix("plant.b", &config.plant.b)?;
    let c = matrix("plant.c", &config.plant.c)?;
    let k = matrix("plant.k", &config.plant.k)?;
    let n = a.rows();
    let m = b.cols();
    if a.cols() != n {
        return Err(ConfigError::Invalid { field: "plant.a".into(), message: "must be square".into() });
    }
    if b.rows() != n || c.cols() != n || k.rows() != m || k.cols() != n {
        return Err(ConfigError::Invalid {
            field: "plant".into(),
            message: format!("inconsistent dimensions: A {n}x{n}, B {}x{m}, C {}x{}, K {}x{}", b.rows(), c.rows(), c.cols(), k.rows(), k.cols()),
        });
    }

    if config.constraints.state_bounds.len() != n {
        return Err(ConfigError::Invalid {
            field: "constraints.state_bounds".into(),
            message: format!("expected {n} entries"),
        });
    }
    if config.constraints.input_bounds.len() != m {
        return Err(ConfigError::Invalid {
            field: "constraints.input_bounds".into(),
            message: format!("expected {m} entries"),
        });
    }
    let mut halfwidths = config.constraints.state_bounds.clone();
    halfwidths.extend_from_slice(&config.constraints.input_bounds);
    if halfwidths.iter().any(|v| !(*v > 0.0)) {
        return Err(ConfigError::Invalid {
            field: "constraints".into(),
            message: "bounds must be positive".into(),
        });
    }
    let mut z = Polytope::box_set(&halfwidths);
    if !config.constraints.rows.is_empty() {
        if config.constraints.rows.len() != config.constraints.rhs.len() {
            return Err(ConfigError::Invalid {
                field: "constraints.rows".into(),
                message: "rows and rhs lengths differ".into(),
            });
        }
        let extra = matrix("constraints.rows", &config.constraints.rows)?;
        if extra.cols() != n + m {
            return Err(ConfigError::Invalid {
                field: "constraints.rows".into(),
                message: format!("rows must have {} columns", n + m),
            });
        }
        z = z.intersect(&Polytope::new(extra, config.constraints.rhs.clone()));
    }
    let plant = PlantModel::new(a, b, c, k, z);

    let mut blocks = Vec::new();
    let mut lambdas = Vec::new();
    for (i, blk) in config.exosystem.blocks.iter().enumerate() {
        let field = format!("exosystem.block[{i}]");
        let kind = match blk.kind.as_str() {
            "periodic" => BlockKind::Periodic,
            "nonperiodic" => BlockKind::NonPeriodic,
            other => {
                return Err(ConfigError::Invalid {
                    field: format!("{field}.kind"),
                    message: format!("unknown kind `{other}` (periodic|nonperiodic)"),
                })
            }
        };
        let mat = match (&blk.matrix, &blk.generator) {
            (Some(m), None) => matrix(&format!("{field}.matrix"), m)?,
            (None, Some(g)) => {
                let gen = matrix(&format!("{field}.generator"), g)?;
                if gen.rows() != 2 || gen.cols() != 2 {
                    return Err(ConfigError::Invalid {
                        field: format!("{field}.generator"),
                        message: "generators must be 2x2".into(),
                    });
                }
                let dt = config.exosystem.sampling_period.ok_or_else(|| ConfigError::Invalid {
                    field: "exosystem.sampling_period".into(),
                    message: "required when a block uses `generator`".into(),
                })?;
                expm2(&gen, dt)
            }
            _ => {
                return Err(ConfigError::Invalid {
                    field,
                    message: "exactly one of `matrix` or `generator` must be given".into(),
                })
            }
        };
        let d = mat.rows();
        if d != mat.cols() || (d != 1 && d != 2) {
            return Err(ConfigError::Invalid {
                field: format!("{field}.matrix"),
                message: "blocks must be 1x1 or 2x2".into(),
            });
        }
        if kind == BlockKind::NonPeriodic {
            let lam = blk.lambda.clone().unwrap_or_else(|| vec![1.0, 1.0]);
            if lam.len() != 2 || lam.iter().any(|v| !(*v > 0.0)) {
                return Err(ConfigError::Invalid {
                    field: format!("{field}.lambda"),
                    message: "lambda must be two positive entries".into(),
                });
            }
            lambdas.push([lam[0], lam[1]]);
        } else if blk.lambda.is_some() {
            return Err(ConfigError::Invalid {
                field: format!("{field}.lambda"),
                message: "lambda only applies to nonperiodic blocks".into(),
            });
        }
        blocks.push(ExoBlock::new(kind, mat));
    }
    let q: usize = blocks.iter().map(|b| b.dim()).sum();
    let qe = matrix("exosystem.qe", &config.exosystem.qe)?;
    if qe.cols() != q || qe.rows() != plant.p() {
        return Err(ConfigError::Invalid {
            field: "exosystem.qe".into(),
            message: format!("expected {}x{q}", plant.p()),
        });
    }
    if config.exosystem.k0 == 0 {
        return Err(ConfigError::Invalid { field: "exosystem.k0".into(), message: "must be >= 1".into() });
    }
    let exo = ExosystemModel::new(blocks, qe, config.exosystem.k0);

    let qw = config.weights.q.as_ref().map(|m| matrix("weights.q", m)).transpose()?;
    if let Some(mat) = &qw {
        if mat.rows() != n || mat.cols() != n {
            return Err(ConfigError::Invalid { field: "weights.q".into(), message: format!("expected {n}x{n}") });
        }
    }
    let t0 = config.weights.t0.as_ref().map(|m| matrix("weights.t0", m)).transpose()?;
    if let Some(mat) = &t0 {
        let qp = exo.q_p();
        if mat.rows() != qp || mat.cols() != qp {
            return Err(ConfigError::Invalid { field: "weights.t0".into(), message: format!("expected {qp}x{qp}") });
        }
    }
    if config.controller.horizon == 0 {
        return Err(ConfigError::Invalid { field: "controller.horizon".into(), message: "must be >= 1".into() });
    }
    let options = SynthesisOptions {
        q: qw,
        t0,
        lambda: lambdas,
        horizon: config.controller.horizon,
        moas_cap: config.controller.moas_cap,
    };

    if config.simulation.x0.len() != n {
        return Err(ConfigError::Invalid { field: "simulation.x0".into(), message: format!("expected {n} entries") });
    }
    if config.simulation.r0.len() != q {
        return Err(ConfigError::Invalid { field: "simulation.r0".into(), message: format!("expected {q} entries") });
    }
    let mut last = 0usize;
    let mut switches = Vec::new();
    for (i, sw) in config.simulation.switches.iter().enumerate() {
        if sw.step <= last {
            return Err(ConfigError::Invalid {
                field: format!("simulation.switch[{i}].step"),
                message: "switch steps must be strictly increasing and >= 1".into(),
            });
        }
        if sw.r.len() != q {
            return Err(ConfigError::Invalid {
                field: format!("simulation.switch[{i}].r"),
                message: format!("expected {q} entries"),
            });
        }
        last = sw.step;
        switches.push((sw.step, sw.r.clone()));
    }
    let program = ReferenceProgram::new(config.simulation.r0.clone(), switches);

    Ok(LoadedProblem {
        plant,
        exo,
        options,
        program,
        sim_steps: config.simulation.steps,
        x0: config.simulation.x0.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
[plant]
a = [[0.6, 0.2], [0.0, 0.5]]
b = [[0.0], [1.0]]
c = [[1.0, 0.0]]
k = [[-0.1, -0.3]]

[constraints]
state_bounds = [4.0, 4.0]
input_bounds = [3.0]

[exosystem]
k0 = 12
qe = [[1.0, 0.0]]

[[exosystem.block]]
kind = "periodic"
matrix = [[0.8660254037844387, -0.5], [0.5, 0.8660254037844387]]

[controller]
horizon = 5

[simulation]
steps = 50
x0 = [0.0, 0.0]
r0 = [0.5, 0.0]
"#;

    #[test]
    fn toy_config_parses_and_validates() {
        let config: ProblemConfig = toml::from_str(TOY).unwrap();
        let loaded = build(&config).unwrap();
        assert_eq!(loaded.plant.n(), 2);
        assert_eq!(loaded.exo.q(), 2);
        let report = crate::model::validate(&loaded.plant, &loaded.exo);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn generator_block_goes_through_expm2() {
        let text = TOY.replace(
            "matrix = [[0.8660254037844387, -0.5], [0.5, 0.8660254037844387]]",
            "generator = [[0.0, -0.5235987755982988], [0.5235987755982988, 0.0]]",
        );
        let text = text.replace("k0 = 12", "k0 = 12\nsampling_period = 1.0");
        let config: ProblemConfig = toml::from_str(&text).unwrap();
        let loaded = build(&config).unwrap();
        // rotation by pi/6
        let s = loaded.exo.s();
        assert!((s[(0, 0)] - (std::f64::consts::PI / 6.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported_with_field() {
        let text = TOY.replace("x0 = [0.0, 0.0]", "x0 = [0.0]");
        let config: ProblemConfig = toml::from_str(&text).unwrap();
        match build(&config) {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "simulation.x0"),
            other => panic!("expected Invalid, got {:?}", other.is_ok()),
        }
    }

    #[test]
    fn syntax_error_carries_location() {
        let text = TOY.replace("horizon = 5", "horizon = ");
        let err = toml::from_str::<ProblemConfig>(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");
    }
}

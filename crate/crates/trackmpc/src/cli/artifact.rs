//! Persisted controller designs.
//!
//! The artifact is a TOML document mirroring [`ControllerDesign`] plus
//! synthesis metadata and the SHA-256 of the config file it was built from.
//! Serialization is struct-ordered and floats print in shortest round-trip
//! form, so serialize -> parse -> serialize is byte-identical.

use crate::geometry::Polytope;
use crate::linalg::Matrix;
use crate::model::{BlockKind, ExoBlock, ExosystemModel, PlantModel};
use crate::synthesis::{
    ControllerDesign, CostWeights, RegulatorSolution, SynthesisSummary, TerminalSet, UpsilonValue,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("artifact format version {found} unsupported (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("artifact was built from a different config (hash {artifact} vs {config})")]
    ConfigMismatch { artifact: String, config: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    fn pack(m: &Matrix) -> Mat {
        Mat { rows: m.rows(), cols: m.cols(), data: m.data().to_vec() }
    }

    fn unpack(&self) -> Matrix {
        Matrix::from_vec(self.rows, self.cols, self.data.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignArtifact {
    format_version: u32,
    pub config_sha256: String,
    horizon: usize,
    plant: PlantPart,
    exosystem: ExoPart,
    regulator: RegulatorPart,
    weights: WeightsPart,
    terminal: TerminalPart,
    pub metadata: MetadataPart,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PlantPart {
    a: Mat,
    b: Mat,
    c: Mat,
    k: Mat,
    z_normals: Mat,
    z_offsets: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ExoPart {
    k0: usize,
    qe: Mat,
    blocks: Vec<BlockPart>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BlockPart {
    kind: String,
    matrix: Mat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegulatorPart {
    pi: Mat,
    gamma: Mat,
    l: Mat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct WeightsPart {
    q: Mat,
    p: Mat,
    t: Mat,
    tp: Mat,
    tn: Mat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TerminalPart {
    variant: String,
    normals: Mat,
    offsets: Vec<f64>,
    iterations: usize,
    #[serde(default)]
    tn: Option<Mat>,
    #[serde(default)]
    upsilon: Option<f64>,
}

/// Synthesis provenance: tolerances achieved and set statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetadataPart {
    pub regulator_residual: f64,
    pub output_map_residual: f64,
    pub lyapunov_residual: f64,
    pub t_invariance_residual: f64,
    pub terminal_iterations: usize,
    pub terminal_rows: usize,
    pub upsilon: Option<f64>,
    pub additional_decision_variables: usize,
    pub input_decision_variables: usize,
}

impl DesignArtifact {
    pub fn from_design(design: &ControllerDesign, config_sha256: String) -> Self {
        let (variant, normals, offsets, tn, upsilon, iterations) = match &design.terminal {
            TerminalSet::Periodic { oinf, iterations } => (
                "periodic",
                Mat::pack(oinf.normals()),
                oinf.offsets().to_vec(),
                None,
                None,
                *iterations,
            ),
            TerminalSet::Mixed { op_inf, tn, upsilon, iterations } => (
                "mixed",
                Mat::pack(op_inf.normals()),
                op_inf.offsets().to_vec(),
                Some(Mat::pack(tn)),
                upsilon.finite(),
                *iterations,
            ),
        };
        DesignArtifact {
            format_version: FORMAT_VERSION,
            config_sha256,
            horizon: design.horizon,
            plant: PlantPart {
                a: Mat::pack(&design.plant.a),
                b: Mat::pack(&design.plant.b),
                c: Mat::pack(&design.plant.c),
                k: Mat::pack(&design.plant.k),
                z_normals: Mat::pack(design.plant.z.normals()),
                z_offsets: design.plant.z.offsets().to_vec(),
            },
            exosystem: ExoPart {
                k0: design.exo.k0,
                qe: Mat::pack(&design.exo.qe),
                blocks: design
                    .exo
                    .blocks
                    .iter()
                    .map(|b| BlockPart {
                        kind: match b.kind {
                            BlockKind::Periodic => "periodic".into(),
                            BlockKind::NonPeriodic => "nonperiodic".into(),
                        },
                        matrix: Mat::pack(&b.m),
                    })
                    .collect(),
            },
            regulator: RegulatorPart {
                pi: Mat::pack(&design.regulator.pi),
                gamma: Mat::pack(&design.regulator.gamma),
                l: Mat::pack(&design.regulator.l),
            },
            weights: WeightsPart {
                q: Mat::pack(&design.weights.q),
                p: Mat::pack(&design.weights.p),
                t: Mat::pack(&design.weights.t),
                tp: Mat::pack(&design.weights.tp),
                tn: Mat::pack(&design.weights.tn),
            },
            terminal: TerminalPart {
                variant: variant.into(),
                normals,
                offsets,
                iterations,
                tn,
                upsilon,
            },
            metadata: MetadataPart {
                regulator_residual: design.summary.regulator_residual,
                output_map_residual: design.summary.output_map_residual,
                lyapunov_residual: design.summary.lyapunov_residual,
                t_invariance_residual: design.summary.t_invariance_residual,
                terminal_iterations: design.summary.terminal_iterations,
                terminal_rows: design.summary.terminal_rows,
                upsilon: design.summary.upsilon,
                additional_decision_variables: design.additional_decision_variables(),
                input_decision_variables: design.horizon * design.m(),
            },
        }
    }

    pub fn into_design(self) -> Result<ControllerDesign, ArtifactError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ArtifactError::Version { found: self.format_version });
        }
        let plant = PlantModel::new(
            self.plant.a.unpack(),
            self.plant.b.unpack(),
            self.plant.c.unpack(),
            self.plant.k.unpack(),
            Polytope::from_raw(self.plant.z_normals.unpack(), self.plant.z_offsets.clone()),
        );
        let blocks = self
            .exosystem
            .blocks
            .iter()
            .map(|b| {
                ExoBlock::new(
                    if b.kind == "periodic" { BlockKind::Periodic } else { BlockKind::NonPeriodic },
                    b.matrix.unpack(),
                )
            })
            .collect();
        let exo = ExosystemModel::new(blocks, self.exosystem.qe.unpack(), self.exosystem.k0);
        let parts = crate::model::split(&exo);
        let set = Polytope::from_raw(self.terminal.normals.unpack(), self.terminal.offsets.clone());
        let terminal = if self.terminal.variant == "periodic" {
            TerminalSet::Periodic { oinf: set, iterations: self.terminal.iterations }
        } else {
            TerminalSet::Mixed {
                op_inf: set,
                tn: self.terminal.tn.as_ref().map(|m| m.unpack()).unwrap_or_else(|| Matrix::zeros(0, 0)),
                upsilon: match self.terminal.upsilon {
                    Some(v) => UpsilonValue::Finite(v),
                    None => UpsilonValue::Untightened,
                },
                iterations: self.terminal.iterations,
            }
        };
        Ok(ControllerDesign {
            plant,
            exo,
            parts,
            regulator: RegulatorSolution {
                pi: self.regulator.pi.unpack(),
                gamma: self.regulator.gamma.unpack(),
                l: self.regulator.l.unpack(),
            },
            weights: CostWeights {
                q: self.weights.q.unpack(),
                p: self.weights.p.unpack(),
                t: self.weights.t.unpack(),
                tp: self.weights.tp.unpack(),
                tn: self.weights.tn.unpack(),
            },
            terminal,
            horizon: self.horizon,
            summary: SynthesisSummary {
                regulator_residual: self.metadata.regulator_residual,
                output_map_residual: self.metadata.output_map_residual,
                lyapunov_residual: self.metadata.lyapunov_residual,
                t_invariance_residual: self.metadata.t_invariance_residual,
                terminal_iterations: self.metadata.terminal_iterations,
                terminal_rows: self.metadata.terminal_rows,
                upsilon: self.metadata.upsilon,
            },
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("artifact serialization cannot fail")
    }

    pub fn save(&self, path: &str) -> Result<(), ArtifactError> {
        std::fs::write(path, self.to_toml()).map_err(|source| ArtifactError::Io {
            path: path.into(),
            source,
        })
    }

    pub fn load(path: &str) -> Result<DesignArtifact, ArtifactError> {
        let text = std::fs::read_to_string(path).map_err(|source| ArtifactError::Io {
            path: path.into(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| ArtifactError::Parse {
            path: path.into(),
            message: e.to_string(),
        })
    }

    /// Refuse designs whose config hash disagrees with the given config
    /// bytes.
    pub fn check_config(&self, config_bytes: &[u8]) -> Result<(), ArtifactError> {
        let hash = sha256_hex(config_bytes);
        if hash != self.config_sha256 {
            return Err(ArtifactError::ConfigMismatch {
                artifact: self.config_sha256.clone(),
                config: hash,
            });
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BlockKind, ExoBlock};
    use crate::synthesis::SynthesisOptions;

    fn tiny_design() -> ControllerDesign {
        let a = Matrix::from_rows(&[vec![0.5]]);
        let b = Matrix::identity(1);
        let c = Matrix::identity(1);
        let k = Matrix::from_rows(&[vec![-0.2]]);
        let plant = PlantModel::new(a, b, c, k, Polytope::box_set(&[2.0, 2.0]));
        let exo = ExosystemModel::new(
            vec![ExoBlock::new(BlockKind::Periodic, Matrix::identity(1))],
            Matrix::identity(1),
            1,
        );
        ControllerDesign::synthesize(plant, exo, SynthesisOptions::new(3)).unwrap()
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let design = tiny_design();
        let artifact = DesignArtifact::from_design(&design, sha256_hex(b"config"));
        let text = artifact.to_toml();
        let parsed: DesignArtifact = toml::from_str(&text).unwrap();
        assert_eq!(text, parsed.to_toml());
    }

    #[test]
    fn reconstructed_design_behaves_identically() {
        let design = tiny_design();
        let artifact = DesignArtifact::from_design(&design, sha256_hex(b"config"));
        let text = artifact.to_toml();
        let parsed: DesignArtifact = toml::from_str(&text).unwrap();
        let rebuilt = parsed.into_design().unwrap();
        let mut c1 = crate::mpc::Controller::new(&design);
        let mut c2 = crate::mpc::Controller::new(&rebuilt);
        let r1 = c1.step(&[0.4], &[0.3]).unwrap();
        let r2 = c2.step(&[0.4], &[0.3]).unwrap();
        assert_eq!(r1.u, r2.u);
        assert_eq!(r1.cost.to_bits(), r2.cost.to_bits());
    }

    #[test]
    fn config_hash_mismatch_is_refused() {
        let design = tiny_design();
        let artifact = DesignArtifact::from_design(&design, sha256_hex(b"config"));
        assert!(artifact.check_config(b"config").is_ok());
        assert!(matches!(
            artifact.check_config(b"other"),
            Err(ArtifactError::ConfigMismatch { .. })
        ));
    }
}

//! Run configuration: a JSON file whose fields command-line flags override.
//! Times are in seconds, couplings and amplitudes in Hz, rates in s⁻¹.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::bail;
use num_complex::Complex64;
use opengrape::algebra::{adj_superop, PauliSum};
use opengrape::grape::{ClosedObjective, OpenObjective, OptimizerConfig};
use opengrape::propagation::OpenModel;
use opengrape::relaxation::{RelaxationModel, RelaxationTerm, DEFAULT_CUTS};
use opengrape::systems::{bell_encoding, cnot, lift_logical_gate, system_i, system_ii, ControlSystem, EncodingMap};
use opengrape::CMat;
use serde::{Deserialize, Serialize};

/// A configuration problem; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Named(String),
    Inline { name: String, drift: String, controls: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FileRef {
    Named(String),
    File { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    pub operator: String,
    pub weight: f64,
    #[serde(default)]
    pub label: String,
}

/// Relaxation file: `{"name": …, "n_qubits": …, "terms": [{"operator": "<Pauli sum>", "weight": …}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationFile {
    #[serde(default)]
    pub name: String,
    pub n_qubits: usize,
    pub terms: Vec<TermFile>,
}

/// Target file: `{"matrix": [[[re, im], …], …]}`. A 4×4 matrix on a
/// 4-qubit system is a logical gate on the Bell code; a matrix of the
/// system dimension is a physical gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetFile {
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSpec,
    /// Intra-pair coupling, Hz.
    pub j_xx: f64,
    /// Inter-pair coupling (`J_zz` for System I, `J_xyz` for System II), Hz.
    pub j_inter: f64,
    /// `none`, `pure-t2`, `full`, or `{"file": …}`.
    pub relaxation: FileRef,
    /// `cnot`, `identity`, or `{"file": …}`.
    pub target: FileRef,
    /// Final time, s.
    pub t: f64,
    /// Slot length, s.
    pub dt: f64,
    /// Final times for `top-curve`, s.
    pub t_list: Vec<f64>,
    pub family_size: usize,
    pub optimizer: OptimizerConfig,
    /// Slow/medium and medium/fast cuts of the Γ spectrum, s⁻¹.
    pub cuts: (f64, f64),
    /// Pulse files for `evaluate` and `project-trajectory`.
    pub pulses: Vec<PathBuf>,
    /// Trotter preset name, used unless `plan` is given.
    pub preset: String,
    pub plan: Option<PathBuf>,
    pub ideal_pulses: bool,
    /// Largest expanded pulse file written by `trotter`, in slots.
    pub max_slots: u64,
    /// Restrict `lie-dim` generators to the protected block.
    pub protected: bool,
    pub lie_tolerance: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemSpec::Named("system-II".into()),
            j_xx: opengrape::trotter::PRESET_J_XX,
            j_inter: 1.0,
            relaxation: FileRef::Named("none".into()),
            target: FileRef::Named("cnot".into()),
            t: 10.0,
            dt: 0.05,
            t_list: Vec::new(),
            family_size: 15,
            optimizer: OptimizerConfig::default(),
            cuts: DEFAULT_CUTS,
            pulses: Vec::new(),
            preset: "realistic-cnot".into(),
            plan: None,
            ideal_pulses: false,
            max_slots: 1_000_000,
            protected: false,
            lie_tolerance: 1e-9,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(format!("field `{name}` must be positive, got {v}")))
            }
        };
        positive("t", self.t)?;
        positive("dt", self.dt)?;
        for (i, &t) in self.t_list.iter().enumerate() {
            positive(&format!("t_list[{i}]"), t)?;
        }
        if self.family_size == 0 {
            bail!(config_error("field `family_size` must be at least 1"));
        }
        self.optimizer
            .validate()
            .map_err(|e| config_error(format!("field `optimizer`: {e}")))?;
        Ok(())
    }

    fn bare_system(&self) -> anyhow::Result<ControlSystem> {
        let sys = match &self.system {
            SystemSpec::Named(n) => match n.to_ascii_lowercase().as_str() {
                "system-i" | "i" | "1" => system_i(self.j_xx, self.j_inter)?,
                "system-ii" | "ii" | "2" => system_ii(self.j_xx, self.j_inter)?,
                _ => bail!(config_error(format!("field `system`: unknown system `{n}`"))),
            },
            SystemSpec::Inline { name, drift, controls } => {
                let parse = |s: &str| {
                    s.parse::<PauliSum>()
                        .map_err(|e| config_error(format!("field `system`: `{s}`: {e}")))
                };
                let controls = controls.iter().map(|c| parse(c)).collect::<anyhow::Result<Vec<_>>>()?;
                ControlSystem::from_pauli(name, &parse(drift)?, &controls)
                    .map_err(|e| config_error(format!("field `system`: {e}")))?
            }
        };
        Ok(sys)
    }

    pub fn relaxation_model(&self, n_qubits: usize) -> anyhow::Result<Option<RelaxationModel>> {
        let m = match &self.relaxation {
            FileRef::Named(n) => match n.as_str() {
                "none" => return Ok(None),
                "pure-t2" => RelaxationModel::pure_t2()?,
                "full" => RelaxationModel::full()?,
                _ => bail!(config_error(format!("field `relaxation`: unknown model `{n}`"))),
            },
            FileRef::File { file } => {
                let text = std::fs::read_to_string(file)
                    .map_err(|e| config_error(format!("field `relaxation`: {}: {e}", file.display())))?;
                let f: RelaxationFile = serde_json::from_str(&text)
                    .map_err(|e| config_error(format!("field `relaxation`: {}: {e}", file.display())))?;
                let terms = f
                    .terms
                    .iter()
                    .map(|t| {
                        let op = t
                            .operator
                            .parse::<PauliSum>()
                            .map_err(|e| config_error(format!("field `relaxation`: `{}`: {e}", t.operator)))?;
                        Ok(RelaxationTerm {
                            operator: op.to_operator(),
                            weight: t.weight,
                            label: if t.label.is_empty() { t.operator.clone() } else { t.label.clone() },
                        })
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?;
                let name = if f.name.is_empty() { "file".to_string() } else { f.name };
                RelaxationModel::from_terms(&name, f.n_qubits, terms)
                    .map_err(|e| config_error(format!("field `relaxation`: {e}")))?
            }
        };
        if m.n_qubits != n_qubits {
            bail!(config_error(format!(
                "field `relaxation`: model acts on {} qubits, system on {n_qubits}",
                m.n_qubits
            )));
        }
        Ok(Some(m))
    }

    /// The system with its relaxation model attached, if any.
    pub fn system(&self) -> anyhow::Result<ControlSystem> {
        let sys = self.bare_system()?;
        Ok(match self.relaxation_model(sys.n_qubits)? {
            Some(m) => sys.with_relaxation(Arc::new(m))?,
            None => sys,
        })
    }

    pub fn problem(&self) -> anyhow::Result<Problem> {
        let sys = self.system()?;
        let n = sys.dim();
        let matrix = match &self.target {
            FileRef::Named(name) => match name.as_str() {
                "cnot" => cnot(),
                "identity" => {
                    let d = if sys.n_qubits == 4 { 4 } else { n };
                    CMat::identity(d, d)
                }
                _ => bail!(config_error(format!("field `target`: unknown gate `{name}`"))),
            },
            FileRef::File { file } => {
                let text = std::fs::read_to_string(file)
                    .map_err(|e| config_error(format!("field `target`: {}: {e}", file.display())))?;
                let f: TargetFile = serde_json::from_str(&text)
                    .map_err(|e| config_error(format!("field `target`: {}: {e}", file.display())))?;
                let d = f.matrix.len();
                if d == 0 || f.matrix.iter().any(|r| r.len() != d) {
                    bail!(config_error("field `target`: matrix must be square and nonempty"));
                }
                CMat::from_fn(d, d, |i, j| Complex64::new(f.matrix[i][j][0], f.matrix[i][j][1]))
            }
        };
        let gate = if sys.n_qubits == 4 && matrix.nrows() == 4 {
            Gate::Logical { u: matrix, enc: bell_encoding() }
        } else if matrix.nrows() == n {
            Gate::Physical(matrix)
        } else {
            bail!(config_error(format!(
                "field `target`: a {}×{} gate does not fit a {n}-dimensional system",
                matrix.nrows(),
                matrix.ncols()
            )));
        };
        Ok(Problem { sys, gate })
    }
}

pub enum Gate {
    /// Logical gate on the Bell code space.
    Logical { u: CMat, enc: EncodingMap },
    Physical(CMat),
}

pub struct Problem {
    pub sys: ControlSystem,
    pub gate: Gate,
}

impl Problem {
    pub fn encoding(&self) -> Option<&EncodingMap> {
        match &self.gate {
            Gate::Logical { enc, .. } => Some(enc),
            Gate::Physical(_) => None,
        }
    }

    /// Target map and the basis its fidelity is projected on.
    fn target_map(&self) -> anyhow::Result<(CMat, Option<&CMat>)> {
        Ok(match &self.gate {
            Gate::Logical { u, enc } => (lift_logical_gate(u, enc)?.1, Some(&enc.basis)),
            Gate::Physical(u) => (adj_superop(u)?, None),
        })
    }

    /// Projected fidelity model; relaxation enters only if configured.
    pub fn open_model(&self) -> anyhow::Result<OpenModel> {
        let (ft, range) = self.target_map()?;
        Ok(OpenModel::new(&self.sys, &ft, range)?)
    }

    /// The same model with relaxation switched off.
    pub fn closed_model(&self) -> anyhow::Result<OpenModel> {
        let (ft, range) = self.target_map()?;
        Ok(OpenModel::new(&self.sys.clone().without_relaxation(), &ft, range)?)
    }

    pub fn open_objective(&self) -> anyhow::Result<OpenObjective> {
        if self.sys.relaxation.is_none() {
            bail!(config_error("field `relaxation`: this command needs a relaxation model"));
        }
        Ok(OpenObjective::new(self.open_model()?))
    }

    /// Phase-invariant closed-system objective.
    pub fn closed_objective(&self) -> anyhow::Result<ClosedObjective> {
        Ok(match &self.gate {
            Gate::Logical { u, enc } => ClosedObjective::code_space(&self.sys, u, enc)?,
            Gate::Physical(u) => ClosedObjective::new(&self.sys, u, true)?,
        })
    }

    pub fn classes(&self, cuts: (f64, f64)) -> anyhow::Result<opengrape::relaxation::ModeClassification> {
        let m = self
            .sys
            .relaxation()
            .map_err(|_| config_error("field `relaxation`: this command needs a relaxation model"))?;
        Ok(opengrape::relaxation::classify_modes(m, cuts)?)
    }
}

//! JSON model files.
//!
//! A file holds the network graph, one of three bodies (`quantum`, `classical`
//! or a raw `distribution`) and optional per-source failure probabilities.
//! Complex numbers are `[re, im]` pairs; matrices are lists of rows; source
//! amplitudes are row-major over `(left, right)`.

use std::fs;
use std::path::Path;

use failnet_core::classical::ClassicalNetworkModel;
use failnet_core::failing::{flag_qubit_model, overlay_distribution, FailureProbabilities};
use failnet_core::linalg::{self, CMat};
use failnet_core::{NetworkGraph, Outcome, OutcomeDistribution, PartyPOVM, QuantumNetworkModel, SourceState};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n_parties: usize,
    /// Parties fed by each source.
    pub sources: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub party_labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub dims: [usize; 2],
    pub amplitudes: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmSpec {
    pub labels: Vec<String>,
    pub elements: Vec<Vec<Vec<Complex>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Quantum {
        states: Vec<StateSpec>,
        povms: Vec<PovmSpec>,
    },
    Classical {
        source_dists: Vec<Vec<f64>>,
        responses: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        outputs: Option<Vec<Vec<String>>>,
    },
    Distribution {
        alphabets: Vec<Vec<String>>,
        probabilities: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub graph: GraphSpec,
    #[serde(flatten)]
    pub body: ModelBody,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failures: Option<Vec<f64>>,
}

pub enum Model {
    Quantum(QuantumNetworkModel),
    Classical(ClassicalNetworkModel),
    Distribution(OutcomeDistribution),
}

/// A parsed model file with its graph and failure probabilities resolved.
pub struct Loaded {
    pub graph: NetworkGraph,
    pub model: Model,
    pub failures: Option<FailureProbabilities>,
}

/// Reads and parses `path`, returning the raw bytes alongside for hashing.
///
/// Documents written by this tool are accepted too: the model is taken from
/// `result`, or from `result.model` when the result wraps one.
pub fn load(path: &Path) -> Result<(ModelFile, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let malformed = |reason: String| CliError::Malformed { path: path.to_path_buf(), reason };
    let mut value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| malformed(e.to_string()))?;
    if value.get("header").is_some() {
        value = value.get_mut("result").map(serde_json::Value::take).ok_or_else(|| malformed("document has no result".into()))?;
        if value.get("graph").is_none() {
            if let Some(m) = value.get_mut("model").filter(|m| m.is_object()) {
                value = m.take();
            }
        }
    }
    let file = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    Ok((file, bytes))
}

fn complex(z: &Complex) -> linalg::Complex64 {
    linalg::c(z[0], z[1])
}

fn matrix(path: &str, rows: &[Vec<Complex>]) -> Result<CMat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Malformed { path: path.into(), reason: "POVM element is not square".into() });
    }
    Ok(CMat::from_fn(n, n, |i, j| complex(&rows[i][j])))
}

fn labels(names: &[String]) -> Vec<Outcome> {
    names.iter().map(|s| Outcome::parse(s)).collect()
}

impl GraphSpec {
    pub fn build(&self) -> Result<NetworkGraph> {
        let mut g = NetworkGraph::from_sources(&self.sources, self.n_parties)?;
        g.party_labels = self.party_labels.clone();
        g.source_labels = self.source_labels.clone();
        Ok(g)
    }

    pub fn from_graph(g: &NetworkGraph) -> Self {
        Self {
            n_parties: g.n_parties(),
            sources: g.source_lists(),
            party_labels: g.party_labels.clone(),
            source_labels: g.source_labels.clone(),
        }
    }
}

impl ModelFile {
    pub fn build(&self) -> Result<Loaded> {
        let graph = self.graph.build()?;
        let failures = self.failures.clone().map(FailureProbabilities::new).transpose()?;
        let model = match &self.body {
            ModelBody::Quantum { states, povms } => {
                let states = states
                    .iter()
                    .map(|s| SourceState::new(s.dims[0], s.dims[1], s.amplitudes.iter().map(complex).collect()))
                    .collect::<failnet_core::Result<Vec<_>>>()?;
                let povms = povms
                    .iter()
                    .map(|p| {
                        let elements = p.elements.iter().map(|m| matrix("povm", m)).collect::<Result<Vec<_>>>()?;
                        Ok(PartyPOVM::new(labels(&p.labels), elements)?)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Model::Quantum(QuantumNetworkModel::new(graph.clone(), states, povms)?)
            }
            ModelBody::Classical { source_dists, responses, outputs } => {
                let m = ClassicalNetworkModel::new(graph.clone(), source_dists.clone(), responses.clone())?;
                Model::Classical(match outputs {
                    Some(o) => m.with_outputs(o.iter().map(|a| labels(a)).collect())?,
                    None => m,
                })
            }
            ModelBody::Distribution { alphabets, probabilities } => Model::Distribution(OutcomeDistribution::new(
                alphabets.iter().map(|a| labels(a)).collect(),
                probabilities.clone(),
            )?),
        };
        Ok(Loaded { graph, model, failures })
    }

    pub fn from_distribution(graph: &NetworkGraph, dist: &OutcomeDistribution) -> Self {
        Self {
            graph: GraphSpec::from_graph(graph),
            body: ModelBody::Distribution {
                alphabets: dist.alphabets().iter().map(|a| a.iter().map(ToString::to_string).collect()).collect(),
                probabilities: dist.probabilities().to_vec(),
            },
            failures: None,
        }
    }

    pub fn from_quantum(model: &QuantumNetworkModel) -> Self {
        let states = model
            .states()
            .iter()
            .map(|s| {
                let (dl, dr) = s.dims();
                StateSpec { dims: [dl, dr], amplitudes: s.amplitudes().iter().map(|z| [z.re, z.im]).collect() }
            })
            .collect();
        let povms = model
            .povms()
            .iter()
            .map(|p| PovmSpec {
                labels: p.labels().iter().map(ToString::to_string).collect(),
                elements: p
                    .elements()
                    .iter()
                    .map(|m| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect())
                    .collect(),
            })
            .collect();
        Self { graph: GraphSpec::from_graph(model.graph()), body: ModelBody::Quantum { states, povms }, failures: None }
    }
}

impl Loaded {
    /// Output distribution with every source working.
    pub fn ideal_distribution(&self) -> Result<OutcomeDistribution> {
        Ok(match &self.model {
            Model::Quantum(m) => m.joint_distribution()?,
            Model::Classical(m) => m.joint_distribution()?,
            Model::Distribution(d) => d.clone(),
        })
    }

    /// Observed distribution; sources fail independently when `failures` is set.
    pub fn distribution(&self) -> Result<OutcomeDistribution> {
        let ideal = self.ideal_distribution()?;
        match &self.failures {
            Some(e) => Ok(overlay_distribution(&ideal, &self.graph, e)?),
            None => Ok(ideal),
        }
    }

    /// The quantum model; wrapped in flag qubits when `failures` is set.
    pub fn quantum(&self) -> Result<QuantumNetworkModel> {
        let Model::Quantum(m) = &self.model else {
            return Err(CliError::Usage("this command needs a quantum model".into()));
        };
        match &self.failures {
            Some(e) => Ok(flag_qubit_model(m, e, None)?),
            None => Ok(m.clone()),
        }
    }
}

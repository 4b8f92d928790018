//! Source/party incidence structure of a network.
//!
//! A network has `N` independent sources and `M` parties. Source `i` feeds
//! party `j` when the incidence entry `(i, j)` is set. Sources feeding exactly
//! two parties are graph edges; sources with more parties are hyperedges and
//! are only accepted by the classical routines.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense `n_sources × n_parties` incidence matrix plus optional labels.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkGraph {
    n_sources: usize,
    n_parties: usize,
    incidence: Vec<bool>,
    /// Display names; never used in computation.
    pub party_labels: Vec<String>,
    pub source_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Violation {
    EmptySource { source: usize },
    IsolatedParty { party: usize },
    /// The parties of `redundant` are all fed by `covering` as well.
    RedundantSource { redundant: usize, covering: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub bipartite_sources: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl NetworkGraph {
    /// Builds a graph from the party list of every source.
    pub fn from_sources(sources: &[Vec<usize>], n_parties: usize) -> Result<Self> {
        let mut incidence = alloc::vec![false; sources.len() * n_parties];
        for (i, parties) in sources.iter().enumerate() {
            for &j in parties {
                if j >= n_parties {
                    return Err(Error::PartyOutOfRange { party: j, n_parties });
                }
                incidence[i * n_parties + j] = true;
            }
        }
        Ok(Self {
            n_sources: sources.len(),
            n_parties,
            incidence,
            party_labels: Vec::new(),
            source_labels: Vec::new(),
        })
    }

    pub fn from_incidence(rows: &[Vec<bool>]) -> Result<Self> {
        let n_parties = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_parties) {
            return Err(Error::DimensionMismatch("ragged incidence matrix".into()));
        }
        Ok(Self {
            n_sources: rows.len(),
            n_parties,
            incidence: rows.concat(),
            party_labels: Vec::new(),
            source_labels: Vec::new(),
        })
    }

    /// Three parties pairwise connected: source 0 feeds (1, 2), source 1
    /// feeds (0, 2), source 2 feeds (0, 1).
    pub fn triangle() -> Self {
        Self::from_sources(&[alloc::vec![1, 2], alloc::vec![0, 2], alloc::vec![0, 1]], 3)
            .expect("static triangle")
    }

    pub fn single_edge() -> Self {
        Self::from_sources(&[alloc::vec![0, 1]], 2).expect("static edge")
    }

    /// Ring of `n ≥ 3` parties; source `i` feeds parties `i` and `i + 1 mod n`.
    pub fn cycle(n: usize) -> Self {
        let sources: Vec<Vec<usize>> = (0..n).map(|i| alloc::vec![i, (i + 1) % n]).collect();
        Self::from_sources(&sources, n).expect("cycle indices in range")
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    pub fn connected(&self, source: usize, party: usize) -> bool {
        self.incidence[source * self.n_parties + party]
    }

    /// Parties fed by `source`, ascending.
    pub fn parties_of(&self, source: usize) -> Vec<usize> {
        (0..self.n_parties).filter(|&j| self.connected(source, j)).collect()
    }

    /// Sources feeding `party`, ascending. This is the edge order of the party's systems.
    pub fn sources_of(&self, party: usize) -> Vec<usize> {
        (0..self.n_sources).filter(|&i| self.connected(i, party)).collect()
    }

    pub fn source_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n_sources).map(|i| self.parties_of(i)).collect()
    }

    pub fn is_bipartite_sources(&self) -> bool {
        (0..self.n_sources).all(|i| self.parties_of(i).len() == 2)
    }

    /// The `(left, right)` parties of an edge source, `left < right`.
    pub fn endpoints(&self, source: usize) -> Result<(usize, usize)> {
        let p = self.parties_of(source);
        match p.as_slice() {
            [l, r] => Ok((*l, *r)),
            _ => Err(Error::NotBipartite { src: source, parties: p.len() }),
        }
    }

    pub fn require_bipartite(&self) -> Result<()> {
        for i in 0..self.n_sources {
            self.endpoints(i)?;
        }
        Ok(())
    }

    /// Lists every violated structural assumption.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let sets = self.source_lists();
        for (i, s) in sets.iter().enumerate() {
            if s.is_empty() {
                violations.push(Violation::EmptySource { source: i });
            }
        }
        for j in 0..self.n_parties {
            if self.sources_of(j).is_empty() {
                violations.push(Violation::IsolatedParty { party: j });
            }
        }
        for (i, a) in sets.iter().enumerate() {
            if a.is_empty() {
                continue;
            }
            for (k, b) in sets.iter().enumerate() {
                if i == k {
                    continue;
                }
                let subset = a.iter().all(|x| b.contains(x));
                // identical rows are reported once
                if subset && !(a == b && k > i) {
                    violations.push(Violation::RedundantSource { redundant: i, covering: k });
                    break;
                }
            }
        }
        ValidationReport { violations, bipartite_sources: self.is_bipartite_sources() }
    }
}

/// Maps a Bell scenario with inputs onto a network without inputs.
///
/// Parties `0..k` are the measuring parties and all share source 0. For every
/// measuring party `j` a local-randomness source `1 + j` feeds `j` and a new
/// announcing party `k + j`.
pub fn dress_inputs(n_settings_per_party: &[usize]) -> Result<NetworkGraph> {
    let k = n_settings_per_party.len();
    if let Some(party) = n_settings_per_party.iter().position(|&s| s == 0) {
        return Err(Error::EmptySettings { party });
    }
    let mut sources = Vec::with_capacity(k + 1);
    sources.push((0..k).collect::<Vec<_>>());
    for j in 0..k {
        sources.push(alloc::vec![j, k + j]);
    }
    let mut g = NetworkGraph::from_sources(&sources, 2 * k)?;
    g.party_labels = (0..k)
        .map(|j| format!("A{j}"))
        .chain(n_settings_per_party.iter().enumerate().map(|(j, s)| format!("X{j}[{s}]")))
        .collect();
    g.source_labels = core::iter::once(String::from("S"))
        .chain((0..k).map(|j| format!("RNG{j}")))
        .collect();
    Ok(g)
}

/// Per-party weights with every source's weight sum at most one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FractionalIndependentSet {
    weights: Vec<f64>,
    perfect: bool,
}

const WEIGHT_TOL: f64 = 1e-12;

impl FractionalIndependentSet {
    /// `perfect` is set when every source's weight sum equals one.
    pub fn new(graph: &NetworkGraph, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != graph.n_parties() {
            return Err(Error::InvalidWeights(format!(
                "{} weights for {} parties",
                weights.len(),
                graph.n_parties()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidWeights(format!("weight {w} outside [0, 1]")));
        }
        let mut perfect = true;
        for i in 0..graph.n_sources() {
            let s: f64 = graph.parties_of(i).iter().map(|&j| weights[j]).sum();
            if s > 1.0 + WEIGHT_TOL {
                return Err(Error::InvalidWeights(format!("source {i} has weight sum {s}")));
            }
            perfect &= (s - 1.0).abs() <= WEIGHT_TOL;
        }
        Ok(Self { weights, perfect })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_perfect(&self) -> bool {
        self.perfect
    }
}

/// All weights 1/2; perfect on every graph with bipartite sources.
pub fn half_weights(graph: &NetworkGraph) -> Result<FractionalIndependentSet> {
    graph.require_bipartite()?;
    FractionalIndependentSet::new(graph, alloc::vec![0.5; graph.n_parties()])
}

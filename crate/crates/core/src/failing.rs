//! Independent source failures: the overlay on an ideal distribution and the
//! explicit flag-qubit quantum model that realizes it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::distribution::{for_each_tuple, Outcome, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::network::NetworkGraph;
use crate::quantum::{PartyPOVM, QuantumNetworkModel, SourceState};

pub const MAX_FAILING_SOURCES: usize = 20;

/// Per-source failure probabilities `e^(i)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct FailureProbabilities {
    e: Vec<f64>,
}

impl FailureProbabilities {
    pub fn new(e: Vec<f64>) -> Result<Self> {
        for &x in &e {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::OutOfRange { what: "failure probability", value: x });
            }
        }
        Ok(Self { e })
    }

    pub fn zeros(n: usize) -> Self {
        Self { e: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.e
    }

    /// `∏ (1 − e^(i))`.
    pub fn survival(&self) -> f64 {
        self.e.iter().map(|x| 1.0 - x).product()
    }
}

impl TryFrom<Vec<f64>> for FailureProbabilities {
    type Error = Error;
    fn try_from(e: Vec<f64>) -> Result<Self> {
        Self::new(e)
    }
}

impl From<FailureProbabilities> for Vec<f64> {
    fn from(f: FailureProbabilities) -> Self {
        f.e
    }
}

fn check_sizes(graph: &NetworkGraph, e: &FailureProbabilities) -> Result<()> {
    if e.len() != graph.n_sources() {
        return Err(Error::DimensionMismatch(format!(
            "{} failure probabilities for {} sources",
            e.len(),
            graph.n_sources()
        )));
    }
    if graph.n_sources() > MAX_FAILING_SOURCES {
        return Err(Error::TooManySources { n: graph.n_sources(), cap: MAX_FAILING_SOURCES });
    }
    Ok(())
}

/// Sums over all `2^N` failure patterns. A party outputs `∅` iff one of its
/// sources failed; the others output according to the ideal marginal.
pub fn overlay_distribution(
    ideal: &OutcomeDistribution,
    graph: &NetworkGraph,
    e: &FailureProbabilities,
) -> Result<OutcomeDistribution> {
    check_sizes(graph, e)?;
    let m = graph.n_parties();
    if ideal.n_parties() != m {
        return Err(Error::DimensionMismatch(format!(
            "distribution over {} parties on a graph with {m}",
            ideal.n_parties()
        )));
    }
    if ideal.alphabets().iter().flatten().any(Outcome::is_fail) {
        return Err(Error::InvalidDistribution("ideal distribution already contains ∅".into()));
    }
    let alphabets: Vec<Vec<Outcome>> = ideal
        .alphabets()
        .iter()
        .map(|a| {
            let mut a = a.clone();
            a.push(Outcome::Fail);
            a
        })
        .collect();
    let shape: Vec<usize> = alphabets.iter().map(Vec::len).collect();
    let mut strides = vec![1usize; m];
    for j in (0..m.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * shape[j + 1];
    }
    let mut probs = vec![0.0; shape.iter().product()];
    let party_sources: Vec<Vec<usize>> = (0..m).map(|j| graph.sources_of(j)).collect();
    let mut cache: BTreeMap<Vec<bool>, OutcomeDistribution> = BTreeMap::new();

    let n = graph.n_sources();
    for pattern in 0u32..(1u32 << n) {
        let failed = |i: usize| pattern >> i & 1 == 1;
        let weight: f64 = (0..n)
            .map(|i| if failed(i) { e.as_slice()[i] } else { 1.0 - e.as_slice()[i] })
            .product();
        if weight == 0.0 {
            continue;
        }
        let dead: Vec<bool> = party_sources.iter().map(|s| s.iter().any(|&i| failed(i))).collect();
        let alive: Vec<usize> = (0..m).filter(|&j| !dead[j]).collect();
        let base: usize = (0..m).filter(|&j| dead[j]).map(|j| (shape[j] - 1) * strides[j]).sum();
        if alive.is_empty() {
            probs[base] += weight;
            continue;
        }
        if !cache.contains_key(&dead) {
            cache.insert(dead.clone(), ideal.marginal(&alive)?);
        }
        let marg = &cache[&dead];
        let mut k = 0;
        for_each_tuple(&marg.shape(), |t| {
            let idx = base + t.iter().zip(&alive).map(|(&a, &j)| a * strides[j]).sum::<usize>();
            probs[idx] += weight * marg.probabilities()[k];
            k += 1;
        });
    }
    OutcomeDistribution::new(alphabets, probs)
}

/// Replaces every source by `√(1−e)|11⟩|Ψ⟩ + √e|00⟩|Θ⟩` on flag ⊗ payload and
/// every POVM by `|1…1⟩⟨1…1|_flags ⊗ M^a` plus an `∅` complement.
///
/// `junk` gives the failure-branch payload states `Θ`; `|0…0⟩` when absent.
pub fn flag_qubit_model(
    ideal: &QuantumNetworkModel,
    e: &FailureProbabilities,
    junk: Option<&[SourceState]>,
) -> Result<QuantumNetworkModel> {
    let graph = ideal.graph();
    check_sizes(graph, e)?;
    if ideal.povms().iter().any(PartyPOVM::has_fail) {
        return Err(Error::InvalidDistribution("ideal model already has ∅ outcomes".into()));
    }
    if let Some(j) = junk {
        if j.len() != graph.n_sources() || j.iter().zip(ideal.states()).any(|(a, b)| a.dims() != b.dims()) {
            return Err(Error::DimensionMismatch("junk states must match the payload dimensions".into()));
        }
    }
    let mut states = Vec::with_capacity(graph.n_sources());
    for (i, s) in ideal.states().iter().enumerate() {
        let (dl, dr) = s.dims();
        let theta = match junk {
            Some(j) => j[i].clone(),
            None => SourceState::basis(dl, dr, 0, 0)?,
        };
        let ok = libm::sqrt(1.0 - e.as_slice()[i]);
        let bad = libm::sqrt(e.as_slice()[i]);
        let mut amps = vec![linalg::cr(0.0); 4 * dl * dr];
        let width = 2 * dr;
        for l in 0..dl {
            for r in 0..dr {
                amps[(dl + l) * width + dr + r] = s.amplitude(l, r) * ok;
                amps[l * width + r] = theta.amplitude(l, r) * bad;
            }
        }
        states.push(SourceState::new(2 * dl, 2 * dr, amps)?);
    }
    let mut povms = Vec::with_capacity(graph.n_parties());
    for (j, p) in ideal.povms().iter().enumerate() {
        let payload = ideal.party_dims(j);
        let k = payload.len();
        let mut flag_proj = CMat::zeros(1 << k, 1 << k);
        flag_proj[((1 << k) - 1, (1 << k) - 1)] = linalg::cr(1.0);
        let mut dims = vec![2usize; k];
        dims.extend_from_slice(&payload);
        let perm: Vec<usize> = (0..k).flat_map(|a| [a, k + a]).collect();
        let mut elements: Vec<CMat> = p
            .elements()
            .iter()
            .map(|m| linalg::permute_operator(&linalg::kron(&flag_proj, m), &dims, &perm))
            .collect();
        let n = elements[0].nrows();
        let fail = elements.iter().fold(CMat::identity(n, n), |acc, m| acc - m);
        elements.push(fail);
        let mut labels = p.labels().to_vec();
        labels.push(Outcome::Fail);
        povms.push(crate::quantum::povm_for_party(j, labels, elements)?);
    }
    QuantumNetworkModel::with_cap(graph.clone(), states, povms, ideal.cap())
}

//! Local-variable network models: exact enumeration, the classical Finner
//! inequality over fractional independent sets, and its equality structure
//! for indicator responses.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distribution::{numeric_alphabet, Outcome, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::finner::FinnerReport;
use crate::network::{FractionalIndependentSet, NetworkGraph};

pub const ENUMERATION_CAP: u128 = 10_000_000;
const DIST_TOL: f64 = 1e-12;

/// Independent discrete sources and deterministic party responses.
///
/// `responses[j]` is indexed row-major by the values of the sources feeding
/// party `j`, in ascending source order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalNetworkModel {
    graph: NetworkGraph,
    source_dists: Vec<Vec<f64>>,
    responses: Vec<Vec<f64>>,
    outputs: Option<Vec<Vec<Outcome>>>,
}

impl ClassicalNetworkModel {
    pub fn new(graph: NetworkGraph, source_dists: Vec<Vec<f64>>, responses: Vec<Vec<f64>>) -> Result<Self> {
        if source_dists.len() != graph.n_sources() || responses.len() != graph.n_parties() {
            return Err(Error::DimensionMismatch(format!(
                "{} source distributions / {} response tables for {} sources / {} parties",
                source_dists.len(),
                responses.len(),
                graph.n_sources(),
                graph.n_parties()
            )));
        }
        for (i, d) in source_dists.iter().enumerate() {
            if d.is_empty() || d.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::InvalidDistribution(format!("source {i} has a negative or empty distribution")));
            }
            let s: f64 = d.iter().sum();
            if (s - 1.0).abs() > DIST_TOL {
                return Err(Error::InvalidDistribution(format!("source {i} sums to {s}")));
            }
        }
        let model = Self { graph, source_dists, responses, outputs: None };
        for j in 0..model.graph.n_parties() {
            let want: usize = model.local_alphabets(j).iter().product();
            if model.responses[j].len() != want {
                return Err(Error::DimensionMismatch(format!(
                    "party {j} has {} responses for {want} source-value tuples",
                    model.responses[j].len()
                )));
            }
        }
        Ok(model)
    }

    /// Names the outputs: response value `k` of party `j` means `outputs[j][k]`.
    pub fn with_outputs(mut self, outputs: Vec<Vec<Outcome>>) -> Result<Self> {
        if outputs.len() != self.graph.n_parties() {
            return Err(Error::DimensionMismatch("one output alphabet per party".into()));
        }
        for (j, labels) in outputs.iter().enumerate() {
            for &v in &self.responses[j] {
                let k = integral(j, v)?;
                if k >= labels.len() {
                    return Err(Error::NonIntegralLabel { party: j });
                }
            }
        }
        self.outputs = Some(outputs);
        Ok(self)
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn source_dists(&self) -> &[Vec<f64>] {
        &self.source_dists
    }

    pub fn responses(&self) -> &[Vec<f64>] {
        &self.responses
    }

    pub fn alphabet_sizes(&self) -> Vec<usize> {
        self.source_dists.iter().map(Vec::len).collect()
    }

    fn local_alphabets(&self, party: usize) -> Vec<usize> {
        self.graph.sources_of(party).iter().map(|&i| self.source_dists[i].len()).collect()
    }

    fn combinations(&self) -> Result<u128> {
        let combos: u128 = self.source_dists.iter().map(|d| d.len() as u128).product();
        if combos > ENUMERATION_CAP {
            return Err(Error::EnumerationCap { combos, cap: ENUMERATION_CAP });
        }
        Ok(combos)
    }

    /// Calls `f(values, probability)` for every source assignment of nonzero probability.
    pub fn for_each_assignment(&self, mut f: impl FnMut(&[usize], f64)) -> Result<()> {
        let sizes = self.alphabet_sizes();
        let combos = self.combinations()? as usize;
        let mut values = vec![0usize; sizes.len()];
        for idx in 0..combos {
            crate::linalg::digits(idx, &sizes, &mut values);
            let p: f64 = values.iter().zip(&self.source_dists).map(|(&v, d)| d[v]).product();
            if p > 0.0 {
                f(&values, p);
            }
        }
        Ok(())
    }

    /// Response of party `j` to the global assignment `values`.
    pub fn response(&self, party: usize, values: &[usize]) -> f64 {
        self.responses[party][self.local_index(party, values)]
    }

    fn local_index(&self, party: usize, values: &[usize]) -> usize {
        self.graph
            .sources_of(party)
            .iter()
            .fold(0, |acc, &i| acc * self.source_dists[i].len() + values[i])
    }

    /// Exact output distribution, reading responses as label indices.
    pub fn joint_distribution(&self) -> Result<OutcomeDistribution> {
        let m = self.graph.n_parties();
        let outputs: Vec<Vec<Outcome>> = match &self.outputs {
            Some(o) => o.clone(),
            None => (0..m)
                .map(|j| {
                    let mut top = 0;
                    for &v in &self.responses[j] {
                        top = top.max(integral(j, v)?);
                    }
                    Ok(numeric_alphabet(top + 1))
                })
                .collect::<Result<_>>()?,
        };
        let shape: Vec<usize> = outputs.iter().map(Vec::len).collect();
        let mut probs = vec![0.0; shape.iter().product()];
        let mut err = None;
        self.for_each_assignment(|values, p| {
            let mut idx = 0;
            for j in 0..m {
                match integral(j, self.response(j, values)) {
                    Ok(k) => idx = idx * shape[j] + k,
                    Err(e) => err = Some(e),
                }
            }
            probs[idx] += p;
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        OutcomeDistribution::new(outputs, probs)
    }

    /// Same model with every response replaced by the indicator `response == target`.
    pub fn indicator_of(&self, targets: &[f64]) -> Result<Self> {
        if targets.len() != self.graph.n_parties() {
            return Err(Error::DimensionMismatch("one target per party".into()));
        }
        let responses = self
            .responses
            .iter()
            .zip(targets)
            .map(|(r, &t)| r.iter().map(|&v| if v == t { 1.0 } else { 0.0 }).collect())
            .collect();
        Self::new(self.graph.clone(), self.source_dists.clone(), responses)
    }
}

fn integral(party: usize, v: f64) -> Result<usize> {
    if v >= 0.0 && libm::trunc(v) == v && v < usize::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::NonIntegralLabel { party })
    }
}

fn check_weights(model: &ClassicalNetworkModel, weights: &FractionalIndependentSet) -> Result<()> {
    if weights.weights().len() != model.graph.n_parties() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} parties",
            weights.weights().len(),
            model.graph.n_parties()
        )));
    }
    Ok(())
}

/// Norm `‖f_j‖_{1/x_j}`; the essential supremum when `x_j = 0`.
fn party_norm(model: &ClassicalNetworkModel, party: usize, x: f64) -> f64 {
    let sources = model.graph.sources_of(party);
    let sizes = model.local_alphabets(party);
    let table = &model.responses[party];
    let mut digits = vec![0usize; sizes.len()];
    let mut support = Vec::with_capacity(table.len());
    for (k, &f) in table.iter().enumerate() {
        crate::linalg::digits(k, &sizes, &mut digits);
        let p: f64 = sources.iter().zip(&digits).map(|(&i, &d)| model.source_dists[i][d]).product();
        if p > 0.0 {
            support.push((p, f.abs()));
        }
    }
    let top = support.iter().map(|&(_, f)| f).fold(0.0, f64::max);
    if x == 0.0 || top == 0.0 {
        return top;
    }
    // scaled by the supremum so that small weights cannot overflow
    let acc: f64 = support.iter().map(|&(p, f)| p * libm::pow(f / top, 1.0 / x)).sum();
    top * libm::pow(acc, x)
}

/// `E[∏_j |f_j|]` and `∏_j ‖f_j‖_{1/x_j}` by exact enumeration.
pub fn expect_product(model: &ClassicalNetworkModel, weights: &FractionalIndependentSet) -> Result<(f64, f64)> {
    check_weights(model, weights)?;
    let m = model.graph.n_parties();
    let mut lhs = 0.0;
    model.for_each_assignment(|values, p| {
        let mut prod = p;
        for j in 0..m {
            prod *= model.response(j, values).abs();
            if prod == 0.0 {
                break;
            }
        }
        lhs += prod;
    })?;
    let rhs = (0..m).map(|j| party_norm(model, j, weights.weights()[j])).product();
    Ok((lhs, rhs))
}

/// `P(a⃗) ≤ ∏_j P_j(a_j)^{x_j}` for the target response values.
pub fn finner_probability_check(
    model: &ClassicalNetworkModel,
    targets: &[f64],
    weights: &FractionalIndependentSet,
    tol: f64,
) -> Result<FinnerReport> {
    let ind = model.indicator_of(targets)?;
    let (lhs, rhs) = expect_product(&ind, weights)?;
    let marginals = (0..model.graph.n_parties()).map(|j| party_norm(&ind, j, 1.0)).collect();
    let slack = rhs - lhs;
    Ok(FinnerReport { lhs, rhs, slack, saturated: slack.abs() <= tol, tol, implied_e: Vec::new(), marginals })
}

/// Outcome of the indicator equality-structure search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StructureReport {
    pub factors: bool,
    /// `φ_i(s)` per source and source value; present when `factors`.
    pub phi: Option<Vec<Vec<bool>>>,
    /// Source values and the party whose response breaks the product form.
    pub counterexample: Option<(Vec<usize>, usize)>,
}

/// Tests whether every indicator `f_j` equals `∏_{i→j} φ_i(s_i)` with
/// per-source indicators `φ_i` shared by all parties.
///
/// `φ_i(s) = 1` iff value `s` occurs in some assignment where every party
/// responds 1; the product identity is then verified on the whole support.
pub fn equality_structure_check(
    model: &ClassicalNetworkModel,
    weights: &FractionalIndependentSet,
) -> Result<StructureReport> {
    check_weights(model, weights)?;
    if !weights.is_perfect() {
        return Err(Error::InvalidWeights("equality structure requires perfect weights".into()));
    }
    for (j, r) in model.responses.iter().enumerate() {
        if r.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::NotIndicator { party: j });
        }
    }
    let m = model.graph.n_parties();
    let mut phi: Vec<Vec<bool>> = model.source_dists.iter().map(|d| vec![false; d.len()]).collect();
    model.for_each_assignment(|values, _| {
        if (0..m).all(|j| model.response(j, values) == 1.0) {
            for (i, &v) in values.iter().enumerate() {
                phi[i][v] = true;
            }
        }
    })?;
    let party_sources: Vec<Vec<usize>> = (0..m).map(|j| model.graph.sources_of(j)).collect();
    let mut counterexample = None;
    model.for_each_assignment(|values, _| {
        if counterexample.is_some() {
            return;
        }
        for j in 0..m {
            let product = party_sources[j].iter().all(|&i| phi[i][values[i]]);
            if (model.response(j, values) == 1.0) != product {
                counterexample = Some((values.to_vec(), j));
                return;
            }
        }
    })?;
    Ok(match counterexample {
        None => StructureReport { factors: true, phi: Some(phi), counterexample: None },
        Some(c) => StructureReport { factors: false, phi: None, counterexample: Some(c) },
    })
}

/// Seeded Monte-Carlo estimate of `E[∏_j |f_j|]`, for cross-checks only.
pub fn sample_expect_product(model: &ClassicalNetworkModel, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dists = model
        .source_dists
        .iter()
        .map(|d| WeightedIndex::new(d).map_err(|e| Error::InvalidDistribution(format!("{e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![0usize; dists.len()];
    let mut acc = 0.0;
    for _ in 0..samples {
        for (v, d) in values.iter_mut().zip(&dists) {
            *v = d.sample(&mut rng);
        }
        acc += (0..model.graph.n_parties()).map(|j| model.response(j, &values).abs()).product::<f64>();
    }
    Ok(acc / samples.max(1) as f64)
}

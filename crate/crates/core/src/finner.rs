//! The Finner inequality for networks of bipartite sources, its rigidity
//! structure, and the local-variable model behind its quantum proof.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::distribution::{Outcome, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::fair_sampling::{product_test, ProductTest};
use crate::linalg::{self, CMat};
use crate::network::NetworkGraph;
use crate::quantum::{PartyPOVM, QuantumNetworkModel};

/// Saturation tolerance for analytically constructed models.
pub const SATURATION_TOL: f64 = 1e-9;
/// Saturation tolerance for optimizer-produced models.
pub const OPTIMIZER_TOL: f64 = 1e-6;
/// Tolerance of the individual g-oracle identities.
pub const ORACLE_TOL: f64 = 1e-10;
pub const G_ORACLE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FinnerReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub slack: f64,
    pub saturated: bool,
    pub tol: f64,
    /// Per source, `1 − P_j P_j′ / P_jj′`; `None` when `P_jj′ = 0`.
    pub implied_e: Vec<Option<f64>>,
    /// Per party, the probability of a conclusive outcome.
    pub marginals: Vec<f64>,
}

impl FinnerReport {
    fn build(lhs: f64, rhs: f64, tol: f64, implied_e: Vec<Option<f64>>, marginals: Vec<f64>) -> Self {
        let slack = rhs - lhs;
        Self { lhs, rhs, slack, saturated: slack.abs() <= tol, tol, implied_e, marginals }
    }
}

/// `P[all conclusive] ≤ √∏_j P[a_j conclusive]` on a graph of bipartite sources.
pub fn finner_check(dist: &OutcomeDistribution, graph: &NetworkGraph) -> Result<FinnerReport> {
    finner_check_with_tol(dist, graph, SATURATION_TOL)
}

pub fn finner_check_with_tol(dist: &OutcomeDistribution, graph: &NetworkGraph, tol: f64) -> Result<FinnerReport> {
    graph.require_bipartite()?;
    if dist.n_parties() != graph.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "distribution over {} parties on a graph with {}",
            dist.n_parties(),
            graph.n_parties()
        )));
    }
    let marginals: Vec<f64> = (0..graph.n_parties()).map(|j| dist.conclusive_probability(j)).collect();
    let lhs = dist.all_conclusive_probability();
    let rhs = libm::sqrt(marginals.iter().product::<f64>().max(0.0));
    let implied_e = (0..graph.n_sources())
        .map(|i| {
            let (l, r) = graph.endpoints(i).expect("bipartite");
            let joint = dist.conclusive_probability_of(&[l, r]);
            (joint > 0.0).then(|| 1.0 - marginals[l] * marginals[r] / joint)
        })
        .collect();
    Ok(FinnerReport::build(lhs, rhs, tol, implied_e, marginals))
}

/// Per-party verdicts of the rigidity verifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PartyRigidity {
    pub conclusive_element_is_projector: bool,
    pub commutes_with_marginal: bool,
    pub factorizes_over_edges: bool,
    pub projector_error: f64,
    pub commutator_norm: f64,
    /// Second singular value of the first entangling bipartition, if any.
    pub entangling_singular_value: Option<f64>,
}

/// Per-source verdicts of the rigidity verifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SourceRigidity {
    pub matching_projectors: bool,
    pub implied_e_consistent: bool,
    pub mismatch: f64,
    /// `1 − Σ_ℓ λ_ℓ² χ(ℓ)`.
    pub schmidt_e: f64,
    pub implied_e: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RigidityVerdict {
    pub parties: Vec<PartyRigidity>,
    pub sources: Vec<SourceRigidity>,
    pub finner: FinnerReport,
    pub rigid: bool,
}

/// Checks the structure forced on a model that saturates the Finner inequality.
///
/// All operator checks are made on the support of each party's marginal state.
/// Per party: the conclusive element is a projector, commutes with the
/// marginal state and factorizes over the incoming systems. Per source: the
/// two local projectors coincide in Schmidt coordinates, and the success
/// weight they cut out matches the failure probability implied by the
/// observed distribution.
pub fn rigidity_verify(model: &QuantumNetworkModel, tol: f64) -> Result<RigidityVerdict> {
    let graph = model.graph();
    let dist = model.joint_distribution()?;
    let finner = finner_check_with_tol(&dist, graph, tol)?;
    let mut parties = Vec::with_capacity(graph.n_parties());
    let mut local: Vec<Option<Vec<CMat>>> = Vec::with_capacity(graph.n_parties());
    for j in 0..graph.n_parties() {
        let rho = model.party_marginal_state(j);
        let support = linalg::support_projector(&rho, linalg::EIG_FLOOR);
        let m = &support * model.povms()[j].conclusive_element() * &support;
        let projector_error = linalg::frobenius(&(&m * &m - &m));
        let commutator_norm = linalg::frobenius(&(&rho * &m - &m * &rho));
        let dims = model.party_dims(j);
        let (factorizes, sv, factors) = match product_test(&linalg::hermitian_part(&m), &dims) {
            Ok(ProductTest::Product { factors, .. }) => (true, None, Some(factors)),
            Ok(ProductTest::Entangling { singular_value, .. }) => (false, Some(singular_value), None),
            Err(Error::NotPsd { .. }) => (false, None, None),
            Err(e) => return Err(e),
        };
        parties.push(PartyRigidity {
            conclusive_element_is_projector: projector_error <= tol,
            commutes_with_marginal: commutator_norm <= tol,
            factorizes_over_edges: factorizes,
            projector_error,
            commutator_norm,
            entangling_singular_value: sv,
        });
        local.push(factors);
    }
    let mut sources = Vec::with_capacity(graph.n_sources());
    for i in 0..graph.n_sources() {
        let (l, r) = graph.endpoints(i)?;
        let sch = model.states()[i].schmidt();
        let rank = sch.rank(linalg::EIG_FLOOR);
        let lam2: Vec<f64> = sch.coefficients[..rank].iter().map(|x| x * x).collect();
        let slot = |p: usize| graph.sources_of(p).iter().position(|&k| k == i).expect("connected");
        let (mismatch, schmidt_e) = match (&local[l], &local[r]) {
            (Some(fl), Some(fr)) => {
                let u = sch.left.columns(0, rank).into_owned();
                let v = sch.right.columns(0, rank).into_owned();
                let a = u.adjoint() * &fl[slot(l)] * &u;
                let b = v.adjoint() * &fr[slot(r)] * &v;
                let lam = CMat::from_diagonal(&linalg::CVec::from_iterator(rank, lam2.iter().map(|&x| linalg::cr(x))));
                let equal = linalg::frobenius(&(&a - b.map(|z| z.conj())));
                let commute = linalg::frobenius(&(&a * &lam - &lam * &a));
                let kept: f64 = (0..rank).map(|k| lam2[k] * a[(k, k)].re).sum();
                (equal.max(commute), 1.0 - kept)
            }
            _ => (f64::INFINITY, f64::NAN),
        };
        let implied = finner.implied_e[i];
        let consistent = match implied {
            Some(e) => (e - schmidt_e).abs() <= tol,
            None => (1.0 - schmidt_e).abs() <= tol,
        };
        sources.push(SourceRigidity {
            matching_projectors: mismatch <= tol,
            implied_e_consistent: consistent,
            mismatch,
            schmidt_e,
            implied_e: implied,
        });
    }
    let rigid = parties
        .iter()
        .all(|p| p.conclusive_element_is_projector && p.commutes_with_marginal && p.factorizes_over_edges)
        && sources.iter().all(|s| s.matching_projectors && s.implied_e_consistent);
    Ok(RigidityVerdict { parties, sources, finner, rigid })
}

/// One inequality `lower ≤ upper` of the chain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ChainLink {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub slack: f64,
    pub holds: bool,
    pub tight: bool,
}

impl ChainLink {
    fn new(name: &str, lower: f64, upper: f64) -> Self {
        let slack = upper - lower;
        Self { name: name.into(), lower, upper, slack, holds: slack >= -ORACLE_TOL, tight: slack.abs() <= ORACLE_TOL }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GOracleReport {
    /// Probability that every party obtains a target outcome.
    pub probability: f64,
    /// `E[∏_j g_j]` under independent uniform Schmidt index pairs.
    pub expected_product: f64,
    /// `|Σ ∏ λλ′ ∏ ⟨ℓ|M|ℓ′⟩|`, equal to `probability` up to rounding.
    pub signed_sum: f64,
    pub phase_aligned: bool,
    /// `E[g_j²]` per party.
    pub second_moments: Vec<f64>,
    /// `tr √ρ M √ρ M` per party.
    pub sqrt_traces: Vec<f64>,
    /// `tr ρ M²` per party.
    pub square_traces: Vec<f64>,
    /// `tr ρ M` per party.
    pub traces: Vec<f64>,
    /// `max_j |E[g_j²] − tr √ρ M √ρ M|`.
    pub identity_error: f64,
    pub links: Vec<ChainLink>,
    pub chain_holds: bool,
}

/// Builds the local-variable model `g_j` from the Schmidt decompositions and
/// checks its identities and the inequality chain it induces.
///
/// `targets` lists, per party, the outcomes that count as success; all
/// conclusive outcomes when `None`.
pub fn g_oracle(model: &QuantumNetworkModel, targets: Option<&[Vec<Outcome>]>) -> Result<GOracleReport> {
    let graph = model.graph();
    graph.require_bipartite()?;
    let m_parties = graph.n_parties();
    let ops: Vec<CMat> = (0..m_parties)
        .map(|j| {
            let p = &model.povms()[j];
            match targets {
                Some(t) => p.coarse_element(&t[j]),
                None => p.conclusive_element(),
            }
        })
        .collect();

    // Schmidt data restricted to nonzero coefficients.
    let ranks: Vec<usize> = model.states().iter().map(|s| s.schmidt().rank(linalg::EIG_FLOOR)).collect();
    let combos: u128 = ranks.iter().map(|&d| (d * d) as u128).product();
    if combos > G_ORACLE_CAP {
        return Err(Error::EnumerationCap { combos, cap: G_ORACLE_CAP });
    }
    let lam: Vec<&[f64]> = model
        .states()
        .iter()
        .zip(&ranks)
        .map(|(s, &d)| &s.schmidt().coefficients[..d])
        .collect();

    // Per party: the matrix of M in the product Schmidt basis of its systems.
    let mut elems: Vec<CMat> = Vec::with_capacity(m_parties);
    for (j, op) in ops.iter().enumerate() {
        let bases: Vec<CMat> = graph
            .sources_of(j)
            .iter()
            .map(|&i| {
                let sch = model.states()[i].schmidt();
                if model.is_left_end(i, j) {
                    sch.left.columns(0, ranks[i]).into_owned()
                } else {
                    sch.right.columns(0, ranks[i]).into_owned()
                }
            })
            .collect();
        let w = linalg::kron_all(bases.iter());
        elems.push(w.adjoint() * op * w);
    }

    let party_sources: Vec<Vec<usize>> = (0..m_parties).map(|j| graph.sources_of(j)).collect();
    let n = graph.n_sources();
    // each source index pair (ℓ, ℓ′) is encoded as ℓ * d + ℓ′
    let pair_dims: Vec<usize> = ranks.iter().map(|d| d * d).collect();
    let total = linalg::product(&pair_dims);
    let mut digits = vec![0usize; n];
    let mut expected_product = 0.0;
    let mut signed = Complex64::new(0.0, 0.0);
    for idx in 0..total {
        linalg::digits(idx, &pair_dims, &mut digits);
        let mut weight = 1.0;
        for i in 0..n {
            let (l, lp) = (digits[i] / ranks[i], digits[i] % ranks[i]);
            weight *= lam[i][l] * lam[i][lp];
        }
        let mut term = Complex64::new(1.0, 0.0);
        for j in 0..m_parties {
            let (row, col) = local_index(&party_sources[j], &ranks, &digits);
            term *= elems[j][(row, col)];
            if term.norm() == 0.0 {
                break;
            }
        }
        expected_product += weight * term.norm();
        signed += term * weight;
    }

    let mut second_moments = Vec::with_capacity(m_parties);
    let mut sqrt_traces = Vec::with_capacity(m_parties);
    let mut square_traces = Vec::with_capacity(m_parties);
    let mut traces = Vec::with_capacity(m_parties);
    for j in 0..m_parties {
        // E[g_j²] = Σ_{ℓ,ℓ′} ∏ λ_ℓ λ_ℓ′ |⟨ℓ|M|ℓ′⟩|²
        let local_ranks: Vec<usize> = party_sources[j].iter().map(|&i| ranks[i]).collect();
        let size = linalg::product(&local_ranks);
        let mut lam_prod = vec![1.0; size];
        let mut dig = vec![0usize; local_ranks.len()];
        for (k, lp) in lam_prod.iter_mut().enumerate() {
            linalg::digits(k, &local_ranks, &mut dig);
            for (&i, &d) in party_sources[j].iter().zip(&dig) {
                *lp *= lam[i][d];
            }
        }
        let mut g2 = 0.0;
        for a in 0..size {
            for b in 0..size {
                g2 += lam_prod[a] * lam_prod[b] * elems[j][(a, b)].norm_sqr();
            }
        }
        second_moments.push(g2);
        // independent route through the reduced states
        let rho = model.party_marginal_state(j);
        let sq = linalg::psd_sqrt(&rho);
        let op = &ops[j];
        sqrt_traces.push(linalg::trace_prod(&(&sq * op), &(&sq * op)).re);
        square_traces.push(linalg::trace_prod(&rho, &(op * op)).re);
        traces.push(linalg::trace_prod(&rho, op).re);
    }

    let probability = target_probability(model, &ops)?;
    let identity_error = second_moments
        .iter()
        .zip(&sqrt_traces)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let root = |v: &[f64]| libm::sqrt(v.iter().product::<f64>().max(0.0));
    let links = vec![
        ChainLink::new("probability <= E[prod g]", probability, expected_product),
        ChainLink::new("E[prod g] <= sqrt(prod E[g^2])", expected_product, root(&second_moments)),
        ChainLink::new("sqrt(prod tr sqrt(rho)M sqrt(rho)M) <= sqrt(prod tr rho M^2)", root(&sqrt_traces), root(&square_traces)),
        ChainLink::new("sqrt(prod tr rho M^2) <= sqrt(prod tr rho M)", root(&square_traces), root(&traces)),
    ];
    let chain_holds = links.iter().all(|l| l.holds) && identity_error <= ORACLE_TOL;
    let signed_sum = signed.norm();
    Ok(GOracleReport {
        probability,
        expected_product,
        signed_sum,
        phase_aligned: (expected_product - signed_sum).abs() <= ORACLE_TOL,
        second_moments,
        sqrt_traces,
        square_traces,
        traces,
        identity_error,
        links,
        chain_holds,
    })
}

fn local_index(sources: &[usize], ranks: &[usize], digits: &[usize]) -> (usize, usize) {
    let mut row = 0;
    let mut col = 0;
    for &i in sources {
        row = row * ranks[i] + digits[i] / ranks[i];
        col = col * ranks[i] + digits[i] % ranks[i];
    }
    (row, col)
}

/// `⟨Ψ| ⊗_j M_j |Ψ⟩` by contracting the binary coarse-grained measurement.
fn target_probability(model: &QuantumNetworkModel, ops: &[CMat]) -> Result<f64> {
    let yes = Outcome::label("yes");
    let povms = ops
        .iter()
        .map(|m| {
            let n = m.nrows();
            PartyPOVM::from_parts_unchecked(
                vec![yes.clone(), Outcome::label("no")],
                vec![m.clone(), CMat::identity(n, n) - m],
            )
        })
        .collect();
    let binary = model.with_povms(povms)?;
    Ok(binary.joint_distribution()?.probabilities()[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::failing::{flag_qubit_model, overlay_distribution, FailureProbabilities};
    use crate::distribution::numeric_alphabet;
    use crate::quantum::SourceState;

    fn bell_ideal() -> QuantumNetworkModel {
        QuantumNetworkModel::new(
            NetworkGraph::single_edge(),
            vec![SourceState::phi_plus()],
            vec![PartyPOVM::computational(2), PartyPOVM::computational(2)],
        )
        .unwrap()
    }

    #[test]
    fn overlay_triangle_is_saturated() {
        let g = NetworkGraph::triangle();
        let ideal = OutcomeDistribution::new(vec![numeric_alphabet(2); 3], vec![0.125; 8]).unwrap();
        let e = FailureProbabilities::new(vec![0.1, 0.2, 0.3]).unwrap();
        let d = overlay_distribution(&ideal, &g, &e).unwrap();
        let r = finner_check(&d, &g).unwrap();
        assert!(r.saturated);
        for (got, want) in r.implied_e.iter().zip([0.1, 0.2, 0.3]) {
            assert!((got.unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_parties_are_not_saturated() {
        let a = vec![Outcome::label("1"), Outcome::Fail];
        let d = OutcomeDistribution::product(vec![a.clone(), a], &[vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let r = finner_check(&d, &NetworkGraph::single_edge()).unwrap();
        assert!((r.lhs - 0.09).abs() < 1e-15);
        assert!((r.rhs - 0.3).abs() < 1e-15);
        assert!(!r.saturated);
    }

    #[test]
    fn all_conclusive_distribution() {
        let d = bell_ideal().joint_distribution().unwrap();
        let r = finner_check(&d, &NetworkGraph::single_edge()).unwrap();
        assert!(r.saturated && (r.lhs - 1.0).abs() < 1e-12);
        assert!(r.implied_e[0].unwrap().abs() < 1e-12);
    }

    #[test]
    fn ideal_model_is_rigid() {
        let v = rigidity_verify(&bell_ideal(), SATURATION_TOL).unwrap();
        assert!(v.rigid, "{v:?}");
    }

    #[test]
    fn flag_model_is_rigid_and_tight() {
        let e = FailureProbabilities::new(vec![0.27]).unwrap();
        let f = flag_qubit_model(&bell_ideal(), &e, None).unwrap();
        let v = rigidity_verify(&f, SATURATION_TOL).unwrap();
        assert!(v.rigid, "{v:?}");
        assert!((v.sources[0].schmidt_e - 0.27).abs() < 1e-12);
        let g = g_oracle(&f, None).unwrap();
        assert!(g.chain_holds);
        assert!(g.links.iter().all(|l| l.tight), "{:?}", g.links);
    }

    #[test]
    fn bell_projector_party_is_not_rigid() {
        // chain 0 - 1 - 2 where the middle party tests for |Φ+⟩ across its systems
        let g = NetworkGraph::from_sources(&[vec![0, 1], vec![1, 2]], 3).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let phi = crate::linalg::CVec::from_vec(vec![linalg::cr(h), linalg::cr(0.0), linalg::cr(0.0), linalg::cr(h)]);
        let bell = linalg::outer(&phi);
        let mid = PartyPOVM::new(
            vec![Outcome::label("1"), Outcome::Fail],
            vec![bell.clone(), CMat::identity(4, 4) - bell],
        )
        .unwrap();
        let m = QuantumNetworkModel::new(
            g,
            vec![SourceState::phi_plus(), SourceState::phi_plus()],
            vec![PartyPOVM::computational(2), mid, PartyPOVM::computational(2)],
        )
        .unwrap();
        let v = rigidity_verify(&m, SATURATION_TOL).unwrap();
        assert!(!v.parties[1].factorizes_over_edges);
        assert!(!v.rigid);
    }

    #[test]
    fn product_sources_collapse_the_chain() {
        let s = SourceState::basis(2, 2, 0, 1).unwrap();
        let t = CMat::from_row_slice(2, 2, &[linalg::cr(0.6), linalg::cr(0.2), linalg::cr(0.2), linalg::cr(0.5)]);
        let povm = PartyPOVM::new(vec![Outcome::label("1"), Outcome::Fail], vec![t.clone(), CMat::identity(2, 2) - t]).unwrap();
        let m = QuantumNetworkModel::new(NetworkGraph::single_edge(), vec![s], vec![povm.clone(), povm]).unwrap();
        let g = g_oracle(&m, None).unwrap();
        assert!(g.chain_holds);
        // g_j is deterministic, so E[∏g] = ∏ E[g] = √∏ E[g²]
        assert!(g.links[0].tight && g.links[1].tight);
        assert!((g.probability - 0.6 * 0.5).abs() < 1e-12);
        assert!((g.second_moments[0] - 0.36).abs() < 1e-12);
        assert!((g.second_moments[1] - 0.25).abs() < 1e-12);
    }
}

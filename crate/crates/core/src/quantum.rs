//! Finite-dimensional quantum models on networks with bipartite sources.
//!
//! Every source `i` prepares a pure state on `left ⊗ right`, where `left`
//! goes to the lower-indexed of its two parties. Mixed states are handled by
//! purifying into one of the local factors. A party's POVM acts on the tensor
//! product of its incoming systems ordered by ascending source index.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::distribution::{Outcome, OutcomeDistribution};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::network::NetworkGraph;

pub const DEFAULT_DIMENSION_CAP: usize = 4096;
/// Hermiticity, positivity and completeness tolerance for POVMs.
pub const POVM_TOL: f64 = 1e-10;
const RENORMALIZE_TOL: f64 = 1e-6;
const TIE_TOL: f64 = 1e-12;

/// Schmidt form `Σ_ℓ λ_ℓ |u_ℓ⟩|v_ℓ⟩` with `λ` descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Schmidt {
    pub coefficients: Vec<f64>,
    /// Columns are the left vectors `u_ℓ`.
    pub left: CMat,
    /// Columns are the right vectors `v_ℓ`.
    pub right: CMat,
}

impl Schmidt {
    /// Number of coefficients with `λ² > cutoff`.
    pub fn rank(&self, cutoff: f64) -> usize {
        self.coefficients.iter().filter(|l| **l * **l > cutoff).count()
    }

    pub fn reconstruct(&self) -> CMat {
        let mut a = CMat::zeros(self.left.nrows(), self.right.nrows());
        for (k, &l) in self.coefficients.iter().enumerate() {
            a += (self.left.column(k) * self.right.column(k).transpose()).scale(l);
        }
        a
    }
}

/// Normalized pure state of a bipartite source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    dims: (usize, usize),
    amplitudes: Vec<Complex64>,
    schmidt: Schmidt,
}

impl SourceState {
    /// Amplitudes are row-major: index `l * d_right + r`. States within 1e-6 of
    /// unit norm are renormalized, others rejected.
    pub fn new(d_left: usize, d_right: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if d_left == 0 || d_right == 0 || amplitudes.len() != d_left * d_right {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for dimensions {d_left}x{d_right}",
                amplitudes.len()
            )));
        }
        let norm = libm::sqrt(amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>());
        if !norm.is_finite() || (norm - 1.0).abs() > RENORMALIZE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        let schmidt = schmidt_of(d_left, d_right, &amplitudes);
        Ok(Self { dims: (d_left, d_right), amplitudes, schmidt })
    }

    pub fn from_real(d_left: usize, d_right: usize, amplitudes: &[f64]) -> Result<Self> {
        Self::new(d_left, d_right, amplitudes.iter().map(|&x| linalg::cr(x)).collect())
    }

    /// Product basis state `|l⟩|r⟩`.
    pub fn basis(d_left: usize, d_right: usize, l: usize, r: usize) -> Result<Self> {
        let mut a = alloc::vec![linalg::cr(0.0); d_left * d_right];
        if l >= d_left || r >= d_right {
            return Err(Error::InvalidState("basis index out of range".into()));
        }
        a[l * d_right + r] = linalg::cr(1.0);
        Self::new(d_left, d_right, a)
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn phi_plus() -> Self {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        Self::from_real(2, 2, &[s, 0.0, 0.0, s]).expect("normalized")
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, l: usize, r: usize) -> Complex64 {
        self.amplitudes[l * self.dims.1 + r]
    }

    pub fn matrix(&self) -> CMat {
        CMat::from_row_slice(self.dims.0, self.dims.1, &self.amplitudes)
    }

    pub fn schmidt(&self) -> &Schmidt {
        &self.schmidt
    }

    /// Reduced state of the left factor.
    pub fn reduced_left(&self) -> CMat {
        let a = self.matrix();
        &a * a.adjoint()
    }

    /// Reduced state of the right factor.
    pub fn reduced_right(&self) -> CMat {
        let a = self.matrix();
        (a.adjoint() * &a).transpose()
    }

    /// Applies `a ⊗ b` and returns the (unnormalized) amplitude matrix.
    pub fn apply_local(&self, a: &CMat, b: &CMat) -> CMat {
        a * self.matrix() * b.transpose()
    }
}

/// Schmidt decomposition via SVD of the amplitude matrix.
pub fn schmidt_decompose(state: &SourceState) -> Schmidt {
    state.schmidt.clone()
}

fn schmidt_of(dl: usize, dr: usize, amps: &[Complex64]) -> Schmidt {
    let a = CMat::from_row_slice(dl, dr, amps);
    let svd = linalg::svd(&a);
    let (u, v_t) = (&svd.u, &svd.v_t);
    let r = svd.singular_values.len();
    let mut terms: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = (0..r)
        .map(|k| {
            let mut left: Vec<Complex64> = u.column(k).iter().copied().collect();
            // A = U S V†, so the right vector is the k-th row of V†.
            let mut right: Vec<Complex64> = v_t.row(k).iter().copied().collect();
            // phase convention: first significant left component real positive
            if let Some(z) = left.iter().copied().find(|z| z.norm() > 1e-9) {
                let ph = z / z.norm();
                left.iter_mut().for_each(|x| *x /= ph);
                right.iter_mut().for_each(|x| *x *= ph);
            }
            (svd.singular_values[k], left, right)
        })
        .collect();
    terms.sort_by(|x, y| {
        if (x.0 - y.0).abs() > TIE_TOL {
            return y.0.total_cmp(&x.0);
        }
        lexicographic(&x.1, &y.1)
    });
    let mut left = CMat::zeros(dl, r);
    let mut right = CMat::zeros(dr, r);
    let mut coefficients = Vec::with_capacity(r);
    for (k, (s, l, rv)) in terms.into_iter().enumerate() {
        coefficients.push(s);
        for (i, z) in l.into_iter().enumerate() {
            left[(i, k)] = z;
        }
        for (i, z) in rv.into_iter().enumerate() {
            right[(i, k)] = z;
        }
    }
    Schmidt { coefficients, left, right }
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> core::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = y.norm().total_cmp(&x.norm());
        if (x.norm() - y.norm()).abs() > TIE_TOL {
            return o;
        }
    }
    core::cmp::Ordering::Equal
}

/// POVM of one party over its incoming systems.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyPOVM {
    labels: Vec<Outcome>,
    elements: Vec<CMat>,
}

impl PartyPOVM {
    /// Checks Hermiticity, positivity and completeness within 1e-10.
    pub fn new(labels: Vec<Outcome>, elements: Vec<CMat>) -> Result<Self> {
        let bad = |reason: String| Error::InvalidPovm { party: usize::MAX, reason };
        if labels.is_empty() || labels.len() != elements.len() {
            return Err(bad(format!("{} labels, {} elements", labels.len(), elements.len())));
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(bad(format!("duplicate label {l}")));
            }
        }
        let n = elements[0].nrows();
        let mut sum = CMat::zeros(n, n);
        for (l, e) in labels.iter().zip(&elements) {
            if e.nrows() != n || e.ncols() != n {
                return Err(bad("elements of different sizes".into()));
            }
            if linalg::hermiticity_error(e) > POVM_TOL {
                return Err(bad(format!("element {l} is not Hermitian")));
            }
            let m = linalg::min_eigenvalue(e);
            if m < -POVM_TOL {
                return Err(bad(format!("element {l} has eigenvalue {m}")));
            }
            sum += e;
        }
        let dev = linalg::frobenius(&(sum - CMat::identity(n, n)));
        if dev > POVM_TOL {
            return Err(bad(format!("elements sum to identity only within {dev}")));
        }
        Ok(Self { labels, elements })
    }

    /// Projective measurement onto the computational basis of dimension `d`.
    pub fn computational(d: usize) -> Self {
        let elements = (0..d)
            .map(|k| {
                let mut m = CMat::zeros(d, d);
                m[(k, k)] = linalg::cr(1.0);
                m
            })
            .collect();
        Self { labels: crate::distribution::numeric_alphabet(d), elements }
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn labels(&self) -> &[Outcome] {
        &self.labels
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn element(&self, label: &Outcome) -> Option<&CMat> {
        self.labels.iter().position(|l| l == label).map(|k| &self.elements[k])
    }

    pub fn has_fail(&self) -> bool {
        self.labels.iter().any(Outcome::is_fail)
    }

    /// `M^✓`: the sum of all conclusive elements.
    pub fn conclusive_element(&self) -> CMat {
        let n = self.dim();
        self.labels
            .iter()
            .zip(&self.elements)
            .filter(|(l, _)| !l.is_fail())
            .fold(CMat::zeros(n, n), |acc, (_, e)| acc + e)
    }

    /// Sum of the elements whose labels are in `targets`.
    pub fn coarse_element(&self, targets: &[Outcome]) -> CMat {
        let n = self.dim();
        self.labels
            .iter()
            .zip(&self.elements)
            .filter(|(l, _)| targets.contains(l))
            .fold(CMat::zeros(n, n), |acc, (_, e)| acc + e)
    }

    /// Conjugates every element: `E ↦ U E U†`.
    pub fn conjugated(&self, u: &CMat) -> Self {
        Self {
            labels: self.labels.clone(),
            elements: self.elements.iter().map(|e| u * e * u.adjoint()).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(labels: Vec<Outcome>, elements: Vec<CMat>) -> Self {
        Self { labels, elements }
    }
}

/// Source states plus party POVMs on a graph with bipartite sources.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumNetworkModel {
    graph: NetworkGraph,
    states: Vec<SourceState>,
    povms: Vec<PartyPOVM>,
    cap: usize,
}

impl QuantumNetworkModel {
    pub fn new(graph: NetworkGraph, states: Vec<SourceState>, povms: Vec<PartyPOVM>) -> Result<Self> {
        Self::with_cap(graph, states, povms, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(
        graph: NetworkGraph,
        states: Vec<SourceState>,
        povms: Vec<PartyPOVM>,
        cap: usize,
    ) -> Result<Self> {
        graph.require_bipartite()?;
        if states.len() != graph.n_sources() || povms.len() != graph.n_parties() {
            return Err(Error::DimensionMismatch(format!(
                "{} states / {} POVMs for {} sources / {} parties",
                states.len(),
                povms.len(),
                graph.n_sources(),
                graph.n_parties()
            )));
        }
        let model = Self { graph, states, povms, cap };
        for j in 0..model.graph.n_parties() {
            let expect = linalg::product(&model.party_dims(j));
            if model.povms[j].dim() != expect {
                return Err(Error::DimensionMismatch(format!(
                    "party {j} POVM has dimension {}, its systems span {expect}",
                    model.povms[j].dim()
                )));
            }
        }
        let dim = model.global_dim();
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(model)
    }

    pub fn graph(&self) -> &NetworkGraph {
        &self.graph
    }

    pub fn states(&self) -> &[SourceState] {
        &self.states
    }

    pub fn povms(&self) -> &[PartyPOVM] {
        &self.povms
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Dimension of the system source `i` sends to `party`.
    pub fn edge_dim(&self, source: usize, party: usize) -> usize {
        let (l, _) = self.graph.endpoints(source).expect("bipartite model");
        let (dl, dr) = self.states[source].dims();
        if party == l { dl } else { dr }
    }

    /// Dimensions of the party's incoming systems, ascending source order.
    pub fn party_dims(&self, party: usize) -> Vec<usize> {
        self.graph.sources_of(party).iter().map(|&i| self.edge_dim(i, party)).collect()
    }

    pub fn global_dim(&self) -> usize {
        self.states.iter().map(|s| s.dims().0 * s.dims().1).product()
    }

    /// Whether `party` is the lower-indexed end of `source`.
    pub fn is_left_end(&self, source: usize, party: usize) -> bool {
        self.graph.endpoints(source).map(|(l, _)| l == party).unwrap_or(false)
    }

    /// Product of all source states in party-major order.
    pub fn global_state(&self) -> Vec<Complex64> {
        // (source, is_left) for every axis in party-major order
        let mut axes: Vec<(usize, bool)> = Vec::new();
        for j in 0..self.graph.n_parties() {
            for i in self.graph.sources_of(j) {
                axes.push((i, self.is_left_end(i, j)));
            }
        }
        let dims: Vec<usize> = axes
            .iter()
            .map(|&(i, left)| if left { self.states[i].dims().0 } else { self.states[i].dims().1 })
            .collect();
        let n = linalg::product(&dims);
        let mut dig = alloc::vec![0usize; dims.len()];
        let mut idx_l = alloc::vec![0usize; self.states.len()];
        let mut idx_r = alloc::vec![0usize; self.states.len()];
        (0..n)
            .map(|k| {
                linalg::digits(k, &dims, &mut dig);
                for (&(i, left), &d) in axes.iter().zip(&dig) {
                    if left { idx_l[i] = d } else { idx_r[i] = d }
                }
                self.states
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s.amplitude(idx_l[i], idx_r[i]))
                    .product()
            })
            .collect()
    }

    /// Exact `P(a⃗) = ⟨Ψ| ⊗_j M_j^{a_j} |Ψ⟩` for every outcome tuple.
    pub fn joint_distribution(&self) -> Result<OutcomeDistribution> {
        let psi = self.global_state();
        let block: Vec<usize> =
            (0..self.graph.n_parties()).map(|j| self.povms[j].dim()).collect();
        let mut probs = Vec::new();
        self.contract(&psi, &psi, &block, 0, &mut probs);
        let alphabets = self.povms.iter().map(|p| p.labels.clone()).collect();
        OutcomeDistribution::new(alphabets, probs)
    }

    fn contract(
        &self,
        psi: &[Complex64],
        phi: &[Complex64],
        block: &[usize],
        party: usize,
        out: &mut Vec<f64>,
    ) {
        if party == block.len() {
            let p: Complex64 = psi.iter().zip(phi).map(|(a, b)| a.conj() * b).sum();
            out.push(p.re);
            return;
        }
        let pre = linalg::product(&block[..party]);
        let post = linalg::product(&block[party + 1..]);
        for e in &self.povms[party].elements {
            let next = linalg::apply_block(e, phi, pre, block[party], post);
            self.contract(psi, &next, block, party + 1, out);
        }
    }

    /// Marginal state of the party's systems, `⊗_edges ρ`.
    pub fn party_marginal_state(&self, party: usize) -> CMat {
        let factors: Vec<CMat> = self
            .graph
            .sources_of(party)
            .iter()
            .map(|&i| {
                if self.is_left_end(i, party) {
                    self.states[i].reduced_left()
                } else {
                    self.states[i].reduced_right()
                }
            })
            .collect();
        linalg::kron_all(factors.iter())
    }

    pub fn with_states(&self, states: Vec<SourceState>) -> Result<Self> {
        Self::with_cap(self.graph.clone(), states, self.povms.clone(), self.cap)
    }

    pub fn with_povms(&self, povms: Vec<PartyPOVM>) -> Result<Self> {
        Self::with_cap(self.graph.clone(), self.states.clone(), povms, self.cap)
    }

}

/// Tags POVM construction errors with the party index.
pub fn povm_for_party(party: usize, labels: Vec<Outcome>, elements: Vec<CMat>) -> Result<PartyPOVM> {
    PartyPOVM::new(labels, elements).map_err(|e| match e {
        Error::InvalidPovm { reason, .. } => Error::InvalidPovm { party, reason },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn bell_model() -> QuantumNetworkModel {
        QuantumNetworkModel::new(
            NetworkGraph::single_edge(),
            vec![SourceState::phi_plus()],
            vec![PartyPOVM::computational(2), PartyPOVM::computational(2)],
        )
        .unwrap()
    }

    #[test]
    fn phi_plus_gives_perfect_correlations() {
        let d = bell_model().joint_distribution().unwrap();
        let p = d.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-14);
        assert!(p[1].abs() < 1e-14);
        assert!(p[2].abs() < 1e-14);
        assert!((p[3] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_element_gives_zero_probability() {
        let z = CMat::zeros(2, 2);
        let povm = PartyPOVM::new(
            vec![Outcome::label("0"), Outcome::label("1"), Outcome::label("never")],
            vec![PartyPOVM::computational(2).elements()[0].clone(), PartyPOVM::computational(2).elements()[1].clone(), z],
        )
        .unwrap();
        let m = QuantumNetworkModel::new(
            NetworkGraph::single_edge(),
            vec![SourceState::phi_plus()],
            vec![povm, PartyPOVM::computational(2)],
        )
        .unwrap();
        let d = m.joint_distribution().unwrap();
        assert_eq!(d.prob_of(&["never", "0"]), Some(0.0));
        assert_eq!(d.prob_of(&["never", "1"]), Some(0.0));
    }

    #[test]
    fn schmidt_of_product_state() {
        let s = SourceState::basis(2, 2, 0, 0).unwrap();
        let sch = s.schmidt();
        assert!((sch.coefficients[0] - 1.0).abs() < 1e-14);
        assert!(sch.coefficients[1].abs() < 1e-14);
        assert_eq!(sch.rank(1e-12), 1);
    }

    #[test]
    fn schmidt_of_phi_plus() {
        let sch = SourceState::phi_plus().schmidt().clone();
        for l in &sch.coefficients {
            assert!((l - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
        }
        let a = SourceState::phi_plus().matrix();
        assert!(linalg::frobenius(&(sch.reconstruct() - a)) < 1e-12);
    }

    #[test]
    fn schmidt_of_flagged_state() {
        // √0.64 |1,0⟩|1,0⟩ + √0.36 |0,1⟩|0,1⟩ on (flag ⊗ payload) factors
        let mut amps = vec![0.0; 16];
        amps[2 * 4 + 2] = 0.8;
        amps[4 + 1] = 0.6;
        let s = SourceState::from_real(4, 4, &amps).unwrap();
        let c = &s.schmidt().coefficients;
        assert!((c[0] - 0.8).abs() < 1e-12);
        assert!((c[1] - 0.6).abs() < 1e-12);
        assert!(linalg::frobenius(&(s.schmidt().reconstruct() - s.matrix())) < 1e-10);
    }

    #[test]
    fn states_far_from_normalized_are_rejected() {
        assert!(SourceState::from_real(1, 2, &[1.0, 1.0]).is_err());
        let s = SourceState::from_real(1, 2, &[1.0 + 1e-8, 0.0]).unwrap();
        assert_eq!(s.amplitudes()[0].re, 1.0);
    }

    #[test]
    fn povm_completeness_is_checked() {
        let mut e = PartyPOVM::computational(2).elements().to_vec();
        e[0] = e[0].scale(0.5);
        assert!(PartyPOVM::new(crate::distribution::numeric_alphabet(2), e).is_err());
    }

    #[test]
    fn dimension_mismatch_and_cap() {
        let r = QuantumNetworkModel::new(
            NetworkGraph::single_edge(),
            vec![SourceState::phi_plus()],
            vec![PartyPOVM::computational(3), PartyPOVM::computational(2)],
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let r = QuantumNetworkModel::with_cap(
            NetworkGraph::single_edge(),
            vec![SourceState::phi_plus()],
            vec![PartyPOVM::computational(2), PartyPOVM::computational(2)],
            3,
        );
        assert_eq!(r, Err(Error::DimensionCap { dim: 4, cap: 3 }));
    }
}

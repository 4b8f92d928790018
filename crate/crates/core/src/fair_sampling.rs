//! Fair-sampling detection and harmless post-selection.
//!
//! A party samples fairly when its conclusive element is a tensor product of
//! local filters, one per incoming system. Such filters can be moved onto the
//! sources, which turns conditioning on conclusive outcomes into an ordinary
//! network model without failures.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::distribution::Outcome;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::quantum::{self, PartyPOVM, QuantumNetworkModel, SourceState};

/// Relative size of the second singular value above which a bipartition is
/// considered entangling.
pub const PRODUCT_REL_TOL: f64 = 1e-9;
const PSD_TOL: f64 = 1e-10;
const BLOCKED_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ProductTest {
    /// `op = ⊗ factors`. Every factor has operator norm 1 except the first,
    /// which also carries the scalar `residue`.
    Product { factors: Vec<CMat>, residue: f64 },
    /// System `bipartition` versus all later systems has operator-Schmidt rank > 1.
    Entangling { bipartition: usize, singular_value: f64 },
}

impl ProductTest {
    pub fn is_product(&self) -> bool {
        matches!(self, ProductTest::Product { .. })
    }

    pub fn factors(&self) -> Option<&[CMat]> {
        match self {
            ProductTest::Product { factors, .. } => Some(factors),
            _ => None,
        }
    }
}

/// Operator-Schmidt rank-one test of a PSD operator across each system.
pub fn product_test(op: &CMat, edge_dims: &[usize]) -> Result<ProductTest> {
    let n = linalg::product(edge_dims);
    if op.nrows() != n || op.ncols() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "operator of size {} for systems {:?}",
            op.nrows(),
            edge_dims
        )));
    }
    let min = linalg::min_eigenvalue(op);
    if min < -PSD_TOL || linalg::hermiticity_error(op) > PSD_TOL {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    if edge_dims.is_empty() {
        return Ok(ProductTest::Product { factors: Vec::new(), residue: op[(0, 0)].re });
    }
    let mut rest = linalg::hermitian_part(op);
    let mut factors = Vec::with_capacity(edge_dims.len());
    let mut residue = 1.0;
    for (k, &d) in edge_dims.iter().enumerate().take(edge_dims.len() - 1) {
        let r = rest.nrows() / d;
        let mut re = CMat::zeros(d * d, r * r);
        for a in 0..d {
            for b in 0..d {
                for c in 0..r {
                    for e in 0..r {
                        re[(a * d + b, c * r + e)] = rest[(a * r + c, b * r + e)];
                    }
                }
            }
        }
        let svd = linalg::svd(&re);
        let s = &svd.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&x, &y| s[y].total_cmp(&s[x]));
        let s1 = s[order[0]];
        let s2 = order.get(1).map(|&i| s[i]).unwrap_or(0.0);
        if s1 == 0.0 {
            factors.extend(edge_dims[k..].iter().map(|&d| CMat::zeros(d, d)));
            return Ok(ProductTest::Product { factors, residue: 0.0 });
        }
        if s2 > PRODUCT_REL_TOL * s1 {
            return Ok(ProductTest::Entangling { bipartition: k, singular_value: s2 });
        }
        let (u, v_t) = (&svd.u, &svd.v_t);
        let mut a = CMat::from_fn(d, d, |i, j| u[(i * d + j, order[0])]);
        let mut b = CMat::from_fn(r, r, |i, j| v_t[(order[0], i * r + j)] * s1);
        let tr: Complex64 = a.trace();
        if tr.norm() > 0.0 {
            let ph = tr / tr.norm();
            a /= ph;
            b *= ph;
        }
        let a = linalg::hermitian_part(&a);
        let scale = linalg::max_abs_eigenvalue(&a);
        residue *= scale;
        factors.push(a.unscale(scale));
        rest = linalg::hermitian_part(&b);
    }
    let scale = linalg::max_abs_eigenvalue(&rest);
    if scale == 0.0 {
        factors.push(rest);
        return Ok(ProductTest::Product { factors, residue: 0.0 });
    }
    residue *= scale;
    factors.push(rest.unscale(scale));
    factors[0] *= linalg::cr(residue);
    Ok(ProductTest::Product { factors, residue })
}

/// Local filters and the conclusive measurement they leave behind.
#[derive(Debug, Clone, PartialEq)]
pub struct FairSamplingDecomposition {
    /// One filter per incoming system; their tensor product is `M^✓`.
    pub filters: Vec<CMat>,
    /// Filtered conclusive elements, completed to a POVM on the whole space.
    pub conclusive: PartyPOVM,
    /// Projector onto the support of `M^✓`.
    pub support: CMat,
}

/// Splits a party's POVM into local filters and a filtered measurement.
///
/// The complement of the support of `M^✓` is added to the first conclusive
/// element so that the filtered elements form a complete POVM.
pub fn decompose_party(party: usize, povm: &PartyPOVM, edge_dims: &[usize]) -> Result<FairSamplingDecomposition> {
    let check = povm.conclusive_element();
    if linalg::frobenius(&check) < linalg::EIG_FLOOR {
        return Err(Error::DegenerateParty { party });
    }
    let filters = match product_test(&check, edge_dims)? {
        ProductTest::Product { factors, .. } => factors,
        ProductTest::Entangling { bipartition, singular_value } => {
            return Err(Error::NotFairSampling { party, bipartition, singular_value })
        }
    };
    let inv = linalg::psd_pinv_sqrt(&check);
    let support = linalg::support_projector(&check, linalg::EIG_FLOOR);
    let n = check.nrows();
    let mut labels = Vec::new();
    let mut elements = Vec::new();
    for (l, m) in povm.labels().iter().zip(povm.elements()) {
        if l.is_fail() {
            continue;
        }
        labels.push(l.clone());
        elements.push(linalg::hermitian_part(&(&inv * m * &inv)));
    }
    elements[0] += CMat::identity(n, n) - &support;
    let conclusive = quantum::povm_for_party(party, labels, elements)?;
    Ok(FairSamplingDecomposition { filters, conclusive, support })
}

/// A failure-free model equivalent to post-selecting on all-conclusive outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSelection {
    pub model: QuantumNetworkModel,
    /// `‖(√T ⊗ √T)|Ψ⟩‖²` per source; the product is `P[all conclusive]`.
    pub success: Vec<f64>,
    pub decompositions: Vec<FairSamplingDecomposition>,
}

impl PostSelection {
    pub fn success_probability(&self) -> f64 {
        self.success.iter().product()
    }
}

/// Moves every party's local filters onto the sources.
pub fn postselect_transform(model: &QuantumNetworkModel) -> Result<PostSelection> {
    let graph = model.graph();
    let decompositions = (0..graph.n_parties())
        .map(|j| decompose_party(j, &model.povms()[j], &model.party_dims(j)))
        .collect::<Result<Vec<_>>>()?;
    let filter = |source: usize, party: usize| -> CMat {
        let slot = graph.sources_of(party).iter().position(|&i| i == source).expect("connected");
        linalg::psd_sqrt(&decompositions[party].filters[slot])
    };
    let mut states = Vec::with_capacity(graph.n_sources());
    let mut success = Vec::with_capacity(graph.n_sources());
    for (i, s) in model.states().iter().enumerate() {
        let (l, r) = graph.endpoints(i)?;
        let a = s.apply_local(&filter(i, l), &filter(i, r));
        let norm = linalg::frobenius(&a);
        if norm < BLOCKED_NORM {
            return Err(Error::SourceBlocked { src: i });
        }
        success.push(norm * norm);
        let amps: Vec<Complex64> = a.transpose().iter().map(|z| z / norm).collect();
        let (dl, dr) = s.dims();
        states.push(SourceState::new(dl, dr, amps)?);
    }
    let povms = decompositions.iter().map(|d| d.conclusive.clone()).collect();
    let filtered = QuantumNetworkModel::with_cap(graph.clone(), states, povms, model.cap())?;
    Ok(PostSelection { model: filtered, success, decompositions })
}

/// Whether the party's conclusive element factorizes over its systems.
pub fn is_fair_sampling(model: &QuantumNetworkModel, party: usize) -> Result<bool> {
    let check = model.povms()[party].conclusive_element();
    Ok(product_test(&check, &model.party_dims(party))?.is_product())
}

/// Label set of the filtered model.
pub fn conclusive_labels(povm: &PartyPOVM) -> Vec<Outcome> {
    povm.labels().iter().filter(|l| !l.is_fail()).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::linalg::cr;

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&crate::linalg::CVec::from_iterator(v.len(), v.iter().map(|&x| cr(x))))
    }

    #[test]
    fn identity_is_product() {
        let t = product_test(&CMat::identity(4, 4), &[2, 2]).unwrap();
        let f = t.factors().unwrap();
        assert!(linalg::frobenius(&(&f[0] - CMat::identity(2, 2))) < 1e-12);
        assert!(linalg::frobenius(&(&f[1] - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn bell_projector_is_entangling() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let v = crate::linalg::CVec::from_vec(vec![cr(h), cr(0.0), cr(0.0), cr(h)]);
        let p = crate::linalg::outer(&v);
        match product_test(&p, &[2, 2]).unwrap() {
            ProductTest::Entangling { bipartition, singular_value } => {
                assert_eq!(bipartition, 0);
                assert!((singular_value - 0.5).abs() < 1e-12);
            }
            other => panic!("expected entangling, got {other:?}"),
        }
    }

    #[test]
    fn constructed_product_is_recovered() {
        let a = diag(&[1.0, 0.7]);
        let m = linalg::kron(&a, &a);
        let t = product_test(&m, &[2, 2]).unwrap();
        let f = t.factors().unwrap();
        assert!(linalg::frobenius(&(&f[0] - &a)) < 1e-10);
        assert!(linalg::frobenius(&(&f[1] - &a)) < 1e-10);
    }

    #[test]
    fn rejects_non_psd() {
        let m = diag(&[1.0, -0.5, 1.0, 1.0]);
        assert!(matches!(product_test(&m, &[2, 2]), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn filtered_phi_plus() {
        let t = diag(&[1.0, 0.5]);
        let povm = PartyPOVM::new(
            vec![Outcome::label("y"), Outcome::Fail],
            vec![t.clone(), CMat::identity(2, 2) - &t],
        )
        .unwrap();
        let model = QuantumNetworkModel::new(
            crate::network::NetworkGraph::single_edge(),
            vec![SourceState::phi_plus()],
            vec![povm.clone(), povm],
        )
        .unwrap();
        let ps = postselect_transform(&model).unwrap();
        let s = &ps.model.states()[0];
        let n = libm::sqrt(1.25);
        assert!((s.amplitude(0, 0).re - 1.0 / n).abs() < 1e-12);
        assert!((s.amplitude(1, 1).re - 0.5 / n).abs() < 1e-12);
        let p = model.joint_distribution().unwrap().all_conclusive_probability();
        assert!((ps.success_probability() - p).abs() < 1e-12);
        assert!((p - 0.5 * (1.0 + 0.25)).abs() < 1e-12);
    }
}

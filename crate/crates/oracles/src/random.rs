//! Seeded random models for property tests.

use failnet_core::classical::ClassicalNetworkModel;
use failnet_core::distribution::{numeric_alphabet, OutcomeDistribution};
use failnet_core::failing::FailureProbabilities;
use failnet_core::linalg::{self, CMat};
use failnet_core::network::{FractionalIndependentSet, NetworkGraph};
use failnet_core::quantum::{PartyPOVM, QuantumNetworkModel, SourceState};
use failnet_core::Outcome;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Haar-distributed unitary from the QR decomposition of a Ginibre matrix.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> CMat {
    let qr = ginibre(d, d, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q.clone();
    for k in 0..d {
        let z = r[(k, k)];
        let ph = if z.norm() > 0.0 { z / z.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            u[(i, k)] = q[(i, k)] * ph;
        }
    }
    u
}

pub fn random_state(dl: usize, dr: usize, rng: &mut impl Rng) -> SourceState {
    let g = ginibre(dl * dr, 1, rng);
    let n = g.norm();
    SourceState::new(dl, dr, g.iter().map(|z| z / n).collect()).expect("normalized")
}

/// Complete POVM with `n` elements `S^{-1/2} G_a† G_a S^{-1/2}`.
pub fn random_povm(d: usize, n: usize, rng: &mut impl Rng) -> PartyPOVM {
    let raw: Vec<CMat> = (0..n)
        .map(|_| {
            let g = ginibre(d, d, rng);
            g.adjoint() * g
        })
        .collect();
    let total = raw.iter().fold(CMat::zeros(d, d), |acc, m| acc + m);
    let inv = linalg::psd_pinv_sqrt(&total);
    let mut elements: Vec<CMat> =
        raw.iter().map(|m| linalg::hermitian_part(&(&inv * m * &inv))).collect();
    let partial = elements[..n - 1].iter().fold(CMat::zeros(d, d), |acc, m| acc + m);
    elements[n - 1] = linalg::hermitian_part(&(CMat::identity(d, d) - partial));
    PartyPOVM::new(numeric_alphabet(n), elements).expect("complete by construction")
}

/// Projective measurement onto a random basis, grouped into `n ≤ d` outcomes.
pub fn random_projective(d: usize, n: usize, rng: &mut impl Rng) -> PartyPOVM {
    let u = haar_unitary(d, rng);
    let mut elements = vec![CMat::zeros(d, d); n];
    for k in 0..d {
        let col = u.column(k).into_owned();
        elements[k % n] += &col * col.adjoint();
    }
    PartyPOVM::new(numeric_alphabet(n), elements.iter().map(linalg::hermitian_part).collect())
        .expect("projective")
}

/// Graph with 2–`max_parties` parties and 1–`max_sources` distinct bipartite
/// sources, every party fed by at least one source.
pub fn random_graph(max_parties: usize, max_sources: usize, rng: &mut impl Rng) -> NetworkGraph {
    loop {
        let m = rng.random_range(2..=max_parties.max(2));
        let mut pairs: Vec<[usize; 2]> = (0..m).flat_map(|a| ((a + 1)..m).map(move |b| [a, b])).collect();
        pairs.shuffle(rng);
        let n = rng.random_range(1..=max_sources.min(pairs.len()));
        let chosen: Vec<Vec<usize>> = pairs[..n].iter().map(|p| p.to_vec()).collect();
        let covered = (0..m).all(|j| chosen.iter().any(|s| s.contains(&j)));
        if !covered {
            continue;
        }
        let g = NetworkGraph::from_sources(&chosen, m).expect("indices in range");
        if g.validate().is_valid() {
            return g;
        }
    }
}

/// Random states and POVMs with local dimensions up to `max_dim` and global
/// dimension up to `max_global`.
pub fn random_quantum_model(
    graph: &NetworkGraph,
    max_dim: usize,
    max_global: usize,
    rng: &mut impl Rng,
) -> QuantumNetworkModel {
    loop {
        let dims: Vec<(usize, usize)> = (0..graph.n_sources())
            .map(|_| (rng.random_range(1..=max_dim), rng.random_range(1..=max_dim)))
            .collect();
        let global: usize = dims.iter().map(|(a, b)| a * b).product();
        if global > max_global || dims.iter().all(|&(a, b)| a * b == 1) {
            continue;
        }
        let states: Vec<SourceState> = dims.iter().map(|&(a, b)| random_state(a, b, rng)).collect();
        let povms = (0..graph.n_parties())
            .map(|j| {
                let d: usize = graph
                    .sources_of(j)
                    .iter()
                    .map(|&i| {
                        let (l, _) = graph.endpoints(i).expect("bipartite");
                        if l == j { dims[i].0 } else { dims[i].1 }
                    })
                    .product();
                let n = rng.random_range(2..=3);
                if rng.random_bool(0.5) || d < n {
                    random_povm(d, n, rng)
                } else {
                    random_projective(d, n, rng)
                }
            })
            .collect();
        return QuantumNetworkModel::new(graph.clone(), states, povms).expect("consistent dimensions");
    }
}

pub fn random_probability_vector(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

pub fn random_distribution(sizes: &[usize], rng: &mut impl Rng) -> OutcomeDistribution {
    let probs = random_probability_vector(sizes.iter().product(), rng);
    OutcomeDistribution::new(sizes.iter().map(|&k| numeric_alphabet(k)).collect(), probs)
        .expect("normalized")
}

/// Deterministic responses with outputs in `0..outputs`.
pub fn random_classical_model(graph: &NetworkGraph, max_alphabet: usize, outputs: usize, rng: &mut impl Rng) -> ClassicalNetworkModel {
    let dists: Vec<Vec<f64>> = (0..graph.n_sources())
        .map(|_| random_probability_vector(rng.random_range(1..=max_alphabet), rng))
        .collect();
    let responses = (0..graph.n_parties())
        .map(|j| {
            let n: usize = graph.sources_of(j).iter().map(|&i| dists[i].len()).product();
            (0..n).map(|_| rng.random_range(0..outputs) as f64).collect()
        })
        .collect();
    ClassicalNetworkModel::new(graph.clone(), dists, responses).expect("consistent tables")
}

/// Weights in `[0, 1]` scaled down until every source sum is at most one.
pub fn random_weights(graph: &NetworkGraph, rng: &mut impl Rng) -> FractionalIndependentSet {
    let raw: Vec<f64> = (0..graph.n_parties()).map(|_| rng.random_range(0.0..1.0)).collect();
    let worst = (0..graph.n_sources())
        .map(|i| graph.parties_of(i).iter().map(|&j| raw[j]).sum::<f64>())
        .fold(1.0f64, f64::max);
    FractionalIndependentSet::new(graph, raw.iter().map(|w| w / worst).collect()).expect("feasible")
}

pub fn random_failures(n: usize, rng: &mut impl Rng) -> FailureProbabilities {
    FailureProbabilities::new((0..n).map(|_| rng.random_range(0.0..0.9)).collect()).expect("in range")
}

/// PSD operator with spectrum in `[0.2, 1]`, largest eigenvalue ≤ 1.
pub fn random_filter(d: usize, rng: &mut impl Rng) -> CMat {
    let u = haar_unitary(d, rng);
    let diag = CMat::from_fn(d, d, |i, j| {
        if i == j { Complex64::new(rng.random_range(0.2..1.0), 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    linalg::hermitian_part(&(&u * diag * u.adjoint()))
}

/// Model whose parties measure `√F N^a √F` with a product filter `F` and a
/// complete POVM `N`, plus `∅ = I − F`.
pub fn random_fair_sampling_model(graph: &NetworkGraph, max_dim: usize, rng: &mut impl Rng) -> QuantumNetworkModel {
    let base = random_quantum_model(graph, max_dim, 1024, rng);
    let povms = (0..graph.n_parties())
        .map(|j| {
            let dims = base.party_dims(j);
            let filters: Vec<CMat> = dims.iter().map(|&d| random_filter(d, rng)).collect();
            let f = linalg::kron_all(filters.iter());
            let root = linalg::psd_sqrt(&f);
            let d = f.nrows();
            let inner = random_povm(d, rng.random_range(2..=3), rng);
            let mut labels = inner.labels().to_vec();
            let mut elements: Vec<CMat> =
                inner.elements().iter().map(|n| linalg::hermitian_part(&(&root * n * &root))).collect();
            labels.push(Outcome::Fail);
            elements.push(linalg::hermitian_part(&(CMat::identity(d, d) - &f)));
            PartyPOVM::new(labels, elements).expect("complete")
        })
        .collect();
    base.with_povms(povms).expect("same dimensions")
}

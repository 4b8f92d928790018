//! Library results against the independent brute-force oracles.

use failnet_core::classical::{expect_product, ClassicalNetworkModel};
use failnet_core::distribution::numeric_alphabet;
use failnet_core::linalg::CMat;
use failnet_core::network::NetworkGraph;
use failnet_core::quantum::{PartyPOVM, QuantumNetworkModel};
use failnet_core::spdc::{click_probabilities, SPDCParams, Setting};
use failnet_oracles::{brute, fock, random};
use rand::Rng;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn contraction_matches_source_order_evaluation() {
    let mut rng = random::rng(11);
    for _ in 0..100 {
        let g = random::random_graph(4, 5, &mut rng);
        let model = random::random_quantum_model(&g, 3, 2048, &mut rng);
        let lib = model.joint_distribution().unwrap();
        let oracle = brute::quantum_distribution(&model);
        assert!(max_diff(lib.probabilities(), &oracle) < 1e-12);
    }
}

#[test]
fn classical_enumeration_matches_recursion() {
    let mut rng = random::rng(12);
    for _ in 0..100 {
        let g = random::random_graph(4, 4, &mut rng);
        let model = random::random_classical_model(&g, 4, 3, &mut rng);
        let lib = model.joint_distribution().unwrap();
        let oracle = brute::classical_distribution(&model);
        assert!(max_diff(lib.probabilities(), &oracle) < 1e-12);
        let w = random::random_weights(&g, &mut rng);
        let (l, r) = expect_product(&model, &w).unwrap();
        let (bl, br) = brute::classical_expect_product(&model, w.weights());
        assert!((l - bl).abs() < 1e-12 && (r - br).abs() < 1e-12);
    }
}

/// Measurements diagonal in the Schmidt bases make the model a local-variable
/// model: each source hands both ends the index `ℓ` with probability `λ_ℓ²`.
#[test]
fn schmidt_diagonal_measurements_are_classical() {
    let mut rng = random::rng(13);
    for _ in 0..40 {
        let g = random::random_graph(4, 4, &mut rng);
        let d: Vec<usize> = (0..g.n_sources()).map(|_| rng.random_range(1..=3)).collect();
        let states: Vec<_> = d.iter().map(|&k| random::random_state(k, k, &mut rng)).collect();
        let dists: Vec<Vec<f64>> =
            states.iter().map(|s| s.schmidt().coefficients.iter().map(|l| l * l).collect()).collect();
        let outputs = 3;
        let responses: Vec<Vec<f64>> = (0..g.n_parties())
            .map(|j| {
                let n: usize = g.sources_of(j).iter().map(|&i| d[i]).product();
                (0..n).map(|_| rng.random_range(0..outputs) as f64).collect()
            })
            .collect();
        let classical = ClassicalNetworkModel::new(g.clone(), dists, responses.clone()).unwrap();
        let povms = (0..g.n_parties())
            .map(|j| {
                let srcs = g.sources_of(j);
                let dim: usize = srcs.iter().map(|&i| d[i]).product();
                let mut elements = vec![CMat::zeros(dim, dim); outputs];
                for (idx, &f) in responses[j].iter().enumerate() {
                    // digits of idx over the party's sources, ascending
                    let mut rem = idx;
                    let mut digits = vec![0usize; srcs.len()];
                    for (k, &i) in srcs.iter().enumerate().rev() {
                        digits[k] = rem % d[i];
                        rem /= d[i];
                    }
                    let mut vec = CMat::from_element(1, 1, failnet_core::linalg::cr(1.0));
                    for (&i, &l) in srcs.iter().zip(&digits) {
                        let sch = states[i].schmidt();
                        let (left, _) = g.endpoints(i).unwrap();
                        let basis = if left == j { &sch.left } else { &sch.right };
                        let col = CMat::from_iterator(basis.nrows(), 1, basis.column(l).iter().cloned());
                        vec = failnet_core::linalg::kron(&vec, &col);
                    }
                    elements[f as usize] += &vec * vec.adjoint();
                }
                PartyPOVM::new(numeric_alphabet(outputs), elements).unwrap()
            })
            .collect();
        let quantum = QuantumNetworkModel::new(g.clone(), states, povms).unwrap();
        let q = quantum.joint_distribution().unwrap();
        let c = brute::classical_distribution(&classical);
        // the classical table may have fewer outputs when a label never occurs
        let shape = q.shape();
        let csizes: Vec<usize> =
            responses.iter().map(|r| r.iter().fold(0usize, |a, &v| a.max(v as usize)) + 1).collect();
        q.for_each(|t, p| {
            if t.iter().zip(&csizes).any(|(a, s)| a >= s) {
                assert!(p.abs() < 1e-12);
            } else {
                let idx = t.iter().zip(&csizes).fold(0, |acc, (a, s)| acc * s + a);
                assert!((p - c[idx]).abs() < 1e-12);
            }
        });
        assert_eq!(shape.len(), g.n_parties());
    }
}

fn random_setting(rng: &mut impl Rng) -> Setting {
    let tau = std::f64::consts::TAU;
    Setting { theta: rng.random_range(0.0..tau), varphi: rng.random_range(0.0..tau), phi: rng.random_range(0.0..tau) }
}

fn angles(s: &Setting) -> fock::Angles {
    (s.theta, s.varphi, s.phi)
}

#[test]
fn determinant_formula_matches_fock_expansion() {
    let mut rng = random::rng(14);
    for _ in 0..50 {
        let t1 = rng.random_range(0.0..0.8);
        let t2 = rng.random_range(0.0..0.8);
        let alice = [random_setting(&mut rng), random_setting(&mut rng)];
        let bob = [random_setting(&mut rng), random_setting(&mut rng)];
        let params = SPDCParams::new(t1, t2, alice, bob).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let lib = click_probabilities(&params, x, y).unwrap();
                let oracle = fock::click_block(t1, t2, angles(&alice[x]), angles(&bob[y]), 60);
                assert!(fock::tail_mass(&oracle) < 1e-9);
                for a in 0..4 {
                    for b in 0..4 {
                        assert!((lib[a][b] - oracle[a][b]).abs() < 1e-8, "{} vs {}", lib[a][b], oracle[a][b]);
                    }
                }
            }
        }
    }
}

/// At eight pairs the truncation error is large for strong pumps but never
/// exceeds the neglected tail.
#[test]
fn cutoff_eight_error_is_bounded_by_tail() {
    let mut rng = random::rng(15);
    for _ in 0..50 {
        let t1 = rng.random_range(0.0..0.8);
        let t2 = rng.random_range(0.0..0.8);
        let (a, b) = (random_setting(&mut rng), random_setting(&mut rng));
        let params = SPDCParams::new(t1, t2, [a, a], [b, b]).unwrap();
        let lib = click_probabilities(&params, 0, 0).unwrap();
        let oracle = fock::click_block(t1, t2, angles(&a), angles(&b), 8);
        let tail = fock::tail_mass(&oracle);
        assert!((tail - fock::thermal_tail(t1, t2, 8)).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                let gap = lib[i][j] - oracle[i][j];
                assert!(gap >= -1e-12 && gap <= tail + 1e-12);
            }
        }
    }
}

#[test]
fn single_edge_oracle_sanity() {
    let g = NetworkGraph::single_edge();
    let mut rng = random::rng(16);
    let model = random::random_quantum_model(&g, 3, 64, &mut rng);
    let total: f64 = brute::quantum_distribution(&model).iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

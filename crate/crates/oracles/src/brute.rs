//! Brute-force evaluation of network models.
//!
//! The quantum evaluator keeps the global state in source order (left end,
//! right end, next source, ...) and applies each party's POVM element directly
//! on the axes it owns, without reordering into party-major form.

use failnet_core::classical::ClassicalNetworkModel;
use failnet_core::linalg::CMat;
use failnet_core::quantum::QuantumNetworkModel;
use num_complex::Complex64;

struct Layout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    /// Axes of each party in ascending source order.
    party_axes: Vec<Vec<usize>>,
}

fn layout(model: &QuantumNetworkModel) -> Layout {
    let g = model.graph();
    let mut dims = Vec::new();
    for s in model.states() {
        let (dl, dr) = s.dims();
        dims.push(dl);
        dims.push(dr);
    }
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let party_axes = (0..g.n_parties())
        .map(|j| {
            let mut srcs: Vec<usize> = (0..g.n_sources()).filter(|&i| g.connected(i, j)).collect();
            srcs.sort_unstable();
            srcs.iter()
                .map(|&i| {
                    let ends: Vec<usize> = (0..g.n_parties()).filter(|&k| g.connected(i, k)).collect();
                    if ends[0] == j { 2 * i } else { 2 * i + 1 }
                })
                .collect()
        })
        .collect();
    Layout { dims, strides, party_axes }
}

/// Kronecker product of the source amplitude vectors in source order.
pub fn source_order_state(model: &QuantumNetworkModel) -> Vec<Complex64> {
    let mut psi = vec![Complex64::new(1.0, 0.0)];
    for s in model.states() {
        let amps = s.amplitudes();
        let mut next = Vec::with_capacity(psi.len() * amps.len());
        for a in &psi {
            for b in amps {
                next.push(a * b);
            }
        }
        psi = next;
    }
    psi
}

fn apply_on_axes(op: &CMat, psi: &[Complex64], lay: &Layout, axes: &[usize]) -> Vec<Complex64> {
    let local_dims: Vec<usize> = axes.iter().map(|&a| lay.dims[a]).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (idx, &amp) in psi.iter().enumerate() {
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        // local column index and the index with the party's axes zeroed
        let mut col = 0;
        let mut base = idx;
        for (&a, &d) in axes.iter().zip(&local_dims) {
            let digit = (idx / lay.strides[a]) % lay.dims[a];
            col = col * d + digit;
            base -= digit * lay.strides[a];
        }
        for row in 0..op.nrows() {
            let m = op[(row, col)];
            if m == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut target = base;
            let mut rem = row;
            for (&a, &d) in axes.iter().zip(&local_dims).rev() {
                target += (rem % d) * lay.strides[a];
                rem /= d;
            }
            out[target] += m * amp;
        }
    }
    out
}

/// `P(a⃗)` in row-major order over the parties' label lists.
pub fn quantum_distribution(model: &QuantumNetworkModel) -> Vec<f64> {
    let lay = layout(model);
    let psi = source_order_state(model);
    let mut out = Vec::new();
    descend(model, &lay, &psi, &psi, 0, &mut out);
    out
}

fn descend(
    model: &QuantumNetworkModel,
    lay: &Layout,
    psi: &[Complex64],
    cur: &[Complex64],
    party: usize,
    out: &mut Vec<f64>,
) {
    if party == lay.party_axes.len() {
        let p: Complex64 = psi.iter().zip(cur).map(|(a, b)| a.conj() * b).sum();
        out.push(p.re);
        return;
    }
    for m in model.povms()[party].elements() {
        let next = apply_on_axes(m, cur, lay, &lay.party_axes[party]);
        descend(model, lay, psi, &next, party + 1, out);
    }
}

/// Joint distribution of a classical model by nested recursion over sources.
///
/// Output alphabet sizes are `max response + 1` per party.
pub fn classical_distribution(model: &ClassicalNetworkModel) -> Vec<f64> {
    let g = model.graph();
    let sizes: Vec<usize> = model
        .responses()
        .iter()
        .map(|r| r.iter().fold(0usize, |a, &v| a.max(v as usize)) + 1)
        .collect();
    let mut out = vec![0.0; sizes.iter().product()];
    let mut values = vec![0usize; g.n_sources()];
    recurse_sources(model, 0, 1.0, &mut values, &mut |vals, p| {
        let mut idx = 0;
        for j in 0..g.n_parties() {
            idx = idx * sizes[j] + local_response(model, j, vals) as usize;
        }
        out[idx] += p;
    });
    out
}

fn recurse_sources(
    model: &ClassicalNetworkModel,
    i: usize,
    p: f64,
    values: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize], f64),
) {
    if i == values.len() {
        f(values, p);
        return;
    }
    for (v, &q) in model.source_dists()[i].iter().enumerate() {
        values[i] = v;
        recurse_sources(model, i + 1, p * q, values, f);
    }
}

fn local_response(model: &ClassicalNetworkModel, party: usize, values: &[usize]) -> f64 {
    let g = model.graph();
    let mut idx = 0;
    for i in 0..g.n_sources() {
        if g.connected(i, party) {
            idx = idx * model.source_dists()[i].len() + values[i];
        }
    }
    model.responses()[party][idx]
}

/// `E[∏ |f_j|]` and `∏ ‖f_j‖_{1/x_j}` by recursion, `x_j = 0` read as the
/// maximum over values of positive probability.
pub fn classical_expect_product(model: &ClassicalNetworkModel, weights: &[f64]) -> (f64, f64) {
    let g = model.graph();
    let mut lhs = 0.0;
    let mut values = vec![0usize; g.n_sources()];
    recurse_sources(model, 0, 1.0, &mut values, &mut |vals, p| {
        let prod: f64 = (0..g.n_parties()).map(|j| local_response(model, j, vals).abs()).product();
        lhs += p * prod;
    });
    let mut rhs = 1.0;
    for (j, &x) in weights.iter().enumerate() {
        let mut acc = 0.0f64;
        let mut values = vec![0usize; g.n_sources()];
        recurse_sources(model, 0, 1.0, &mut values, &mut |vals, p| {
            if p == 0.0 {
                return;
            }
            let f = local_response(model, j, vals).abs();
            if x == 0.0 {
                acc = acc.max(f);
            } else {
                acc += p * f.powf(1.0 / x);
            }
        });
        rhs *= if x == 0.0 { acc } else { acc.powf(x) };
    }
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use failnet_core::network::NetworkGraph;
    use failnet_core::quantum::{PartyPOVM, SourceState};

    #[test]
    fn phi_plus_correlations() {
        let m = QuantumNetworkModel::new(
            NetworkGraph::single_edge(),
            vec![SourceState::phi_plus()],
            vec![PartyPOVM::computational(2), PartyPOVM::computational(2)],
        )
        .unwrap();
        let p = quantum_distribution(&m);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[3] - 0.5).abs() < 1e-15);
        assert!(p[1].abs() < 1e-15 && p[2].abs() < 1e-15);
    }
}

//! Perturbations that break the flag structure of a failing-source model.

use failnet_core::quantum::{QuantumNetworkModel, SourceState};
use num_complex::Complex64;

/// `√(1−ε) A + √ε |1⟩_L|0⟩_R ⊗ |0…0⟩`, renormalized, for a flagged state of
/// dimensions `(2 d_L, 2 d_R)` with the flag as the leading factor.
pub fn decorrelate_flags(state: &SourceState, eps: f64) -> SourceState {
    let (dl2, dr2) = state.dims();
    let dl = dl2 / 2;
    let mut amps: Vec<Complex64> = state.amplitudes().iter().map(|z| z * (1.0 - eps).sqrt()).collect();
    // left flag 1, left payload 0, right flag 0, right payload 0
    amps[dl * dr2] += Complex64::new(eps.sqrt(), 0.0);
    let n = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= n);
    SourceState::new(dl2, dr2, amps).expect("normalized")
}

/// Applies `decorrelate_flags` to every source.
pub fn decorrelate_model(model: &QuantumNetworkModel, eps: f64) -> QuantumNetworkModel {
    let states = model.states().iter().map(|s| decorrelate_flags(s, eps)).collect();
    model.with_states(states).expect("same dimensions")
}

//! The four-outcome triangle distribution, its qubit realization and the
//! randomness bound for a coarse-grained output under failing sources.
//!
//! Sources: `α` (index 0) feeds B and C, `β` (1) feeds A and C, `γ` (2) feeds
//! A and B. Party outcomes are `0, 1_0, 1_1, 2`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_4;

use crate::distribution::{Outcome, OutcomeDistribution};
use crate::entropy::{binary_entropy, shannon};
use crate::error::{Error, Result};
use crate::failing::{flag_qubit_model, overlay_distribution, FailureProbabilities};
use crate::finner::{finner_check, FinnerReport};
use crate::linalg::{self, CMat, CVec};
use crate::network::NetworkGraph;
use crate::quantum::{PartyPOVM, QuantumNetworkModel, SourceState};

pub const LABELS: [&str; 4] = ["0", "1_0", "1_1", "2"];
const CHECK_TOL: f64 = 1e-10;

/// `u_0 = −v_1 = cos θ`, `v_0 = u_1 = sin θ` with `θ ∈ [0, π/4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RGB4Params {
    pub theta: f64,
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl RGB4Params {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_4 + 1e-15).contains(&theta) {
            return Err(Error::OutOfRange { what: "theta", value: theta });
        }
        let (c, s) = (libm::cos(theta), libm::sin(theta));
        Ok(Self { theta, u: [c, s], v: [s, -c] })
    }
}

pub fn alphabet() -> Vec<Outcome> {
    LABELS.iter().map(|l| Outcome::label(*l)).collect()
}

/// Closed-form table.
pub fn rgb4_distribution(theta: f64) -> Result<OutcomeDistribution> {
    let p = RGB4Params::new(theta)?;
    let (u, v) = (p.u, p.v);
    let mut probs = vec![0.0; 64];
    let idx = |a: usize, b: usize, c: usize| (a * 4 + b) * 4 + c;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let amp = u[i] * u[j] * u[k] + v[i] * v[j] * v[k];
                probs[idx(1 + i, 1 + j, 1 + k)] = amp * amp / 8.0;
            }
        }
        let (uu, vv) = (u[i] * u[i] / 8.0, v[i] * v[i] / 8.0);
        let one = 1 + i;
        // (1_i, 0, 2) and its cyclic images carry u_i²
        probs[idx(one, 0, 3)] = uu;
        probs[idx(3, one, 0)] = uu;
        probs[idx(0, 3, one)] = uu;
        // (1_i, 2, 0) and its cyclic images carry v_i²
        probs[idx(one, 3, 0)] = vv;
        probs[idx(0, one, 3)] = vv;
        probs[idx(3, 0, one)] = vv;
    }
    OutcomeDistribution::new(vec![alphabet(); 3], probs)
}

fn projector(amps: [f64; 4]) -> CMat {
    linalg::outer(&CVec::from_iterator(4, amps.iter().map(|&x| linalg::cr(x))))
}

/// Singlet-type sources `(|01⟩+|10⟩)/√2` and projective measurements
/// `|00⟩, |m_0⟩, |m_1⟩, |11⟩` with `|m_i⟩ = u_i|01⟩ + v_i|10⟩`.
///
/// A measures `(β, γ)`, B measures `(γ, α)` and C measures `(α, β)`.
pub fn rgb4_realization(theta: f64) -> Result<QuantumNetworkModel> {
    let p = RGB4Params::new(theta)?;
    let h = core::f64::consts::FRAC_1_SQRT_2;
    let state = SourceState::from_real(2, 2, &[0.0, h, h, 0.0])?;
    let elements = vec![
        projector([1.0, 0.0, 0.0, 0.0]),
        projector([0.0, p.u[0], p.v[0], 0.0]),
        projector([0.0, p.u[1], p.v[1], 0.0]),
        projector([0.0, 0.0, 0.0, 1.0]),
    ];
    let povm = PartyPOVM::new(alphabet(), elements.clone())?;
    // B's systems arrive as (α, γ)
    let swapped = elements.iter().map(|m| linalg::permute_operator(m, &[2, 2], &[1, 0])).collect();
    let povm_b = PartyPOVM::new(alphabet(), swapped)?;
    QuantumNetworkModel::new(NetworkGraph::triangle(), vec![state; 3], vec![povm.clone(), povm_b, povm])
}

/// `½ sin³θ (3 cos θ + cos 3θ − 6 sin θ)`, unclamped.
pub fn r_lower_bound(theta: f64) -> f64 {
    let s = libm::sin(theta);
    0.5 * s * s * s * (3.0 * libm::cos(theta) + libm::cos(3.0 * theta) - 6.0 * s)
}

/// Entropy bound in bits; negative `r` is clamped to zero.
pub fn entropy_bound_l(r: f64) -> Result<f64> {
    if r > 0.25 || r.is_nan() {
        return Err(Error::OutOfRange { what: "r", value: r });
    }
    let r = r.max(0.0);
    let q = libm::sqrt(4.0 * r);
    let rest = (1.0 - 4.0 * r) / 4.0;
    let big = shannon(&[(1.0 + q) * (1.0 + q) / 4.0, (1.0 - q) * (1.0 - q) / 4.0, rest, rest]);
    Ok(1.0 + binary_entropy((1.0 + 4.0 * r) / 2.0) - big)
}

/// Coarse-graining of A's output into the register `Ā`.
pub fn coarse_grain(outcome: &Outcome) -> Outcome {
    match outcome {
        Outcome::Fail => Outcome::Fail,
        Outcome::Label(l) if l.starts_with("1_") => Outcome::label("1"),
        Outcome::Label(_) => Outcome::label("0"),
    }
}

/// `P(ā)` over `0, 1, ∅` for `party`.
pub fn coarse_grained_marginal(dist: &OutcomeDistribution, party: usize) -> Result<[f64; 3]> {
    let m = dist.marginal(&[party])?;
    let mut out = [0.0; 3];
    for (label, p) in m.alphabet(0).iter().zip(m.probabilities()) {
        let k = match coarse_grain(label) {
            Outcome::Fail => 2,
            Outcome::Label(l) if l == "1" => 1,
            Outcome::Label(_) => 0,
        };
        out[k] += p;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RandomnessBoundReport {
    pub theta: f64,
    /// Raw lower bound on `r`; may be negative.
    pub r_lower: f64,
    /// Bound `L` on `H(Ā|E)` in the conclusive branch, bits.
    pub l: f64,
    pub e_beta: f64,
    pub e_gamma: f64,
    /// `(1−e_β)(1−e_γ) L`.
    pub scaled: f64,
    /// Output label to register value.
    pub coarse_graining: Vec<(String, String)>,
}

impl RandomnessBoundReport {
    /// Bound obtained by conditioning on all three sources succeeding.
    pub fn naive(&self, e_alpha: f64) -> f64 {
        (1.0 - e_alpha) * self.scaled
    }
}

pub fn scaled_randomness_bound(theta: f64, e_beta: f64, e_gamma: f64) -> Result<RandomnessBoundReport> {
    RGB4Params::new(theta)?;
    for (what, e) in [("e_beta", e_beta), ("e_gamma", e_gamma)] {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::OutOfRange { what, value: e });
        }
    }
    let r_lower = r_lower_bound(theta);
    let l = entropy_bound_l(r_lower.max(0.0))?;
    let mut coarse_graining: Vec<(String, String)> = LABELS
        .iter()
        .map(|l| (String::from(*l), coarse_grain(&Outcome::label(*l)).to_string()))
        .collect();
    coarse_graining.push((Outcome::Fail.to_string(), Outcome::Fail.to_string()));
    Ok(RandomnessBoundReport {
        theta,
        r_lower,
        l,
        e_beta,
        e_gamma,
        scaled: (1.0 - e_beta) * (1.0 - e_gamma) * l,
        coarse_graining,
    })
}

/// RGB4 behind independently failing sources, together with its Finner report.
///
/// Fails if the overlay is not saturated or its conclusive part differs from
/// RGB4, neither of which can happen short of a numerical fault.
pub fn failing_rgb4(theta: f64, e: &FailureProbabilities) -> Result<(OutcomeDistribution, FinnerReport)> {
    let ideal = rgb4_distribution(theta)?;
    let graph = NetworkGraph::triangle();
    let dist = overlay_distribution(&ideal, &graph, e)?;
    let report = finner_check(&dist, &graph)?;
    if !report.saturated {
        return Err(Error::InvalidDistribution(alloc::format!("overlay not saturated, slack {}", report.slack)));
    }
    if dist.all_conclusive_probability() > 0.0 {
        let (cond, _) = dist.conditional_on_conclusive()?;
        let diff = ideal.max_abs_diff(&cond).unwrap_or(f64::INFINITY);
        if diff > CHECK_TOL {
            return Err(Error::InvalidDistribution(alloc::format!("conditional differs from RGB4 by {diff}")));
        }
    }
    Ok((dist, report))
}

/// Flag-qubit embedding of the realization with failure probabilities `e`.
pub fn failing_rgb4_model(theta: f64, e: &FailureProbabilities) -> Result<QuantumNetworkModel> {
    flag_qubit_model(&rgb4_realization(theta)?, e, None)
}

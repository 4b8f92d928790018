//! Photonic CHSH test with a polarization-entangled SPDC source and
//! non-photon-number-resolving detectors.
//!
//! Detector statistics follow from vacuum projections of the Gaussian state
//! `√𝒩 exp(a†ᵀ M b†)|0⟩`, which reduce to 2×2 determinants.

mod optimize;

pub use optimize::{
    decode, evaluate, finish, linspace, optimize, phase_gain, run_restart, scan, scan_point, select_best, Objective,
    OptimizationResult, OptimizeConfig, PumpMode, RestartRecord, ScanRow,
};

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::distribution::{Outcome, OutcomeDistribution};
use crate::entropy::binary_entropy;
use crate::error::{Error, Result};
use crate::network::{dress_inputs, NetworkGraph};

pub type Mat2 = Matrix2<Complex64>;

/// Pattern labels, indexed by `h + 2 v` with `1` meaning a click.
pub const PATTERNS: [&str; 4] = ["∘∘", "•∘", "∘•", "••"];

/// Local polarization rotation `R(θ, φ, ϕ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Setting {
    pub theta: f64,
    pub varphi: f64,
    /// Third phase; it only relabels `varphi` as far as the statistics go.
    #[cfg_attr(feature = "serde", serde(default))]
    pub phi: f64,
}

impl Setting {
    pub fn new(theta: f64, varphi: f64) -> Self {
        Self { theta, varphi, phi: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SPDCParams {
    pub t1: f64,
    pub t2: f64,
    pub alice: [Setting; 2],
    pub bob: [Setting; 2],
}

impl SPDCParams {
    pub fn new(t1: f64, t2: f64, alice: [Setting; 2], bob: [Setting; 2]) -> Result<Self> {
        for t in [t1, t2] {
            if !(0.0..1.0).contains(&t) {
                return Err(Error::OutOfRange { what: "pump parameter", value: t });
            }
        }
        Ok(Self { t1, t2, alice, bob })
    }

    /// Equal pump parameters and real rotations by the given angles.
    pub fn real(t: f64, alpha: [f64; 2], beta: [f64; 2]) -> Result<Self> {
        Self::new(t, t, alpha.map(|a| Setting::new(a, 0.0)), beta.map(|b| Setting::new(b, 0.0)))
    }

    /// Probability that one party (hence both) registers at least one click.
    pub fn success_probability(&self) -> f64 {
        1.0 - (1.0 - self.t1 * self.t1) * (1.0 - self.t2 * self.t2)
    }
}

pub fn rotation(s: &Setting) -> Mat2 {
    let (c, sn) = (libm::cos(s.theta), libm::sin(s.theta));
    let e = |x: f64| Complex64::new(libm::cos(x), libm::sin(x));
    Mat2::new(
        e(s.phi) * c,
        e(s.varphi) * sn,
        -e(-s.varphi) * sn,
        e(-s.phi) * c,
    )
}

/// `M = Rᵀ(α_x) diag(T1, T2) R(β_y)`.
pub fn mode_matrix(params: &SPDCParams, x: usize, y: usize) -> Mat2 {
    let t = Mat2::new(
        Complex64::new(params.t1, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(params.t2, 0.0),
    );
    rotation(&params.alice[x]).transpose() * t * rotation(&params.bob[y])
}

/// `⟨G_x ⊗ G_y ⊗ G_z ⊗ G_w⟩` on modes `(a_h, a_v, b_h, b_v)`, where `G_0` is
/// the vacuum projector and `G_1` the identity.
pub fn generating_term(m: &Mat2, t1: f64, t2: f64, x: bool, y: bool, z: bool, w: bool) -> Result<f64> {
    let f = |b: bool| Complex64::new(if b { 1.0 } else { 0.0 }, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let xa = Mat2::new(f(x), zero, zero, f(y));
    let zb = Mat2::new(f(z), zero, zero, f(w));
    let inner = Mat2::identity() - m.adjoint() * xa * m * zb;
    let den = inner.determinant().re;
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::InvalidRegime(den));
    }
    Ok((1.0 - t1 * t1) * (1.0 - t2 * t2) / den)
}

/// 4×4 block of pattern probabilities, Alice's pattern as row.
pub type ClickBlock = [[f64; 4]; 4];

/// Click-pattern probabilities for settings `(x, y)` by inclusion–exclusion
/// over the sixteen generating terms.
pub fn click_probabilities(params: &SPDCParams, x: usize, y: usize) -> Result<ClickBlock> {
    let m = mode_matrix(params, x, y);
    let mut g = [0.0; 16];
    for (sub, v) in g.iter_mut().enumerate() {
        *v = generating_term(&m, params.t1, params.t2, sub & 1 != 0, sub & 2 != 0, sub & 4 != 0, sub & 8 != 0)?;
    }
    let mut block = [[0.0; 4]; 4];
    let mut total = 0.0;
    for pattern in 0..16usize {
        let mut p = 0.0;
        // enumerate the subsets of `pattern`
        let mut sub = pattern;
        loop {
            let sign = if (pattern.count_ones() - sub.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
            p += sign * g[sub];
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & pattern;
        }
        block[pattern & 3][pattern >> 2] = p;
        total += p;
    }
    for row in block.iter_mut() {
        for p in row.iter_mut() {
            *p /= total;
        }
    }
    Ok(block)
}

/// Blocks for all four setting pairs, indexed `[x][y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClickTable {
    pub blocks: [[ClickBlock; 2]; 2],
}

impl ClickTable {
    pub fn new(params: &SPDCParams) -> Result<Self> {
        let mut blocks = [[[[0.0; 4]; 4]; 2]; 2];
        for (x, row) in blocks.iter_mut().enumerate() {
            for (y, b) in row.iter_mut().enumerate() {
                *b = click_probabilities(params, x, y)?;
            }
        }
        Ok(Self { blocks })
    }

    /// Conclusive probability mass of block `(x, y)`.
    pub fn conclusive_mass(&self, x: usize, y: usize) -> f64 {
        let b = &self.blocks[x][y];
        (1..4).flat_map(|a| (1..4).map(move |c| b[a][c])).sum()
    }
}

/// Output bit per detector pattern, fixed across a party's settings.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinningStrategy {
    /// Bits for the patterns `∘∘, •∘, ∘•, ••`, or `•∘, ∘•, ••` when post-selected.
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
}

/// All maps from `n` patterns to a bit that use both bit values.
pub fn binnings(n: usize) -> Vec<Vec<u8>> {
    (1..(1u32 << n) - 1)
        .map(|mask| (0..n).map(|k| (mask >> k & 1) as u8).collect())
        .collect()
}

fn signs(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect()
}

/// Blocks as used by the score: full, or restricted to conclusive patterns and
/// renormalized.
fn score_blocks(table: &ClickTable, postselected: bool) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut out = Vec::with_capacity(4);
    for x in 0..2 {
        for y in 0..2 {
            let b = &table.blocks[x][y];
            if postselected {
                let mass = table.conclusive_mass(x, y);
                if mass <= 0.0 {
                    return Err(Error::ZeroSuccess);
                }
                out.push((1..4).map(|a| (1..4).map(|c| b[a][c] / mass).collect()).collect());
            } else {
                out.push(b.iter().map(|r| r.to_vec()).collect());
            }
        }
    }
    Ok(out)
}

/// `Σ_{x,y} (−1)^{xy} Σ_{a,b} (−1)^{a+b} P(a, b | x, y)` after binning.
pub fn chsh_score(table: &ClickTable, binning: &BinningStrategy, postselected: bool) -> Result<f64> {
    let n = if postselected { 3 } else { 4 };
    if binning.alice.len() != n || binning.bob.len() != n {
        return Err(Error::DimensionMismatch(alloc::format!("binning must cover {n} patterns")));
    }
    let blocks = score_blocks(table, postselected)?;
    Ok(score(&blocks, &signs(&binning.alice), &signs(&binning.bob)))
}

fn score(blocks: &[Vec<Vec<f64>>], sa: &[f64], sb: &[f64]) -> f64 {
    let mut s = 0.0;
    for (k, b) in blocks.iter().enumerate() {
        let sign = if k == 3 { -1.0 } else { 1.0 };
        let mut v = 0.0;
        for (a, row) in b.iter().enumerate() {
            for (c, p) in row.iter().enumerate() {
                v += sa[a] * p * sb[c];
            }
        }
        s += sign * v;
    }
    s
}

/// Largest CHSH value over all binning strategies; ties keep the first found.
pub fn best_chsh(table: &ClickTable, postselected: bool) -> Result<(f64, BinningStrategy)> {
    let n = if postselected { 3 } else { 4 };
    let blocks = score_blocks(table, postselected)?;
    let maps = binnings(n);
    let sign_maps: Vec<Vec<f64>> = maps.iter().map(|m| signs(m)).collect();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, sa) in sign_maps.iter().enumerate() {
        for (k, sb) in sign_maps.iter().enumerate() {
            let v = score(&blocks, sa, sb);
            if v > best.0 {
                best = (v, i, k);
            }
        }
    }
    Ok((best.0, BinningStrategy { alice: maps[best.1].clone(), bob: maps[best.2].clone() }))
}

/// `1 − h((1 + √((S/2)² − 1))/2)` bits, zero for `S ≤ 2`.
pub fn randomness_rate(s: f64) -> f64 {
    if s <= 2.0 {
        return 0.0;
    }
    let q = libm::sqrt(((s / 2.0) * (s / 2.0) - 1.0).max(0.0));
    1.0 - binary_entropy(((1.0 + q) / 2.0).min(1.0))
}

/// Rate of the post-selected test per round, counting discarded rounds.
pub fn postselected_randomness_rate(s: f64, t1: f64, t2: f64) -> f64 {
    randomness_rate(s) * (1.0 - (1.0 - t1 * t1) * (1.0 - t2 * t2))
}

/// The Bell test as a network without inputs: parties are Alice, Bob and the
/// two setting announcers; a party outputs `∅` on the pattern `∘∘`.
pub fn dressed_distribution(params: &SPDCParams) -> Result<(NetworkGraph, OutcomeDistribution)> {
    let graph = dress_inputs(&[2, 2])?;
    let table = ClickTable::new(params)?;
    let clicks: Vec<Outcome> = core::iter::once(Outcome::Fail)
        .chain(PATTERNS[1..].iter().map(|p| Outcome::label(String::from(*p))))
        .collect();
    let settings = crate::distribution::numeric_alphabet(2);
    let alphabets = vec![clicks.clone(), clicks, settings.clone(), settings];
    let mut probs = vec![0.0; 4 * 4 * 2 * 2];
    for a in 0..4 {
        for b in 0..4 {
            for x in 0..2 {
                for y in 0..2 {
                    probs[((a * 4 + b) * 2 + x) * 2 + y] = table.blocks[x][y][a][b] / 4.0;
                }
            }
        }
    }
    Ok((graph, OutcomeDistribution::new(alphabets, probs)?))
}

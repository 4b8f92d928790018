//! Click statistics of the two-photon-pair SPDC state by direct expansion in
//! a truncated Fock basis.
//!
//! The state `√N exp(Σ_kl M_kl a_k† b_l†)|0⟩` is expanded term by term: the
//! amplitude of `|p, q⟩_A |r, s⟩_B` is
//! `√N √(p! q! r! s!) Σ_k ∏_kl M_kl^{n_kl} / n_kl!` with `n_hh = k`,
//! `n_hv = p − k`, `n_vh = r − k`, `n_vv = q − r + k`.

use num_complex::Complex64;

/// `(θ, φ, ϕ)` of a polarization rotation.
pub type Angles = (f64, f64, f64);

pub type Block = [[f64; 4]; 4];

fn rotation((theta, varphi, phi): Angles) -> [[Complex64; 2]; 2] {
    let e = |x: f64| Complex64::from_polar(1.0, x);
    let (c, s) = (theta.cos(), theta.sin());
    [[e(phi) * c, e(varphi) * s], [-e(-varphi) * s, e(-phi) * c]]
}

/// `Rᵀ_A diag(t1, t2) R_B`, rows Alice's `(h, v)`, columns Bob's.
pub fn pair_matrix(t1: f64, t2: f64, alice: Angles, bob: Angles) -> [[Complex64; 2]; 2] {
    let ra = rotation(alice);
    let rb = rotation(bob);
    let t = [t1, t2];
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (k, row) in m.iter_mut().enumerate() {
        for (l, v) in row.iter_mut().enumerate() {
            for j in 0..2 {
                *v += ra[j][k] * t[j] * rb[j][l];
            }
        }
    }
    m
}

/// Click-pattern probabilities from all terms with at most `nmax` pairs.
///
/// Pattern index is `h + 2v` per party. Nothing is renormalized; the missing
/// mass is `1 − Σ block`.
pub fn click_block(t1: f64, t2: f64, alice: Angles, bob: Angles, nmax: usize) -> Block {
    let m = pair_matrix(t1, t2, alice, bob);
    let norm = (1.0 - t1 * t1) * (1.0 - t2 * t2);
    let mut fact = vec![1.0f64; nmax + 1];
    for n in 1..=nmax {
        fact[n] = fact[n - 1] * n as f64;
    }
    // pow[kl][n] = M_kl^n / n!
    let pw: Vec<Vec<Complex64>> = [m[0][0], m[0][1], m[1][0], m[1][1]]
        .iter()
        .map(|&z| {
            let mut v = vec![Complex64::new(1.0, 0.0); nmax + 1];
            for n in 1..=nmax {
                v[n] = v[n - 1] * z / n as f64;
            }
            v
        })
        .collect();
    let mut block = [[0.0; 4]; 4];
    for n in 0..=nmax {
        for p in 0..=n {
            let q = n - p;
            for r in 0..=n {
                let s = n - r;
                let lo = r.saturating_sub(q);
                let hi = p.min(r);
                let mut amp = Complex64::new(0.0, 0.0);
                for k in lo..=hi {
                    amp += pw[0][k] * pw[1][p - k] * pw[2][r - k] * pw[3][q + k - r];
                }
                let weight = norm * fact[p] * fact[q] * fact[r] * fact[s];
                let pa = usize::from(p > 0) + 2 * usize::from(q > 0);
                let pb = usize::from(r > 0) + 2 * usize::from(s > 0);
                block[pa][pb] += weight * amp.norm_sqr();
            }
        }
    }
    block
}

/// Probability mass not captured by `click_block` at cutoff `nmax`.
pub fn tail_mass(block: &Block) -> f64 {
    1.0 - block.iter().flatten().sum::<f64>()
}

/// Pair-number distribution bound: mass beyond `nmax` pairs, computed from the
/// two independent thermal modes of the Schmidt form.
pub fn thermal_tail(t1: f64, t2: f64, nmax: usize) -> f64 {
    let (a, b) = (t1 * t1, t2 * t2);
    let mut kept = 0.0;
    for n1 in 0..=nmax {
        for n2 in 0..=(nmax - n1) {
            kept += (1.0 - a) * a.powi(n1 as i32) * (1.0 - b) * b.powi(n2 as i32);
        }
    }
    1.0 - kept
}

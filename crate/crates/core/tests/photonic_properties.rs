//! Invariants of the SPDC click model and the triangle RGB4 example.

use std::f64::consts::{FRAC_PI_4, SQRT_2, TAU};

use failnet_core::failing::FailureProbabilities;
use failnet_core::finner::{finner_check, rigidity_verify, SATURATION_TOL};
use failnet_core::rgb4::{
    coarse_grained_marginal, entropy_bound_l, failing_rgb4, failing_rgb4_model, r_lower_bound, rgb4_distribution,
    rgb4_realization, scaled_randomness_bound, RGB4Params, LABELS,
};
use failnet_core::spdc::{best_chsh, binnings, chsh_score, dressed_distribution, BinningStrategy, ClickTable, SPDCParams, Setting};
use proptest::prelude::*;

fn setting() -> impl Strategy<Value = Setting> {
    (0.0..TAU, 0.0..TAU, 0.0..TAU).prop_map(|(theta, varphi, phi)| Setting { theta, varphi, phi })
}

fn params() -> impl Strategy<Value = SPDCParams> {
    (0.05..0.999f64, 0.05..0.999f64, setting(), setting(), setting(), setting())
        .prop_map(|(t1, t2, a0, a1, b0, b1)| SPDCParams::new(t1, t2, [a0, a1], [b0, b1]).unwrap())
}

fn max_block_diff(a: &ClickTable, b: &ClickTable) -> f64 {
    let mut worst = 0.0f64;
    for x in 0..2 {
        for y in 0..2 {
            for i in 0..4 {
                for j in 0..4 {
                    worst = worst.max((a.blocks[x][y][i][j] - b.blocks[x][y][i][j]).abs());
                }
            }
        }
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn blocks_are_distributions(p in params()) {
        let table = ClickTable::new(&p).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let b = &table.blocks[x][y];
                let total: f64 = b.iter().flatten().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                prop_assert!(b.iter().flatten().all(|&v| v >= -1e-12));
            }
        }
    }

    #[test]
    fn third_angle_trades_against_second(p in params(), shift in -3.0..3.0f64, who in 0usize..4) {
        let mut q = p;
        let s = if who < 2 { &mut q.alice[who] } else { &mut q.bob[who - 2] };
        s.varphi += shift;
        s.phi -= shift;
        let d = max_block_diff(&ClickTable::new(&p).unwrap(), &ClickTable::new(&q).unwrap());
        prop_assert!(d < 1e-12, "{}", d);
    }

    #[test]
    fn vacuum_is_shared(p in params()) {
        let table = ClickTable::new(&p).unwrap();
        let vacuum = (1.0 - p.t1 * p.t1) * (1.0 - p.t2 * p.t2);
        for x in 0..2 {
            for y in 0..2 {
                let b = &table.blocks[x][y];
                let alice: f64 = b[0].iter().sum();
                let bob: f64 = b.iter().map(|r| r[0]).sum();
                prop_assert!((b[0][0] - vacuum).abs() < 1e-12);
                prop_assert!((alice - b[0][0]).abs() < 1e-12 && (bob - b[0][0]).abs() < 1e-12);
            }
        }
        let (graph, dist) = dressed_distribution(&p).unwrap();
        let r = finner_check(&dist, &graph).unwrap();
        prop_assert!(r.saturated, "slack {}", r.slack);
        prop_assert!((r.lhs - (1.0 - vacuum)).abs() < 1e-12);
    }

    #[test]
    fn chsh_respects_tsirelson(p in params()) {
        let table = ClickTable::new(&p).unwrap();
        for postselected in [false, true] {
            let n = if postselected { 3 } else { 4 };
            let maps = binnings(n);
            for a in &maps {
                for b in &maps {
                    let s = chsh_score(&table, &BinningStrategy { alice: a.clone(), bob: b.clone() }, postselected).unwrap();
                    prop_assert!(s.abs() <= 2.0 * SQRT_2 + 1e-9, "{}", s);
                }
            }
            let (best, binning) = best_chsh(&table, postselected).unwrap();
            prop_assert!(best <= 2.0 * SQRT_2 + 1e-9);
            prop_assert_eq!(chsh_score(&table, &binning, postselected).unwrap(), best);
        }
    }
}

fn grid() -> Vec<f64> {
    (0..20).map(|k| FRAC_PI_4 * k as f64 / 19.0).collect()
}

#[test]
fn realization_reproduces_every_listed_entry() {
    for theta in grid() {
        let q = rgb4_realization(theta).unwrap().joint_distribution().unwrap();
        let table = rgb4_distribution(theta).unwrap();
        assert!(q.max_abs_diff(&table).unwrap() < 1e-12, "θ = {theta}");
        let RGB4Params { u, v, .. } = RGB4Params::new(theta).unwrap();
        let one = |i: usize| LABELS[1 + i];
        let p = |a: &str, b: &str, c: &str| q.prob_of(&[a, b, c]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let amp = u[i] * u[j] * u[k] + v[i] * v[j] * v[k];
                    assert!((p(one(i), one(j), one(k)) - amp * amp / 8.0).abs() < 1e-12);
                }
            }
            let (uu, vv) = (u[i] * u[i] / 8.0, v[i] * v[i] / 8.0);
            for (a, b, c, want) in [
                (one(i), "0", "2", uu),
                ("2", one(i), "0", uu),
                ("0", "2", one(i), uu),
                (one(i), "2", "0", vv),
                ("0", one(i), "2", vv),
                ("2", "0", one(i), vv),
            ] {
                assert!((p(a, b, c) - want).abs() < 1e-12, "θ = {theta}: P({a},{b},{c})");
            }
        }
    }
}

#[test]
fn coarse_register_is_uniform_given_conclusive() {
    let e = FailureProbabilities::new(vec![0.15, 0.3, 0.05]).unwrap();
    for theta in grid() {
        let (dist, report) = failing_rgb4(theta, &e).unwrap();
        assert!(report.saturated);
        let (cond, _) = dist.conditional_on_conclusive().unwrap();
        for party in 0..3 {
            let m = coarse_grained_marginal(&cond, party).unwrap();
            assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12 && m[2] == 0.0, "{m:?}");
        }
        // A is fed by β and γ
        let m = coarse_grained_marginal(&dist, 0).unwrap();
        assert!((m[0] + m[1] - 0.7 * 0.95).abs() < 1e-12);
    }
}

#[test]
fn entropy_bound_is_monotone() {
    let mut prev = entropy_bound_l(0.0).unwrap();
    for k in 1..=400 {
        let l = entropy_bound_l(0.25 * k as f64 / 400.0).unwrap();
        assert!(l >= prev - 1e-15, "L decreases at step {k}");
        prev = l;
    }
    assert!((prev - 1.0).abs() < 1e-12);
}

#[test]
fn scaled_bound_is_capped_by_l() {
    for theta in grid() {
        let r = scaled_randomness_bound(theta, 0.2, 0.1).unwrap();
        assert!(r.scaled >= 0.0 && r.scaled <= r.l + 1e-15);
        assert!((r.r_lower - r_lower_bound(theta)).abs() < 1e-15);
        assert!(r.naive(0.3) <= r.scaled);
    }
}

#[test]
fn flagged_realization_is_rigid() {
    let e = FailureProbabilities::new(vec![0.1, 0.25, 0.4]).unwrap();
    for theta in [0.0, 0.26, FRAC_PI_4] {
        let model = failing_rgb4_model(theta, &e).unwrap();
        let (overlay, _) = failing_rgb4(theta, &e).unwrap();
        let dist = model.joint_distribution().unwrap();
        assert!(dist.max_abs_diff(&overlay).unwrap() < 1e-10);
        let v = rigidity_verify(&model, SATURATION_TOL).unwrap();
        assert!(v.rigid, "θ = {theta}: {v:?}");
    }
}

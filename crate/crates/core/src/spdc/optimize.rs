//! Multi-start simplex search over pump parameters, rotation angles and
//! binning strategies.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{best_chsh, randomness_rate, BinningStrategy, ClickTable, SPDCParams, Setting};
use crate::error::Result;
use crate::optim::{nelder_mead, NelderMeadOptions};

/// Largest pump parameter reachable by the search.
const T_MAX: f64 = 0.999;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Objective {
    StandardChsh,
    StandardRandomness,
    PsChsh,
    PsRandomness,
}

impl Objective {
    pub fn postselected(self) -> bool {
        matches!(self, Objective::PsChsh | Objective::PsRandomness)
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::StandardChsh => "standard_chsh",
            Objective::StandardRandomness => "standard_randomness",
            Objective::PsChsh => "ps_chsh",
            Objective::PsRandomness => "ps_randomness",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Objective::StandardChsh, Objective::StandardRandomness, Objective::PsChsh, Objective::PsRandomness]
            .into_iter()
            .find(|o| o.name() == s)
    }
}

/// How the pump parameters are searched.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PumpMode {
    /// `T1 = T2` free; Bob's first angle fixed to 0.
    Equal,
    /// `T1`, `T2` and all four angles free.
    Free,
    /// `T1 = T2 = T` held fixed; Bob's first angle fixed to 0.
    Fixed(f64),
}

impl PumpMode {
    fn pumps(self) -> usize {
        match self {
            PumpMode::Equal => 1,
            PumpMode::Free => 2,
            PumpMode::Fixed(_) => 0,
        }
    }

    fn angles(self) -> usize {
        match self {
            PumpMode::Free => 4,
            _ => 3,
        }
    }

    /// Length of the search vector.
    pub fn dimension(self, phases: bool) -> usize {
        self.pumps() + self.angles() + if phases { 4 } else { 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeConfig {
    pub objective: Objective,
    pub pump: PumpMode,
    pub seed: u64,
    pub restarts: usize,
    /// Search the phases `φ` too; real rotations otherwise.
    pub phases: bool,
    pub simplex: NelderMeadOptions,
}

impl OptimizeConfig {
    pub fn new(objective: Objective, pump: PumpMode, seed: u64, restarts: usize) -> Self {
        Self {
            objective,
            pump,
            seed,
            restarts,
            phases: true,
            simplex: NelderMeadOptions { step: 0.5, ..Default::default() },
        }
    }

    pub fn real_rotations(mut self) -> Self {
        self.phases = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RestartRecord {
    pub index: usize,
    pub value: f64,
    pub x: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OptimizationResult {
    pub objective: Objective,
    pub pump: PumpMode,
    pub params: SPDCParams,
    /// Objective value re-evaluated from `params`.
    pub value: f64,
    /// CHSH score of the relevant (standard or post-selected) statistics.
    pub chsh: f64,
    pub binning: BinningStrategy,
    /// Conclusive probability in post-selected mode.
    pub success_probability: Option<f64>,
    pub randomness: f64,
    pub seed: u64,
    pub best_restart: usize,
    pub restarts: Vec<RestartRecord>,
}

/// Parameters encoded by a search vector.
///
/// Layout: pump coordinates `u` with `T = 0.999 sin²u`, then the angles
/// `α₀, α₁, (β₀,) β₁`, then optionally the phases of `α₀, α₁, β₀, β₁`.
pub fn decode(pump: PumpMode, phases: bool, x: &[f64]) -> SPDCParams {
    let t = |u: f64| T_MAX * libm::sin(u) * libm::sin(u);
    let (t1, t2, a0, a1, b0, b1) = match pump {
        PumpMode::Equal => (t(x[0]), t(x[0]), x[1], x[2], 0.0, x[3]),
        PumpMode::Free => (t(x[0]), t(x[1]), x[2], x[3], x[4], x[5]),
        PumpMode::Fixed(v) => (v, v, x[0], x[1], 0.0, x[2]),
    };
    let k = pump.pumps() + pump.angles();
    let ph = if phases { [x[k], x[k + 1], x[k + 2], x[k + 3]] } else { [0.0; 4] };
    SPDCParams {
        t1,
        t2,
        alice: [Setting::new(a0, ph[0]), Setting::new(a1, ph[1])],
        bob: [Setting::new(b0, ph[2]), Setting::new(b1, ph[3])],
    }
}

/// Objective value, CHSH score and binning at `params`.
pub fn evaluate(objective: Objective, params: &SPDCParams) -> Result<(f64, f64, BinningStrategy)> {
    let table = ClickTable::new(params)?;
    let (s, binning) = best_chsh(&table, objective.postselected())?;
    let value = match objective {
        Objective::StandardChsh | Objective::PsChsh => s,
        Objective::StandardRandomness => randomness_rate(s),
        Objective::PsRandomness => randomness_rate(s) * params.success_probability(),
    };
    Ok((value, s, binning))
}

/// Continuous stand-in for the flat zero-rate region below `S = 2`.
fn search_value(objective: Objective, params: &SPDCParams) -> f64 {
    let Ok((value, s, _)) = evaluate(objective, params) else {
        return f64::NEG_INFINITY;
    };
    match objective {
        Objective::StandardRandomness if s <= 2.0 => s - 2.0,
        Objective::PsRandomness if s <= 2.0 => (s - 2.0) * params.success_probability(),
        _ => value,
    }
}

/// One seeded local search; depends only on the configuration and `index`.
pub fn run_restart(cfg: &OptimizeConfig, index: usize) -> RestartRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let dim = cfg.pump.dimension(cfg.phases);
    let pumps = cfg.pump.pumps();
    let x0: Vec<f64> = (0..dim)
        .map(|k| if k < pumps { rng.random_range(0.0..FRAC_PI_2) } else { rng.random_range(0.0..TAU) })
        .collect();
    let m = nelder_mead(|x| -search_value(cfg.objective, &decode(cfg.pump, cfg.phases, x)), &x0, &cfg.simplex);
    let value = evaluate(cfg.objective, &decode(cfg.pump, cfg.phases, &m.x)).map(|v| v.0).unwrap_or(f64::NEG_INFINITY);
    RestartRecord { index, value, x: m.x, evaluations: m.evaluations, converged: m.converged }
}

/// Index into `records` of the largest value; ties go to the lowest restart index.
pub fn select_best(records: &[RestartRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, r) in records.iter().enumerate() {
        match best {
            None => best = Some(k),
            Some(b) => {
                let rb = &records[b];
                if r.value > rb.value || (r.value == rb.value && r.index < rb.index) {
                    best = Some(k);
                }
            }
        }
    }
    best
}

/// Assembles the result from finished restarts.
pub fn finish(cfg: &OptimizeConfig, mut records: Vec<RestartRecord>) -> Result<OptimizationResult> {
    records.sort_by_key(|r| r.index);
    let best = select_best(&records).ok_or(crate::error::Error::OutOfRange { what: "restarts", value: 0.0 })?;
    let mut params = decode(cfg.pump, cfg.phases, &records[best].x);
    for s in params.alice.iter_mut().chain(params.bob.iter_mut()) {
        s.theta = wrap(s.theta);
        s.varphi = wrap(s.varphi);
    }
    let (value, chsh, binning) = evaluate(cfg.objective, &params)?;
    let post = cfg.objective.postselected();
    Ok(OptimizationResult {
        objective: cfg.objective,
        pump: cfg.pump,
        params,
        value,
        chsh,
        binning,
        success_probability: post.then(|| params.success_probability()),
        randomness: if post {
            randomness_rate(chsh) * params.success_probability()
        } else {
            randomness_rate(chsh)
        },
        seed: cfg.seed,
        best_restart: records[best].index,
        restarts: records,
    })
}

/// Optimum with phases minus optimum over real rotations, same seed and restarts.
pub fn phase_gain(cfg: &OptimizeConfig) -> Result<f64> {
    let mut with = cfg.clone();
    with.phases = true;
    let without = cfg.clone().real_rotations();
    Ok(optimize(&with)?.value - optimize(&without)?.value)
}

fn wrap(x: f64) -> f64 {
    x - TAU * libm::floor(x / TAU)
}

/// Runs every restart in order and keeps the best.
pub fn optimize(cfg: &OptimizeConfig) -> Result<OptimizationResult> {
    let records = (0..cfg.restarts.max(1)).map(|k| run_restart(cfg, k)).collect();
    finish(cfg, records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScanRow {
    pub t: f64,
    pub standard_chsh: f64,
    pub ps_chsh: f64,
    pub standard_rate: f64,
    pub ps_rate: f64,
}

/// Optimal standard and post-selected CHSH and rates at `T1 = T2 = t`.
pub fn scan_point(t: f64, seed: u64, restarts: usize, phases: bool) -> Result<ScanRow> {
    let cfg = |objective| {
        let c = OptimizeConfig::new(objective, PumpMode::Fixed(t), seed, restarts);
        if phases { c } else { c.real_rotations() }
    };
    let std = optimize(&cfg(Objective::StandardChsh))?;
    let ps = optimize(&cfg(Objective::PsChsh))?;
    Ok(ScanRow {
        t,
        standard_chsh: std.chsh,
        ps_chsh: ps.chsh,
        standard_rate: randomness_rate(std.chsh),
        ps_rate: super::postselected_randomness_rate(ps.chsh, t, t),
    })
}

pub fn scan(grid: &[f64], seed: u64, restarts: usize, phases: bool) -> Result<Vec<ScanRow>> {
    grid.iter().map(|&t| scan_point(t, seed, restarts, phases)).collect()
}

/// `steps` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn restarts_are_reproducible() {
        let cfg = OptimizeConfig::new(Objective::StandardChsh, PumpMode::Fixed(0.5), 7, 2);
        assert_eq!(run_restart(&cfg, 1), run_restart(&cfg, 1));
        assert_ne!(run_restart(&cfg, 0).x, run_restart(&cfg, 1).x);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let r = |index, value| RestartRecord { index, value, x: vec![], evaluations: 0, converged: true };
        assert_eq!(select_best(&[r(2, 1.0), r(0, 1.0), r(1, 0.5)]), Some(1));
    }

    #[test]
    fn small_pump_postselected_chsh() {
        let cfg = OptimizeConfig::new(Objective::PsChsh, PumpMode::Fixed(0.05), 1, 4);
        let r = optimize(&cfg).unwrap();
        assert!(r.chsh >= 2.80, "{}", r.chsh);
    }
}

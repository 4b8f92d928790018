//! Rayon drivers for the optimizer. Results match the sequential ones bit for
//! bit: every restart is seeded by its index and selection is order-free.

use failnet_core::spdc::{
    finish, postselected_randomness_rate, randomness_rate, run_restart, OptimizationResult, OptimizeConfig, Objective,
    PumpMode, ScanRow,
};
use rayon::prelude::*;

use crate::error::Result;

pub fn optimize(cfg: &OptimizeConfig) -> Result<OptimizationResult> {
    let records = (0..cfg.restarts.max(1)).into_par_iter().map(|k| run_restart(cfg, k)).collect();
    Ok(finish(cfg, records)?)
}

/// Optimum over real rotations for the same search, and the gain of `with` over it.
pub fn phase_gain(with: &OptimizationResult, cfg: &OptimizeConfig) -> Result<(f64, f64)> {
    let real = optimize(&cfg.clone().real_rotations())?;
    Ok((real.value, with.value - real.value))
}

/// Optimal standard and post-selected CHSH at `T1 = T2 = t` for every grid point.
pub fn scan(grid: &[f64], seed: u64, restarts: usize, phases: bool) -> Result<Vec<ScanRow>> {
    let cfg = |objective, t| {
        let c = OptimizeConfig::new(objective, PumpMode::Fixed(t), seed, restarts);
        if phases { c } else { c.real_rotations() }
    };
    grid.par_iter()
        .map(|&t| {
            let std = optimize(&cfg(Objective::StandardChsh, t))?;
            let ps = optimize(&cfg(Objective::PsChsh, t))?;
            Ok(ScanRow {
                t,
                standard_chsh: std.chsh,
                ps_chsh: ps.chsh,
                standard_rate: randomness_rate(std.chsh),
                ps_rate: postselected_randomness_rate(ps.chsh, t, t),
            })
        })
        .collect()
}

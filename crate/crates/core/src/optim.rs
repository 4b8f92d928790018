//! Nelder–Mead simplex minimization.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Initial simplex edge length.
    pub step: f64,
    /// Stop once every vertex is within this distance of the best one.
    pub x_tol: f64,
    pub max_evals: usize,
    /// Fresh simplices built around the current best point after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { step: 0.3, x_tol: 1e-9, max_evals: 20_000, restarts: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0`. Non-finite values are treated as `+∞`.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let n = x0.len();
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };
    let mut evaluations = 0;
    let mut best_x = x0.to_vec();
    let mut best_v = eval(x0, &mut evaluations);
    if n == 0 {
        return Minimum { x: best_x, value: best_v, evaluations, converged: true };
    }
    let mut converged = false;
    for _ in 0..=opts.restarts {
        let mut simplex: Vec<Vec<f64>> = vec![best_x.clone()];
        let mut values = vec![best_v];
        for k in 0..n {
            let mut p = best_x.clone();
            p[k] += opts.step;
            values.push(eval(&p, &mut evaluations));
            simplex.push(p);
        }
        converged = false;
        while evaluations < opts.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();
            let diameter = simplex[1..]
                .iter()
                .map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if diameter < opts.x_tol {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for p in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(p) {
                    *c += x / n as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (w - c)).collect()
            };
            let xr = along(-1.0);
            let fr = eval(&xr, &mut evaluations);
            if fr < values[0] {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evaluations);
                if fe < fr {
                    simplex[n] = xe;
                    values[n] = fe;
                } else {
                    simplex[n] = xr;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = xr;
                values[n] = fr;
            } else {
                let (xc, fc) = if fr < values[n] {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut evaluations);
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut evaluations);
                    (xc, fc)
                };
                if fc < values[n].min(fr) {
                    simplex[n] = xc;
                    values[n] = fc;
                } else {
                    for k in 1..=n {
                        let p: Vec<f64> =
                            simplex[0].iter().zip(&simplex[k]).map(|(b, x)| b + 0.5 * (x - b)).collect();
                        values[k] = eval(&p, &mut evaluations);
                        simplex[k] = p;
                    }
                }
            }
        }
        let k = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("nonempty");
        let improved = values[k] < best_v;
        if values[k] <= best_v {
            best_v = values[k];
            best_x = simplex[k].clone();
        }
        if evaluations >= opts.max_evals || (!improved && converged) {
            break;
        }
    }
    Minimum { x: best_x, value: best_v, evaluations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6, "{m:?}");
        assert!(m.converged);
    }

    #[test]
    fn quadratic_in_five_dimensions() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(k, v)| (k as f64 + 1.0) * (v - 0.5).powi(2)).sum::<f64>();
        let m = nelder_mead(f, &[0.0; 5], &NelderMeadOptions::default());
        assert!(m.value < 1e-14, "{m:?}");
    }
}

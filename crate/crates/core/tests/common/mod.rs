//! Brute-force and independent oracles shared by the integration tests.
#![allow(dead_code)]

use covert_aoi::solver::{aoi_subproblem, AoiOutcome};
use covert_aoi::{PowerAllocation, ScenarioConfig};
use microlp::{ComparisonOp, OptimizationDirection, Problem};

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Solves `min (1/K) Σ d_k  s.t.  d_k R_k ≥ S/B,  0 ≤ d_k ≤ τ − δ` with a
/// generic simplex solver. Variables are scaled to `u_k = d_k / (τ − δ)`.
pub fn lp_min_aoi(rates: &[f64], cfg: &ScenarioConfig) -> Option<Vec<f64>> {
    let window = cfg.usable_slot_time();
    let k = rates.len() as f64;
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = rates.iter().map(|_| lp.add_var(1.0 / k, (0.0, 1.0))).collect();
    for (&v, &r) in vars.iter().zip(rates) {
        lp.add_constraint([(v, r * window)], ComparisonOp::Ge, cfg.bits_per_hz());
    }
    let sol = lp.solve().ok()?;
    Some(vars.iter().map(|&v| sol[v] * window).collect())
}

/// Brute-force maximum of `f` over the simplex `{x ≥ 0, Σx ≤ 1}`: an
/// exhaustive grid at resolution `1/steps`, then `zoom` levels of a 10x
/// finer local grid that follows the incumbent until it stops moving.
pub fn simplex_max(k: usize, steps: usize, zoom: usize, f: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let mut best = (f64::NEG_INFINITY, vec![0.0; k]);
    let mut idx = vec![0usize; k];
    'grid: loop {
        if idx.iter().sum::<usize>() <= steps {
            let x: Vec<f64> = idx.iter().map(|&i| i as f64 / steps as f64).collect();
            let v = f(&x);
            if v > best.0 {
                best = (v, x);
            }
        }
        let mut pos = 0;
        loop {
            if pos == k {
                break 'grid;
            }
            idx[pos] += 1;
            if idx.iter().sum::<usize>() <= steps {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
    let mut h = 1.0 / steps as f64;
    for _ in 0..zoom {
        let fine = h / 10.0;
        let span = 20i64;
        loop {
            let center = best.1.clone();
            let before = best.0;
            let mut off = vec![-span; k];
            'local: loop {
                let x: Vec<f64> = center.iter().zip(&off).map(|(c, &o)| c + o as f64 * fine).collect();
                if x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0 {
                    let v = f(&x);
                    if v > best.0 {
                        best = (v, x);
                    }
                }
                let mut pos = 0;
                loop {
                    if pos == k {
                        break 'local;
                    }
                    off[pos] += 1;
                    if off[pos] <= span {
                        break;
                    }
                    off[pos] = -span;
                    pos += 1;
                }
            }
            if best.0 <= before {
                break;
            }
        }
        h = fine;
    }
    best
}

/// Smallest exact average AoI over `{p ≥ 0, Σp ≤ budget}`, searched on a
/// `budget/200` grid and then `zoom` refinement levels.
pub fn grid_min_avg_aoi(sorted_gains: &[f64], budget: f64, cfg: &ScenarioConfig, zoom: usize) -> f64 {
    let (v, _) = simplex_max(sorted_gains.len(), 200, zoom, |x| {
        let p = PowerAllocation::new(x.iter().map(|v| v * budget).collect());
        match aoi_subproblem(&p, sorted_gains, cfg) {
            AoiOutcome::Feasible(d) => -d.average(),
            AoiOutcome::Infeasible { .. } => f64::NEG_INFINITY,
        }
    });
    -v
}

/// Log-uniform draw on `[lo, hi]`.
pub fn log_uniform<R: rand::Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

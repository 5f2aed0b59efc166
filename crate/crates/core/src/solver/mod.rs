//! Alternating AoI / power optimizer.
//!
//! For fixed powers the AoI problem is a separable LP whose optimum is
//! `d_k = S / (B·R_k)`. For fixed anchors the power problem is made convex
//! by replacing each rate with its first-order lower bound
//! ([`crate::noma::linearized_rate`]); re-anchoring at the new iterate
//! gives a successive convex approximation that never loses feasibility.
//!
//! Two convex power programs are used:
//!
//! * [`power_subproblem`] maximizes the smallest delivery slack
//!   `d_k·R̃_k(p) − S/B`. [`alternating_solve`] uses it to find a
//!   rate-feasible starting point when the equal split is not one, and to
//!   certify infeasibility otherwise.
//! * The descent step minimizes the average AoI that the following AoI step
//!   will produce, `(S/B)/K · Σ 1/R̃_k(p)`, under `R̃_k(p) ≥ S/(B(τ−δ))`.
//!   `1/R̃` is convex wherever `R̃ > 0`, so the step is a convex program and
//!   the exact average AoI cannot increase from one iterate to the next.

mod barrier;
mod model;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::detection::{covert_power_cap, optimal_detection, NoiseUncertainty};
use crate::error::{Error, Result};
use crate::noma::{permute, rates, sic_order, PowerAllocation};

use barrier::{minimize, BarrierOptions, ConvexProgram, Smooth};
use model::{exact_rates, LinearizedRates};

/// Per-user packet age in seconds, in SIC order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiVector {
    pub values: Vec<f64>,
}

impl AoiVector {
    pub fn average(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AoiOutcome {
    Feasible(AoiVector),
    /// Some user needs longer than `τ − δ`; carries every user's required
    /// age (`+∞` for a user with zero rate).
    Infeasible { required: Vec<f64> },
}

/// Closed-form optimum of the AoI linear program for fixed powers.
///
/// `gains` and `p` are in SIC order.
pub fn aoi_subproblem(p: &PowerAllocation, gains: &[f64], cfg: &ScenarioConfig) -> AoiOutcome {
    let required = required_aoi(&rates(p, gains, cfg.user_noise), cfg);
    let limit = cfg.usable_slot_time();
    if required.iter().all(|&d| d <= limit) {
        AoiOutcome::Feasible(AoiVector { values: required })
    } else {
        AoiOutcome::Infeasible { required }
    }
}

fn required_aoi(rates: &[f64], cfg: &ScenarioConfig) -> Vec<f64> {
    rates
        .iter()
        .map(|&r| if r > 0.0 { cfg.bits_per_hz() / r } else { f64::INFINITY })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_outer: usize,
    /// Relative change of the average AoI that ends the alternation.
    pub outer_tol: f64,
    /// Relative (descent) or absolute normalized (slack) improvement that
    /// ends an SCA inner loop.
    pub inner_tol: f64,
    pub max_inner: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer: 50,
            outer_tol: 1e-6,
            inner_tol: 1e-8,
            max_inner: 100,
        }
    }
}

/// Effective power budget `min(P_max, p_cap)`.
pub fn effective_budget(willie_gain: f64, cfg: &ScenarioConfig) -> f64 {
    let nu = NoiseUncertainty {
        nominal: cfg.willie_noise_nominal,
        factor: cfg.noise_uncertainty,
    };
    cfg.power_budget
        .min(covert_power_cap(willie_gain, &nu, cfg.covert_budget))
}

fn noise_uncertainty(cfg: &ScenarioConfig) -> NoiseUncertainty {
    NoiseUncertainty {
        nominal: cfg.willie_noise_nominal,
        factor: cfg.noise_uncertainty,
    }
}

// Shared constraint block: x_k > 0 and Σx < 1.
fn polytope(x: &DVector<f64>, k: usize, out: &mut Vec<Smooth>) {
    let n = x.len();
    for j in 0..k {
        let mut g = DVector::zeros(n);
        g[j] = -1.0;
        out.push(Smooth::linear(-x[j], g));
    }
    let mut g = DVector::zeros(n);
    let mut sum = 0.0;
    for j in 0..k {
        g[j] = 1.0;
        sum += x[j];
    }
    out.push(Smooth::linear(sum - 1.0, g));
}

/// Variables `(x, s)`; maximizes `s` with `w_k·R̃_k(x) − 1 ≥ s`.
struct SlackProgram {
    rates: LinearizedRates,
    weights: Vec<f64>,
}

impl ConvexProgram for SlackProgram {
    fn dim(&self) -> usize {
        self.rates.len() + 1
    }

    fn objective(&self, x: &DVector<f64>) -> Option<Smooth> {
        let k = self.rates.len();
        let mut g = DVector::zeros(k + 1);
        g[k] = -1.0;
        Some(Smooth::linear(-x[k], g))
    }

    fn constraints(&self, x: &DVector<f64>) -> Option<Vec<Smooth>> {
        let k = self.rates.len();
        let mut out = Vec::with_capacity(2 * k + 1);
        for (i, &w) in self.weights.iter().enumerate() {
            let r = self.rates.eval(i, x)?;
            let mut grad = -r.grad * w;
            grad[k] += 1.0;
            out.push(Smooth {
                value: x[k] + 1.0 - w * r.value,
                grad,
                hess: -r.hess * w,
            });
        }
        polytope(x, k, &mut out);
        Some(out)
    }
}

/// Minimizes `Σ 1/R̃_k(x)` with `R̃_k(x) ≥ r_min`.
struct DescentProgram {
    rates: LinearizedRates,
    min_rate: f64,
}

impl ConvexProgram for DescentProgram {
    fn dim(&self) -> usize {
        self.rates.len()
    }

    fn objective(&self, x: &DVector<f64>) -> Option<Smooth> {
        let n = x.len();
        let mut value = 0.0;
        let mut grad = DVector::zeros(n);
        let mut hess = nalgebra::DMatrix::zeros(n, n);
        for k in 0..self.rates.len() {
            let r = self.rates.eval(k, x)?;
            if !(r.value > 0.0) {
                return None;
            }
            let inv = 1.0 / r.value;
            value += inv;
            grad -= &r.grad * (inv * inv);
            hess += &r.grad * r.grad.transpose() * (2.0 * inv * inv * inv) - r.hess * (inv * inv);
        }
        Some(Smooth { value, grad, hess })
    }

    fn constraints(&self, x: &DVector<f64>) -> Option<Vec<Smooth>> {
        let k = self.rates.len();
        let mut out = Vec::with_capacity(2 * k + 1);
        for i in 0..k {
            let r = self.rates.eval(i, x)?;
            out.push(Smooth {
                value: self.min_rate - r.value,
                grad: -r.grad,
                hess: -r.hess,
            });
        }
        polytope(x, k, &mut out);
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackSolution {
    /// Powers in watts, SIC order.
    pub power: PowerAllocation,
    /// Smallest delivery slack `min_k d_k·R̃_k(p) − S/B`, in bits/Hz.
    pub slack: f64,
    pub feasible: bool,
    pub newton_steps: usize,
}

struct NormalizedSlack {
    x: Vec<f64>,
    slack: f64,
    newton_steps: usize,
}

fn solve_slack(snr: &[f64], weights: &[f64], anchor: &[f64]) -> Result<NormalizedSlack> {
    let k = snr.len();
    let rates = LinearizedRates::new(snr, anchor);
    let mut start = DVector::from_element(k + 1, 1.0 / (k as f64 + 1.0));
    let mut worst = f64::INFINITY;
    for (i, &w) in weights.iter().enumerate() {
        let r = rates
            .eval(i, &start)
            .ok_or_else(|| Error::NonConvergence("surrogate undefined at start".into()))?;
        worst = worst.min(w * r.value - 1.0);
    }
    start[k] = worst - 1e-2 * worst.abs().max(1.0);
    let program = SlackProgram {
        rates,
        weights: weights.to_vec(),
    };
    let out = minimize(&program, start, &BarrierOptions::default())
        .ok_or_else(|| Error::NonConvergence("slack program left its domain".into()))?;
    if !out.converged || !out.x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonConvergence(format!(
            "slack program stalled after {} Newton steps",
            out.newton_steps
        )));
    }
    Ok(NormalizedSlack {
        x: out.x.as_slice()[..k].to_vec(),
        slack: out.x[k],
        newton_steps: out.newton_steps,
    })
}

/// Max-min delivery slack power program for fixed ages `d`, linearized
/// around `anchor`. All vectors are in SIC order.
pub fn power_subproblem(
    d: &AoiVector,
    gains: &[f64],
    willie_gain: f64,
    cfg: &ScenarioConfig,
    anchor: &PowerAllocation,
) -> Result<SlackSolution> {
    let k = gains.len();
    if d.values.len() != k || anchor.len() != k {
        return Err(Error::Domain("ages, gains and anchor must have equal length".into()));
    }
    if !d.values.iter().all(|&v| v > 0.0 && v.is_finite()) {
        return Err(Error::Domain("ages must be positive and finite".into()));
    }
    if anchor.powers.iter().any(|&p| p < 0.0) {
        return Err(Error::Domain("anchor powers must be non-negative".into()));
    }
    let budget = effective_budget(willie_gain, cfg);
    if !(budget > 0.0) {
        return Err(Error::Infeasible("covert power cap is zero".into()));
    }
    let snr: Vec<f64> = gains.iter().map(|h| h * budget / cfg.user_noise).collect();
    let scale = cfg.bits_per_hz();
    let weights: Vec<f64> = d.values.iter().map(|v| v / scale).collect();
    let anchor_x: Vec<f64> = anchor.powers.iter().map(|p| p / budget).collect();
    let sol = solve_slack(&snr, &weights, &anchor_x)?;
    let slack = sol.slack * scale;
    Ok(SlackSolution {
        power: PowerAllocation::new(sol.x.iter().map(|x| x * budget).collect()),
        slack,
        feasible: slack >= 0.0,
        newton_steps: sol.newton_steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// `order[k]` is the user served at SIC position `k`.
    pub order: Vec<usize>,
    /// Powers in SIC order.
    pub power: PowerAllocation,
    /// Ages in SIC order. For an infeasible result these are the required
    /// ages at the best powers found, which exceed `τ − δ` for some user.
    pub aoi: AoiVector,
    pub avg_aoi: f64,
    /// Average AoI after each accepted outer iteration, starting point first.
    pub avg_aoi_history: Vec<f64>,
    pub outer_iterations: usize,
    pub sca_iterations_total: usize,
    pub status: SolveStatus,
    /// `ξ*(p_a) − (1 − ε_w)`.
    pub covert_margin: f64,
}

impl SolveResult {
    /// Powers indexed by user rather than SIC position.
    pub fn user_powers(&self) -> PowerAllocation {
        self.power.unpermute(&self.order)
    }

    pub fn user_aoi(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.order.len()];
        for (pos, &u) in self.order.iter().enumerate() {
            out[u] = self.aoi.values[pos];
        }
        out
    }
}

fn average_aoi(snr: &[f64], x: &[f64], cfg: &ScenarioConfig) -> (Vec<f64>, f64) {
    let d = required_aoi(&exact_rates(snr, x), cfg);
    let avg = d.iter().sum::<f64>() / d.len() as f64;
    (d, avg)
}

/// Runs the alternating optimization on one channel realization.
///
/// `gains` are per-user (any order); they are sorted into SIC order once.
pub fn alternating_solve(gains: &[f64], willie_gain: f64, cfg: &ScenarioConfig) -> SolveResult {
    alternating_solve_with(gains, willie_gain, cfg, &SolverOptions::default())
}

pub fn alternating_solve_with(
    gains: &[f64],
    willie_gain: f64,
    cfg: &ScenarioConfig,
    opts: &SolverOptions,
) -> SolveResult {
    let k = gains.len();
    let order = sic_order(gains);
    let sorted = permute(gains, &order);
    let budget = effective_budget(willie_gain, cfg);
    let nu = noise_uncertainty(cfg);
    let margin = |pa: f64| {
        optimal_detection(pa, willie_gain, &nu).min_total_error - (1.0 - cfg.covert_budget)
    };
    let finish = |x: &[f64], history: Vec<f64>, outer, sca, status| {
        let (d, avg) = average_aoi(
            &sorted.iter().map(|h| h * budget / cfg.user_noise).collect::<Vec<_>>(),
            x,
            cfg,
        );
        let power = PowerAllocation::new(x.iter().map(|v| v * budget).collect());
        let covert_margin = margin(power.total());
        SolveResult {
            order: order.clone(),
            power,
            aoi: AoiVector { values: d },
            avg_aoi: avg,
            avg_aoi_history: history,
            outer_iterations: outer,
            sca_iterations_total: sca,
            status,
            covert_margin,
        }
    };

    if !(budget > 0.0) {
        return SolveResult {
            order: order.clone(),
            power: PowerAllocation::new(vec![0.0; k]),
            aoi: AoiVector {
                values: vec![f64::INFINITY; k],
            },
            avg_aoi: f64::INFINITY,
            avg_aoi_history: Vec::new(),
            outer_iterations: 0,
            sca_iterations_total: 0,
            status: SolveStatus::Infeasible,
            covert_margin: margin(0.0),
        };
    }

    let snr: Vec<f64> = sorted.iter().map(|h| h * budget / cfg.user_noise).collect();
    let min_rate = cfg.min_rate();
    let strictly_feasible = |x: &[f64]| {
        x.iter().all(|&v| v > 0.0)
            && x.iter().sum::<f64>() < 1.0
            && exact_rates(&snr, x).iter().all(|&r| r > min_rate)
    };

    let equal = vec![1.0 / k as f64; k];
    let mut sca_total = 0usize;
    let mut history = Vec::new();
    let shrunk: Vec<f64> = equal.iter().map(|v| v * (1.0 - 1e-9)).collect();

    let mut x = if strictly_feasible(&shrunk) {
        history.push(average_aoi(&snr, &equal, cfg).1);
        shrunk
    } else {
        // Phase one: largest common slack with every age at the AoC limit.
        let weights = vec![1.0 / min_rate; k];
        let mut anchor = equal.clone();
        let mut best: Option<NormalizedSlack> = None;
        for _ in 0..opts.max_inner {
            let Ok(sol) = solve_slack(&snr, &weights, &anchor) else {
                break;
            };
            sca_total += 1;
            let improved = best.as_ref().map_or(f64::INFINITY, |b| sol.slack - b.slack);
            if improved < 0.0 {
                break;
            }
            anchor = sol.x.clone();
            best = Some(sol);
            if improved < opts.inner_tol {
                break;
            }
        }
        match best {
            Some(b) if b.slack > 0.0 && strictly_feasible(&b.x) => {
                history.push(average_aoi(&snr, &b.x, cfg).1);
                b.x
            }
            Some(b) => return finish(&b.x, history, 0, sca_total, SolveStatus::Infeasible),
            None => return finish(&equal, history, 0, sca_total, SolveStatus::Infeasible),
        }
    };

    let mut status = SolveStatus::MaxIterations;
    let mut outer = 0;
    let mut current = *history.last().expect("starting point recorded");
    while outer < opts.max_outer {
        outer += 1;
        // Power step: SCA on the surrogate average AoI.
        let mut f_exact = exact_rates(&snr, &x).iter().map(|r| 1.0 / r).sum::<f64>();
        for _ in 0..opts.max_inner {
            let program = DescentProgram {
                rates: LinearizedRates::new(&snr, &x),
                min_rate,
            };
            let Some(out) = minimize(&program, DVector::from_row_slice(&x), &BarrierOptions::default()) else {
                break;
            };
            sca_total += 1;
            let cand = out.x.as_slice().to_vec();
            if !strictly_feasible(&cand) {
                break;
            }
            let f_new = exact_rates(&snr, &cand).iter().map(|r| 1.0 / r).sum::<f64>();
            if !(f_new < f_exact) {
                break;
            }
            let rel = (f_exact - f_new) / f_exact;
            x = cand;
            f_exact = f_new;
            if rel < opts.inner_tol {
                break;
            }
        }
        // AoI step.
        let (_, next) = average_aoi(&snr, &x, cfg);
        let change = (current - next).abs() / current;
        history.push(next);
        current = next;
        if change < opts.outer_tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    finish(&x, history, outer, sca_total, status)
}

/// One violated (or satisfied) constraint of the original problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintCheck {
    pub name: String,
    /// Relative violation; `<= 0` means satisfied.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<ConstraintCheck>,
    pub worst_violation: f64,
    pub passed: bool,
}

pub const AUDIT_TOL: f64 = 1e-6;

/// Re-checks a solution against the exact (non-linearized) constraints.
/// `gains` are per-user, as passed to [`alternating_solve`].
pub fn verify_kkt_feasibility(
    result: &SolveResult,
    gains: &[f64],
    willie_gain: f64,
    cfg: &ScenarioConfig,
) -> AuditReport {
    let sorted = permute(gains, &result.order);
    let nu = noise_uncertainty(cfg);
    let mut checks = Vec::new();
    let mut push = |name: String, violation: f64| checks.push(ConstraintCheck { name, violation });

    for (k, &p) in result.power.powers.iter().enumerate() {
        push(format!("nonnegative_power[{k}]"), -p / cfg.power_budget);
    }
    let pa = result.power.total();
    push("power_budget".into(), (pa - cfg.power_budget) / cfg.power_budget);
    let floor = 1.0 - cfg.covert_budget;
    let xi = optimal_detection(pa, willie_gain, &nu).min_total_error;
    push("covertness".into(), (floor - xi) / floor);

    let limit = cfg.usable_slot_time();
    let need = cfg.bits_per_hz();
    let r = rates(&result.power, &sorted, cfg.user_noise);
    for (k, &d) in result.aoi.values.iter().enumerate() {
        push(format!("aoc[{k}]"), (d - limit) / limit);
        let delivered = if d.is_finite() { d * r[k] } else { 0.0 };
        push(format!("delivery[{k}]"), (need - delivered) / need);
    }
    let worst_violation = checks
        .iter()
        .map(|c| c.violation)
        .fold(f64::NEG_INFINITY, f64::max);
    AuditReport {
        passed: worst_violation <= AUDIT_TOL,
        checks,
        worst_violation,
    }
}

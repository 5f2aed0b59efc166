//! Willie's radiometer under bounded noise uncertainty.
//!
//! Willie compares received power against a threshold `ϑ`. His true noise
//! power is log-uniform on `[σ̌²/μ, μσ̌²]`, which turns the false-alarm and
//! miss-detection probabilities into piecewise logarithms of `ϑ`. The
//! total error `ξ = P_FA + P_MD` is minimized at `ϑ* = p_a·h_aw + σ̌²/μ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseUncertainty {
    /// Nominal noise power σ̌² in watts.
    pub nominal: f64,
    /// Linear uncertainty factor μ > 1.
    pub factor: f64,
}

impl NoiseUncertainty {
    pub fn new(nominal: f64, factor: f64) -> Result<Self> {
        if !(nominal > 0.0 && nominal.is_finite()) {
            return Err(Error::Domain(format!("nominal noise must be > 0, got {nominal}")));
        }
        if !(factor > 1.0 && factor.is_finite()) {
            return Err(Error::Domain(format!("uncertainty factor must be > 1, got {factor}")));
        }
        Ok(Self { nominal, factor })
    }

    /// Smallest possible noise power, σ̌²/μ.
    pub fn lower(&self) -> f64 {
        self.nominal / self.factor
    }

    /// Largest possible noise power, μσ̌².
    pub fn upper(&self) -> f64 {
        self.nominal * self.factor
    }

    fn two_ln_mu(&self) -> f64 {
        2.0 * self.factor.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub optimal_threshold: f64,
    pub min_total_error: f64,
}

/// Density of Willie's noise power.
pub fn noise_pdf(x: f64, nu: &NoiseUncertainty) -> f64 {
    if x >= nu.lower() && x <= nu.upper() {
        1.0 / (nu.two_ln_mu() * x)
    } else {
        0.0
    }
}

/// `P{σ_w² ≥ ϑ}`.
pub fn false_alarm(threshold: f64, nu: &NoiseUncertainty) -> f64 {
    if threshold < nu.lower() {
        1.0
    } else if threshold > nu.upper() {
        0.0
    } else {
        (nu.upper() / threshold).ln() / nu.two_ln_mu()
    }
}

/// `P{p_a·h_aw + σ_w² ≤ ϑ}`.
pub fn miss_detection(threshold: f64, total_power: f64, willie_gain: f64, nu: &NoiseUncertainty) -> f64 {
    let received = total_power * willie_gain;
    if threshold < received + nu.lower() {
        0.0
    } else if threshold > received + nu.upper() {
        1.0
    } else {
        (nu.factor * (threshold - received) / nu.nominal).ln() / nu.two_ln_mu()
    }
}

pub fn total_error(threshold: f64, total_power: f64, willie_gain: f64, nu: &NoiseUncertainty) -> f64 {
    false_alarm(threshold, nu) + miss_detection(threshold, total_power, willie_gain, nu)
}

/// Willie's best threshold and the resulting minimum total error, clamped
/// to `[0, 1]`. The unclamped value goes negative once the received signal
/// power exceeds `σ̌²(μ − 1/μ)`; the true minimum there is 0.
pub fn optimal_detection(total_power: f64, willie_gain: f64, nu: &NoiseUncertainty) -> DetectionResult {
    let received = total_power * willie_gain;
    // ln(μσ̌² / (s + σ̌²/μ)) = 2 ln μ − ln(1 + sμ/σ̌²)
    let xi = 1.0 - (received * nu.factor / nu.nominal).ln_1p() / nu.two_ln_mu();
    DetectionResult {
        optimal_threshold: received + nu.lower(),
        min_total_error: xi.clamp(0.0, 1.0),
    }
}

/// Largest total transmit power keeping `ξ* ≥ 1 − ε_w`:
/// `σ̌²(μ^(2ε_w − 1) − μ^(−1)) / h_aw`.
pub fn covert_power_cap(willie_gain: f64, nu: &NoiseUncertainty, covert_budget: f64) -> f64 {
    let eps = covert_budget.clamp(0.0, 1.0);
    let cap = nu.lower() * (eps * nu.two_ln_mu()).exp_m1() / willie_gain;
    cap.max(0.0)
}

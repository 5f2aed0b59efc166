//! Rate model in normalized coordinates used by the convex subproblems.
//!
//! Powers are expressed as fractions `x = p / P` of the effective budget
//! `P = min(P_max, p_cap)` and gains as SNR coefficients `g = h·P/σ²`, so
//! the noise term is 1 and every quantity is O(1).

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use super::barrier::Smooth;

/// SCA surrogate of every user's rate around a fixed anchor.
#[derive(Debug, Clone)]
pub(crate) struct LinearizedRates {
    snr: Vec<f64>,
    anchor_tail: Vec<f64>,
    anchor_interference: Vec<f64>,
}

impl LinearizedRates {
    pub fn new(snr: &[f64], anchor: &[f64]) -> Self {
        let k = snr.len();
        let mut anchor_tail = vec![0.0; k];
        for i in (0..k.saturating_sub(1)).rev() {
            anchor_tail[i] = anchor_tail[i + 1] + anchor[i + 1];
        }
        let anchor_interference = snr
            .iter()
            .zip(&anchor_tail)
            .map(|(g, t)| 1.0 + g * t)
            .collect();
        Self {
            snr: snr.to_vec(),
            anchor_tail,
            anchor_interference,
        }
    }

    pub fn len(&self) -> usize {
        self.snr.len()
    }

    /// Surrogate rate of user `k` with value, gradient and Hessian in `x`
    /// (the first `len()` coordinates of `x`; any extra coordinates get
    /// zero derivatives).
    pub fn eval(&self, k: usize, x: &DVector<f64>) -> Option<Smooth> {
        let n = x.len();
        let g = self.snr[k];
        let tail: f64 = (k + 1..self.len()).map(|j| x[j]).sum();
        let own = 1.0 + g * (x[k] + tail);
        if !(own > 0.0) {
            return None;
        }
        let c = self.anchor_interference[k];
        let delta = tail - self.anchor_tail[k];
        let lin = g / (c * LN_2);
        let value = (g * (x[k] + delta) / c).ln_1p() / LN_2 - lin * delta;

        let slope = g / (own * LN_2);
        let curv = -g * g / (own * own * LN_2);
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for j in k..self.len() {
            grad[j] = if j == k { slope } else { slope - lin };
            for l in k..self.len() {
                hess[(j, l)] = curv;
            }
        }
        Some(Smooth { value, grad, hess })
    }
}

/// Exact rates at normalized powers `x`.
pub(crate) fn exact_rates(snr: &[f64], x: &[f64]) -> Vec<f64> {
    let k = snr.len();
    let mut tail = 0.0;
    let mut out = vec![0.0; k];
    for i in (0..k).rev() {
        out[i] = (snr[i] * x[i] / (1.0 + snr[i] * tail)).ln_1p() / LN_2;
        tail += x[i];
    }
    out
}

//! PD-NOMA downlink rates under successive interference cancellation.
//!
//! Users are indexed in SIC order, weakest channel first. User `k` decodes
//! after cancelling users `0..k` and sees users `k+1..K` as interference,
//! so the strongest user is interference free. Rates are in bits/s/Hz.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// Per-user transmit power in watts.
    pub powers: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(powers: Vec<f64>) -> Self {
        Self { powers }
    }

    pub fn equal_split(total: f64, num_users: usize) -> Self {
        Self {
            powers: vec![total / num_users as f64; num_users],
        }
    }

    /// `p_a`, the sum of all user powers.
    pub fn total(&self) -> f64 {
        self.powers.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    /// Reorders SIC-ordered powers back to user order given `order[k] = user`.
    pub fn unpermute(&self, order: &[usize]) -> Self {
        let mut out = vec![0.0; self.powers.len()];
        for (pos, &user) in order.iter().enumerate() {
            out[user] = self.powers[pos];
        }
        Self { powers: out }
    }
}

/// Indices of `gains` sorted by ascending gain; ties keep their original order.
pub fn sic_order(gains: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..gains.len()).collect();
    idx.sort_by(|&a, &b| gains[a].total_cmp(&gains[b]));
    idx
}

/// Applies `order` to a per-user vector.
pub fn permute(values: &[f64], order: &[usize]) -> Vec<f64> {
    order.iter().map(|&i| values[i]).collect()
}

fn tail_sum(powers: &[f64], from: usize) -> f64 {
    powers.get(from..).map_or(0.0, |t| t.iter().sum())
}

/// Achievable rate of the user at SIC position `k`.
pub fn rate(k: usize, p: &PowerAllocation, gains: &[f64], noise: f64) -> f64 {
    let h = gains[k];
    let interference = h * tail_sum(&p.powers, k + 1) + noise;
    (h * p.powers[k] / interference).ln_1p() / LN_2
}

pub fn rates(p: &PowerAllocation, gains: &[f64], noise: f64) -> Vec<f64> {
    (0..p.len()).map(|k| rate(k, p, gains, noise)).collect()
}

/// First-order lower bound on [`rate`] around `anchor`.
///
/// Writes the rate as `log2(h·Σ_{j≥k} p_j + σ²) − log2(h·Σ_{j>k} p_j + σ²)`
/// and replaces the subtracted (concave) term by its tangent at the anchor.
/// The result is concave in `p`, touches the rate at `p = anchor`, and lies
/// below it everywhere else.
pub fn linearized_rate(
    k: usize,
    p: &PowerAllocation,
    anchor: &PowerAllocation,
    gains: &[f64],
    noise: f64,
) -> f64 {
    let h = gains[k];
    let anchor_interference = h * tail_sum(&anchor.powers, k + 1) + noise;
    let delta: f64 = p.powers[k + 1..]
        .iter()
        .zip(&anchor.powers[k + 1..])
        .map(|(pj, aj)| pj - aj)
        .sum();
    let log_term = (h * (p.powers[k] + delta) / anchor_interference).ln_1p() / LN_2;
    log_term - h * delta / (anchor_interference * LN_2)
}

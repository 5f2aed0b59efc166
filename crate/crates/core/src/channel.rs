//! Network topology and block-fading channel gains.
//!
//! Alice sits at the origin of a disk of radius `R`; users and Willie are
//! placed uniformly by area. Each link's linear power gain in a slot is
//! `χ · d^(-α)` with `χ ~ Exp(1)` redrawn independently every slot and held
//! constant for the whole slot.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Seeded random stream used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// Independent sub-stream `index` of the master `seed`.
pub fn substream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Alice-to-user distances in meters.
    pub user_distances: Vec<f64>,
    /// Alice-to-Willie distance in meters.
    pub willie_distance: f64,
}

impl Topology {
    pub fn num_users(&self) -> usize {
        self.user_distances.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    /// Alice-to-user linear power gains, in user order.
    pub user_gains: Vec<f64>,
    pub willie_gain: f64,
    pub slot_index: u64,
}

fn disk_radius<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> f64 {
    // 1 - u lies in (0, 1], which keeps every distance strictly positive.
    let u: f64 = rng.random();
    radius * (1.0 - u).sqrt()
}

/// Draws Willie's distance, then one distance per user, uniformly by area.
pub fn sample_topology<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Topology {
    let willie_distance = disk_radius(cfg.area_radius, rng);
    let user_distances = (0..cfg.num_users)
        .map(|_| disk_radius(cfg.area_radius, rng))
        .collect();
    Topology {
        user_distances,
        willie_distance,
    }
}

/// Distance-dependent path gain `d^(-α)`.
pub fn path_gain(distance: f64, exponent: f64) -> Result<f64> {
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::Domain(format!("distance must be > 0, got {distance}")));
    }
    if !(exponent > 0.0) {
        return Err(Error::Domain(format!("path-loss exponent must be > 0, got {exponent}")));
    }
    Ok(distance.powf(-exponent))
}

/// Rayleigh fading power factor: unit-mean exponential.
pub fn sample_fading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let chi: f64 = rng.sample(Exp1);
        if chi > 0.0 {
            return chi;
        }
    }
}

impl ChannelState {
    /// Gains for explicit fading factors: `fading[..K]` for the users and
    /// `fading[K]` for Willie.
    pub fn with_fading(topology: &Topology, exponent: f64, slot: u64, fading: &[f64]) -> Result<Self> {
        let k = topology.num_users();
        if fading.len() != k + 1 {
            return Err(Error::Domain(format!(
                "expected {} fading factors, got {}",
                k + 1,
                fading.len()
            )));
        }
        let user_gains = topology
            .user_distances
            .iter()
            .zip(fading)
            .map(|(&d, &chi)| path_gain(d, exponent).map(|g| chi * g))
            .collect::<Result<Vec<_>>>()?;
        let willie_gain = fading[k] * path_gain(topology.willie_distance, exponent)?;
        Ok(Self {
            user_gains,
            willie_gain,
            slot_index: slot,
        })
    }

    /// Gains with the fading averaged out (`χ = 1` on every link).
    pub fn mean(topology: &Topology, exponent: f64) -> Result<Self> {
        Self::with_fading(topology, exponent, 0, &vec![1.0; topology.num_users() + 1])
    }
}

/// Fresh block-fading realization for `slot`. Willie's factor is drawn
/// first so that runs with more users share his realization.
pub fn next_channel_state<R: Rng + ?Sized>(
    topology: &Topology,
    cfg: &ScenarioConfig,
    slot: u64,
    rng: &mut R,
) -> ChannelState {
    let k = topology.num_users();
    let mut fading = vec![0.0; k + 1];
    fading[k] = sample_fading(rng);
    for f in &mut fading[..k] {
        *f = sample_fading(rng);
    }
    ChannelState::with_fading(topology, cfg.pathloss_exponent, slot, &fading)
        .expect("topology distances are positive by construction")
}

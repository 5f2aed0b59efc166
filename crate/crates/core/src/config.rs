//! Scenario parameters and the key-value config file that carries them.
//!
//! Every physical quantity is stored in linear SI units (watts, hertz,
//! seconds, bits). The config file may give any power-like entry in dB
//! instead by suffixing the key with `_db`; `-x dB` is read as `10^(-x/10)`
//! watts and the noise uncertainty `μ dB` as `10^(μ/10)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a dB value to its linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Number of downlink users `K`.
    pub num_users: usize,
    /// System bandwidth in Hz.
    pub bandwidth: f64,
    /// Update packet size in bits.
    pub packet_size: f64,
    /// Age of channel variation (coherence time) in seconds.
    pub aoc: f64,
    /// Channel measurement time at the start of each slot, in seconds.
    pub measurement_time: f64,
    /// Covertness budget: Willie's minimum total error must stay `>= 1 - covert_budget`.
    pub covert_budget: f64,
    /// AWGN power at every legitimate receiver, in watts.
    pub user_noise: f64,
    /// Willie's nominal noise power, in watts.
    pub willie_noise_nominal: f64,
    /// Noise uncertainty factor (linear, `> 1`).
    pub noise_uncertainty: f64,
    pub pathloss_exponent: f64,
    /// Alice's total transmit power budget, in watts.
    pub power_budget: f64,
    /// Coverage radius in meters; Alice sits at the center.
    pub area_radius: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let aoc = 0.01;
        Self {
            num_users: 3,
            bandwidth: 1.0e6,
            packet_size: 1000.0,
            aoc,
            measurement_time: 0.01 * aoc,
            covert_budget: 0.95,
            user_noise: db_to_linear(-160.0),
            willie_noise_nominal: db_to_linear(-120.0),
            noise_uncertainty: db_to_linear(3.0),
            pathloss_exponent: 3.0,
            power_budget: 1.0e-7,
            area_radius: 100.0,
            rng_seed: 1,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        if self.num_users < 1 {
            return fail("num_users must be >= 1");
        }
        if !finite_pos(self.bandwidth) {
            return fail("bandwidth must be > 0");
        }
        if !finite_pos(self.packet_size) {
            return fail("packet_size must be > 0");
        }
        if !finite_pos(self.aoc) {
            return fail("aoc must be > 0");
        }
        if !(self.measurement_time > 0.0 && self.measurement_time < self.aoc) {
            return fail("measurement_time must satisfy 0 < measurement_time < aoc");
        }
        if !(self.covert_budget > 0.0 && self.covert_budget < 1.0) {
            return fail("covert_budget must lie in (0, 1)");
        }
        if !finite_pos(self.user_noise) || !finite_pos(self.willie_noise_nominal) {
            return fail("noise powers must be > 0");
        }
        if !(self.noise_uncertainty.is_finite() && self.noise_uncertainty > 1.0) {
            return fail("noise_uncertainty must be > 1 (linear)");
        }
        if !finite_pos(self.pathloss_exponent) {
            return fail("pathloss_exponent must be > 0");
        }
        if !finite_pos(self.power_budget) {
            return fail("power_budget must be > 0");
        }
        if !finite_pos(self.area_radius) {
            return fail("area_radius must be > 0");
        }
        Ok(())
    }

    /// Transmission time left in a slot once the channel has been measured.
    pub fn usable_slot_time(&self) -> f64 {
        self.aoc - self.measurement_time
    }

    /// Bits per hertz each user must receive per packet (`S / B`).
    pub fn bits_per_hz(&self) -> f64 {
        self.packet_size / self.bandwidth
    }

    /// Smallest spectral efficiency that still delivers a packet inside one slot.
    pub fn min_rate(&self) -> f64 {
        self.bits_per_hz() / self.usable_slot_time()
    }
}

/// `[scenario]` section as written in a config file. Each power-like field
/// may be given linearly or in dB, never both.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    num_users: Option<usize>,
    bandwidth: Option<f64>,
    packet_size: Option<f64>,
    aoc: Option<f64>,
    measurement_time: Option<f64>,
    covert_budget: Option<f64>,
    user_noise: Option<f64>,
    user_noise_db: Option<f64>,
    willie_noise_nominal: Option<f64>,
    willie_noise_nominal_db: Option<f64>,
    noise_uncertainty: Option<f64>,
    noise_uncertainty_db: Option<f64>,
    pathloss_exponent: Option<f64>,
    power_budget: Option<f64>,
    power_budget_db: Option<f64>,
    area_radius: Option<f64>,
    rng_seed: Option<u64>,
}

fn pick(name: &str, linear: Option<f64>, db: Option<f64>, default: f64) -> Result<f64> {
    match (linear, db) {
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!(
            "both `{name}` and `{name}_db` given"
        ))),
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(db_to_linear(v)),
        (None, None) => Ok(default),
    }
}

impl RawScenario {
    fn resolve(self) -> Result<ScenarioConfig> {
        let d = ScenarioConfig::default();
        let aoc = self.aoc.unwrap_or(d.aoc);
        let cfg = ScenarioConfig {
            num_users: self.num_users.unwrap_or(d.num_users),
            bandwidth: self.bandwidth.unwrap_or(d.bandwidth),
            packet_size: self.packet_size.unwrap_or(d.packet_size),
            aoc,
            measurement_time: self.measurement_time.unwrap_or(0.01 * aoc),
            covert_budget: self.covert_budget.unwrap_or(d.covert_budget),
            user_noise: pick("user_noise", self.user_noise, self.user_noise_db, d.user_noise)?,
            willie_noise_nominal: pick(
                "willie_noise_nominal",
                self.willie_noise_nominal,
                self.willie_noise_nominal_db,
                d.willie_noise_nominal,
            )?,
            noise_uncertainty: pick(
                "noise_uncertainty",
                self.noise_uncertainty,
                self.noise_uncertainty_db,
                d.noise_uncertainty,
            )?,
            pathloss_exponent: self.pathloss_exponent.unwrap_or(d.pathloss_exponent),
            power_budget: pick(
                "power_budget",
                self.power_budget,
                self.power_budget_db,
                d.power_budget,
            )?,
            area_radius: self.area_radius.unwrap_or(d.area_radius),
            rng_seed: self.rng_seed.unwrap_or(d.rng_seed),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parameters of the user-count sweep.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepUsersSection {
    pub k_values: Vec<usize>,
    pub p_max_values: Vec<f64>,
    pub trials: usize,
}

impl Default for SweepUsersSection {
    fn default() -> Self {
        Self {
            k_values: vec![2, 3, 4, 5, 6],
            p_max_values: vec![1.0e-8, 1.0e-7],
            trials: 200,
        }
    }
}

/// Parameters of the power-budget sweep. Willie sits at each listed
/// distance (meters) from Alice.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepPowerSection {
    pub num_users: usize,
    pub p_max_values: Vec<f64>,
    pub willie_distances: Vec<f64>,
    pub trials: usize,
}

impl Default for SweepPowerSection {
    fn default() -> Self {
        Self {
            num_users: 3,
            p_max_values: vec![
                1.0e-9, 2.0e-9, 5.0e-9, 1.0e-8, 2.0e-8, 5.0e-8, 1.0e-7, 1.5e-7, 1.8e-7,
            ],
            willie_distances: vec![25.0, 50.0, 75.0],
            trials: 200,
        }
    }
}

/// Parameters of the slotted AoC-aware vs static-power comparison.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig5Section {
    pub num_users: usize,
    pub num_slots: usize,
    /// Power budget for this run; large enough that the covert cap binds.
    pub power_budget: f64,
}

impl Default for Fig5Section {
    fn default() -> Self {
        Self {
            num_users: 3,
            num_slots: 100,
            power_budget: 1.0e-3,
        }
    }
}

/// A whole config file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    pub scenario: ScenarioConfig,
    pub sweep_users: SweepUsersSection,
    pub sweep_power: SweepPowerSection,
    pub fig5: Fig5Section,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfigFile {
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    sweep_users: SweepUsersSection,
    #[serde(default)]
    sweep_power: SweepPowerSection,
    #[serde(default)]
    fig5: Fig5Section,
}

impl ConfigFile {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let raw: RawConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
        let scenario = raw.scenario.resolve().map_err(|e| e.to_string())?;
        Ok(Self {
            scenario,
            sweep_users: raw.sweep_users,
            sweep_power: raw.sweep_power,
            fig5: raw.fig5,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }
}

//! Covert PD-NOMA downlink with average age-of-information minimization on
//! block-fading channels.
//!
//! * [`channel`]: topology sampling and per-slot Rayleigh block fading.
//! * [`detection`]: Willie's radiometer under noise uncertainty and the
//!   resulting covert power cap.
//! * [`noma`]: SIC-ordered rates and their concave SCA lower bound.
//! * [`solver`]: alternating AoI / power optimization.
//! * [`simulation`]: slotted runs comparing AoC-aware and static power.
//! * [`experiments`]: parameter sweeps, figure data and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod detection;
pub mod error;
pub mod experiments;
pub mod noma;
pub mod simulation;
pub mod solver;

pub use channel::{ChannelState, Topology};
pub use config::{ConfigFile, ScenarioConfig};
pub use detection::{DetectionResult, NoiseUncertainty};
pub use error::{Error, Result};
pub use noma::PowerAllocation;
pub use solver::{AoiVector, SolveResult, SolveStatus};

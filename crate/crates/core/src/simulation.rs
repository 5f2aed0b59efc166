//! Slotted run over consecutive coherence windows.
//!
//! Every slot of length `τ` starts with a channel measurement of length `δ`,
//! after which the gains stay fixed for the remaining `τ − δ`. Packets
//! follow the just-in-time policy: a user's next packet is generated the
//! instant the previous one is delivered. A packet that fits in one window
//! is delivered whole; the AoC-aware policy splits a packet that cannot fit
//! into equal fragments, one per slot, and a fragment that does not fit its
//! slot waits for the next one.
//!
//! Covertness is always audited against the slot's true Willie gain,
//! whatever the policy knew when it chose its powers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{next_channel_state, ChannelState, Topology};
use crate::config::ScenarioConfig;
use crate::detection::{optimal_detection, NoiseUncertainty};
use crate::error::{Error, Result};
use crate::noma::{permute, rates, sic_order, PowerAllocation};
use crate::solver::{alternating_solve, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    /// Re-measures the channel and re-solves powers every slot.
    AocAware,
    /// Solves once on slot 0 and keeps those powers.
    StaticPower,
    /// Never transmits.
    Silent,
}

/// One delivered packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub user: usize,
    pub generated_at: f64,
    pub delivered_at: f64,
    /// Bits carried by each fragment; sums to the packet size.
    pub fragment_bits: Vec<f64>,
}

impl Delivery {
    pub fn age(&self) -> f64 {
        self.delivered_at - self.generated_at
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotTrace {
    pub slot_index: u64,
    pub channel: ChannelState,
    /// Powers by user index.
    pub power: PowerAllocation,
    pub xi_star: f64,
    pub covert_ok: bool,
    /// Fraction of each user's in-flight packet already delivered at slot end.
    pub delivered_fractions: Vec<f64>,
    /// Each user's age: at the last delivery inside the slot, or at the end
    /// of the slot when nothing was delivered.
    pub aoi: Vec<f64>,
    pub deliveries: Vec<Delivery>,
    /// Solver outcome when the policy solved in this slot.
    pub solve_status: Option<SolveStatus>,
}

/// Number of slots needed to carry a packet that needs `required` seconds
/// of transmission when each slot offers `slot_len` seconds.
pub fn fragment_packet(required: f64, slot_len: f64) -> Result<usize> {
    if !(required > 0.0 && required.is_finite()) {
        return Err(Error::Domain(format!("required time must be positive and finite, got {required}")));
    }
    if !(slot_len > 0.0) {
        return Err(Error::Domain(format!("slot length must be positive, got {slot_len}")));
    }
    // Quotients such as 0.4 / 0.01 land a few ulps above the integer.
    let n = (required / slot_len * (1.0 - 1e-12)).ceil();
    Ok((n as usize).max(1))
}

#[derive(Debug, Clone)]
struct Fragmentation {
    count: usize,
    sent: Vec<f64>,
}

#[derive(Debug, Clone)]
struct UserState {
    /// Generation time of the newest delivered packet.
    last_delivered_gen: f64,
    /// Generation time of the in-flight packet.
    packet_gen: f64,
    fragments: Option<Fragmentation>,
}

const TIME_EPS: f64 = 1e-12;

impl UserState {
    /// Serves this user for one slot window at `bit_rate` bits/s.
    fn serve(
        &mut self,
        user: usize,
        window: (f64, f64),
        bit_rate: f64,
        packet_bits: f64,
        may_fragment: bool,
        out: &mut Vec<Delivery>,
    ) {
        let (start, end) = window;
        let usable = end - start;
        let slack = TIME_EPS * usable.max(1.0);
        let mut cursor = start;
        if !(bit_rate > 0.0) {
            return;
        }
        loop {
            if let Some(plan) = &mut self.fragments {
                let bits = packet_bits / plan.count as f64;
                let need = bits / bit_rate;
                if cursor + need <= end + slack {
                    cursor += need;
                    plan.sent.push(bits);
                    if plan.sent.len() == plan.count {
                        out.push(Delivery {
                            user,
                            generated_at: self.packet_gen,
                            delivered_at: cursor,
                            fragment_bits: std::mem::take(&mut plan.sent),
                        });
                        self.fragments = None;
                        self.last_delivered_gen = self.packet_gen;
                        self.packet_gen = cursor;
                    }
                }
                return;
            }
            let need = packet_bits / bit_rate;
            if cursor + need <= end + slack {
                cursor += need;
                out.push(Delivery {
                    user,
                    generated_at: self.packet_gen,
                    delivered_at: cursor,
                    fragment_bits: vec![packet_bits],
                });
                self.last_delivered_gen = self.packet_gen;
                self.packet_gen = cursor;
                continue;
            }
            if may_fragment && cursor == start && need > usable {
                let count = fragment_packet(need, usable).expect("need is positive and finite");
                self.fragments = Some(Fragmentation {
                    count,
                    sent: Vec::with_capacity(count),
                });
                continue;
            }
            return;
        }
    }

    fn delivered_fraction(&self) -> f64 {
        self.fragments
            .as_ref()
            .map_or(0.0, |f| f.sent.len() as f64 / f.count as f64)
    }
}

/// Per-user rates (user order) for powers given in user order; the SIC
/// order follows the slot's gains.
fn user_rates(power: &PowerAllocation, gains: &[f64], noise: f64) -> Vec<f64> {
    let order = sic_order(gains);
    let sorted_gains = permute(gains, &order);
    let sorted_power = PowerAllocation::new(permute(&power.powers, &order));
    let r = rates(&sorted_power, &sorted_gains, noise);
    let mut out = vec![0.0; gains.len()];
    for (pos, &u) in order.iter().enumerate() {
        out[u] = r[pos];
    }
    out
}

/// Simulates `num_slots` coherence slots under `policy`. Channel states are
/// drawn from `rng` only, so two policies fed identically seeded streams see
/// identical channels.
pub fn run_slotted<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    topology: &Topology,
    policy: Policy,
    num_slots: usize,
    rng: &mut R,
) -> Vec<SlotTrace> {
    let k = topology.num_users();
    let nu = NoiseUncertainty {
        nominal: cfg.willie_noise_nominal,
        factor: cfg.noise_uncertainty,
    };
    let mut users = vec![
        UserState {
            last_delivered_gen: 0.0,
            packet_gen: 0.0,
            fragments: None,
        };
        k
    ];
    let mut static_power: Option<PowerAllocation> = None;
    let mut traces = Vec::with_capacity(num_slots);

    for slot in 0..num_slots as u64 {
        let channel = next_channel_state(topology, cfg, slot, rng);
        let (power, solve_status) = match policy {
            Policy::Silent => (PowerAllocation::new(vec![0.0; k]), None),
            Policy::AocAware => {
                let res = alternating_solve(&channel.user_gains, channel.willie_gain, cfg);
                (res.user_powers(), Some(res.status))
            }
            Policy::StaticPower => match &static_power {
                Some(p) => (p.clone(), None),
                None => {
                    let res = alternating_solve(&channel.user_gains, channel.willie_gain, cfg);
                    let p = res.user_powers();
                    static_power = Some(p.clone());
                    (p, Some(res.status))
                }
            },
        };

        let slot_start = slot as f64 * cfg.aoc;
        let window = (slot_start + cfg.measurement_time, slot_start + cfg.aoc);
        let r = user_rates(&power, &channel.user_gains, cfg.user_noise);
        let mut deliveries = Vec::new();
        let mut aoi = Vec::with_capacity(k);
        let mut fractions = Vec::with_capacity(k);
        for (u, state) in users.iter_mut().enumerate() {
            let before = deliveries.len();
            state.serve(
                u,
                window,
                cfg.bandwidth * r[u],
                cfg.packet_size,
                policy == Policy::AocAware,
                &mut deliveries,
            );
            aoi.push(match deliveries[before..].last() {
                Some(d) => d.age(),
                None => window.1 - state.last_delivered_gen,
            });
            fractions.push(state.delivered_fraction());
        }

        let xi_star = optimal_detection(power.total(), channel.willie_gain, &nu).min_total_error;
        traces.push(SlotTrace {
            slot_index: slot,
            channel,
            power,
            xi_star,
            covert_ok: xi_star >= 1.0 - cfg.covert_budget,
            delivered_fractions: fractions,
            aoi,
            deliveries,
            solve_status,
        });
    }
    traces
}

pub fn covert_violation_count(traces: &[SlotTrace]) -> usize {
    traces.iter().filter(|t| !t.covert_ok).count()
}

/// Time average over slots of the user-averaged age.
pub fn average_aoi_of_trace(traces: &[SlotTrace]) -> Result<f64> {
    if traces.is_empty() {
        return Err(Error::Domain("empty trace".into()));
    }
    let total: f64 = traces
        .iter()
        .map(|t| t.aoi.iter().sum::<f64>() / t.aoi.len() as f64)
        .sum();
    Ok(total / traces.len() as f64)
}

//! Monte Carlo sweeps and figure data.
//!
//! Trial `t` of every sweep draws its topology from sub-stream `2t` and its
//! channel from sub-stream `2t + 1` of the sweep seed. Topologies and
//! channels are sampled Willie first, so a trial with `K` users sees the
//! same Willie and the same first `K` users as the trial with `K + 1`.
//! Points of a sweep therefore differ only in the swept parameter.

pub mod csv;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{next_channel_state, sample_topology, substream, ChannelState};
use crate::config::{ConfigFile, ScenarioConfig};
use crate::detection::{optimal_detection, NoiseUncertainty};
use crate::error::{Error, Result};
use crate::simulation::{covert_violation_count, run_slotted, Policy, SlotTrace};
use crate::solver::{alternating_solve, SolveStatus};

pub use csv::{emit_csv, Cell, CsvRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVariable {
    NumUsers,
    PowerBudget,
}

/// One sweep: `values` of `variable` crossed with a companion list
/// (power budgets for a user sweep, Willie distances for a power sweep).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub companion: Vec<f64>,
    pub trials: usize,
    pub base: ScenarioConfig,
    pub seed: u64,
}

impl SweepSpec {
    pub fn users(file: &ConfigFile, seed: u64) -> Self {
        Self {
            variable: SweepVariable::NumUsers,
            values: file.sweep_users.k_values.iter().map(|&k| k as f64).collect(),
            companion: file.sweep_users.p_max_values.clone(),
            trials: file.sweep_users.trials,
            base: file.scenario.clone(),
            seed,
        }
    }

    pub fn power(file: &ConfigFile, seed: u64) -> Self {
        Self {
            variable: SweepVariable::PowerBudget,
            values: file.sweep_power.p_max_values.clone(),
            companion: file.sweep_power.willie_distances.clone(),
            trials: file.sweep_power.trials,
            base: ScenarioConfig {
                num_users: file.sweep_power.num_users,
                ..file.scenario.clone()
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.values.is_empty() {
            return fail("sweep values must not be empty".into());
        }
        if self.companion.is_empty() {
            return fail("companion values must not be empty".into());
        }
        if self.trials < 1 {
            return fail("trials must be >= 1".into());
        }
        match self.variable {
            SweepVariable::NumUsers => {
                if let Some(k) = self.values.iter().find(|&&k| !(k >= 1.0 && k.fract() == 0.0)) {
                    return fail(format!("user counts must be positive integers, got {k}"));
                }
                if let Some(p) = self.companion.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
                    return fail(format!("power budgets must be > 0, got {p}"));
                }
            }
            SweepVariable::PowerBudget => {
                if let Some(p) = self.values.iter().find(|&&p| !(p >= 0.0 && p.is_finite())) {
                    return fail(format!("power budgets must be >= 0, got {p}"));
                }
                if let Some(d) = self.companion.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
                    return fail(format!("Willie distances must be > 0, got {d}"));
                }
            }
        }
        self.base.validate()
    }
}

/// One aggregated sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub value: f64,
    /// Metric name with its companion parameter, e.g. `avg_aoi@p_max=1e-8`.
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    /// Trials attempted at this point.
    pub trials: usize,
    /// Trials left out of the mean because the AoI target was infeasible.
    pub excluded: usize,
}

impl CsvRecord for ResultRow {
    fn header() -> &'static [&'static str] {
        &["value", "metric", "mean", "stderr", "trials", "excluded"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Float(self.value),
            Cell::Text(self.metric.clone()),
            Cell::Float(self.mean),
            Cell::Float(self.stderr),
            Cell::Int(self.trials as u64),
            Cell::Int(self.excluded as u64),
        ]
    }
}

/// Mean and standard error of the mean. Empty input gives NaN for both.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn row(value: f64, metric: String, samples: &[f64], trials: usize) -> ResultRow {
    let (mean, stderr) = mean_stderr(samples);
    ResultRow {
        value,
        metric,
        mean,
        stderr,
        trials,
        excluded: trials - samples.len(),
    }
}

fn trial_channel(cfg: &ScenarioConfig, seed: u64, trial: usize, willie_distance: Option<f64>) -> ChannelState {
    let mut topo = sample_topology(cfg, &mut substream(seed, 2 * trial as u64));
    if let Some(d) = willie_distance {
        topo.willie_distance = d;
    }
    next_channel_state(&topo, cfg, 0, &mut substream(seed, 2 * trial as u64 + 1))
}

/// Average AoI versus the number of users, one row per (K, P_max).
pub fn sweep_users(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    if spec.variable != SweepVariable::NumUsers {
        return Err(Error::InvalidConfig("sweep_users needs a num_users sweep".into()));
    }
    spec.validate()?;
    let mut rows = Vec::new();
    for &p_max in &spec.companion {
        for &k in &spec.values {
            let cfg = ScenarioConfig {
                num_users: k as usize,
                power_budget: p_max,
                ..spec.base.clone()
            };
            let samples: Vec<Option<f64>> = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let ch = trial_channel(&cfg, spec.seed, t, None);
                    let res = alternating_solve(&ch.user_gains, ch.willie_gain, &cfg);
                    (res.status != SolveStatus::Infeasible).then_some(res.avg_aoi)
                })
                .collect();
            let kept: Vec<f64> = samples.into_iter().flatten().collect();
            rows.push(row(k, format!("avg_aoi@p_max={p_max:e}"), &kept, spec.trials));
        }
    }
    Ok(rows)
}

/// Willie's minimum total error versus the power budget. For each Willie
/// distance two metrics are reported:
///
/// * `xi_star@d_aw=..`: mean over AoI-feasible trials of `ξ*` at the
///   solver's total power and the trial's faded Willie gain;
/// * `xi_star_raw@d_aw=..`: `ξ*` at total power `P_max` and the mean
///   Willie gain, with no covert cap applied.
pub fn sweep_power(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    if spec.variable != SweepVariable::PowerBudget {
        return Err(Error::InvalidConfig("sweep_power needs a power_budget sweep".into()));
    }
    spec.validate()?;
    let cfg0 = &spec.base;
    let nu = NoiseUncertainty::new(cfg0.willie_noise_nominal, cfg0.noise_uncertainty)?;
    let mut rows = Vec::new();
    for &d_aw in &spec.companion {
        let mean_gain = crate::channel::path_gain(d_aw, cfg0.pathloss_exponent)?;
        for &p_max in &spec.values {
            let cfg = ScenarioConfig {
                power_budget: p_max,
                ..cfg0.clone()
            };
            let samples: Vec<Option<f64>> = (0..spec.trials)
                .into_par_iter()
                .map(|t| {
                    let ch = trial_channel(&cfg, spec.seed, t, Some(d_aw));
                    let res = alternating_solve(&ch.user_gains, ch.willie_gain, &cfg);
                    (res.status != SolveStatus::Infeasible)
                        .then(|| optimal_detection(res.power.total(), ch.willie_gain, &nu).min_total_error)
                })
                .collect();
            let kept: Vec<f64> = samples.into_iter().flatten().collect();
            rows.push(row(p_max, format!("xi_star@d_aw={d_aw}"), &kept, spec.trials));
            let raw = optimal_detection(p_max, mean_gain, &nu).min_total_error;
            rows.push(row(p_max, format!("xi_star_raw@d_aw={d_aw}"), &[raw], 1));
        }
    }
    Ok(rows)
}

/// One slot of the paired AoC-aware / static-power run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5Row {
    pub slot: u64,
    pub h_aw: f64,
    pub pa_aware: f64,
    pub pa_static: f64,
    pub xi_aware: f64,
    pub xi_static: f64,
    pub threshold: f64,
}

impl CsvRecord for Fig5Row {
    fn header() -> &'static [&'static str] {
        &["slot", "h_aw", "pa_aware", "pa_static", "xi_aware", "xi_static", "threshold"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.slot),
            Cell::Float(self.h_aw),
            Cell::Float(self.pa_aware),
            Cell::Float(self.pa_static),
            Cell::Float(self.xi_aware),
            Cell::Float(self.xi_static),
            Cell::Float(self.threshold),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Fig5Run {
    pub aware: Vec<SlotTrace>,
    pub fixed: Vec<SlotTrace>,
    pub rows: Vec<Fig5Row>,
}

impl Fig5Run {
    pub fn aware_violations(&self) -> usize {
        covert_violation_count(&self.aware)
    }

    pub fn static_violations(&self) -> usize {
        covert_violation_count(&self.fixed)
    }
}

/// Runs both policies on the same topology and channel sequence: topology
/// from sub-stream 0 of `seed`, channels from sub-stream 1.
pub fn run_fig5(cfg: &ScenarioConfig, seed: u64, num_slots: usize) -> Result<Fig5Run> {
    cfg.validate()?;
    if num_slots < 1 {
        return Err(Error::InvalidConfig("num_slots must be >= 1".into()));
    }
    let topo = sample_topology(cfg, &mut substream(seed, 0));
    let aware = run_slotted(cfg, &topo, Policy::AocAware, num_slots, &mut substream(seed, 1));
    let fixed = run_slotted(cfg, &topo, Policy::StaticPower, num_slots, &mut substream(seed, 1));
    let threshold = 1.0 - cfg.covert_budget;
    let rows = aware
        .iter()
        .zip(&fixed)
        .map(|(a, s)| Fig5Row {
            slot: a.slot_index,
            h_aw: a.channel.willie_gain,
            pa_aware: a.power.total(),
            pa_static: s.power.total(),
            xi_aware: a.xi_star,
            xi_static: s.xi_star,
            threshold,
        })
        .collect();
    Ok(Fig5Run { aware, fixed, rows })
}

struct Panel<'a> {
    columns: &'static [&'static str],
    rows: &'a [Fig5Row],
}

fn write_panel(panel: Panel<'_>, path: &Path) -> Result<()> {
    let (header, rows) = csv::parse(&csv::render(panel.rows))?;
    let idx: Vec<usize> = panel
        .columns
        .iter()
        .map(|c| header.iter().position(|h| h == c).expect("known column"))
        .collect();
    let mut text = panel.columns.join(",");
    text.push('\n');
    for r in rows {
        let cells: Vec<&str> = idx.iter().map(|&i| r[i].as_str()).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the combined table to `path` and one file per panel next to it,
/// suffixed `_a_channel`, `_b_power` and `_c_covertness`.
pub fn write_fig5(run: &Fig5Run, path: &Path) -> Result<Vec<PathBuf>> {
    emit_csv(&run.rows, path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("fig5");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    let sibling = |suffix: &str| path.with_file_name(format!("{stem}_{suffix}.{ext}"));
    let panels: [(&str, &'static [&'static str]); 3] = [
        ("a_channel", &["slot", "h_aw"]),
        ("b_power", &["slot", "pa_aware", "pa_static"]),
        ("c_covertness", &["slot", "xi_aware", "xi_static", "threshold"]),
    ];
    let mut written = vec![path.to_path_buf()];
    for (suffix, columns) in panels {
        let p = sibling(suffix);
        write_panel(
            Panel {
                columns,
                rows: &run.rows,
            },
            &p,
        )?;
        written.push(p);
    }
    Ok(written)
}

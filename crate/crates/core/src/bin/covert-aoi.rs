use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use covert_aoi::channel::{next_channel_state, sample_topology, substream, ChannelState, Topology};
use covert_aoi::experiments::{emit_csv, run_fig5, sweep_power, sweep_users, write_fig5, SweepSpec};
use covert_aoi::solver::{alternating_solve, verify_kkt_feasibility, AuditReport};
use covert_aoi::{ConfigFile, SolveResult};

#[derive(Parser)]
#[command(name = "covert-aoi", version, about = "Covert NOMA age-of-information simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides `rng_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout for `solve` when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per sweep point (sweeps) or slots (fig5).
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one random channel realization and print the result as JSON.
    Solve(Common),
    /// Average AoI versus number of users.
    SweepUsers(Common),
    /// Willie's total error versus power budget.
    SweepPower(Common),
    /// Paired AoC-aware / static-power slotted run.
    Fig5(Common),
}

#[derive(Serialize)]
struct SolveReport {
    seed: u64,
    topology: Topology,
    channel: ChannelState,
    result: SolveResult,
    audit: AuditReport,
}

fn load(common: &Common) -> Result<(ConfigFile, u64)> {
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let seed = common.seed.unwrap_or(file.scenario.rng_seed);
    Ok((file, seed))
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(c) => {
            let (file, seed) = load(&c)?;
            let cfg = &file.scenario;
            let topology = sample_topology(cfg, &mut substream(seed, 0));
            let channel = next_channel_state(&topology, cfg, 0, &mut substream(seed, 1));
            let result = alternating_solve(&channel.user_gains, channel.willie_gain, cfg);
            let audit = verify_kkt_feasibility(&result, &channel.user_gains, channel.willie_gain, cfg);
            let report = SolveReport {
                seed,
                topology,
                channel,
                result,
                audit,
            };
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            write_text(c.out.as_deref(), &text)?;
        }
        Command::SweepUsers(c) => {
            let (mut file, seed) = load(&c)?;
            if let Some(t) = c.trials {
                file.sweep_users.trials = t;
            }
            let rows = sweep_users(&SweepSpec::users(&file, seed))?;
            let path = out_path(&c, "sweep_users.csv");
            emit_csv(&rows, &path)?;
            eprintln!("wrote {}", path.display());
        }
        Command::SweepPower(c) => {
            let (mut file, seed) = load(&c)?;
            if let Some(t) = c.trials {
                file.sweep_power.trials = t;
            }
            let rows = sweep_power(&SweepSpec::power(&file, seed))?;
            let path = out_path(&c, "sweep_power.csv");
            emit_csv(&rows, &path)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Fig5(c) => {
            let (file, seed) = load(&c)?;
            let cfg = covert_aoi::ScenarioConfig {
                num_users: file.fig5.num_users,
                power_budget: file.fig5.power_budget,
                ..file.scenario.clone()
            };
            let slots = c.trials.unwrap_or(file.fig5.num_slots);
            let run = run_fig5(&cfg, seed, slots)?;
            for p in write_fig5(&run, &out_path(&c, "fig5.csv"))? {
                eprintln!("wrote {}", p.display());
            }
            eprintln!(
                "covert violations: aware {}, static {}",
                run.aware_violations(),
                run.static_violations()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use covert_aoi::channel::{next_channel_state, sample_topology, substream};
use covert_aoi::config::ConfigFile;
use covert_aoi::detection::{covert_power_cap, noise_pdf, optimal_detection, total_error};
use covert_aoi::experiments::{run_fig5, sweep_power, sweep_users, ResultRow, SweepSpec};
use covert_aoi::noma::{linearized_rate, permute, rate, rates, sic_order};
use covert_aoi::simulation::fragment_packet;
use covert_aoi::solver::{aoi_subproblem, alternating_solve, effective_budget, AoiOutcome, SolveStatus};
use covert_aoi::{NoiseUncertainty, PowerAllocation, ScenarioConfig};

use common::{grid_min_avg_aoi, integrate, log_uniform, lp_min_aoi};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn random_nu(rng: &mut impl Rng) -> NoiseUncertainty {
    NoiseUncertainty::new(log_uniform(rng, 1e-13, 1e-11), log_uniform(rng, 1.05, 10.0)).unwrap()
}

fn threshold_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = substream(101, 0);
    let n = 100_000usize;
    let mut worst_value = 0.0f64;
    let mut worst_steps = 0.0f64;
    for case in 0..1000 {
        let p = log_uniform(&mut rng, 1e-9, 1e-6);
        let h = log_uniform(&mut rng, 1e-7, 1e-5);
        let nu = random_nu(&mut rng);
        let s = p * h;
        let lo = 0.5 * nu.lower();
        let hi = s + 2.0 * nu.upper();
        let step = (hi - lo) / (n - 1) as f64;
        let grid: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = lo + i as f64 * step;
                (t, total_error(t, p, h, &nu))
            })
            .collect();
        let min = grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
        let opt = optimal_detection(p, h, &nu);
        // The minimizer can be a whole interval when the two bands separate.
        let dist = grid
            .iter()
            .filter(|g| g.1 <= min + 1e-12)
            .map(|g| (g.0 - opt.optimal_threshold).abs())
            .fold(f64::INFINITY, f64::min);
        worst_steps = worst_steps.max(dist / step);
        worst_value = worst_value.max((min - opt.min_total_error).abs());
        ensure(dist <= step * (1.0 + 1e-9), || {
            format!("case {case}: grid argmin {:.3} steps from the optimal threshold", dist / step)
        })?;
        ensure((min - opt.min_total_error).abs() <= 1e-3, || {
            format!("case {case}: grid min {min} vs closed form {}", opt.min_total_error)
        })?;
    }
    within_time(start, Duration::from_secs(30))?;
    Ok(format!(
        "1000 instances, worst argmin offset {worst_steps:.3} steps, worst value gap {worst_value:.2e}, {:.1?}",
        start.elapsed()
    ))
}

fn boundary_identities() -> Outcome {
    let mut rng = substream(102, 0);
    let mut worst = [0.0f64; 3];
    for _ in 0..200 {
        let nu = random_nu(&mut rng);
        let h = log_uniform(&mut rng, 1e-8, 1e-4);
        let silent = optimal_detection(0.0, h, &nu).min_total_error;
        worst[0] = worst[0].max((silent - 1.0).abs());
        let p_zero = nu.nominal * (nu.factor - 1.0 / nu.factor) / h;
        worst[1] = worst[1].max(optimal_detection(p_zero, h, &nu).min_total_error.abs());
        let mass = integrate(&|x| noise_pdf(x, &nu), nu.lower(), nu.upper(), 1e-13 * nu.nominal);
        worst[2] = worst[2].max((mass - 1.0).abs());
    }
    ensure(worst[0] <= 1e-12, || format!("silent xi* off by {:.2e}", worst[0]))?;
    ensure(worst[1] <= 1e-9, || format!("xi* at the separation point is {:.2e}", worst[1]))?;
    ensure(worst[2] <= 1e-9, || format!("pdf mass off by {:.2e}", worst[2]))?;
    Ok(format!(
        "max errors: silent {:.1e}, zero point {:.1e}, pdf mass {:.1e}",
        worst[0], worst[1], worst[2]
    ))
}

fn covert_cap_round_trip() -> Outcome {
    let mut rng = substream(103, 0);
    let mut worst_rel = 0.0f64;
    let mut worst_bisect = 0.0f64;
    for case in 0..1000 {
        let nu = random_nu(&mut rng);
        let h = log_uniform(&mut rng, 1e-8, 1e-4);
        let eps: f64 = rng.random_range(0.01..0.99);
        let target = 1.0 - eps;
        let cap = covert_power_cap(h, &nu, eps);
        let xi = optimal_detection(cap, h, &nu).min_total_error;
        worst_rel = worst_rel.max((xi - target).abs() / target);
        ensure((xi - target).abs() <= 1e-9 * target, || {
            format!("case {case}: xi*(cap) = {xi}, want {target}")
        })?;
        let above = optimal_detection(1.01 * cap, h, &nu).min_total_error;
        ensure(above < target, || format!("case {case}: 1% over the cap still covert ({above})"))?;
        // Independent inversion by bisection on the monotone xi*(p).
        let (mut lo, mut hi) = (0.0, nu.nominal * (nu.factor - 1.0 / nu.factor) / h);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if optimal_detection(mid, h, &nu).min_total_error >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        worst_bisect = worst_bisect.max((lo - cap).abs() / cap);
        ensure((lo - cap).abs() <= 1e-9 * cap, || format!("case {case}: bisection {lo} vs cap {cap}"))?;
    }
    Ok(format!(
        "1000 instances, worst relative xi* error {worst_rel:.1e}, worst bisection gap {worst_bisect:.1e}"
    ))
}

fn sca_bound() -> Outcome {
    let mut rng = substream(104, 0);
    let noise = 1e-16;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_touch = 0.0f64;
    for draw in 0..10_000 {
        let k = 2 + draw % 5;
        let mut gains: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 1e-8, 1e-4)).collect();
        gains.sort_by(f64::total_cmp);
        let mut powers = || PowerAllocation::new((0..k).map(|_| log_uniform(&mut rng, 1e-10, 1e-6)).collect());
        let p = powers();
        let a = powers();
        for i in 0..k {
            let exact = rate(i, &p, &gains, noise);
            let lin = linearized_rate(i, &p, &a, &gains, noise);
            worst_excess = worst_excess.max(lin - exact);
            ensure(lin <= exact + 1e-9, || format!("draw {draw}, user {i}: bound {lin} > rate {exact}"))?;
            let touch = (linearized_rate(i, &a, &a, &gains, noise) - rate(i, &a, &gains, noise)).abs();
            worst_touch = worst_touch.max(touch);
            ensure(touch <= 1e-12, || format!("draw {draw}, user {i}: anchor gap {touch:.2e}"))?;
        }
    }
    Ok(format!(
        "10000 draws, K 2..6, max(bound - rate) {worst_excess:.2e}, max anchor gap {worst_touch:.1e}"
    ))
}

fn lp_oracle() -> Outcome {
    let cfg = ScenarioConfig::default();
    let mut rng = substream(105, 0);
    let mut checked = 0;
    let mut worst = 0.0f64;
    while checked < 100 {
        let k = rng.random_range(1..=6);
        let mut gains: Vec<f64> = (0..k).map(|_| log_uniform(&mut rng, 1e-7, 1e-4)).collect();
        gains.sort_by(f64::total_cmp);
        let p = PowerAllocation::new((0..k).map(|_| log_uniform(&mut rng, 1e-9, 1e-7)).collect());
        let AoiOutcome::Feasible(d) = aoi_subproblem(&p, &gains, &cfg) else {
            continue;
        };
        let lp = lp_min_aoi(&rates(&p, &gains, cfg.user_noise), &cfg).ok_or("LP oracle failed")?;
        for (a, b) in d.values.iter().zip(&lp) {
            let rel = (a - b).abs() / b;
            worst = worst.max(rel);
            ensure(rel <= 1e-9, || format!("closed form {a} vs LP {b}"))?;
        }
        checked += 1;
    }
    Ok(format!("100 feasible instances, worst relative gap {worst:.1e}"))
}

/// Random feasible channel draws at the default scenario.
fn random_instances(seed: u64, count: usize, ks: &[usize]) -> Vec<(ScenarioConfig, Vec<f64>, f64)> {
    let mut out = Vec::new();
    let mut i = 0u64;
    while out.len() < count {
        let cfg = ScenarioConfig {
            num_users: ks[out.len() % ks.len()],
            ..ScenarioConfig::default()
        };
        let topo = sample_topology(&cfg, &mut substream(seed, 2 * i));
        let ch = next_channel_state(&topo, &cfg, 0, &mut substream(seed, 2 * i + 1));
        i += 1;
        let res = alternating_solve(&ch.user_gains, ch.willie_gain, &cfg);
        if res.status != SolveStatus::Infeasible {
            out.push((cfg, ch.user_gains, ch.willie_gain));
        }
    }
    out
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst_refined = 0.0f64;
    let mut worst_coarse = f64::NEG_INFINITY;
    let instances = random_instances(106, 30, &[1, 2, 3]);
    for (n, (cfg, gains, hw)) in instances.iter().enumerate() {
        let res = alternating_solve(gains, *hw, cfg);
        let sorted = permute(gains, &sic_order(gains));
        let budget = effective_budget(*hw, cfg);
        let coarse = grid_min_avg_aoi(&sorted, budget, cfg, 0);
        let refined = grid_min_avg_aoi(&sorted, budget, cfg, 6);
        let rel = (res.avg_aoi - refined).abs() / refined;
        worst_refined = worst_refined.max(rel);
        // Positive when the solver is worse than the plain P/200 grid.
        let vs_coarse = (res.avg_aoi - coarse) / coarse;
        worst_coarse = worst_coarse.max(vs_coarse);
        ensure(rel <= 1e-3, || {
            format!("instance {n} (K={}): solver {} vs refined grid {refined}", gains.len(), res.avg_aoi)
        })?;
        ensure(vs_coarse <= 1e-3, || {
            format!("instance {n} (K={}): solver {} worse than P/200 grid {coarse}", gains.len(), res.avg_aoi)
        })?;
    }
    within_time(start, Duration::from_secs(120))?;
    Ok(format!(
        "30 instances K 1..3, worst gap to refined grid {worst_refined:.1e}, worst excess over P/200 grid {worst_coarse:.1e}, {:.1?}",
        start.elapsed()
    ))
}

fn monotone_descent() -> Outcome {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut most_iters = 0;
    for (n, (cfg, gains, hw)) in random_instances(107, 100, &[2, 3, 4, 5, 6]).iter().enumerate() {
        let res = alternating_solve(gains, *hw, cfg);
        most_iters = most_iters.max(res.outer_iterations);
        ensure(res.outer_iterations <= 50, || format!("instance {n}: {} outer iterations", res.outer_iterations))?;
        for w in res.avg_aoi_history.windows(2) {
            let rise = (w[1] - w[0]) / w[0];
            worst_rise = worst_rise.max(rise);
            ensure(rise <= 1e-9, || format!("instance {n}: average AoI rose from {} to {}", w[0], w[1]))?;
        }
    }
    Ok(format!(
        "100 instances, worst relative rise {worst_rise:.1e}, max outer iterations {most_iters}"
    ))
}

fn rows_for<'a>(rows: &'a [ResultRow], metric: &str) -> Vec<&'a ResultRow> {
    rows.iter().filter(|r| r.metric == metric).collect()
}

fn separated(lo: &ResultRow, hi: &ResultRow) -> Result<f64, String> {
    let gap = hi.mean - lo.mean;
    let se = (lo.stderr.powi(2) + hi.stderr.powi(2)).sqrt();
    ensure(gap > 2.0 * se, || {
        format!(
            "gap {gap:.3e} between {}@{} and {}@{} not above 2 SE ({:.3e})",
            lo.metric, lo.value, hi.metric, hi.value, 2.0 * se
        )
    })?;
    Ok(gap / se)
}

fn users_trend() -> Outcome {
    let start = Instant::now();
    let file = ConfigFile::default();
    ensure(file.sweep_users.trials == 200, || "default trials changed".into())?;
    let rows = sweep_users(&SweepSpec::users(&file, 1)).map_err(|e| e.to_string())?;
    let metrics: Vec<String> = file
        .sweep_users
        .p_max_values
        .iter()
        .map(|p| format!("avg_aoi@p_max={p:e}"))
        .collect();
    let mut min_z = f64::INFINITY;
    for m in &metrics {
        let col = rows_for(&rows, m);
        ensure(col.len() == 5, || format!("{m}: {} rows", col.len()))?;
        for w in col.windows(2) {
            min_z = min_z.min(separated(w[0], w[1])?);
        }
    }
    let low = rows_for(&rows, &metrics[0]);
    let high = rows_for(&rows, &metrics[1]);
    for (l, h) in low.iter().zip(&high) {
        min_z = min_z.min(separated(h, l)?);
    }
    let excluded: usize = rows.iter().map(|r| r.excluded).sum();
    within_time(start, Duration::from_secs(300))?;
    Ok(format!(
        "K 2..6 x P_max {:?}, 200 trials, smallest gap {min_z:.1} SE, {excluded} excluded, {:.1?}",
        file.sweep_users.p_max_values,
        start.elapsed()
    ))
}

fn power_trend() -> Outcome {
    let mut file = ConfigFile::default();
    file.sweep_power.trials = 20;
    let cfg = &file.scenario;
    let nu = NoiseUncertainty::new(cfg.willie_noise_nominal, cfg.noise_uncertainty).unwrap();
    let mid = 0.5 * cfg.area_radius;
    let top = file.sweep_power.p_max_values.iter().copied().fold(0.0, f64::max);
    // Predicted before the run from the closed form at the mean Willie gain.
    let predicted = optimal_detection(top, mid.powf(-cfg.pathloss_exponent), &nu).min_total_error;
    let threshold = 0.05;
    ensure(predicted < threshold, || {
        format!("configured range too small: closed form predicts {predicted} at {top} W")
    })?;
    let rows = sweep_power(&SweepSpec::power(&file, 1)).map_err(|e| e.to_string())?;
    let raw = rows_for(&rows, &format!("xi_star_raw@d_aw={mid}"));
    ensure(raw.len() == file.sweep_power.p_max_values.len(), || "mid-area Willie missing".into())?;
    for w in raw.windows(2) {
        ensure(w[1].mean < w[0].mean, || {
            format!("raw xi* not decreasing: {} at {} then {} at {}", w[0].mean, w[0].value, w[1].mean, w[1].value)
        })?;
    }
    let last = raw.last().unwrap();
    ensure(last.mean < threshold, || format!("xi* at {top} W is {}", last.mean))?;
    Ok(format!(
        "d_aw = {mid} m: raw xi* {:.3} -> {:.4} over {} budgets (predicted {predicted:.4} < {threshold})",
        raw[0].mean,
        last.mean,
        raw.len()
    ))
}

fn fig5_property() -> Outcome {
    let file = ConfigFile::default();
    let cfg = ScenarioConfig {
        num_users: file.fig5.num_users,
        power_budget: file.fig5.power_budget,
        ..file.scenario.clone()
    };
    ensure(cfg.num_users == 3, || "fig5 scenario must have K = 3".into())?;
    let slots = 100;
    let nu = NoiseUncertainty::new(cfg.willie_noise_nominal, cfg.noise_uncertainty).unwrap();
    // Pick the first seed whose channel sequence breaches the static power:
    // some slot with h_t > h_0 · cap(h_0) / p_static.
    let mut chosen = None;
    for seed in 1..=50u64 {
        let topo = sample_topology(&cfg, &mut substream(seed, 0));
        let mut rng = substream(seed, 1);
        let chans: Vec<_> = (0..slots as u64).map(|t| next_channel_state(&topo, &cfg, t, &mut rng)).collect();
        let h0 = chans[0].willie_gain;
        let p_static = alternating_solve(&chans[0].user_gains, h0, &cfg).power.total();
        let bound = h0 * covert_power_cap(h0, &nu, cfg.covert_budget) / p_static;
        if let Some(t) = chans.iter().position(|c| c.willie_gain > bound) {
            chosen = Some((seed, t));
            break;
        }
    }
    let (seed, slot) = chosen.ok_or("no seed in 1..=50 meets the breach condition")?;
    let run = run_fig5(&cfg, seed, slots).map_err(|e| e.to_string())?;
    ensure(run.aware_violations() == 0, || format!("aware policy: {} violations", run.aware_violations()))?;
    ensure(run.static_violations() >= 1, || "static policy never crossed the threshold".into())?;
    ensure(!run.fixed[slot].covert_ok, || format!("predicted breach at slot {slot} did not occur"))?;
    let n = fragment_packet(0.4, 0.01).map_err(|e| e.to_string())?;
    ensure(n == 40, || format!("fragment count {n}"))?;
    Ok(format!(
        "seed {seed} (first breach predicted at slot {slot}): aware 0 violations, static {}, 0.4 s / 0.01 s -> {n} fragments",
        run.static_violations()
    ))
}

fn run_cli(args: &[&str], dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_covert-aoi"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .filter(|(name, _)| name != "config.toml")
        .collect();
    files.sort();
    files.push(("<stdout>".into(), out.stdout));
    Ok(files)
}

fn determinism() -> Outcome {
    let config = "\
[scenario]
power_budget = 1e-7

[sweep_users]
k_values = [2, 3]
p_max_values = [1e-8, 1e-7]
trials = 6

[sweep_power]
p_max_values = [1e-8, 1e-7]
willie_distances = [50.0]
trials = 6

[fig5]
num_slots = 30
";
    let mut compared = Vec::new();
    for (cmd, out) in [
        ("solve", "solve.json"),
        ("sweep-users", "users.csv"),
        ("sweep-power", "power.csv"),
        ("fig5", "fig5.csv"),
    ] {
        let runs: Vec<_> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
                std::fs::write(dir.path().join("config.toml"), config).map_err(|e| e.to_string())?;
                run_cli(&[cmd, "--config", "config.toml", "--seed", "7", "--out", out], dir.path())
            })
            .collect::<Result<_, _>>()?;
        ensure(runs[0].len() > 1, || format!("{cmd} wrote nothing"))?;
        ensure(runs[0] == runs[1], || format!("{cmd} output differs between runs"))?;
        compared.push(format!("{cmd} ({} files)", runs[0].len() - 1));
    }
    Ok(format!("byte-identical reruns: {}", compared.join(", ")))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("threshold oracle", threshold_oracle),
        ("boundary identities", boundary_identities),
        ("covert cap round trip", covert_cap_round_trip),
        ("SCA lower bound", sca_bound),
        ("LP oracle", lp_oracle),
        ("solver vs simplex grid", solver_oracle),
        ("monotone descent", monotone_descent),
        ("AoI vs users trend", users_trend),
        ("error vs power trend", power_trend),
        ("AoC-aware vs static covertness", fig5_property),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

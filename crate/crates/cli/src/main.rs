//! Command-line front end: scenario ingestion, dispatch to the
//! analytic engines, simulator and optimizers, and CSV/JSON emission.
//!
//! Exit codes: 0 success, 1 configuration error, 2 infeasible search,
//! 3 analytic-vs-Monte-Carlo disagreement.

mod output;
mod scenario_file;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use cyclerel_core::analytic_star::star_cycle_failure;
use cyclerel_core::analytic_generic::power_curve;
use cyclerel_core::optimizer::{
    choose_hops, dest_sweep, failure_at_snr, optimize_relay_count, optimize_star_3hop,
    sweep_min_snr, AllocationGrid, SearchError, SnrSearchSpec, SweepScheme,
};
use cyclerel_core::rng::TrialRng;
use cyclerel_core::scenario::{
    PhasePlan, Protocol, ScenarioConfig, TopologyKind, TopologySpec,
};
use cyclerel_core::simulator::{
    estimate_failure, estimate_star_failures, simulate_cycle_traced, FadeMatrix,
};

use output::{num, write_table, Format, Table};

const Z95: f64 = 1.959963984540054;

#[derive(Parser)]
#[command(name = "cyclerel", version, about = "Reliability analysis of cooperative relaying cycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (flat key=value lines).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// RNG seed (simulate / validate); never wall-clock seeded.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials (simulate / validate).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Phase-fraction grid step (optimize-phases, sweep), or the duty
    /// grid step in percentage points (duty-cycle).
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    /// SNR search bracket as "lo,hi" in dB (default "-20,60").
    #[arg(long, global = true)]
    bracket_db: Option<String>,
    /// Target cycle failure probability (default 1e-9).
    #[arg(long, global = true)]
    target: Option<f64>,
    /// Model scheduling as free: drop the scheduling slice.
    #[arg(long, global = true)]
    ideal_scheduling: bool,
    /// Force the detailed overhead terms on (schedule-summary bits in
    /// adaptive retransmissions, ACK piggyback in uplink phase I).
    #[arg(long, global = true)]
    appendix_overheads: bool,
    /// Print one trace line per packet per phase to stderr (simulate,
    /// star schemes).
    #[arg(long, global = true)]
    trace: bool,
    /// Always-on background power in dB (duty-cycle; default none).
    #[arg(long, global = true)]
    background_db: Option<f64>,
    /// Comma-separated network sizes (sweep).
    #[arg(long, global = true)]
    n_list: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Closed-form failure probabilities at the scenario's SNR.
    Analyze,
    /// Monte Carlo estimate with a 95% Wilson interval.
    Simulate,
    /// Analytic-vs-Monte-Carlo agreement across the star engines.
    Validate,
    /// Minimum SNR per (scheme, network size).
    Sweep,
    /// Brute-force phase-fraction search for the adaptive 3-hop star.
    OptimizePhases,
    /// Best relay count for non-simultaneous relaying.
    OptimizeRelays,
    /// Hop-count decision over unoptimized even splits.
    ChooseHops,
    /// Duty-cycle power trade-off at the reliability target.
    DutyCycle,
    /// Minimum SNR versus subscriber count.
    DestSweep,
}

enum CliError {
    Config(String),
    Infeasible(String),
    Disagreement(String),
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        CliError::Infeasible(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Infeasible(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Disagreement(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let path = cli
        .scenario
        .as_ref()
        .ok_or_else(|| CliError::Config("--scenario is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = scenario_file::parse_scenario(&text).map_err(CliError::Config)?;
    if cli.ideal_scheduling {
        let plan = config.phase_plan;
        config.phase_plan =
            PhasePlan::with_fractions(plan.f_d, plan.f_u, 0.0, config.cycle_time_s);
    }
    if cli.appendix_overheads {
        config.scheduling_overhead = true;
        config.ack_bit = true;
    }
    Ok(config)
}

fn search_spec(cli: &Cli) -> Result<SnrSearchSpec, CliError> {
    let mut spec = SnrSearchSpec::default();
    if let Some(t) = cli.target {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Config(format!("--target must lie in (0,1), got {t}")));
        }
        spec.target_failure = t;
    }
    if let Some(b) = &cli.bracket_db {
        let parts: Vec<&str> = b.split(',').collect();
        let parsed: Option<(f64, f64)> = match parts.as_slice() {
            [lo, hi] => lo.trim().parse().ok().zip(hi.trim().parse().ok()),
            _ => None,
        };
        match parsed {
            Some((lo, hi)) if lo < hi => spec.bracket_db = (lo, hi),
            _ => {
                return Err(CliError::Config(format!(
                    "--bracket-db expects \"lo,hi\" with lo < hi, got `{b}`"
                )))
            }
        }
    }
    Ok(spec)
}

fn require_trials_seed(cli: &Cli, command: &str) -> Result<(u64, u64), CliError> {
    let trials = cli
        .trials
        .filter(|&t| t >= 1)
        .ok_or_else(|| CliError::Config(format!("{command} requires --trials >= 1")))?;
    let seed = cli
        .seed
        .ok_or_else(|| CliError::Config(format!("{command} requires --seed")))?;
    Ok((trials, seed))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let spec = search_spec(cli)?;
    let grid = AllocationGrid { step: cli.grid_step.unwrap_or(0.02) };

    let mut pairs = scenario_file::resolved_pairs(&config);
    let mut disagreement: Option<String> = None;

    let table = match cli.command {
        Command::Analyze => {
            if config.protocol.is_star_scheme() {
                let b = star_cycle_failure(&config);
                let mut t = Table::new(vec![
                    "p_downlink",
                    "p_uplink",
                    "p_scheduling",
                    "p_cycle_bound",
                ]);
                t.push(vec![
                    num(b.p_downlink),
                    num(b.p_uplink),
                    num(b.p_scheduling),
                    num(b.p_cycle_bound),
                ]);
                t
            } else {
                let p = failure_at_snr(&config, config.channel.snr_db());
                let mut t = Table::new(vec!["p_failure"]);
                t.push(vec![num(p)]);
                t
            }
        }
        Command::Simulate => {
            let (trials, seed) = require_trials_seed(cli, "simulate")?;
            pairs.push(("trials", trials.to_string()));
            pairs.push(("seed", seed.to_string()));
            if cli.trace {
                if !config.protocol.is_star_scheme() {
                    return Err(CliError::Config(
                        "--trace requires a star scheme".into(),
                    ));
                }
                let mut rng = TrialRng::new(seed, 0);
                let fades =
                    FadeMatrix::draw(&mut rng, config.topology.n_nodes as usize + 1);
                simulate_cycle_traced(&config, &fades, &mut |ev| {
                    eprintln!(
                        "trace phase={} packet={} rate_bps={:.0} tx={:?} new_rx={:?}",
                        ev.phase, ev.packet, ev.rate_bps, ev.transmitters, ev.new_receivers
                    );
                });
            }
            let est = estimate_failure(&config, trials, seed);
            let mut t = Table::new(vec!["p_estimate", "ci_halfwidth", "trials", "seed"]);
            t.push(vec![
                num(est.p),
                num(est.ci_halfwidth.unwrap_or(0.0)),
                json!(trials),
                json!(seed),
            ]);
            t
        }
        Command::Validate => {
            let (trials, seed) = require_trials_seed(cli, "validate")?;
            pairs.push(("trials", trials.to_string()));
            pairs.push(("seed", seed.to_string()));
            let engines = [
                Protocol::OneHop,
                Protocol::Fixed2Hop,
                Protocol::Adaptive2Hop,
                Protocol::Fixed3Hop,
                Protocol::Adaptive3Hop,
            ];
            let mut t =
                Table::new(vec!["engine", "side", "analytic", "mc_estimate", "se", "z"]);
            let mut worst: (f64, &'static str) = (0.0, "");
            for (i, proto) in engines.into_iter().enumerate() {
                let mut cfg = config.clone();
                cfg.topology = TopologySpec::star(config.topology.n_nodes);
                cfg.protocol = proto;
                cfg.phase_plan = PhasePlan::even(
                    proto.hops().unwrap(),
                    config.phase_plan.f_s,
                    cfg.cycle_time_s,
                );
                let breakdown = star_cycle_failure(&cfg);
                let mc = estimate_star_failures(&cfg, trials, seed.wrapping_add(i as u64));
                for (side, analytic, est) in [
                    ("downlink", breakdown.p_downlink, mc.downlink),
                    ("uplink", breakdown.p_uplink, mc.uplink),
                ] {
                    let se = est.ci_halfwidth.unwrap_or(0.0) / Z95;
                    let z = if se > 0.0 {
                        (est.p - analytic) / se
                    } else if est.p == analytic {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    if z.abs() > worst.0.abs() {
                        worst = (z, proto.name());
                    }
                    t.push(vec![
                        json!(proto.name()),
                        json!(side),
                        num(analytic),
                        num(est.p),
                        num(se),
                        num(z),
                    ]);
                }
            }
            if worst.0.abs() > 3.0 {
                disagreement = Some(format!(
                    "engine {} disagrees with the Monte Carlo oracle: z = {:.2}",
                    worst.1, worst.0
                ));
            }
            t
        }
        Command::Sweep => {
            let ns: Vec<u32> = match &cli.n_list {
                None => vec![2, 3, 4, 5, 6, 8, 10, 15, 20, 25, 30],
                Some(list) => list
                    .split(',')
                    .map(|s| {
                        s.trim().parse().map_err(|_| {
                            CliError::Config(format!("--n-list: cannot parse `{s}`"))
                        })
                    })
                    .collect::<Result<_, _>>()?,
            };
            let points = sweep_min_snr(&config, &ns, &SweepScheme::ALL, &grid, &spec)?;
            let mut t = Table::new(vec!["scheme", "n", "min_snr_db", "inner_param"]);
            for p in points {
                t.push(vec![
                    json!(p.scheme.name()),
                    json!(p.n),
                    num(p.min_snr_db),
                    p.inner_param.map_or(serde_json::Value::Null, |v| json!(v)),
                ]);
            }
            t
        }
        Command::OptimizePhases => {
            if config.protocol != Protocol::Adaptive3Hop {
                return Err(CliError::Config(
                    "optimize-phases requires protocol=adaptive_3hop".into(),
                ));
            }
            let opt = optimize_star_3hop(&config, &grid, &spec)?;
            let mut t = Table::new(vec!["side", "f1", "f2", "f3", "min_snr_db"]);
            t.push(vec![
                json!("downlink"),
                num(opt.f_d[0]),
                num(opt.f_d[1]),
                num(opt.f_d[2]),
                serde_json::Value::Null,
            ]);
            t.push(vec![
                json!("uplink"),
                num(opt.f_u[0]),
                num(opt.f_u[1]),
                num(opt.f_u[2]),
                serde_json::Value::Null,
            ]);
            t.push(vec![
                json!("combined"),
                serde_json::Value::Null,
                serde_json::Value::Null,
                serde_json::Value::Null,
                num(opt.min_snr_db),
            ]);
            t
        }
        Command::OptimizeRelays => {
            // A star casts to a generic network of n+1 participants
            // with 2n streams of one subscriber each.
            let mut cfg = config.clone();
            if config.topology.kind == TopologyKind::Star {
                let n = config.topology.n_nodes;
                cfg.topology = TopologySpec::generic(n + 1, 2 * n, 1);
            }
            cfg.hop_count = Some(cfg.hop_count.unwrap_or(2));
            let n_net = cfg.topology.n_nodes;
            if n_net < 3 {
                return Err(CliError::Config(
                    "optimize-relays needs at least one potential relay (n_nodes >= 3)".into(),
                ));
            }
            let opt = optimize_relay_count(&cfg, 1..=(n_net - 2), &spec)?;
            let mut t = Table::new(vec!["best_r", "min_snr_db", "at_boundary"]);
            t.push(vec![json!(opt.best_r), num(opt.min_snr_db), json!(opt.at_boundary)]);
            t
        }
        Command::ChooseHops => {
            let choice = choose_hops(&config, &spec)?;
            let mut t = Table::new(vec!["hops", "min_snr_db", "best"]);
            for (hops, snr) in &choice.candidates {
                t.push(vec![json!(hops), num(*snr), json!(*hops == choice.best_hops)]);
            }
            t
        }
        Command::DutyCycle => {
            let step = cli.grid_step.unwrap_or(2.0);
            if !(step > 0.0 && step <= 100.0) {
                return Err(CliError::Config(format!(
                    "duty-cycle --grid-step must lie in (0,100], got {step}"
                )));
            }
            let mut duty_grid = Vec::new();
            let mut k = 1u32;
            loop {
                let x = step * k as f64;
                if x >= 100.0 - 1e-9 {
                    duty_grid.push(100.0);
                    break;
                }
                duty_grid.push(x);
                k += 1;
            }
            let background = cli.background_db.unwrap_or(f64::NEG_INFINITY);
            pairs.push(("background_db", format!("{background}")));
            let points = power_curve(
                &config,
                &duty_grid,
                background,
                spec.target_failure,
                spec.bracket_db,
                spec.tolerance_db,
            )
            .map_err(|e| CliError::Infeasible(e.to_string()))?;
            let best = points
                .iter()
                .min_by(|a, b| a.avg_total_power_db.partial_cmp(&b.avg_total_power_db).unwrap())
                .map(|p| p.duty_pct)
                .unwrap_or(100.0);
            let mut t = Table::new(vec![
                "duty_pct",
                "awake_tx_snr_db",
                "avg_tx_power_db",
                "avg_total_power_db",
                "best",
            ]);
            for p in points {
                t.push(vec![
                    num(p.duty_pct),
                    num(p.awake_tx_snr_db),
                    num(p.avg_tx_power_db),
                    num(p.avg_total_power_db),
                    json!(p.duty_pct == best),
                ]);
            }
            t
        }
        Command::DestSweep => {
            let points = dest_sweep(&config, &spec)?;
            let mut t = Table::new(vec!["destinations", "min_snr_db"]);
            for p in points {
                t.push(vec![json!(p.destinations), num(p.min_snr_db)]);
            }
            t
        }
    };

    pairs.push(("search_target", format!("{:e}", spec.target_failure)));
    pairs.push((
        "search_bracket_db",
        format!("{},{}", spec.bracket_db.0, spec.bracket_db.1),
    ));

    match &cli.out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
            write_table(&mut file, cli.format, &pairs, &table)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            write_table(&mut stdout.lock(), cli.format, &pairs, &table)?;
        }
    }

    if let Some(msg) = disagreement {
        return Err(CliError::Disagreement(msg));
    }
    Ok(())
}

//! Command-line front end: single-block runs, sweep experiments,
//! convergence traces, and the tiny-instance oracle validation suite.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use cscn::harness::{
    brute_force_oracle, run_block, run_experiment, tiny_unicast_instance, write_block_report,
    write_cache_allocation, write_convergence_trace, write_manifest, write_sweep, Scheme,
    SweepVar, EXPERIMENT_BLOCK,
};
use cscn::model::{desk_profile, load_config, SystemConfig};
use cscn::scenario::{
    build_popularity, derive_seed, place_nodes, sample_window, Substreams,
};
use cscn::{delivery, Result};

#[derive(Parser)]
#[command(name = "cscn", version, about = "Cache-enabled cloud small-cell network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one block under a caching scheme and write the block report.
    Run {
        /// Config file; the built-in desk profile when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Caching scheme: proposed, uc, lru, or gac.
        #[arg(long, default_value = "proposed")]
        scheme: String,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Block index (block 0 has no history).
        #[arg(long, default_value_t = EXPERIMENT_BLOCK)]
        block: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Sweep a variable over values for several schemes.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Variable to sweep: mu, patterns, or users.
        #[arg(long)]
        var: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Comma-separated schemes.
        #[arg(long, value_delimiter = ',', default_value = "proposed,uc,lru,gac")]
        schemes: Vec<String>,
        /// Repetitions per point, each with a derived seed.
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Emit penalty-loop convergence traces for a few slots.
    Converge {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of slots to trace.
        #[arg(long, default_value_t = 3)]
        slots: usize,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Validate the delivery optimizer against the brute-force oracle on
    /// tiny unicast instances.
    Oracle {
        /// Number of seeded instances.
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

fn load(config: &Option<PathBuf>, seed: Option<u64>) -> Result<SystemConfig> {
    let mut cfg = match config {
        Some(path) => load_config(&fs::read_to_string(path)?)?,
        None => desk_profile(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn cmd_run(
    config: Option<PathBuf>,
    scheme: &str,
    seed: Option<u64>,
    block: u64,
    out_dir: PathBuf,
) -> Result<()> {
    let cfg = load(&config, seed)?;
    let scheme = Scheme::from_str(scheme)?;
    fs::create_dir_all(&out_dir)?;
    let report = run_block(scheme, block, &cfg)?;
    write_block_report(&report, &out_dir.join("block_report.csv"))?;
    write_cache_allocation(&report.cache, &out_dir.join("cache_allocation.csv"))?;
    write_manifest(&cfg, &out_dir.join("manifest.txt"))?;
    println!(
        "scheme={} block={} mean_power_w={} infeasible_slots={}",
        report.scheme, report.block, report.mean_power.total, report.infeasible_slots
    );
    Ok(())
}

fn cmd_sweep(
    config: Option<PathBuf>,
    var: &str,
    values: &[f64],
    schemes: &[String],
    reps: usize,
    seed: Option<u64>,
    out_dir: PathBuf,
) -> Result<()> {
    let cfg = load(&config, seed)?;
    let var = SweepVar::from_str(var)?;
    let schemes: Vec<Scheme> = schemes
        .iter()
        .map(|s| Scheme::from_str(s))
        .collect::<Result<_>>()?;
    fs::create_dir_all(&out_dir)?;
    let rows = run_experiment(&cfg, var, values, &schemes, reps)?;
    write_sweep(&rows, &out_dir.join("sweep.csv"))?;
    write_manifest(&cfg, &out_dir.join("manifest.txt"))?;
    for row in &rows {
        println!(
            "{}={} scheme={} mean_power_w={} stderr_w={}",
            row.sweep_var, row.value, row.scheme, row.mean_power_w, row.stderr_w
        );
    }
    Ok(())
}

fn cmd_converge(
    config: Option<PathBuf>,
    seed: Option<u64>,
    slots: usize,
    out_dir: PathBuf,
) -> Result<()> {
    let cfg = load(&config, seed)?;
    fs::create_dir_all(&out_dir)?;
    let streams = Substreams::new(cfg.seed);
    let geometry = place_nodes(&cfg, &streams)?;
    let profile = build_popularity(&cfg, &streams);
    let window = sample_window(&geometry, &profile, &cfg, EXPERIMENT_BLOCK, &streams);
    // Trace against the cache the proposed scheme would use.
    let history = sample_window(&geometry, &profile, &cfg, EXPERIMENT_BLOCK - 1, &streams);
    let (cache, _) = cscn::cache::alternating_update(
        &history,
        cscn::baselines::uniform_caching(&cfg),
        &cfg,
        &streams,
    )?;
    for t in 0..slots.min(cfg.block_length) {
        let mut rng = streams.delivery_init(window.block, t as u64, 0);
        let sol = delivery::penalty_cccp(
            &cache,
            &window.requests[t],
            &window.channels,
            t,
            &cfg,
            &mut rng,
        )?;
        let path = out_dir.join(format!("converge_slot{t}.csv"));
        write_convergence_trace(&sol.trace, &path)?;
        println!(
            "slot={} iterations={} final_objective_w={} omega_max={}",
            t,
            sol.trace.len(),
            sol.trace.last().map(|r| r.objective).unwrap_or(f64::NAN),
            sol.omega_max
        );
    }
    write_manifest(&cfg, &out_dir.join("manifest.txt"))?;
    Ok(())
}

fn cmd_oracle(instances: usize, seed: u64, out_dir: PathBuf) -> Result<()> {
    fs::create_dir_all(&out_dir)?;
    let mut out = String::from("instance,oracle_power_w,cccp_power_w,ratio\n");
    let mut ratios = Vec::new();
    for i in 0..instances {
        let instance = tiny_unicast_instance(derive_seed(seed, i as u64))?;
        let oracle = brute_force_oracle(
            &instance.requests,
            &instance.channels,
            0,
            &instance.cache,
            &instance.config,
        )?;
        let streams = Substreams::new(instance.config.seed);
        let mut rng = streams.delivery_init(0, 0, 0);
        let sol = delivery::penalty_cccp(
            &instance.cache,
            &instance.requests,
            &instance.channels,
            0,
            &instance.config,
            &mut rng,
        )?;
        let ratio = sol.power.total / oracle.power;
        ratios.push(ratio);
        out.push_str(&format!("{},{},{},{}\n", i, oracle.power, sol.power.total, ratio));
    }
    fs::write(out_dir.join("oracle.csv"), &out)?;
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = ratios[ratios.len() / 2];
    let p90 = ratios[(ratios.len() * 9) / 10..].first().copied().unwrap_or(median);
    println!(
        "instances={} median_ratio={} p90_ratio={}",
        instances, median, p90
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            scheme,
            seed,
            block,
            out_dir,
        } => cmd_run(config, &scheme, seed, block, out_dir),
        Command::Sweep {
            config,
            var,
            values,
            schemes,
            reps,
            seed,
            out_dir,
        } => cmd_sweep(config, &var, &values, &schemes, reps, seed, out_dir),
        Command::Converge {
            config,
            seed,
            slots,
            out_dir,
        } => cmd_converge(config, seed, slots, out_dir),
        Command::Oracle {
            instances,
            seed,
            out_dir,
        } => cmd_oracle(instances, seed, out_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

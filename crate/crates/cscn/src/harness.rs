//! Experiment orchestration: the two-timescale block loop, caching-scheme
//! comparisons, sweep experiments, the brute-force clustering oracle, and
//! all CSV/manifest output.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::{genie_aided_caching, lru_update, uniform_caching, LruState};
use crate::cache::alternating_update;
use crate::delivery::{self, penalty_cccp, DeliverySolution, IterationRecord, SlotStatus};
use crate::model::{CacheAllocation, Clustering, PowerBreakdown, RequestSlot, SystemConfig};
use crate::scenario::{
    build_popularity, derive_seed, place_nodes, sample_window, BlockWindow, Substreams,
};
use crate::{Error, Result};

/// Caching scheme driving a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Two-stage design: cache optimized on the previous block's window.
    Proposed,
    /// Uniform caching (upper bound).
    Uniform,
    /// Least-recently-used online caching.
    Lru,
    /// Genie-aided caching: optimized on the block it serves (lower bound).
    Genie,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::Uniform, Scheme::Lru, Scheme::Genie];
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scheme::Proposed => "proposed",
            Scheme::Uniform => "uc",
            Scheme::Lru => "lru",
            Scheme::Genie => "gac",
        };
        f.write_str(s)
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Scheme::Proposed),
            "uc" | "uniform" => Ok(Scheme::Uniform),
            "lru" => Ok(Scheme::Lru),
            "gac" | "genie" => Ok(Scheme::Genie),
            other => Err(Error::Parse(format!("unknown scheme: {other}"))),
        }
    }
}

/// One slot's outcome within a block.
#[derive(Debug, Clone)]
pub struct SlotOutcome {
    pub slot: usize,
    /// Power split; `None` when the slot was infeasible.
    pub power: Option<PowerBreakdown>,
    pub status: SlotStatus,
    /// Penalty-loop iterations spent.
    pub iterations: usize,
}

/// Per-block result: per-slot outcomes and the feasible-slot average.
#[derive(Debug, Clone)]
pub struct BlockReport {
    pub scheme: Scheme,
    pub block: u64,
    pub slots: Vec<SlotOutcome>,
    pub infeasible_slots: usize,
    /// Average over feasible slots; NaN if no slot was feasible.
    pub mean_power: PowerBreakdown,
    /// Cache allocation the block ran with (final LRU state for LRU).
    pub cache: CacheAllocation,
}

impl BlockReport {
    fn from_outcomes(
        scheme: Scheme,
        block: u64,
        slots: Vec<SlotOutcome>,
        cache: CacheAllocation,
    ) -> Self {
        let feasible: Vec<&PowerBreakdown> =
            slots.iter().filter_map(|s| s.power.as_ref()).collect();
        let infeasible_slots = slots.len() - feasible.len();
        let mean_power = if feasible.is_empty() {
            PowerBreakdown {
                edge: f64::NAN,
                fronthaul: f64::NAN,
                total: f64::NAN,
            }
        } else {
            let n = feasible.len() as f64;
            PowerBreakdown::new(
                feasible.iter().map(|p| p.edge).sum::<f64>() / n,
                feasible.iter().map(|p| p.fronthaul).sum::<f64>() / n,
            )
        };
        BlockReport {
            scheme,
            block,
            slots,
            infeasible_slots,
            mean_power,
            cache,
        }
    }

    /// Sum of feasible slot powers (the block objective).
    pub fn total_power(&self) -> f64 {
        self.slots
            .iter()
            .filter_map(|s| s.power.as_ref())
            .map(|p| p.total)
            .sum()
    }
}

fn outcome_from(slot: usize, result: Result<DeliverySolution>) -> Result<SlotOutcome> {
    match result {
        Ok(sol) => Ok(SlotOutcome {
            slot,
            power: Some(sol.power),
            status: sol.status,
            iterations: sol.trace.len(),
        }),
        Err(Error::InfeasibleSlot { .. }) => Ok(SlotOutcome {
            slot,
            power: None,
            status: SlotStatus::InfeasibleSlot,
            iterations: 0,
        }),
        Err(e) => Err(Error::SolveFailed(format!("slot {slot}: {e}"))),
    }
}

fn solve_window_with_cache(
    cache: &CacheAllocation,
    window: &BlockWindow,
    config: &SystemConfig,
    streams: &Substreams,
) -> Result<Vec<SlotOutcome>> {
    (0..window.requests.len())
        .into_par_iter()
        .map(|t| {
            let mut rng = streams.delivery_init(window.block, t as u64, 0);
            let result = penalty_cccp(
                cache,
                &window.requests[t],
                &window.channels,
                t,
              config,
                &mut rng,
            );
            outcome_from(t, result)
        })
        .collect()
}

/// Runs one block under a caching scheme.
///
/// Stage 1 obtains the cache allocation (the proposed scheme optimizes on
/// the previous block's realized window; the first block falls back to
/// uniform caching). Stage 2 runs the online delivery slot by slot.
/// Deterministic in (config, seed, scheme, block).
pub fn run_block(scheme: Scheme, block: u64, config: &SystemConfig) -> Result<BlockReport> {
    let streams = Substreams::new(config.seed);
    let geometry = place_nodes(config, &streams)?;
    let profile = build_popularity(config, &streams);
    let current = sample_window(&geometry, &profile, config, block, &streams);

    let (slots, cache) = match scheme {
        Scheme::Uniform => {
            let l = uniform_caching(config);
            (solve_window_with_cache(&l, &current, config, &streams)?, l)
        }
        Scheme::Proposed => {
            let l = if block == 0 {
                uniform_caching(config)
            } else {
                let history = sample_window(&geometry, &profile, config, block - 1, &streams);
                let (l, _) =
                    alternating_update(&history, uniform_caching(config), config, &streams)?;
                l
            };
            (solve_window_with_cache(&l, &current, config, &streams)?, l)
        }
        Scheme::Genie => {
            let l = genie_aided_caching(&current, config, &streams)?;
            (solve_window_with_cache(&l, &current, config, &streams)?, l)
        }
        Scheme::Lru => {
            let history = if block == 0 {
                None
            } else {
                Some(sample_window(&geometry, &profile, config, block - 1, &streams).requests)
            };
            let mut state = LruState::warm(config, history.as_deref());
            let mut outcomes = Vec::with_capacity(current.requests.len());
            for t in 0..current.requests.len() {
                let l = state.allocation(config);
                let mut rng = streams.delivery_init(current.block, t as u64, 0);
                let result = penalty_cccp(
                    &l,
                    &current.requests[t],
                    &current.channels,
                    t,
                    config,
                    &mut rng,
                );
                if let Ok(sol) = &result {
                    apply_lru_accesses(&mut state, &current.requests[t], &sol.clustering, config);
                }
                outcomes.push(outcome_from(t, result)?);
            }
            (outcomes, state.allocation(config))
        }
    };
    Ok(BlockReport::from_outcomes(scheme, block, slots, cache))
}

/// Applies one slot's accesses to the LRU state: every (file, serving SBS)
/// pair counts as one access, after delivery.
fn apply_lru_accesses(
    state: &mut LruState,
    requests: &RequestSlot,
    clustering: &Clustering,
    config: &SystemConfig,
) {
    for (fi, &file) in requests.requested_files().iter().enumerate() {
        for b in 0..config.num_sbs {
            if clustering.get(fi, b) > 0.5 {
                lru_update(state, b, file, true, config);
            }
        }
    }
}

/// Variable swept by [`run_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Fractional caching capacity.
    Mu,
    /// Number of preference patterns.
    Patterns,
    /// Number of users.
    Users,
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepVar::Mu => "mu",
            SweepVar::Patterns => "patterns",
            SweepVar::Users => "users",
        };
        f.write_str(s)
    }
}

impl FromStr for SweepVar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mu" => Ok(SweepVar::Mu),
            "patterns" | "i" => Ok(SweepVar::Patterns),
            "users" | "k" => Ok(SweepVar::Users),
            other => Err(Error::Parse(format!("unknown sweep variable: {other}"))),
        }
    }
}

/// Applies one sweep value to a copy of the base config.
pub fn apply_sweep(base: &SystemConfig, var: SweepVar, value: f64) -> Result<SystemConfig> {
    let mut cfg = base.clone();
    match var {
        SweepVar::Mu => cfg.fractional_capacity = value,
        SweepVar::Patterns => cfg.patterns = value.round() as usize,
        SweepVar::Users => cfg.num_users = value.round() as usize,
    }
    cfg.rederive()
}

/// Block index experiments run at: the second block, so every scheme has
/// exactly one block of history.
pub const EXPERIMENT_BLOCK: u64 = 1;

/// One aggregated sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sweep_var: SweepVar,
    pub value: f64,
    pub scheme: Scheme,
    /// Mean over repetitions of the block-averaged total power; NaN when
    /// every repetition failed.
    pub mean_power_w: f64,
    /// Standard error of that mean over repetitions.
    pub stderr_w: f64,
    /// Infeasible slots summed over repetitions.
    pub infeasible_slots: usize,
    /// Base seed the repetition seeds derive from.
    pub seed: u64,
}

/// Runs a sweep: for each (value, scheme, repetition) one block at
/// [`EXPERIMENT_BLOCK`] with a repetition-specific derived seed, aggregated
/// into mean and standard error per (value, scheme).
///
/// Failed repetitions are reported on stderr and skipped; the run
/// continues.
pub fn run_experiment(
    base: &SystemConfig,
    var: SweepVar,
    values: &[f64],
    schemes: &[Scheme],
    repetitions: usize,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &value in values {
        let cfg = apply_sweep(base, var, value)?;
        for &scheme in schemes {
            let results: Vec<Result<BlockReport>> = (0..repetitions)
                .into_par_iter()
                .map(|rep| {
                    let mut rep_cfg = cfg.clone();
                    rep_cfg.seed = derive_seed(base.seed, rep as u64);
                    run_block(scheme, EXPERIMENT_BLOCK, &rep_cfg)
                })
                .collect();
            let mut means = Vec::new();
            let mut infeasible = 0;
            for (rep, r) in results.into_iter().enumerate() {
                match r {
                    Ok(report) => {
                        if report.mean_power.total.is_finite() {
                            means.push(report.mean_power.total);
                        }
                        infeasible += report.infeasible_slots;
                    }
                    Err(e) => {
                        eprintln!("sweep {var}={value} scheme={scheme} rep={rep} failed: {e}");
                    }
                }
            }
            let (mean, stderr) = if means.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let n = means.len() as f64;
                let mean = means.iter().sum::<f64>() / n;
                let var_s = if means.len() > 1 {
                    means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)
                } else {
                    0.0
                };
                (mean, (var_s / n).sqrt())
            };
            rows.push(SweepRow {
                sweep_var: var,
                value,
                scheme,
                mean_power_w: mean,
                stderr_w: stderr,
                infeasible_slots: infeasible,
                seed: base.seed,
            });
        }
    }
    Ok(rows)
}

/// Result of the brute-force clustering enumeration.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Globally minimal total power over binary clusterings.
    pub power: f64,
    pub clustering: Clustering,
}

/// Enumerates all binary clusterings of a tiny unicast instance and solves
/// the convex fixed-clustering beamforming for each, returning the global
/// optimum of the slot problem.
pub fn brute_force_oracle(
    requests: &RequestSlot,
    channels: &crate::model::ChannelBlock,
    slot: usize,
    cache: &CacheAllocation,
    config: &SystemConfig,
) -> Result<OracleResult> {
    let nf = requests.num_requested();
    let b_n = config.num_sbs;
    let bits = nf * b_n;
    if bits > 12 {
        return Err(Error::InstanceTooLarge(bits));
    }
    for fi in 0..nf {
        if requests.group(fi).len() > 1 {
            return Err(Error::SolveFailed(
                "oracle requires singleton multicast groups".into(),
            ));
        }
    }
    let mut best: Option<OracleResult> = None;
    for mask in 0u32..(1 << bits) {
        let mut clustering = Clustering::filled(requests.requested_files().to_vec(), b_n, 0.0);
        for fi in 0..nf {
            for b in 0..b_n {
                if mask & (1 << (fi * b_n + b)) != 0 {
                    clustering.set(fi, b, 1.0);
                }
            }
        }
        // Every requested file needs a server when its target is positive.
        let viable = (0..nf).all(|fi| {
            let file = requests.requested_files()[fi];
            config.sinr_target[file] <= 0.0 || clustering.servers_of(fi) > 0
        });
        if !viable {
            continue;
        }
        if let Ok((_, power)) = delivery::fixed_clustering_beamforming(
            &clustering,
            cache,
            requests,
            channels,
            slot,
            config,
            None,
        ) {
            if best.as_ref().map_or(true, |b| power.total < b.power) {
                best = Some(OracleResult {
                    power: power.total,
                    clustering,
                });
            }
        }
    }
    best.ok_or(Error::InfeasibleSlot { slot })
}

/// A self-contained tiny unicast instance (2 SBSs, 2 users with distinct
/// files) for oracle validation.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub config: SystemConfig,
    pub channels: crate::model::ChannelBlock,
    pub requests: RequestSlot,
    pub cache: CacheAllocation,
}

/// Builds a seeded tiny unicast instance with a random feasible cache.
pub fn tiny_unicast_instance(seed: u64) -> Result<TinyInstance> {
    use rand::Rng;
    let config = crate::model::load_config(&format!(
        "num_sbs = 2\nnum_antennas = 2\nnum_users = 2\nnum_files = 2\n\
         fractional_capacity = 1.0\npatterns = 1\nblock_length = 1\nseed = {seed}"
    ))?;
    let streams = Substreams::new(seed);
    let geometry = place_nodes(&config, &streams)?;
    let channels = crate::scenario::sample_channels(&geometry, &config, 0, &streams);
    let requests = RequestSlot::from_assignment(vec![0, 1]);
    let mut cache = CacheAllocation::zeros(2, 2);
    let mut rng = streams.stream(&[0xcac4e]);
    for f in 0..2 {
        for b in 0..2 {
            cache.set(f, b, rng.gen_range(0.0..1.0));
        }
    }
    cache.validate(&config)?;
    Ok(TinyInstance {
        config,
        channels,
        requests,
        cache,
    })
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// Writes a penalty-loop trace as `iteration,objective_w,lambda,omega_max`.
pub fn write_convergence_trace(trace: &[IterationRecord], path: &Path) -> Result<()> {
    let mut out = String::from("iteration,objective_w,lambda,omega_max\n");
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration, r.objective, r.lambda, r.omega_max
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes sweep rows as
/// `sweep_var,value,scheme,mean_power_w,stderr_w,infeasible_slots,seed`.
pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut out = String::from("sweep_var,value,scheme,mean_power_w,stderr_w,infeasible_slots,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.sweep_var, r.value, r.scheme, r.mean_power_w, r.stderr_w, r.infeasible_slots, r.seed
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes per-slot block outcomes as
/// `slot,edge_w,fronthaul_w,total_w,status,iterations`.
pub fn write_block_report(report: &BlockReport, path: &Path) -> Result<()> {
    let mut out = String::from("slot,edge_w,fronthaul_w,total_w,status,iterations\n");
    for s in &report.slots {
        let status = match s.status {
            SlotStatus::Converged => "converged",
            SlotStatus::MaxIterations => "max-iterations",
            SlotStatus::InfeasibleSlot => "infeasible",
        };
        match &s.power {
            Some(p) => out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.slot, p.edge, p.fronthaul, p.total, status, s.iterations
            )),
            None => out.push_str(&format!("{},,,,{},{}\n", s.slot, status, s.iterations)),
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Dumps a cache allocation as `file,sbs,fraction`.
pub fn write_cache_allocation(cache: &CacheAllocation, path: &Path) -> Result<()> {
    let mut out = String::from("file,sbs,fraction\n");
    for f in 0..cache.num_files() {
        for b in 0..cache.num_sbs() {
            out.push_str(&format!("{},{},{}\n", f, b, cache.get(f, b)));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the run manifest: config hash, seed, and component versions.
pub fn write_manifest(config: &SystemConfig, path: &Path) -> Result<()> {
    let out = format!(
        "config_sha256 = {}\nseed = {}\nversion = {}\nsolver = clarabel\n",
        config.digest(),
        config.seed,
        env!("CARGO_PKG_VERSION"),
    );
    fs::write(path, out)?;
    Ok(())
}

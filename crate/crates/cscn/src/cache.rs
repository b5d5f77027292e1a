//! Periodic cache updating: alternating optimization over a historical
//! window, with the cache step solved in closed form.
//!
//! For fixed per-slot clusterings the cache subproblem separates per SBS
//! into a fractional knapsack, whose greedy fill is its exact optimum; for
//! a fixed cache the per-slot delivery problems are independent and run in
//! parallel.

use rayon::prelude::*;

use crate::delivery::{self, DeliverySolution};
use crate::model::{CacheAllocation, Clustering, SystemConfig};
use crate::scenario::{BlockWindow, Substreams};
use crate::Result;

/// Outer-loop stopping: relative change of the window objective.
pub const OUTER_REL_TOL: f64 = 1e-3;
/// Outer-loop iteration cap.
pub const MAX_OUTER_ITERATIONS: usize = 10;

/// Accumulates the cache-value weights over a window of binary
/// clusterings: caching one unit of file `f` at SBS `b` saves
/// `w[f][b] = beta * R_f * (number of slots b served f)` of fronthaul power.
pub fn cache_weights(clusterings: &[&Clustering], config: &SystemConfig) -> Vec<f64> {
    let mut weights = vec![0.0; config.num_files * config.num_sbs];
    for clustering in clusterings {
        debug_assert!(clustering.is_binary());
        for (fi, &file) in clustering.requested_files().iter().enumerate() {
            let value = config.fronthaul_efficiency * config.rate(file);
            for b in 0..config.num_sbs {
                if clustering.get(fi, b) > 0.5 {
                    weights[file * config.num_sbs + b] += value;
                }
            }
        }
    }
    weights
}

/// Solves the cache placement program exactly: per SBS, fill files in
/// descending value-density order (ties toward the lower file index), with
/// at most one fractional file at the capacity boundary.
pub fn solve_cache_lp(weights: &[f64], config: &SystemConfig) -> CacheAllocation {
    let f_n = config.num_files;
    let b_n = config.num_sbs;
    let mut allocation = CacheAllocation::zeros(f_n, b_n);
    for b in 0..b_n {
        let mut order: Vec<usize> = (0..f_n).collect();
        order.sort_by(|&x, &y| {
            let dx = weights[x * b_n + b] / config.file_sizes[x];
            let dy = weights[y * b_n + b] / config.file_sizes[y];
            dy.partial_cmp(&dx).unwrap().then(x.cmp(&y))
        });
        let mut remaining = config.storage[b];
        for f in order {
            if weights[f * b_n + b] <= 0.0 || remaining <= 0.0 {
                break;
            }
            let size = config.file_sizes[f];
            if size <= remaining {
                allocation.set(f, b, 1.0);
                remaining -= size;
            } else {
                allocation.set(f, b, remaining / size);
                remaining = 0.0;
            }
        }
    }
    allocation
}

/// Trace of one alternating run.
#[derive(Debug, Clone)]
pub struct AlternatingTrace {
    /// Window objective (sum of feasible slot powers) after each outer
    /// iteration's delivery step.
    pub objective: Vec<f64>,
    /// Slots whose delivery was infeasible in the final iteration.
    pub infeasible_slots: usize,
}

/// Alternating cache update over a historical window.
///
/// Each outer iteration re-solves every slot's delivery in parallel for the
/// current cache, then updates the cache exactly from the resulting
/// clusterings. Stops when the window objective settles or after
/// [`MAX_OUTER_ITERATIONS`].
pub fn alternating_update(
    window: &BlockWindow,
    initial: CacheAllocation,
    config: &SystemConfig,
    streams: &Substreams,
) -> Result<(CacheAllocation, AlternatingTrace)> {
    let mut cache = initial;
    let mut objective = Vec::new();
    let mut infeasible_slots = 0;
    let mut prev: Option<f64> = None;

    for outer in 0..MAX_OUTER_ITERATIONS {
        let solutions: Vec<Result<DeliverySolution>> = (0..window.requests.len())
            .into_par_iter()
            .map(|t| {
                let mut rng = streams.delivery_init(window.block, t as u64, outer as u64);
                delivery::penalty_cccp(
                    &cache,
                    &window.requests[t],
                    &window.channels,
                    t,
                    config,
                    &mut rng,
                )
            })
            .collect();

        let mut total = 0.0;
        let mut clusterings = Vec::with_capacity(solutions.len());
        infeasible_slots = 0;
        for sol in &solutions {
            match sol {
                Ok(s) => {
                    total += s.power.total;
                    clusterings.push(&s.clustering);
                }
                Err(_) => infeasible_slots += 1,
            }
        }
        objective.push(total);

        let weights = cache_weights(&clusterings, config);
        cache = solve_cache_lp(&weights, config);

        if let Some(p) = prev {
            if (p - total).abs() <= OUTER_REL_TOL * p.abs().max(f64::EPSILON) {
                break;
            }
        }
        prev = Some(total);
    }

    Ok((
        cache,
        AlternatingTrace {
            objective,
            infeasible_slots,
        },
    ))
}

//! Scenario generation: node placement, per-pattern Zipf popularity,
//! per-slot requests, and per-slot channel realizations.
//!
//! All randomness is drawn from counter-based substreams of one master
//! seed, so any (seed, block, slot) triple reproduces bit-identical output
//! regardless of evaluation order or parallelism.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{db_to_linear, ChannelBlock, RequestSlot, SystemConfig};
use crate::{Error, Result};

/// Substream purposes; the first tag of every derivation.
mod purpose {
    pub const GEOMETRY: u64 = 1;
    pub const POPULARITY: u64 = 2;
    pub const REQUESTS: u64 = 3;
    pub const SHADOWING: u64 = 4;
    pub const FADING: u64 = 5;
    pub const DELIVERY_INIT: u64 = 6;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derives an independent master seed, e.g. one per sweep repetition.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    splitmix64(master ^ splitmix64(tag.wrapping_add(0xa0761d6478bd642f)))
}

/// Counter-based RNG substream factory.
///
/// Each `(purpose, indices...)` tag tuple yields an independent,
/// reproducible stream; no state is shared between streams.
#[derive(Debug, Clone, Copy)]
pub struct Substreams {
    master: u64,
}

impl Substreams {
    pub fn new(master: u64) -> Self {
        Substreams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Derives the substream identified by `tags`.
    pub fn stream(&self, tags: &[u64]) -> ChaCha8Rng {
        let mut state = splitmix64(self.master ^ 0x5851f42d4c957f2d);
        for &t in tags {
            state = splitmix64(state ^ t.wrapping_mul(0xd1342543de82ef95).wrapping_add(1));
        }
        ChaCha8Rng::seed_from_u64(state)
    }

    /// Stream feeding the random beamformer initialization of one
    /// delivery solve.
    pub fn delivery_init(&self, block: u64, slot: u64, round: u64) -> ChaCha8Rng {
        self.stream(&[purpose::DELIVERY_INIT, block, slot, round])
    }
}

/// SBS and user coordinates in km, inside the hexagonal macro cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub sbs: Vec<(f64, f64)>,
    pub users: Vec<(f64, f64)>,
}

impl Geometry {
    pub fn distance(&self, user: usize, sbs: usize) -> f64 {
        let (ux, uy) = self.users[user];
        let (bx, by) = self.sbs[sbs];
        ((ux - bx).powi(2) + (uy - by).powi(2)).sqrt()
    }

    /// Serializes coordinates as `kind,index,x_km,y_km` lines.
    pub fn dump(&self) -> String {
        let mut out = String::from("kind,index,x_km,y_km\n");
        for (i, (x, y)) in self.sbs.iter().enumerate() {
            out.push_str(&format!("sbs,{i},{x},{y}\n"));
        }
        for (i, (x, y)) in self.users.iter().enumerate() {
            out.push_str(&format!("user,{i},{x},{y}\n"));
        }
        out
    }

    /// Parses the format produced by [`Geometry::dump`].
    pub fn load(text: &str) -> Result<Geometry> {
        let mut sbs = Vec::new();
        let mut users = Vec::new();
        for line in text.lines().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!("bad geometry line: {line}")));
            }
            let x: f64 = fields[2].parse().map_err(|_| Error::Parse(line.into()))?;
            let y: f64 = fields[3].parse().map_err(|_| Error::Parse(line.into()))?;
            match fields[0] {
                "sbs" => sbs.push((x, y)),
                "user" => users.push((x, y)),
                other => return Err(Error::Parse(format!("unknown node kind: {other}"))),
            }
        }
        Ok(Geometry { sbs, users })
    }
}

/// Edge length of the hexagonal macro cell in km.
pub const HEX_EDGE_KM: f64 = 1.0;
/// Users are redrawn if they fall within this distance of any SBS (km).
pub const EXCLUSION_KM: f64 = 0.03;
const PLACEMENT_ATTEMPTS: usize = 10_000;

/// True when the point lies inside the regular hexagon with the given edge
/// length, centered at the origin with two vertices on the x axis.
pub fn inside_hexagon(x: f64, y: f64, edge: f64) -> bool {
    let apothem = edge * 3f64.sqrt() / 2.0;
    // Distances to the three pairs of parallel edges.
    let d0 = y.abs();
    let d1 = (3f64.sqrt() / 2.0 * x + 0.5 * y).abs();
    let d2 = (3f64.sqrt() / 2.0 * x - 0.5 * y).abs();
    d0 <= apothem && d1 <= apothem && d2 <= apothem
}

fn draw_in_hexagon(rng: &mut ChaCha8Rng, edge: f64) -> (f64, f64) {
    loop {
        let x = rng.gen_range(-edge..edge);
        let y = rng.gen_range(-edge..edge);
        if inside_hexagon(x, y, edge) {
            return (x, y);
        }
    }
}

/// Places SBSs and users uniformly in the hexagonal cell. Users within
/// [`EXCLUSION_KM`] of any SBS are rejected and redrawn.
pub fn place_nodes(config: &SystemConfig, streams: &Substreams) -> Result<Geometry> {
    let mut rng = streams.stream(&[purpose::GEOMETRY]);
    let sbs: Vec<(f64, f64)> = (0..config.num_sbs)
        .map(|_| draw_in_hexagon(&mut rng, HEX_EDGE_KM))
        .collect();
    let mut users = Vec::with_capacity(config.num_users);
    for _ in 0..config.num_users {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let (x, y) = draw_in_hexagon(&mut rng, HEX_EDGE_KM);
            let clear = sbs
                .iter()
                .all(|&(bx, by)| ((x - bx).powi(2) + (y - by).powi(2)).sqrt() >= EXCLUSION_KM);
            if clear {
                users.push((x, y));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::DegenerateGeometry {
                attempts: PLACEMENT_ATTEMPTS,
            });
        }
    }
    Ok(Geometry { sbs, users })
}

/// Per-pattern file popularity and the user-to-pattern assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct PopularityProfile {
    /// Skewness per pattern.
    pub skewness: Vec<f64>,
    /// Rank of each file within each pattern: `rank[i][f]` in `1..=F`.
    pub rank: Vec<Vec<usize>>,
    /// Normalization constant per pattern.
    pub normalization: Vec<f64>,
    /// Request probability per (pattern, file); rows sum to one.
    pub probabilities: Vec<Vec<f64>>,
    /// Pattern index per user.
    pub user_pattern: Vec<usize>,
}

/// Builds the per-pattern popularity: skewness uniform in the configured
/// interval, a fresh random rank order per pattern, and users assigned to
/// patterns round-robin.
pub fn build_popularity(config: &SystemConfig, streams: &Substreams) -> PopularityProfile {
    let mut rng = streams.stream(&[purpose::POPULARITY]);
    let npat = config.patterns;
    let nfiles = config.num_files;
    let (lo, hi) = config.skewness_range;

    let mut skewness = Vec::with_capacity(npat);
    let mut rank = Vec::with_capacity(npat);
    let mut normalization = Vec::with_capacity(npat);
    let mut probabilities = Vec::with_capacity(npat);
    for _ in 0..npat {
        let kappa = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        // Fisher-Yates permutation of ranks 1..=F.
        let mut ranks: Vec<usize> = (1..=nfiles).collect();
        for j in (1..nfiles).rev() {
            let swap = rng.gen_range(0..=j);
            ranks.swap(j, swap);
        }
        let weights: Vec<f64> = ranks.iter().map(|&r| (r as f64).powf(-kappa)).collect();
        let c = 1.0 / weights.iter().sum::<f64>();
        let probs: Vec<f64> = weights.iter().map(|w| w * c).collect();
        skewness.push(kappa);
        rank.push(ranks);
        normalization.push(c);
        probabilities.push(probs);
    }
    let user_pattern = (0..config.num_users).map(|k| k % npat).collect();
    PopularityProfile {
        skewness,
        rank,
        normalization,
        probabilities,
        user_pattern,
    }
}

/// Draws one request per user from its pattern's distribution.
///
/// Deterministic given (master seed, block index, slot index).
pub fn sample_requests(
    profile: &PopularityProfile,
    block: u64,
    slot: u64,
    streams: &Substreams,
) -> RequestSlot {
    let mut rng = streams.stream(&[purpose::REQUESTS, block, slot]);
    let assignment = profile
        .user_pattern
        .iter()
        .map(|&pat| {
            let u: f64 = rng.gen();
            let probs = &profile.probabilities[pat];
            let mut acc = 0.0;
            for (f, &p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return f;
                }
            }
            probs.len() - 1
        })
        .collect();
    RequestSlot::from_assignment(assignment)
}

/// Path loss in dB for a distance in km.
pub fn path_loss_db(distance_km: f64) -> f64 {
    148.1 + 37.6 * distance_km.log10()
}

const ANTENNA_GAIN_DBI: f64 = 10.0;
const SHADOWING_STD_DB: f64 = 8.0;

/// Samples one block of channels.
///
/// The large-scale gain combines path loss, a 10 dBi antenna gain, and
/// 8 dB log-normal shadowing; its substream ignores the block index, so the
/// large-scale part stays fixed over consecutive blocks (quasi-static
/// users). Small-scale fading is unit-variance Rayleigh, independent
/// across slots.
pub fn sample_channels(
    geometry: &Geometry,
    config: &SystemConfig,
    block: u64,
    streams: &Substreams,
) -> ChannelBlock {
    let k_n = config.num_users;
    let b_n = config.num_sbs;
    let m_n = config.num_antennas;
    let t_n = config.block_length;

    let mut large_scale = vec![0.0; k_n * b_n];
    for k in 0..k_n {
        for b in 0..b_n {
            let mut rng = streams.stream(&[purpose::SHADOWING, k as u64, b as u64]);
            let shadow_db: f64 = {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * SHADOWING_STD_DB
            };
            let d = geometry.distance(k, b).max(1e-6);
            let loss_db = path_loss_db(d) - ANTENNA_GAIN_DBI + shadow_db;
            large_scale[k * b_n + b] = db_to_linear(-loss_db);
        }
    }

    let mut gains = Vec::with_capacity(t_n * k_n * b_n * m_n);
    for t in 0..t_n {
        let mut rng = streams.stream(&[purpose::FADING, block, t as u64]);
        for k in 0..k_n {
            for b in 0..b_n {
                let amp = large_scale[k * b_n + b].sqrt();
                for _ in 0..m_n {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    // Unit-variance circular complex Gaussian: each part
                    // has variance 1/2.
                    gains.push(Complex64::new(re, im) * (amp / 2f64.sqrt()));
                }
            }
        }
    }
    ChannelBlock::new(k_n, b_n, m_n, t_n, large_scale, gains)
}

/// One block's realized requests and channels.
#[derive(Debug, Clone)]
pub struct BlockWindow {
    pub block: u64,
    pub requests: Vec<RequestSlot>,
    pub channels: ChannelBlock,
}

/// Samples the full request/channel window of one block.
pub fn sample_window(
    geometry: &Geometry,
    profile: &PopularityProfile,
    config: &SystemConfig,
    block: u64,
    streams: &Substreams,
) -> BlockWindow {
    let requests = (0..config.block_length)
        .map(|t| sample_requests(profile, block, t as u64, streams))
        .collect();
    let channels = sample_channels(geometry, config, block, streams);
    BlockWindow {
        block,
        requests,
        channels,
    }
}

//! Domain types, unit conventions, and configuration validation.
//!
//! Everything downstream of this module works in linear units: Watts, Hz,
//! bits, bit/s. Decibel values appear only at the config-file boundary,
//! where keys carry a `_db`/`_dbm` suffix.

use num_complex::Complex64;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Converts a dB ratio to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Converts dBm to Watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

/// Converts Watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1000.0).log10()
}

/// A scalar that broadcasts, or an explicit per-entity array.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn broadcast(&self, len: usize) -> Vec<f64> {
        match self {
            ScalarOrVec::Scalar(v) => vec![*v; len],
            ScalarOrVec::Vec(v) => v.clone(),
        }
    }
}

/// Raw configuration as parsed from the structured-text config file.
///
/// Keys match [`SystemConfig`] field names; dB-valued alternates carry a
/// `_db`/`_dbm` suffix. Omitted fields fall back to the defaults of the
/// reference scenario.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub num_sbs: Option<usize>,
    pub num_antennas: Option<usize>,
    pub num_users: Option<usize>,
    pub num_files: Option<usize>,
    pub file_sizes: Option<ScalarOrVec>,
    pub storage: Option<ScalarOrVec>,
    pub fractional_capacity: Option<f64>,
    pub max_power: Option<ScalarOrVec>,
    pub max_power_dbm: Option<ScalarOrVec>,
    pub sinr_target: Option<ScalarOrVec>,
    pub sinr_target_db: Option<ScalarOrVec>,
    pub bandwidth: Option<f64>,
    pub noise_power: Option<ScalarOrVec>,
    pub noise_power_dbm: Option<ScalarOrVec>,
    pub edge_slope: Option<ScalarOrVec>,
    pub fronthaul_efficiency: Option<f64>,
    pub block_length: Option<usize>,
    pub patterns: Option<usize>,
    pub skewness_range: Option<[f64; 2]>,
    pub penalty_init: Option<f64>,
    pub penalty_growth: Option<f64>,
    pub penalty_max: Option<f64>,
    pub solver_tol: Option<f64>,
    pub qos_tol: Option<f64>,
    pub seed: Option<u64>,
}

impl RawConfig {
    /// Parses the flat key/value config text.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Validated scenario, physical, popularity, and algorithm parameters.
///
/// Immutable after [`validate_config`]; all values in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of small-cell base stations (B).
    pub num_sbs: usize,
    /// Antennas per SBS (M).
    pub num_antennas: usize,
    /// Number of single-antenna users (K).
    pub num_users: usize,
    /// Library size (F).
    pub num_files: usize,
    /// File sizes in bits, one per file.
    pub file_sizes: Vec<f64>,
    /// Cache storage in bits, one per SBS.
    pub storage: Vec<f64>,
    /// Fractional caching capacity: total storage over B times the library size.
    pub fractional_capacity: f64,
    /// Per-SBS transmit power cap in Watts.
    pub max_power: Vec<f64>,
    /// Per-file minimum SINR to decode, linear ratio.
    pub sinr_target: Vec<f64>,
    /// Edge-link bandwidth in Hz.
    pub bandwidth: f64,
    /// Per-user receiver noise power in Watts.
    pub noise_power: Vec<f64>,
    /// Slope of the load-dependent edge power per SBS, dimensionless.
    pub edge_slope: Vec<f64>,
    /// Fronthaul energy efficiency in Watts per bit/s.
    pub fronthaul_efficiency: f64,
    /// Slots per transmission block (T).
    pub block_length: usize,
    /// Number of user preference patterns (I).
    pub patterns: usize,
    /// Interval the per-pattern skewness is drawn from.
    pub skewness_range: (f64, f64),
    /// Initial penalty weight on the binarization slacks.
    pub penalty_init: f64,
    /// Multiplicative penalty growth factor, > 1.
    pub penalty_growth: f64,
    /// Penalty ceiling.
    pub penalty_max: f64,
    /// Target residual/gap tolerance for conic solves.
    pub solver_tol: f64,
    /// Relative tolerance for QoS feasibility checks.
    pub qos_tol: f64,
    /// Master RNG seed; all randomness derives from it.
    pub seed: u64,
}

impl SystemConfig {
    /// Fixed transmission rate for file `f` in bit/s, derived from the
    /// bandwidth and the file's SINR target. Never stored independently.
    pub fn rate(&self, file: usize) -> f64 {
        self.bandwidth * (1.0 + self.sinr_target[file]).log2()
    }

    /// Total library size in bits.
    pub fn library_bits(&self) -> f64 {
        self.file_sizes.iter().sum()
    }

    /// SHA-256 digest of the full parameter set, for run manifests.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("{:?}", self));
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Rebuilds derived fields after a sweep override mutated `num_users`,
    /// `patterns`, or `fractional_capacity`. Per-entity vectors are
    /// re-broadcast from their first element.
    pub fn rederive(mut self) -> Result<SystemConfig> {
        let broadcast = |v: &[f64], len: usize| vec![v[0]; len];
        self.file_sizes = broadcast(&self.file_sizes, self.num_files);
        self.sinr_target = broadcast(&self.sinr_target, self.num_files);
        self.max_power = broadcast(&self.max_power, self.num_sbs);
        self.edge_slope = broadcast(&self.edge_slope, self.num_sbs);
        self.noise_power = broadcast(&self.noise_power, self.num_users);
        let per_sbs = self.fractional_capacity * self.library_bits();
        self.storage = vec![per_sbs; self.num_sbs];
        check_config(&self)?;
        Ok(self)
    }
}

fn fail(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn require_positive(field: &str, values: &[f64]) -> Result<()> {
    for &v in values {
        if !(v > 0.0) || !v.is_finite() {
            return Err(fail(field, format!("must be strictly positive, got {v}")));
        }
    }
    Ok(())
}

/// Validates a raw config and resolves every derived quantity.
///
/// Reports the first violated invariant with its field name. Exactly one of
/// `storage` and `fractional_capacity` may be omitted; the other is derived
/// so that `fractional_capacity = sum_b storage_b / (B * library_bits)`.
pub fn validate_config(raw: &RawConfig) -> Result<SystemConfig> {
    let num_sbs = raw.num_sbs.unwrap_or(7);
    let num_antennas = raw.num_antennas.unwrap_or(4);
    let num_users = raw.num_users.unwrap_or(16);
    let num_files = raw.num_files.unwrap_or(100);
    for (field, v) in [
        ("num_sbs", num_sbs),
        ("num_antennas", num_antennas),
        ("num_users", num_users),
        ("num_files", num_files),
    ] {
        if v == 0 {
            return Err(fail(field, "must be at least 1"));
        }
    }

    let file_sizes = raw
        .file_sizes
        .clone()
        .unwrap_or(ScalarOrVec::Scalar(1e8))
        .broadcast(num_files);
    if file_sizes.len() != num_files {
        return Err(fail("file_sizes", "length must match num_files"));
    }
    require_positive("file_sizes", &file_sizes)?;
    let library_bits: f64 = file_sizes.iter().sum();

    // dB-suffixed keys are alternates, not extras.
    if raw.max_power.is_some() && raw.max_power_dbm.is_some() {
        return Err(fail("max_power", "give either max_power or max_power_dbm"));
    }
    if raw.sinr_target.is_some() && raw.sinr_target_db.is_some() {
        return Err(fail(
            "sinr_target",
            "give either sinr_target or sinr_target_db",
        ));
    }
    if raw.noise_power.is_some() && raw.noise_power_dbm.is_some() {
        return Err(fail(
            "noise_power",
            "give either noise_power or noise_power_dbm",
        ));
    }

    let max_power = match (&raw.max_power, &raw.max_power_dbm) {
        (Some(w), _) => w.broadcast(num_sbs),
        (None, Some(dbm)) => dbm
            .broadcast(num_sbs)
            .iter()
            .map(|&v| dbm_to_watts(v))
            .collect(),
        (None, None) => vec![dbm_to_watts(40.0); num_sbs],
    };
    if max_power.len() != num_sbs {
        return Err(fail("max_power", "length must match num_sbs"));
    }
    require_positive("max_power", &max_power)?;

    let sinr_target = match (&raw.sinr_target, &raw.sinr_target_db) {
        (Some(lin), _) => lin.broadcast(num_files),
        (None, Some(db)) => db
            .broadcast(num_files)
            .iter()
            .map(|&v| db_to_linear(v))
            .collect(),
        (None, None) => vec![db_to_linear(5.0); num_files],
    };
    if sinr_target.len() != num_files {
        return Err(fail("sinr_target", "length must match num_files"));
    }
    require_positive("sinr_target", &sinr_target)?;

    let noise_power = match (&raw.noise_power, &raw.noise_power_dbm) {
        (Some(w), _) => w.broadcast(num_users),
        (None, Some(dbm)) => dbm
            .broadcast(num_users)
            .iter()
            .map(|&v| dbm_to_watts(v))
            .collect(),
        (None, None) => vec![dbm_to_watts(-102.0); num_users],
    };
    if noise_power.len() != num_users {
        return Err(fail("noise_power", "length must match num_users"));
    }
    require_positive("noise_power", &noise_power)?;

    let bandwidth = raw.bandwidth.unwrap_or(1e7);
    require_positive("bandwidth", &[bandwidth])?;

    let edge_slope = raw
        .edge_slope
        .clone()
        .unwrap_or(ScalarOrVec::Scalar(4.0))
        .broadcast(num_sbs);
    if edge_slope.len() != num_sbs {
        return Err(fail("edge_slope", "length must match num_sbs"));
    }
    require_positive("edge_slope", &edge_slope)?;

    let fronthaul_efficiency = raw.fronthaul_efficiency.unwrap_or(1e-7);
    require_positive("fronthaul_efficiency", &[fronthaul_efficiency])?;

    // Storage and fractional capacity are redundant; derive whichever is
    // missing and cross-check when both are present.
    let (storage, fractional_capacity) = match (&raw.storage, raw.fractional_capacity) {
        (None, None) => return Err(fail("storage", "give storage or fractional_capacity")),
        (None, Some(mu)) => {
            if !(0.0..=1.0).contains(&mu) {
                return Err(fail("fractional_capacity", format!("must lie in [0, 1], got {mu}")));
            }
            (vec![mu * library_bits; num_sbs], mu)
        }
        (Some(s), given_mu) => {
            let storage = s.broadcast(num_sbs);
            if storage.len() != num_sbs {
                return Err(fail("storage", "length must match num_sbs"));
            }
            if storage.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(fail("storage", "must be non-negative"));
            }
            let mu = storage.iter().sum::<f64>() / (num_sbs as f64 * library_bits);
            if let Some(given) = given_mu {
                if (mu - given).abs() > 1e-9 * given.abs().max(1.0) {
                    return Err(fail(
                        "fractional_capacity",
                        format!("inconsistent with storage: derived {mu}, given {given}"),
                    ));
                }
            }
            if !(0.0..=1.0 + 1e-12).contains(&mu) {
                return Err(fail("storage", format!("implies fractional capacity {mu} outside [0, 1]")));
            }
            (storage, mu.min(1.0))
        }
    };

    let block_length = raw.block_length.unwrap_or(100);
    if block_length == 0 {
        return Err(fail("block_length", "must be at least 1"));
    }
    let patterns = raw.patterns.unwrap_or(4);
    if patterns == 0 {
        return Err(fail("patterns", "must be at least 1"));
    }

    let [skew_lo, skew_hi] = raw.skewness_range.unwrap_or([1.0, 2.0]);
    if skew_lo < 0.0 || skew_hi < skew_lo {
        return Err(fail(
            "skewness_range",
            format!("need 0 <= lo <= hi, got [{skew_lo}, {skew_hi}]"),
        ));
    }

    let penalty_init = raw.penalty_init.unwrap_or(1.0);
    if !(penalty_init > 0.0) {
        return Err(fail("penalty_init", "must be strictly positive"));
    }
    let penalty_growth = raw.penalty_growth.unwrap_or(5.0);
    if !(penalty_growth > 1.0) {
        return Err(fail("penalty_growth", "must be greater than 1"));
    }
    let penalty_max = raw.penalty_max.unwrap_or(1000.0);
    if penalty_max < penalty_init {
        return Err(fail("penalty_max", "must be at least penalty_init"));
    }

    let solver_tol = raw.solver_tol.unwrap_or(1e-7);
    if !(solver_tol > 0.0 && solver_tol < 1.0) {
        return Err(fail("solver_tol", "must lie in (0, 1)"));
    }
    let qos_tol = raw.qos_tol.unwrap_or(1e-6);
    if !(qos_tol > 0.0 && qos_tol < 1.0) {
        return Err(fail("qos_tol", "must lie in (0, 1)"));
    }

    let config = SystemConfig {
        num_sbs,
        num_antennas,
        num_users,
        num_files,
        file_sizes,
        storage,
        fractional_capacity,
        max_power,
        sinr_target,
        bandwidth,
        noise_power,
        edge_slope,
        fronthaul_efficiency,
        block_length,
        patterns,
        skewness_range: (skew_lo, skew_hi),
        penalty_init,
        penalty_growth,
        penalty_max,
        solver_tol,
        qos_tol,
        seed: raw.seed.unwrap_or(1),
    };
    check_config(&config)?;
    Ok(config)
}

// Invariants that must hold for any SystemConfig, however it was produced.
fn check_config(c: &SystemConfig) -> Result<()> {
    let mu = c.storage.iter().sum::<f64>() / (c.num_sbs as f64 * c.library_bits());
    if (mu - c.fractional_capacity).abs() > 1e-9 {
        return Err(fail(
            "fractional_capacity",
            format!("must equal total storage ratio: {} vs {mu}", c.fractional_capacity),
        ));
    }
    Ok(())
}

/// Loads and validates a config from structured text.
pub fn load_config(text: &str) -> Result<SystemConfig> {
    validate_config(&RawConfig::from_toml(text)?)
}

/// Desk-scale reference scenario: small enough for full experiment sweeps
/// on a laptop.
pub fn desk_profile() -> SystemConfig {
    load_config(include_str!("../profiles/desk.toml")).expect("embedded desk profile is valid")
}

/// Paper-scale reference scenario (7 SBSs, 100 files, 100-slot blocks).
pub fn paper_profile() -> SystemConfig {
    load_config(include_str!("../profiles/paper.toml")).expect("embedded paper profile is valid")
}

/// Per-slot complex channel vectors plus fixed large-scale gains for one
/// transmission block.
///
/// The small-scale part is independent across slots; the large-scale part
/// is identical for every slot of the block.
#[derive(Debug, Clone)]
pub struct ChannelBlock {
    num_users: usize,
    num_sbs: usize,
    num_antennas: usize,
    num_slots: usize,
    /// Linear power gain per (user, SBS); indexed `k * B + b`.
    large_scale: Vec<f64>,
    /// Channel amplitudes; indexed `(((t * K) + k) * B + b) * M + m`.
    gains: Vec<Complex64>,
}

impl ChannelBlock {
    pub fn new(
        num_users: usize,
        num_sbs: usize,
        num_antennas: usize,
        num_slots: usize,
        large_scale: Vec<f64>,
        gains: Vec<Complex64>,
    ) -> Self {
        assert_eq!(large_scale.len(), num_users * num_sbs);
        assert_eq!(gains.len(), num_slots * num_users * num_sbs * num_antennas);
        ChannelBlock {
            num_users,
            num_sbs,
            num_antennas,
            num_slots,
            large_scale,
            gains,
        }
    }

    pub fn num_slots(&self) -> usize {
        self.num_slots
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    /// Large-scale linear power gain between user `k` and SBS `b`.
    pub fn large_scale(&self, user: usize, sbs: usize) -> f64 {
        self.large_scale[user * self.num_sbs + sbs]
    }

    /// Channel vector from SBS `b` to user `k` in slot `t` (length M).
    pub fn gains(&self, slot: usize, user: usize, sbs: usize) -> &[Complex64] {
        let base = (((slot * self.num_users) + user) * self.num_sbs + sbs) * self.num_antennas;
        &self.gains[base..base + self.num_antennas]
    }

    /// Integrated channel for user `k` in slot `t`: the per-SBS vectors
    /// stacked into one length-MB vector.
    pub fn integrated(&self, slot: usize, user: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.num_sbs * self.num_antennas);
        for b in 0..self.num_sbs {
            out.extend_from_slice(self.gains(slot, user, b));
        }
        out
    }
}

/// One slot's requests: which user wants which file, and the induced
/// multicast groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestSlot {
    /// Requested file per user, length K.
    file_of_user: Vec<usize>,
    /// Distinct requested files, ascending.
    requested_files: Vec<usize>,
    /// Users per requested file, aligned with `requested_files`.
    groups: Vec<Vec<usize>>,
}

impl RequestSlot {
    /// Builds the slot from a per-user assignment; groups partition the
    /// users exactly.
    pub fn from_assignment(file_of_user: Vec<usize>) -> Self {
        let mut requested_files: Vec<usize> = file_of_user.clone();
        requested_files.sort_unstable();
        requested_files.dedup();
        let groups = requested_files
            .iter()
            .map(|&f| {
                (0..file_of_user.len())
                    .filter(|&k| file_of_user[k] == f)
                    .collect()
            })
            .collect();
        RequestSlot {
            file_of_user,
            requested_files,
            groups,
        }
    }

    pub fn num_users(&self) -> usize {
        self.file_of_user.len()
    }

    /// File requested by user `k`.
    pub fn file_of(&self, user: usize) -> usize {
        self.file_of_user[user]
    }

    /// Distinct requested files in this slot, ascending.
    pub fn requested_files(&self) -> &[usize] {
        &self.requested_files
    }

    pub fn num_requested(&self) -> usize {
        self.requested_files.len()
    }

    /// Group members for the `fi`-th requested file.
    pub fn group(&self, fi: usize) -> &[usize] {
        &self.groups[fi]
    }

    /// Position of `file` within the requested set, if requested.
    pub fn position_of(&self, file: usize) -> Option<usize> {
        self.requested_files.binary_search(&file).ok()
    }
}

/// Long-timescale cache allocation: the fraction of each file stored at
/// each SBS.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheAllocation {
    num_files: usize,
    num_sbs: usize,
    /// Indexed `f * B + b`.
    fractions: Vec<f64>,
}

impl CacheAllocation {
    pub fn zeros(num_files: usize, num_sbs: usize) -> Self {
        CacheAllocation {
            num_files,
            num_sbs,
            fractions: vec![0.0; num_files * num_sbs],
        }
    }

    /// Every entry set to the same fraction.
    pub fn uniform(num_files: usize, num_sbs: usize, fraction: f64) -> Self {
        CacheAllocation {
            num_files,
            num_sbs,
            fractions: vec![fraction; num_files * num_sbs],
        }
    }

    pub fn num_files(&self) -> usize {
        self.num_files
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    pub fn get(&self, file: usize, sbs: usize) -> f64 {
        self.fractions[file * self.num_sbs + sbs]
    }

    pub fn set(&mut self, file: usize, sbs: usize, value: f64) {
        self.fractions[file * self.num_sbs + sbs] = value;
    }

    /// Bits stored at SBS `b` under this allocation.
    pub fn storage_used(&self, sbs: usize, file_sizes: &[f64]) -> f64 {
        (0..self.num_files)
            .map(|f| self.get(f, sbs) * file_sizes[f])
            .sum()
    }

    /// Checks the box and per-SBS storage constraints.
    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        for f in 0..self.num_files {
            for b in 0..self.num_sbs {
                let l = self.get(f, b);
                if !(-1e-12..=1.0 + 1e-12).contains(&l) {
                    return Err(fail("cache", format!("fraction for file {f} at SBS {b} is {l}")));
                }
            }
        }
        for b in 0..self.num_sbs {
            let used = self.storage_used(b, &config.file_sizes);
            if used > config.storage[b] * (1.0 + 1e-9) + 1e-9 {
                return Err(fail(
                    "cache",
                    format!("SBS {b} stores {used} bits, capacity {}", config.storage[b]),
                ));
            }
        }
        Ok(())
    }
}

/// SBS clustering for one slot: which SBSs serve which multicast group.
///
/// Entries are continuous in `[0, 1]` during the relaxation and exactly
/// `{0, 1}` after rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    requested_files: Vec<usize>,
    num_sbs: usize,
    /// Indexed `fi * B + b` where `fi` indexes `requested_files`.
    entries: Vec<f64>,
}

impl Clustering {
    pub fn filled(requested_files: Vec<usize>, num_sbs: usize, value: f64) -> Self {
        let entries = vec![value; requested_files.len() * num_sbs];
        Clustering {
            requested_files,
            num_sbs,
            entries,
        }
    }

    pub fn requested_files(&self) -> &[usize] {
        &self.requested_files
    }

    pub fn num_requested(&self) -> usize {
        self.requested_files.len()
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    pub fn get(&self, fi: usize, sbs: usize) -> f64 {
        self.entries[fi * self.num_sbs + sbs]
    }

    pub fn set(&mut self, fi: usize, sbs: usize, value: f64) {
        self.entries[fi * self.num_sbs + sbs] = value;
    }

    /// True when every entry is exactly 0.0 or 1.0.
    pub fn is_binary(&self) -> bool {
        self.entries.iter().all(|&e| e == 0.0 || e == 1.0)
    }

    /// Number of SBSs serving the `fi`-th group (binary clusterings).
    pub fn servers_of(&self, fi: usize) -> usize {
        (0..self.num_sbs).filter(|&b| self.get(fi, b) > 0.5).count()
    }
}

/// Integrated multicast beamformers for one slot, one per requested file.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    requested_files: Vec<usize>,
    num_sbs: usize,
    num_antennas: usize,
    /// Length-MB stacked vectors, aligned with `requested_files`.
    vectors: Vec<Vec<Complex64>>,
}

impl BeamformerSet {
    pub fn zeros(requested_files: Vec<usize>, num_sbs: usize, num_antennas: usize) -> Self {
        let vectors = vec![vec![Complex64::new(0.0, 0.0); num_sbs * num_antennas]; requested_files.len()];
        BeamformerSet {
            requested_files,
            num_sbs,
            num_antennas,
            vectors,
        }
    }

    pub fn requested_files(&self) -> &[usize] {
        &self.requested_files
    }

    pub fn num_requested(&self) -> usize {
        self.requested_files.len()
    }

    pub fn num_sbs(&self) -> usize {
        self.num_sbs
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    /// Integrated beamformer for the `fi`-th requested file (length MB).
    pub fn vector(&self, fi: usize) -> &[Complex64] {
        &self.vectors[fi]
    }

    pub fn vector_mut(&mut self, fi: usize) -> &mut [Complex64] {
        &mut self.vectors[fi]
    }

    /// Per-SBS block of the `fi`-th beamformer (length M).
    pub fn block(&self, fi: usize, sbs: usize) -> &[Complex64] {
        &self.vectors[fi][sbs * self.num_antennas..(sbs + 1) * self.num_antennas]
    }

    pub fn block_mut(&mut self, fi: usize, sbs: usize) -> &mut [Complex64] {
        &mut self.vectors[fi][sbs * self.num_antennas..(sbs + 1) * self.num_antennas]
    }

    /// Squared norm of one per-SBS block.
    pub fn block_power(&self, fi: usize, sbs: usize) -> f64 {
        self.block(fi, sbs).iter().map(|v| v.norm_sqr()).sum()
    }

    /// Transmit power spent by SBS `b` across all groups.
    pub fn sbs_power(&self, sbs: usize) -> f64 {
        (0..self.vectors.len()).map(|fi| self.block_power(fi, sbs)).sum()
    }
}

/// Per-slot power split between the radio edge and the fronthaul.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    /// Edge transmit power in Watts.
    pub edge: f64,
    /// Fronthaul transfer power in Watts.
    pub fronthaul: f64,
    /// Sum of the two.
    pub total: f64,
}

impl PowerBreakdown {
    pub fn new(edge: f64, fronthaul: f64) -> Self {
        PowerBreakdown {
            edge,
            fronthaul,
            total: edge + fronthaul,
        }
    }

    pub fn zero() -> Self {
        PowerBreakdown::new(0.0, 0.0)
    }
}

//! Evaluation of SINR, QoS feasibility, fronthaul rate, and the power
//! objective for any candidate (cache, beamformers, clustering) triple.
//!
//! Pure, reentrant functions; nothing here mutates state.

use num_complex::Complex64;

use crate::model::{
    BeamformerSet, CacheAllocation, ChannelBlock, Clustering, PowerBreakdown, RequestSlot,
    SystemConfig,
};
use crate::{Error, Result};

/// Complex inner product `h^H v`.
pub fn inner(h: &[Complex64], v: &[Complex64]) -> Complex64 {
    h.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Received SINR of user `k` decoding `file`, as a linear ratio.
///
/// Interference sums over every other requested file's beamformer.
pub fn sinr(
    user: usize,
    file: usize,
    beamformers: &BeamformerSet,
    channels: &ChannelBlock,
    slot: usize,
    config: &SystemConfig,
) -> Result<f64> {
    if user >= config.num_users {
        return Err(Error::UnknownIndex {
            kind: "user",
            index: user,
        });
    }
    let fi = beamformers
        .requested_files()
        .iter()
        .position(|&f| f == file)
        .ok_or(Error::UnknownIndex {
            kind: "file",
            index: file,
        })?;
    let h = channels.integrated(slot, user);
    let signal = inner(&h, beamformers.vector(fi)).norm_sqr();
    let mut denom = config.noise_power[user];
    for fj in 0..beamformers.num_requested() {
        if fj != fi {
            denom += inner(&h, beamformers.vector(fj)).norm_sqr();
        }
    }
    Ok(signal / denom)
}

/// Outcome of a feasibility audit; `margin` is the most-violated normalized
/// slack (negative means violation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosReport {
    pub satisfied: bool,
    pub margin: f64,
}

/// Checks a candidate solution end to end: per-user SINR targets within
/// the relative tolerance, per-SBS power caps, and the exact-zero coupling
/// between clustering and beamformers.
pub fn qos_satisfied(
    beamformers: &BeamformerSet,
    clustering: &Clustering,
    requests: &RequestSlot,
    channels: &ChannelBlock,
    slot: usize,
    config: &SystemConfig,
    tolerance: f64,
) -> Result<QosReport> {
    let mut margin = f64::INFINITY;

    for (fi, &file) in requests.requested_files().iter().enumerate() {
        let target = config.sinr_target[file];
        for &k in requests.group(fi) {
            if target <= 0.0 {
                continue; // vacuous QoS
            }
            let ratio = sinr(k, file, beamformers, channels, slot, config)?;
            margin = margin.min(ratio / target - (1.0 - tolerance));
        }
    }

    for b in 0..config.num_sbs {
        let used = beamformers.sbs_power(b);
        margin = margin.min(1.0 + tolerance - used / config.max_power[b]);
    }

    // Excluded (e = 0) beamformer blocks must be exactly zero.
    for fi in 0..clustering.num_requested() {
        for b in 0..config.num_sbs {
            if clustering.get(fi, b) == 0.0 {
                let norm = beamformers.block_power(fi, b);
                if norm != 0.0 {
                    margin = margin.min(-norm.sqrt());
                }
            }
        }
    }

    Ok(QosReport {
        satisfied: margin >= 0.0,
        margin,
    })
}

/// Minimum fronthaul rate needed to keep every serving SBS fed while
/// delivering `file`, in bit/s.
pub fn fronthaul_rate(
    file: usize,
    cache: &CacheAllocation,
    clustering: &Clustering,
    config: &SystemConfig,
) -> f64 {
    let Some(fi) = clustering.requested_files().iter().position(|&f| f == file) else {
        return 0.0;
    };
    let rate = config.rate(file);
    (0..config.num_sbs)
        .map(|b| (1.0 - cache.get(file, b)) * clustering.get(fi, b) * rate)
        .sum()
}

/// Slot power: load-dependent edge transmit power plus fronthaul transfer
/// power. Sums run over the requested files only; beamformers of
/// unrequested files are identically zero.
pub fn total_power(
    cache: &CacheAllocation,
    beamformers: &BeamformerSet,
    clustering: &Clustering,
    config: &SystemConfig,
) -> PowerBreakdown {
    let mut edge = 0.0;
    for fi in 0..beamformers.num_requested() {
        for b in 0..config.num_sbs {
            edge += config.edge_slope[b] * beamformers.block_power(fi, b);
        }
    }
    let mut fronthaul = 0.0;
    for (fi, &file) in clustering.requested_files().iter().enumerate() {
        let rate = config.rate(file);
        for b in 0..config.num_sbs {
            fronthaul +=
                config.fronthaul_efficiency * (1.0 - cache.get(file, b)) * rate * clustering.get(fi, b);
        }
    }
    PowerBreakdown::new(edge, fronthaul)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_config;
    use approx::assert_relative_eq;

    fn scalar_channel(values: Vec<Complex64>, users: usize, sbs: usize, antennas: usize) -> ChannelBlock {
        let ls = vec![1.0; users * sbs];
        ChannelBlock::new(users, sbs, antennas, 1, ls, values)
    }

    fn one_link_config() -> SystemConfig {
        load_config(
            "num_sbs = 1\nnum_antennas = 1\nnum_users = 1\nnum_files = 2\n\
             fractional_capacity = 0.0\nnoise_power = 1.0\nsinr_target = 4.0\npatterns = 1",
        )
        .unwrap()
    }

    #[test]
    fn sinr_single_file_hand_value() {
        let cfg = one_link_config();
        let ch = scalar_channel(vec![Complex64::new(1.0, 0.0)], 1, 1, 1);
        let mut v = BeamformerSet::zeros(vec![0], 1, 1);
        v.vector_mut(0)[0] = Complex64::new(2.0, 0.0);
        let s = sinr(0, 0, &v, &ch, 0, &cfg).unwrap();
        assert_relative_eq!(s, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn sinr_with_interferer() {
        let cfg = one_link_config();
        let ch = scalar_channel(vec![Complex64::new(1.0, 0.0)], 1, 1, 1);
        let mut v = BeamformerSet::zeros(vec![0, 1], 1, 1);
        v.vector_mut(0)[0] = Complex64::new(2.0, 0.0);
        v.vector_mut(1)[0] = Complex64::new(1.0, 0.0);
        let s = sinr(0, 0, &v, &ch, 0, &cfg).unwrap();
        assert_relative_eq!(s, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn sinr_zero_beamformer_is_zero() {
        let cfg = one_link_config();
        let ch = scalar_channel(vec![Complex64::new(1.0, 0.0)], 1, 1, 1);
        let v = BeamformerSet::zeros(vec![0], 1, 1);
        assert_eq!(sinr(0, 0, &v, &ch, 0, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn sinr_unknown_indices_error() {
        let cfg = one_link_config();
        let ch = scalar_channel(vec![Complex64::new(1.0, 0.0)], 1, 1, 1);
        let v = BeamformerSet::zeros(vec![0], 1, 1);
        assert!(sinr(5, 0, &v, &ch, 0, &cfg).is_err());
        assert!(sinr(0, 1, &v, &ch, 0, &cfg).is_err());
    }

    #[test]
    fn sinr_invariant_under_common_phase_rotation() {
        let cfg = load_config(
            "num_sbs = 2\nnum_antennas = 2\nnum_users = 1\nnum_files = 2\n\
             fractional_capacity = 0.0\nnoise_power = 1e-3\npatterns = 1",
        )
        .unwrap();
        let gains: Vec<Complex64> = (0..4)
            .map(|i| Complex64::new(0.3 + 0.1 * i as f64, -0.2 + 0.05 * i as f64))
            .collect();
        let ch = scalar_channel(gains, 1, 2, 2);
        let mut v = BeamformerSet::zeros(vec![0, 1], 2, 2);
        for (i, x) in v.vector_mut(0).iter_mut().enumerate() {
            *x = Complex64::new(1.0 - 0.2 * i as f64, 0.4 * i as f64);
        }
        for (i, x) in v.vector_mut(1).iter_mut().enumerate() {
            *x = Complex64::new(0.1 * i as f64, 0.3);
        }
        let base = sinr(0, 0, &v, &ch, 0, &cfg).unwrap();
        for &phase in &[0.7, 1.9, -2.4] {
            let mut rotated = v.clone();
            let rot = Complex64::from_polar(1.0, phase);
            for x in rotated.vector_mut(0).iter_mut() {
                *x *= rot;
            }
            let s = sinr(0, 0, &rotated, &ch, 0, &cfg).unwrap();
            assert_relative_eq!(s, base, max_relative = 1e-10);
        }
    }

    #[test]
    fn fronthaul_rate_hand_values() {
        let cfg = load_config(
            "num_sbs = 2\nnum_antennas = 1\nnum_users = 1\nnum_files = 1\n\
             fractional_capacity = 0.75\nbandwidth = 10.0\nsinr_target = 1.0\npatterns = 1",
        )
        .unwrap();
        // rate = 10 * log2(2) = 10 bit/s
        let mut cache = CacheAllocation::zeros(1, 2);
        cache.set(0, 0, 0.5);
        cache.set(0, 1, 1.0);
        let e = Clustering::filled(vec![0], 2, 1.0);
        assert_relative_eq!(fronthaul_rate(0, &cache, &e, &cfg), 5.0, max_relative = 1e-12);

        let none = Clustering::filled(vec![0], 2, 0.0);
        assert_eq!(fronthaul_rate(0, &cache, &none, &cfg), 0.0);

        let full = CacheAllocation::uniform(1, 2, 1.0);
        assert_eq!(fronthaul_rate(0, &full, &e, &cfg), 0.0);
    }

    #[test]
    fn total_power_hand_values() {
        let cfg = load_config(
            "num_sbs = 1\nnum_antennas = 1\nnum_users = 1\nnum_files = 1\n\
             fractional_capacity = 0.0\nedge_slope = 4.0\npatterns = 1",
        )
        .unwrap();
        let cache = CacheAllocation::zeros(1, 1);
        let mut v = BeamformerSet::zeros(vec![0], 1, 1);
        v.vector_mut(0)[0] = Complex64::new(2f64.sqrt(), 0.0);
        let e = Clustering::filled(vec![0], 1, 0.0);
        let p = total_power(&cache, &v, &e, &cfg);
        assert_relative_eq!(p.edge, 8.0, max_relative = 1e-12);
        assert_eq!(p.fronthaul, 0.0);

        let idle = total_power(
            &cache,
            &BeamformerSet::zeros(vec![0], 1, 1),
            &Clustering::filled(vec![0], 1, 0.0),
            &cfg,
        );
        assert_eq!(idle.total, 0.0);
    }

    #[test]
    fn fronthaul_power_matches_reference_constants() {
        // beta = 1e-7, gamma = 5 dB, W = 10 MHz, one serving SBS, nothing cached.
        let cfg = load_config(
            "num_sbs = 1\nnum_antennas = 1\nnum_users = 1\nnum_files = 1\n\
             fractional_capacity = 0.0\npatterns = 1",
        )
        .unwrap();
        let cache = CacheAllocation::zeros(1, 1);
        let v = BeamformerSet::zeros(vec![0], 1, 1);
        let e = Clustering::filled(vec![0], 1, 1.0);
        let p = total_power(&cache, &v, &e, &cfg);
        assert_relative_eq!(p.fronthaul, 1e-7 * cfg.rate(0), max_relative = 1e-12);
        assert_relative_eq!(p.fronthaul, 2.0573732086067950, max_relative = 1e-9);
    }

    #[test]
    fn total_power_monotone_in_cache_fraction() {
        let cfg = load_config(
            "num_sbs = 2\nnum_antennas = 1\nnum_users = 1\nnum_files = 2\n\
             fractional_capacity = 1.0\npatterns = 1",
        )
        .unwrap();
        let v = BeamformerSet::zeros(vec![0, 1], 2, 1);
        let e = Clustering::filled(vec![0, 1], 2, 1.0);
        let mut prev = f64::INFINITY;
        for step in 0..=4 {
            let l = step as f64 / 4.0;
            let cache = CacheAllocation::uniform(2, 2, l);
            let p = total_power(&cache, &v, &e, &cfg);
            assert!(p.total <= prev + 1e-12);
            prev = p.total;
        }
        // All-ones cache kills the fronthaul term entirely.
        let p = total_power(&CacheAllocation::uniform(2, 2, 1.0), &v, &e, &cfg);
        assert_eq!(p.fronthaul, 0.0);
    }

    #[test]
    fn qos_zero_beamformers_fail_positive_targets() {
        let cfg = one_link_config();
        let ch = scalar_channel(vec![Complex64::new(1.0, 0.0)], 1, 1, 1);
        let req = RequestSlot::from_assignment(vec![0]);
        let v = BeamformerSet::zeros(vec![0], 1, 1);
        let e = Clustering::filled(vec![0], 1, 1.0);
        let report = qos_satisfied(&v, &e, &req, &ch, 0, &cfg, 1e-6).unwrap();
        assert!(!report.satisfied);
        assert!(report.margin < 0.0);
    }

    #[test]
    fn qos_vacuous_when_target_zero() {
        let mut cfg = one_link_config();
        cfg.sinr_target = vec![0.0, 0.0];
        let ch = scalar_channel(vec![Complex64::new(1.0, 0.0)], 1, 1, 1);
        let req = RequestSlot::from_assignment(vec![0]);
        let v = BeamformerSet::zeros(vec![0], 1, 1);
        let e = Clustering::filled(vec![0], 1, 1.0);
        let report = qos_satisfied(&v, &e, &req, &ch, 0, &cfg, 1e-6).unwrap();
        assert!(report.satisfied);
    }

    #[test]
    fn matched_filter_power_is_analytic_lower_bound() {
        // Singleton group, no interference: minimal transmit power meeting
        // the target with one SBS is gamma * sigma^2 / ||h||^2.
        let cfg = one_link_config();
        let h = Complex64::new(1.5, -0.5);
        let ch = scalar_channel(vec![h], 1, 1, 1);
        let req = RequestSlot::from_assignment(vec![0]);
        let gamma = cfg.sinr_target[0];
        let sigma2 = cfg.noise_power[0];
        let p_min = gamma * sigma2 / h.norm_sqr();
        // Matched filter at exactly that power meets the target.
        let mut v = BeamformerSet::zeros(vec![0], 1, 1);
        v.vector_mut(0)[0] = h / h.norm() * p_min.sqrt();
        let e = Clustering::filled(vec![0], 1, 1.0);
        let report = qos_satisfied(&v, &e, &req, &ch, 0, &cfg, 1e-9).unwrap();
        assert!(report.satisfied, "margin {}", report.margin);
        // Any strictly smaller power fails.
        let mut weak = BeamformerSet::zeros(vec![0], 1, 1);
        weak.vector_mut(0)[0] = h / h.norm() * (0.99 * p_min).sqrt();
        let report = qos_satisfied(&weak, &e, &req, &ch, 0, &cfg, 1e-9).unwrap();
        assert!(!report.satisfied);
    }
}

use cscn::conic::{self, LocalPoint};
use cscn::model::{load_config, BeamformerSet, CacheAllocation, Clustering, RequestSlot};
use cscn::scenario::{place_nodes, sample_channels, Substreams};
use num_complex::Complex64;

fn main() {
    let cfg = load_config(
        "num_sbs = 1\nnum_antennas = 2\nnum_users = 1\nnum_files = 2\n\
         fractional_capacity = 0.5\npatterns = 1\nblock_length = 1\nseed = 10",
    )
    .unwrap();
    let streams = Substreams::new(cfg.seed);
    let geo = place_nodes(&cfg, &streams).unwrap();
    let channels = sample_channels(&geo, &cfg, 0, &streams);
    let requests = RequestSlot::from_assignment(vec![0]);
    let cache = CacheAllocation::uniform(cfg.num_files, cfg.num_sbs, cfg.fractional_capacity);

    // Mimic the stalled iterate: matched-filter-ish v, e = 0.9839.
    let h = channels.integrated(0, 0);
    let h2: f64 = h.iter().map(|c| c.norm_sqr()).sum();
    let p = cfg.sinr_target[0] * cfg.noise_power[0] / h2;
    let mut beams = BeamformerSet::zeros(vec![0], 1, 2);
    for (i, v) in beams.vector_mut(0).iter_mut().enumerate() {
        *v = h[i].conj() / h2.sqrt() * p.sqrt();
    }
    println!("||v||^2 = {:e} (matched filter power {p:e})", beams.sbs_power(0));
    let mut clustering = Clustering::filled(vec![0], 1, 0.0);
    clustering.set(0, 0, 0.9839);
    let local = LocalPoint {
        beamformers: beams,
        clustering,
    };
    let prog =
        conic::assemble_subproblem(&cache, &requests, &channels, 0, &local, 1000.0, &cfg).unwrap();
    println!("{}", prog.dump());
    let sol = conic::solve(&prog, 1e-7).unwrap();
    println!("status = {:?}", sol.status);
    println!("x = {:?}", sol.primal);
    println!("objective = {}", sol.objective);
    println!("residuals = {:?}", sol.residuals);
}

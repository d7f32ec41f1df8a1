//! Initialize, estimate the element target and anneal on the test sphere.

use std::time::Instant;

use zomefab::mesh::primitives::sphere_fixture;
use zomefab::zome_opt::*;

fn main() {
    let mesh = sphere_fixture();
    let index = mesh.index();
    let zone = ForbiddenZone::default();
    let collision = CollisionParams::default();
    let init = init_structure(&index, 47.3, &zone).expect("sphere is large enough");
    println!("init: {} nodes, {} struts", init.node_count(), init.strut_count());
    println!("similarity of init: {:.3}", shape_similarity(&init, &index, zone.d_max));

    let t0 = Instant::now();
    let tau = estimate_target_tau(&init, &index, &zone, &collision, &TauParams::default()).expect("threshold reachable");
    println!("tau = {} from counts {:?} ({:.2?})", tau.tau, tau.counts, t0.elapsed());

    let weights = EnergyWeights::default();
    let params = AnnealParams::default();
    let t0 = Instant::now();
    let res = anneal(&init, &index, &zone, &weights, tau.tau as f64, &params, &collision);
    println!(
        "anneal: {} iterations in {:.2?}; energy {:.3} -> {:.3}",
        res.iterations,
        t0.elapsed(),
        res.initial_energy,
        res.best_energy
    );
    println!("terms: {:?}", res.best_terms);
    println!("best: {} nodes, {} struts", res.best.node_count(), res.best.strut_count());
    for (k, s) in &res.stats {
        println!("  {k:?}: {s:?}");
    }
    for (spec, n) in res.best.spec_counts() {
        println!("  {spec}: {n}");
    }
}

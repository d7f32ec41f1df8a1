//! Label the sphere shell by nearest outer node, then by graph cut, and compare
//! partition counts.

use std::collections::BTreeSet;

use zomefab::mesh::primitives::sphere_fixture;
use zomefab::partition::*;
use zomefab::zome_opt::{init_structure, ForbiddenZone};

fn main() {
    let mesh = sphere_fixture();
    let z = init_structure(&mesh.index(), 47.3, &ForbiddenZone::default()).expect("lattice fits");
    let labels = structure_labels(&z);
    println!("{} triangles, {} outer nodes", mesh.triangle_count(), labels.len());
    let p = PartitionProblem::new(&mesh, labels, PartitionWeights::default(), BTreeSet::new()).unwrap();
    let near = nearest_node_labeling(&p);
    println!("nearest node: {} partitions, energy {:.3}", near.partition_count(), near.energy);
    for w in [10.0, 1.0, 0.1] {
        let q = p.with_smoothness(w);
        let (cut, log) = solve_multilabel_logged(&q, &nearest_node_labeling(&q));
        println!(
            "w = {w}: {} partitions, energy {:.3} (data {:.3}, smooth {:.3}), {} cycles",
            cut.partition_count(),
            cut.energy,
            cut.data,
            cut.smoothness,
            log.cycles
        );
    }
    let fit = fit_partitions(&mesh, &p, &PrintVolume::default(), 16.0).unwrap();
    println!("fit: w history {:?}, counts {:?}", fit.history, fit.partition_counts);
}

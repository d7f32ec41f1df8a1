//! Hollow the sphere, partition its shell, fit cut planes and cut pieces.

use std::collections::BTreeSet;
use std::time::Instant;

use zomefab::cut_planes::*;
use zomefab::mesh::primitives::sphere_fixture;
use zomefab::partition::*;
use zomefab::zome_opt::{init_structure, ForbiddenZone};

fn main() {
    let mesh = sphere_fixture();
    let zone = ForbiddenZone::default();
    let z = init_structure(&mesh.index(), 47.3, &zone).expect("lattice fits");
    let p = PartitionProblem::new(&mesh, structure_labels(&z), PartitionWeights::default(), BTreeSet::new()).unwrap();
    let fit = fit_partitions(&mesh, &p, &PrintVolume::default(), zone.d_min).unwrap();
    println!("{} partitions at w = {}", fit.labeling.partition_count(), fit.w_smoothness);

    let planes = train_planes(&mesh, &fit.labeling, &SvmParams::default()).unwrap();
    let worst = planes.iter().map(|f| f.misclassified).fold(0.0, f64::max);
    println!("{} planes, worst misclassified fraction {:.3}", planes.len(), worst);

    let t0 = Instant::now();
    let shell = build_solid_shell(&mesh, 5.0, zone.d_min).unwrap();
    println!(
        "shell: {} inner triangles, volume {:.0} mm³ ({:.2?})",
        shell.inner.as_ref().map_or(0, |m| m.triangle_count()),
        shell.volume(),
        t0.elapsed()
    );
    let t0 = Instant::now();
    let cut: Vec<CutPlane> = planes.iter().map(|f| f.plane).collect();
    let pieces = cut_shell(&shell, &fit.labeling, &cut).unwrap();
    let total: f64 = pieces.iter().map(|p| p.volume).sum();
    println!("{} pieces in {:.2?}, volume sum {:.0} ({:+.3}%)", pieces.len(), t0.elapsed(), total, 100.0 * (total / shell.volume() - 1.0));
    for p in &pieces {
        let ok = p.validate().map(|_| "ok".to_string()).unwrap_or_else(|e| e.to_string());
        println!(
            "  piece {:3}: {:6} tris, {:9.0} mm³, fits {}, dropped {}, misplaced {}, {ok}",
            p.label,
            p.mesh.triangle_count(),
            p.volume,
            validate_piece_fit(&p.mesh, &PrintVolume::default()),
            p.dropped_components,
            p.misplaced_triangles
        );
    }
}

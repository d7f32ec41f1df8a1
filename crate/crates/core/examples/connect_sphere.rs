//! Grow tenons from the sphere's shell pieces into free axis slots.

use std::collections::BTreeSet;

use zomefab::connectors::*;
use zomefab::cut_planes::*;
use zomefab::mesh::primitives::sphere_fixture;
use zomefab::partition::*;
use zomefab::zome_opt::{init_structure, CollisionParams, ForbiddenZone};

fn main() {
    let mesh = sphere_fixture();
    let zone = ForbiddenZone::default();
    let z = init_structure(&mesh.index(), 47.3, &zone).expect("lattice fits");
    let p = PartitionProblem::new(&mesh, structure_labels(&z), PartitionWeights::default(), BTreeSet::new()).unwrap();
    let fit = fit_partitions(&mesh, &p, &PrintVolume::default(), zone.d_min).unwrap();
    let planes: Vec<CutPlane> = train_planes(&mesh, &fit.labeling, &SvmParams::default()).unwrap().iter().map(|f| f.plane).collect();
    let shell = build_solid_shell(&mesh, 5.0, zone.d_min).unwrap();
    let pieces = cut_shell(&shell, &fit.labeling, &planes).unwrap();

    let col = CollisionParams::default();
    let cp = ConnectorParams::default();
    let layout = assign_tenons(&z, &pieces, &col, &cp);
    println!("{} tenons over {} pieces", layout.total(), pieces.len());
    for w in &layout.warnings {
        println!("  warning: {w}");
    }
    let problems = verify_layout(&z, &pieces, &layout, &cp);
    println!("re-verification: {}", if problems.is_empty() { "ok".to_string() } else { problems.join("; ") });
    for (piece, pt) in pieces.iter().zip(&layout.pieces) {
        let g = emit_tenon_geometry(piece, &pt.tenons, &col, &cp);
        let ok = g.mesh.validate_solid().map(|_| "ok".to_string()).unwrap_or_else(|e| e.to_string());
        println!("  piece {:3}: {} tenons, {} dropped, {ok}", piece.label, g.kept.len(), g.dropped.len());
    }
}

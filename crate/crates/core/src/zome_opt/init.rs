use std::collections::{BTreeSet, HashMap};

use super::energy::ForbiddenZone;
use super::structure::{components, ZomeStructure};
use super::OptError;
use crate::geometry::Vec3;
use crate::mesh::SurfaceQueryIndex;
use crate::zome_field::GoldenVector;

/// Cube lattice of Blue-S struts with edge `b0_mm`, one node at the centre of
/// the mesh bounding box. A cell is kept when all 8 corners lie inside the
/// mesh at least `d_min` from its surface; struts join axis-adjacent kept
/// corners, and only the largest connected component survives.
pub fn init_structure(index: &SurfaceQueryIndex, b0_mm: f64, zone: &ForbiddenZone) -> Result<ZomeStructure, OptError> {
    if !(b0_mm > 0.0) {
        return Err(OptError::Invalid(format!("b0 must be positive, got {b0_mm}")));
    }
    let bounds = index.bounds();
    let origin = bounds.center();
    let lo = [0, 1, 2].map(|k| ((bounds.min[k] - origin[k]) / b0_mm).floor() as i64);
    let hi = [0, 1, 2].map(|k| ((bounds.max[k] - origin[k]) / b0_mm).ceil() as i64);
    let mut ok: HashMap<[i64; 3], bool> = HashMap::new();
    let mut corner_ok = |c: [i64; 3]| {
        *ok.entry(c).or_insert_with(|| {
            let p = origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * b0_mm;
            index.is_inside(&p) && index.nearest_surface(&p).distance >= zone.d_min
        })
    };
    let mut kept: BTreeSet<[i64; 3]> = BTreeSet::new();
    for i in lo[0]..hi[0] {
        for j in lo[1]..hi[1] {
            for k in lo[2]..hi[2] {
                let corners: Vec<[i64; 3]> =
                    (0..8).map(|b| [i + (b & 1) as i64, j + ((b >> 1) & 1) as i64, k + ((b >> 2) & 1) as i64]).collect();
                if corners.iter().all(|c| corner_ok(*c)) {
                    kept.extend(corners);
                }
            }
        }
    }
    if kept.is_empty() {
        return Err(OptError::EmptyInitialization { b0_mm });
    }
    let mut positions: Vec<GoldenVector> = kept.iter().map(|c| GoldenVector::int(c[0], c[1], c[2])).collect();
    positions.sort();
    let mut z = ZomeStructure::new(b0_mm, origin);
    for (id, p) in positions.iter().enumerate() {
        z.add_node(id as u32, *p).expect("distinct lattice positions");
    }
    let mut sid = 0;
    for (id, p) in positions.iter().enumerate() {
        for axis in [GoldenVector::int(1, 0, 0), GoldenVector::int(0, 1, 0), GoldenVector::int(0, 0, 1)] {
            if let Some(other) = z.node_at(&(*p + axis)) {
                let s = z.strut_for(id as u32, other).expect("axis step is a blue strut");
                z.add_strut(sid, s).expect("fresh slots");
                sid += 1;
            }
        }
    }
    let comps = components(&z);
    if comps.len() > 1 {
        let keep = &comps[0];
        let mut pruned = ZomeStructure::new(b0_mm, origin);
        let mut remap = HashMap::new();
        for (new_id, old) in keep.iter().enumerate() {
            remap.insert(*old, new_id as u32);
            pruned.add_node(new_id as u32, z.node(*old).unwrap().position).unwrap();
        }
        let mut sid = 0;
        for s in z.struts().values() {
            if let (Some(&a), Some(&b)) = (remap.get(&s.node_a), remap.get(&s.node_b)) {
                let st = pruned.strut_for(a, b).unwrap();
                pruned.add_strut(sid, st).unwrap();
                sid += 1;
            }
        }
        z = pruned;
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{cuboid, sphere_fixture, uv_sphere};
    use crate::zome_field::StrutSpec;

    #[test]
    fn cube_of_three_cells() {
        let b0 = 47.3;
        let h = 1.5 * b0;
        let mesh = cuboid(Vec3::repeat(-h), Vec3::repeat(h));
        let zone = ForbiddenZone { d_min: 0.0, ..ForbiddenZone::default() };
        let z = init_structure(&mesh.index(), b0, &zone).unwrap();
        assert_eq!((z.node_count(), z.strut_count()), (27, 54));
        z.validate().unwrap();
        // outer lattice nodes sit b₀/2 = 23.65 mm from the faces
        let z = init_structure(&mesh.index(), b0, &ForbiddenZone::default()).unwrap();
        assert_eq!(z.node_count(), 27);
        let deep = ForbiddenZone { d_min: 24.0, ..ForbiddenZone::default() };
        assert!(matches!(init_structure(&mesh.index(), b0, &deep), Err(OptError::EmptyInitialization { .. })));
    }

    #[test]
    fn small_sphere_is_empty() {
        let b0 = 47.3;
        let mesh = uv_sphere(Vec3::zeros(), 0.4 * b0, 12, 16);
        assert!(matches!(init_structure(&mesh.index(), b0, &ForbiddenZone::default()), Err(OptError::EmptyInitialization { .. })));
    }

    #[test]
    fn sphere_fixture_lattice() {
        let mesh = sphere_fixture();
        let idx = mesh.index();
        let zone = ForbiddenZone::default();
        let z = init_structure(&idx, 47.3, &zone).unwrap();
        z.validate().unwrap();
        assert!(z.struts().values().all(|s| s.spec == StrutSpec::BLUE_S));
        assert!(z.nodes().values().all(|n| n.valence() <= 6));
        for &id in z.nodes().keys() {
            let p = z.node_world(id);
            assert!(idx.is_inside(&p) && idx.nearest_surface(&p).distance >= zone.d_min);
        }
        assert!(z.node_count() > 27);
    }
}

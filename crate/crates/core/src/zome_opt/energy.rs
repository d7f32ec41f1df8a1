use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::ZomeStructure;
use crate::geometry::Vec3;
use crate::mesh::SurfaceQueryIndex;
use crate::zome_field::{slot_directions, GoldenVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyWeights {
    pub w_fid: f64,
    pub w_reg: f64,
    pub w_val: f64,
    pub w_sim: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights { w_fid: 1.0, w_reg: 100.0, w_val: 1.0, w_sim: 1.0 }
    }
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<(), String> {
        if [self.w_fid, self.w_reg, self.w_val, self.w_sim].iter().all(|w| *w >= 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(format!("energy weights must be finite and non-negative: {self:?}"))
        }
    }
}

/// Distance band around the surface, in mm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForbiddenZone {
    pub d_min: f64,
    pub d_max: f64,
    pub f_max: f64,
    pub f_thick: f64,
}

impl Default for ForbiddenZone {
    fn default() -> Self {
        ForbiddenZone { d_min: 16.0, d_max: 47.3, f_max: 70.0, f_thick: 90.0 }
    }
}

impl ForbiddenZone {
    pub fn validate(&self) -> Result<(), String> {
        if 0.0 < self.d_min && self.d_min < self.d_max && 0.0 < self.f_max && self.f_max < self.f_thick {
            Ok(())
        } else {
            Err(format!("forbidden zone needs 0 < d_min < d_max and 0 < F_max < F_thick: {self:?}"))
        }
    }

    /// Penalty as a function of the distance to the nearest triangle centroid.
    pub fn value(&self, d: f64) -> f64 {
        if d < self.d_min {
            self.f_thick
        } else if d <= self.d_max {
            let t = (d - self.d_min) / (self.d_max - self.d_min);
            self.f_max * t * t
        } else {
            self.f_max
        }
    }
}

pub fn forbidden_zone_penalty(p: &Vec3, index: &SurfaceQueryIndex, zone: &ForbiddenZone) -> f64 {
    zone.value(index.nearest_centroid_distance(p))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerms {
    pub fidelity: f64,
    pub regularity: f64,
    pub valence: f64,
    pub simplicity: f64,
}

impl EnergyTerms {
    pub fn total(&self, w: &EnergyWeights) -> f64 {
        w.w_fid * self.fidelity + w.w_reg * self.regularity + w.w_val * self.valence + w.w_sim * self.simplicity
    }
}

/// A node is outermost when one of its six axis neighbours (±b₀ along x, y, z)
/// holds no node. Returns `(outer, inner)` in id order.
pub fn classify_nodes(z: &ZomeStructure) -> (Vec<u32>, Vec<u32>) {
    let axes = [GoldenVector::int(1, 0, 0), GoldenVector::int(0, 1, 0), GoldenVector::int(0, 0, 1)];
    let mut outer = Vec::new();
    let mut inner = Vec::new();
    for (&id, n) in z.nodes() {
        let full = axes.iter().all(|a| z.node_at(&(n.position + *a)).is_some() && z.node_at(&(n.position - *a)).is_some());
        if full {
            inner.push(id);
        } else {
            outer.push(id);
        }
    }
    (outer, inner)
}

pub fn energy_fidelity(z: &ZomeStructure, index: &SurfaceQueryIndex, zone: &ForbiddenZone) -> f64 {
    let (outer, _) = classify_nodes(z);
    fidelity_from(z, &outer, |p| {
        let w = z.world(p);
        (index.nearest_surface(&w).distance, index.nearest_centroid_distance(&w))
    }, zone)
}

fn fidelity_from(
    z: &ZomeStructure,
    outer: &[u32],
    mut probe: impl FnMut(&GoldenVector) -> (f64, f64),
    zone: &ForbiddenZone,
) -> f64 {
    if outer.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for id in outer {
        let (ds, dc) = probe(&z.nodes()[id].position);
        sum += ds * ds * (1.0 + zone.value(dc));
    }
    sum / (outer.len() as f64 * z.b0_mm * z.b0_mm)
}

/// Mean absolute deviation from a right angle between each strut and the
/// struts sharing one of its nodes, summed over struts. Collinear pairs
/// (angle π) count π/2.
pub fn energy_regularity(z: &ZomeStructure) -> f64 {
    let dirs = slot_directions();
    // per node: outgoing unit vectors keyed by strut id
    let mut sum = 0.0;
    let mut per_strut: HashMap<u32, (f64, usize)> = HashMap::with_capacity(z.strut_count());
    for n in z.nodes().values() {
        let out: Vec<(u32, Vec3)> = n.slots.iter().map(|(&slot, &s)| (s, dirs[slot].unit_vector)).collect();
        for (i, (si, ui)) in out.iter().enumerate() {
            let mut acc = 0.0;
            for (j, (_, uj)) in out.iter().enumerate() {
                if i != j {
                    acc += (ui.dot(uj).clamp(-1.0, 1.0).acos() - FRAC_PI_2).abs();
                }
            }
            let e = per_strut.entry(*si).or_insert((0.0, 0));
            e.0 += acc;
            e.1 += out.len() - 1;
        }
    }
    let mut ids: Vec<_> = per_strut.into_iter().collect();
    ids.sort_by_key(|(id, _)| *id);
    for (_, (acc, k)) in ids {
        if k > 0 {
            sum += acc / k as f64;
        }
    }
    sum
}

pub fn energy_valence(z: &ZomeStructure) -> f64 {
    let (_, inner) = classify_nodes(z);
    inner
        .iter()
        .map(|id| {
            let v = z.nodes()[id].valence() as f64;
            (v - 6.0).powi(2) / 6.0
        })
        .sum()
}

pub fn energy_simplicity(z: &ZomeStructure, tau: f64) -> f64 {
    simplicity_value(z.element_count(), tau)
}

pub fn simplicity_value(elements: usize, tau: f64) -> f64 {
    assert!(tau > 0.0, "target element count must be positive");
    (elements as f64 - tau).powi(2) / tau
}

pub fn energy_terms(z: &ZomeStructure, index: &SurfaceQueryIndex, zone: &ForbiddenZone, tau: f64) -> EnergyTerms {
    EnergyTerms {
        fidelity: energy_fidelity(z, index, zone),
        regularity: energy_regularity(z),
        valence: energy_valence(z),
        simplicity: energy_simplicity(z, tau),
    }
}

pub fn energy_total(z: &ZomeStructure, index: &SurfaceQueryIndex, zone: &ForbiddenZone, w: &EnergyWeights, tau: f64) -> f64 {
    energy_terms(z, index, zone, tau).total(w)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub surface_distance: f64,
    pub centroid_distance: f64,
    pub inside: bool,
}

/// Mesh queries memoized per lattice position, for one fixed lattice frame.
pub struct ShapeContext<'a> {
    pub index: &'a SurfaceQueryIndex,
    pub zone: ForbiddenZone,
    b0_mm: f64,
    origin_mm: Vec3,
    cache: HashMap<GoldenVector, Probe>,
}

impl<'a> ShapeContext<'a> {
    pub fn new(index: &'a SurfaceQueryIndex, zone: ForbiddenZone, z: &ZomeStructure) -> Self {
        ShapeContext { index, zone, b0_mm: z.b0_mm, origin_mm: z.origin_mm, cache: HashMap::new() }
    }

    pub fn world(&self, p: &GoldenVector) -> Vec3 {
        self.origin_mm + p.eval() * self.b0_mm
    }

    pub fn probe(&mut self, p: &GoldenVector) -> Probe {
        if let Some(pr) = self.cache.get(p) {
            return *pr;
        }
        let w = self.world(p);
        let pr = Probe {
            surface_distance: self.index.nearest_surface(&w).distance,
            centroid_distance: self.index.nearest_centroid_distance(&w),
            inside: self.index.is_inside(&w),
        };
        self.cache.insert(*p, pr);
        pr
    }

    fn check_frame(&self, z: &ZomeStructure) {
        assert!(z.b0_mm == self.b0_mm && z.origin_mm == self.origin_mm, "structure frame differs from context frame");
    }

    pub fn terms(&mut self, z: &ZomeStructure, tau: f64) -> EnergyTerms {
        self.check_frame(z);
        let (outer, inner) = classify_nodes(z);
        let zone = self.zone;
        let fidelity = fidelity_from(z, &outer, |p| {
            let pr = self.probe(p);
            (pr.surface_distance, pr.centroid_distance)
        }, &zone);
        let valence = inner.iter().map(|id| (z.nodes()[id].valence() as f64 - 6.0).powi(2) / 6.0).sum();
        EnergyTerms { fidelity, regularity: energy_regularity(z), valence, simplicity: energy_simplicity(z, tau) }
    }

    /// A node may sit at `p` only inside the shape and at least `d_min`
    /// from its surface.
    pub fn node_allowed(&mut self, p: &GoldenVector) -> bool {
        let pr = self.probe(p);
        pr.inside && pr.surface_distance >= self.zone.d_min
    }

    /// A strut between two allowed nodes stays inside when sample points no
    /// more than 4 mm apart all keep `min_clearance` (and at least half the
    /// spacing) from the surface.
    pub fn segment_allowed(&self, a: &Vec3, b: &Vec3, min_clearance: f64) -> bool {
        let len = (b - a).norm();
        let n = (len / 4.0).ceil().max(1.0) as usize;
        let need = min_clearance.max(0.5 * len / n as f64);
        (1..n).all(|k| {
            let p = a + (b - a) * (k as f64 / n as f64);
            self.index.nearest_surface(&p).distance >= need
        })
    }
}

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::energy::ShapeContext;
use super::structure::{Edit, Strut, StructureError, ZomeStructure};
use crate::geometry::{point_segment_distance, segment_segment_distance, Vec3};
use crate::zome_field::{all_placements, decompositions, placement_for, slot_directions, GoldenVector, Placement};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpKind {
    InsNode,
    DelNode,
    InsStrut,
    DelStrut,
    InsBridge,
    DelBridge,
}

impl OpKind {
    pub const ALL: [OpKind; 6] =
        [OpKind::InsNode, OpKind::DelNode, OpKind::InsStrut, OpKind::DelStrut, OpKind::InsBridge, OpKind::DelBridge];
    pub const INSERTIONS: [OpKind; 3] = [OpKind::InsNode, OpKind::InsStrut, OpKind::InsBridge];
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Reject {
    #[error("no applicable site")]
    NoSite,
    #[error("site does not match the operator")]
    WrongSite,
    #[error("operation would disconnect the structure")]
    Disconnects,
    #[error("collision")]
    Collision,
    #[error("element leaves the allowed region of the shape")]
    OutsideShape,
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollisionParams {
    pub ball_radius_mm: f64,
    pub strut_radius_mm: f64,
    pub clearance_mm: f64,
}

impl Default for CollisionParams {
    fn default() -> Self {
        CollisionParams { ball_radius_mm: 9.2, strut_radius_mm: 4.0, clearance_mm: 1.0 }
    }
}

impl CollisionParams {
    pub fn node_node(&self) -> f64 {
        2.0 * self.ball_radius_mm + self.clearance_mm
    }
    pub fn node_strut(&self) -> f64 {
        self.ball_radius_mm + self.strut_radius_mm + self.clearance_mm
    }
    pub fn strut_strut(&self) -> f64 {
        2.0 * self.strut_radius_mm + self.clearance_mm
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.ball_radius_mm > 0.0 && self.strut_radius_mm > 0.0 && self.clearance_mm > 0.0 {
            Ok(())
        } else {
            Err(format!("collision parameters must be positive: {self:?}"))
        }
    }
}

/// Full pairwise check of balls and struts.
pub fn collision_free(z: &ZomeStructure, params: &CollisionParams) -> bool {
    let nodes: Vec<(u32, Vec3)> = z.nodes().keys().map(|&id| (id, z.node_world(id))).collect();
    let struts: Vec<(u32, Strut, Vec3, Vec3)> = z
        .struts()
        .iter()
        .map(|(&id, s)| {
            let (a, b) = z.strut_segment(id);
            (id, *s, a, b)
        })
        .collect();
    for (i, (_, p)) in nodes.iter().enumerate() {
        for (_, q) in &nodes[i + 1..] {
            if (p - q).norm() < params.node_node() {
                return false;
            }
        }
    }
    for (id, p) in &nodes {
        for (_, s, a, b) in &struts {
            if s.node_a != *id && s.node_b != *id && point_segment_distance(p, a, b) < params.node_strut() {
                return false;
            }
        }
    }
    for (i, (_, s, a, b)) in struts.iter().enumerate() {
        for (_, t, c, d) in &struts[i + 1..] {
            if !shares_node(s, t) && segment_segment_distance(a, b, c, d) < params.strut_strut() {
                return false;
            }
        }
    }
    true
}

fn shares_node(s: &Strut, t: &Strut) -> bool {
    s.node_a == t.node_a || s.node_a == t.node_b || s.node_b == t.node_a || s.node_b == t.node_b
}

/// Collision check restricted to pairs involving the given new elements;
/// equivalent to [`collision_free`] when the rest was already collision free.
pub fn collision_free_local(z: &ZomeStructure, new_nodes: &[u32], new_struts: &[u32], params: &CollisionParams) -> bool {
    for &n in new_nodes {
        let p = z.node_world(n);
        for &m in z.nodes().keys() {
            if m != n && (z.node_world(m) - p).norm() < params.node_node() {
                return false;
            }
        }
        for (&sid, s) in z.struts() {
            if s.node_a != n && s.node_b != n {
                let (a, b) = z.strut_segment(sid);
                if point_segment_distance(&p, &a, &b) < params.node_strut() {
                    return false;
                }
            }
        }
    }
    for &sid in new_struts {
        let s = z.struts()[&sid];
        let (a, b) = z.strut_segment(sid);
        for &m in z.nodes().keys() {
            if m != s.node_a && m != s.node_b && point_segment_distance(&z.node_world(m), &a, &b) < params.node_strut() {
                return false;
            }
        }
        for (&tid, t) in z.struts() {
            if tid != sid && !shares_node(&s, t) {
                let (c, d) = z.strut_segment(tid);
                if segment_segment_distance(&a, &b, &c, &d) < params.strut_strut() {
                    return false;
                }
            }
        }
    }
    true
}

/// Edits recorded against a structure; dropped without `commit` they are undone.
struct Tx<'a> {
    z: &'a mut ZomeStructure,
    edits: Vec<Edit>,
    done: bool,
}

impl<'a> Tx<'a> {
    fn new(z: &'a mut ZomeStructure) -> Self {
        Tx { z, edits: Vec::new(), done: false }
    }

    fn push(&mut self, e: Edit) -> Result<(), Reject> {
        self.z.apply(&e)?;
        self.edits.push(e);
        Ok(())
    }

    fn add_node(&mut self, position: GoldenVector) -> Result<u32, Reject> {
        let id = self.z.free_node_id();
        self.push(Edit::AddNode { id, position })?;
        Ok(id)
    }

    fn remove_node(&mut self, id: u32) -> Result<(), Reject> {
        let position = self.z.node(id).ok_or(StructureError::MissingNode(id))?.position;
        self.push(Edit::RemoveNode { id, position })
    }

    fn add_strut(&mut self, a: u32, b: u32) -> Result<u32, Reject> {
        let strut = self.z.strut_for(a, b).ok_or(Reject::WrongSite)?;
        let id = self.z.free_strut_id();
        self.push(Edit::AddStrut { id, strut })?;
        Ok(id)
    }

    fn remove_strut(&mut self, id: u32) -> Result<(), Reject> {
        let strut = *self.z.strut(id).ok_or(StructureError::MissingStrut(id))?;
        self.push(Edit::RemoveStrut { id, strut })
    }

    fn commit(mut self) -> Vec<Edit> {
        self.done = true;
        std::mem::take(&mut self.edits)
    }
}

impl Drop for Tx<'_> {
    fn drop(&mut self) {
        if !self.done {
            self.z.undo_all(&self.edits);
        }
    }
}

/// Split strut `sid` at `pos(node_a) + offset(first)`, so the two new struts
/// realise `first` then `second`.
pub fn ins_node_at(z: &mut ZomeStructure, sid: u32, first: Placement, second: Placement) -> Result<Vec<Edit>, Reject> {
    let s = *z.strut(sid).ok_or(StructureError::MissingStrut(sid))?;
    let pa = z.node(s.node_a).unwrap().position;
    let pb = z.node(s.node_b).unwrap().position;
    let d1 = offset(first);
    if d1 + offset(second) != pb - pa {
        return Err(Reject::WrongSite);
    }
    let mut tx = Tx::new(z);
    tx.remove_strut(sid)?;
    let m = tx.add_node(pa + d1)?;
    tx.add_strut(s.node_a, m)?;
    tx.add_strut(m, s.node_b)?;
    Ok(tx.commit())
}

/// Remove valence-2 node `n`, replacing its two struts by one.
pub fn del_node_at(z: &mut ZomeStructure, n: u32) -> Result<Vec<Edit>, Reject> {
    let node = z.node(n).ok_or(StructureError::MissingNode(n))?;
    if node.valence() != 2 {
        return Err(Reject::WrongSite);
    }
    let ss: Vec<u32> = node.slots.values().copied().collect();
    let mut ends: Vec<u32> = ss.iter().map(|s| z.strut(*s).unwrap().other(n)).collect();
    ends.sort();
    if z.strut_for(ends[0], ends[1]).is_none() || z.strut_between(ends[0], ends[1]).is_some() {
        return Err(Reject::WrongSite);
    }
    let mut tx = Tx::new(z);
    for &s in &ss {
        tx.remove_strut(s)?;
    }
    tx.remove_node(n)?;
    tx.add_strut(ends[0], ends[1])?;
    Ok(tx.commit())
}

/// Connect `a` and `b`; `bridge` selects graph distance > 2 instead of = 2.
pub fn ins_strut_at(z: &mut ZomeStructure, a: u32, b: u32, bridge: bool) -> Result<Vec<Edit>, Reject> {
    if a == b || z.node(a).is_none() || z.node(b).is_none() || z.strut_between(a, b).is_some() {
        return Err(Reject::WrongSite);
    }
    match z.distance_without(a, b, None) {
        Some(2) if !bridge => {}
        Some(d) if bridge && d > 2 => {}
        None => {}
        _ => return Err(Reject::WrongSite),
    }
    let mut tx = Tx::new(z);
    tx.add_strut(a, b)?;
    Ok(tx.commit())
}

/// Remove strut `sid`; `bridge` requires the endpoints to stay connected by a
/// path longer than 2, otherwise by a path of length exactly 2.
pub fn del_strut_at(z: &mut ZomeStructure, sid: u32, bridge: bool) -> Result<Vec<Edit>, Reject> {
    let s = *z.strut(sid).ok_or(StructureError::MissingStrut(sid))?;
    match z.distance_without(s.node_a, s.node_b, Some(sid)) {
        None => return Err(Reject::Disconnects),
        Some(2) if !bridge => {}
        Some(d) if bridge && d > 2 => {}
        _ => return Err(Reject::WrongSite),
    }
    let mut tx = Tx::new(z);
    tx.remove_strut(sid)?;
    Ok(tx.commit())
}

fn offset(p: Placement) -> GoldenVector {
    slot_directions()[p.direction].lattice_step(p.spec.size)
}

/// Two-placement decompositions of every strut offset.
fn split_table() -> &'static HashMap<GoldenVector, Vec<(Placement, Placement)>> {
    static T: OnceLock<HashMap<GoldenVector, Vec<(Placement, Placement)>>> = OnceLock::new();
    T.get_or_init(|| all_placements().iter().map(|(_, d)| (*d, decompositions(*d))).collect())
}

fn nth_key<K: Copy, V>(m: &std::collections::BTreeMap<K, V>, i: usize) -> K {
    *m.keys().nth(i).unwrap()
}

const DELETE_TRIES: usize = 8;

/// Pick a random site for `kind` and apply it. Returns the applied edits.
/// Sites are drawn as: InsNode, a uniform strut then a uniform feasible split;
/// DelNode, uniform over mergeable valence-2 nodes; InsStrut/InsBridge, a
/// uniform node then a uniform partner; DelStrut/DelBridge, uniform struts by
/// rejection.
pub fn propose(z: &mut ZomeStructure, kind: OpKind, rng: &mut impl Rng) -> Result<Vec<Edit>, Reject> {
    match kind {
        OpKind::InsNode => {
            if z.strut_count() == 0 {
                return Err(Reject::NoSite);
            }
            let sid = nth_key(z.struts(), rng.gen_range(0..z.strut_count()));
            let s = *z.strut(sid).unwrap();
            let pa = z.node(s.node_a).unwrap().position;
            let pb = z.node(s.node_b).unwrap().position;
            let slot_free = |n: u32, slot: usize| z.node(n).unwrap().slots.get(&slot).is_none_or(|&o| o == sid);
            let sites: Vec<&(Placement, Placement)> = split_table()[&(pb - pa)]
                .iter()
                .filter(|(p1, p2)| {
                    z.node_at(&(pa + offset(*p1))).is_none()
                        && slot_free(s.node_a, p1.direction)
                        && slot_free(s.node_b, slot_directions()[p2.direction].antipode)
                })
                .collect();
            let &&(p1, p2) = sites.choose(rng).ok_or(Reject::NoSite)?;
            ins_node_at(z, sid, p1, p2)
        }
        OpKind::DelNode => {
            let sites: Vec<u32> = z
                .nodes()
                .iter()
                .filter(|(_, n)| n.valence() == 2)
                .map(|(&id, _)| id)
                .filter(|&id| {
                    let ends: Vec<u32> = z.neighbours(id).collect();
                    z.strut_between(ends[0], ends[1]).is_none() && mergeable(z, ends[0], ends[1])
                })
                .collect();
            let &n = sites.choose(rng).ok_or(Reject::NoSite)?;
            del_node_at(z, n)
        }
        OpKind::InsStrut | OpKind::InsBridge => {
            if z.node_count() < 2 {
                return Err(Reject::NoSite);
            }
            let bridge = kind == OpKind::InsBridge;
            let a = nth_key(z.nodes(), rng.gen_range(0..z.node_count()));
            let na = z.node(a).unwrap();
            let dist = z.bfs(a);
            let partners: Vec<u32> = all_placements()
                .iter()
                .filter(|(p, _)| !na.slots.contains_key(&p.direction))
                .filter_map(|(p, d)| z.node_at(&(na.position + *d)).map(|b| (p, b)))
                .filter(|(p, b)| !z.node(*b).unwrap().slots.contains_key(&slot_directions()[p.direction].antipode))
                .filter(|(_, b)| match dist.get(b) {
                    Some(&d) => (d == 2 && !bridge) || (d > 2 && bridge),
                    None => false,
                })
                .map(|(_, b)| b)
                .collect();
            let &b = partners.choose(rng).ok_or(Reject::NoSite)?;
            ins_strut_at(z, a, b, bridge)
        }
        OpKind::DelStrut | OpKind::DelBridge => {
            if z.strut_count() == 0 {
                return Err(Reject::NoSite);
            }
            let bridge = kind == OpKind::DelBridge;
            let mut last = Reject::NoSite;
            for _ in 0..DELETE_TRIES {
                let sid = nth_key(z.struts(), rng.gen_range(0..z.strut_count()));
                match del_strut_at(z, sid, bridge) {
                    Ok(e) => return Ok(e),
                    Err(e) => last = e,
                }
            }
            Err(last)
        }
    }
}

fn mergeable(z: &ZomeStructure, a: u32, b: u32) -> bool {
    let pa = z.node(a).unwrap().position;
    let pb = z.node(b).unwrap().position;
    placement_for(pb - pa).is_some()
}

/// New nodes and struts introduced by a batch of edits that are still present.
pub fn added_elements(z: &ZomeStructure, edits: &[Edit]) -> (Vec<u32>, Vec<u32>) {
    let mut nodes = Vec::new();
    let mut struts = Vec::new();
    for e in edits {
        match e {
            Edit::AddNode { id, .. } if z.node(*id).is_some() => nodes.push(*id),
            Edit::AddStrut { id, .. } if z.strut(*id).is_some() => struts.push(*id),
            _ => {}
        }
    }
    (nodes, struts)
}

/// Propose and apply a random operator, then enforce collision freedom and,
/// when a shape is given, that every new element stays inside it. On any
/// rejection the structure is left untouched.
pub fn apply_local_op(
    z: &mut ZomeStructure,
    kind: OpKind,
    rng: &mut impl Rng,
    collision: &CollisionParams,
    shape: Option<&mut ShapeContext>,
) -> Result<Vec<Edit>, Reject> {
    let edits = propose(z, kind, rng)?;
    if let Err(r) = gate(z, &edits, collision, shape) {
        z.undo_all(&edits);
        return Err(r);
    }
    Ok(edits)
}

fn gate(z: &ZomeStructure, edits: &[Edit], collision: &CollisionParams, shape: Option<&mut ShapeContext>) -> Result<(), Reject> {
    let (nodes, struts) = added_elements(z, edits);
    if let Some(ctx) = shape {
        for n in &nodes {
            if !ctx.node_allowed(&z.node(*n).unwrap().position) {
                return Err(Reject::OutsideShape);
            }
        }
        for s in &struts {
            let (a, b) = z.strut_segment(*s);
            if !ctx.segment_allowed(&a, &b, collision.strut_radius_mm) {
                return Err(Reject::OutsideShape);
            }
        }
    }
    if !collision_free_local(z, &nodes, &struts, collision) {
        return Err(Reject::Collision);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zome_field::{StrutColor, StrutSize, StrutSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path(len: i64, step: GoldenVector) -> ZomeStructure {
        let mut z = ZomeStructure::new(47.3, Vec3::zeros());
        for i in 0..=len {
            z.add_node(i as u32, step.scale(crate::zome_field::GoldenNumber::int(i))).unwrap();
        }
        for i in 0..len as u32 {
            let s = z.strut_for(i, i + 1).unwrap();
            z.add_strut(i, s).unwrap();
        }
        z
    }

    fn cube_lattice(n: i64) -> ZomeStructure {
        let mut z = ZomeStructure::new(47.3, Vec3::zeros());
        let mut id = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    z.add_node(id, GoldenVector::int(i, j, k)).unwrap();
                    id += 1;
                }
            }
        }
        let ids: Vec<u32> = z.nodes().keys().copied().collect();
        let mut sid = 0;
        for &a in &ids {
            for &b in &ids {
                if a < b && z.strut_for(a, b).is_some() {
                    let s = z.strut_for(a, b).unwrap();
                    z.add_strut(sid, s).unwrap();
                    sid += 1;
                }
            }
        }
        z
    }

    #[test]
    fn ins_node_splits_long_strut_into_short_and_medium() {
        let blue_l = GoldenVector::from_pairs([(2, 2), (0, 0), (0, 0)]);
        let mut z = path(1, blue_l);
        assert_eq!(z.strut(0).unwrap().spec, StrutSpec::new(StrutColor::Blue, StrutSize::L));
        let before = z.clone();
        let splits = decompositions(blue_l);
        let (p1, p2) = *splits
            .iter()
            .find(|(a, b)| a.spec.size == StrutSize::S && b.spec.size == StrutSize::M && a.direction == b.direction)
            .unwrap();
        let edits = ins_node_at(&mut z, 0, p1, p2).unwrap();
        z.validate().unwrap();
        assert_eq!(z.node(2).unwrap().position, GoldenVector::int(1, 0, 0));
        let specs: Vec<StrutSpec> = z.struts().values().map(|s| s.spec).collect();
        assert!(specs.contains(&StrutSpec::BLUE_S) && specs.contains(&StrutSpec::new(StrutColor::Blue, StrutSize::M)));
        // the intermediate node is at the exact golden split point
        assert!((z.node_world(2) - Vec3::new(47.3, 0.0, 0.0)).norm() < 1e-12);
        let undo = del_node_at(&mut z, 2).unwrap();
        assert_eq!(z, before);
        assert_eq!(undo.len(), 4);
        assert_eq!(edits.len(), 4);
    }

    #[test]
    fn blue_s_splits_into_two_yellow_struts() {
        let mut z = path(1, GoldenVector::int(1, 0, 0));
        let splits = &split_table()[&GoldenVector::int(1, 0, 0)];
        assert!(!splits.is_empty());
        for (p1, p2) in splits {
            assert_eq!(offset(*p1) + offset(*p2), GoldenVector::int(1, 0, 0));
        }
        let (p1, p2) = *splits.iter().find(|(a, _)| a.spec.color == StrutColor::Yellow).unwrap();
        let before = z.clone();
        ins_node_at(&mut z, 0, p1, p2).unwrap();
        z.validate().unwrap();
        del_node_at(&mut z, 2).unwrap();
        assert_eq!(z, before);
    }

    #[test]
    fn del_strut_on_path_disconnects() {
        let mut z = path(3, GoldenVector::int(1, 0, 0));
        let before = z.clone();
        assert_eq!(del_strut_at(&mut z, 1, false), Err(Reject::Disconnects));
        assert_eq!(del_strut_at(&mut z, 1, true), Err(Reject::Disconnects));
        assert_eq!(z, before);
    }

    #[test]
    fn strut_and_bridge_pairs_are_inverse() {
        // square face: deleting an edge leaves a path of length 3 → bridge
        let mut z = cube_lattice(2);
        let before = z.clone();
        assert_eq!(del_strut_at(&mut z, 0, false), Err(Reject::WrongSite));
        let e = del_strut_at(&mut z, 0, true).unwrap();
        z.validate().unwrap();
        let a = match e[0] {
            Edit::RemoveStrut { strut, .. } => strut,
            _ => unreachable!(),
        };
        assert_eq!(ins_strut_at(&mut z, a.node_a, a.node_b, false), Err(Reject::WrongSite));
        ins_strut_at(&mut z, a.node_a, a.node_b, true).unwrap();
        assert_eq!(z, before);

        // a triangle of struts: deleting one edge leaves a 2-path → plain strut op
        let mut z = ZomeStructure::new(47.3, Vec3::zeros());
        z.add_node(0, GoldenVector::ZERO).unwrap();
        z.add_node(1, GoldenVector::int(1, 0, 0)).unwrap();
        z.add_node(2, GoldenVector::from_pairs([(1, 0), (1, 0), (1, 0)])).unwrap();
        for (id, (a, b)) in [(0u32, 1u32), (0, 2), (1, 2)].into_iter().enumerate() {
            let s = z.strut_for(a, b).unwrap();
            z.add_strut(id as u32, s).unwrap();
        }
        let before = z.clone();
        del_strut_at(&mut z, 2, false).unwrap();
        assert_eq!(ins_strut_at(&mut z, 1, 2, true), Err(Reject::WrongSite));
        ins_strut_at(&mut z, 1, 2, false).unwrap();
        assert_eq!(z, before);
    }

    #[test]
    fn collision_fixtures() {
        let p = CollisionParams::default();
        assert!(collision_free(&cube_lattice(3), &p));
        // crossing struts through a common point
        let mut z = ZomeStructure::new(47.3, Vec3::zeros());
        z.add_node(0, GoldenVector::ZERO).unwrap();
        z.add_node(1, GoldenVector::int(1, 0, 0)).unwrap();
        z.add_node(2, GoldenVector::from_pairs([(1, 0), (-1, 0), (0, 0)])).unwrap();
        z.add_node(3, GoldenVector::from_pairs([(1, 0), (1, 0), (0, 0)])).unwrap();
        let s = z.strut_for(0, 1).unwrap();
        z.add_strut(0, s).unwrap();
        assert!(collision_free(&z, &p));
        let s = z.strut_for(2, 3).unwrap();
        z.add_strut(1, s).unwrap();
        assert!(!collision_free(&z, &p));
        assert!(!collision_free_local(&z, &[], &[1], &p));
        // balls too close (two nodes 1/2·(γ−1) b₀ ≈ 14.6 mm apart)
        let mut z = ZomeStructure::new(47.3, Vec3::zeros());
        z.add_node(0, GoldenVector::ZERO).unwrap();
        z.add_node(1, GoldenVector::from_pairs([(-1, 1), (0, 0), (0, 0)])).unwrap();
        assert!(!collision_free(&z, &p));
    }

    #[test]
    fn random_ops_preserve_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut z = cube_lattice(3);
        let p = CollisionParams::default();
        let mut applied = 0;
        for i in 0..600 {
            let kind = OpKind::ALL[i % 6];
            if apply_local_op(&mut z, kind, &mut rng, &p, None).is_ok() {
                applied += 1;
            }
            z.validate().unwrap();
        }
        assert!(applied > 50, "only {applied} operations applied");
        assert!(collision_free(&z, &p));
    }

    #[test]
    fn rejected_ops_leave_structure_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut z = cube_lattice(2);
        // huge balls: every insertion collides
        let p = CollisionParams { ball_radius_mm: 1000.0, strut_radius_mm: 4.0, clearance_mm: 1.0 };
        let before = z.clone();
        for _ in 0..50 {
            let r = apply_local_op(&mut z, OpKind::InsNode, &mut rng, &p, None);
            assert!(r.is_err());
            assert_eq!(z, before);
        }
    }
}

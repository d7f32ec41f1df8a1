use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::zome_field::{placement_for, slot_directions, strut_displacement, GoldenVector, Placement, StrutSpec};

pub const STRUCTURE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub position: GoldenVector,
    /// slot index → strut id
    pub slots: BTreeMap<usize, u32>,
}

impl Node {
    pub fn valence(&self) -> usize {
        self.slots.len()
    }
}

/// A strut from `node_a` to `node_b`; `direction` is the slot used at
/// `node_a` (the antipodal slot is used at `node_b`). Always `node_a < node_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Strut {
    pub node_a: u32,
    pub node_b: u32,
    pub spec: StrutSpec,
    pub direction: usize,
}

impl Strut {
    pub fn placement(&self) -> Placement {
        Placement { direction: self.direction, spec: self.spec }
    }

    pub fn other(&self, n: u32) -> u32 {
        if n == self.node_a {
            self.node_b
        } else {
            self.node_a
        }
    }

    /// Slot occupied at endpoint `n`.
    pub fn slot_at(&self, n: u32) -> usize {
        if n == self.node_a {
            self.direction
        } else {
            slot_directions()[self.direction].antipode
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StructureError {
    #[error("node {0} does not exist")]
    MissingNode(u32),
    #[error("strut {0} does not exist")]
    MissingStrut(u32),
    #[error("id {0} already in use")]
    DuplicateId(u32),
    #[error("position {0:?} already holds a node")]
    PositionTaken([(i64, i64); 3]),
    #[error("node {0} still has struts attached")]
    NodeInUse(u32),
    #[error("slot {slot} on node {node} is occupied")]
    SlotTaken { node: u32, slot: usize },
    #[error("strut {id}: offset is not the displacement of {spec} in slot {direction}")]
    BadOffset { id: u32, spec: StrutSpec, direction: usize },
    #[error("strut {0} must connect two distinct nodes with node_a < node_b")]
    BadOrientation(u32),
    #[error("structure is not connected")]
    Disconnected,
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("{0}")]
    Json(String),
}

/// One reversible change to a structure.
#[derive(Clone, Debug, PartialEq)]
pub enum Edit {
    AddNode { id: u32, position: GoldenVector },
    RemoveNode { id: u32, position: GoldenVector },
    AddStrut { id: u32, strut: Strut },
    RemoveStrut { id: u32, strut: Strut },
}

impl Edit {
    pub fn inverse(&self) -> Edit {
        match *self {
            Edit::AddNode { id, position } => Edit::RemoveNode { id, position },
            Edit::RemoveNode { id, position } => Edit::AddNode { id, position },
            Edit::AddStrut { id, strut } => Edit::RemoveStrut { id, strut },
            Edit::RemoveStrut { id, strut } => Edit::AddStrut { id, strut },
        }
    }
}

/// Ball-and-strut graph on the exact lattice. World coordinates are
/// `origin_mm + b0_mm · position`.
#[derive(Clone, Debug)]
pub struct ZomeStructure {
    pub b0_mm: f64,
    pub origin_mm: Vec3,
    nodes: BTreeMap<u32, Node>,
    struts: BTreeMap<u32, Strut>,
    by_position: HashMap<GoldenVector, u32>,
}

impl PartialEq for ZomeStructure {
    fn eq(&self, o: &Self) -> bool {
        self.b0_mm == o.b0_mm && self.origin_mm == o.origin_mm && self.nodes == o.nodes && self.struts == o.struts
    }
}

impl ZomeStructure {
    pub fn new(b0_mm: f64, origin_mm: Vec3) -> Self {
        ZomeStructure { b0_mm, origin_mm, nodes: BTreeMap::new(), struts: BTreeMap::new(), by_position: HashMap::new() }
    }

    /// `n × n × n` cube lattice of Blue-S struts with its first node at `origin_mm`.
    pub fn cube_lattice(b0_mm: f64, origin_mm: Vec3, n: i64) -> Self {
        let mut z = ZomeStructure::new(b0_mm, origin_mm);
        let mut id = 0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    z.add_node(id, GoldenVector::int(i, j, k)).expect("distinct positions");
                    id += 1;
                }
            }
        }
        let mut sid = 0;
        for a in 0..id {
            for d in [GoldenVector::int(1, 0, 0), GoldenVector::int(0, 1, 0), GoldenVector::int(0, 0, 1)] {
                let Some(b) = z.node_at(&(z.nodes[&a].position + d)) else { continue };
                let s = z.strut_for(a, b).expect("axis neighbours join with Blue-S");
                z.add_strut(sid, s).expect("free slots");
                sid += 1;
            }
        }
        z
    }

    pub fn nodes(&self) -> &BTreeMap<u32, Node> {
        &self.nodes
    }

    pub fn struts(&self) -> &BTreeMap<u32, Strut> {
        &self.struts
    }

    pub fn node(&self, id: u32) -> Option<&Node> {
        self.nodes.get(&id)
    }

    pub fn strut(&self, id: u32) -> Option<&Strut> {
        self.struts.get(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn strut_count(&self) -> usize {
        self.struts.len()
    }

    /// |N| + |S|
    pub fn element_count(&self) -> usize {
        self.nodes.len() + self.struts.len()
    }

    pub fn node_at(&self, p: &GoldenVector) -> Option<u32> {
        self.by_position.get(p).copied()
    }

    pub fn world(&self, p: &GoldenVector) -> Vec3 {
        self.origin_mm + p.eval() * self.b0_mm
    }

    pub fn node_world(&self, id: u32) -> Vec3 {
        self.world(&self.nodes[&id].position)
    }

    pub fn strut_segment(&self, id: u32) -> (Vec3, Vec3) {
        let s = &self.struts[&id];
        (self.node_world(s.node_a), self.node_world(s.node_b))
    }

    /// Smallest unused node id.
    pub fn free_node_id(&self) -> u32 {
        first_gap(self.nodes.keys())
    }

    pub fn free_strut_id(&self) -> u32 {
        first_gap(self.struts.keys())
    }

    /// Neighbouring node ids, in slot order.
    pub fn neighbours(&self, n: u32) -> impl Iterator<Item = u32> + '_ {
        self.nodes[&n].slots.values().map(move |s| self.struts[s].other(n))
    }

    pub fn strut_between(&self, a: u32, b: u32) -> Option<u32> {
        self.nodes[&a].slots.values().copied().find(|s| self.struts[s].other(a) == b)
    }

    /// Build the strut joining `a` and `b`, if their offset is a strut displacement.
    pub fn strut_for(&self, a: u32, b: u32) -> Option<Strut> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let off = self.nodes.get(&b)?.position - self.nodes.get(&a)?.position;
        let p = placement_for(off)?;
        Some(Strut { node_a: a, node_b: b, spec: p.spec, direction: p.direction })
    }

    pub fn add_node(&mut self, id: u32, position: GoldenVector) -> Result<(), StructureError> {
        if self.nodes.contains_key(&id) {
            return Err(StructureError::DuplicateId(id));
        }
        if self.by_position.contains_key(&position) {
            return Err(StructureError::PositionTaken(position.to_pairs()));
        }
        self.nodes.insert(id, Node { position, slots: BTreeMap::new() });
        self.by_position.insert(position, id);
        Ok(())
    }

    pub fn remove_node(&mut self, id: u32) -> Result<GoldenVector, StructureError> {
        let n = self.nodes.get(&id).ok_or(StructureError::MissingNode(id))?;
        if !n.slots.is_empty() {
            return Err(StructureError::NodeInUse(id));
        }
        let p = n.position;
        self.nodes.remove(&id);
        self.by_position.remove(&p);
        Ok(p)
    }

    pub fn add_strut(&mut self, id: u32, s: Strut) -> Result<(), StructureError> {
        if self.struts.contains_key(&id) {
            return Err(StructureError::DuplicateId(id));
        }
        if s.node_a >= s.node_b {
            return Err(StructureError::BadOrientation(id));
        }
        let pa = self.nodes.get(&s.node_a).ok_or(StructureError::MissingNode(s.node_a))?.position;
        let pb = self.nodes.get(&s.node_b).ok_or(StructureError::MissingNode(s.node_b))?.position;
        let dir = slot_directions().get(s.direction).ok_or(StructureError::BadOffset { id, spec: s.spec, direction: s.direction })?;
        match strut_displacement(dir, s.spec) {
            Ok(d) if pb - pa == d => {}
            _ => return Err(StructureError::BadOffset { id, spec: s.spec, direction: s.direction }),
        }
        for n in [s.node_a, s.node_b] {
            let slot = s.slot_at(n);
            if self.nodes[&n].slots.contains_key(&slot) {
                return Err(StructureError::SlotTaken { node: n, slot });
            }
        }
        for n in [s.node_a, s.node_b] {
            let slot = s.slot_at(n);
            self.nodes.get_mut(&n).unwrap().slots.insert(slot, id);
        }
        self.struts.insert(id, s);
        Ok(())
    }

    pub fn remove_strut(&mut self, id: u32) -> Result<Strut, StructureError> {
        let s = self.struts.remove(&id).ok_or(StructureError::MissingStrut(id))?;
        for n in [s.node_a, s.node_b] {
            let slot = s.slot_at(n);
            self.nodes.get_mut(&n).unwrap().slots.remove(&slot);
        }
        Ok(s)
    }

    pub fn apply(&mut self, e: &Edit) -> Result<(), StructureError> {
        match *e {
            Edit::AddNode { id, position } => self.add_node(id, position),
            Edit::RemoveNode { id, .. } => self.remove_node(id).map(|_| ()),
            Edit::AddStrut { id, strut } => self.add_strut(id, strut),
            Edit::RemoveStrut { id, .. } => self.remove_strut(id).map(|_| ()),
        }
    }

    /// Apply a batch of edits; on failure the structure is left unchanged.
    pub fn apply_all(&mut self, edits: &[Edit]) -> Result<(), StructureError> {
        for (k, e) in edits.iter().enumerate() {
            if let Err(err) = self.apply(e) {
                for done in edits[..k].iter().rev() {
                    self.apply(&done.inverse()).expect("undo of a just-applied edit");
                }
                return Err(err);
            }
        }
        Ok(())
    }

    pub fn undo_all(&mut self, edits: &[Edit]) {
        for e in edits.iter().rev() {
            self.apply(&e.inverse()).expect("undo of an applied edit");
        }
    }

    /// Unweighted graph distances from `src`.
    pub fn bfs(&self, src: u32) -> HashMap<u32, usize> {
        let mut dist = HashMap::with_capacity(self.nodes.len());
        dist.insert(src, 0);
        let mut q = VecDeque::from([src]);
        while let Some(n) = q.pop_front() {
            let d = dist[&n];
            for m in self.neighbours(n) {
                dist.entry(m).or_insert_with(|| {
                    q.push_back(m);
                    d + 1
                });
            }
        }
        dist
    }

    /// Graph distance from `a` to `b` ignoring strut `skip`, capped search.
    pub fn distance_without(&self, a: u32, b: u32, skip: Option<u32>) -> Option<usize> {
        let mut dist: HashMap<u32, usize> = HashMap::from([(a, 0)]);
        let mut q = VecDeque::from([a]);
        while let Some(n) = q.pop_front() {
            let d = dist[&n];
            if n == b {
                return Some(d);
            }
            for (_, &s) in &self.nodes[&n].slots {
                if Some(s) == skip {
                    continue;
                }
                let m = self.struts[&s].other(n);
                dist.entry(m).or_insert_with(|| {
                    q.push_back(m);
                    d + 1
                });
            }
        }
        None
    }

    pub fn is_connected(&self) -> bool {
        match self.nodes.keys().next() {
            None => true,
            Some(&first) => self.bfs(first).len() == self.nodes.len(),
        }
    }

    /// Check every structural invariant.
    pub fn validate(&self) -> Result<(), StructureError> {
        for (&id, s) in &self.struts {
            if s.node_a >= s.node_b {
                return Err(StructureError::BadOrientation(id));
            }
            let pa = self.nodes.get(&s.node_a).ok_or(StructureError::MissingNode(s.node_a))?.position;
            let pb = self.nodes.get(&s.node_b).ok_or(StructureError::MissingNode(s.node_b))?.position;
            let ok = strut_displacement(&slot_directions()[s.direction], s.spec).map(|d| pb - pa == d).unwrap_or(false);
            if !ok {
                return Err(StructureError::BadOffset { id, spec: s.spec, direction: s.direction });
            }
            for n in [s.node_a, s.node_b] {
                if self.nodes[&n].slots.get(&s.slot_at(n)) != Some(&id) {
                    return Err(StructureError::SlotTaken { node: n, slot: s.slot_at(n) });
                }
            }
        }
        for (&id, n) in &self.nodes {
            if self.by_position.get(&n.position) != Some(&id) {
                return Err(StructureError::PositionTaken(n.position.to_pairs()));
            }
            for (&slot, sid) in &n.slots {
                let s = self.struts.get(sid).ok_or(StructureError::MissingStrut(*sid))?;
                if (s.node_a != id && s.node_b != id) || s.slot_at(id) != slot {
                    return Err(StructureError::SlotTaken { node: id, slot });
                }
            }
        }
        if self.by_position.len() != self.nodes.len() {
            return Err(StructureError::PositionTaken([(0, 0); 3]));
        }
        if !self.is_connected() {
            return Err(StructureError::Disconnected);
        }
        Ok(())
    }

    /// Id-independent description: sorted positions and sorted strut records.
    pub fn canonical(&self) -> (Vec<GoldenVector>, Vec<(GoldenVector, GoldenVector, Placement)>) {
        let mut pos: Vec<GoldenVector> = self.nodes.values().map(|n| n.position).collect();
        pos.sort();
        let mut st: Vec<_> = self
            .struts
            .values()
            .map(|s| (self.nodes[&s.node_a].position, self.nodes[&s.node_b].position, s.placement()))
            .collect();
        st.sort();
        (pos, st)
    }

    pub fn spec_counts(&self) -> BTreeMap<StrutSpec, usize> {
        let mut m = BTreeMap::new();
        for s in self.struts.values() {
            *m.entry(s.spec).or_insert(0) += 1;
        }
        m
    }

    pub fn to_document(&self) -> StructureDocument {
        StructureDocument {
            schema_version: STRUCTURE_SCHEMA_VERSION,
            b0_mm: self.b0_mm,
            origin_mm: [self.origin_mm.x, self.origin_mm.y, self.origin_mm.z],
            nodes: self.nodes.iter().map(|(&id, n)| NodeRecord { id, position: n.position.to_pairs() }).collect(),
            struts: self
                .struts
                .iter()
                .map(|(&id, s)| StrutRecord { id, node_a: s.node_a, node_b: s.node_b, spec: s.spec, direction: s.direction })
                .collect(),
        }
    }

    pub fn from_document(doc: &StructureDocument) -> Result<Self, StructureError> {
        if doc.schema_version != STRUCTURE_SCHEMA_VERSION {
            return Err(StructureError::Schema(doc.schema_version));
        }
        let mut z = ZomeStructure::new(doc.b0_mm, Vec3::from(doc.origin_mm));
        for n in &doc.nodes {
            z.add_node(n.id, GoldenVector::from_pairs(n.position))?;
        }
        for s in &doc.struts {
            z.add_strut(s.id, Strut { node_a: s.node_a, node_b: s.node_b, spec: s.spec, direction: s.direction })?;
        }
        z.validate()?;
        Ok(z)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("structure serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, StructureError> {
        let doc: StructureDocument = serde_json::from_str(text).map_err(|e| StructureError::Json(e.to_string()))?;
        Self::from_document(&doc)
    }
}

fn first_gap<'a>(ids: impl Iterator<Item = &'a u32>) -> u32 {
    let mut expect = 0;
    for &id in ids {
        if id != expect {
            return expect;
        }
        expect += 1;
    }
    expect
}

/// Serialized form; positions are exact `(a, b)` pairs per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructureDocument {
    pub schema_version: u32,
    pub b0_mm: f64,
    pub origin_mm: [f64; 3],
    pub nodes: Vec<NodeRecord>,
    pub struts: Vec<StrutRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u32,
    pub position: [(i64, i64); 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrutRecord {
    pub id: u32,
    pub node_a: u32,
    pub node_b: u32,
    #[serde(flatten)]
    pub spec: StrutSpec,
    pub direction: usize,
}

/// Node ids grouped into connected components, largest first (ties by
/// smallest member id).
pub fn components(z: &ZomeStructure) -> Vec<BTreeSet<u32>> {
    let mut seen: BTreeSet<u32> = BTreeSet::new();
    let mut comps = Vec::new();
    for &id in z.nodes.keys() {
        if seen.contains(&id) {
            continue;
        }
        let c: BTreeSet<u32> = z.bfs(id).into_keys().collect();
        seen.extend(c.iter().copied());
        comps.push(c);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a.first().cmp(&b.first())));
    comps
}

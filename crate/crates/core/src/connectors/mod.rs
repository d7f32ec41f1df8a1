//! Printed tenons that plug shell pieces into free axis slots of the core.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cut_planes::{FaceOrigin, Piece};
use crate::geometry::{point_segment_distance, segment_segment_distance, Aabb, Vec3};
use crate::mesh::polygon::{nest_loops, point_in_loop, triangulate, P2};
use crate::mesh::{SurfaceQueryIndex, TriangleMesh};
use crate::partition::structure_labels;
use crate::zome_field::axis_slots;
use crate::zome_opt::{CollisionParams, ZomeStructure};

pub const LAYOUT_SCHEMA_VERSION: u32 = 1;

/// Landing faces must be antiparallel to the ray within this.
pub const PERPENDICULAR_TOLERANCE: f64 = 1e-9;

/// The six axis directions, in slot order `+x, −x, +y, −y, +z, −z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "+z")]
    PosZ,
    #[serde(rename = "-z")]
    NegZ,
}

impl Axis {
    pub const ALL: [Axis; 6] = [Axis::PosX, Axis::NegX, Axis::PosY, Axis::NegY, Axis::PosZ, Axis::NegZ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Coordinate axis 0, 1 or 2.
    pub fn dim(self) -> usize {
        self.index() / 2
    }

    pub fn sign(self) -> f64 {
        if self.index() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn vector(self) -> Vec3 {
        let mut v = Vec3::zeros();
        v[self.dim()] = self.sign();
        v
    }

    /// Ball slot index of this direction.
    pub fn slot(self) -> usize {
        axis_slots()[self.index()]
    }

    pub fn name(self) -> &'static str {
        ["+x", "-x", "+y", "-y", "+z", "-z"][self.index()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConnectorParams {
    /// Longest tenon, ball centre to landing face, mm.
    pub max_len_mm: f64,
    /// Pieces with fewer tenons get a warning.
    pub min_tenons: usize,
    /// Nominal slot cross-section, mm.
    pub slot_width_mm: f64,
    pub slot_height_mm: f64,
    /// Taken off every side of the peg.
    pub clearance_mm: f64,
    /// How far the peg reaches into the ball, measured from its surface.
    pub engagement_depth_mm: f64,
}

impl Default for ConnectorParams {
    fn default() -> Self {
        ConnectorParams {
            max_len_mm: 60.0,
            min_tenons: 2,
            slot_width_mm: 4.0,
            slot_height_mm: 2.0,
            clearance_mm: 0.2,
            engagement_depth_mm: 8.0,
        }
    }
}

impl ConnectorParams {
    pub fn validate(&self) -> Result<(), String> {
        let ok = self.max_len_mm > 0.0
            && self.engagement_depth_mm > 0.0
            && self.clearance_mm >= 0.0
            && self.slot_width_mm > 2.0 * self.clearance_mm
            && self.slot_height_mm > 2.0 * self.clearance_mm;
        if ok {
            Ok(())
        } else {
            Err(format!("invalid connector parameters: {self:?}"))
        }
    }

    /// Peg cross-section (long, short) after clearance.
    pub fn peg_section(&self) -> (f64, f64) {
        (self.slot_width_mm - 2.0 * self.clearance_mm, self.slot_height_mm - 2.0 * self.clearance_mm)
    }

    fn peg_half_diagonal(&self) -> f64 {
        let (w, h) = self.peg_section();
        0.5 * (w * w + h * h).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tenon {
    pub ball_id: u32,
    pub direction: Axis,
    /// Landing point on the inner surface, mm.
    pub base_point: [f64; 3],
    /// Ball centre to base point, mm.
    pub length: f64,
}

impl Tenon {
    pub fn base(&self) -> Vec3 {
        Vec3::from(self.base_point)
    }

    /// The ball centre the tenon starts from.
    pub fn origin(&self) -> Vec3 {
        self.base() - self.direction.vector() * self.length
    }

    /// Axis-aligned box of the printed peg: footprint on the landing face,
    /// extruded back to the engagement depth inside the ball.
    pub fn peg_box(&self, params: &CollisionParams, cp: &ConnectorParams) -> Aabb {
        let d = self.direction.vector();
        let tip = self.origin() + d * (params.ball_radius_mm - cp.engagement_depth_mm);
        let (lo, hi) = footprint_offsets(self.direction, cp);
        let mut b = Aabb::empty();
        for p in [self.base(), tip] {
            b.grow(&(p + lo));
            b.grow(&(p + hi));
        }
        b
    }
}

/// Footprint corner offsets (min, max) around a base point.
fn footprint_offsets(axis: Axis, cp: &ConnectorParams) -> (Vec3, Vec3) {
    let (w, h) = cp.peg_section();
    let k = axis.dim();
    let mut lo = Vec3::zeros();
    let mut hi = Vec3::zeros();
    // long side along the axis after next, short side along the next one
    lo[(k + 2) % 3] = -w / 2.0;
    hi[(k + 2) % 3] = w / 2.0;
    lo[(k + 1) % 3] = -h / 2.0;
    hi[(k + 1) % 3] = h / 2.0;
    (lo, hi)
}

fn footprint_corners(axis: Axis, base: &Vec3, cp: &ConnectorParams) -> [Vec3; 4] {
    let (lo, hi) = footprint_offsets(axis, cp);
    let k = axis.dim();
    let (a, b) = ((k + 2) % 3, (k + 1) % 3);
    let corner = |sa: bool, sb: bool| {
        let mut o = Vec3::zeros();
        o[a] = if sa { hi[a] } else { lo[a] };
        o[b] = if sb { hi[b] } else { lo[b] };
        base + o
    };
    [corner(false, false), corner(true, false), corner(true, true), corner(false, true)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceTenons {
    pub label: u32,
    pub tenons: Vec<Tenon>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConnectorLayout {
    /// One entry per piece, in piece order.
    pub pieces: Vec<PieceTenons>,
    pub warnings: Vec<String>,
}

impl ConnectorLayout {
    pub fn counts(&self) -> BTreeMap<u32, usize> {
        self.pieces.iter().map(|p| (p.label, p.tenons.len())).collect()
    }

    pub fn total(&self) -> usize {
        self.pieces.iter().map(|p| p.tenons.len()).sum()
    }

    /// Tenon slots per ball.
    pub fn slots_by_ball(&self) -> BTreeMap<u32, Vec<Axis>> {
        let mut m: BTreeMap<u32, Vec<Axis>> = BTreeMap::new();
        for t in self.pieces.iter().flat_map(|p| &p.tenons) {
            m.entry(t.ball_id).or_default().push(t.direction);
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub schema_version: u32,
    pub params: ConnectorParams,
    pub layout: ConnectorLayout,
}

/// Axis directions of `ball` not taken by a strut. Empty for a missing ball.
pub fn admissible_slots(ball: u32, z: &ZomeStructure) -> Vec<Axis> {
    let Some(node) = z.node(ball) else {
        return Vec::new();
    };
    Axis::ALL.into_iter().filter(|a| !node.slots.contains_key(&a.slot())).collect()
}

/// Every piece's triangles in one ray index, remembering the owner.
pub struct PieceIndex {
    index: SurfaceQueryIndex,
    owner: Vec<(usize, usize)>,
}

impl PieceIndex {
    pub fn new(pieces: &[Piece]) -> Self {
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        let mut owner = Vec::new();
        for (pi, p) in pieces.iter().enumerate() {
            let base = verts.len() as u32;
            verts.extend_from_slice(p.mesh.vertices());
            for (t, tri) in p.mesh.triangles().iter().enumerate() {
                tris.push(tri.map(|i| i + base));
                owner.push((pi, t));
            }
        }
        PieceIndex { index: TriangleMesh::from_parts(verts, tris).index(), owner }
    }

    /// First face hit by the ray: (piece, triangle, distance).
    pub fn first_hit(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<(usize, usize, f64)> {
        self.index.ray_first(origin, dir, t_max).map(|(t, h)| (self.owner[t].0, self.owner[t].1, h.t))
    }
}

/// A landing: the face a ray from a ball meets squarely.
struct Landing {
    piece: usize,
    triangle: usize,
    t: f64,
}

fn landing(pieces: &[Piece], idx: &PieceIndex, origin: &Vec3, axis: Axis, max_len: f64) -> Option<Landing> {
    let d = axis.vector();
    let (piece, triangle, t) = idx.first_hit(origin, &d, max_len)?;
    let p = &pieces[piece];
    if p.origins[triangle] != FaceOrigin::Inner {
        return None;
    }
    if p.mesh.triangle_normal(triangle).dot(&d) > -1.0 + PERPENDICULAR_TOLERANCE {
        return None;
    }
    Some(Landing { piece, triangle, t })
}

/// Coplanar, edge-connected inner faces around `seed`.
fn flat_patch(piece: &Piece, seed: usize) -> Vec<usize> {
    let m = &piece.mesh;
    let n0 = m.triangle_normal(seed);
    let p0 = m.vertices()[m.triangles()[seed][0] as usize];
    let mut by_edge: HashMap<(u32, u32), usize> = HashMap::new();
    for (i, t) in m.triangles().iter().enumerate() {
        for k in 0..3 {
            by_edge.insert((t[k], t[(k + 1) % 3]), i);
        }
    }
    let same_plane = |t: usize| {
        piece.origins[t] == FaceOrigin::Inner
            && m.triangle_normal(t).dot(&n0) > 1.0 - PERPENDICULAR_TOLERANCE
            && m.triangle_points(t).iter().all(|q| (q - p0).dot(&n0).abs() < 1e-6)
    };
    let mut seen = BTreeSet::from([seed]);
    let mut stack = vec![seed];
    while let Some(t) = stack.pop() {
        let tri = m.triangles()[t];
        for k in 0..3 {
            if let Some(&u) = by_edge.get(&(tri[(k + 1) % 3], tri[k])) {
                if !seen.contains(&u) && same_plane(u) {
                    seen.insert(u);
                    stack.push(u);
                }
            }
        }
    }
    seen.into_iter().collect()
}

/// Boundary loops of a triangle set, `None` when a vertex has two outgoing
/// boundary edges (the patch pinches).
fn patch_loops(m: &TriangleMesh, patch: &[usize]) -> Option<Vec<Vec<u32>>> {
    let edges: BTreeSet<(u32, u32)> =
        patch.iter().flat_map(|&t| (0..3).map(move |k| (m.triangles()[t][k], m.triangles()[t][(k + 1) % 3]))).collect();
    let mut next: BTreeMap<u32, u32> = BTreeMap::new();
    for &(a, b) in &edges {
        if !edges.contains(&(b, a)) && next.insert(a, b).is_some() {
            return None;
        }
    }
    let mut loops = Vec::new();
    let mut used = BTreeSet::new();
    for &s in next.keys() {
        if used.contains(&s) {
            continue;
        }
        let mut lp = vec![s];
        used.insert(s);
        let mut cur = next[&s];
        while cur != s {
            if !used.insert(cur) {
                return None;
            }
            lp.push(cur);
            cur = *next.get(&cur)?;
        }
        loops.push(lp);
    }
    Some(loops)
}

/// In-plane frame with `u × v = n` for an axis-aligned normal.
fn plane_frame(n: &Vec3) -> (Vec3, Vec3) {
    let k = n.iamax();
    let mut u = Vec3::zeros();
    u[(k + 2) % 3] = 1.0;
    (u, n.cross(&u))
}

/// Whether a segment comes within `margin` of the box `[lo, hi]` (2D).
fn segment_touches_box(a: &P2, b: &P2, lo: &P2, hi: &P2, margin: f64) -> bool {
    let (lo, hi) = (lo - P2::new(margin, margin), hi + P2::new(margin, margin));
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = b - a;
    for k in 0..2 {
        if d[k].abs() < 1e-300 {
            if a[k] < lo[k] || a[k] > hi[k] {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo[k] - a[k]) / d[k], (hi[k] - a[k]) / d[k]);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Footprint clearance from the patch boundary, mm.
const FOOTPRINT_MARGIN: f64 = 1e-3;

/// The footprint around `base` lies strictly inside the flat patch.
fn footprint_fits(piece: &Piece, patch: &[usize], axis: Axis, base: &Vec3, cp: &ConnectorParams) -> bool {
    let m = &piece.mesh;
    let Some(loops) = patch_loops(m, patch) else {
        return false;
    };
    let n = -axis.vector();
    let (u, v) = plane_frame(&n);
    let to2 = |p: &Vec3| P2::new(p.dot(&u), p.dot(&v));
    let corners = footprint_corners(axis, base, cp).map(|c| to2(&c));
    let lo = P2::new(corners.iter().map(|c| c.x).fold(f64::INFINITY, f64::min), corners.iter().map(|c| c.y).fold(f64::INFINITY, f64::min));
    let hi = P2::new(corners.iter().map(|c| c.x).fold(f64::NEG_INFINITY, f64::max), corners.iter().map(|c| c.y).fold(f64::NEG_INFINITY, f64::max));
    let mut pts = Vec::new();
    let idx_loops: Vec<Vec<usize>> = loops
        .iter()
        .map(|lp| {
            lp.iter()
                .map(|&g| {
                    pts.push(to2(&m.vertices()[g as usize]));
                    pts.len() - 1
                })
                .collect()
        })
        .collect();
    for lp in &idx_loops {
        for k in 0..lp.len() {
            if segment_touches_box(&pts[lp[k]], &pts[lp[(k + 1) % lp.len()]], &lo, &hi, FOOTPRINT_MARGIN) {
                return false;
            }
        }
    }
    let c = to2(base);
    idx_loops.iter().filter(|lp| point_in_loop(&c, &pts, lp)).count() % 2 == 1
}

/// Pieces each ball may connect to: its own label and, for outer nodes,
/// the labels of lattice neighbours.
pub fn coverage(z: &ZomeStructure, piece_labels: &BTreeSet<u32>) -> BTreeMap<u32, BTreeSet<u32>> {
    let outer: BTreeSet<u32> = structure_labels(z).iter().map(|l| l.id).collect();
    let mut cover = BTreeMap::new();
    for &b in &outer {
        let mut s: BTreeSet<u32> = z.neighbours(b).filter(|n| piece_labels.contains(n)).collect();
        if piece_labels.contains(&b) {
            s.insert(b);
        }
        if !s.is_empty() {
            cover.insert(b, s);
        }
    }
    cover
}

/// Whether the tenon segment from the ball surface to `end` clears every
/// other ball and every strut not attached to `ball`.
fn path_is_clear(z: &ZomeStructure, ball: u32, start: &Vec3, end: &Vec3, col: &CollisionParams, cp: &ConnectorParams) -> bool {
    let r = cp.peg_half_diagonal();
    for &id in z.nodes().keys() {
        if id != ball && point_segment_distance(&z.node_world(id), start, end) < col.ball_radius_mm + r {
            return false;
        }
    }
    for (&sid, s) in z.struts() {
        if s.node_a == ball || s.node_b == ball {
            continue;
        }
        let (a, b) = z.strut_segment(sid);
        if segment_segment_distance(&a, &b, start, end) < col.strut_radius_mm + r {
            return false;
        }
    }
    true
}

/// Ray test for one (ball, axis) slot against the covered pieces.
fn try_slot(
    z: &ZomeStructure,
    pieces: &[Piece],
    idx: &PieceIndex,
    covered: &BTreeSet<u32>,
    ball: u32,
    axis: Axis,
    col: &CollisionParams,
    cp: &ConnectorParams,
) -> Option<(usize, Tenon)> {
    let c = z.node_world(ball);
    let d = axis.vector();
    let hit = landing(pieces, idx, &c, axis, cp.max_len_mm)?;
    let piece = &pieces[hit.piece];
    if !covered.contains(&piece.label) || hit.t <= col.ball_radius_mm {
        return None;
    }
    let base = c + d * hit.t;
    if !path_is_clear(z, ball, &(c + d * col.ball_radius_mm), &base, col, cp) {
        return None;
    }
    // every footprint corner lands on the same flat face, nothing in front
    for corner in footprint_corners(axis, &c, cp) {
        let h = landing(pieces, idx, &corner, axis, cp.max_len_mm)?;
        if h.piece != hit.piece || (h.t - hit.t).abs() > 1e-6 {
            return None;
        }
    }
    let patch = flat_patch(piece, hit.triangle);
    if !footprint_fits(piece, &patch, axis, &base, cp) {
        return None;
    }
    Some((hit.piece, Tenon { ball_id: ball, direction: axis, base_point: [base.x, base.y, base.z], length: hit.t }))
}

/// Cast a ray from every covering ball along each free axis slot and book
/// the slots whose ray lands squarely on a piece's inner surface.
pub fn assign_tenons(z: &ZomeStructure, pieces: &[Piece], col: &CollisionParams, cp: &ConnectorParams) -> ConnectorLayout {
    let labels: BTreeSet<u32> = pieces.iter().map(|p| p.label).collect();
    let cover = coverage(z, &labels);
    let idx = PieceIndex::new(pieces);
    let candidates: Vec<(u32, Axis)> =
        cover.keys().flat_map(|&b| admissible_slots(b, z).into_iter().map(move |a| (b, a))).collect();
    let found: Vec<Option<(usize, Tenon)>> =
        candidates.par_iter().map(|&(b, a)| try_slot(z, pieces, &idx, &cover[&b], b, a, col, cp)).collect();
    // booking pass in (ball, direction) order
    let mut layout = ConnectorLayout {
        pieces: pieces.iter().map(|p| PieceTenons { label: p.label, tenons: Vec::new() }).collect(),
        warnings: Vec::new(),
    };
    let mut booked: BTreeSet<(u32, Axis)> = BTreeSet::new();
    for (pi, t) in found.into_iter().flatten() {
        if booked.insert((t.ball_id, t.direction)) {
            layout.pieces[pi].tenons.push(t);
        }
    }
    for p in &layout.pieces {
        if p.tenons.len() < cp.min_tenons {
            layout.warnings.push(format!("piece {} has {} tenon(s), fewer than {}", p.label, p.tenons.len(), cp.min_tenons));
        }
    }
    layout
}

/// Independent re-check of a layout. Returns one line per violation.
pub fn verify_layout(z: &ZomeStructure, pieces: &[Piece], layout: &ConnectorLayout, cp: &ConnectorParams) -> Vec<String> {
    let mut problems = Vec::new();
    let idx = PieceIndex::new(pieces);
    let mut booked = BTreeSet::new();
    for (pi, pt) in layout.pieces.iter().enumerate() {
        if pieces.get(pi).map(|p| p.label) != Some(pt.label) {
            problems.push(format!("layout entry {pi} does not match piece order"));
            continue;
        }
        for t in &pt.tenons {
            let who = format!("tenon ball {} {}", t.ball_id, t.direction.name());
            let Some(node) = z.node(t.ball_id) else {
                problems.push(format!("{who}: no such ball"));
                continue;
            };
            if !booked.insert((t.ball_id, t.direction)) {
                problems.push(format!("{who}: slot booked twice"));
            }
            if node.slots.contains_key(&t.direction.slot()) {
                problems.push(format!("{who}: slot holds a strut"));
            }
            let d = t.direction.vector();
            if (t.origin() - z.node_world(t.ball_id)).norm() > 1e-6 {
                problems.push(format!("{who}: base point is not on the slot axis"));
            }
            match idx.first_hit(&z.node_world(t.ball_id), &d, cp.max_len_mm) {
                Some((hp, ht, dist)) => {
                    let p = &pieces[hp];
                    if hp != pi || p.origins[ht] != FaceOrigin::Inner {
                        problems.push(format!("{who}: first hit is not the inner surface of piece {}", pt.label));
                    }
                    if p.mesh.triangle_normal(ht).dot(&d) > -1.0 + PERPENDICULAR_TOLERANCE {
                        problems.push(format!("{who}: landing face is not perpendicular"));
                    }
                    if (dist - t.length).abs() > 1e-6 {
                        problems.push(format!("{who}: length {} but ray meets the surface at {dist}", t.length));
                    }
                }
                None => problems.push(format!("{who}: ray misses every piece")),
            }
        }
    }
    for (b, axes) in layout.slots_by_ball() {
        let struts = z.node(b).map_or(0, |n| n.valence());
        if axes.len() > 6 || axes.len() + struts > 62 {
            problems.push(format!("ball {b}: {} tenons with {struts} struts", axes.len()));
        }
    }
    problems
}

/// A piece with its pegs merged in.
#[derive(Clone, Debug)]
pub struct TenonGeometry {
    pub mesh: TriangleMesh,
    pub origins: Vec<FaceOrigin>,
    pub kept: Vec<Tenon>,
    /// Tenons left out, with the reason.
    pub dropped: Vec<(Tenon, String)>,
}

/// Grow each tenon as a peg from its landing face and merge it into the
/// piece. Pegs whose boxes overlap an earlier one (lowest ball id first) are
/// dropped and reported.
pub fn emit_tenon_geometry(piece: &Piece, tenons: &[Tenon], col: &CollisionParams, cp: &ConnectorParams) -> TenonGeometry {
    let mut order: Vec<&Tenon> = tenons.iter().collect();
    order.sort_by_key(|t| (t.ball_id, t.direction));
    let mut kept: Vec<Tenon> = Vec::new();
    let mut dropped = Vec::new();
    let mut boxes: Vec<Aabb> = Vec::new();
    let idx = piece.mesh.index();
    // landing patches, keyed by their smallest triangle
    let mut patches: BTreeMap<usize, (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for t in order {
        let b = t.peg_box(col, cp);
        if let Some(k) = boxes.iter().position(|o| overlaps(o, &b, FOOTPRINT_MARGIN)) {
            dropped.push((t.clone(), format!("peg overlaps the peg of ball {}", kept[k].ball_id)));
            continue;
        }
        let d = t.direction.vector();
        let hit = idx.ray_first(&t.origin(), &d, t.length + 1e-6).filter(|(tri, _)| piece.origins[*tri] == FaceOrigin::Inner);
        let Some((tri, _)) = hit else {
            dropped.push((t.clone(), "landing face not found on this piece".into()));
            continue;
        };
        let key = match owner.get(&tri) {
            Some(&k) => k,
            None => {
                let patch = flat_patch(piece, tri);
                let k = patch[0];
                for &p in &patch {
                    owner.insert(p, k);
                }
                patches.insert(k, (patch, Vec::new()));
                k
            }
        };
        if !footprint_fits(piece, &patches[&key].0, t.direction, &t.base(), cp) {
            dropped.push((t.clone(), "footprint leaves the flat landing face".into()));
            continue;
        }
        patches.get_mut(&key).unwrap().1.push(kept.len());
        boxes.push(b);
        kept.push(t.clone());
    }

    let m = &piece.mesh;
    let mut verts: Vec<Vec3> = m.vertices().to_vec();
    let mut removed = vec![false; m.triangle_count()];
    let mut new_tris: Vec<[u32; 3]> = Vec::new();
    let mut new_origins: Vec<FaceOrigin> = Vec::new();
    for (patch, users) in patches.values() {
        if users.is_empty() {
            continue;
        }
        let axis = kept[users[0]].direction;
        let n = -axis.vector();
        let (u, v) = plane_frame(&n);
        let loops = patch_loops(m, patch).expect("checked by footprint_fits");
        let mut pts: Vec<P2> = Vec::new();
        let mut ids: Vec<u32> = Vec::new();
        let mut idx_loops: Vec<Vec<usize>> = Vec::new();
        let add = |g: u32, p: &Vec3, pts: &mut Vec<P2>, ids: &mut Vec<u32>| {
            pts.push(P2::new(p.dot(&u), p.dot(&v)));
            ids.push(g);
            pts.len() - 1
        };
        for lp in &loops {
            idx_loops.push(lp.iter().map(|&g| add(g, &verts[g as usize], &mut pts, &mut ids)).collect());
        }
        for &k in users {
            let t = &kept[k];
            let tip_shift = n * (t.length - (col.ball_radius_mm - cp.engagement_depth_mm));
            let mut ring = footprint_corners(t.direction, &t.base(), cp).to_vec();
            // holes run clockwise seen from n
            let area: f64 = (0..4).map(|i| P2::new(ring[i].dot(&u), ring[i].dot(&v)).perp(&P2::new(ring[(i + 1) % 4].dot(&u), ring[(i + 1) % 4].dot(&v)))).sum();
            if area > 0.0 {
                ring.reverse();
            }
            let base_ids: Vec<u32> = ring
                .iter()
                .map(|p| {
                    verts.push(*p);
                    (verts.len() - 1) as u32
                })
                .collect();
            let tip_ids: Vec<u32> = ring
                .iter()
                .map(|p| {
                    verts.push(p + tip_shift);
                    (verts.len() - 1) as u32
                })
                .collect();
            idx_loops.push(base_ids.iter().zip(&ring).map(|(&g, p)| add(g, p, &mut pts, &mut ids)).collect());
            for i in 0..4 {
                let j = (i + 1) % 4;
                new_tris.push([base_ids[j], base_ids[i], tip_ids[i]]);
                new_tris.push([base_ids[j], tip_ids[i], tip_ids[j]]);
            }
            new_tris.push([tip_ids[0], tip_ids[3], tip_ids[2]]);
            new_tris.push([tip_ids[0], tip_ids[2], tip_ids[1]]);
            new_origins.extend(std::iter::repeat_n(FaceOrigin::Tenon, 10));
        }
        let (outers, _) = nest_loops(&pts, &idx_loops);
        for (o, holes) in outers {
            let hs: Vec<Vec<usize>> = holes.iter().map(|&h| idx_loops[h].clone()).collect();
            for tri in triangulate(&pts, &idx_loops[o], &hs) {
                new_tris.push(tri.map(|i| ids[i]));
                new_origins.push(FaceOrigin::Inner);
            }
        }
        for &t in patch {
            removed[t] = true;
        }
    }
    let mut tris = Vec::with_capacity(m.triangle_count() + new_tris.len());
    let mut origins = Vec::with_capacity(tris.capacity());
    for t in 0..m.triangle_count() {
        if !removed[t] {
            tris.push(m.triangles()[t]);
            origins.push(piece.origins[t]);
        }
    }
    tris.extend(new_tris);
    origins.extend(new_origins);
    TenonGeometry { mesh: TriangleMesh::from_parts(verts, tris), origins, kept, dropped }
}

fn overlaps(a: &Aabb, b: &Aabb, margin: f64) -> bool {
    (0..3).all(|k| a.min[k] < b.max[k] + margin && b.min[k] < a.max[k] + margin)
}

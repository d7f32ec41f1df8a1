//! Clip a closed triangle mesh against a half-space and cap the cut.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::mesh::polygon::{nest_loops, triangulate, P2};
use crate::mesh::TriangleMesh;

/// Vertices closer than this to a cutting plane move the plane instead, mm.
pub const PLANE_CLEARANCE: f64 = 1e-3;

/// Where a piece face came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaceOrigin {
    /// Part of outer surface triangle `t`.
    Outer(u32),
    Inner,
    /// Cap on cut plane `k`.
    Cap(u32),
    Tenon,
}

#[derive(Clone, Debug, Default)]
pub struct TaggedMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub origins: Vec<FaceOrigin>,
}

impl TaggedMesh {
    pub fn from_mesh(m: &TriangleMesh, origin: impl Fn(usize) -> FaceOrigin) -> Self {
        TaggedMesh {
            vertices: m.vertices().to_vec(),
            triangles: m.triangles().to_vec(),
            origins: (0..m.triangle_count()).map(origin).collect(),
        }
    }

    pub fn append(&mut self, other: &TaggedMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
        self.origins.extend_from_slice(&other.origins);
    }

    pub fn to_mesh(&self) -> TriangleMesh {
        TriangleMesh::from_parts(self.vertices.clone(), self.triangles.clone())
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Drop unreferenced vertices.
    pub fn compact(&mut self) {
        let mut map = vec![u32::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        for t in &mut self.triangles {
            for v in t.iter_mut() {
                if map[*v as usize] == u32::MAX {
                    map[*v as usize] = verts.len() as u32;
                    verts.push(self.vertices[*v as usize]);
                }
                *v = map[*v as usize];
            }
        }
        self.vertices = verts;
    }

    /// Triangle sets of the edge-connected components, in order of their
    /// lowest triangle.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.triangles.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut by_edge: HashMap<(u32, u32), usize> = HashMap::new();
        for (i, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if let Some(&j) = by_edge.get(&(a.min(b), a.max(b))) {
                    let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                    if ra != rb {
                        parent[ra.max(rb)] = ra.min(rb);
                    }
                } else {
                    by_edge.insert((a.min(b), a.max(b)), i);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for i in 0..n {
            let r = find(&mut parent, i);
            let g = *slot.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i);
        }
        groups
    }

    pub fn subset(&self, tris: &[usize]) -> TaggedMesh {
        let mut m = TaggedMesh {
            vertices: self.vertices.clone(),
            triangles: tris.iter().map(|&t| self.triangles[t]).collect(),
            origins: tris.iter().map(|&t| self.origins[t]).collect(),
        };
        m.compact();
        m
    }
}

/// Offset shift that keeps every vertex at least [`PLANE_CLEARANCE`] from
/// the plane `n·x = offset`. Deterministic: tries 0, +2c, −2c, +4c, …
pub fn clear_offset(vertices: &[Vec3], n: &Vec3, offset: f64) -> f64 {
    let mut d: Vec<f64> = vertices.iter().map(|v| n.dot(v)).collect();
    d.sort_by(f64::total_cmp);
    let clear = |o: f64| {
        let i = d.partition_point(|&x| x < o - PLANE_CLEARANCE);
        i >= d.len() || d[i] > o + PLANE_CLEARANCE
    };
    for k in 0..10_000 {
        let step = 2.0 * PLANE_CLEARANCE * ((k + 1) / 2) as f64;
        let o = if k % 2 == 1 { offset + step } else { offset - step };
        if clear(o) {
            return o;
        }
    }
    offset
}

/// Keep the part of `m` with `n·x ≤ offset` and close the cut with caps whose
/// faces carry `cap`. `n` must be unit length. The plane is nudged (see
/// [`clear_offset`]) when vertices lie on it.
pub fn clip_below(m: &TaggedMesh, n: &Vec3, offset: f64, cap: FaceOrigin) -> TaggedMesh {
    let offset = clear_offset(&m.vertices, n, offset);
    let d: Vec<f64> = m.vertices.iter().map(|v| n.dot(v) - offset).collect();
    let mut out = TaggedMesh { vertices: m.vertices.clone(), triangles: Vec::new(), origins: Vec::new() };
    let mut cut_vertex: HashMap<(u32, u32), u32> = HashMap::new();
    let mut split = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
        let key = (a.min(b), a.max(b));
        *cut_vertex.entry(key).or_insert_with(|| {
            let (p, q) = (key.0 as usize, key.1 as usize);
            let t = d[p] / (d[p] - d[q]);
            verts.push(m.vertices[p] + (m.vertices[q] - m.vertices[p]) * t);
            (verts.len() - 1) as u32
        })
    };
    // cap edges, already reversed relative to the kept triangles
    let mut next: HashMap<u32, u32> = HashMap::new();
    for (tri, &origin) in m.triangles.iter().zip(&m.origins) {
        let below = tri.map(|v| d[v as usize] < 0.0);
        match below.iter().filter(|&&b| b).count() {
            3 => {
                out.triangles.push(*tri);
                out.origins.push(origin);
            }
            0 => {}
            1 => {
                let k = below.iter().position(|&b| b).unwrap();
                let (a, b, c) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let pab = split(a, b, &mut out.vertices);
                let pca = split(c, a, &mut out.vertices);
                out.triangles.push([a, pab, pca]);
                out.origins.push(origin);
                next.insert(pca, pab);
            }
            _ => {
                let k = below.iter().position(|&b| !b).unwrap();
                let (c, a, b) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let pbc = split(b, c, &mut out.vertices);
                let pca = split(c, a, &mut out.vertices);
                out.triangles.push([a, b, pbc]);
                out.triangles.push([a, pbc, pca]);
                out.origins.push(origin);
                out.origins.push(origin);
                next.insert(pca, pbc);
            }
        }
    }
    // chain the cap edges into loops
    let mut starts: Vec<u32> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut loops: Vec<Vec<u32>> = Vec::new();
    let mut used: HashMap<u32, bool> = HashMap::new();
    for s in starts {
        if used.contains_key(&s) {
            continue;
        }
        let mut lp = vec![s];
        used.insert(s, true);
        let mut cur = next[&s];
        while cur != s {
            if used.insert(cur, true).is_some() {
                break;
            }
            lp.push(cur);
            match next.get(&cur) {
                Some(&nx) => cur = nx,
                None => break,
            }
        }
        if lp.len() >= 3 {
            loops.push(lp);
        }
    }
    // cap normal is +n: project with (u, v) so that u × v = n
    let u = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = (u - n * n.dot(&u)).normalize();
    let v = n.cross(&u);
    let mut local: HashMap<u32, usize> = HashMap::new();
    let mut pts: Vec<P2> = Vec::new();
    let mut ids: Vec<u32> = Vec::new();
    let idx_loops: Vec<Vec<usize>> = loops
        .iter()
        .map(|lp| {
            lp.iter()
                .map(|&g| {
                    *local.entry(g).or_insert_with(|| {
                        let p = out.vertices[g as usize];
                        pts.push(P2::new(p.dot(&u), p.dot(&v)));
                        ids.push(g);
                        pts.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    let (outers, _) = nest_loops(&pts, &idx_loops);
    for (o, holes) in outers {
        let hs: Vec<Vec<usize>> = holes.iter().map(|&h| idx_loops[h].clone()).collect();
        for t in triangulate(&pts, &idx_loops[o], &hs) {
            out.triangles.push(t.map(|i| ids[i]));
            out.origins.push(cap);
        }
    }
    out.compact();
    out
}

/// Keep `n·x ≥ offset`.
pub fn clip_above(m: &TaggedMesh, n: &Vec3, offset: f64, cap: FaceOrigin) -> TaggedMesh {
    clip_below(m, &-n, -offset, cap)
}

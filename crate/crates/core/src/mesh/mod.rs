//! Triangle meshes: storage, validation, file IO, spatial queries and voxels.

mod bvh;
mod io;
pub mod polygon;
pub mod primitives;
mod query;
mod voxel;

use std::collections::HashMap;

use thiserror::Error;

use crate::geometry::{Aabb, Vec3};

pub use bvh::Bvh;
pub use io::{load_mesh, load_mesh_auto, read_obj, read_stl, write_obj, write_obj_file, write_stl_binary, MeshFormat};
pub use query::{SurfaceHit, SurfaceQueryIndex};
pub use voxel::{boundary_surface, erode, voxelize, voxelize_with_budget, VoxelGrid, DEFAULT_CELL_BUDGET};

/// Minimum triangle area accepted on input, mm².
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh has no triangles")]
    Empty,
    #[error(
        "mesh is not watertight: {} boundary, {} non-manifold, {} misoriented edges (first: {:?})",
        .boundary.len(), .non_manifold.len(), .misoriented.len(),
        .boundary.first().or(.non_manifold.first()).or(.misoriented.first())
    )]
    NotWatertight {
        boundary: Vec<[u32; 2]>,
        non_manifold: Vec<[u32; 2]>,
        misoriented: Vec<[u32; 2]>,
    },
    #[error("{} degenerate triangles (first {:?})", .0.len(), .0.first())]
    Degenerate(Vec<usize>),
    #[error("voxel grid of {cells} cells exceeds the budget of {budget}")]
    GridTooLarge { cells: u64, budget: u64 },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

/// An indexed triangle mesh in millimetres. Triangles are counter-clockwise
/// seen from outside.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    centroids: Vec<Vec3>,
}

impl TriangleMesh {
    /// Build without any validation.
    pub fn from_parts(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        let centroids = triangles
            .iter()
            .map(|t| (vertices[t[0] as usize] + vertices[t[1] as usize] + vertices[t[2] as usize]) / 3.0)
            .collect();
        TriangleMesh { vertices, triangles, centroids }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        self.centroids[t]
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Area-weighted normal (length = 2 × area).
    pub fn triangle_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle_points(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        self.triangle_cross(t).normalize()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.triangle_cross(t).norm()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Signed volume via the divergence theorem. Positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let (a, b, c) = (&self.vertices[t[0] as usize], &self.vertices[t[1] as usize], &self.vertices[t[2] as usize]);
                a.dot(&b.cross(c))
            })
            .sum::<f64>()
            / 6.0
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| self.triangle_area(t)).sum()
    }

    /// Every undirected edge must be used exactly once in each direction.
    pub fn validate_watertight(&self) -> Result<(), MeshError> {
        if self.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let mut directed: HashMap<(u32, u32), u32> = HashMap::with_capacity(self.triangles.len() * 3);
        for t in &self.triangles {
            for k in 0..3 {
                *directed.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut boundary = Vec::new();
        let mut non_manifold = Vec::new();
        let mut misoriented = Vec::new();
        for (&(a, b), &n) in &directed {
            let back = directed.get(&(b, a)).copied().unwrap_or(0);
            if a > b && back > 0 {
                continue; // reported from the (b, a) side
            }
            let key = [a.min(b), a.max(b)];
            if n == 1 && back == 1 {
                continue;
            }
            if back == 0 && n == 1 {
                boundary.push(key);
            } else if n + back > 2 {
                non_manifold.push(key);
            } else {
                misoriented.push(key);
            }
        }
        if boundary.is_empty() && non_manifold.is_empty() && misoriented.is_empty() {
            return Ok(());
        }
        for v in [&mut boundary, &mut non_manifold, &mut misoriented] {
            v.sort_unstable();
            v.dedup();
        }
        Err(MeshError::NotWatertight { boundary, non_manifold, misoriented })
    }

    pub fn validate_non_degenerate(&self) -> Result<(), MeshError> {
        let bad: Vec<usize> = (0..self.triangle_count()).filter(|&t| self.triangle_area(t) <= MIN_TRIANGLE_AREA).collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(MeshError::Degenerate(bad))
        }
    }

    /// Input-solid validation: watertight, oriented, no degenerate faces.
    pub fn validate_solid(&self) -> Result<(), MeshError> {
        self.validate_watertight()?;
        self.validate_non_degenerate()
    }

    /// Unique undirected edges.
    pub fn edge_count(&self) -> usize {
        let mut edges: Vec<(u32, u32)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges.len()
    }

    /// Vertices referenced by at least one triangle.
    pub fn used_vertex_count(&self) -> usize {
        let mut used = vec![false; self.vertices.len()];
        for t in &self.triangles {
            for &v in t {
                used[v as usize] = true;
            }
        }
        used.iter().filter(|&&u| u).count()
    }

    /// V − E + F over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        self.used_vertex_count() as i64 - self.edge_count() as i64 + self.triangle_count() as i64
    }

    /// Connected components of triangles through shared vertices.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.triangles {
            for k in 1..3 {
                let (a, b) = (find(&mut parent, t[0] as usize), find(&mut parent, t[k] as usize));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut roots: Vec<usize> = self.triangles.iter().map(|t| find(&mut parent, t[0] as usize)).collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    /// Pairs of triangles sharing an edge, `(t, s, [v0, v1])` with `t < s`.
    /// Edges shared by other than two triangles are skipped.
    pub fn edge_adjacency(&self) -> Vec<(usize, usize, [u32; 2])> {
        let mut by_edge: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (i, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                by_edge.entry((a.min(b), a.max(b))).or_default().push(i);
            }
        }
        let mut out: Vec<(usize, usize, [u32; 2])> = by_edge
            .into_iter()
            .filter(|(_, ts)| ts.len() == 2)
            .map(|((a, b), ts)| (ts[0].min(ts[1]), ts[0].max(ts[1]), [a, b]))
            .collect();
        out.sort_unstable();
        out
    }

    /// Reverse the winding of every triangle.
    pub fn flipped(&self) -> TriangleMesh {
        let tris = self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect();
        TriangleMesh::from_parts(self.vertices.clone(), tris)
    }

    /// Concatenate two meshes (vertex sets kept disjoint).
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let off = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut tris = self.triangles.clone();
        tris.extend(other.triangles.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
        TriangleMesh::from_parts(vertices, tris)
    }

    /// Drop unreferenced vertices, preserving order.
    pub fn compacted(&self) -> TriangleMesh {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let mut tris = Vec::with_capacity(self.triangles.len());
        for t in &self.triangles {
            let mut nt = [0u32; 3];
            for k in 0..3 {
                let v = t[k] as usize;
                if remap[v] == u32::MAX {
                    remap[v] = vertices.len() as u32;
                    vertices.push(self.vertices[v]);
                }
                nt[k] = remap[v];
            }
            tris.push(nt);
        }
        TriangleMesh::from_parts(vertices, tris)
    }

    /// Subset of triangles (vertices compacted).
    pub fn subset(&self, tris: &[usize]) -> TriangleMesh {
        let t = tris.iter().map(|&i| self.triangles[i]).collect();
        TriangleMesh::from_parts(self.vertices.clone(), t).compacted()
    }

    pub fn translated(&self, d: &Vec3) -> TriangleMesh {
        TriangleMesh::from_parts(self.vertices.iter().map(|v| v + d).collect(), self.triangles.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::primitives::*;
    use super::*;

    #[test]
    fn geodesic_sphere_is_closed() {
        let m = sphere_fixture();
        assert_eq!(m.triangle_count(), 2000);
        m.validate_solid().unwrap();
        assert_eq!(m.euler_characteristic(), 2);
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 150f64.powi(3);
        assert!(m.signed_volume() < exact && m.signed_volume() > 0.98 * exact);
        let areas: Vec<f64> = (0..2000).map(|t| m.triangle_area(t)).collect();
        let (lo, hi) = areas.iter().fold((f64::MAX, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo < 2.0, "area ratio {}", hi / lo);
    }

    #[test]
    fn cube_is_watertight_with_unit_volume() {
        let m = cuboid(Vec3::zeros(), Vec3::new(1., 1., 1.));
        assert_eq!(m.triangle_count(), 12);
        m.validate_solid().unwrap();
        assert!((m.signed_volume() - 1.0).abs() < 1e-15);
        assert_eq!(m.euler_characteristic(), 2);
        assert!(m.flipped().signed_volume() < 0.0);
    }

    #[test]
    fn open_quad_reports_four_boundary_edges() {
        let m = TriangleMesh::from_parts(
            vec![Vec3::new(0., 0., 0.), Vec3::new(1., 0., 0.), Vec3::new(1., 1., 0.), Vec3::new(0., 1., 0.)],
            vec![[0, 1, 2], [0, 2, 3]],
        );
        match m.validate_watertight() {
            Err(MeshError::NotWatertight { boundary, .. }) => {
                assert_eq!(boundary, vec![[0, 1], [0, 3], [1, 2], [2, 3]]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flipped_face_is_misoriented() {
        let m = cuboid(Vec3::zeros(), Vec3::new(1., 1., 1.));
        let mut tris = m.triangles().to_vec();
        tris[0] = [tris[0][0], tris[0][2], tris[0][1]];
        let bad = TriangleMesh::from_parts(m.vertices().to_vec(), tris);
        assert!(matches!(bad.validate_watertight(), Err(MeshError::NotWatertight { .. })));
    }

    #[test]
    fn sphere_fixture_is_valid() {
        let s = uv_sphere(Vec3::zeros(), 150.0, 26, 40);
        assert_eq!(s.triangle_count(), 2000);
        s.validate_solid().unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 150f64.powi(3);
        assert!((s.signed_volume() - exact).abs() / exact < 0.03);
        assert_eq!(s.euler_characteristic(), 2);
    }

    #[test]
    fn adjacency_of_octahedron() {
        let o = octahedron(Vec3::zeros(), 1.0);
        assert_eq!(o.triangle_count(), 8);
        assert_eq!(o.edge_adjacency().len(), 12);
    }
}

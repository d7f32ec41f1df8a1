//! Dense voxel grids: cell-center voxelization, distance erosion and
//! extraction of the voxel boundary as a closed triangle mesh.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{MeshError, SurfaceQueryIndex, TriangleMesh};
use crate::geometry::Vec3;

pub const DEFAULT_CELL_BUDGET: u64 = 512 * 512 * 512;

#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    pub origin: Vec3,
    pub cell_size: f64,
    pub dims: [usize; 3],
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    pub fn new(origin: Vec3, cell_size: f64, dims: [usize; 3]) -> Self {
        VoxelGrid { origin, cell_size, dims, occupancy: vec![false; dims[0] * dims[1] * dims[2]] }
    }

    #[inline]
    pub fn linear(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.occupancy[self.linear(i, j, k)]
    }

    /// Out-of-range coordinates read as empty.
    pub fn get_signed(&self, i: i64, j: i64, k: i64) -> bool {
        if i < 0 || j < 0 || k < 0 {
            return false;
        }
        let (i, j, k) = (i as usize, j as usize, k as usize);
        if i >= self.dims[0] || j >= self.dims[1] || k >= self.dims[2] {
            return false;
        }
        self.get(i, j, k)
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: bool) {
        let l = self.linear(i, j, k);
        self.occupancy[l] = v;
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.cell_size
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied_count() == 0
    }

    pub fn occupied_volume(&self) -> f64 {
        self.occupied_count() as f64 * self.cell_size.powi(3)
    }

    fn coords(&self, l: usize) -> (usize, usize, usize) {
        let i = l % self.dims[0];
        let j = (l / self.dims[0]) % self.dims[1];
        let k = l / (self.dims[0] * self.dims[1]);
        (i, j, k)
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.occupancy.iter().enumerate().filter(|(_, &o)| o).map(|(l, _)| self.coords(l))
    }
}

pub fn voxelize(index: &SurfaceQueryIndex, cell_size: f64) -> Result<VoxelGrid, MeshError> {
    voxelize_with_budget(index, cell_size, DEFAULT_CELL_BUDGET)
}

/// Cell-center voxelization with one empty layer of padding on every side.
pub fn voxelize_with_budget(index: &SurfaceQueryIndex, cell_size: f64, budget: u64) -> Result<VoxelGrid, MeshError> {
    if !(cell_size > 0.0) {
        return Err(MeshError::Invalid(format!("cell size must be positive, got {cell_size}")));
    }
    let b = index.bounds();
    let ext = b.extent();
    let dims = [0, 1, 2].map(|k| (ext[k] / cell_size).ceil().max(1.0) as usize + 2);
    let cells = dims.iter().map(|&d| d as u64).product::<u64>();
    if cells > budget {
        return Err(MeshError::GridTooLarge { cells, budget });
    }
    let origin = b.min - Vec3::repeat(cell_size);
    let mut grid = VoxelGrid::new(origin, cell_size, dims);
    let rows: Vec<(usize, usize)> = (0..dims[2]).flat_map(|k| (0..dims[1]).map(move |j| (j, k))).collect();
    let filled: Vec<Vec<bool>> = rows.par_iter().map(|&(j, k)| scan_row(index, &grid, j, k)).collect();
    for ((j, k), row) in rows.into_iter().zip(filled) {
        for (i, inside) in row.into_iter().enumerate() {
            if inside {
                grid.set(i, j, k, true);
            }
        }
    }
    Ok(grid)
}

/// Parity along one +x row of cell centers; falls back to per-cell tests
/// when the row ray grazes an edge.
fn scan_row(index: &SurfaceQueryIndex, grid: &VoxelGrid, j: usize, k: usize) -> Vec<bool> {
    let nx = grid.dims[0];
    let start = grid.center(0, j, k) - Vec3::new(grid.cell_size, 0.0, 0.0);
    let dir = Vec3::new(1.0, 0.0, 0.0);
    let hits = index.ray_hits(&start, &dir, 0.0, f64::INFINITY);
    if hits.iter().any(|(_, h)| h.edge_margin() < 1e-9) {
        return (0..nx).map(|i| index.is_inside(&grid.center(i, j, k))).collect();
    }
    let ts: Vec<f64> = hits.iter().map(|(_, h)| h.t).collect();
    let mut out = vec![false; nx];
    let mut h = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let t = (i as f64 + 1.0) * grid.cell_size;
        while h < ts.len() && ts[h] < t {
            h += 1;
        }
        *slot = h % 2 == 1;
    }
    out
}

/// Keep occupied cells whose center is at least `distance_mm` from the surface.
pub fn erode(grid: &VoxelGrid, index: &SurfaceQueryIndex, distance_mm: f64) -> VoxelGrid {
    assert!(distance_mm >= 0.0, "erosion distance must be non-negative");
    let mut out = grid.clone();
    if distance_mm == 0.0 {
        return out;
    }
    let cells: Vec<(usize, usize, usize)> = grid.occupied_cells().collect();
    let drop: Vec<bool> = cells
        .par_iter()
        .map(|&(i, j, k)| index.nearest_surface(&grid.center(i, j, k)).distance < distance_mm)
        .collect();
    for ((i, j, k), d) in cells.into_iter().zip(drop) {
        if d {
            out.set(i, j, k, false);
        }
    }
    out
}

/// Remove occupied cells until every grid vertex is manifold: around each
/// vertex, occupied cells and empty cells must each form one face-connected
/// group within the 2×2×2 block.
pub(crate) fn make_manifold(grid: &mut VoxelGrid) -> usize {
    let mut removed = 0;
    loop {
        let mut changed = false;
        for k in 0..=grid.dims[2] {
            for j in 0..=grid.dims[1] {
                for i in 0..=grid.dims[0] {
                    while let Some(cell) = offending_cell(grid, i as i64, j as i64, k as i64) {
                        grid.set(cell.0, cell.1, cell.2, false);
                        removed += 1;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return removed;
        }
    }
}

/// For grid vertex (i, j, k): the occupied cell to remove, if the vertex is
/// non-manifold. Block cell `b` (bits x, y, z) sits at `(i-1+x, j-1+y, k-1+z)`.
fn offending_cell(grid: &VoxelGrid, i: i64, j: i64, k: i64) -> Option<(usize, usize, usize)> {
    let mut occ = [false; 8];
    let mut any = false;
    for (b, o) in occ.iter_mut().enumerate() {
        *o = grid.get_signed(i - 1 + (b & 1) as i64, j - 1 + ((b >> 1) & 1) as i64, k - 1 + ((b >> 2) & 1) as i64);
        any |= *o;
    }
    if !any || occ.iter().all(|&o| o) {
        return None;
    }
    if components(&occ, true) <= 1 && components(&occ, false) <= 1 {
        return None;
    }
    let b = occ.iter().position(|&o| o)?;
    Some(((i - 1 + (b & 1) as i64) as usize, (j - 1 + ((b >> 1) & 1) as i64) as usize, (k - 1 + ((b >> 2) & 1) as i64) as usize))
}

fn components(occ: &[bool; 8], want: bool) -> usize {
    let mut seen = [false; 8];
    let mut n = 0;
    for s in 0..8 {
        if occ[s] != want || seen[s] {
            continue;
        }
        n += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(c) = stack.pop() {
            for bit in [1, 2, 4] {
                let nb = c ^ bit;
                if occ[nb] == want && !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    n
}

/// Closed, outward-oriented surface of the occupied cells. Cells that would
/// make an edge or vertex non-manifold are dropped first.
pub fn boundary_surface(grid: &VoxelGrid) -> Result<TriangleMesh, MeshError> {
    let mut g = grid.clone();
    make_manifold(&mut g);
    if g.is_empty() {
        return Err(MeshError::Empty);
    }
    let mut corner_ids: HashMap<[usize; 3], u32> = HashMap::new();
    let mut vertices = Vec::new();
    let mut tris = Vec::new();
    let mut corner = |c: [usize; 3], vertices: &mut Vec<Vec3>| -> u32 {
        *corner_ids.entry(c).or_insert_with(|| {
            vertices.push(g.origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * g.cell_size);
            (vertices.len() - 1) as u32
        })
    };
    for (i, j, k) in g.occupied_cells().collect::<Vec<_>>() {
        let cell = [i, j, k];
        for axis in 0..3 {
            for positive in [false, true] {
                let mut nb = [i as i64, j as i64, k as i64];
                nb[axis] += if positive { 1 } else { -1 };
                if g.get_signed(nb[0], nb[1], nb[2]) {
                    continue;
                }
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                let mut base = cell;
                if positive {
                    base[axis] += 1;
                }
                let mut quad = [base; 4];
                quad[1][u] += 1;
                quad[2][u] += 1;
                quad[2][v] += 1;
                quad[3][v] += 1;
                let ids = quad.map(|c| corner(c, &mut vertices));
                if positive {
                    tris.push([ids[0], ids[1], ids[2]]);
                    tris.push([ids[0], ids[2], ids[3]]);
                } else {
                    tris.push([ids[0], ids[2], ids[1]]);
                    tris.push([ids[0], ids[3], ids[2]]);
                }
            }
        }
    }
    Ok(TriangleMesh::from_parts(vertices, tris))
}

//! Planar cuts between adjacent partitions, the hollow solid shell, and the
//! printable pieces cut from it.

mod clip;
mod svm;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use clip::{clear_offset, clip_above, clip_below, FaceOrigin, TaggedMesh, PLANE_CLEARANCE};
pub use svm::{train_linear, LinearModel, SvmParams};

use crate::geometry::Vec3;
use crate::mesh::{boundary_surface, erode, voxelize_with_budget, write_obj_file, MeshError, TriangleMesh, DEFAULT_CELL_BUDGET};
use crate::partition::{points_fit, Labeling, PrintVolume};

pub const PLANES_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CutError {
    #[error("cannot train a plane for labels {a}/{b}: {msg}")]
    Degenerate { a: u32, b: u32, msg: String },
    #[error("shell: {0}")]
    Shell(#[from] MeshError),
    #[error("planes {planes:?} leave nothing of piece {label}")]
    EmptyPiece { label: u32, planes: Vec<usize> },
    #[error("piece {label} is not a closed solid: {msg}")]
    BadPiece { label: u32, msg: String },
    #[error("labeling has {labels} entries for {triangles} triangles")]
    LabelingMismatch { labels: usize, triangles: usize },
    #[error("io: {0}")]
    Io(String),
}

/// Plane `normal·x = offset`; the positive side belongs to `label_pair.0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutPlane {
    pub normal: [f64; 3],
    pub offset: f64,
    pub label_pair: (u32, u32),
}

impl CutPlane {
    pub fn n(&self) -> Vec3 {
        Vec3::from(self.normal)
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.n().dot(p) - self.offset
    }

    /// Smallest signed distance of the training points to the plane, each
    /// taken on its own class side.
    pub fn margin(&self, pos: &[Vec3], neg: &[Vec3]) -> f64 {
        let a = pos.iter().map(|p| self.signed_distance(p));
        let b = neg.iter().map(|p| -self.signed_distance(p));
        a.chain(b).fold(f64::INFINITY, f64::min)
    }

    /// Keeps the side of `label`: +1 for the first label of the pair, −1 for
    /// the second.
    pub fn side_of(&self, label: u32) -> Option<f64> {
        if label == self.label_pair.0 {
            Some(1.0)
        } else if label == self.label_pair.1 {
            Some(-1.0)
        } else {
            None
        }
    }
}

/// Max-margin plane between two point sets (`a` on the positive side).
pub fn train_pair_classifier(a: &[Vec3], b: &[Vec3], labels: (u32, u32), params: &SvmParams) -> Result<CutPlane, CutError> {
    let degenerate = |msg: &str| CutError::Degenerate { a: labels.0, b: labels.1, msg: msg.into() };
    if a.is_empty() || b.is_empty() {
        return Err(degenerate("empty class"));
    }
    let first = a[0];
    if a.iter().chain(b).all(|p| (p - first).norm() < 1e-12) {
        return Err(degenerate("all points coincide"));
    }
    let x: Vec<Vec3> = a.iter().chain(b).copied().collect();
    let y: Vec<f64> = a.iter().map(|_| 1.0).chain(b.iter().map(|_| -1.0)).collect();
    let m = train_linear(&x, &y, params);
    let norm = m.w.norm();
    if !(norm > 1e-15) || !norm.is_finite() {
        return Err(degenerate("zero weight vector"));
    }
    let n = m.w / norm;
    Ok(CutPlane { normal: [n.x, n.y, n.z], offset: -m.bias / norm, label_pair: labels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub plane: CutPlane,
    pub samples: usize,
    /// Fraction of the training triangles on the wrong side.
    pub misclassified: f64,
}

/// One plane per adjacent label pair (lower id first, on the positive side),
/// trained on triangle centroids; ordered by label pair.
pub fn train_planes(mesh: &TriangleMesh, labeling: &Labeling, params: &SvmParams) -> Result<Vec<PlaneFit>, CutError> {
    let by_label = labeling.triangles_by_label();
    let pairs: Vec<(u32, u32)> = labeling.adjacent_pairs(mesh).into_iter().collect();
    let c = mesh.centroids();
    pairs
        .par_iter()
        .map(|&(la, lb)| {
            let a: Vec<Vec3> = by_label[&la].iter().map(|&t| c[t]).collect();
            let b: Vec<Vec3> = by_label[&lb].iter().map(|&t| c[t]).collect();
            let plane = train_pair_classifier(&a, &b, (la, lb), params)?;
            let wrong = a.iter().filter(|p| plane.signed_distance(p) < 0.0).count()
                + b.iter().filter(|p| plane.signed_distance(p) > 0.0).count();
            Ok(PlaneFit { plane, samples: a.len() + b.len(), misclassified: wrong as f64 / (a.len() + b.len()) as f64 })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SolidShell {
    pub outer: TriangleMesh,
    /// Outward-oriented boundary of the eroded voxel core; `None` when the
    /// erosion left nothing (the shell is then solid).
    pub inner: Option<TriangleMesh>,
    pub thickness: f64,
    pub cell_size: f64,
    pub warnings: Vec<String>,
}

impl SolidShell {
    /// Outer surface plus the inward-facing inner surface, tagged by origin.
    pub fn solid(&self) -> TaggedMesh {
        let mut s = TaggedMesh::from_mesh(&self.outer, |t| FaceOrigin::Outer(t as u32));
        if let Some(inner) = &self.inner {
            s.append(&TaggedMesh::from_mesh(&inner.flipped(), |_| FaceOrigin::Inner));
        }
        s
    }

    pub fn inner_volume(&self) -> f64 {
        self.inner.as_ref().map_or(0.0, |m| m.signed_volume())
    }

    pub fn volume(&self) -> f64 {
        self.outer.signed_volume() - self.inner_volume()
    }
}

/// Hollow the mesh: the inner surface bounds the voxels whose centres lie at
/// least `thickness` from the surface.
pub fn build_solid_shell(mesh: &TriangleMesh, cell_size: f64, thickness: f64) -> Result<SolidShell, CutError> {
    mesh.validate_watertight()?;
    let index = mesh.index();
    let grid = voxelize_with_budget(&index, cell_size, DEFAULT_CELL_BUDGET)?;
    let core = erode(&grid, &index, thickness);
    let mut warnings = Vec::new();
    let inner = if core.is_empty() {
        warnings.push(format!("erosion by {thickness} mm removes every voxel; the shell is solid"));
        None
    } else {
        Some(boundary_surface(&core)?)
    };
    Ok(SolidShell { outer: mesh.clone(), inner, thickness, cell_size, warnings })
}

#[derive(Clone, Debug)]
pub struct Piece {
    pub label: u32,
    pub mesh: TriangleMesh,
    pub origins: Vec<FaceOrigin>,
    pub volume: f64,
    /// Indices into the plane list of the planes that bound this piece.
    pub planes: Vec<usize>,
    /// Components dropped because they hold none of the label's triangles.
    pub dropped_components: usize,
    /// Outer triangles of this label whose centroid is on the wrong side of
    /// one of its planes (boundary-regularization loss).
    pub misplaced_triangles: usize,
}

impl Piece {
    pub fn validate(&self) -> Result<(), CutError> {
        self.mesh.validate_solid().map_err(|e| CutError::BadPiece { label: self.label, msg: e.to_string() })?;
        if self.volume <= 0.0 {
            return Err(CutError::BadPiece { label: self.label, msg: format!("volume {} is not positive", self.volume) });
        }
        Ok(())
    }
}

/// Clip the shell solid by the half-spaces of every plane involving each
/// label. Components that carry none of the label's outer triangles are
/// discarded. Pieces come out in label order.
pub fn cut_shell(shell: &SolidShell, labeling: &Labeling, planes: &[CutPlane]) -> Result<Vec<Piece>, CutError> {
    if labeling.labels.len() != shell.outer.triangle_count() {
        return Err(CutError::LabelingMismatch { labels: labeling.labels.len(), triangles: shell.outer.triangle_count() });
    }
    let solid = shell.solid();
    // shift every plane once against the shell so both sides cut identically
    let planes: Vec<CutPlane> = planes
        .iter()
        .map(|p| CutPlane { offset: clear_offset(&solid.vertices, &p.n(), p.offset), ..*p })
        .collect();
    let labels: Vec<u32> = labeling.triangles_by_label().keys().copied().collect();
    let centroids = shell.outer.centroids();
    labels
        .par_iter()
        .map(|&label| {
            let mine: Vec<usize> = (0..planes.len()).filter(|&k| planes[k].side_of(label).is_some()).collect();
            let mut m = solid.clone();
            for &k in &mine {
                let p = &planes[k];
                let cap = FaceOrigin::Cap(k as u32);
                m = if p.side_of(label) == Some(1.0) {
                    clip_above(&m, &p.n(), p.offset, cap)
                } else {
                    clip_below(&m, &p.n(), p.offset, cap)
                };
                if m.is_empty() {
                    return Err(CutError::EmptyPiece { label, planes: mine.clone() });
                }
            }
            let comps = m.components();
            let own = |c: &Vec<usize>| c.iter().any(|&t| matches!(m.origins[t], FaceOrigin::Outer(o) if labeling.labels[o as usize] == label));
            let mut keep: Vec<usize> = comps.iter().filter(|c| own(c)).flatten().copied().collect();
            if keep.is_empty() {
                return Err(CutError::EmptyPiece { label, planes: mine });
            }
            // cavity walls with no outer faces stay when they sit inside a kept part
            let host = m.subset(&keep).to_mesh().index();
            let mut dropped = 0;
            for c in comps.iter().filter(|c| !own(c)) {
                let cavity = c.iter().all(|&t| !matches!(m.origins[t], FaceOrigin::Outer(_)));
                if cavity && host.is_inside(&m.vertices[m.triangles[c[0]][0] as usize]) {
                    keep.extend_from_slice(c);
                } else {
                    dropped += 1;
                }
            }
            keep.sort_unstable();
            let m = m.subset(&keep);
            let misplaced = labeling
                .labels
                .iter()
                .enumerate()
                .filter(|&(t, &l)| {
                    l == label && mine.iter().any(|&k| planes[k].side_of(label).unwrap() * planes[k].signed_distance(&centroids[t]) < 0.0)
                })
                .count();
            let mesh = m.to_mesh();
            let volume = mesh.signed_volume();
            Ok(Piece { label, mesh, origins: m.origins, volume, planes: mine, dropped_components: dropped, misplaced_triangles: misplaced })
        })
        .collect()
}

/// Whether a piece fits the print volume in one of the 24 axis orientations.
pub fn validate_piece_fit(piece: &TriangleMesh, volume: &PrintVolume) -> bool {
    points_fit(piece.vertices(), 0.0, volume)
}

/// `piece_<label>.obj` for every piece.
pub fn export_pieces(pieces: &[Piece], dir: &Path) -> Result<Vec<std::path::PathBuf>, CutError> {
    std::fs::create_dir_all(dir).map_err(|e| CutError::Io(e.to_string()))?;
    pieces
        .iter()
        .map(|p| {
            let path = dir.join(format!("piece_{}.obj", p.label));
            write_obj_file(&p.mesh, &path).map_err(|e| CutError::Io(format!("{}: {e}", path.display())))?;
            Ok(path)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanesDocument {
    pub schema_version: u32,
    pub svm: SvmParams,
    pub planes: Vec<PlaneFit>,
}

/// Label pairs per plane, for quick lookup.
pub fn plane_pairs(planes: &[CutPlane]) -> BTreeMap<(u32, u32), usize> {
    planes.iter().enumerate().map(|(i, p)| (p.label_pair, i)).collect()
}

/// Labels that appear in any plane.
pub fn plane_labels(planes: &[CutPlane]) -> BTreeSet<u32> {
    planes.iter().flat_map(|p| [p.label_pair.0, p.label_pair.1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{cuboid, uv_sphere};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Best margin over planes that bisect a (positive, negative) point pair.
    fn bisector_margin(a: &[Vec3], b: &[Vec3]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for p in a {
            for q in b {
                let n = (p - q).normalize();
                let plane = CutPlane { normal: [n.x, n.y, n.z], offset: n.dot(&((p + q) / 2.0)), label_pair: (0, 1) };
                best = best.max(plane.margin(a, b));
            }
        }
        best
    }

    #[test]
    fn separated_clusters_give_bisector() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..40 {
            let jitter = Vec3::new(rng.gen_range(0.0..3.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            a.push(Vec3::new(1.0, 0.0, 0.0) + jitter);
            b.push(Vec3::new(-1.0 - jitter.x, jitter.y, jitter.z));
        }
        // both clusters touch x = ±1 exactly, so the best plane is x = 0
        a.push(Vec3::new(1.0, 0.0, 0.0));
        b.push(Vec3::new(-1.0, 0.0, 0.0));
        let p = train_pair_classifier(&a, &b, (3, 8), &SvmParams::default()).unwrap();
        assert!(p.n().dot(&Vec3::x()) > (1f64.to_radians()).cos());
        assert!(p.offset.abs() < 0.1);
        assert!((p.n().norm() - 1.0).abs() < 1e-12);
        let swapped = train_pair_classifier(&b, &a, (8, 3), &SvmParams::default()).unwrap();
        assert!((swapped.n() + p.n()).norm() < 1e-6);
        assert!((swapped.offset + p.offset).abs() < 1e-6);
    }

    #[test]
    fn margin_matches_bisector_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tried = 0;
        while tried < 200 {
            let na = rng.gen_range(1..=3);
            let nb = rng.gen_range(1..=3);
            let pt = |rng: &mut ChaCha8Rng, s: f64| Vec3::new(s * rng.gen_range(2.0..20.0), rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
            let a: Vec<Vec3> = (0..na).map(|_| pt(&mut rng, 1.0)).collect();
            let b: Vec<Vec3> = (0..nb).map(|_| pt(&mut rng, -1.0)).collect();
            let oracle = bisector_margin(&a, &b);
            if oracle <= 0.5 {
                continue;
            }
            tried += 1;
            let p = train_pair_classifier(&a, &b, (0, 1), &SvmParams::default()).unwrap();
            let m = p.margin(&a, &b);
            assert!(m >= 0.999 * oracle, "svm margin {m} vs bisector {oracle}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        let p = [Vec3::new(1.0, 2.0, 3.0)];
        assert!(matches!(train_pair_classifier(&p, &p, (0, 1), &SvmParams::default()), Err(CutError::Degenerate { .. })));
        assert!(train_pair_classifier(&p, &[], (0, 1), &SvmParams::default()).is_err());
    }

    #[test]
    fn cube_shell_dimensions() {
        let cube = cuboid(Vec3::zeros(), Vec3::repeat(100.0));
        let s = build_solid_shell(&cube, 5.0, 16.0).unwrap();
        let inner = s.inner.as_ref().unwrap();
        let b = inner.bounds();
        assert!((b.min - Vec3::repeat(15.0)).norm() < 1e-9 && (b.max - Vec3::repeat(85.0)).norm() < 1e-9);
        assert!((s.volume() - (1e6 - 70f64.powi(3))).abs() < 1e-6);
        s.solid().to_mesh().validate_solid().unwrap();
        let thin = build_solid_shell(&cube, 5.0, 51.0).unwrap();
        assert!(thin.inner.is_none() && !thin.warnings.is_empty());
    }

    #[test]
    fn sphere_shell_volume() {
        let r = 60.0;
        let m = uv_sphere(Vec3::zeros(), r, 40, 60);
        let (cell, t) = (3.0, 12.0);
        let s = build_solid_shell(&m, cell, t).unwrap();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * (r.powi(3) - (r - t).powi(3));
        // voxel staircase: within two layers of cells on the inner surface
        let band = 4.0 * std::f64::consts::PI * (r - t).powi(2) * 2.0 * cell;
        assert!((s.volume() - exact).abs() < band);
    }

    #[test]
    fn cut_cube_shell_in_half() {
        let cube = cuboid(Vec3::zeros(), Vec3::repeat(100.0));
        let shell = build_solid_shell(&cube, 5.0, 16.0).unwrap();
        let labels: Vec<u32> = cube.centroids().iter().map(|c| if c.x < 50.0 { 1 } else { 2 }).collect();
        // the two x-faces are pure; the split faces hold both sides, so label by centroid
        let labeling = Labeling { indices: labels.iter().map(|&l| l as usize).collect(), labels, energy: 0.0, data: 0.0, smoothness: 0.0 };
        let plane = CutPlane { normal: [-1.0, 0.0, 0.0], offset: -50.0, label_pair: (1, 2) };
        let pieces = cut_shell(&shell, &labeling, &[plane]).unwrap();
        assert_eq!(pieces.len(), 2);
        for p in &pieces {
            p.validate().unwrap();
            assert!((p.volume - shell.volume() / 2.0).abs() / shell.volume() < 0.01);
            assert!(p.origins.contains(&FaceOrigin::Cap(0)));
            assert!(p.origins.contains(&FaceOrigin::Inner));
        }
    }

    #[test]
    fn single_label_piece_is_the_shell() {
        let cube = cuboid(Vec3::zeros(), Vec3::repeat(100.0));
        let shell = build_solid_shell(&cube, 5.0, 16.0).unwrap();
        let labeling = Labeling { labels: vec![4; 12], indices: vec![0; 12], energy: 0.0, data: 0.0, smoothness: 0.0 };
        let pieces = cut_shell(&shell, &labeling, &[]).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].mesh.triangle_count(), shell.solid().triangles.len());
        assert!((pieces[0].volume - shell.volume()).abs() < 1e-6);
    }

    #[test]
    fn piece_fit() {
        let v = PrintVolume::default();
        assert!(validate_piece_fit(&uv_sphere(Vec3::zeros(), 75.0, 8, 8), &v));
        assert!(!validate_piece_fit(&cuboid(Vec3::zeros(), Vec3::new(250.0, 10.0, 10.0)), &v));
        assert!(validate_piece_fit(&cuboid(Vec3::zeros(), Vec3::repeat(190.0)), &v));
    }
}

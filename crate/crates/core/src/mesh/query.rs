use super::{Bvh, TriangleMesh};
use crate::geometry::{closest_point_on_triangle, ray_triangle, solid_angle, Aabb, RayHit, Vec3};

/// Barycentric margin below which a ray hit counts as grazing an edge.
const GRAZE_EPS: f64 = 1e-9;

/// Ray directions tried in turn by the parity test. Irrational-looking
/// components keep them off axis-aligned features.
const PROBE_DIRS: [[f64; 3]; 8] = [
    [0.577_215_664_9, 0.316_227_766_0, 0.752_346_074_3],
    [-0.267_949_192_4, 0.881_917_103_7, 0.389_249_472_6],
    [0.707_106_781_2, -0.301_511_344_6, -0.640_388_203_2],
    [-0.612_372_435_7, -0.554_700_196_2, 0.563_471_751_9],
    [0.142_857_142_9, 0.989_743_318_6, -0.003_141_592_7],
    [0.829_037_572_6, 0.018_181_818_2, 0.558_907_222_4],
    [-0.330_277_563_8, -0.428_571_428_6, -0.841_044_025_6],
    [0.447_213_595_5, -0.723_606_797_7, 0.525_731_112_1],
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceHit {
    pub point: Vec3,
    pub distance: f64,
    pub triangle: usize,
}

/// Read-only spatial index over a mesh: nearest surface point, nearest
/// triangle centroid, ray casts and the inside/outside test.
#[derive(Clone, Debug)]
pub struct SurfaceQueryIndex {
    tris: Vec<[Vec3; 3]>,
    centroids: Vec<Vec3>,
    tri_bvh: Bvh,
    centroid_bvh: Bvh,
}

impl SurfaceQueryIndex {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let tris: Vec<[Vec3; 3]> = (0..mesh.triangle_count()).map(|t| mesh.triangle_points(t)).collect();
        let boxes: Vec<Aabb> = tris.iter().map(|t| Aabb::from_points(t.iter())).collect();
        let cboxes: Vec<Aabb> = mesh.centroids().iter().map(|c| Aabb { min: *c, max: *c }).collect();
        SurfaceQueryIndex {
            tri_bvh: Bvh::build(&boxes),
            centroid_bvh: Bvh::build(&cboxes),
            centroids: mesh.centroids().to_vec(),
            tris,
        }
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn centroids(&self) -> &[Vec3] {
        &self.centroids
    }

    pub fn triangle(&self, t: usize) -> &[Vec3; 3] {
        &self.tris[t]
    }

    pub fn bounds(&self) -> Aabb {
        self.tri_bvh.bounds()
    }

    /// Closest point on the surface. Exact ties go to the lowest triangle id.
    pub fn nearest_surface(&self, p: &Vec3) -> SurfaceHit {
        let (t, d2) = self
            .tri_bvh
            .nearest(p, |t| {
                let [a, b, c] = &self.tris[t];
                (closest_point_on_triangle(p, a, b, c) - p).norm_squared()
            })
            .expect("index over an empty mesh");
        let [a, b, c] = &self.tris[t];
        SurfaceHit { point: closest_point_on_triangle(p, a, b, c), distance: d2.sqrt(), triangle: t }
    }

    /// Distance to the nearest triangle centroid, and that triangle.
    pub fn nearest_centroid(&self, p: &Vec3) -> (usize, f64) {
        let (t, d2) = self
            .centroid_bvh
            .nearest(p, |t| (self.centroids[t] - p).norm_squared())
            .expect("index over an empty mesh");
        (t, d2.sqrt())
    }

    pub fn nearest_centroid_distance(&self, p: &Vec3) -> f64 {
        self.nearest_centroid(p).1
    }

    /// All ray hits with `t > t_min`, sorted by distance then triangle id.
    pub fn ray_hits(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Vec<(usize, RayHit)> {
        let mut hits = Vec::new();
        self.tri_bvh.ray_candidates(origin, dir, t_max, |t| {
            let [a, b, c] = &self.tris[t];
            if let Some(h) = ray_triangle(origin, dir, a, b, c, t_min) {
                if h.t <= t_max {
                    hits.push((t, h));
                }
            }
        });
        hits.sort_by(|a, b| a.1.t.total_cmp(&b.1.t).then(a.0.cmp(&b.0)));
        hits
    }

    /// First hit along the ray.
    pub fn ray_first(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<(usize, RayHit)> {
        self.ray_hits(origin, dir, 0.0, t_max).into_iter().next()
    }

    /// Ray-parity inside test. A probe that grazes an edge or vertex is
    /// discarded and the next direction tried; the winding number settles
    /// the (practically unreachable) case where every probe grazes.
    pub fn is_inside(&self, p: &Vec3) -> bool {
        if !self.bounds().is_empty() && self.bounds().distance_squared(p) > 0.0 {
            return false;
        }
        for d in PROBE_DIRS {
            let dir = Vec3::new(d[0], d[1], d[2]).normalize();
            let hits = self.ray_hits(p, &dir, 0.0, f64::INFINITY);
            if hits.iter().any(|(_, h)| h.edge_margin() < GRAZE_EPS || h.t < 1e-12) {
                continue;
            }
            return hits.len() % 2 == 1;
        }
        self.winding_number(p) > 0.5
    }

    /// Generalized winding number (sum of solid angles / 4π).
    pub fn winding_number(&self, p: &Vec3) -> f64 {
        self.tris.iter().map(|[a, b, c]| solid_angle(p, a, b, c)).sum::<f64>() / (4.0 * std::f64::consts::PI)
    }
}

impl TriangleMesh {
    /// Convenience for a single query; build a [`SurfaceQueryIndex`] when
    /// issuing many.
    pub fn index(&self) -> SurfaceQueryIndex {
        SurfaceQueryIndex::new(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{cuboid, uv_sphere};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_surface(mesh: &TriangleMesh, p: &Vec3) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for t in 0..mesh.triangle_count() {
            let [a, b, c] = mesh.triangle_points(t);
            let d = (closest_point_on_triangle(p, &a, &b, &c) - p).norm();
            if d < best.1 {
                best = (t, d);
            }
        }
        best
    }

    #[test]
    fn cube_fixtures() {
        let m = cuboid(Vec3::zeros(), Vec3::new(1., 1., 1.));
        let idx = m.index();
        let c = Vec3::new(0.5, 0.5, 0.5);
        assert!((idx.nearest_surface(&c).distance - 0.5).abs() < 1e-15);
        assert_eq!(idx.nearest_surface(&Vec3::new(1., 1., 1.)).distance, 0.0);
        assert!(idx.is_inside(&c));
        assert!(!idx.is_inside(&Vec3::new(2., 0.5, 0.5)));
        // centroid of triangle 0 is its own nearest centroid
        assert_eq!(idx.nearest_centroid_distance(&m.centroid(0)), 0.0);
        // cube center: every face triangle centroid sits at (1/2, 1/6 or 1/3 offsets)
        let brute = m.centroids().iter().map(|q| (q - c).norm()).fold(f64::INFINITY, f64::min);
        assert!((idx.nearest_centroid_distance(&c) - brute).abs() < 1e-15);
        // hand value: centroid (1/3, 1/3, 0) type → sqrt(1/36 + 1/36 + 1/4)
        assert!((brute - (1.0f64 / 36.0 + 1.0 / 36.0 + 0.25).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_lowest_triangle() {
        let m = cuboid(Vec3::zeros(), Vec3::new(1., 1., 1.));
        let idx = m.index();
        // a vertex touches several triangles at distance 0
        let v = Vec3::new(0., 0., 0.);
        let hit = idx.nearest_surface(&v);
        let lowest = (0..12).find(|&t| m.triangles()[t].contains(&0)).unwrap();
        assert_eq!(hit.triangle, lowest);
    }

    #[test]
    fn inside_matches_winding_number() {
        let m = uv_sphere(Vec3::new(1., 2., 3.), 10.0, 12, 17);
        let idx = m.index();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let p = Vec3::new(rng.gen_range(-12.0..14.0), rng.gen_range(-10.0..14.0), rng.gen_range(-9.0..15.0));
            let w = idx.winding_number(&p);
            assert_eq!(idx.is_inside(&p), w > 0.5, "p = {p:?}, w = {w}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn nearest_queries_match_brute_force(x in -200.0f64..200.0, y in -200.0f64..200.0, z in -200.0f64..200.0) {
            let m = uv_sphere(Vec3::new(3., -2., 1.), 120.0, 20, 31);
            let idx = m.index();
            let p = Vec3::new(x, y, z);
            let (_, bd) = brute_surface(&m, &p);
            prop_assert!((idx.nearest_surface(&p).distance - bd).abs() < 1e-9);
            let bc = m.centroids().iter().map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!((idx.nearest_centroid_distance(&p) - bc).abs() < 1e-9);
        }
    }
}

//! Small computational-geometry kernels shared by the mesh queries and the
//! collision checks.

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Minimum distance between segments `p1q1` and `p2q2` (Ericson 5.1.9).
pub fn segment_segment_distance(p1: &Vec3, q1: &Vec3, p2: &Vec3, q2: &Vec3) -> f64 {
    const EPS: f64 = 1e-18;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= EPS && e <= EPS {
        return r.norm();
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > EPS * a * e { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

/// Ray/triangle hit: distance along the ray and barycentrics of the hit.
#[derive(Clone, Copy, Debug)]
pub struct RayHit {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

impl RayHit {
    /// Smallest barycentric coordinate; near zero means the ray grazed an edge.
    pub fn edge_margin(&self) -> f64 {
        self.u.min(self.v).min(1.0 - self.u - self.v)
    }
}

/// Möller–Trumbore, two-sided. Returns hits with `t > t_min`.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, t_min: f64) -> Option<RayHit> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&qvec) * inv;
    (t > t_min).then_some(RayHit { t, u, v })
}

/// Signed solid angle of triangle `abc` seen from `p` (Van Oosterom–Strackee).
pub fn solid_angle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let ra = a - p;
    let rb = b - p;
    let rc = c - p;
    let (la, lb, lc) = (ra.norm(), rb.norm(), rc.norm());
    let num = ra.dot(&rb.cross(&rc));
    let den = la * lb * lc + ra.dot(&rb) * lc + rb.dot(&rc) * la + rc.dot(&ra) * lb;
    2.0 * num.atan2(den)
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in pts {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&mut self, o: &Aabb) {
        self.min = self.min.inf(&o.min);
        self.max = self.max.sup(&o.max);
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    /// Slab test. Returns the entry distance if the ray meets the box within `t_max`.
    pub fn ray_entry(&self, origin: &Vec3, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let mut ta = (self.min[k] - origin[k]) * inv_dir[k];
            let mut tb = (self.max[k] - origin[k]) * inv_dir[k];
            if ta.is_nan() || tb.is_nan() {
                // origin on a slab boundary with zero direction component
                if origin[k] < self.min[k] || origin[k] > self.max[k] {
                    return None;
                }
                continue;
            }
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.));
        assert!((closest_point_on_triangle(&v(0.2, 0.2, 1.), &a, &b, &c) - v(0.2, 0.2, 0.)).norm() < 1e-15);
        assert_eq!(closest_point_on_triangle(&v(-1., -1., 0.), &a, &b, &c), a);
        assert_eq!(closest_point_on_triangle(&v(2., -1., 0.), &a, &b, &c), b);
        let e = closest_point_on_triangle(&v(1., 1., 0.), &a, &b, &c);
        assert!((e - v(0.5, 0.5, 0.)).norm() < 1e-15);
    }

    #[test]
    fn segment_distances() {
        // crossing diagonals
        let d = segment_segment_distance(&v(0., 0., 0.), &v(1., 1., 0.), &v(1., 0., 0.), &v(0., 1., 0.));
        assert!(d.abs() < 1e-15);
        // parallel, offset by 2
        let d = segment_segment_distance(&v(0., 0., 0.), &v(1., 0., 0.), &v(0., 2., 0.), &v(1., 2., 0.));
        assert!((d - 2.0).abs() < 1e-15);
        // skew
        let d = segment_segment_distance(&v(0., 0., 0.), &v(1., 0., 0.), &v(0.5, -1., 3.), &v(0.5, 1., 3.));
        assert!((d - 3.0).abs() < 1e-12);
        assert!((point_segment_distance(&v(0.5, 1., 0.), &v(0., 0., 0.), &v(1., 0., 0.)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ray_hits() {
        let (a, b, c) = (v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.));
        let h = ray_triangle(&v(0.25, 0.25, -1.), &v(0., 0., 1.), &a, &b, &c, 0.0).unwrap();
        assert!((h.t - 1.0).abs() < 1e-15);
        assert!(ray_triangle(&v(2., 2., -1.), &v(0., 0., 1.), &a, &b, &c, 0.0).is_none());
    }

    #[test]
    fn solid_angle_of_closed_cube_is_four_pi() {
        let m = crate::mesh::primitives::cuboid(v(0., 0., 0.), v(1., 1., 1.));
        let p = v(0.3, 0.4, 0.5);
        let w: f64 = (0..m.triangle_count()).map(|t| {
            let [a, b, c] = m.triangle_points(t);
            solid_angle(&p, &a, &b, &c)
        }).sum();
        assert!((w - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    }
}

//! Procedural test shapes.

use std::f64::consts::PI;

use super::TriangleMesh;
use crate::geometry::Vec3;

/// Axis-aligned box with outward winding (8 vertices, 12 triangles).
pub fn cuboid(min: Vec3, max: Vec3) -> TriangleMesh {
    let v = |i: usize| {
        Vec3::new(
            if i & 1 != 0 { max.x } else { min.x },
            if i & 2 != 0 { max.y } else { min.y },
            if i & 4 != 0 { max.z } else { min.z },
        )
    };
    let vertices = (0..8).map(v).collect();
    let tris = vec![
        [0, 2, 1], [1, 2, 3], // -z
        [4, 5, 6], [5, 7, 6], // +z
        [0, 1, 4], [1, 5, 4], // -y
        [2, 6, 3], [3, 6, 7], // +y
        [0, 4, 2], [2, 4, 6], // -x
        [1, 3, 5], [3, 7, 5], // +x
    ];
    TriangleMesh::from_parts(vertices, tris)
}

/// Latitude/longitude sphere with `2 · n_lon · (n_lat − 1)` triangles.
pub fn uv_sphere(center: Vec3, radius: f64, n_lat: usize, n_lon: usize) -> TriangleMesh {
    assert!(n_lat >= 2 && n_lon >= 3);
    let mut vertices = vec![center + Vec3::new(0.0, 0.0, radius)];
    for i in 1..n_lat {
        let theta = PI * i as f64 / n_lat as f64;
        for j in 0..n_lon {
            let phi = 2.0 * PI * j as f64 / n_lon as f64;
            vertices.push(center + radius * Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()));
        }
    }
    let south = vertices.len() as u32;
    vertices.push(center - Vec3::new(0.0, 0.0, radius));
    let ring = |i: usize, j: usize| (1 + (i - 1) * n_lon + (j % n_lon)) as u32;
    let mut tris = Vec::new();
    for j in 0..n_lon {
        tris.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..n_lat - 1 {
        for j in 0..n_lon {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            tris.push([a, c, d]);
            tris.push([a, d, b]);
        }
    }
    for j in 0..n_lon {
        tris.push([south, ring(n_lat - 1, j + 1), ring(n_lat - 1, j)]);
    }
    TriangleMesh::from_parts(vertices, tris)
}

/// The 150 mm-radius, 2000-triangle geodesic sphere used throughout the tests
/// and examples.
pub fn sphere_fixture() -> TriangleMesh {
    geodesic_sphere(Vec3::zeros(), 150.0, 10)
}

/// Regular octahedron (8 triangles).
pub fn octahedron(center: Vec3, radius: f64) -> TriangleMesh {
    let vertices = vec![
        Vec3::new(radius, 0., 0.),
        Vec3::new(-radius, 0., 0.),
        Vec3::new(0., radius, 0.),
        Vec3::new(0., -radius, 0.),
        Vec3::new(0., 0., radius),
        Vec3::new(0., 0., -radius),
    ]
    .into_iter()
    .map(|v| v + center)
    .collect();
    let tris = vec![
        [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
        [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
    ];
    TriangleMesh::from_parts(vertices, tris)
}

/// Open zig-zag strip of `n` triangles bent along its length (not watertight).
pub fn triangle_strip(n: usize, width: f64, bend: f64) -> TriangleMesh {
    let cols = n / 2 + 2;
    let mut vertices = Vec::new();
    for i in 0..cols {
        let x = i as f64 * width;
        let z = bend * (i as f64 * 0.7).sin() * width;
        vertices.push(Vec3::new(x, 0.0, z));
        vertices.push(Vec3::new(x + 0.3 * width, width, -z * 0.5));
    }
    let mut tris = Vec::new();
    let mut i = 0;
    while tris.len() < n {
        let (a, b, c, d) = (2 * i as u32, 2 * i as u32 + 1, 2 * i as u32 + 2, 2 * i as u32 + 3);
        tris.push([a, c, b]);
        if tris.len() < n {
            tris.push([b, c, d]);
        }
        i += 1;
    }
    TriangleMesh::from_parts(vertices, tris)
}

/// Geodesic sphere: each icosahedron face split into `freq²` triangles and
/// projected onto the sphere (`20 · freq²` triangles).
pub fn geodesic_sphere(center: Vec3, radius: f64, freq: usize) -> TriangleMesh {
    assert!(freq >= 1);
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let mut ico = Vec::new();
    for s1 in [-1.0, 1.0] {
        for s2 in [-g, g] {
            ico.push(Vec3::new(0.0, s1, s2));
            ico.push(Vec3::new(s1, s2, 0.0));
            ico.push(Vec3::new(s2, 0.0, s1));
        }
    }
    let edge = |a: usize, b: usize| ((ico[a] - ico[b]).norm() - 2.0).abs() < 1e-9;
    let mut soup = Vec::new();
    for a in 0..12 {
        for b in a + 1..12 {
            for c in b + 1..12 {
                if !(edge(a, b) && edge(b, c) && edge(a, c)) {
                    continue;
                }
                let (pa, mut pb, mut pc) = (ico[a], ico[b], ico[c]);
                if (pb - pa).cross(&(pc - pa)).dot(&pa) < 0.0 {
                    std::mem::swap(&mut pb, &mut pc);
                }
                let f = freq as f64;
                let at = |i: usize, j: usize| {
                    let p = pa + (pb - pa) * (i as f64 / f) + (pc - pa) * (j as f64 / f);
                    center + p.normalize() * radius
                };
                for i in 0..freq {
                    for j in 0..freq - i {
                        soup.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
                        if i + j + 1 < freq {
                            soup.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
                        }
                    }
                }
            }
        }
    }
    super::io::weld(&soup)
}

//! OBJ and STL reading, OBJ (and binary STL) writing.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{MeshError, TriangleMesh};
use crate::geometry::Vec3;

/// STL vertices closer than this are welded, mm.
pub const WELD_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    StlBinary,
    StlAscii,
}

/// Load and validate a solid mesh.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriangleMesh, MeshError> {
    let bytes = fs::read(path)?;
    let mesh = match format {
        MeshFormat::Obj => read_obj(&String::from_utf8_lossy(&bytes))?,
        MeshFormat::StlBinary | MeshFormat::StlAscii => read_stl(&bytes)?,
    };
    mesh.validate_solid()?;
    Ok(mesh)
}

/// Load with the format picked from the extension (and, for STL, the content).
pub fn load_mesh_auto(path: &Path) -> Result<TriangleMesh, MeshError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let format = match ext.as_str() {
        "obj" => MeshFormat::Obj,
        "stl" => MeshFormat::StlBinary,
        _ => return Err(MeshError::Invalid(format!("unknown mesh extension '{ext}'"))),
    };
    load_mesh(path, format)
}

pub fn read_obj(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut tris = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = it.next().ok_or_else(|| parse_err(lineno, "vertex needs 3 coordinates"))?;
                    *slot = tok.parse().map_err(|_| parse_err(lineno, &format!("bad number '{tok}'")))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|_| parse_err(lineno, &format!("bad index '{tok}'")))?;
                    let resolved = if i > 0 { i - 1 } else { vertices.len() as i64 + i };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(lineno, &format!("index {i} out of range")));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(parse_err(lineno, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    tris.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if tris.is_empty() {
        return Err(MeshError::Empty);
    }
    Ok(TriangleMesh::from_parts(vertices, tris))
}

fn parse_err(line: usize, msg: &str) -> MeshError {
    MeshError::Parse { line: line + 1, msg: msg.to_string() }
}

/// Binary or ASCII STL, vertices welded at [`WELD_TOLERANCE`].
pub fn read_stl(bytes: &[u8]) -> Result<TriangleMesh, MeshError> {
    let soup = if looks_binary(bytes) { stl_binary_soup(bytes)? } else { stl_ascii_soup(&String::from_utf8_lossy(bytes))? };
    if soup.is_empty() {
        return Err(MeshError::Empty);
    }
    Ok(weld(&soup))
}

fn looks_binary(bytes: &[u8]) -> bool {
    if bytes.len() < 84 {
        return false;
    }
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    bytes.len() == 84 + 50 * n || !bytes.starts_with(b"solid")
}

fn stl_binary_soup(bytes: &[u8]) -> Result<Vec<[Vec3; 3]>, MeshError> {
    let n = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    if bytes.len() < 84 + 50 * n {
        return Err(parse_err(0, "truncated binary STL"));
    }
    let f = |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
    Ok((0..n)
        .map(|i| {
            let base = 84 + 50 * i + 12;
            let v = |k: usize| Vec3::new(f(base + 12 * k), f(base + 12 * k + 4), f(base + 12 * k + 8));
            [v(0), v(1), v(2)]
        })
        .collect())
}

fn stl_ascii_soup(text: &str) -> Result<Vec<[Vec3; 3]>, MeshError> {
    let mut soup = Vec::new();
    let mut cur = Vec::with_capacity(3);
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("vertex") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = it.next().ok_or_else(|| parse_err(lineno, "vertex needs 3 coordinates"))?;
                    *slot = tok.parse().map_err(|_| parse_err(lineno, &format!("bad number '{tok}'")))?;
                }
                cur.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("endloop") => {
                if cur.len() != 3 {
                    return Err(parse_err(lineno, "facet must have 3 vertices"));
                }
                soup.push([cur[0], cur[1], cur[2]]);
                cur.clear();
            }
            _ => {}
        }
    }
    Ok(soup)
}

pub(crate) fn weld(soup: &[[Vec3; 3]]) -> TriangleMesh {
    let key = |v: &Vec3| {
        [
            (v.x / WELD_TOLERANCE).round() as i64,
            (v.y / WELD_TOLERANCE).round() as i64,
            (v.z / WELD_TOLERANCE).round() as i64,
        ]
    };
    let mut grid: HashMap<[i64; 3], u32> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut tris = Vec::with_capacity(soup.len());
    for tri in soup {
        let mut t = [0u32; 3];
        for (k, v) in tri.iter().enumerate() {
            let kk = key(v);
            let mut found = None;
            'search: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(&i) = grid.get(&[kk[0] + dx, kk[1] + dy, kk[2] + dz]) {
                            if (vertices[i as usize] - v).norm() <= WELD_TOLERANCE {
                                found = Some(i);
                                break 'search;
                            }
                        }
                    }
                }
            }
            t[k] = *found.get_or_insert_with(|| {
                let i = vertices.len() as u32;
                vertices.push(*v);
                grid.insert(kk, i);
                i
            });
        }
        tris.push(t);
    }
    TriangleMesh::from_parts(vertices, tris)
}

/// OBJ text with `v` and `f` lines. Coordinates are written with the
/// shortest round-tripping representation.
pub fn write_obj(mesh: &TriangleMesh, out: &mut impl Write) -> std::io::Result<()> {
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn write_obj_file(mesh: &TriangleMesh, path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_obj(mesh, &mut w)?;
    w.flush()
}

pub fn write_stl_binary(mesh: &TriangleMesh, out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(&[0u8; 80])?;
    out.write_all(&(mesh.triangle_count() as u32).to_le_bytes())?;
    for t in 0..mesh.triangle_count() {
        let n = mesh.triangle_normal(t);
        for c in [n.x, n.y, n.z] {
            out.write_all(&(c as f32).to_le_bytes())?;
        }
        for p in mesh.triangle_points(t) {
            for c in [p.x, p.y, p.z] {
                out.write_all(&(c as f32).to_le_bytes())?;
            }
        }
        out.write_all(&[0u8; 2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::cuboid;

    fn cube_obj() -> String {
        let mut s = Vec::new();
        write_obj(&cuboid(Vec3::zeros(), Vec3::new(1., 1., 1.)), &mut s).unwrap();
        String::from_utf8(s).unwrap()
    }

    #[test]
    fn unit_cube_obj() {
        let m = read_obj(&cube_obj()).unwrap();
        assert_eq!((m.vertices().len(), m.triangle_count()), (8, 12));
        m.validate_solid().unwrap();
    }

    #[test]
    fn binary_stl_round_trip_matches_obj() {
        let obj = read_obj(&cube_obj()).unwrap();
        let mut bytes = Vec::new();
        write_stl_binary(&obj, &mut bytes).unwrap();
        let stl = read_stl(&bytes).unwrap();
        assert_eq!(stl.vertices().len(), 8);
        stl.validate_solid().unwrap();
        for a in obj.vertices() {
            assert!(stl.vertices().iter().any(|b| (a - b).norm() < 1e-6));
        }
        assert!((stl.signed_volume() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ascii_stl() {
        let text = "solid t\n facet normal 0 0 1\n  outer loop\n   vertex 0 0 0\n   vertex 1 0 0\n   vertex 0 1 0\n  endloop\n endfacet\nendsolid t\n";
        let m = read_stl(text.as_bytes()).unwrap();
        assert_eq!(m.triangle_count(), 1);
        assert!(matches!(m.validate_watertight(), Err(MeshError::NotWatertight { .. })));
    }

    #[test]
    fn obj_polygons_and_negative_indices() {
        let m = read_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4 -3 -2 -1\n").unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2], [0, 2, 3]]);
        assert!(matches!(read_obj("v 0 0\n"), Err(MeshError::Parse { line: 1, .. })));
        assert!(matches!(read_obj("v 0 0 0\nf 1 2 3\n"), Err(MeshError::Parse { .. })));
    }
}

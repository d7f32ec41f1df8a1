//! Ear-clipping triangulation of planar polygons with holes.

use std::collections::HashMap;

use nalgebra::Vector2;

pub type P2 = Vector2<f64>;

fn cross(o: &P2, a: &P2, b: &P2) -> f64 {
    (a - o).perp(&(b - o))
}

/// Twice the signed area of a loop (positive when counter-clockwise).
pub fn signed_area2(pts: &[P2], lp: &[usize]) -> f64 {
    (0..lp.len()).map(|i| pts[lp[i]].perp(&pts[lp[(i + 1) % lp.len()]])).sum()
}

/// Even-odd point-in-loop test.
pub fn point_in_loop(p: &P2, pts: &[P2], lp: &[usize]) -> bool {
    let mut inside = false;
    for i in 0..lp.len() {
        let (a, b) = (pts[lp[i]], pts[lp[(i + 1) % lp.len()]]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Group loops into (outer, holes) sets: counter-clockwise loops are outer
/// boundaries, clockwise loops are holes assigned to the smallest enclosing
/// outer loop. Holes with no enclosing outer loop are returned separately.
pub fn nest_loops(pts: &[P2], loops: &[Vec<usize>]) -> (Vec<(usize, Vec<usize>)>, Vec<usize>) {
    let areas: Vec<f64> = loops.iter().map(|l| signed_area2(pts, l)).collect();
    let mut outers: Vec<(usize, Vec<usize>)> = (0..loops.len()).filter(|&i| areas[i] > 0.0).map(|i| (i, Vec::new())).collect();
    let mut orphans = Vec::new();
    for h in (0..loops.len()).filter(|&i| areas[i] <= 0.0) {
        let probe = pts[loops[h][0]];
        let host = outers
            .iter_mut()
            .filter(|(o, _)| point_in_loop(&probe, pts, &loops[*o]))
            .min_by(|a, b| areas[a.0].total_cmp(&areas[b.0]));
        match host {
            Some((_, holes)) => holes.push(h),
            None => orphans.push(h),
        }
    }
    (outers, orphans)
}

/// Points closer than this to the line through their loop neighbours are
/// treated as collinear and kept out of the ear clipper.
pub const COLLINEAR_TOLERANCE: f64 = 1e-6;

/// Triangulate a counter-clockwise `outer` loop with clockwise `holes`
/// (indices into `pts`). Every loop edge appears in exactly one output
/// triangle with the same direction, so the result stitches watertight onto
/// the surrounding mesh. Collinear runs are clipped as one edge and fanned
/// back in afterwards, which keeps slivers out of the result.
pub fn triangulate(pts: &[P2], outer: &[usize], holes: &[Vec<usize>]) -> Vec<[usize; 3]> {
    let mut chains: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut simplify = |lp: &[usize]| -> Vec<usize> {
        let (kept, runs) = drop_collinear(pts, lp);
        chains.extend(runs);
        kept
    };
    let outer = simplify(outer);
    let holes: Vec<Vec<usize>> = holes.iter().map(|h| simplify(h)).filter(|h| h.len() >= 3).collect();
    if outer.len() < 3 {
        return Vec::new();
    }
    let tris = constrained_delaunay(pts, &outer, &holes).unwrap_or_else(|| triangulate_simple(pts, &outer, &holes));
    if chains.is_empty() {
        return tris;
    }
    let mut out = Vec::with_capacity(tris.len() + chains.values().map(Vec::len).sum::<usize>());
    for t in tris {
        let k = (0..3).find(|&k| chains.contains_key(&(t[k], t[(k + 1) % 3])));
        let Some(k) = k else {
            out.push(t);
            continue;
        };
        // rotate so the chained edge is (a, b); fan every chained edge from
        // the opposite corner in turn
        let mut pending = vec![[t[k], t[(k + 1) % 3], t[(k + 2) % 3]]];
        while let Some([a, b, c]) = pending.pop() {
            if let Some(run) = chains.get(&(a, b)) {
                let mut prev = a;
                for &m in run.iter().chain(std::iter::once(&b)) {
                    pending.push([c, prev, m]);
                    prev = m;
                }
                continue;
            }
            // the fan triangles (c, p, m) may carry chains on their other edges
            if let Some(j) = (1..3).find(|&j| {
                let r = [a, b, c];
                chains.contains_key(&(r[j], r[(j + 1) % 3]))
            }) {
                let r = [a, b, c];
                pending.push([r[j], r[(j + 1) % 3], r[(j + 2) % 3]]);
                continue;
            }
            out.push([a, b, c]);
        }
    }
    out
}

/// Remove collinear runs from a loop. Returns the kept loop and, for each
/// kept edge that absorbed points, the absorbed points in order.
fn drop_collinear(pts: &[P2], lp: &[usize]) -> (Vec<usize>, Vec<((usize, usize), Vec<usize>)>) {
    let n = lp.len();
    if n < 4 {
        return (lp.to_vec(), Vec::new());
    }
    let straight = |a: usize, b: usize, c: usize| {
        let (pa, pb, pc) = (pts[a], pts[b], pts[c]);
        let len = (pc - pa).norm();
        len > 0.0 && cross(&pa, &pb, &pc).abs() / len < COLLINEAR_TOLERANCE && (pb - pa).dot(&(pc - pb)) > 0.0
    };
    // start from a corner so no run wraps around the start
    let Some(start) = (0..n).find(|&i| !straight(lp[(i + n - 1) % n], lp[i], lp[(i + 1) % n])) else {
        return (lp.to_vec(), Vec::new());
    };
    let at = |k: usize| lp[(start + k) % n];
    let mut kept = vec![at(0)];
    let mut runs = Vec::new();
    let mut i = 0;
    while i < n {
        // extend the edge from at(i) as far as every skipped point stays on it
        let mut j = i + 1;
        while j + 1 <= n && (i + 1..=j).all(|m| straight(at(i), at(m), at(j + 1))) && j + 1 - i < n {
            j += 1;
        }
        if j > i + 1 {
            runs.push(((at(i), at(j)), (i + 1..j).map(at).collect()));
        }
        if j < n {
            kept.push(at(j));
        }
        i = j;
    }
    if kept.len() < 3 {
        return (lp.to_vec(), Vec::new());
    }
    (kept, runs)
}

/// Constrained Delaunay triangulation of the region left of every loop edge.
/// `None` when the loops share positions or cross, which the ear clipper
/// copes with better.
fn constrained_delaunay(pts: &[P2], outer: &[usize], holes: &[Vec<usize>]) -> Option<Vec<[usize; 3]>> {
    use spade::handles::FixedVertexHandle;
    use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let loops: Vec<&[usize]> = std::iter::once(outer).chain(holes.iter().map(Vec::as_slice)).collect();
    let mut handle: HashMap<usize, FixedVertexHandle> = HashMap::new();
    let mut back: Vec<usize> = Vec::new();
    for &i in loops.iter().flat_map(|l| l.iter()) {
        let h = cdt.insert(Point2::new(pts[i].x, pts[i].y)).ok()?;
        if h.index() < back.len() {
            return None;
        }
        back.push(i);
        handle.insert(i, h);
    }
    for l in &loops {
        for k in 0..l.len() {
            let (a, b) = (handle[&l[k]], handle[&l[(k + 1) % l.len()]]);
            if !cdt.can_add_constraint(a, b) {
                return None;
            }
            cdt.add_constraint(a, b);
        }
    }
    // flood from the left of every loop edge without crossing constraints
    let mut inside = vec![false; cdt.num_all_faces()];
    let mut stack = Vec::new();
    for l in &loops {
        for k in 0..l.len() {
            let e = cdt.get_edge_from_neighbors(handle[&l[k]], handle[&l[(k + 1) % l.len()]])?;
            let f = e.face().as_inner()?;
            stack.push(f.fix());
        }
    }
    while let Some(f) = stack.pop() {
        if std::mem::replace(&mut inside[f.index()], true) {
            continue;
        }
        for e in cdt.face(f).adjacent_edges() {
            if cdt.is_constraint_edge(e.as_undirected().fix()) {
                continue;
            }
            if let Some(g) = e.rev().face().as_inner() {
                if !inside[g.fix().index()] {
                    stack.push(g.fix());
                }
            } else {
                // leaked to the hull: the loops do not bound a region
                return None;
            }
        }
    }
    let tris: Vec<[usize; 3]> = cdt
        .inner_faces()
        .filter(|f| inside[f.fix().index()])
        .map(|f| f.vertices().map(|v| back[v.fix().index()]))
        .collect();
    let total: usize = loops.iter().map(|l| l.len()).sum();
    // Euler check: a region with h holes and n vertices has n + 2h − 2 triangles
    (tris.len() == total + 2 * holes.len() - 2).then_some(tris)
}

fn triangulate_simple(pts: &[P2], outer: &[usize], holes: &[Vec<usize>]) -> Vec<[usize; 3]> {
    let mut poly: Vec<usize> = outer.to_vec();
    let mut hs: Vec<&Vec<usize>> = holes.iter().filter(|h| h.len() >= 3).collect();
    let rightmost = |h: &[usize]| (0..h.len()).max_by(|&a, &b| pts[h[a]].x.total_cmp(&pts[h[b]].x).then(pts[h[b]].y.total_cmp(&pts[h[a]].y))).unwrap();
    hs.sort_by(|a, b| pts[b[rightmost(b)]].x.total_cmp(&pts[a[rightmost(a)]].x));
    for h in hs {
        let m = rightmost(h);
        let at = bridge_target(pts, &poly, &pts[h[m]]);
        let mut spliced = Vec::with_capacity(poly.len() + h.len() + 2);
        spliced.extend_from_slice(&poly[..=at]);
        for k in 0..=h.len() {
            spliced.push(h[(m + k) % h.len()]);
        }
        spliced.extend_from_slice(&poly[at..]);
        poly = spliced;
    }
    ear_clip(pts, poly)
}

/// Position in `poly` of a vertex visible from `m` (Eberly's construction).
fn bridge_target(pts: &[P2], poly: &[usize], m: &P2) -> usize {
    let n = poly.len();
    let mut best: Option<(f64, usize)> = None;
    for i in 0..n {
        let (a, b) = (pts[poly[i]], pts[poly[(i + 1) % n]]);
        if (a.y <= m.y && m.y <= b.y || b.y <= m.y && m.y <= a.y) && a.y != b.y {
            let x = a.x + (m.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if x >= m.x && best.is_none_or(|(bx, _)| x < bx) {
                // endpoint with larger x
                let j = if a.x > b.x { i } else { (i + 1) % n };
                best = Some((x, j));
            }
        }
    }
    let Some((ix, mut j)) = best else {
        // no edge to the right: fall back to the nearest vertex
        return (0..n).min_by(|&a, &b| (pts[poly[a]] - m).norm_squared().total_cmp(&(pts[poly[b]] - m).norm_squared())).unwrap();
    };
    let i_pt = P2::new(ix, m.y);
    let p = pts[poly[j]];
    if p == i_pt {
        return j;
    }
    // any vertex inside triangle (m, i, p) blocks the view; take the one
    // closest in angle to the ray
    let (t0, t1, t2) = if cross(m, &i_pt, &p) >= 0.0 { (*m, i_pt, p) } else { (*m, p, i_pt) };
    let mut best_key = (f64::INFINITY, f64::INFINITY);
    for k in 0..n {
        let q = pts[poly[k]];
        if k == j || q == *m {
            continue;
        }
        if cross(&t0, &t1, &q) >= 0.0 && cross(&t1, &t2, &q) >= 0.0 && cross(&t2, &t0, &q) >= 0.0 {
            let d = q - m;
            let key = ((d.y / d.norm()).abs(), d.norm());
            if key < best_key {
                best_key = key;
                j = k;
            }
        }
    }
    j
}

fn ear_clip(pts: &[P2], poly: Vec<usize>) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    let mut v = poly;
    let scale = v.iter().map(|&i| pts[i].norm()).fold(1.0, f64::max);
    let tiny = 1e-12 * scale * scale;
    let mut start = 0;
    while v.len() > 3 {
        let n = v.len();
        let mut chosen = None;
        // strict pass, then relaxed passes for near-degenerate leftovers
        for pass in 0..3 {
            for s in 0..n {
                let k = (start + s) % n;
                let (a, b, c) = (v[(k + n - 1) % n], v[k], v[(k + 1) % n]);
                if a == b || b == c || a == c {
                    continue;
                }
                let area = cross(&pts[a], &pts[b], &pts[c]);
                let ok = match pass {
                    0 => area > tiny && !blocks(pts, &v, a, b, c),
                    1 => area > 0.0 && !blocks(pts, &v, a, b, c),
                    _ => area > 0.0,
                };
                if ok {
                    chosen = Some(k);
                    break;
                }
            }
            if chosen.is_some() {
                break;
            }
        }
        let k = match chosen {
            Some(k) => k,
            None => {
                // nothing convex left: remove the flattest vertex
                (0..n)
                    .max_by(|&x, &y| {
                        let ax = cross(&pts[v[(x + n - 1) % n]], &pts[v[x]], &pts[v[(x + 1) % n]]);
                        let ay = cross(&pts[v[(y + n - 1) % n]], &pts[v[y]], &pts[v[(y + 1) % n]]);
                        ax.total_cmp(&ay)
                    })
                    .unwrap()
            }
        };
        let (a, b, c) = (v[(k + n - 1) % n], v[k], v[(k + 1) % n]);
        if a != b && b != c && a != c {
            out.push([a, b, c]);
        }
        v.remove(k);
        start = if k == 0 { 0 } else { k - 1 };
    }
    if v.len() == 3 && v[0] != v[1] && v[1] != v[2] && v[0] != v[2] {
        out.push([v[0], v[1], v[2]]);
    }
    out
}

/// Whether some other polygon vertex lies in the closed triangle (a, b, c).
fn blocks(pts: &[P2], v: &[usize], a: usize, b: usize, c: usize) -> bool {
    let (pa, pb, pc) = (pts[a], pts[b], pts[c]);
    let lo = P2::new(pa.x.min(pb.x).min(pc.x), pa.y.min(pb.y).min(pc.y));
    let hi = P2::new(pa.x.max(pb.x).max(pc.x), pa.y.max(pb.y).max(pc.y));
    v.iter().any(|&i| {
        if i == a || i == b || i == c {
            return false;
        }
        let q = pts[i];
        if q.x < lo.x || q.y < lo.y || q.x > hi.x || q.y > hi.y || q == pa || q == pb || q == pc {
            return false;
        }
        cross(&pa, &pb, &q) >= 0.0 && cross(&pb, &pc, &q) >= 0.0 && cross(&pc, &pa, &q) >= 0.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area_sum(pts: &[P2], tris: &[[usize; 3]]) -> f64 {
        tris.iter().map(|t| cross(&pts[t[0]], &pts[t[1]], &pts[t[2]]) / 2.0).sum()
    }

    /// Every loop edge once in its own direction, every interior edge once
    /// each way.
    fn edges_balanced(tris: &[[usize; 3]], loops: &[&[usize]]) -> bool {
        let mut count: HashMap<(usize, usize), i32> = HashMap::new();
        for t in tris {
            for k in 0..3 {
                *count.entry((t[k], t[(k + 1) % 3])).or_default() += 1;
            }
        }
        for l in loops {
            for i in 0..l.len() {
                let e = (l[i], l[(i + 1) % l.len()]);
                match count.get_mut(&e) {
                    Some(c) if *c >= 1 => *c -= 1,
                    _ => return false,
                }
            }
        }
        count.iter().all(|(&(a, b), &c)| c == 0 || count.get(&(b, a)) == Some(&c))
    }

    #[test]
    fn square_with_collinear_points() {
        let pts: Vec<P2> = [(0., 0.), (1., 0.), (2., 0.), (2., 1.), (2., 2.), (1., 2.), (0., 2.), (0., 1.)]
            .iter()
            .map(|&(x, y)| P2::new(x, y))
            .collect();
        let outer: Vec<usize> = (0..8).collect();
        let tris = triangulate(&pts, &outer, &[]);
        assert_eq!(tris.len(), 6);
        assert!((area_sum(&pts, &tris) - 4.0).abs() < 1e-12);
        assert!(tris.iter().all(|t| cross(&pts[t[0]], &pts[t[1]], &pts[t[2]]) > 0.0));
        assert!(edges_balanced(&tris, &[&outer]));
    }

    #[test]
    fn annulus_and_two_holes() {
        let mut pts = Vec::new();
        let ring = |pts: &mut Vec<P2>, cx: f64, r: f64, n: usize, ccw: bool| -> Vec<usize> {
            let base = pts.len();
            for i in 0..n {
                let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64 * if ccw { 1.0 } else { -1.0 };
                pts.push(P2::new(cx + r * a.cos(), r * a.sin()));
            }
            (base..base + n).collect()
        };
        let outer = ring(&mut pts, 0.0, 10.0, 40, true);
        let h1 = ring(&mut pts, -4.0, 2.0, 12, false);
        let h2 = ring(&mut pts, 4.0, 3.0, 17, false);
        let tris = triangulate(&pts, &outer, &[h1.clone(), h2.clone()]);
        let expect = (signed_area2(&pts, &outer) + signed_area2(&pts, &h1) + signed_area2(&pts, &h2)) / 2.0;
        assert!((area_sum(&pts, &tris) - expect).abs() < 1e-9);
        assert!(tris.iter().all(|t| cross(&pts[t[0]], &pts[t[1]], &pts[t[2]]) > 0.0));
        assert_eq!(tris.len(), 40 + 12 + 17 + 2);
        assert!(edges_balanced(&tris, &[&outer, &h1, &h2]));
    }

    #[test]
    fn staircase_hole() {
        // square frame whose hole is an axis-aligned staircase, like a voxel cross-section
        let mut pts: Vec<P2> = [(-10., -10.), (10., -10.), (10., 10.), (-10., 10.)].iter().map(|&(x, y)| P2::new(x, y)).collect();
        let stair = [(0., 0.), (0., 2.), (1., 2.), (1., 3.), (2., 3.), (3., 3.), (3., 1.), (2., 1.), (2., 0.), (1., 0.)];
        pts.extend(stair.iter().map(|&(x, y)| P2::new(x, y)));
        let hole: Vec<usize> = (4..14).collect();
        assert!(signed_area2(&pts, &hole) < 0.0);
        let outer = vec![0, 1, 2, 3];
        let tris = triangulate(&pts, &outer, &[hole.clone()]);
        let expect = 400.0 + signed_area2(&pts, &hole) / 2.0;
        assert!((area_sum(&pts, &tris) - expect).abs() < 1e-9);
        assert!(tris.iter().all(|t| cross(&pts[t[0]], &pts[t[1]], &pts[t[2]]) > 0.0));
        assert!(edges_balanced(&tris, &[&outer, &hole]));
    }

    #[test]
    fn nesting() {
        let pts: Vec<P2> = [(0., 0.), (10., 0.), (10., 10.), (0., 10.), (2., 2.), (2., 8.), (8., 8.), (8., 2.), (20., 0.), (21., 0.), (21., 1.)]
            .iter()
            .map(|&(x, y)| P2::new(x, y))
            .collect();
        let loops = vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9, 10]];
        let (outers, orphans) = nest_loops(&pts, &loops);
        assert_eq!(outers, vec![(0, vec![1]), (2, vec![])]);
        assert!(orphans.is_empty());
    }

    #[test]
    fn wobbly_runs_give_no_slivers() {
        // frame with long runs of points off their line by ~1e-9
        let mut pts = Vec::new();
        let mut outer = Vec::new();
        for i in 0..50 {
            pts.push(P2::new(i as f64 * 0.2, if i % 2 == 0 { 0.0 } else { 1e-9 }));
            outer.push(pts.len() - 1);
        }
        for &(x, y) in &[(10.0, 0.0), (10.0, 10.0), (0.0, 10.0)] {
            pts.push(P2::new(x, y));
            outer.push(pts.len() - 1);
        }
        let mut hole = Vec::new();
        for i in 0..30 {
            pts.push(P2::new(8.0 - i as f64 * 0.2, 5.0 + if i % 3 == 0 { 1e-9 } else { 0.0 }));
            hole.push(pts.len() - 1);
        }
        pts.push(P2::new(2.0, 7.0));
        hole.push(pts.len() - 1);
        assert!(signed_area2(&pts, &hole) < 0.0);
        let tris = triangulate(&pts, &outer, &[hole.clone()]);
        let expect = (signed_area2(&pts, &outer) + signed_area2(&pts, &hole)) / 2.0;
        assert!((area_sum(&pts, &tris) - expect).abs() < 1e-9);
        let min_area = tris.iter().map(|t| cross(&pts[t[0]], &pts[t[1]], &pts[t[2]]) / 2.0).fold(f64::INFINITY, f64::min);
        assert!(min_area > 1e-3, "sliver of area {min_area}");
        assert!(edges_balanced(&tris, &[&outer, &hole]));
    }
}

use crate::geometry::{Aabb, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf when `count > 0`: primitives `order[start..start + count]`.
    start: u32,
    count: u32,
    left: u32,
    right: u32,
}

/// Binary bounding-volume hierarchy over arbitrary primitives, split at the
/// median of the longest centroid axis.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        let centers: Vec<Vec3> = boxes.iter().map(|b| b.center()).collect();
        let mut order: Vec<u32> = (0..boxes.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1);
        if !boxes.is_empty() {
            build_rec(boxes, &centers, &mut order, 0, boxes.len(), &mut nodes);
        }
        Bvh { nodes, order }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| n.bounds).unwrap_or_else(Aabb::empty)
    }

    /// Nearest primitive under `dist2(prim) -> squared distance`. Ties go to
    /// the lowest primitive id.
    pub fn nearest(&self, p: &Vec3, mut dist2: impl FnMut(usize) -> f64) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut stack: Vec<(u32, f64)> = vec![(0, self.nodes[0].bounds.distance_squared(p))];
        while let Some((ni, bd)) = stack.pop() {
            if let Some((_, bdist)) = best {
                if bd > bdist {
                    continue;
                }
            }
            let n = &self.nodes[ni as usize];
            if n.count > 0 {
                for &prim in &self.order[n.start as usize..(n.start + n.count) as usize] {
                    let d = dist2(prim as usize);
                    let better = match best {
                        None => true,
                        Some((bi, bdist)) => d < bdist || (d == bdist && (prim as usize) < bi),
                    };
                    if better {
                        best = Some((prim as usize, d));
                    }
                }
            } else {
                let dl = self.nodes[n.left as usize].bounds.distance_squared(p);
                let dr = self.nodes[n.right as usize].bounds.distance_squared(p);
                // visit the nearer child first
                if dl <= dr {
                    stack.push((n.right, dr));
                    stack.push((n.left, dl));
                } else {
                    stack.push((n.left, dl));
                    stack.push((n.right, dr));
                }
            }
        }
        best
    }

    /// Visit every primitive whose box the ray enters within `t_max`.
    pub fn ray_candidates(&self, origin: &Vec3, dir: &Vec3, t_max: f64, mut visit: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let n = &self.nodes[ni as usize];
            if n.bounds.ray_entry(origin, &inv, t_max).is_none() {
                continue;
            }
            if n.count > 0 {
                for &prim in &self.order[n.start as usize..(n.start + n.count) as usize] {
                    visit(prim as usize);
                }
            } else {
                stack.push(n.right);
                stack.push(n.left);
            }
        }
    }
}

fn build_rec(boxes: &[Aabb], centers: &[Vec3], order: &mut [u32], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let mut bounds = Aabb::empty();
    let mut cb = Aabb::empty();
    for &i in &order[start..end] {
        bounds.merge(&boxes[i as usize]);
        cb.grow(&centers[i as usize]);
    }
    let idx = nodes.len() as u32;
    nodes.push(Node { bounds, start: start as u32, count: (end - start) as u32, left: 0, right: 0 });
    if end - start <= LEAF_SIZE {
        return idx;
    }
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z { 0 } else if ext.y >= ext.z { 1 } else { 2 };
    if ext[axis] <= 0.0 {
        return idx;
    }
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centers[a as usize][axis].total_cmp(&centers[b as usize][axis]).then(a.cmp(&b))
    });
    let left = build_rec(boxes, centers, order, start, mid, nodes);
    let right = build_rec(boxes, centers, order, mid, end, nodes);
    let n = &mut nodes[idx as usize];
    n.count = 0;
    n.left = left;
    n.right = right;
    idx
}

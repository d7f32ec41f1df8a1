use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::energy::{classify_nodes, ForbiddenZone, ShapeContext};
use super::ops::{apply_local_op, CollisionParams, OpKind};
use super::structure::ZomeStructure;
use super::OptError;
use crate::geometry::Vec3;
use crate::mesh::SurfaceQueryIndex;

/// Fraction of triangle centroids within `radius` of some outermost node.
pub fn shape_similarity(z: &ZomeStructure, index: &SurfaceQueryIndex, radius: f64) -> f64 {
    let (outer, _) = classify_nodes(z);
    let pts: Vec<Vec3> = outer.iter().map(|&id| z.node_world(id)).collect();
    let cents = index.centroids();
    if cents.is_empty() {
        return 0.0;
    }
    let key = |p: &Vec3| [(p.x / radius).floor() as i64, (p.y / radius).floor() as i64, (p.z / radius).floor() as i64];
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let r2 = radius * radius;
    let covered = cents
        .iter()
        .filter(|c| {
            let k = key(c);
            (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    (-1..=1).any(|dz| {
                        grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz])
                            .is_some_and(|v| v.iter().any(|&i| (pts[i] - *c).norm_squared() <= r2))
                    })
                })
            })
        })
        .count();
    covered as f64 / cents.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauParams {
    pub similarity_threshold: f64,
    pub runs: usize,
    /// Operator attempts allowed per run.
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for TauParams {
    fn default() -> Self {
        TauParams { similarity_threshold: 0.9, runs: 10, max_attempts: 20_000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauEstimate {
    pub tau: usize,
    /// |N| + |S| at which each run reached the threshold.
    pub counts: Vec<usize>,
    pub similarities: Vec<f64>,
}

/// Random growth from `init` with insertion operators until the similarity
/// threshold is met; τ is 90% of the mean element count over the runs.
pub fn estimate_target_tau(
    init: &ZomeStructure,
    index: &SurfaceQueryIndex,
    zone: &ForbiddenZone,
    collision: &CollisionParams,
    params: &TauParams,
) -> Result<TauEstimate, OptError> {
    if params.runs == 0 {
        return Err(OptError::Invalid("tau estimation needs at least one run".into()));
    }
    let mut counts = Vec::with_capacity(params.runs);
    let mut sims = Vec::with_capacity(params.runs);
    let mut best = 0.0f64;
    let mut ctx = ShapeContext::new(index, *zone, init);
    for run in 0..params.runs {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(run as u64);
        let mut z = init.clone();
        let mut sim = shape_similarity(&z, index, zone.d_max);
        let mut attempts = 0;
        while sim < params.similarity_threshold && attempts < params.max_attempts {
            attempts += 1;
            let kind = OpKind::INSERTIONS[rng.gen_range(0..3)];
            if apply_local_op(&mut z, kind, &mut rng, collision, Some(&mut ctx)).is_ok() && kind == OpKind::InsNode {
                sim = shape_similarity(&z, index, zone.d_max);
            }
        }
        best = best.max(sim);
        if sim < params.similarity_threshold {
            return Err(OptError::TauUnreachable { threshold: params.similarity_threshold, best_similarity: best });
        }
        counts.push(z.element_count());
        sims.push(sim);
    }
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    Ok(TauEstimate { tau: (0.9 * mean).round() as usize, counts, similarities: sims })
}

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::energy::{EnergyTerms, EnergyWeights, ForbiddenZone, ShapeContext};
use super::ops::{apply_local_op, CollisionParams, OpKind};
use super::structure::ZomeStructure;
use crate::mesh::SurfaceQueryIndex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub t_init: f64,
    pub t_end: f64,
    pub cooling: f64,
    pub iterations_per_step: usize,
    pub seed: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams { t_init: 1.0, t_end: 1e-3, cooling: 0.99, iterations_per_step: 100, seed: 0 }
    }
}

impl AnnealParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0 < self.cooling && self.cooling < 1.0) {
            return Err(format!("cooling rate must lie in (0, 1), got {}", self.cooling));
        }
        if !(0.0 < self.t_end && self.t_end < self.t_init) {
            return Err(format!("need 0 < T_end < T_init, got {} and {}", self.t_end, self.t_init));
        }
        if self.iterations_per_step == 0 {
            return Err("iterations_per_step must be positive".into());
        }
        Ok(())
    }

    /// Number of temperature levels visited.
    pub fn steps(&self) -> usize {
        let mut t = self.t_init;
        let mut n = 0;
        while t >= self.t_end {
            t *= self.cooling;
            n += 1;
        }
        n
    }

    pub fn temperature_after(&self, iterations: usize) -> f64 {
        self.t_init * self.cooling.powi((iterations / self.iterations_per_step) as i32)
    }
}

/// Metropolis rule: accept when `p < exp((E − E′) / T)`.
pub fn metropolis_accept(e_current: f64, e_candidate: f64, temperature: f64, p: f64) -> bool {
    p < ((e_current - e_candidate) / temperature).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub temperature: f64,
    pub current: f64,
    pub best: f64,
    /// Moves accepted at this temperature level.
    pub accepted: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OpStats {
    pub proposed: usize,
    pub valid: usize,
    pub accepted: usize,
}

#[derive(Clone, Debug)]
pub struct AnnealResult {
    pub best: ZomeStructure,
    pub best_terms: EnergyTerms,
    pub best_energy: f64,
    pub initial_energy: f64,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
    pub stats: BTreeMap<OpKind, OpStats>,
}

pub fn anneal(
    init: &ZomeStructure,
    index: &SurfaceQueryIndex,
    zone: &ForbiddenZone,
    weights: &EnergyWeights,
    tau: f64,
    params: &AnnealParams,
    collision: &CollisionParams,
) -> AnnealResult {
    anneal_with_progress(init, index, zone, weights, tau, params, collision, |_| {})
}

/// As [`anneal`], calling `progress` after every temperature level.
#[allow(clippy::too_many_arguments)]
pub fn anneal_with_progress(
    init: &ZomeStructure,
    index: &SurfaceQueryIndex,
    zone: &ForbiddenZone,
    weights: &EnergyWeights,
    tau: f64,
    params: &AnnealParams,
    collision: &CollisionParams,
    mut progress: impl FnMut(&TracePoint),
) -> AnnealResult {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut ctx = ShapeContext::new(index, *zone, init);
    let mut z = init.clone();
    let mut terms = ctx.terms(&z, tau);
    let mut e = terms.total(weights);
    let initial_energy = e;
    let mut best = (z.clone(), terms, e);
    let mut stats: BTreeMap<OpKind, OpStats> = OpKind::ALL.iter().map(|k| (*k, OpStats::default())).collect();
    let mut trace = Vec::new();
    let mut t = params.t_init;
    let mut it = 0;
    while t >= params.t_end {
        let mut accepted = 0;
        for _ in 0..params.iterations_per_step {
            it += 1;
            let kind = OpKind::ALL[rng.gen_range(0..OpKind::ALL.len())];
            let st = stats.get_mut(&kind).unwrap();
            st.proposed += 1;
            let Ok(edits) = apply_local_op(&mut z, kind, &mut rng, collision, Some(&mut ctx)) else {
                continue;
            };
            st.valid += 1;
            let cand_terms = ctx.terms(&z, tau);
            let cand = cand_terms.total(weights);
            let p: f64 = rng.gen();
            if metropolis_accept(e, cand, t, p) {
                st.accepted += 1;
                accepted += 1;
                e = cand;
                terms = cand_terms;
                if e < best.2 {
                    best = (z.clone(), terms, e);
                }
            } else {
                z.undo_all(&edits);
            }
        }
        let tp = TracePoint { iteration: it, temperature: t, current: e, best: best.2, accepted };
        progress(&tp);
        trace.push(tp);
        t *= params.cooling;
    }
    AnnealResult {
        best: best.0,
        best_terms: best.1,
        best_energy: best.2,
        initial_energy,
        iterations: it,
        trace,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule() {
        let p = AnnealParams::default();
        assert!((p.temperature_after(100) - 0.99).abs() < 1e-15);
        assert_eq!(p.temperature_after(99), 1.0);
        // smallest n with 0.99^n < 1e-3
        let n = (1e-3f64.ln() / 0.99f64.ln()).ceil() as usize;
        assert_eq!(p.steps(), n);
        assert!(AnnealParams { cooling: 1.0, ..p }.validate().is_err());
        assert!(AnnealParams { t_end: 2.0, ..p }.validate().is_err());
    }

    #[test]
    fn improvements_always_accepted() {
        for p in [0.0, 0.5, 0.999_999] {
            assert!(metropolis_accept(5.0, 4.0, 1e-6, p));
            assert!(metropolis_accept(5.0, 4.0, 10.0, p));
        }
        assert!(!metropolis_accept(4.0, 5.0, 1e-3, 0.01));
    }

    #[test]
    fn acceptance_rate_matches_boltzmann() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (de, t) = (0.7, 0.5);
        let n = 100_000;
        let hits = (0..n).filter(|_| metropolis_accept(0.0, de, t, rng.gen())).count();
        let q = (-de / t as f64).exp();
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - q).abs() < 3.0 * se);
    }
}

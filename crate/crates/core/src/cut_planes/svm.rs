//! Soft-margin linear SVM trained by SMO on the dual.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    /// Soft-margin penalty.
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 10.0, tolerance: 1e-9, max_iterations: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearModel {
    pub w: Vec3,
    pub bias: f64,
    pub iterations: usize,
}

impl LinearModel {
    pub fn decision(&self, x: &Vec3) -> f64 {
        self.w.dot(x) + self.bias
    }
}

/// Train on points `x` with labels `y ∈ {+1, −1}`. Features are centred on
/// their mean before training; the returned model acts on raw coordinates.
pub fn train_linear(x: &[Vec3], y: &[f64], params: &SvmParams) -> LinearModel {
    let n = x.len();
    assert_eq!(n, y.len());
    let mean = x.iter().fold(Vec3::zeros(), |a, p| a + p) / n as f64;
    let xs: Vec<Vec3> = x.iter().map(|p| p - mean).collect();
    let kd: Vec<f64> = xs.iter().map(|p| p.norm_squared()).collect();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    let mut w = Vec3::zeros();
    // gradient of the dual objective: G_i = y_i w·x_i − 1
    let mut g = vec![-1.0; n];
    let mut iterations = 0;
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    while iterations < params.max_iterations {
        // maximal violating pair, second-order choice of j
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * g[t] > gmax {
                gmax = -y[t] * g[t];
                i = t;
            }
        }
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * g[t];
            gmin = gmin.min(v);
            if i != usize::MAX && v < gmax {
                let b = gmax - v;
                let a = (kd[i] + kd[t] - 2.0 * xs[i].dot(&xs[t])).max(1e-12);
                let obj = -b * b / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < params.tolerance {
            break;
        }
        iterations += 1;
        let kij = xs[i].dot(&xs[j]);
        let quad = (kd[i] + kd[j] - 2.0 * kij).max(1e-12);
        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let dw = xs[i] * (y[i] * (alpha[i] - ai_old)) + xs[j] * (y[j] * (alpha[j] - aj_old));
        w += dw;
        for t in 0..n {
            g[t] += y[t] * dw.dot(&xs[t]);
        }
    }
    // bias from free vectors, else the middle of the feasible interval
    let (mut sum, mut nfree) = (0.0, 0);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * g[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += yg;
            nfree += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if nfree > 0 { sum / nfree as f64 } else { (ub + lb) / 2.0 };
    // decision on centred features is w·x − ρ
    LinearModel { w, bias: -rho - w.dot(&mean), iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points() {
        // hard margin between (−1,0,0) and (1,0,0): w = (1,0,0), b = 0
        let m = train_linear(&[Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)], &[1.0, -1.0], &SvmParams::default());
        assert!((m.w - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-9);
        assert!(m.bias.abs() < 1e-9);
    }

    #[test]
    fn soft_margin_caps_alpha() {
        // overlapping classes stay finite and still produce a direction
        let x = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.05, 0.0, 0.0), Vec3::new(0.15, 0.0, 0.0)];
        let m = train_linear(&x, &[1.0, -1.0, 1.0, -1.0], &SvmParams { c: 1.0, ..Default::default() });
        assert!(m.w.norm().is_finite() && m.bias.is_finite());
    }
}

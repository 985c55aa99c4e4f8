//! Seeded random-walk localization drift.
//!
//! The accumulated offset stands in for odometry error: each travelled meter
//! adds zero-mean Gaussian noise to the position estimate, so the estimate
//! diverges from ground truth at a rate set by `sigma_per_meter`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geom::Pose;
use crate::scalar::Real;

/// Stateful drift accumulator. Deterministic for a given seed.
#[derive(Debug, Clone)]
pub struct DriftModel<S> {
    sigma_per_meter: S,
    rng: ChaCha8Rng,
    offset_x: S,
    offset_y: S,
}

impl<S: Real> DriftModel<S>
where
    StandardNormal: Distribution<S>,
{
    pub fn new(sigma_per_meter: S, seed: u64) -> Self {
        assert!(sigma_per_meter >= S::zero());
        DriftModel {
            sigma_per_meter,
            rng: ChaCha8Rng::seed_from_u64(seed),
            offset_x: S::zero(),
            offset_y: S::zero(),
        }
    }

    /// Advance the random walk by one travel increment and return the
    /// drifted estimate of `truth`. The per-axis step has standard deviation
    /// `sigma_per_meter * distance_delta`.
    pub fn apply(&mut self, truth: Pose<S>, distance_delta: S) -> Pose<S> {
        debug_assert!(distance_delta >= S::zero());
        let sigma = self.sigma_per_meter * distance_delta;
        let zx: S = StandardNormal.sample(&mut self.rng);
        let zy: S = StandardNormal.sample(&mut self.rng);
        self.offset_x += zx * sigma;
        self.offset_y += zy * sigma;
        self.estimate(truth)
    }

    /// Current estimate without advancing the walk.
    pub fn estimate(&self, truth: Pose<S>) -> Pose<S> {
        Pose { x: truth.x + self.offset_x, y: truth.y + self.offset_y, theta: truth.theta }
    }

    /// Accumulated (x, y) offset of the estimate from ground truth.
    pub fn offset(&self) -> (S, S) {
        (self.offset_x, self.offset_y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_exact() {
        let mut m: DriftModel<f64> = DriftModel::new(0.0, 42);
        let truth = Pose::new(3.0, -2.0, 0.5);
        for _ in 0..100 {
            let est = m.apply(truth, 0.3);
            assert_eq!(est, truth);
        }
    }

    #[test]
    fn same_seed_same_walk() {
        let truth = Pose::new(0.0, 0.0, 0.0);
        let run = |seed| {
            let mut m: DriftModel<f64> = DriftModel::new(0.01, seed);
            for _ in 0..50 {
                m.apply(truth, 1.0);
            }
            m.offset()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn monte_carlo_std_matches_analytic_walk() {
        // 100 steps of 1 m at sigma 0.01/m: per-axis std is
        // 0.01 * sqrt(sum d_i^2) = 0.1. Oracle is the closed-form variance
        // of a Gaussian walk; the empirical std over 1000 seeds must agree
        // within 15%.
        let steps = 100;
        let sigma = 0.01;
        let expected = sigma * (steps as f64).sqrt();
        let truth = Pose::new(0.0, 0.0, 0.0);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for seed in 0..1000u64 {
            let mut m: DriftModel<f64> = DriftModel::new(sigma, seed);
            for _ in 0..steps {
                m.apply(truth, 1.0);
            }
            let (ox, oy) = m.offset();
            xs.push(ox);
            ys.push(oy);
        }
        let std = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        };
        for s in [std(&xs), std(&ys)] {
            assert!(
                (s - expected).abs() / expected < 0.15,
                "empirical std {s} vs analytic {expected}"
            );
        }
    }
}

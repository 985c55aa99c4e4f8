//! Calibration kernels: closed-form rigid alignment of corresponding point
//! sets and clock offset/delay estimation from four-timestamp exchanges.

use nalgebra::{Matrix3, RealField, Rotation3, Vector3, SVD};
use num_traits::Float;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum CalibError {
    #[error("need at least 3 point pairs, got {0}")]
    TooFewPoints(usize),
    #[error("source has {src} points but destination has {dst}")]
    LengthMismatch { src: usize, dst: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum ClockError {
    #[error("exchange implies negative one-way delay ({delay} s); timestamps are inconsistent")]
    InvalidExchange { delay: f64 },
    #[error("no exchanges to estimate from")]
    Empty,
}

/// Proper rigid motion: `p -> R p + t` with `R` orthonormal, `det(R) = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform<S: RealField> {
    pub rotation: Matrix3<S>,
    pub translation: Vector3<S>,
}

impl<S: Real + RealField> RigidTransform<S> {
    pub fn identity() -> Self {
        RigidTransform { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn apply(&self, p: &[S; 3]) -> [S; 3] {
        let v = self.rotation * Vector3::new(p[0], p[1], p[2]) + self.translation;
        [v[0], v[1], v[2]]
    }

    /// Composition `self o other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform<S>) -> RigidTransform<S> {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform<S> {
        let rt = self.rotation.transpose();
        RigidTransform { rotation: rt, translation: -(rt * self.translation) }
    }

    /// Max absolute entry of `R^T R - I`; zero for a perfect rotation.
    pub fn orthonormality_error(&self) -> S {
        let gram = self.rotation.transpose() * self.rotation - Matrix3::identity();
        gram.iter().fold(S::zero(), |acc, v| {
            if Float::abs(*v) > acc {
                Float::abs(*v)
            } else {
                acc
            }
        })
    }

    /// Rotation angle between this rotation and `other`, in radians.
    pub fn rotation_angle_to(&self, other: &RigidTransform<S>) -> S {
        let rel = Rotation3::from_matrix_unchecked(self.rotation.transpose() * other.rotation);
        rel.angle()
    }
}

/// Rigid estimate plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidEstimate<S: RealField> {
    pub transform: RigidTransform<S>,
    /// Root-mean-square residual of `R src + t - dst`.
    pub rms: S,
    /// Set when the source points are (near-)collinear, which leaves a
    /// rotation about the line undetermined. The estimate is still the
    /// reflection-corrected best effort.
    pub degenerate: bool,
}

/// Least-squares rigid alignment of paired points (no scale): centroid
/// subtraction, cross-covariance, orthogonal factorization, and a
/// determinant correction so the result is a rotation rather than a
/// reflection even for noisy or degenerate inputs.
pub fn estimate_rigid<S: Real + RealField>(
    src: &[[S; 3]],
    dst: &[[S; 3]],
) -> Result<RigidEstimate<S>, CalibError> {
    if src.len() != dst.len() {
        return Err(CalibError::LengthMismatch { src: src.len(), dst: dst.len() });
    }
    if src.len() < 3 {
        return Err(CalibError::TooFewPoints(src.len()));
    }
    let n = S::from_count(src.len());
    let mut mu_s = Vector3::zeros();
    let mut mu_d = Vector3::zeros();
    for (s, d) in src.iter().zip(dst) {
        mu_s += Vector3::new(s[0], s[1], s[2]);
        mu_d += Vector3::new(d[0], d[1], d[2]);
    }
    mu_s /= n;
    mu_d /= n;

    // Cross-covariance H = sum (d - mu_d)(s - mu_s)^T.
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let sc = Vector3::new(s[0], s[1], s[2]) - mu_s;
        let dc = Vector3::new(d[0], d[1], d[2]) - mu_d;
        h += dc * sc.transpose();
    }

    let svd = SVD::new(h, true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut rotation = u * v_t;
    if rotation.determinant() < S::zero() {
        // Flip the axis of least evidence.
        let mut d = Matrix3::identity();
        d[(2, 2)] = -S::one();
        rotation = u * d * v_t;
    }
    let translation = mu_d - rotation * mu_s;

    // Collinear sources: second singular value vanishes relative to the first.
    let sv = svd.singular_values;
    let degenerate = sv[0] <= S::zero() || sv[1] / sv[0] < S::val(1e-9);

    let transform = RigidTransform { rotation, translation };
    let mut sq_sum = S::zero();
    for (s, d) in src.iter().zip(dst) {
        let mapped = transform.apply(s);
        let dx = mapped[0] - d[0];
        let dy = mapped[1] - d[1];
        let dz = mapped[2] - d[2];
        sq_sum += dx * dx + dy * dy + dz * dz;
    }
    let rms = Float::sqrt(sq_sum / n);
    Ok(RigidEstimate { transform, rms, degenerate })
}

/// One four-timestamp master/slave handshake. `t1`/`t4` are master clock
/// readings, `t2`/`t3` slave clock readings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimestampExchange<S> {
    pub t1: S,
    pub t2: S,
    pub t3: S,
    pub t4: S,
}

/// Estimated slave-minus-master offset and symmetric one-way delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockEstimate<S> {
    pub offset: S,
    pub delay: S,
}

/// Solve one exchange under the symmetric-delay assumption:
/// `offset = ((t2-t1) - (t4-t3)) / 2`, `delay = ((t2-t1) + (t4-t3)) / 2`.
/// When forward and reverse delays differ, the offset is biased by half the
/// difference; that bias is inherent to the formula, not an error.
pub fn estimate_clock<S: Real>(ex: &TimestampExchange<S>) -> Result<ClockEstimate<S>, ClockError> {
    let forward = ex.t2 - ex.t1;
    let reverse = ex.t4 - ex.t3;
    let offset = (forward - reverse) / S::two();
    let delay = (forward + reverse) / S::two();
    if delay < S::zero() {
        return Err(ClockError::InvalidExchange { delay: delay.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(ClockEstimate { offset, delay })
}

/// Robust batch estimate: the median of the per-exchange offsets and delays,
/// so a few asymmetric-delay outliers cannot drag the result.
pub fn estimate_clock_batch<S: Real>(
    exchanges: &[TimestampExchange<S>],
) -> Result<ClockEstimate<S>, ClockError> {
    if exchanges.is_empty() {
        return Err(ClockError::Empty);
    }
    let mut offsets = Vec::with_capacity(exchanges.len());
    let mut delays = Vec::with_capacity(exchanges.len());
    for ex in exchanges {
        let est = estimate_clock(ex)?;
        offsets.push(est.offset);
        delays.push(est.delay);
    }
    Ok(ClockEstimate { offset: median(&mut offsets), delay: median(&mut delays) })
}

fn median<S: Real>(values: &mut [S]) -> S {
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN timestamps"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / S::two()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Distribution, StandardNormal};

    fn random_rotation(rng: &mut StdRng) -> Matrix3<f64> {
        let axis = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let angle = rng.gen_range(-3.0..3.0);
        Rotation3::new(axis.normalize() * angle).into_inner()
    }

    fn apply(r: &Matrix3<f64>, t: &Vector3<f64>, p: &[f64; 3]) -> [f64; 3] {
        let v = r * Vector3::new(p[0], p[1], p[2]) + t;
        [v[0], v[1], v[2]]
    }

    #[test]
    fn identity_on_identical_sets() {
        let pts = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let est = estimate_rigid(&pts, &pts).unwrap();
        assert!(!est.degenerate);
        assert!(est.rms <= 1e-12);
        assert!(est.transform.orthonormality_error() <= 1e-12);
        assert!((est.transform.rotation - Matrix3::identity()).norm() <= 1e-9);
        assert!(est.transform.translation.norm() <= 1e-9);
    }

    #[test]
    fn recovers_quarter_turn_and_shift() {
        let src = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 0.0, 2.0],
        ];
        let r = Rotation3::from_euler_angles(0.0, 0.0, std::f64::consts::FRAC_PI_2).into_inner();
        let t = Vector3::new(1.0, 2.0, 3.0);
        let dst: Vec<[f64; 3]> = src.iter().map(|p| apply(&r, &t, p)).collect();
        let est = estimate_rigid(&src, &dst).unwrap();
        assert!(est.rms <= 1e-9);
        assert!((est.transform.rotation - r).norm() <= 1e-9);
        assert!((est.transform.translation - t).norm() <= 1e-9);
    }

    #[test]
    fn noiseless_recovery_over_random_transforms() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..100 {
            let r = random_rotation(&mut rng);
            let t = Vector3::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            let src: Vec<[f64; 3]> = (0..10)
                .map(|_| {
                    [
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                    ]
                })
                .collect();
            let dst: Vec<[f64; 3]> = src.iter().map(|p| apply(&r, &t, p)).collect();
            let est = estimate_rigid(&src, &dst).unwrap();
            assert!((est.transform.rotation - r).norm() <= 1e-9);
            assert!((est.transform.translation - t).norm() <= 1e-9);
            assert!(est.transform.orthonormality_error() <= 1e-9);
            assert!(est.transform.rotation.determinant() > 0.0);
        }
    }

    #[test]
    fn noisy_recovery_within_tolerance() {
        // 50 points, 1 mm gaussian noise: median translation error over 100
        // seeds stays within 1 mm and rotation within 0.1 degrees.
        let mut trans_errors = Vec::new();
        let mut rot_errors = Vec::new();
        for seed in 0..100u64 {
            let mut rng = StdRng::seed_from_u64(seed);
            let r = random_rotation(&mut rng);
            let t = Vector3::new(0.3, -0.2, 0.5);
            let src: Vec<[f64; 3]> = (0..50)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect();
            let sigma = 1e-3;
            let dst: Vec<[f64; 3]> = src
                .iter()
                .map(|p| {
                    let mut q = apply(&r, &t, p);
                    for axis in &mut q {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *axis += z * sigma;
                    }
                    q
                })
                .collect();
            let est = estimate_rigid(&src, &dst).unwrap();
            trans_errors.push((est.transform.translation - t).norm());
            let rel = Rotation3::from_matrix_unchecked(r.transpose() * est.transform.rotation);
            rot_errors.push(rel.angle());
            assert!(est.transform.orthonormality_error() <= 1e-9);
        }
        trans_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rot_errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(trans_errors[50] <= 1e-3, "median translation error {}", trans_errors[50]);
        assert!(rot_errors[50] <= 0.1f64.to_radians(), "median rotation error {}", rot_errors[50]);
    }

    #[test]
    fn near_reflective_noise_still_yields_proper_rotation() {
        // Nearly-planar points with noise tempt the factorization into a
        // reflection; the determinant correction must hold det = +1.
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let src: Vec<[f64; 3]> = (0..8)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1e-6..1e-6),
                    ]
                })
                .collect();
            let dst: Vec<[f64; 3]> = src
                .iter()
                .map(|p| {
                    [
                        p[0] + rng.gen_range(-1e-4..1e-4),
                        -p[1] + rng.gen_range(-1e-4..1e-4),
                        p[2],
                    ]
                })
                .collect();
            let est = estimate_rigid(&src, &dst).unwrap();
            assert!(est.transform.rotation.determinant() > 0.0);
            assert!(est.transform.orthonormality_error() <= 1e-9);
        }
    }

    #[test]
    fn collinear_sources_flagged_degenerate() {
        let src = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [2.0, 0.0, 0.0],
            [3.0, 0.0, 0.0],
        ];
        let est = estimate_rigid(&src, &src).unwrap();
        assert!(est.degenerate);
        assert!(est.transform.rotation.determinant() > 0.0);
        assert!(est.transform.orthonormality_error() <= 1e-9);
    }

    #[test]
    fn too_few_or_mismatched_points() {
        let a = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]];
        assert_eq!(estimate_rigid(&a, &a).unwrap_err(), CalibError::TooFewPoints(2));
        let b = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(
            estimate_rigid(&b, &a).unwrap_err(),
            CalibError::LengthMismatch { src: 3, dst: 2 }
        );
    }

    #[test]
    fn left_equivariance_under_extra_rigid_motion() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..20 {
            let src: Vec<[f64; 3]> = (0..6)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ]
                })
                .collect();
            let r = random_rotation(&mut rng);
            let t = Vector3::new(0.1, 0.2, -0.3);
            let dst: Vec<[f64; 3]> = src.iter().map(|p| apply(&r, &t, p)).collect();
            let base = estimate_rigid(&src, &dst).unwrap().transform;

            let g = RigidTransform {
                rotation: random_rotation(&mut rng),
                translation: Vector3::new(1.0, -2.0, 0.5),
            };
            let dst_g: Vec<[f64; 3]> = dst.iter().map(|p| g.apply(p)).collect();
            let lifted = estimate_rigid(&src, &dst_g).unwrap().transform;
            let composed = g.compose(&base);
            assert!((lifted.rotation - composed.rotation).norm() <= 1e-9);
            assert!((lifted.translation - composed.translation).norm() <= 1e-9);
        }
    }

    #[test]
    fn clock_zero_delay_boundary() {
        let est = estimate_clock(&TimestampExchange { t1: 0.0, t2: 10.0, t3: 10.0, t4: 0.0 })
            .unwrap();
        assert_eq!(est.delay, 0.0);
        assert_eq!(est.offset, 10.0);
    }

    #[test]
    fn clock_symmetric_delay_is_exact() {
        // True offset 5, one-way delay 10, slave processing 5.
        let est = estimate_clock(&TimestampExchange { t1: 0.0, t2: 15.0, t3: 20.0, t4: 25.0 })
            .unwrap();
        assert_eq!(est.offset, 5.0);
        assert_eq!(est.delay, 10.0);
    }

    #[test]
    fn clock_negative_delay_rejected() {
        let err = estimate_clock(&TimestampExchange { t1: 0.0, t2: 1.0, t3: 10.0, t4: 5.0 })
            .unwrap_err();
        assert!(matches!(err, ClockError::InvalidExchange { .. }));
    }

    #[test]
    fn clock_exact_on_dyadic_lattice() {
        // Offsets and delays drawn as multiples of 2^-20 make every sum
        // exact in binary floating point, so recovery is bit-exact.
        let mut rng = StdRng::seed_from_u64(3);
        let quantum = (2.0f64).powi(-20);
        for _ in 0..1000 {
            let offset = rng.gen_range(-(1 << 20)..(1 << 20)) as f64 * quantum;
            let delay = rng.gen_range(0..(1 << 20)) as f64 * quantum;
            let processing = rng.gen_range(0..(1 << 10)) as f64 * quantum;
            let t1 = rng.gen_range(0..(1 << 20)) as f64 * quantum;
            let t2 = t1 + delay + offset;
            let t3 = t2 + processing;
            let t4 = t3 + delay - offset;
            let est = estimate_clock(&TimestampExchange { t1, t2, t3, t4 }).unwrap();
            assert_eq!(est.offset, offset);
            assert_eq!(est.delay, delay);
        }
    }

    #[test]
    fn asymmetric_delay_bias_formula() {
        // Forward delay 8, reverse 12, true offset 5: estimate is biased by
        // (d_ms - d_sm)/2 = -2.
        let (d_ms, d_sm, offset) = (8.0, 12.0, 5.0);
        let t1 = 100.0;
        let t2 = t1 + d_ms + offset;
        let t3 = t2 + 1.0;
        let t4 = t3 + d_sm - offset;
        let est = estimate_clock(&TimestampExchange { t1, t2, t3, t4 }).unwrap();
        assert_abs_diff_eq!(est.offset, offset + (d_ms - d_sm) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.delay, (d_ms + d_sm) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn batch_single_equals_single() {
        let ex = TimestampExchange { t1: 0.0, t2: 15.0, t3: 20.0, t4: 25.0 };
        assert_eq!(estimate_clock_batch(&[ex]).unwrap(), estimate_clock(&ex).unwrap());
    }

    #[test]
    fn batch_of_identical_exchanges_recovers_exactly() {
        let ex = TimestampExchange { t1: 1.0, t2: 16.0, t3: 21.0, t4: 26.0 };
        let est = estimate_clock_batch(&[ex; 9]).unwrap();
        assert_eq!(est.offset, 5.0);
        assert_eq!(est.delay, 10.0);
    }

    #[test]
    fn batch_median_shrugs_off_outliers() {
        // 17 clean symmetric exchanges (offset 2 s, delay 0.01 s) plus 3
        // grossly asymmetric outliers. The median stays within 1 ms of the
        // truth; the mean does not.
        let clean = TimestampExchange { t1: 0.0, t2: 2.01, t3: 2.02, t4: 0.03 };
        let mut exchanges = vec![clean; 17];
        for k in 0..3 {
            let extra = 3.0 + k as f64;
            exchanges.push(TimestampExchange {
                t1: 0.0,
                t2: 2.01 + extra, // forward path delayed by `extra`
                t3: 2.02 + extra,
                t4: 0.03 + extra,
            });
        }
        let est = estimate_clock_batch(&exchanges).unwrap();
        assert!((est.offset - 2.0).abs() < 1e-3, "median offset {}", est.offset);
        let mean_offset = exchanges
            .iter()
            .map(|e| estimate_clock(e).unwrap().offset)
            .sum::<f64>()
            / exchanges.len() as f64;
        assert!((mean_offset - 2.0).abs() > 1e-3, "mean should be dragged: {mean_offset}");
    }

    #[test]
    fn batch_is_permutation_invariant() {
        let mut exchanges = vec![
            TimestampExchange { t1: 0.0, t2: 2.0, t3: 3.0, t4: 1.5 },
            TimestampExchange { t1: 0.0, t2: 2.5, t3: 3.0, t4: 1.0 },
            TimestampExchange { t1: 0.0, t2: 1.8, t3: 3.0, t4: 2.0 },
            TimestampExchange { t1: 0.0, t2: 2.2, t3: 3.0, t4: 1.2 },
        ];
        let a = estimate_clock_batch(&exchanges).unwrap();
        exchanges.reverse();
        let b = estimate_clock_batch(&exchanges).unwrap();
        exchanges.swap(0, 2);
        let c = estimate_clock_batch(&exchanges).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn batch_empty_is_error() {
        let empty: [TimestampExchange<f64>; 0] = [];
        assert_eq!(estimate_clock_batch(&empty).unwrap_err(), ClockError::Empty);
    }

    #[test]
    fn property_symmetric_delay_exact_for_random_draws() {
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..500 {
            let offset = rng.gen_range(-100.0..100.0);
            let delay = rng.gen_range(0.0..50.0);
            let t1 = rng.gen_range(0.0..1000.0);
            let t2 = t1 + delay + offset;
            let t3 = t2 + rng.gen_range(0.0..1.0);
            let t4 = t3 + delay - offset;
            let est = estimate_clock(&TimestampExchange { t1, t2, t3, t4 }).unwrap();
            assert_abs_diff_eq!(est.offset, offset, epsilon = 1e-9);
            assert_abs_diff_eq!(est.delay, delay, epsilon = 1e-9);
        }
    }
}

//! Planar poses and the small amount of vector geometry the planners need.

use crate::scalar::Real;

/// Normalize an angle into `(-pi, pi]`.
///
/// The closed upper end matters: a half-turn is `pi`, never `-pi`, so
/// exact-arc results like a U-turn have a single canonical heading.
#[inline]
pub fn normalize_angle<S: Real>(a: S) -> S {
    let two_pi = S::TAU();
    // r = (pi - a) mod 2*pi in [0, 2*pi), then pi - r lies in (-pi, pi].
    let mut r = (S::PI() - a) % two_pi;
    if r < S::zero() {
        r += two_pi;
    }
    S::PI() - r
}

/// Planar robot pose: position in meters, heading in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<S> {
    pub x: S,
    pub y: S,
    /// Heading, always normalized to `(-pi, pi]`.
    pub theta: S,
}

impl<S: Real> Pose<S> {
    /// Build a pose, normalizing the heading.
    pub fn new(x: S, y: S, theta: S) -> Self {
        Pose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    /// Euclidean distance between the two positions (headings ignored).
    pub fn distance_to(&self, other: &Pose<S>) -> S {
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        dx.hypot(dy)
    }

    /// Express a world point in this pose's frame (x forward, y left).
    pub fn to_local(&self, px: S, py: S) -> (S, S) {
        let dx = px - self.x;
        let dy = py - self.y;
        let (sin, cos) = self.theta.sin_cos();
        (cos * dx + sin * dy, -sin * dx + cos * dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn normalize_maps_half_turn_to_positive_pi() {
        assert_eq!(normalize_angle(std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(normalize_angle(-std::f64::consts::PI), std::f64::consts::PI);
        assert_abs_diff_eq!(normalize_angle(3.0 * std::f64::consts::PI), std::f64::consts::PI);
        assert_abs_diff_eq!(normalize_angle(0.0_f64), 0.0);
    }

    #[test]
    fn to_local_rotates_into_heading_frame() {
        let p = Pose::new(1.0, 1.0, std::f64::consts::FRAC_PI_2);
        let (lx, ly) = p.to_local(1.0, 3.0);
        assert_abs_diff_eq!(lx, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ly, 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn normalized_angle_in_half_open_interval(a in -1000.0f64..1000.0) {
            let n = normalize_angle(a);
            prop_assert!(n > -std::f64::consts::PI && n <= std::f64::consts::PI);
            // Same direction modulo 2*pi.
            prop_assert!(((n - a) / std::f64::consts::TAU).rem_euclid(1.0) < 1e-9
                || ((n - a) / std::f64::consts::TAU).rem_euclid(1.0) > 1.0 - 1e-9);
        }
    }
}

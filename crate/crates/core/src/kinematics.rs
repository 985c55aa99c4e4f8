//! Unicycle kinematics with the platform velocity limits.

use crate::geom::{normalize_angle, Pose};
use crate::scalar::Real;

/// Saturation limits applied to every command before integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityLimits<S> {
    pub v_max: S,
    pub omega_max: S,
}

impl<S: Real> Default for VelocityLimits<S> {
    fn default() -> Self {
        VelocityLimits { v_max: S::val(1.5), omega_max: S::val(1.57) }
    }
}

/// Linear and angular velocity command in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityCommand<S> {
    pub v: S,
    pub omega: S,
}

impl<S: Real> VelocityCommand<S> {
    pub fn new(v: S, omega: S) -> Self {
        VelocityCommand { v, omega }
    }

    /// Clamp into the limits; the flag reports whether clamping changed
    /// anything (callers may warn, it is never an error).
    pub fn clamped(self, limits: &VelocityLimits<S>) -> (Self, bool) {
        let v = self.v.max(-limits.v_max).min(limits.v_max);
        let omega = self.omega.max(-limits.omega_max).min(limits.omega_max);
        let changed = v != self.v || omega != self.omega;
        (VelocityCommand { v, omega }, changed)
    }

    pub fn zero() -> Self {
        VelocityCommand { v: S::zero(), omega: S::zero() }
    }
}

/// Advance a pose by one exact circular-arc step.
///
/// The closed form makes the integrator step-size independent: n steps of
/// `dt` land exactly where one step of `n*dt` does, so simulation results do
/// not depend on the control rate. Returns the new pose and whether the
/// command had to be clamped into the limits.
pub fn step_kinematics<S: Real>(
    pose: Pose<S>,
    cmd: VelocityCommand<S>,
    limits: &VelocityLimits<S>,
    dt: S,
) -> (Pose<S>, bool) {
    debug_assert!(dt > S::zero());
    let (cmd, clamped) = cmd.clamped(limits);
    let next = if cmd.omega.abs() < S::val(1e-9) {
        Pose::new(
            pose.x + cmd.v * dt * pose.theta.cos(),
            pose.y + cmd.v * dt * pose.theta.sin(),
            pose.theta,
        )
    } else {
        let radius = cmd.v / cmd.omega;
        let theta_next = pose.theta + cmd.omega * dt;
        Pose {
            x: pose.x + radius * (theta_next.sin() - pose.theta.sin()),
            y: pose.y - radius * (theta_next.cos() - pose.theta.cos()),
            theta: normalize_angle(theta_next),
        }
    };
    (next, clamped)
}

//! Pure pursuit path tracking with speed-proportional look-ahead.

use thiserror::Error;

use crate::geom::Pose;
use crate::kinematics::{VelocityCommand, VelocityLimits};
use crate::scalar::Real;
use crate::world::Cell;

#[derive(Debug, Error, PartialEq)]
pub enum TrackerError {
    #[error("cannot track an empty path")]
    EmptyPath,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig<S> {
    /// Seconds of travel the look-ahead point sits ahead of the robot.
    pub lookahead_gain: S,
    pub lookahead_min: S,
    pub lookahead_max: S,
    pub v_max: S,
    pub omega_max: S,
    pub goal_tolerance: S,
}

impl<S: Real> Default for TrackerConfig<S> {
    fn default() -> Self {
        TrackerConfig {
            lookahead_gain: S::one(),
            lookahead_min: S::half(),
            lookahead_max: S::val(3.0),
            v_max: S::val(1.5),
            omega_max: S::val(1.57),
            goal_tolerance: S::val(0.2),
        }
    }
}

impl<S: Real> TrackerConfig<S> {
    pub fn limits(&self) -> VelocityLimits<S> {
        VelocityLimits { v_max: self.v_max, omega_max: self.omega_max }
    }
}

/// Speed-proportional look-ahead distance, clamped into its band.
pub fn compute_lookahead<S: Real>(cfg: &TrackerConfig<S>, current_v: S) -> S {
    (cfg.lookahead_gain * current_v).max(cfg.lookahead_min).min(cfg.lookahead_max)
}

/// A polyline to follow, with cumulative arc length and a monotone progress
/// index so the look-ahead search never snaps backwards onto passed
/// segments of a self-crossing path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedPath<S> {
    points: Vec<(S, S)>,
    cum: Vec<S>,
    progress: usize,
}

impl<S: Real> TrackedPath<S> {
    pub fn from_points(points: Vec<(S, S)>) -> Result<Self, TrackerError> {
        if points.is_empty() {
            return Err(TrackerError::EmptyPath);
        }
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = S::zero();
        cum.push(acc);
        for pair in points.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            acc += (x1 - x0).hypot(y1 - y0);
            cum.push(acc);
        }
        Ok(TrackedPath { points, cum, progress: 0 })
    }

    /// Build from grid cells, converting cell indices to center coordinates.
    pub fn from_cells(cells: &[Cell], cell_size: S) -> Result<Self, TrackerError> {
        let half = cell_size * S::half();
        let points = cells
            .iter()
            .map(|&(ix, iy)| {
                (S::from_count(ix) * cell_size + half, S::from_count(iy) * cell_size + half)
            })
            .collect();
        Self::from_points(points)
    }

    pub fn final_point(&self) -> (S, S) {
        *self.points.last().unwrap()
    }

    pub fn total_length(&self) -> S {
        *self.cum.last().unwrap()
    }

    pub fn progress_index(&self) -> usize {
        self.progress
    }

    pub fn points(&self) -> &[(S, S)] {
        &self.points
    }

    /// Arc-length position of the path point closest to `pose`, restricted
    /// to segments at or after the progress index. Advances the progress
    /// index to the segment containing that closest point.
    fn project_progress(&mut self, pose: &Pose<S>) -> S {
        if self.points.len() == 1 {
            return S::zero();
        }
        let mut best_s = self.cum[self.progress];
        let mut best_d2 = S::infinity();
        let mut best_seg = self.progress;
        for seg in self.progress..self.points.len() - 1 {
            let (x0, y0) = self.points[seg];
            let (x1, y1) = self.points[seg + 1];
            let (dx, dy) = (x1 - x0, y1 - y0);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > S::zero() {
                (((pose.x - x0) * dx + (pose.y - y0) * dy) / len2)
                    .max(S::zero())
                    .min(S::one())
            } else {
                S::zero()
            };
            let px = x0 + dx * t;
            let py = y0 + dy * t;
            let d2 = (pose.x - px) * (pose.x - px) + (pose.y - py) * (pose.y - py);
            if d2 < best_d2 {
                best_d2 = d2;
                best_seg = seg;
                best_s = self.cum[seg] + len2.sqrt() * t;
            }
        }
        self.progress = self.progress.max(best_seg);
        best_s
    }

    /// The look-ahead target: the path point at arc distance `l_d` beyond
    /// the closest point to the robot, or the final waypoint when the path
    /// ends sooner.
    pub fn lookahead_point(&mut self, pose: &Pose<S>, l_d: S) -> (S, S) {
        debug_assert!(l_d > S::zero());
        let s = self.project_progress(pose) + l_d;
        if s >= self.total_length() {
            return self.final_point();
        }
        // Find the segment containing arc length s (cum is non-decreasing).
        let mut seg = self.progress;
        while seg + 1 < self.cum.len() && self.cum[seg + 1] < s {
            seg += 1;
        }
        let (x0, y0) = self.points[seg];
        let (x1, y1) = self.points[seg + 1];
        let seg_len = self.cum[seg + 1] - self.cum[seg];
        if seg_len <= S::zero() {
            return self.points[seg + 1];
        }
        let t = (s - self.cum[seg]) / seg_len;
        (x0 + (x1 - x0) * t, y0 + (y1 - y0) * t)
    }
}

/// The pure pursuit steering law.
///
/// In the robot frame with the target at `(x_l, y_l)` and `L = |target|`,
/// the commanded curvature is `kappa = 2*y_l / L^2`. Speed holds `v_max`
/// and tapers linearly inside `2*goal_tolerance` of the final waypoint
/// (`dist_to_goal`). Targets more than 90 degrees off the heading trigger a
/// rotate-in-place recovery instead of an ill-conditioned arc.
pub fn pursuit_command<S: Real>(
    pose: &Pose<S>,
    target: (S, S),
    cfg: &TrackerConfig<S>,
    _current_v: S,
    dist_to_goal: S,
) -> VelocityCommand<S> {
    let (x_l, y_l) = pose.to_local(target.0, target.1);
    let l2 = x_l * x_l + y_l * y_l;
    if l2.sqrt() < S::val(1e-6) {
        return VelocityCommand::zero();
    }
    let heading_error = y_l.atan2(x_l);
    if heading_error.abs() > S::FRAC_PI_2() {
        let omega = if heading_error >= S::zero() { cfg.omega_max } else { -cfg.omega_max };
        return VelocityCommand::new(S::zero(), omega);
    }
    let taper = S::two() * cfg.goal_tolerance;
    let v = if dist_to_goal < taper { cfg.v_max * dist_to_goal / taper } else { cfg.v_max };
    let kappa = S::two() * y_l / l2;
    let omega = (kappa * v).max(-cfg.omega_max).min(cfg.omega_max);
    VelocityCommand::new(v, omega)
}

/// Closed-loop tracker: owns the path progress state and feeds the last
/// commanded speed back as the speed estimate for the look-ahead.
#[derive(Debug, Clone)]
pub struct PurePursuit<S> {
    cfg: TrackerConfig<S>,
    path: TrackedPath<S>,
    last_v: S,
}

impl<S: Real> PurePursuit<S> {
    pub fn new(cfg: TrackerConfig<S>, path: TrackedPath<S>) -> Self {
        PurePursuit { cfg, path, last_v: S::zero() }
    }

    pub fn step(&mut self, pose: &Pose<S>) -> VelocityCommand<S> {
        let l_d = compute_lookahead(&self.cfg, self.last_v);
        let target = self.path.lookahead_point(pose, l_d);
        let goal = self.path.final_point();
        let dist_to_goal = (pose.x - goal.0).hypot(pose.y - goal.1);
        let cmd = pursuit_command(pose, target, &self.cfg, self.last_v, dist_to_goal);
        self.last_v = cmd.v;
        cmd
    }

    pub fn goal_reached(&self, pose: &Pose<S>) -> bool {
        let goal = self.path.final_point();
        (pose.x - goal.0).hypot(pose.y - goal.1) <= self.cfg.goal_tolerance
    }

    pub fn path(&self) -> &TrackedPath<S> {
        &self.path
    }

    pub fn config(&self) -> &TrackerConfig<S> {
        &self.cfg
    }
}

// Heading error vs curvature identity used by the steering law:
// with alpha = atan2(y_l, x_l), kappa = 2*y_l/L^2 == 2*sin(alpha)/L.

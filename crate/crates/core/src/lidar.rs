//! Raycast LiDAR model over the ground-truth grid.

use thiserror::Error;

use crate::geom::Pose;
use crate::scalar::Real;
use crate::world::WorldGrid;

#[derive(Debug, Error, PartialEq)]
pub enum ScanError {
    #[error("scan origin ({x}, {y}) lies outside the world")]
    OutOfBounds { x: f64, y: f64 },
    #[error("scan origin ({x}, {y}) lies inside an occupied cell")]
    InCollision { x: f64, y: f64 },
}

/// One beam of a scan. `bearing` is a world-frame angle; the sensor is
/// omnidirectional, so beams do not rotate with the robot heading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beam<S> {
    pub bearing: S,
    pub range: S,
    pub hit: bool,
}

/// A full sweep from one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarScan<S> {
    pub origin: Pose<S>,
    pub beams: Vec<Beam<S>>,
    pub max_range: S,
}

/// Cast `n_beams` uniformly spaced rays on `[0, 2*pi)` and report the
/// distance to the first occupied-cell boundary, capped at `max_range`.
pub fn simulate_scan<S: Real>(
    world: &WorldGrid<S>,
    pose: Pose<S>,
    n_beams: usize,
    max_range: S,
) -> Result<LidarScan<S>, ScanError> {
    debug_assert!(n_beams >= 4);
    debug_assert!(max_range > S::zero());
    let origin_cell = world.cell_of(pose.x, pose.y).ok_or(ScanError::OutOfBounds {
        x: pose.x.to_f64().unwrap_or(f64::NAN),
        y: pose.y.to_f64().unwrap_or(f64::NAN),
    })?;
    if world.is_occupied(origin_cell) {
        return Err(ScanError::InCollision {
            x: pose.x.to_f64().unwrap_or(f64::NAN),
            y: pose.y.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut beams = Vec::with_capacity(n_beams);
    let step = S::TAU() / S::from_count(n_beams);
    for k in 0..n_beams {
        let bearing = step * S::from_count(k);
        let (range, hit) = cast_ray(world, pose.x, pose.y, bearing, max_range);
        beams.push(Beam { bearing, range, hit });
    }
    Ok(LidarScan { origin: pose, beams, max_range })
}

/// Amanatides-Woo traversal from an arbitrary in-grid point. Returns the
/// distance at which the ray enters the first occupied cell, or `max_range`
/// with `hit = false` if it leaves the grid or runs out of range first.
pub(crate) fn cast_ray<S: Real>(
    world: &WorldGrid<S>,
    x: S,
    y: S,
    bearing: S,
    max_range: S,
) -> (S, bool) {
    let cs = world.cell_size();
    let (sin, cos) = bearing.sin_cos();
    let (mut ix, mut iy) = world.cell_of(x, y).expect("ray origin inside grid");

    // Distance along the ray to the next vertical / horizontal cell boundary
    // and the per-cell increments.
    let huge = S::val(f64::MAX / 4.0);
    let (step_x, mut t_max_x, t_delta_x) = if cos > S::zero() {
        let bx = S::from_count(ix + 1) * cs;
        (1isize, (bx - x) / cos, cs / cos)
    } else if cos < S::zero() {
        let bx = S::from_count(ix) * cs;
        (-1isize, (bx - x) / cos, -(cs / cos))
    } else {
        (0isize, huge, huge)
    };
    let (step_y, mut t_max_y, t_delta_y) = if sin > S::zero() {
        let by = S::from_count(iy + 1) * cs;
        (1isize, (by - y) / sin, cs / sin)
    } else if sin < S::zero() {
        let by = S::from_count(iy) * cs;
        (-1isize, (by - y) / sin, -(cs / sin))
    } else {
        (0isize, huge, huge)
    };

    loop {
        let t = if t_max_x < t_max_y { t_max_x } else { t_max_y };
        if t > max_range {
            return (max_range, false);
        }
        if t_max_x < t_max_y {
            t_max_x += t_delta_x;
            let nx = ix as isize + step_x;
            if nx < 0 || nx as usize >= world.width() {
                return (max_range, false);
            }
            ix = nx as usize;
        } else {
            t_max_y += t_delta_y;
            let ny = iy as isize + step_y;
            if ny < 0 || ny as usize >= world.height() {
                return (max_range, false);
            }
            iy = ny as usize;
        }
        if world.is_occupied((ix, iy)) {
            return (t, true);
        }
    }
}

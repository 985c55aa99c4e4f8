//! Incremental tri-state occupancy mapping and frontier extraction.

use thiserror::Error;

use crate::lidar::LidarScan;
use crate::scalar::Real;
use crate::world::{Cell, WorldGrid};

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("scan origin ({x}, {y}) outside map bounds")]
    OriginOutOfBounds { x: f64, y: f64 },
    #[error("map and world geometry differ: {reason}")]
    GeometryMismatch { reason: String },
    #[error("line {line}: bad snapshot: {reason}")]
    Snapshot { line: usize, reason: String },
}

/// Knowledge state of one map cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

/// A free cell bordering unknown space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierCell<S> {
    pub cell: Cell,
    /// World coordinates of the cell center.
    pub center: (S, S),
}

/// Coverage accounting against the ground-truth world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageReport<S> {
    pub explored_area: S,
    pub explored_volume: S,
    pub explored_pct: S,
}

/// The robot's accumulated knowledge of the world. Knowledge is monotone:
/// a cell that became free or occupied never reverts to unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid<S> {
    width: usize,
    height: usize,
    cell_size: S,
    origin: (S, S),
    states: Vec<CellState>,
}

impl<S: Real> OccupancyGrid<S> {
    pub fn new_unknown(width: usize, height: usize, cell_size: S, origin: (S, S)) -> Self {
        OccupancyGrid {
            width,
            height,
            cell_size,
            origin,
            states: vec![CellState::Unknown; width * height],
        }
    }

    /// An all-unknown map with the same extent and resolution as `world`.
    pub fn matching_world(world: &WorldGrid<S>) -> Self {
        Self::new_unknown(world.width(), world.height(), world.cell_size(), (S::zero(), S::zero()))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> S {
        self.cell_size
    }

    pub fn origin(&self) -> (S, S) {
        self.origin
    }

    #[inline]
    pub fn state(&self, cell: Cell) -> CellState {
        self.states[cell.1 * self.width + cell.0]
    }

    #[inline]
    pub fn is_free(&self, cell: Cell) -> bool {
        self.state(cell) == CellState::Free
    }

    #[inline]
    pub fn is_unknown(&self, cell: Cell) -> bool {
        self.state(cell) == CellState::Unknown
    }

    #[inline]
    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.state(cell) == CellState::Occupied
    }

    #[inline]
    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.0 < self.width && cell.1 < self.height
    }

    pub fn known_count(&self) -> usize {
        self.states.iter().filter(|s| **s != CellState::Unknown).count()
    }

    /// Cell containing a world point, if inside the map.
    pub fn cell_of(&self, x: S, y: S) -> Option<Cell> {
        let rx = x - self.origin.0;
        let ry = y - self.origin.1;
        if rx < S::zero() || ry < S::zero() {
            return None;
        }
        let ix = (rx / self.cell_size).floor().to_usize()?;
        let iy = (ry / self.cell_size).floor().to_usize()?;
        if ix < self.width && iy < self.height {
            Some((ix, iy))
        } else {
            None
        }
    }

    /// World coordinates of a cell center.
    pub fn cell_center(&self, cell: Cell) -> (S, S) {
        let half = self.cell_size * S::half();
        (
            self.origin.0 + S::from_count(cell.0) * self.cell_size + half,
            self.origin.1 + S::from_count(cell.1) * self.cell_size + half,
        )
    }

    /// Fold one scan into the map. Cells a beam traverses before its hit
    /// become free, the hit cell becomes occupied, and when beams of the same
    /// scan disagree the occupied marking wins. Never un-knows a cell.
    pub fn integrate_scan(&mut self, scan: &LidarScan<S>) -> Result<(), MapError> {
        let origin = scan.origin;
        if self.cell_of(origin.x, origin.y).is_none() {
            return Err(MapError::OriginOutOfBounds {
                x: origin.x.to_f64().unwrap_or(f64::NAN),
                y: origin.y.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut freed: Vec<Cell> = Vec::new();
        let mut hits: Vec<Cell> = Vec::new();
        for beam in &scan.beams {
            self.trace_beam(origin.x, origin.y, beam.bearing, beam.range, beam.hit, &mut freed, &mut hits);
        }
        for cell in freed {
            let s = &mut self.states[cell.1 * self.width + cell.0];
            if *s == CellState::Unknown {
                *s = CellState::Free;
            }
        }
        for cell in hits {
            self.states[cell.1 * self.width + cell.0] = CellState::Occupied;
        }
        Ok(())
    }

    /// Walk one beam, collecting traversed cells and the terminal hit cell.
    /// Cells the beam crosses completely become free; the partial cell a
    /// truncated beam ends in counts only when penetrated at least half a
    /// cell, which keeps the revealed area honest at the range boundary.
    fn trace_beam(
        &self,
        x: S,
        y: S,
        bearing: S,
        range: S,
        hit: bool,
        freed: &mut Vec<Cell>,
        hits: &mut Vec<Cell>,
    ) {
        let cs = self.cell_size;
        let (sin, cos) = bearing.sin_cos();
        let (mut ix, mut iy) = match self.cell_of(x, y) {
            Some(c) => c,
            None => return,
        };

        let huge = S::val(f64::MAX / 4.0);
        let rel_x = x - self.origin.0;
        let rel_y = y - self.origin.1;
        let (step_x, mut t_max_x, t_delta_x) = if cos > S::zero() {
            ((1isize), (S::from_count(ix + 1) * cs - rel_x) / cos, cs / cos)
        } else if cos < S::zero() {
            ((-1isize), (S::from_count(ix) * cs - rel_x) / cos, -(cs / cos))
        } else {
            (0isize, huge, huge)
        };
        let (step_y, mut t_max_y, t_delta_y) = if sin > S::zero() {
            ((1isize), (S::from_count(iy + 1) * cs - rel_y) / sin, cs / sin)
        } else if sin < S::zero() {
            ((-1isize), (S::from_count(iy) * cs - rel_y) / sin, -(cs / sin))
        } else {
            (0isize, huge, huge)
        };

        let mut t_entry = S::zero();
        loop {
            let t_exit = if t_max_x < t_max_y { t_max_x } else { t_max_y };
            if t_exit > range {
                // The beam ends inside the current cell.
                if !hit && range - t_entry >= cs * S::half() {
                    freed.push((ix, iy));
                }
                break;
            }
            freed.push((ix, iy));
            t_entry = t_exit;
            if t_max_x < t_max_y {
                t_max_x += t_delta_x;
                let nx = ix as isize + step_x;
                if nx < 0 || nx as usize >= self.width {
                    return;
                }
                ix = nx as usize;
            } else {
                t_max_y += t_delta_y;
                let ny = iy as isize + step_y;
                if ny < 0 || ny as usize >= self.height {
                    return;
                }
                iy = ny as usize;
            }
        }

        // Terminal occupied cell: the cell just past the boundary at t = range.
        if hit {
            let eps = cs * S::val(1e-6);
            let end_x = x + (range + eps) * cos;
            let end_y = y + (range + eps) * sin;
            if let Some(cell) = self.cell_of(end_x, end_y) {
                hits.push(cell);
            }
        }
    }

    /// All free cells with at least one unknown 4-neighbor, sorted by
    /// `(iy, ix)` so downstream sampling is deterministic.
    pub fn detect_frontiers(&self) -> Vec<FrontierCell<S>> {
        let mut out = Vec::new();
        for iy in 0..self.height {
            for ix in 0..self.width {
                if self.states[iy * self.width + ix] != CellState::Free {
                    continue;
                }
                let unknown_neighbor = (ix > 0 && self.is_unknown((ix - 1, iy)))
                    || (ix + 1 < self.width && self.is_unknown((ix + 1, iy)))
                    || (iy > 0 && self.is_unknown((ix, iy - 1)))
                    || (iy + 1 < self.height && self.is_unknown((ix, iy + 1)));
                if unknown_neighbor {
                    out.push(FrontierCell { cell: (ix, iy), center: self.cell_center((ix, iy)) });
                }
            }
        }
        out
    }

    /// Coverage of the world's reachable free space. `explored_pct` is the
    /// share of ground-truth free cells (4-connected to the start) that are
    /// known in this map; area and volume follow from the same cell count.
    pub fn coverage(
        &self,
        world: &WorldGrid<S>,
        nominal_height: S,
    ) -> Result<CoverageReport<S>, MapError> {
        if self.width != world.width() || self.height != world.height() {
            return Err(MapError::GeometryMismatch {
                reason: format!(
                    "map {}x{} vs world {}x{}",
                    self.width,
                    self.height,
                    world.width(),
                    world.height()
                ),
            });
        }
        if self.cell_size != world.cell_size() {
            return Err(MapError::GeometryMismatch { reason: "cell_size differs".into() });
        }
        let reachable = world.reachable_free_mask();
        let mut total = 0usize;
        let mut known = 0usize;
        for (idx, r) in reachable.iter().enumerate() {
            if *r {
                total += 1;
                if self.states[idx] != CellState::Unknown {
                    known += 1;
                }
            }
        }
        let cell_area = self.cell_size * self.cell_size;
        let explored_area = S::from_count(known) * cell_area;
        let pct = if total == 0 {
            S::zero()
        } else {
            S::val(100.0) * S::from_count(known) / S::from_count(total)
        };
        Ok(CoverageReport {
            explored_area,
            explored_volume: explored_area * nominal_height,
            explored_pct: pct,
        })
    }

    /// Text snapshot in the world-file grid format, with `?` for unknown.
    pub fn snapshot(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * (self.height + 1));
        out.push_str(&format!(
            "{} {} {}\n",
            self.width,
            self.height,
            self.cell_size.to_f64().unwrap_or(f64::NAN)
        ));
        for row in (0..self.height).rev() {
            for ix in 0..self.width {
                out.push(match self.states[row * self.width + ix] {
                    CellState::Unknown => '?',
                    CellState::Free => '.',
                    CellState::Occupied => '#',
                });
            }
            out.push('\n');
        }
        out
    }

    /// Parse a snapshot produced by [`OccupancyGrid::snapshot`]. Mostly a
    /// test aid: lets suites describe map states as ASCII art.
    pub fn from_snapshot(text: &str) -> Result<Self, MapError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| MapError::Snapshot { line: 1, reason: "empty".into() })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(MapError::Snapshot { line: 1, reason: "bad header".into() });
        }
        let width: usize = fields[0]
            .parse()
            .map_err(|_| MapError::Snapshot { line: 1, reason: "bad width".into() })?;
        let height: usize = fields[1]
            .parse()
            .map_err(|_| MapError::Snapshot { line: 1, reason: "bad height".into() })?;
        let cell_size_f: f64 = fields[2]
            .parse()
            .map_err(|_| MapError::Snapshot { line: 1, reason: "bad cell_size".into() })?;
        let mut grid =
            OccupancyGrid::new_unknown(width, height, S::val(cell_size_f), (S::zero(), S::zero()));
        let mut rows = 0usize;
        for (idx, raw) in lines {
            let line = idx + 1;
            let row = raw.strip_suffix('\r').unwrap_or(raw);
            if rows == height {
                if row.is_empty() {
                    continue;
                }
                return Err(MapError::Snapshot { line, reason: "trailing content".into() });
            }
            if row.chars().count() != width {
                return Err(MapError::Snapshot { line, reason: "ragged row".into() });
            }
            let iy = height - 1 - rows;
            for (ix, ch) in row.chars().enumerate() {
                grid.states[iy * width + ix] = match ch {
                    '?' => CellState::Unknown,
                    '.' => CellState::Free,
                    '#' => CellState::Occupied,
                    other => {
                        return Err(MapError::Snapshot {
                            line,
                            reason: format!("unknown char {other:?}"),
                        })
                    }
                };
            }
            rows += 1;
        }
        if rows != height {
            return Err(MapError::Snapshot { line: rows + 1, reason: "missing rows".into() });
        }
        Ok(grid)
    }

    /// Direct cell write for tests and scripted scenarios.
    pub fn set_state(&mut self, cell: Cell, state: CellState) {
        self.states[cell.1 * self.width + cell.0] = state;
    }
}

//! 8-connected grid path planning over the known map.
//!
//! Path costs are kept as exact `orth + diag*sqrt(2)` step-count pairs and
//! only converted to meters at the end. Cost comparison is exact integer
//! arithmetic, so equal-cost ties are real ties, search is deterministic,
//! and two searches that find the same optimum report bit-identical lengths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::map::{CellState, OccupancyGrid};
use crate::scalar::Real;
use crate::world::Cell;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("start cell ({0}, {1}) is not traversable (occupied, unknown or too close to an obstacle)")]
    StartBlocked(usize, usize),
}

/// Exact 8-connected path cost: `orth` unit steps plus `diag` sqrt(2) steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepCost {
    pub orth: u32,
    pub diag: u32,
}

impl StepCost {
    pub const ZERO: StepCost = StepCost { orth: 0, diag: 0 };

    #[inline]
    pub fn plus_orth(self) -> StepCost {
        StepCost { orth: self.orth + 1, diag: self.diag }
    }

    #[inline]
    pub fn plus_diag(self) -> StepCost {
        StepCost { orth: self.orth, diag: self.diag + 1 }
    }

    #[inline]
    pub fn add(self, other: StepCost) -> StepCost {
        StepCost { orth: self.orth + other.orth, diag: self.diag + other.diag }
    }

    /// Octile-distance lower bound between two cells.
    pub fn octile(a: Cell, b: Cell) -> StepCost {
        let dx = a.0.abs_diff(b.0) as u32;
        let dy = a.1.abs_diff(b.1) as u32;
        StepCost { orth: dx.abs_diff(dy), diag: dx.min(dy) }
    }

    /// Metric length of the path.
    pub fn meters<S: Real>(self, cell_size: S) -> S {
        cell_size * (S::from_count(self.orth as usize)
            + S::SQRT_2() * S::from_count(self.diag as usize))
    }
}

impl Ord for StepCost {
    /// Exact comparison of `orth + diag*sqrt(2)` values. Because sqrt(2) is
    /// irrational, distinct pairs never compare equal.
    fn cmp(&self, other: &Self) -> Ordering {
        let do_ = self.orth as i64 - other.orth as i64;
        let dd = self.diag as i64 - other.diag as i64;
        match (do_.signum(), dd.signum()) {
            (0, 0) => Ordering::Equal,
            (a, b) if a >= 0 && b >= 0 => Ordering::Greater,
            (a, b) if a <= 0 && b <= 0 => Ordering::Less,
            _ => {
                // Opposite signs: compare do_^2 vs 2*dd^2 with the sign of do_.
                let lhs = do_ * do_;
                let rhs = 2 * dd * dd;
                if do_ > 0 {
                    lhs.cmp(&rhs)
                } else {
                    rhs.cmp(&lhs)
                }
            }
        }
    }
}

impl PartialOrd for StepCost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Known-free cells shrunk by the robot radius: a cell is traversable when it
/// is mapped free and no occupied cell center lies within `robot_radius` of
/// its center.
#[derive(Debug, Clone)]
pub struct Traversability {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
}

impl Traversability {
    pub fn new<S: Real>(map: &OccupancyGrid<S>, robot_radius: S) -> Self {
        let width = map.width();
        let height = map.height();
        let mut blocked = vec![false; width * height];
        for iy in 0..height {
            for ix in 0..width {
                if map.state((ix, iy)) != CellState::Free {
                    blocked[iy * width + ix] = true;
                }
            }
        }
        // Inflate occupied cells by the robot radius.
        let cs = map.cell_size();
        let r_cells = (robot_radius / cs).floor().to_i64().unwrap_or(0) + 1;
        let mut disk: Vec<(i64, i64)> = Vec::new();
        for dy in -r_cells..=r_cells {
            for dx in -r_cells..=r_cells {
                let d2 = S::from_f64((dx * dx + dy * dy) as f64).unwrap() * cs * cs;
                if d2 <= robot_radius * robot_radius {
                    disk.push((dx, dy));
                }
            }
        }
        for iy in 0..height {
            for ix in 0..width {
                if !map.is_occupied((ix, iy)) {
                    continue;
                }
                for &(dx, dy) in &disk {
                    let nx = ix as i64 + dx;
                    let ny = iy as i64 + dy;
                    if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                        blocked[ny as usize * width + nx as usize] = true;
                    }
                }
            }
        }
        Traversability { width, height, blocked }
    }

    #[inline]
    pub fn is_traversable(&self, cell: Cell) -> bool {
        cell.0 < self.width && cell.1 < self.height && !self.blocked[cell.1 * self.width + cell.0]
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Nearest traversable cell to `cell` within `max_cells` (Chebyshev),
    /// by Euclidean center distance with `(iy, ix)` tie-break.
    pub fn nearest_traversable(&self, cell: Cell, max_cells: usize) -> Option<Cell> {
        let mut best: Option<(i64, Cell)> = None;
        let r = max_cells as i64;
        for dy in -r..=r {
            for dx in -r..=r {
                let nx = cell.0 as i64 + dx;
                let ny = cell.1 as i64 + dy;
                if nx < 0 || ny < 0 || nx as usize >= self.width || ny as usize >= self.height {
                    continue;
                }
                let cand = (nx as usize, ny as usize);
                if !self.is_traversable(cand) {
                    continue;
                }
                let d2 = dx * dx + dy * dy;
                let better = match best {
                    None => true,
                    Some((bd2, bc)) => {
                        d2 < bd2 || (d2 == bd2 && (cand.1, cand.0) < (bc.1, bc.0))
                    }
                };
                if better {
                    best = Some((d2, cand));
                }
            }
        }
        best.map(|(_, c)| c)
    }
}

/// Fixed neighbor visit order keeps parent selection deterministic.
const NEIGHBORS: [(i64, i64, bool); 8] = [
    (0, 1, false),
    (1, 0, false),
    (0, -1, false),
    (-1, 0, false),
    (1, 1, true),
    (1, -1, true),
    (-1, -1, true),
    (-1, 1, true),
];

#[derive(Debug, Clone, PartialEq)]
pub struct CellPath {
    /// Consecutive 8-adjacent traversable cells, start and goal inclusive.
    pub cells: Vec<Cell>,
    pub cost: StepCost,
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct QueueEntry {
    f: StepCost,
    h: StepCost,
    idx: usize,
    g: StepCost,
}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the smallest f pops first.
        other
            .f
            .cmp(&self.f)
            .then_with(|| other.h.cmp(&self.h))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* between two cells. Returns `None` when disconnected.
pub fn astar(trav: &Traversability, from: Cell, to: Cell) -> Option<CellPath> {
    if !trav.is_traversable(from) || !trav.is_traversable(to) {
        return None;
    }
    let width = trav.width;
    let n = width * trav.height;
    let idx_of = |c: Cell| c.1 * width + c.0;
    let mut g: Vec<Option<StepCost>> = vec![None; n];
    let mut parent: Vec<usize> = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    let start_idx = idx_of(from);
    g[start_idx] = Some(StepCost::ZERO);
    heap.push(QueueEntry {
        f: StepCost::octile(from, to),
        h: StepCost::octile(from, to),
        idx: start_idx,
        g: StepCost::ZERO,
    });
    while let Some(entry) = heap.pop() {
        if closed[entry.idx] {
            continue;
        }
        closed[entry.idx] = true;
        let cell = (entry.idx % width, entry.idx / width);
        if cell == to {
            let mut cells = vec![cell];
            let mut cur = entry.idx;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                cells.push((cur % width, cur / width));
            }
            cells.reverse();
            return Some(CellPath { cells, cost: entry.g });
        }
        for &(dx, dy, diag) in &NEIGHBORS {
            let nx = cell.0 as i64 + dx;
            let ny = cell.1 as i64 + dy;
            if nx < 0 || ny < 0 {
                continue;
            }
            let ncell = (nx as usize, ny as usize);
            if !trav.is_traversable(ncell) {
                continue;
            }
            let nidx = idx_of(ncell);
            if closed[nidx] {
                continue;
            }
            let ng = if diag { entry.g.plus_diag() } else { entry.g.plus_orth() };
            if g[nidx].map_or(true, |old| ng < old) {
                g[nidx] = Some(ng);
                parent[nidx] = entry.idx;
                let h = StepCost::octile(ncell, to);
                heap.push(QueueEntry { f: ng.add(h), h, idx: nidx, g: ng });
            }
        }
    }
    None
}

/// Shortest-path distances and parents from one source to every reachable
/// cell. Shares the exact cost arithmetic with [`astar`].
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    pub dist: Vec<Option<StepCost>>,
    parent: Vec<usize>,
    source: Cell,
}

impl DistanceField {
    pub fn distance_to(&self, cell: Cell) -> Option<StepCost> {
        self.dist[cell.1 * self.width + cell.0]
    }

    pub fn source(&self) -> Cell {
        self.source
    }

    /// Reconstruct the path from the source to `cell`, if reached.
    pub fn path_to(&self, cell: Cell) -> Option<Vec<Cell>> {
        let mut idx = cell.1 * self.width + cell.0;
        self.dist[idx]?;
        let mut cells = vec![cell];
        while self.parent[idx] != usize::MAX {
            idx = self.parent[idx];
            cells.push((idx % self.width, idx / self.width));
        }
        cells.reverse();
        Some(cells)
    }
}

/// Dijkstra flood from `source` over the traversable cells.
pub fn distance_field(trav: &Traversability, source: Cell) -> Option<DistanceField> {
    if !trav.is_traversable(source) {
        return None;
    }
    let width = trav.width;
    let n = width * trav.height;
    let idx_of = |c: Cell| c.1 * width + c.0;
    let mut dist: Vec<Option<StepCost>> = vec![None; n];
    let mut parent: Vec<usize> = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[idx_of(source)] = Some(StepCost::ZERO);
    heap.push(QueueEntry {
        f: StepCost::ZERO,
        h: StepCost::ZERO,
        idx: idx_of(source),
        g: StepCost::ZERO,
    });
    while let Some(entry) = heap.pop() {
        if closed[entry.idx] {
            continue;
        }
        closed[entry.idx] = true;
        let cell = (entry.idx % width, entry.idx / width);
        for &(dx, dy, diag) in &NEIGHBORS {
            let nx = cell.0 as i64 + dx;
            let ny = cell.1 as i64 + dy;
            if nx < 0 || ny < 0 {
                continue;
            }
            let ncell = (nx as usize, ny as usize);
            if !trav.is_traversable(ncell) {
                continue;
            }
            let nidx = idx_of(ncell);
            if closed[nidx] {
                continue;
            }
            let ng = if diag { entry.g.plus_diag() } else { entry.g.plus_orth() };
            if dist[nidx].map_or(true, |old| ng < old) {
                dist[nidx] = Some(ng);
                parent[nidx] = entry.idx;
                heap.push(QueueEntry { f: ng, h: StepCost::ZERO, idx: nidx, g: ng });
            }
        }
    }
    Some(DistanceField { width, dist, parent, source })
}

/// Shortest path between two cells of `map` with obstacle inflation.
///
/// `Ok(None)` means the goal is unreachable; an untraversable start is an
/// error because the caller's own position should always have clearance.
pub fn shortest_path<S: Real>(
    map: &OccupancyGrid<S>,
    from: Cell,
    to: Cell,
    robot_radius: S,
) -> Result<Option<CellPath>, PathError> {
    let trav = Traversability::new(map, robot_radius);
    if !trav.is_traversable(from) {
        return Err(PathError::StartBlocked(from.0, from.1));
    }
    Ok(astar(&trav, from, to))
}

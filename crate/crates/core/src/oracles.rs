//! Independent reference implementations for the oracle-equivalence suites.
//!
//! Everything here recomputes results from first principles with different
//! algorithms and data layouts than the production code, so agreement is
//! evidence rather than tautology. Compiled only for tests (or the
//! `test-oracles` feature, which downstream test targets enable).

use std::collections::BTreeSet;

use crate::map::OccupancyGrid;
use crate::scalar::Real;
use crate::world::{Cell, WorldGrid};

/// Shortest 8-connected path cost as `(orth, diag)` step counts, found by a
/// heapless label-correcting sweep. `None` when unreachable.
pub fn dijkstra_cost(
    blocked: &dyn Fn(Cell) -> bool,
    width: usize,
    height: usize,
    from: Cell,
    to: Cell,
) -> Option<(u32, u32)> {
    if blocked(from) || blocked(to) {
        return None;
    }
    let value = |o: u32, d: u32| o as f64 + d as f64 * std::f64::consts::SQRT_2;
    let mut best: Vec<Option<(u32, u32)>> = vec![None; width * height];
    best[from.1 * width + from.0] = Some((0, 0));
    let mut changed = true;
    while changed {
        changed = false;
        for iy in 0..height {
            for ix in 0..width {
                let Some((o, d)) = best[iy * width + ix] else { continue };
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let nx = ix as i64 + dx;
                        let ny = iy as i64 + dy;
                        if nx < 0 || ny < 0 || nx as usize >= width || ny as usize >= height {
                            continue;
                        }
                        let ncell = (nx as usize, ny as usize);
                        if blocked(ncell) {
                            continue;
                        }
                        let cand = if dx != 0 && dy != 0 { (o, d + 1) } else { (o + 1, d) };
                        let idx = ncell.1 * width + ncell.0;
                        let improves = match best[idx] {
                            None => true,
                            Some((bo, bd)) => {
                                value(cand.0, cand.1) < value(bo, bd) - 1e-9
                            }
                        };
                        if improves {
                            best[idx] = Some(cand);
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    best[to.1 * width + to.0]
}

/// The frontier definition applied literally, cell by cell.
pub fn frontier_cells_by_definition<S: Real>(map: &OccupancyGrid<S>) -> Vec<Cell> {
    let mut out = Vec::new();
    for iy in 0..map.height() {
        for ix in 0..map.width() {
            if !map.is_free((ix, iy)) {
                continue;
            }
            let neighbors = [
                (ix.wrapping_sub(1), iy),
                (ix + 1, iy),
                (ix, iy.wrapping_sub(1)),
                (ix, iy + 1),
            ];
            if neighbors
                .iter()
                .any(|&(nx, ny)| nx < map.width() && ny < map.height() && map.is_unknown((nx, ny)))
            {
                out.push((ix, iy));
            }
        }
    }
    out
}

/// Fine-stepping ray march: walk the ray in `cell_size / 100` increments and
/// report the first sample inside an occupied cell.
pub fn ray_march<S: Real>(
    world: &WorldGrid<S>,
    x: S,
    y: S,
    bearing: S,
    max_range: S,
) -> (S, bool) {
    let step = world.cell_size() / S::val(100.0);
    let (sin, cos) = bearing.sin_cos();
    let mut t = step;
    while t <= max_range {
        let px = x + t * cos;
        let py = y + t * sin;
        match world.cell_of(px, py) {
            Some(cell) if world.is_occupied(cell) => return (t, true),
            Some(_) => {}
            None => return (max_range, false),
        }
        t += step;
    }
    (max_range, false)
}

/// Greedy maximum-coverage recomputed from the raw candidate sets each
/// round. Returns the indices picked, in order.
pub fn greedy_cover(
    unknown_sets: &[Vec<Cell>],
    frontier_sets: &[Vec<Cell>],
    min_gain: usize,
) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::new();
    let mut frontier_left: BTreeSet<Cell> =
        frontier_sets.iter().flatten().copied().collect();
    loop {
        let covered: BTreeSet<Cell> =
            picked.iter().flat_map(|&i| unknown_sets[i].iter().copied()).collect();
        let mut best: Option<(usize, usize)> = None;
        for (i, set) in unknown_sets.iter().enumerate() {
            if picked.contains(&i) {
                continue;
            }
            let marginal = set.iter().collect::<BTreeSet<_>>()
                .difference(&covered.iter().collect())
                .count();
            if best.map_or(true, |(bm, _)| marginal > bm) {
                best = Some((marginal, i));
            }
        }
        let Some((marginal, idx)) = best else { break };
        if marginal < min_gain.max(1) {
            break;
        }
        picked.push(idx);
        for f in &frontier_sets[idx] {
            frontier_left.remove(f);
        }
        if frontier_left.is_empty() {
            break;
        }
    }
    picked
}

/// Exact rational i64 fraction with positive denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Frac {
    num: i64,
    den: i64,
}

impl Frac {
    fn new(num: i64, den: i64) -> Self {
        debug_assert!(den != 0);
        if den < 0 {
            Frac { num: -num, den: -den }
        } else {
            Frac { num, den }
        }
    }

    fn lt(&self, other: &Frac) -> bool {
        self.num * other.den < other.num * self.den
    }

    fn max(self, other: Frac) -> Frac {
        if self.lt(&other) {
            other
        } else {
            self
        }
    }

    fn min(self, other: Frac) -> Frac {
        if other.lt(&self) {
            other
        } else {
            self
        }
    }
}

/// Does the open segment between the centers of `a` and `b` pass through the
/// open interior of `cell`? Exact integer arithmetic on doubled coordinates.
pub fn segment_crosses_cell_interior(a: Cell, b: Cell, cell: Cell) -> bool {
    let px = 2 * a.0 as i64 + 1;
    let py = 2 * a.1 as i64 + 1;
    let dx = 2 * (b.0 as i64 - a.0 as i64);
    let dy = 2 * (b.1 as i64 - a.1 as i64);
    let x0 = 2 * cell.0 as i64;
    let x1 = x0 + 2;
    let y0 = 2 * cell.1 as i64;
    let y1 = y0 + 2;

    let mut lo = Frac::new(0, 1);
    let mut hi = Frac::new(1, 1);
    for (d, p, b0, b1) in [(dx, px, x0, x1), (dy, py, y0, y1)] {
        if d == 0 {
            if p <= b0 || p >= b1 {
                return false;
            }
        } else {
            let t_a = Frac::new(b0 - p, d);
            let t_b = Frac::new(b1 - p, d);
            let (enter, exit) = if t_a.lt(&t_b) { (t_a, t_b) } else { (t_b, t_a) };
            lo = lo.max(enter);
            hi = hi.min(exit);
        }
    }
    lo.lt(&hi)
}

/// Line-of-sight by exhaustive per-cell interval tests: blocked when any
/// occupied cell's interior intersects the open segment.
pub fn visible_by_interval_test<S: Real>(map: &OccupancyGrid<S>, from: Cell, to: Cell) -> bool {
    let min_x = from.0.min(to.0);
    let max_x = from.0.max(to.0);
    let min_y = from.1.min(to.1);
    let max_y = from.1.max(to.1);
    for iy in min_y..=max_y {
        for ix in min_x..=max_x {
            let cell = (ix, iy);
            if cell == from || cell == to || !map.is_occupied(cell) {
                continue;
            }
            if segment_crosses_cell_interior(from, to, cell) {
                return false;
            }
        }
    }
    true
}

//! Local viewpoint planning inside a square horizon around the robot:
//! sample candidate viewpoints on frontier cells, score them by how much
//! unknown area they can see, pick a greedy covering subset and order it
//! into a short tour through known free space.

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::geom::Pose;
use crate::map::{FrontierCell, OccupancyGrid};
use crate::pathing::{astar, CellPath, StepCost, Traversability};
use crate::scalar::Real;
use crate::world::Cell;

/// Default cap on the number of candidate viewpoints per planning round.
pub const DEFAULT_CANDIDATE_CAP: usize = 40;

/// How far (in cells) a frontier sample may be displaced to find clearance.
const PROJECTION_RADIUS_CELLS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum GainError {
    #[error("viewpoint ({0}, {1}) is not on a known-free cell")]
    NotFree(usize, usize),
    #[error("viewpoint outside map bounds")]
    OutOfBounds,
}

/// Square planning region centered on the robot.
#[derive(Debug, Clone, Copy)]
pub struct LocalHorizon<S> {
    pub center: Pose<S>,
    pub half_side: S,
}

impl<S: Real> LocalHorizon<S> {
    pub fn new(center: Pose<S>, half_side: S) -> Self {
        debug_assert!(half_side > S::zero());
        LocalHorizon { center, half_side }
    }

    pub fn contains(&self, x: S, y: S) -> bool {
        (x - self.center.x).abs() <= self.half_side && (y - self.center.y).abs() <= self.half_side
    }
}

/// A candidate observation pose with its cached gain.
#[derive(Debug, Clone, PartialEq)]
pub struct Viewpoint<S> {
    pub pose: Pose<S>,
    pub cell: Cell,
    /// Number of unknown cells visible from here within the gain range.
    pub gain: usize,
    /// The unknown cells behind `gain`, in deterministic scan order.
    pub visible_unknown: Vec<Cell>,
    /// Frontier cells visible from here.
    pub covered: BTreeSet<Cell>,
}

/// Result of scoring a single pose.
#[derive(Debug, Clone, PartialEq)]
pub struct GainEval {
    pub gain: usize,
    pub visible_unknown: Vec<Cell>,
    pub covered: BTreeSet<Cell>,
}

/// Ordered viewpoint tour plus the stitched cell path realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPlan<S> {
    pub viewpoints: Vec<Viewpoint<S>>,
    /// Concatenated 8-connected path from the start through every viewpoint.
    pub path: Vec<Cell>,
    pub length: S,
    /// Viewpoints dropped because no path reached them.
    pub dropped: Vec<Viewpoint<S>>,
}

impl<S: Real> LocalPlan<S> {
    pub fn empty() -> Self {
        LocalPlan { viewpoints: Vec::new(), path: Vec::new(), length: S::zero(), dropped: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.viewpoints.is_empty()
    }
}

/// Exact line of sight between two cell centers: true when no occupied cell
/// interior lies strictly between them.
///
/// Works on doubled integer coordinates so boundary crossings compare
/// exactly; a ray through a lattice corner steps diagonally and does not
/// clip the two cells it merely touches.
pub fn line_of_sight<S: Real>(map: &OccupancyGrid<S>, from: Cell, to: Cell) -> bool {
    if from == to {
        return true;
    }
    let (mut ci, mut cj) = (from.0 as i64, from.1 as i64);
    let (bi, bj) = (to.0 as i64, to.1 as i64);
    let px = 2 * ci + 1;
    let py = 2 * cj + 1;
    let dx = 2 * (bi - ci);
    let dy = 2 * (bj - cj);
    let sx: i64 = dx.signum();
    let sy: i64 = dy.signum();

    // t to the next vertical / horizontal boundary as exact fractions
    // num/den with den == 0 meaning "never".
    let next_tx = |ci: i64| -> (i64, i64) {
        if sx == 0 {
            (1, 0)
        } else {
            let boundary = 2 * ci + if sx > 0 { 2 } else { 0 };
            ((boundary - px) * sx, dx * sx)
        }
    };
    let next_ty = |cj: i64| -> (i64, i64) {
        if sy == 0 {
            (1, 0)
        } else {
            let boundary = 2 * cj + if sy > 0 { 2 } else { 0 };
            ((boundary - py) * sy, dy * sy)
        }
    };

    loop {
        let (tx_n, tx_d) = next_tx(ci);
        let (ty_n, ty_d) = next_ty(cj);
        // Compare tx_n/tx_d vs ty_n/ty_d exactly; den 0 acts as infinity.
        let (lhs, rhs) = if tx_d == 0 || ty_d == 0 {
            (if tx_d == 0 { 1 } else { 0 }, if ty_d == 0 { 1 } else { 0 })
        } else {
            (tx_n * ty_d, ty_n * tx_d)
        };
        match lhs.cmp(&rhs) {
            std::cmp::Ordering::Less => ci += sx,
            std::cmp::Ordering::Greater => cj += sy,
            std::cmp::Ordering::Equal => {
                // Corner crossing: skip the grazed cells, step diagonally.
                ci += sx;
                cj += sy;
            }
        }
        if (ci, cj) == (bi, bj) {
            return true;
        }
        if map.is_occupied((ci as usize, cj as usize)) {
            return false;
        }
    }
}

/// Score a pose: count unknown cells within `sensor_range` that have a clear
/// line of sight, and collect the frontier cells visible the same way.
pub fn evaluate_gain<S: Real>(
    map: &OccupancyGrid<S>,
    vp: Pose<S>,
    sensor_range: S,
    frontiers: &[FrontierCell<S>],
) -> Result<GainEval, GainError> {
    let cell = map.cell_of(vp.x, vp.y).ok_or(GainError::OutOfBounds)?;
    if !map.is_free(cell) {
        return Err(GainError::NotFree(cell.0, cell.1));
    }
    let cs = map.cell_size();
    let r_cells = (sensor_range / cs).to_i64().unwrap_or(0) + 1;
    let range2 = sensor_range * sensor_range;
    let mut visible_unknown = Vec::new();
    for dy in -r_cells..=r_cells {
        for dx in -r_cells..=r_cells {
            if dx == 0 && dy == 0 {
                continue;
            }
            let d2 = S::from_f64((dx * dx + dy * dy) as f64).unwrap() * cs * cs;
            if d2 > range2 {
                continue;
            }
            let nx = cell.0 as i64 + dx;
            let ny = cell.1 as i64 + dy;
            if nx < 0 || ny < 0 || nx as usize >= map.width() || ny as usize >= map.height() {
                continue;
            }
            let target = (nx as usize, ny as usize);
            if map.is_unknown(target) && line_of_sight(map, cell, target) {
                visible_unknown.push(target);
            }
        }
    }
    let mut covered = BTreeSet::new();
    for f in frontiers {
        let dx = f.center.0 - vp.x;
        let dy = f.center.1 - vp.y;
        if dx * dx + dy * dy <= range2 && line_of_sight(map, cell, f.cell) {
            covered.insert(f.cell);
        }
    }
    Ok(GainEval { gain: visible_unknown.len(), visible_unknown, covered })
}

/// Stride that caps the candidate count near `cap`.
pub fn auto_stride(frontiers_in_horizon: usize, cap: usize) -> usize {
    if frontiers_in_horizon <= cap {
        1
    } else {
        frontiers_in_horizon.div_ceil(cap)
    }
}

/// Take every `stride`-th frontier inside the horizon, displace each to the
/// nearest traversable cell within a small window, deduplicate by cell and
/// score the survivors. The heading of each candidate faces its frontier.
pub fn sample_viewpoints<S: Real>(
    map: &OccupancyGrid<S>,
    frontiers: &[FrontierCell<S>],
    horizon: &LocalHorizon<S>,
    stride: usize,
    robot_radius: S,
    gain_range: S,
) -> Vec<Viewpoint<S>> {
    assert!(stride >= 1);
    let trav = Traversability::new(map, robot_radius);
    let in_horizon: Vec<&FrontierCell<S>> = frontiers
        .iter()
        .filter(|f| horizon.contains(f.center.0, f.center.1))
        .collect();
    let mut seen: BTreeSet<Cell> = BTreeSet::new();
    let mut out = Vec::new();
    for f in in_horizon.iter().step_by(stride) {
        let site = if trav.is_traversable(f.cell) {
            f.cell
        } else {
            match trav.nearest_traversable(f.cell, PROJECTION_RADIUS_CELLS) {
                Some(c) => c,
                None => continue,
            }
        };
        if !seen.insert(site) {
            continue;
        }
        let (px, py) = map.cell_center(site);
        let heading = if site == f.cell {
            S::zero()
        } else {
            (f.center.1 - py).atan2(f.center.0 - px)
        };
        let pose = Pose::new(px, py, heading);
        match evaluate_gain(map, pose, gain_range, frontiers) {
            Ok(eval) => out.push(Viewpoint {
                pose,
                cell: site,
                gain: eval.gain,
                visible_unknown: eval.visible_unknown,
                covered: eval.covered,
            }),
            Err(_) => continue,
        }
    }
    out
}

/// Seeded variant of [`sample_viewpoints`]: draws up to `count` frontier
/// cells from the horizon at random instead of subsampling by stride.
pub fn sample_viewpoints_random<S: Real, R: Rng>(
    map: &OccupancyGrid<S>,
    frontiers: &[FrontierCell<S>],
    horizon: &LocalHorizon<S>,
    count: usize,
    robot_radius: S,
    gain_range: S,
    rng: &mut R,
) -> Vec<Viewpoint<S>> {
    let in_horizon: Vec<&FrontierCell<S>> = frontiers
        .iter()
        .filter(|f| horizon.contains(f.center.0, f.center.1))
        .collect();
    if in_horizon.is_empty() {
        return Vec::new();
    }
    let n = in_horizon.len();
    let take = count.min(n);
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, n, take).into_vec();
    picked.sort_unstable();
    let chosen: Vec<FrontierCell<S>> = picked.iter().map(|&i| *in_horizon[i]).collect();
    sample_viewpoints(map, &chosen, horizon, 1, robot_radius, gain_range)
}

/// Greedy maximum-coverage selection. Each round picks the candidate adding
/// the most unknown cells not already covered (ties to the smaller index)
/// and stops when the best marginal drops below `min_gain` or every frontier
/// cell any candidate can see is covered.
pub fn select_viewpoints<S: Real>(
    candidates: &[Viewpoint<S>],
    min_gain: usize,
) -> Vec<Viewpoint<S>> {
    let mut selected = Vec::new();
    let mut selected_mask = vec![false; candidates.len()];
    let mut covered_unknown: BTreeSet<Cell> = BTreeSet::new();
    let mut remaining_frontiers: BTreeSet<Cell> =
        candidates.iter().flat_map(|c| c.covered.iter().copied()).collect();
    loop {
        let mut best: Option<(usize, usize)> = None; // (marginal, index)
        for (i, cand) in candidates.iter().enumerate() {
            if selected_mask[i] {
                continue;
            }
            let marginal =
                cand.visible_unknown.iter().filter(|c| !covered_unknown.contains(c)).count();
            let better = match best {
                None => true,
                Some((bm, _)) => marginal > bm,
            };
            if better {
                best = Some((marginal, i));
            }
        }
        let (marginal, idx) = match best {
            Some(b) => b,
            None => break,
        };
        if marginal < min_gain.max(1) {
            break;
        }
        selected_mask[idx] = true;
        covered_unknown.extend(candidates[idx].visible_unknown.iter().copied());
        for f in &candidates[idx].covered {
            remaining_frontiers.remove(f);
        }
        selected.push(candidates[idx].clone());
        if remaining_frontiers.is_empty() {
            break;
        }
    }
    selected
}

/// Compare `a_orth + a_diag*sqrt(2) < b_orth + b_diag*sqrt(2)` exactly.
fn pair_less(a_orth: i64, a_diag: i64, b_orth: i64, b_diag: i64) -> bool {
    let do_ = a_orth - b_orth;
    let dd = a_diag - b_diag;
    match (do_.signum(), dd.signum()) {
        (0, 0) => false,
        (a, b) if a >= 0 && b >= 0 => false,
        (a, b) if a <= 0 && b <= 0 => true,
        _ => {
            if do_ > 0 {
                do_ * do_ < 2 * dd * dd
            } else {
                do_ * do_ > 2 * dd * dd
            }
        }
    }
}

/// Order the selected viewpoints into a tour from `start`: nearest-neighbor
/// seed, then 2-opt segment reversals until no swap shortens the tour.
/// Distances are shortest-path costs, so the tour respects walls. Viewpoints
/// unreachable from the start are dropped and reported in the plan.
pub fn order_tour<S: Real>(
    start: Cell,
    selected: &[Viewpoint<S>],
    map: &OccupancyGrid<S>,
    robot_radius: S,
) -> LocalPlan<S> {
    let trav = Traversability::new(map, robot_radius);
    order_tour_with(&trav, start, selected, map.cell_size())
}

/// [`order_tour`] over a prebuilt traversability mask.
pub fn order_tour_with<S: Real>(
    trav: &Traversability,
    start: Cell,
    selected: &[Viewpoint<S>],
    cell_size: S,
) -> LocalPlan<S> {
    let mut reachable: Vec<Viewpoint<S>> = Vec::new();
    let mut dropped: Vec<Viewpoint<S>> = Vec::new();
    let mut start_paths: Vec<CellPath> = Vec::new();
    for vp in selected {
        match astar(trav, start, vp.cell) {
            Some(p) => {
                reachable.push(vp.clone());
                start_paths.push(p);
            }
            None => dropped.push(vp.clone()),
        }
    }
    let k = reachable.len();
    if k == 0 {
        return LocalPlan { viewpoints: Vec::new(), path: Vec::new(), length: S::zero(), dropped };
    }

    // Distance matrix over nodes 0 (start), 1..=k (viewpoints).
    let mut dist = vec![vec![StepCost::ZERO; k + 1]; k + 1];
    let mut legs: Vec<Vec<Option<CellPath>>> = vec![vec![None; k + 1]; k + 1];
    for (i, p) in start_paths.into_iter().enumerate() {
        dist[0][i + 1] = p.cost;
        dist[i + 1][0] = p.cost;
        legs[0][i + 1] = Some(p);
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let p = astar(trav, reachable[i].cell, reachable[j].cell)
                .expect("viewpoints in one connected component");
            dist[i + 1][j + 1] = p.cost;
            dist[j + 1][i + 1] = p.cost;
            legs[i + 1][j + 1] = Some(p);
        }
    }

    // Nearest-neighbor order.
    let mut order: Vec<usize> = Vec::with_capacity(k);
    let mut visited = vec![false; k + 1];
    let mut current = 0usize;
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for node in 1..=k {
            if visited[node] {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => dist[current][node] < dist[current][b],
            };
            if better {
                best = Some(node);
            }
        }
        let next = best.unwrap();
        visited[next] = true;
        order.push(next);
        current = next;
    }

    // 2-opt: best-improvement passes until no reversal helps.
    let tour_edges = |order: &[usize]| -> (i64, i64) {
        let mut o = 0i64;
        let mut d = 0i64;
        let mut prev = 0usize;
        for &node in order {
            o += dist[prev][node].orth as i64;
            d += dist[prev][node].diag as i64;
            prev = node;
        }
        (o, d)
    };
    loop {
        let mut best_move: Option<(usize, usize, (i64, i64))> = None;
        let (cur_o, cur_d) = tour_edges(&order);
        for i in 0..k {
            for j in (i + 1)..k {
                let mut cand = order.clone();
                cand[i..=j].reverse();
                let (no, nd) = tour_edges(&cand);
                let better = match best_move {
                    None => pair_less(no, nd, cur_o, cur_d),
                    Some((_, _, (bo, bd))) => pair_less(no, nd, bo, bd),
                };
                if better {
                    best_move = Some((i, j, (no, nd)));
                }
            }
        }
        match best_move {
            Some((i, j, _)) => order[i..=j].reverse(),
            None => break,
        }
    }

    // Stitch the legs into one cell path.
    let mut path: Vec<Cell> = Vec::new();
    let mut length_pair = StepCost::ZERO;
    let mut prev = 0usize;
    for &node in &order {
        let (a, b) = if prev < node { (prev, node) } else { (node, prev) };
        let leg = legs[a][b].as_ref().expect("matrix filled").clone();
        let cells: Vec<Cell> = if prev < node {
            leg.cells.clone()
        } else {
            let mut c = leg.cells.clone();
            c.reverse();
            c
        };
        length_pair = length_pair.add(leg.cost);
        if path.is_empty() {
            path.extend(cells);
        } else {
            path.extend(cells.into_iter().skip(1));
        }
        prev = node;
    }

    LocalPlan {
        viewpoints: order.iter().map(|&n| reachable[n - 1].clone()).collect(),
        path,
        length: length_pair.meters(cell_size),
        dropped,
    }
}

//! Global region planning: partition the world into even cells of a coarse
//! grid, classify each as unexplored / exploring / explored from the map,
//! and route the robot to the nearest exploring region when local planning
//! has nothing left to do.
//!
//! Regions that repeatedly fail to make progress are retired as dormant so
//! worlds with sealed or unreachable pockets still terminate. A dormant
//! region wakes up again the moment anything inside it changes state.

use std::collections::BTreeMap;

use crate::map::OccupancyGrid;
use crate::pathing::DistanceField;
use crate::scalar::Real;
use crate::world::Cell;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionStatus {
    Unexplored,
    Exploring,
    Explored,
    Dormant,
}

impl RegionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionStatus::Unexplored => "unexplored",
            RegionStatus::Exploring => "exploring",
            RegionStatus::Explored => "explored",
            RegionStatus::Dormant => "dormant",
        }
    }
}

/// One cell of the coarse partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Region<S> {
    pub rx: usize,
    pub ry: usize,
    /// Cell-index bounds, `x0..x1` by `y0..y1` (exclusive).
    pub cell_bounds: (usize, usize, usize, usize),
    /// World-coordinate bounds `(x_min, y_min, x_max, y_max)`.
    pub bounds: (S, S, S, S),
    pub centroid: (S, S),
    pub status: RegionStatus,
    /// Unknown map cells inside; the census dormancy bookkeeping watches.
    pub unknown_count: usize,
}

pub type RegionIndex = (usize, usize);

/// Pure classification of every region from the map alone (never dormant).
/// Regions tile the map evenly; the last row/column may be truncated.
pub fn classify_regions<S: Real>(map: &OccupancyGrid<S>, region_size: S) -> Vec<Region<S>> {
    let cs = map.cell_size();
    debug_assert!(region_size >= cs * S::two());
    let cells_per = (region_size / cs).round().to_usize().unwrap_or(1).max(1);
    let nx = map.width().div_ceil(cells_per);
    let ny = map.height().div_ceil(cells_per);
    let mut regions = Vec::with_capacity(nx * ny);
    for ry in 0..ny {
        for rx in 0..nx {
            let x0 = rx * cells_per;
            let y0 = ry * cells_per;
            let x1 = (x0 + cells_per).min(map.width());
            let y1 = (y0 + cells_per).min(map.height());
            let mut unknown = 0usize;
            let total = (x1 - x0) * (y1 - y0);
            for iy in y0..y1 {
                for ix in x0..x1 {
                    if map.is_unknown((ix, iy)) {
                        unknown += 1;
                    }
                }
            }
            let status = if unknown == total {
                RegionStatus::Unexplored
            } else if unknown == 0 {
                RegionStatus::Explored
            } else {
                RegionStatus::Exploring
            };
            let (wx0, wy0) = (S::from_count(x0) * cs, S::from_count(y0) * cs);
            let (wx1, wy1) = (S::from_count(x1) * cs, S::from_count(y1) * cs);
            regions.push(Region {
                rx,
                ry,
                cell_bounds: (x0, x1, y0, y1),
                bounds: (
                    map.origin().0 + wx0,
                    map.origin().1 + wy0,
                    map.origin().0 + wx1,
                    map.origin().1 + wy1,
                ),
                centroid: (
                    map.origin().0 + (wx0 + wx1) * S::half(),
                    map.origin().1 + (wy0 + wy1) * S::half(),
                ),
                status,
                unknown_count: unknown,
            });
        }
    }
    regions
}

/// One line per region: `rx ry status`, row-major.
pub fn format_region_statuses<S>(regions: &[Region<S>]) -> String {
    let mut out = String::new();
    for r in regions {
        out.push_str(&format!("{} {} {}\n", r.rx, r.ry, r.status.as_str()));
    }
    out
}

/// Route to a region goal.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalRoute<S> {
    pub region: RegionIndex,
    pub path: Vec<Cell>,
    pub length: S,
}

/// Stateful global planner: owns the dormancy bookkeeping between planning
/// iterations; everything else is recomputed from the map each call.
#[derive(Debug, Clone)]
pub struct GlobalPlanner<S> {
    region_size: S,
    dormant_after: u32,
    /// Consecutive failed attempts per region.
    failures: BTreeMap<RegionIndex, u32>,
    /// Dormant regions with the unknown-census recorded at retirement.
    dormant: BTreeMap<RegionIndex, usize>,
    /// Last routed target and its census when the route was issued.
    active_target: Option<(RegionIndex, usize)>,
}

impl<S: Real> GlobalPlanner<S> {
    pub fn new(region_size: S, dormant_after: u32) -> Self {
        GlobalPlanner {
            region_size,
            dormant_after: dormant_after.max(1),
            failures: BTreeMap::new(),
            dormant: BTreeMap::new(),
            active_target: None,
        }
    }

    pub fn region_size(&self) -> S {
        self.region_size
    }

    /// Classify regions and overlay dormancy. A dormant region whose census
    /// changed since retirement wakes up (and its failure count resets).
    pub fn classify(&mut self, map: &OccupancyGrid<S>) -> Vec<Region<S>> {
        let mut regions = classify_regions(map, self.region_size);
        let mut woken: Vec<RegionIndex> = Vec::new();
        for r in &mut regions {
            if let Some(census) = self.dormant.get(&(r.rx, r.ry)) {
                if r.unknown_count == *census {
                    r.status = RegionStatus::Dormant;
                } else {
                    woken.push((r.rx, r.ry));
                }
            }
        }
        for idx in woken {
            self.dormant.remove(&idx);
            self.failures.remove(&idx);
        }
        regions
    }

    /// Report that the robot finished (or abandoned at arrival) the active
    /// route. If the target region's census did not move, that attempt
    /// failed; enough consecutive failures retire the region.
    pub fn note_route_finished(&mut self, map: &OccupancyGrid<S>) {
        let Some((idx, census_at_issue)) = self.active_target.take() else {
            return;
        };
        let regions = classify_regions(map, self.region_size);
        let Some(region) = regions.iter().find(|r| (r.rx, r.ry) == idx) else {
            return;
        };
        if region.unknown_count == census_at_issue {
            let fails = self.failures.entry(idx).or_insert(0);
            *fails += 1;
            if *fails >= self.dormant_after {
                self.dormant.insert(idx, region.unknown_count);
            }
        } else {
            self.failures.remove(&idx);
        }
    }

    /// Forget the active route without judging it (e.g. a local plan took
    /// over, which is progress by definition).
    pub fn clear_active_route(&mut self) {
        self.active_target = None;
    }

    /// Choose the nearest exploring region by path length through known free
    /// space and return the route to its goal cell. The goal is the centroid
    /// cell when it is known free, otherwise the known-free cell nearest the
    /// centroid inside the region. Unreachable candidates collect failures
    /// (and eventually go dormant); `None` means nothing is routable.
    pub fn pick_target(
        &mut self,
        regions: &[Region<S>],
        map: &OccupancyGrid<S>,
        field: &DistanceField,
    ) -> Option<GlobalRoute<S>> {
        let mut best: Option<(crate::pathing::StepCost, RegionIndex, Cell)> = None;
        let mut unreachable: Vec<RegionIndex> = Vec::new();
        for region in regions {
            if region.status != RegionStatus::Exploring {
                continue;
            }
            let idx = (region.rx, region.ry);
            let goal = match self.region_goal(region, map) {
                Some(g) => g,
                None => {
                    unreachable.push(idx);
                    continue;
                }
            };
            match field.distance_to(goal) {
                Some(d) => {
                    let better = match &best {
                        None => true,
                        Some((bd, bidx, _)) => {
                            d < *bd || (d == *bd && (idx.1, idx.0) < (bidx.1, bidx.0))
                        }
                    };
                    if better {
                        best = Some((d, idx, goal));
                    }
                }
                None => unreachable.push(idx),
            }
        }
        for idx in unreachable {
            let fails = self.failures.entry(idx).or_insert(0);
            *fails += 1;
            if *fails >= self.dormant_after {
                let census = regions
                    .iter()
                    .find(|r| (r.rx, r.ry) == idx)
                    .map(|r| r.unknown_count)
                    .unwrap_or(0);
                self.dormant.insert(idx, census);
            }
        }
        let (cost, idx, goal) = best?;
        let path = field.path_to(goal)?;
        let census = regions
            .iter()
            .find(|r| (r.rx, r.ry) == idx)
            .map(|r| r.unknown_count)
            .unwrap_or(0);
        self.active_target = Some((idx, census));
        Some(GlobalRoute { region: idx, path, length: cost.meters(map.cell_size()) })
    }

    /// Goal cell for a region: centroid cell if known free, else the
    /// known-free cell nearest the centroid (ties to smaller `(iy, ix)`).
    fn region_goal(&self, region: &Region<S>, map: &OccupancyGrid<S>) -> Option<Cell> {
        let centroid_cell = map.cell_of(region.centroid.0, region.centroid.1);
        if let Some(c) = centroid_cell {
            if map.is_free(c) {
                return Some(c);
            }
        }
        let (x0, x1, y0, y1) = region.cell_bounds;
        let (cx, cy) = region.centroid;
        let mut best: Option<(S, Cell)> = None;
        for iy in y0..y1 {
            for ix in x0..x1 {
                if !map.is_free((ix, iy)) {
                    continue;
                }
                let (wx, wy) = map.cell_center((ix, iy));
                let d2 = (wx - cx) * (wx - cx) + (wy - cy) * (wy - cy);
                let better = match &best {
                    None => true,
                    Some((bd, bc)) => d2 < *bd || (d2 == *bd && (iy, ix) < (bc.1, bc.0)),
                };
                if better {
                    best = Some((d2, (ix, iy)));
                }
            }
        }
        best.map(|(_, c)| c)
    }

    /// Exploration is complete when no frontier cell is reachable by the
    /// robot and every region is either fully explored or dormant.
    pub fn is_exploration_complete(
        &self,
        regions: &[Region<S>],
        reachable_frontiers: usize,
    ) -> bool {
        reachable_frontiers == 0
            && regions
                .iter()
                .all(|r| matches!(r.status, RegionStatus::Explored | RegionStatus::Dormant))
    }

    pub fn dormant_regions(&self) -> Vec<RegionIndex> {
        self.dormant.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{CellState, OccupancyGrid};
    use crate::pathing::{distance_field, Traversability};

    fn map_all(state: CellState, w: usize, h: usize) -> OccupancyGrid<f64> {
        let mut m = OccupancyGrid::new_unknown(w, h, 1.0, (0.0, 0.0));
        if state != CellState::Unknown {
            for iy in 0..h {
                for ix in 0..w {
                    m.set_state((ix, iy), state);
                }
            }
        }
        m
    }

    #[test]
    fn all_unknown_every_region_unexplored() {
        let map = map_all(CellState::Unknown, 20, 10);
        let regions = classify_regions(&map, 5.0);
        assert_eq!(regions.len(), 8);
        assert!(regions.iter().all(|r| r.status == RegionStatus::Unexplored));
    }

    #[test]
    fn fully_known_every_region_explored() {
        let map = map_all(CellState::Free, 20, 10);
        let regions = classify_regions(&map, 5.0);
        assert!(regions.iter().all(|r| r.status == RegionStatus::Explored));
    }

    #[test]
    fn truncated_tail_regions_cover_the_map() {
        let map = map_all(CellState::Free, 23, 11);
        let regions = classify_regions(&map, 5.0);
        assert_eq!(regions.len(), 5 * 3);
        let last = regions.last().unwrap();
        assert_eq!(last.cell_bounds, (20, 23, 10, 11));
        // Every map cell belongs to exactly one region.
        let total: usize = regions
            .iter()
            .map(|r| (r.cell_bounds.1 - r.cell_bounds.0) * (r.cell_bounds.3 - r.cell_bounds.2))
            .sum();
        assert_eq!(total, 23 * 11);
    }

    #[test]
    fn mixed_regions_match_cell_census() {
        let mut map = map_all(CellState::Unknown, 10, 10);
        // Reveal a 4x4 block spanning the corner of four 5x5 regions.
        for iy in 3..7 {
            for ix in 3..7 {
                map.set_state((ix, iy), CellState::Free);
            }
        }
        let regions = classify_regions(&map, 5.0);
        for r in &regions {
            // Census oracle: recount per region.
            let (x0, x1, y0, y1) = r.cell_bounds;
            let mut unknown = 0;
            for iy in y0..y1 {
                for ix in x0..x1 {
                    if map.is_unknown((ix, iy)) {
                        unknown += 1;
                    }
                }
            }
            assert_eq!(unknown, r.unknown_count);
            let total = (x1 - x0) * (y1 - y0);
            let expect = if unknown == total {
                RegionStatus::Unexplored
            } else if unknown == 0 {
                RegionStatus::Explored
            } else {
                RegionStatus::Exploring
            };
            assert_eq!(r.status, expect, "region ({}, {})", r.rx, r.ry);
        }
        assert_eq!(
            regions.iter().filter(|r| r.status == RegionStatus::Exploring).count(),
            4
        );
    }

    #[test]
    fn pick_target_none_without_exploring_regions() {
        let map = map_all(CellState::Free, 10, 10);
        let mut planner = GlobalPlanner::new(5.0, 3);
        let regions = planner.classify(&map);
        let trav = Traversability::new(&map, 0.0);
        let field = distance_field(&trav, (1, 1)).unwrap();
        assert!(planner.pick_target(&regions, &map, &field).is_none());
    }

    #[test]
    fn pick_target_prefers_shorter_path() {
        // Free corridor; unknown pockets on the right (far) and left (near).
        let mut map = map_all(CellState::Free, 20, 4);
        map.set_state((1, 1), CellState::Unknown);
        for ix in 15..20 {
            map.set_state((ix, 1), CellState::Unknown);
        }
        let mut planner = GlobalPlanner::new(5.0, 3);
        let regions = planner.classify(&map);
        let trav = Traversability::new(&map, 0.0);
        let field = distance_field(&trav, (6, 1)).unwrap();
        let route = planner.pick_target(&regions, &map, &field).unwrap();
        assert_eq!(route.region, (0, 0));
        assert!(!route.path.is_empty());
    }

    #[test]
    fn pick_target_is_region_order_invariant() {
        let mut map = map_all(CellState::Free, 20, 4);
        map.set_state((2, 2), CellState::Unknown);
        map.set_state((17, 2), CellState::Unknown);
        let trav = Traversability::new(&map, 0.0);
        let field = distance_field(&trav, (10, 1)).unwrap();
        let mut planner = GlobalPlanner::new(5.0, 3);
        let regions = planner.classify(&map);
        let forward = planner.pick_target(&regions, &map, &field).unwrap();
        let mut reversed = regions.clone();
        reversed.reverse();
        let mut planner2 = GlobalPlanner::new(5.0, 3);
        let back = planner2.pick_target(&reversed, &map, &field).unwrap();
        assert_eq!(forward, back);
    }

    #[test]
    fn unreachable_region_goes_dormant_after_three_attempts() {
        // Known-free pocket separated by a wall: its region is exploring
        // (it still contains unknown cells) but no path reaches it.
        let mut map = map_all(CellState::Free, 12, 6);
        for iy in 0..6 {
            map.set_state((6, iy), CellState::Occupied);
        }
        for iy in 0..6 {
            for ix in 7..12 {
                map.set_state((ix, iy), if iy < 3 { CellState::Free } else { CellState::Unknown });
            }
        }
        let mut planner = GlobalPlanner::new(6.0, 3);
        let trav = Traversability::new(&map, 0.0);
        let field = distance_field(&trav, (2, 2)).unwrap();
        for round in 0..3 {
            let regions = planner.classify(&map);
            let picked = planner.pick_target(&regions, &map, &field);
            assert!(picked.is_none(), "round {round} should fail to route");
        }
        let regions = planner.classify(&map);
        let sealed = regions.iter().find(|r| (r.rx, r.ry) == (1, 0)).unwrap();
        assert_eq!(sealed.status, RegionStatus::Dormant);
        assert!(planner.is_exploration_complete(&regions, 0));
    }

    #[test]
    fn dormant_region_wakes_on_census_change() {
        let mut map = map_all(CellState::Free, 12, 6);
        for iy in 0..6 {
            map.set_state((6, iy), CellState::Occupied);
        }
        for iy in 3..6 {
            for ix in 7..12 {
                map.set_state((ix, iy), CellState::Unknown);
            }
        }
        let mut planner = GlobalPlanner::new(6.0, 3);
        let trav = Traversability::new(&map, 0.0);
        let field = distance_field(&trav, (2, 2)).unwrap();
        for _ in 0..3 {
            let regions = planner.classify(&map);
            planner.pick_target(&regions, &map, &field);
        }
        assert!(!planner.dormant_regions().is_empty());
        // New information inside the region wakes it.
        map.set_state((8, 4), CellState::Free);
        let regions = planner.classify(&map);
        let region = regions.iter().find(|r| (r.rx, r.ry) == (1, 0)).unwrap();
        assert_ne!(region.status, RegionStatus::Dormant);
        assert!(planner.dormant_regions().is_empty());
    }

    #[test]
    fn completion_requires_no_reachable_frontiers() {
        let map = map_all(CellState::Free, 10, 10);
        let mut planner = GlobalPlanner::new(5.0, 3);
        let regions = planner.classify(&map);
        assert!(planner.is_exploration_complete(&regions, 0));
        assert!(!planner.is_exploration_complete(&regions, 1));
    }

    #[test]
    fn region_status_dump_format() {
        let map = map_all(CellState::Free, 10, 5);
        let regions = classify_regions(&map, 5.0);
        let dump = format_region_statuses(&regions);
        assert_eq!(dump, "0 0 explored\n1 0 explored\n");
    }
}

//! Deterministic autonomous-exploration stack for 2D grid worlds.
//!
//! The crate covers the full loop of a headless exploration benchmark:
//! ground-truth simulation (unicycle kinematics plus a raycast range
//! sensor), incremental tri-state occupancy mapping, frontier-based local
//! viewpoint planning, coarse global region routing, pure-pursuit path
//! tracking, and the calibration math (rigid point-set alignment, clock
//! offset/delay from timestamp exchanges) used to set up a sensor rig.
//!
//! Everything measured in meters, seconds or radians is generic over the
//! [`scalar::Real`] scalar; the aliases at the crate root pin `f64`, which
//! is what the benchmark harness uses.

pub mod calib;
pub mod drift;
pub mod geom;
pub mod global;
pub mod kinematics;
pub mod lidar;
pub mod local;
pub mod map;
#[cfg(any(test, feature = "test-oracles"))]
pub mod oracles;
pub mod pathing;
pub mod scalar;
pub mod tracker;
pub mod world;

pub use scalar::Real;
pub use world::Cell;

// f64 instantiations of the core types.
pub type Pose = geom::Pose<f64>;
pub type WorldGrid = world::WorldGrid<f64>;
pub type VelocityCommand = kinematics::VelocityCommand<f64>;
pub type VelocityLimits = kinematics::VelocityLimits<f64>;
pub type LidarScan = lidar::LidarScan<f64>;
pub type DriftModel = drift::DriftModel<f64>;
pub type OccupancyGrid = map::OccupancyGrid<f64>;
pub type FrontierCell = map::FrontierCell<f64>;
pub type CoverageReport = map::CoverageReport<f64>;
pub type LocalHorizon = local::LocalHorizon<f64>;
pub type Viewpoint = local::Viewpoint<f64>;
pub type LocalPlan = local::LocalPlan<f64>;
pub type Region = global::Region<f64>;
pub type GlobalRoute = global::GlobalRoute<f64>;
pub type GlobalPlanner = global::GlobalPlanner<f64>;
pub type TrackerConfig = tracker::TrackerConfig<f64>;
pub type TrackedPath = tracker::TrackedPath<f64>;
pub type PurePursuit = tracker::PurePursuit<f64>;
pub type RigidTransform = calib::RigidTransform<f64>;
pub type RigidEstimate = calib::RigidEstimate<f64>;
pub type TimestampExchange = calib::TimestampExchange<f64>;
pub type ClockEstimate = calib::ClockEstimate<f64>;

//! Energy-aware frame-dropping for tracking-by-detection perception.
//!
//! The crate replays per-frame lidar 3D and camera 2D detection streams
//! through drop-aware multi-object trackers, decides per frame whether the
//! expensive lidar detector runs (a periodic baseline plus a camera-driven
//! event trigger), and scores the outcome with HOTA/CLEAR, a modeled power
//! draw, and the draw-per-HOTA-point yield.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!((a - b).abs() <= tol, "{} != {} (tol {})", a, b, tol);
    }};
}

pub mod assignment;
pub mod dataset;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod kitti;
pub mod metrics;
pub mod pipeline;
pub mod scenario;
pub mod scheduler;
pub mod tracker;

pub use error::{Error, Result};
pub use geometry::{AssociationMetric, Box2D, Box3D, Calibration, Dims};
pub use kitti::{Detection2D, Detection3D, FrameBundle, ObjectClass};
pub use scheduler::{ScheduleDecision, ScheduleStats, Scheduler, SchedulerConfig};
pub use tracker::{MultiTracker, Track, TrackerConfig, TrackerVariant};

/// Emulated cycle time between frames, seconds.
pub const CYCLE_TIME_S: f64 = 0.1;

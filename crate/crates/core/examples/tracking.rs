//! Tracks one car while most frames are dropped: the Kalman filter coasts
//! through dropped frames and only processed misses count against a track.

use framedrop::kitti::FrameBundle;
use framedrop::scenario::synthetic_calibration;
use framedrop::{Box3D, Detection3D, Dims, MultiTracker, ObjectClass, ScheduleDecision, TrackerConfig};
use nalgebra::Vector3;

fn main() -> framedrop::Result<()> {
    let mut tracker = MultiTracker::new(TrackerConfig::default(), synthetic_calibration())?;
    for f in 0..25u32 {
        // 5 m/s across the scene; the detector sees it until frame 15.
        let x = -6.0 + 0.5 * f as f64;
        let lidar = if f < 15 {
            vec![Detection3D {
                class: ObjectClass::Car,
                box3d: Box3D::new(Vector3::new(x, 1.65, 15.0), Dims::new(1.5, 1.6, 3.9), 0.0)?,
                box2d_hint: None,
                score: 0.9,
            }]
        } else {
            Vec::new()
        };
        let bundle = FrameBundle {
            sequence_id: "demo".into(),
            frame_index: f,
            lidar_detections: lidar,
            camera_detections: Vec::new(),
            timestamp: 0.1 * f as f64,
        };
        let decision = if f % 3 == 0 { ScheduleDecision::process() } else { ScheduleDecision::drop() };
        let out = tracker.step(&bundle, &decision);
        let state = tracker.tracks().first().map(|t| {
            format!(
                "id {} x {:+.2} vx {:+.2} m/cycle misses {}",
                t.id,
                t.box3d().location.x,
                t.state.velocity().x,
                t.missed_processed_frames
            )
        });
        println!(
            "frame {f:>2} {:<7} truth x {x:+.2}  {}  reported {}",
            if decision.process { "process" } else { "drop" },
            state.unwrap_or_else(|| "no track".into()),
            out.len()
        );
    }
    Ok(())
}

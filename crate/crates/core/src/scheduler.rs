//! Per-frame lidar processing decision.
//!
//! A periodic baseline processes `n` out of every `m` frames. On frames the
//! baseline would drop, an event trigger inspects the camera: detections
//! estimated closer than `d_max` must each overlap some predicted track
//! projection by at least `iou_min`, otherwise the lidar frame is processed
//! anyway. Triggers never shift the periodic phase, so `n / m` stays a lower
//! bound on the processed fraction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou_2d, project_box3d, Box2D, Calibration};
use crate::kitti::{Detection2D, ObjectClass};
use crate::tracker::Track;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub n: u32,
    pub m: u32,
    /// Meters; camera detections estimated farther away are ignored.
    pub d_max: f64,
    pub iou_min: f64,
    /// Approximate real-world object height per class, meters.
    pub class_heights: BTreeMap<ObjectClass, f64>,
    pub event_trigger_enabled: bool,
    pub camera_score_floor: f64,
    /// Frames by which camera detections lag the lidar frame they gate.
    pub camera_latency_frames: u32,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            n: 1,
            m: 1,
            d_max: 25.0,
            iou_min: 0.25,
            class_heights: default_class_heights(),
            event_trigger_enabled: true,
            camera_score_floor: 0.5,
            camera_latency_frames: 0,
        }
    }
}

pub fn default_class_heights() -> BTreeMap<ObjectClass, f64> {
    BTreeMap::from([
        (ObjectClass::Car, 1.5),
        (ObjectClass::Pedestrian, 1.75),
        (ObjectClass::Cyclist, 1.75),
        (ObjectClass::Other, 1.5),
    ])
}

impl SchedulerConfig {
    pub fn periodic(n: u32, m: u32, event_trigger_enabled: bool) -> Self {
        Self {
            n,
            m,
            event_trigger_enabled,
            ..Self::default()
        }
    }

    pub fn baseline_target(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || self.n > self.m {
            return Err(Error::config(
                "scheduler.n",
                format!("need 1 <= n <= m, got n={} m={}", self.n, self.m),
            ));
        }
        if !(self.d_max > 0.0) {
            return Err(Error::config("scheduler.d_max", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.iou_min) {
            return Err(Error::config("scheduler.iou_min", "must lie in [0, 1]"));
        }
        if let Some((c, h)) = self.class_heights.iter().find(|(_, &h)| !(h > 0.0)) {
            return Err(Error::config(
                "scheduler.class_heights",
                format!("height for {c:?} must be positive, got {h}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionReason {
    Periodic,
    EventTrigger,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleDecision {
    pub process: bool,
    pub reason: DecisionReason,
    /// Indices into the frame's camera detections that lacked a match.
    pub triggering_detections: Vec<usize>,
}

impl ScheduleDecision {
    pub fn process() -> Self {
        Self {
            process: true,
            reason: DecisionReason::Periodic,
            triggering_detections: Vec::new(),
        }
    }

    pub fn drop() -> Self {
        Self {
            process: false,
            reason: DecisionReason::None,
            triggering_detections: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStats {
    pub frames_total: u64,
    pub frames_processed: u64,
    pub frames_event_triggered: u64,
}

impl ScheduleStats {
    /// Processed fraction; zero before any frame.
    pub fn effective_target(&self) -> f64 {
        if self.frames_total == 0 {
            0.0
        } else {
            self.frames_processed as f64 / self.frames_total as f64
        }
    }

    pub fn record(&mut self, decision: &ScheduleDecision) {
        self.frames_total += 1;
        if decision.process {
            self.frames_processed += 1;
        }
        if decision.reason == DecisionReason::EventTrigger {
            self.frames_event_triggered += 1;
        }
    }

    pub fn merge(&mut self, other: &ScheduleStats) {
        self.frames_total += other.frames_total;
        self.frames_processed += other.frames_processed;
        self.frames_event_triggered += other.frames_event_triggered;
    }
}

/// Baseline: processes the first `n` frames of every window of `m`.
pub fn periodic_decision(frame_index: u32, n: u32, m: u32) -> bool {
    frame_index % m < n
}

/// Pinhole distance estimate from the detection's pixel height and the
/// class's approximate real height.
pub fn estimate_distance(det: &Detection2D, calib: &Calibration, class_heights: &BTreeMap<ObjectClass, f64>) -> f64 {
    let height = class_heights
        .get(&det.class)
        .copied()
        .unwrap_or_else(|| default_class_heights()[&ObjectClass::Car]);
    height * calib.focal_length() / det.box2d.height()
}

/// Indices of detections passing the score floor and estimated within
/// `d_max` (inclusive), in input order.
pub fn near_indices(dets: &[Detection2D], calib: &Calibration, config: &SchedulerConfig) -> Vec<usize> {
    dets.iter()
        .enumerate()
        .filter(|(_, d)| d.score >= config.camera_score_floor)
        .filter(|(_, d)| estimate_distance(d, calib, &config.class_heights) <= config.d_max)
        .map(|(i, _)| i)
        .collect()
}

pub fn filter_near(dets: &[Detection2D], calib: &Calibration, config: &SchedulerConfig) -> Vec<Detection2D> {
    near_indices(dets, calib, config)
        .into_iter()
        .map(|i| dets[i].clone())
        .collect()
}

/// Checks each near detection against every projectable predicted track.
/// Returns whether any detection's best IoU falls strictly below `iou_min`,
/// together with those detections' indices.
pub fn event_trigger(
    predicted_tracks: &[Track],
    near_dets: &[Detection2D],
    calib: &Calibration,
    iou_min: f64,
) -> (bool, Vec<usize>) {
    let projections: Vec<Box2D> = predicted_tracks
        .iter()
        .filter(|t| t.is_alive())
        .filter_map(|t| project_box3d(&t.box3d(), calib))
        .collect();
    let offending: Vec<usize> = near_dets
        .iter()
        .enumerate()
        .filter(|(_, d)| {
            let best = projections.iter().map(|p| iou_2d(p, &d.box2d)).fold(0.0, f64::max);
            best < iou_min
        })
        .map(|(i, _)| i)
        .collect();
    (!offending.is_empty(), offending)
}

/// The full decision for one frame; updates `stats`.
pub fn decide(
    frame_index: u32,
    predicted_tracks: &[Track],
    camera_dets: &[Detection2D],
    calib: &Calibration,
    config: &SchedulerConfig,
    stats: &mut ScheduleStats,
) -> ScheduleDecision {
    let decision = if periodic_decision(frame_index, config.n, config.m) {
        ScheduleDecision::process()
    } else if config.event_trigger_enabled {
        let near = near_indices(camera_dets, calib, config);
        let near_dets: Vec<Detection2D> = near.iter().map(|&i| camera_dets[i].clone()).collect();
        let (fire, offending) = event_trigger(predicted_tracks, &near_dets, calib, config.iou_min);
        if fire {
            ScheduleDecision {
                process: true,
                reason: DecisionReason::EventTrigger,
                triggering_detections: offending.into_iter().map(|i| near[i]).collect(),
            }
        } else {
            ScheduleDecision::drop()
        }
    } else {
        ScheduleDecision::drop()
    };
    stats.record(&decision);
    decision
}

/// One scheduler per sequence.
#[derive(Debug, Clone)]
pub struct Scheduler {
    config: SchedulerConfig,
    stats: ScheduleStats,
}

impl Scheduler {
    pub fn new(config: SchedulerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            stats: ScheduleStats::default(),
        })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.config
    }

    pub fn stats(&self) -> &ScheduleStats {
        &self.stats
    }

    pub fn decide(
        &mut self,
        frame_index: u32,
        predicted_tracks: &[Track],
        camera_dets: &[Detection2D],
        calib: &Calibration,
    ) -> ScheduleDecision {
        decide(frame_index, predicted_tracks, camera_dets, calib, &self.config, &mut self.stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Box3D, Dims};
    use crate::kitti::Detection3D;
    use crate::tracker::{MultiTracker, TrackerConfig};
    use crate::FrameBundle;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn calib() -> Calibration {
        Calibration::pinhole(720.0, 620.0, 180.0, (1242.0, 375.0))
    }

    fn cam_det(x0: f64, y0: f64, x1: f64, y1: f64) -> Detection2D {
        Detection2D {
            class: ObjectClass::Car,
            box2d: Box2D::new(x0, y0, x1, y1).unwrap(),
            score: 0.9,
        }
    }

    /// A confirmed track whose predicted box sits at `center`.
    fn track_at(center: Vector3<f64>) -> Track {
        let mut tracker = MultiTracker::new(
            TrackerConfig {
                confirm_hits: 1,
                ..TrackerConfig::default()
            },
            calib(),
        )
        .unwrap();
        let det = Detection3D {
            class: ObjectClass::Car,
            box3d: Box3D::from_center(center, Dims::new(1.5, 1.6, 3.9), 0.0).unwrap(),
            box2d_hint: None,
            score: 0.9,
        };
        let frame = FrameBundle {
            sequence_id: "t".into(),
            frame_index: 0,
            lidar_detections: vec![det],
            camera_detections: vec![],
            timestamp: 0.0,
        };
        tracker.step(&frame, &ScheduleDecision::process());
        tracker.tracks()[0].clone()
    }

    #[test]
    fn periodic_patterns() {
        let processed = |n, m| (0..6).filter(|&f| periodic_decision(f, n, m)).collect::<Vec<_>>();
        assert_eq!(processed(1, 2), vec![0, 2, 4]);
        assert_eq!(processed(1, 1), vec![0, 1, 2, 3, 4, 5]);
        for len in [10u32, 50, 1000] {
            let count = (0..len).filter(|&f| periodic_decision(f, 1, 10)).count() as u32;
            assert_eq!(count * 10, len);
        }
    }

    #[test]
    fn distance_estimates() {
        let heights = default_class_heights();
        let d = estimate_distance(&cam_det(0.0, 0.0, 50.0, 43.2), &calib(), &heights);
        assert_close!(d, 25.0, 1e-9);
        let d = estimate_distance(&cam_det(0.0, 100.0, 50.0, 208.0), &calib(), &heights);
        assert_close!(d, 10.0, 1e-9);
        let doubled = estimate_distance(&cam_det(0.0, 100.0, 50.0, 186.4), &calib(), &heights);
        assert_close!(doubled, 12.5, 1e-9);
    }

    #[test]
    fn near_filter_boundaries() {
        let config = SchedulerConfig::default();
        let at_limit = cam_det(0.0, 0.0, 50.0, 43.2);
        assert_eq!(estimate_distance(&at_limit, &calib(), &config.class_heights), 25.0);
        assert_eq!(filter_near(&[at_limit.clone()], &calib(), &config), vec![at_limit]);
        assert!(filter_near(&[], &calib(), &config).is_empty());
        let near = cam_det(0.0, 100.0, 50.0, 208.0);
        let far = cam_det(0.0, 100.0, 50.0, 127.0);
        assert_eq!(filter_near(&[near.clone(), far], &calib(), &config), vec![near]);
    }

    #[test]
    fn score_floor_applies_before_distance() {
        let config = SchedulerConfig::default();
        let mut weak = cam_det(0.0, 100.0, 50.0, 208.0);
        weak.score = 0.4;
        assert!(filter_near(&[weak], &calib(), &config).is_empty());
    }

    #[test]
    fn trigger_cases() {
        let t = track_at(Vector3::new(0.0, 0.0, 12.0));
        let proj = project_box3d(&t.box3d(), &calib()).unwrap();
        let det = Detection2D {
            class: ObjectClass::Car,
            box2d: proj,
            score: 0.9,
        };
        assert_eq!(event_trigger(&[t.clone()], &[det.clone()], &calib(), 0.25), (false, vec![]));
        assert_eq!(event_trigger(&[], &[det.clone()], &calib(), 0.25), (true, vec![0]));
        // A tie at exactly iou_min does not fire.
        assert_eq!(event_trigger(&[t], &[det], &calib(), 1.0), (false, vec![]));
    }

    #[test]
    fn trigger_reports_only_detections_below_threshold() {
        let t = track_at(Vector3::new(0.0, 0.0, 12.0));
        let p = project_box3d(&t.box3d(), &calib()).unwrap();
        let w = p.width();
        // Horizontal shift s gives IoU (w - s) / (w + s); solve for 0.30 and 0.10.
        let shift = |iou: f64| w * (1.0 - iou) / (1.0 + iou);
        let d30 = Detection2D { box2d: p.translated(shift(0.30), 0.0), ..cam_det(0.0, 0.0, 1.0, 1.0) };
        let d10 = Detection2D { box2d: p.translated(shift(0.10), 0.0), ..cam_det(0.0, 0.0, 1.0, 1.0) };
        assert_close!(iou_2d(&p, &d30.box2d), 0.30, 1e-9);
        assert_close!(iou_2d(&p, &d10.box2d), 0.10, 1e-9);
        assert_eq!(event_trigger(&[t], &[d30, d10], &calib(), 0.25), (true, vec![1]));
    }

    #[test]
    fn decide_flow() {
        let config = SchedulerConfig::periodic(1, 2, true);
        let mut stats = ScheduleStats::default();
        let near_unmatched = vec![cam_det(600.0, 100.0, 700.0, 208.0)];
        let far_only = vec![cam_det(600.0, 100.0, 620.0, 110.0)];

        let d = decide(1, &[], &far_only, &calib(), &config, &mut stats);
        assert_eq!(d, ScheduleDecision::drop());
        let d = decide(1, &[], &near_unmatched, &calib(), &config, &mut stats);
        assert!(d.process);
        assert_eq!(d.reason, DecisionReason::EventTrigger);
        assert_eq!(d.triggering_detections, vec![0]);
        let d = decide(2, &[], &near_unmatched, &calib(), &config, &mut stats);
        assert_eq!(d.reason, DecisionReason::Periodic);

        let off = SchedulerConfig::periodic(1, 2, false);
        let d = decide(3, &[], &near_unmatched, &calib(), &off, &mut stats);
        assert_eq!(d, ScheduleDecision::drop());

        assert_eq!(stats.frames_total, 4);
        assert_eq!(stats.frames_processed, 2);
        assert_eq!(stats.frames_event_triggered, 1);
        assert_close!(stats.effective_target(), 0.5, 0.0);
    }

    #[test]
    fn triggering_indices_refer_to_unfiltered_input() {
        let config = SchedulerConfig::periodic(1, 2, true);
        let mut stats = ScheduleStats::default();
        let dets = vec![cam_det(600.0, 100.0, 620.0, 110.0), cam_det(600.0, 100.0, 700.0, 208.0)];
        let d = decide(1, &[], &dets, &calib(), &config, &mut stats);
        assert_eq!(d.triggering_detections, vec![1]);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(SchedulerConfig::periodic(0, 2, true).validate().is_err());
        assert!(SchedulerConfig::periodic(3, 2, true).validate().is_err());
        let mut c = SchedulerConfig::default();
        c.iou_min = 1.5;
        assert!(c.validate().is_err());
        let mut c = SchedulerConfig::default();
        c.class_heights.insert(ObjectClass::Car, 0.0);
        assert!(c.validate().is_err());
    }

    fn arb_dets() -> impl Strategy<Value = Vec<Detection2D>> {
        prop::collection::vec(
            (0.0..1100.0f64, 0.0..300.0f64, 5.0..140.0f64, 5.0..200.0f64, 0.0..1.0f64).prop_map(
                |(x, y, w, h, s)| Detection2D {
                    class: ObjectClass::Car,
                    box2d: Box2D::new(x, y, x + w, y + h).unwrap(),
                    score: s,
                },
            ),
            0..8,
        )
    }

    proptest! {
        #[test]
        fn raising_d_max_never_shrinks_near_set(dets in arb_dets(), d1 in 1.0..60.0f64, extra in 0.0..40.0f64) {
            let mut c = SchedulerConfig::default();
            c.d_max = d1;
            let small = near_indices(&dets, &calib(), &c);
            c.d_max = d1 + extra;
            let large = near_indices(&dets, &calib(), &c);
            prop_assert!(small.iter().all(|i| large.contains(i)));
        }

        #[test]
        fn raising_iou_min_never_reduces_triggers(dets in arb_dets(), a in 0.0..1.0f64, b in 0.0..1.0f64, z in 6.0..30.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let tracks = vec![track_at(Vector3::new(0.0, 0.0, z))];
            let (fire_lo, idx_lo) = event_trigger(&tracks, &dets, &calib(), lo);
            let (fire_hi, idx_hi) = event_trigger(&tracks, &dets, &calib(), hi);
            prop_assert!(!fire_lo || fire_hi);
            prop_assert!(idx_lo.iter().all(|i| idx_hi.contains(i)));
        }

        #[test]
        fn periodic_frames_always_processed(frame in 0u32..500, m in 1u32..12, dets in arb_dets(), trigger: bool) {
            let config = SchedulerConfig::periodic(1, m, trigger);
            let mut stats = ScheduleStats::default();
            let d = decide(frame, &[], &dets, &calib(), &config, &mut stats);
            if periodic_decision(frame, 1, m) {
                prop_assert!(d.process);
                prop_assert_eq!(d.reason, DecisionReason::Periodic);
            }
            prop_assert_eq!(d.reason == DecisionReason::None, !d.process);
        }

        #[test]
        fn effective_target_bounded_below(m in 1u32..12, frames in 1u32..300, trigger: bool, dets in arb_dets()) {
            let config = SchedulerConfig::periodic(1, m, trigger);
            let mut stats = ScheduleStats::default();
            for f in 0..frames {
                decide(f, &[], &dets, &calib(), &config, &mut stats);
            }
            let baseline = 1.0 / m as f64;
            prop_assert!(stats.effective_target() >= baseline - 1.0 / frames as f64);
            if !trigger {
                prop_assert_eq!(stats.frames_processed, frames.div_ceil(m) as u64);
            }
        }
    }
}

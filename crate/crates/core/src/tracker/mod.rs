//! Drop-aware multi-object tracking.
//!
//! Two variants share one lifecycle. The lidar-only tracker corrects tracks
//! with 3D detections on processed frames and coasts on dropped frames. The
//! fusion tracker additionally associates projected tracks with camera
//! detections on every frame; a camera match refreshes the coast clock and
//! counts toward confirmation but never births a track.
//!
//! Misses are only counted on frames where the lidar detector actually ran,
//! so a run of dropped frames can retire a track only through the separate
//! wall-clock coast limit.

mod kalman;

use serde::{Deserialize, Serialize};

pub use kalman::{measurement_of, Measurement, NoiseConfig, StateMatrix, StateVector, TrackState};

use crate::assignment;
use crate::error::{Error, Result};
use crate::geometry::{iou_2d, overlap_3d, project_box3d, AssociationMetric, Box2D, Box3D, Calibration};
use crate::kitti::{Detection2D, Detection3D, FrameBundle, ObjectClass, TrackOutput};
use crate::scheduler::ScheduleDecision;

/// Similarity assigned to class-incompatible pairs; always below any gate.
const INCOMPATIBLE: f64 = -1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackerVariant {
    LidarOnly,
    Fusion,
}

impl std::str::FromStr for TrackerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lidar-only" => Ok(Self::LidarOnly),
            "fusion" => Ok(Self::Fusion),
            other => Err(Error::config(
                "variant",
                format!("unknown tracker variant `{other}` (expected lidar-only or fusion)"),
            )),
        }
    }
}

impl std::fmt::Display for TrackerVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::LidarOnly => "lidar-only",
            Self::Fusion => "fusion",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentMode {
    Hungarian,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub variant: TrackerVariant,
    pub association_metric: AssociationMetric,
    /// Minimum BEV IoU, or maximum centroid distance in meters.
    pub gate: f64,
    pub assignment: AssignmentMode,
    pub confirm_hits: u32,
    /// A track dies once it has missed more than this many processed frames
    /// in a row.
    pub max_misses: u32,
    /// A track dies once this many frames pass without any update.
    pub max_coast_frames: u32,
    pub lidar_score_floor: f64,
    /// Fusion only: camera detections below this score are ignored.
    pub camera_score_floor: f64,
    /// Fusion only: minimum 2D IoU between a projected track and a camera
    /// detection.
    pub camera_gate: f64,
    /// Fusion only: confirmation hits credited per camera match.
    pub camera_hit_weight: u32,
    /// Fusion only: correct the lateral position from matched camera boxes.
    pub camera_position_correction: bool,
    /// Standard deviation of the camera lateral-position measurement, m.
    pub camera_lateral_sigma: f64,
    pub noise: NoiseConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            variant: TrackerVariant::LidarOnly,
            association_metric: AssociationMetric::CentroidDistance,
            gate: 2.5,
            assignment: AssignmentMode::Hungarian,
            confirm_hits: 2,
            max_misses: 2,
            max_coast_frames: 30,
            lidar_score_floor: 0.3,
            camera_score_floor: 0.5,
            camera_gate: 0.3,
            camera_hit_weight: 1,
            camera_position_correction: false,
            camera_lateral_sigma: 0.5,
            noise: NoiseConfig::default(),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.confirm_hits < 1 {
            return Err(Error::config("tracker.confirm_hits", "must be at least 1"));
        }
        if !(self.gate > 0.0) {
            return Err(Error::config("tracker.gate", "must be positive"));
        }
        if self.association_metric == AssociationMetric::BevIou && self.gate > 1.0 {
            return Err(Error::config("tracker.gate", "BEV IoU gate must lie in (0, 1]"));
        }
        if !(self.camera_gate > 0.0 && self.camera_gate <= 1.0) {
            return Err(Error::config("tracker.camera_gate", "must lie in (0, 1]"));
        }
        if !(self.camera_lateral_sigma > 0.0) {
            return Err(Error::config("tracker.camera_lateral_sigma", "must be positive"));
        }
        Ok(())
    }

    /// Similarity used for association; higher is better.
    fn similarity(&self, a: &Box3D, b: &Box3D) -> f64 {
        match self.association_metric {
            AssociationMetric::BevIou => overlap_3d(a, b, AssociationMetric::BevIou),
            AssociationMetric::CentroidDistance => -overlap_3d(a, b, AssociationMetric::CentroidDistance),
        }
    }

    fn min_similarity(&self) -> f64 {
        match self.association_metric {
            AssociationMetric::BevIou => self.gate,
            AssociationMetric::CentroidDistance => -self.gate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub state: TrackState,
    pub class: ObjectClass,
    pub status: TrackStatus,
    pub consecutive_hits: u32,
    pub missed_processed_frames: u32,
    pub age_frames: u32,
    pub last_update_frame: u32,
    /// Score of the most recent lidar detection.
    pub score: f64,
}

impl Track {
    pub fn box3d(&self) -> Box3D {
        self.state.box3d()
    }

    pub fn is_alive(&self) -> bool {
        self.status != TrackStatus::Dead
    }

    fn born(id: u64, det: &Detection3D, frame: u32, config: &TrackerConfig) -> Self {
        let mut t = Self {
            id,
            state: TrackState::from_box(&det.box3d, &config.noise),
            class: det.class,
            status: TrackStatus::Tentative,
            consecutive_hits: 1,
            missed_processed_frames: 0,
            age_frames: 0,
            last_update_frame: frame,
            score: det.score,
        };
        t.promote(config);
        t
    }

    fn promote(&mut self, config: &TrackerConfig) {
        if self.status == TrackStatus::Tentative && self.consecutive_hits >= config.confirm_hits {
            self.status = TrackStatus::Confirmed;
        }
    }
}

/// Advances every track by `dt_cycles` constant-velocity steps.
pub fn predict_all(tracks: &mut [Track], dt_cycles: u32, noise: &NoiseConfig) {
    for t in tracks.iter_mut() {
        t.state.predict_cycles(dt_cycles, noise);
        t.age_frames += dt_cycles;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Association {
    /// `(track index, detection index)` pairs.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

fn assign(sim: &[Vec<f64>], min_similarity: f64, mode: AssignmentMode) -> Vec<(usize, usize)> {
    match mode {
        AssignmentMode::Hungarian => assignment::maximize_gated(sim, min_similarity),
        AssignmentMode::Greedy => assignment::greedy_gated(sim, min_similarity),
    }
}

/// Cascade association: confirmed tracks claim detections first, tentative
/// tracks compete for the remainder. Dead tracks are never matched.
pub fn associate(tracks: &[Track], detections: &[Detection3D], config: &TrackerConfig) -> Association {
    let boxes: Vec<Box3D> = tracks.iter().map(Track::box3d).collect();
    let mut det_free = vec![true; detections.len()];
    let mut matches = Vec::new();
    let mut unmatched_tracks = Vec::new();

    for stage in [TrackStatus::Confirmed, TrackStatus::Tentative] {
        let rows: Vec<usize> = (0..tracks.len()).filter(|&i| tracks[i].status == stage).collect();
        let cols: Vec<usize> = (0..detections.len()).filter(|&j| det_free[j]).collect();
        let sim: Vec<Vec<f64>> = rows
            .iter()
            .map(|&i| {
                cols.iter()
                    .map(|&j| {
                        if tracks[i].class == detections[j].class {
                            config.similarity(&boxes[i], &detections[j].box3d)
                        } else {
                            INCOMPATIBLE
                        }
                    })
                    .collect()
            })
            .collect();
        let pairs = assign(&sim, config.min_similarity(), config.assignment);
        let mut row_matched = vec![false; rows.len()];
        for (r, c) in pairs {
            row_matched[r] = true;
            det_free[cols[c]] = false;
            matches.push((rows[r], cols[c]));
        }
        unmatched_tracks.extend(rows.iter().zip(&row_matched).filter(|(_, &m)| !m).map(|(&i, _)| i));
    }

    matches.sort_unstable();
    unmatched_tracks.sort_unstable();
    Association {
        matches,
        unmatched_tracks,
        unmatched_detections: (0..detections.len()).filter(|&j| det_free[j]).collect(),
    }
}

/// Kalman correction of a matched track. On numerical failure the track
/// keeps its predicted state and the error is returned; lifecycle counters
/// are updated either way.
pub fn update(track: &mut Track, detection: &Detection3D, frame: u32, config: &TrackerConfig) -> Result<()> {
    let outcome = track.state.update(&measurement_of(&detection.box3d), &config.noise);
    track.consecutive_hits += 1;
    track.missed_processed_frames = 0;
    track.last_update_frame = frame;
    track.score = detection.score;
    track.promote(config);
    outcome
}

/// Stateful tracker for one sequence.
#[derive(Debug, Clone)]
pub struct MultiTracker {
    config: TrackerConfig,
    calib: Calibration,
    tracks: Vec<Track>,
    next_id: u64,
    current_frame: Option<u32>,
    numerical_failures: u64,
}

impl MultiTracker {
    pub fn new(config: TrackerConfig, calib: Calibration) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            calib,
            tracks: Vec::new(),
            next_id: 1,
            current_frame: None,
            numerical_failures: 0,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calib
    }

    /// Live tracks, predicted to the most recent frame seen.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn numerical_failures(&self) -> u64 {
        self.numerical_failures
    }

    /// Predicts all tracks forward to `frame`. Repeated calls for the same
    /// frame are no-ops, so callers may predict before deciding whether the
    /// frame is processed.
    pub fn predict_to(&mut self, frame: u32) {
        if let Some(cur) = self.current_frame {
            if frame > cur {
                predict_all(&mut self.tracks, frame - cur, &self.config.noise);
            }
        }
        self.current_frame = Some(self.current_frame.map_or(frame, |c| c.max(frame)));
    }

    /// Runs one frame with the configured variant and returns the confirmed
    /// tracks.
    pub fn step(&mut self, frame: &FrameBundle, decision: &ScheduleDecision) -> Vec<TrackOutput> {
        match self.config.variant {
            TrackerVariant::LidarOnly => self.step_lidar_only(frame, decision),
            TrackerVariant::Fusion => self.step_fusion(frame, decision),
        }
    }

    pub fn step_lidar_only(&mut self, frame: &FrameBundle, decision: &ScheduleDecision) -> Vec<TrackOutput> {
        let f = frame.frame_index;
        self.predict_to(f);
        if decision.process {
            self.lidar_stage(frame);
        }
        self.retire(f);
        self.outputs()
    }

    pub fn step_fusion(&mut self, frame: &FrameBundle, decision: &ScheduleDecision) -> Vec<TrackOutput> {
        let f = frame.frame_index;
        self.predict_to(f);
        let lidar_updated = if decision.process {
            self.lidar_stage(frame)
        } else {
            vec![false; self.tracks.len()]
        };
        self.camera_stage(f, &frame.camera_detections, &lidar_updated);
        self.retire(f);
        self.outputs()
    }

    /// Associates and corrects with lidar detections, spawns tentative tracks
    /// for the leftovers. Returns, per track, whether lidar updated it.
    fn lidar_stage(&mut self, frame: &FrameBundle) -> Vec<bool> {
        let f = frame.frame_index;
        let dets: Vec<&Detection3D> = frame
            .lidar_detections
            .iter()
            .filter(|d| d.score >= self.config.lidar_score_floor)
            .collect();
        let owned: Vec<Detection3D> = dets.iter().map(|d| (*d).clone()).collect();
        let assoc = associate(&self.tracks, &owned, &self.config);

        for &(ti, di) in &assoc.matches {
            if update(&mut self.tracks[ti], &owned[di], f, &self.config).is_err() {
                self.numerical_failures += 1;
            }
        }
        for &ti in &assoc.unmatched_tracks {
            let t = &mut self.tracks[ti];
            t.missed_processed_frames += 1;
            t.consecutive_hits = 0;
            if t.status == TrackStatus::Tentative {
                t.status = TrackStatus::Dead;
            }
        }

        let mut updated = vec![false; self.tracks.len()];
        for &(ti, _) in &assoc.matches {
            updated[ti] = true;
        }
        for &di in &assoc.unmatched_detections {
            let track = Track::born(self.next_id, &owned[di], f, &self.config);
            self.next_id += 1;
            self.tracks.push(track);
            updated.push(true);
        }
        updated
    }

    fn camera_stage(&mut self, frame: u32, detections: &[Detection2D], lidar_updated: &[bool]) {
        let dets: Vec<&Detection2D> = detections
            .iter()
            .filter(|d| d.score >= self.config.camera_score_floor)
            .collect();
        if dets.is_empty() {
            return;
        }
        let mut rows = Vec::new();
        let mut projections: Vec<Box2D> = Vec::new();
        for (i, t) in self.tracks.iter().enumerate() {
            if !t.is_alive() || lidar_updated.get(i).copied().unwrap_or(false) {
                continue;
            }
            if let Some(p) = project_box3d(&t.box3d(), &self.calib) {
                rows.push(i);
                projections.push(p);
            }
        }
        if rows.is_empty() {
            return;
        }
        let sim: Vec<Vec<f64>> = rows
            .iter()
            .zip(&projections)
            .map(|(&i, p)| {
                dets.iter()
                    .map(|d| {
                        if self.tracks[i].class == d.class {
                            iou_2d(p, &d.box2d)
                        } else {
                            INCOMPATIBLE
                        }
                    })
                    .collect()
            })
            .collect();
        for (r, c) in assign(&sim, self.config.camera_gate, self.config.assignment) {
            let weight = self.config.camera_hit_weight;
            let correct = self.config.camera_position_correction;
            let sigma = self.config.camera_lateral_sigma;
            let lateral = correct.then(|| self.lateral_from_camera(&self.tracks[rows[r]], &dets[c].box2d));
            let t = &mut self.tracks[rows[r]];
            t.last_update_frame = frame;
            t.consecutive_hits += weight;
            t.promote(&self.config);
            if let Some(Some(x)) = lateral {
                if t.state.update_component(0, x, sigma * sigma).is_err() {
                    self.numerical_failures += 1;
                }
            }
        }
    }

    /// Lateral position implied by a camera box center at the track's depth.
    fn lateral_from_camera(&self, track: &Track, b: &Box2D) -> Option<f64> {
        let p = &self.calib.projection;
        let z = track.state.mean[2];
        let fx = p[(0, 0)];
        if z <= 0.0 || fx == 0.0 {
            return None;
        }
        let (u, _) = b.center();
        // u * (z + p23) = fx * x + cx * z + p03, ignoring skew.
        Some((u * (z + p[(2, 3)]) - p[(0, 2)] * z - p[(0, 3)]) / fx)
    }

    fn retire(&mut self, frame: u32) {
        for t in &mut self.tracks {
            if t.missed_processed_frames > self.config.max_misses
                || frame.saturating_sub(t.last_update_frame) > self.config.max_coast_frames
            {
                t.status = TrackStatus::Dead;
            }
        }
        self.tracks.retain(Track::is_alive);
    }

    fn outputs(&self) -> Vec<TrackOutput> {
        self.tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed)
            .map(|t| {
                let b = t.box3d();
                TrackOutput {
                    id: t.id,
                    class: t.class,
                    box3d: b,
                    box2d: project_box3d(&b, &self.calib),
                    score: t.score,
                }
            })
            .collect()
    }
}

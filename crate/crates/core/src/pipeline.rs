//! Frame loop binding scheduler and tracker: predict, decide, step.

use serde::Serialize;

use crate::dataset::SequenceData;
use crate::error::Result;
use crate::kitti::TrackOutput;
use crate::scheduler::{DecisionReason, ScheduleStats, Scheduler, SchedulerConfig};
use crate::tracker::{MultiTracker, TrackerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRun {
    pub name: String,
    /// Confirmed tracks per frame.
    pub outputs: Vec<Vec<TrackOutput>>,
    pub decisions: Vec<FrameDecision>,
    pub stats: ScheduleStats,
    pub numerical_failures: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameDecision {
    pub frame: u32,
    pub process: bool,
    pub reason: DecisionReason,
}

impl SequenceRun {
    /// First frame with at least one confirmed track.
    pub fn first_output_frame(&self) -> Option<u32> {
        self.outputs.iter().position(|o| !o.is_empty()).map(|f| f as u32)
    }

    pub fn processed_frames(&self) -> impl Iterator<Item = u32> + '_ {
        self.decisions.iter().filter(|d| d.process).map(|d| d.frame)
    }
}

/// Replays one sequence. The trigger sees the camera frame that is
/// `camera_latency_frames` old, emulating a slow 2D detector.
pub fn run_sequence(seq: &SequenceData, tracker: &TrackerConfig, scheduler: &SchedulerConfig) -> Result<SequenceRun> {
    let mut trk = MultiTracker::new(tracker.clone(), seq.calibration.clone())?;
    let mut sched = Scheduler::new(scheduler.clone())?;
    let latency = scheduler.camera_latency_frames as usize;
    let mut outputs = Vec::with_capacity(seq.frames);
    let mut decisions = Vec::with_capacity(seq.frames);
    for bundle in seq.bundles() {
        let f = bundle.frame_index;
        trk.predict_to(f);
        let seen = (f as usize)
            .checked_sub(latency)
            .and_then(|i| seq.camera.get(i))
            .map_or(&[][..], Vec::as_slice);
        let decision = sched.decide(f, trk.tracks(), seen, &seq.calibration);
        outputs.push(trk.step(&bundle, &decision));
        decisions.push(FrameDecision {
            frame: f,
            process: decision.process,
            reason: decision.reason,
        });
    }
    Ok(SequenceRun {
        name: seq.name.clone(),
        outputs,
        decisions,
        stats: *sched.stats(),
        numerical_failures: trk.numerical_failures(),
    })
}

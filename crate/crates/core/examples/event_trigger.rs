//! Shows the scheduler's per-frame decisions around a car that emerges from
//! behind an occluder while the lidar runs at one frame in ten.

use framedrop::dataset::SequenceData;
use framedrop::pipeline::run_sequence;
use framedrop::scenario::{generate, late_detection_scenario, LATE_DETECTION_FRAME};
use framedrop::scheduler::estimate_distance;
use framedrop::{SchedulerConfig, TrackerConfig, TrackerVariant};

fn main() -> framedrop::Result<()> {
    let seq: SequenceData = generate(&late_detection_scenario())?.into();
    let tracker = TrackerConfig {
        variant: TrackerVariant::Fusion,
        ..TrackerConfig::default()
    };
    let sched = SchedulerConfig::periodic(1, 10, true);
    let run = run_sequence(&seq, &tracker, &sched)?;
    let window = LATE_DETECTION_FRAME - 4..LATE_DETECTION_FRAME + 8;
    for d in run.decisions.iter().filter(|d| window.contains(&d.frame)) {
        let cams: Vec<String> = seq.camera[d.frame as usize]
            .iter()
            .map(|c| format!("{:.1} m", estimate_distance(c, &seq.calibration, &sched.class_heights)))
            .collect();
        println!(
            "frame {:>2}: {:<7} {:<13} camera {:?}, confirmed tracks {}",
            d.frame,
            if d.process { "process" } else { "drop" },
            format!("{:?}", d.reason),
            cams,
            run.outputs[d.frame as usize].len()
        );
    }
    println!(
        "effective target {:.3} ({} of {} frames, {} triggered)",
        run.stats.effective_target(),
        run.stats.frames_processed,
        run.stats.frames_total,
        run.stats.frames_event_triggered
    );
    Ok(())
}

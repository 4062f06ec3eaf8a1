//! Latency from a car's appearance to its first confirmed track, with and
//! without the event trigger, across appearance phases of the 1-in-10
//! schedule.

use framedrop::dataset::SequenceData;
use framedrop::pipeline::run_sequence;
use framedrop::scenario::{generate, late_detection_scenario_at};
use framedrop::{SchedulerConfig, TrackerConfig, TrackerVariant};

fn main() -> framedrop::Result<()> {
    let tracker = TrackerConfig {
        variant: TrackerVariant::Fusion,
        ..TrackerConfig::default()
    };
    println!("appears  first track (off)  first track (on)  frames saved");
    for appear in 30..=40 {
        let seq: SequenceData = generate(&late_detection_scenario_at(appear, 12.0))?.into();
        let first = |trigger| -> framedrop::Result<Option<u32>> {
            Ok(run_sequence(&seq, &tracker, &SchedulerConfig::periodic(1, 10, trigger))?.first_output_frame())
        };
        let (off, on) = (first(false)?, first(true)?);
        let saved = off.zip(on).map(|(a, b)| a as i64 - b as i64);
        println!("{appear:>7}  {:>17}  {:>16}  {:>12}", fmt(off), fmt(on), saved.map_or("-".into(), |s| s.to_string()));
    }
    Ok(())
}

fn fmt(v: Option<u32>) -> String {
    v.map_or("-".into(), |v| v.to_string())
}

//! Scores tracker output against ground truth with HOTA and CLEAR MOT, at
//! full rate and with frames dropped.

use framedrop::dataset::SequenceData;
use framedrop::metrics::{evaluate, prepare_sequence, MatchingConfig};
use framedrop::pipeline::run_sequence;
use framedrop::scenario::{generate, urban_scenario, UrbanParams};
use framedrop::{ObjectClass, SchedulerConfig, TrackerConfig};

fn main() -> framedrop::Result<()> {
    let seq: SequenceData = generate(&urban_scenario(&UrbanParams {
        duration_frames: 300,
        ..UrbanParams::default()
    }))?
    .into();
    let gt = seq.ground_truth.as_ref().expect("generated scenes carry labels");
    let config = MatchingConfig::default();
    for m in [1, 3, 10] {
        let run = run_sequence(&seq, &TrackerConfig::default(), &SchedulerConfig::periodic(1, m, false))?;
        let prepared = prepare_sequence(&seq.name, gt, &run.outputs, seq.frames, ObjectClass::Car, &config);
        let r = evaluate(&[prepared], &config);
        println!(
            "1/{m:<2}: HOTA {:5.1} (DetA {:5.1}, AssA {:5.1})  MOTA {:5.1}  MOTP {:5.1}  IDSW {:>2}  FP {:>3}  FN {:>4}",
            r.hota,
            r.det_a,
            r.ass_a,
            r.mota.unwrap_or(f64::NAN),
            r.motp,
            r.idsw,
            r.fp,
            r.fn_
        );
    }
    Ok(())
}

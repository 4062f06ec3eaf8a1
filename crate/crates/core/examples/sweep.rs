//! Sweeps the published processing targets on a synthetic urban scene, with
//! and without the event trigger, and prints a results table.
//!
//! cargo run --release --example sweep -- [seed] [frames]

use framedrop::energy::reference::default_profile;
use framedrop::energy::ModelId;
use framedrop::experiment::{format_table, sweep, RunConfig, TriggerMode, BASELINE_TARGETS};
use framedrop::scenario::{generate, urban_scenario, UrbanParams};
use framedrop::{TrackerConfig, TrackerVariant};

fn main() -> framedrop::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut params = UrbanParams::default();
    if let Some(seed) = args.next() {
        params.seed = seed.parse().expect("seed must be an integer");
    }
    if let Some(frames) = args.next() {
        params.duration_frames = frames.parse().expect("frames must be an integer");
    }
    let seq = generate(&urban_scenario(&params))?.into();
    let config = RunConfig {
        tracker: TrackerConfig {
            variant: TrackerVariant::Fusion,
            ..TrackerConfig::default()
        },
        ..RunConfig::default()
    };
    let profile = default_profile(ModelId::PvRcnn);
    let outcomes = sweep(&[seq], &config, &profile, &BASELINE_TARGETS, TriggerMode::Both)?;
    let rows: Vec<_> = outcomes.into_iter().map(|o| o.report).collect();
    print!("{}", format_table(&rows));
    Ok(())
}

//! Writes a synthetic scene as a KITTI-layout dataset and loads it back.
//!
//! cargo run --example generate -- [out_dir]

use std::path::PathBuf;

use framedrop::dataset::{load_dataset, write_scenario};
use framedrop::scenario::{generate, urban_scenario, UrbanParams};

fn main() -> framedrop::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("framedrop-urban"), PathBuf::from);
    let spec = urban_scenario(&UrbanParams {
        duration_frames: 200,
        ..UrbanParams::default()
    });
    println!("spec:\n{}", serde_json::to_string_pretty(&spec).expect("spec serializes"));
    let scenario = generate(&spec)?;
    write_scenario(&out, &scenario)?;
    let loaded = load_dataset(&out)?;
    let seq = &loaded[0];
    let gt = seq.ground_truth.as_ref().expect("labels written");
    println!(
        "wrote {}: {} frames, {} tracks, {} lidar and {} camera detections",
        out.display(),
        seq.frames,
        gt.tracks.len(),
        seq.lidar.iter().map(Vec::len).sum::<usize>(),
        seq.camera.iter().map(Vec::len).sum::<usize>()
    );
    Ok(())
}

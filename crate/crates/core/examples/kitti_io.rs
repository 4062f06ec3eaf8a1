//! Parses KITTI tracking labels, detections and a calibration file, then
//! writes them back out.

use framedrop::kitti::{
    camera_detections, ground_truth_tracks, lidar_detections, parse_calibration, parse_label_file, write_records,
    LabelKind,
};

const LABELS: &str = "\
0 0 Car 0 0 -1.57 296.7 161.7 455.2 292.2 1.65 1.67 3.64 -4.55 1.71 13.41 -1.59
0 -1 DontCare -1 -1 -10 1100.0 150.0 1240.0 200.0 -1 -1 -1 -1000 -1000 -1000 -10
1 0 Car 0 0 -1.56 300.1 161.0 460.8 293.5 1.65 1.67 3.64 -4.45 1.71 13.32 -1.58
1 1 Pedestrian 0 1 0.21 700.0 150.0 740.0 260.0 1.80 0.60 0.80 2.10 1.72 18.00 0.32
";

const LIDAR: &str = "\
0 -1 Car 0 0 -1.57 -1 -1 -1 -1 1.60 1.70 3.70 -4.50 1.70 13.50 -1.60 0.94
1 -1 Car 0 0 -1.56 -1 -1 -1 -1 1.62 1.68 3.66 -4.40 1.70 13.30 -1.58 0.91
";

const CAMERA: &str = "\
1 -1 Pedestrian -1 -1 -10 698.0 151.0 741.0 262.0 -1000 -1000 -1000 -1000 -1000 -1000 -1000 0.77
";

const CALIB: &str = "\
P2: 7.215377e+02 0 6.095593e+02 4.485728e+01 0 7.215377e+02 1.728540e+02 2.163791e-01 0 0 1 2.745884e-03
R0_rect: 1 0 0 0 1 0 0 0 1
Tr_velo_to_cam: 0 -1 0 0 0 0 -1 -0.08 1 0 0 -0.27
";

fn main() -> framedrop::Result<()> {
    let labels = parse_label_file(LABELS.as_bytes(), LabelKind::Label)?;
    let gt = ground_truth_tracks(&labels)?;
    for t in &gt.tracks {
        println!("track {} ({:?}): {} frames", t.track_id, t.entries[0].class, t.entries.len());
    }
    println!("{} DontCare regions", gt.dont_care.len());

    let lidar = lidar_detections(&parse_label_file(LIDAR.as_bytes(), LabelKind::Detection)?, 2)?;
    let camera = camera_detections(&parse_label_file(CAMERA.as_bytes(), LabelKind::Detection)?, 2)?;
    println!("lidar per frame: {:?}", lidar.iter().map(Vec::len).collect::<Vec<_>>());
    println!("camera per frame: {:?}", camera.iter().map(Vec::len).collect::<Vec<_>>());

    let calib = parse_calibration(CALIB.as_bytes())?;
    println!("focal length {:.1} px", calib.focal_length());

    let mut out = Vec::new();
    write_records(&labels, &mut out)?;
    print!("\nre-serialized labels:\n{}", String::from_utf8_lossy(&out));
    Ok(())
}

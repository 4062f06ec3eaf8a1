//! Randomized cases shared by the acceptance run and the property tests.
//! Each case draws its inputs from `rng` and returns whether the property
//! held.

use framedrop::assignment::maximize;
use framedrop::geometry::overlap_3d;
use framedrop::kitti::{parse_label_file, write_records, KittiRecord, LabelKind};
use framedrop::tracker::{associate, measurement_of, NoiseConfig, TrackState, TrackStatus};
use framedrop::{
    AssociationMetric, Box3D, Calibration, Detection2D, Detection3D, Dims, FrameBundle, MultiTracker, ObjectClass,
    ScheduleDecision, TrackerConfig, TrackerVariant,
};
use nalgebra::{Matrix3, Matrix3x4, Rotation3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::brute_force_full_max;

pub fn random_car(rng: &mut impl Rng) -> Detection3D {
    let b = Box3D::new(
        Vector3::new(rng.random_range(-10.0..10.0), 1.65, rng.random_range(6.0..40.0)),
        Dims::new(1.5, 1.6, 3.9),
        rng.random_range(-3.0..3.0),
    )
    .unwrap();
    Detection3D {
        class: ObjectClass::Car,
        box3d: b,
        box2d_hint: None,
        score: rng.random_range(0.2..1.0),
    }
}

pub fn bundle(frame: u32, lidar: Vec<Detection3D>, camera: Vec<Detection2D>) -> FrameBundle {
    FrameBundle {
        sequence_id: "prop".into(),
        frame_index: frame,
        lidar_detections: lidar,
        camera_detections: camera,
        timestamp: frame as f64 * 0.1,
    }
}

/// Processes a few frames of drifting detections, then drops a run of
/// frames; no track may die through the miss counter during the drops.
pub fn drop_neutral_case(rng: &mut impl Rng, variant: TrackerVariant) -> bool {
    let config = TrackerConfig {
        variant,
        max_coast_frames: rng.random_range(1..40),
        max_misses: rng.random_range(0..4),
        ..TrackerConfig::default()
    };
    let mut trk = MultiTracker::new(config.clone(), framedrop::scenario::synthetic_calibration()).unwrap();
    let objects: Vec<Detection3D> = (0..rng.random_range(1..5)).map(|_| random_car(rng)).collect();
    let warmup = rng.random_range(1..6);
    for f in 0..warmup {
        let dets = objects.iter().filter(|_| rng.random::<f64>() < 0.8).cloned().collect();
        trk.step(&bundle(f, dets, Vec::new()), &ScheduleDecision::process());
    }
    let before: Vec<_> = trk.tracks().to_vec();
    for f in warmup..warmup + rng.random_range(1..60) {
        trk.step(&bundle(f, Vec::new(), Vec::new()), &ScheduleDecision::drop());
        for t in &before {
            match trk.tracks().iter().find(|x| x.id == t.id) {
                Some(now) => {
                    if now.missed_processed_frames != t.missed_processed_frames {
                        return false;
                    }
                }
                None => {
                    if f - t.last_update_frame <= config.max_coast_frames {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn psd_case(rng: &mut impl Rng) -> bool {
    let noise = NoiseConfig::default();
    let mut s = TrackState::from_box(&random_car(rng).box3d, &noise);
    for _ in 0..rng.random_range(1..40) {
        if rng.random::<bool>() {
            s.predict_cycles(rng.random_range(1..5), &noise);
        } else {
            let z = measurement_of(&random_car(rng).box3d);
            if s.update(&z, &noise).is_err() {
                return false;
            }
        }
        let p = &s.covariance;
        if p != &p.transpose() {
            return false;
        }
        let min_eig = SymmetricEigen::new(*p).eigenvalues.min();
        if min_eig < -1e-9 * p.amax().max(1.0) {
            return false;
        }
    }
    true
}

pub fn fusion_equivalence_case(rng: &mut impl Rng) -> bool {
    let lidar_cfg = TrackerConfig {
        confirm_hits: rng.random_range(1..4),
        max_misses: rng.random_range(0..4),
        max_coast_frames: rng.random_range(1..20),
        ..TrackerConfig::default()
    };
    let fusion_cfg = TrackerConfig {
        variant: TrackerVariant::Fusion,
        ..lidar_cfg.clone()
    };
    let calib = framedrop::scenario::synthetic_calibration();
    let mut a = MultiTracker::new(lidar_cfg, calib.clone()).unwrap();
    let mut b = MultiTracker::new(fusion_cfg, calib).unwrap();
    let objects: Vec<Detection3D> = (0..rng.random_range(0..5)).map(|_| random_car(rng)).collect();
    for f in 0..rng.random_range(1..30) {
        let dets: Vec<Detection3D> = objects
            .iter()
            .filter(|_| rng.random::<f64>() < 0.7)
            .map(|d| Detection3D {
                box3d: d.box3d.translated(Vector3::new(0.3 * f as f64, 0.0, 0.0)),
                ..d.clone()
            })
            .collect();
        let frame = bundle(f, dets, Vec::new());
        let decision = if rng.random::<f64>() < 0.5 {
            ScheduleDecision::process()
        } else {
            ScheduleDecision::drop()
        };
        let oa = a.step_lidar_only(&frame, &decision);
        let ob = b.step_fusion(&frame, &decision);
        if oa != ob || a.tracks() != b.tracks() {
            return false;
        }
    }
    true
}

/// With an unbounded distance gate every full matching survives, so the
/// associated total must equal the brute-force optimum.
pub fn association_case(rng: &mut impl Rng) -> bool {
    let config = TrackerConfig {
        association_metric: AssociationMetric::CentroidDistance,
        gate: 1e9,
        ..TrackerConfig::default()
    };
    let calib = framedrop::scenario::synthetic_calibration();
    let n_tracks = rng.random_range(0..=6);
    let mut trk = MultiTracker::new(config.clone(), calib).unwrap();
    let seeds: Vec<Detection3D> = (0..n_tracks).map(|_| random_car(rng)).map(|d| Detection3D { score: 0.9, ..d }).collect();
    trk.step(&bundle(0, seeds, Vec::new()), &ScheduleDecision::process());
    let tracks = trk.tracks().to_vec();
    if tracks.len() != n_tracks || tracks.iter().any(|t| t.status == TrackStatus::Dead) {
        return false;
    }
    let dets: Vec<Detection3D> = (0..rng.random_range(0..=6)).map(|_| random_car(rng)).collect();
    let assoc = associate(&tracks, &dets, &config);
    let sim: Vec<Vec<f64>> = tracks
        .iter()
        .map(|t| dets.iter().map(|d| -overlap_3d(&t.box3d(), &d.box3d, AssociationMetric::CentroidDistance)).collect())
        .collect();
    let got: f64 = assoc.matches.iter().map(|&(i, j)| sim[i][j]).sum();
    let want = if tracks.is_empty() || dets.is_empty() {
        0.0
    } else {
        brute_force_full_max(&sim).0
    };
    let full = assoc.matches.len() == tracks.len().min(dets.len());
    // The raw solver against the same oracle on unstructured matrices.
    let (r, c) = (rng.random_range(1..=6), rng.random_range(1..=6));
    let raw: Vec<Vec<f64>> = (0..r).map(|_| (0..c).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let solved: f64 = maximize(&raw).iter().map(|&(i, j)| raw[i][j]).sum();
    full && (got - want).abs() <= 1e-9 * want.abs().max(1.0)
        && (solved - brute_force_full_max(&raw).0).abs() <= 1e-12 * r.max(c) as f64
}

pub fn random_record(rng: &mut impl Rng, frame: u32, label: bool) -> KittiRecord {
    let classes = ["Car", "Van", "Pedestrian", "Cyclist", "Truck", "DontCare"];
    let v = |rng: &mut ChaCha8Rng| -> f64 { rng.random_range(-1e3..1e3) };
    let mut r = ChaCha8Rng::seed_from_u64(rng.random());
    let r = &mut r;
    KittiRecord {
        frame,
        track_id: if label { r.random_range(-1..1000) } else { -1 },
        type_name: classes[r.random_range(0..classes.len())].to_string(),
        truncated: r.random_range(0.0..1.0),
        occluded: r.random_range(-1..4),
        alpha: r.random_range(-3.2..3.2),
        bbox: [v(r), v(r), v(r), v(r)],
        dims: [r.random_range(0.1..5.0), r.random_range(0.1..5.0), r.random_range(0.1..12.0)],
        location: [v(r), r.random_range(-3.0..3.0), v(r)],
        rotation_y: if r.random::<f64>() < 0.05 { -0.0 } else { r.random_range(-3.2..3.2) },
        score: if label && r.random::<bool>() { None } else { Some(r.random_range(-20.0..20.0)) },
    }
}

pub fn records_roundtrip(records: &[KittiRecord], kind: LabelKind) -> bool {
    let mut buf = Vec::new();
    write_records(records, &mut buf).unwrap();
    let parsed = parse_label_file(buf.as_slice(), kind).unwrap();
    parsed.len() == records.len()
        && parsed.iter().zip(records).all(|(a, b)| {
            a == b && a.rotation_y.to_bits() == b.rotation_y.to_bits()
        })
}

pub fn random_calibration(rng: &mut impl Rng) -> Calibration {
    let f = rng.random_range(300.0..1500.0);
    #[rustfmt::skip]
    let projection = Matrix3x4::new(
        f, 0.0, rng.random_range(500.0..700.0), rng.random_range(-400.0..50.0),
        0.0, f, rng.random_range(150.0..200.0), rng.random_range(-1.0..1.0),
        0.0, 0.0, 1.0, rng.random_range(-0.01..0.01),
    );
    let rect: Matrix3<f64> = *Rotation3::from_euler_angles(
        rng.random_range(-0.02..0.02),
        rng.random_range(-0.02..0.02),
        rng.random_range(-0.02..0.02),
    )
    .matrix();
    let rot: Matrix3<f64> = *Rotation3::from_euler_angles(
        rng.random_range(-3.2..3.2),
        rng.random_range(-1.5..1.5),
        rng.random_range(-3.2..3.2),
    )
    .matrix();
    let mut velo = Matrix3x4::zeros();
    velo.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    for i in 0..3 {
        velo[(i, 3)] = rng.random_range(-1.0..1.0);
    }
    Calibration::new(projection, rect, velo).unwrap()
}


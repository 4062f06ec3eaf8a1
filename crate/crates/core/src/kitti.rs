//! KITTI tracking text formats: calibration, labels, detections, and tracker
//! output.
//!
//! One row grammar serves every stream:
//!
//! ```text
//! frame id type truncated occluded alpha x1 y1 x2 y2 h w l x y z rot_y [score]
//! ```
//!
//! Lidar detections fill the 3D fields, camera detections set all seven 3D
//! fields to [`INVALID_3D`]. Floats are written with Rust's shortest
//! round-trip formatting so write-then-parse is bit exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{Matrix3, Matrix3x4, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Box2D, Box3D, Calibration, Dims};

/// Sentinel used for absent 3D fields in camera-only rows.
pub const INVALID_3D: f64 = -1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectClass {
    Car,
    Pedestrian,
    Cyclist,
    /// Tracked but never scored.
    Other,
}

impl ObjectClass {
    pub fn from_kitti(name: &str) -> Self {
        match name {
            "Car" => Self::Car,
            "Pedestrian" => Self::Pedestrian,
            "Cyclist" => Self::Cyclist,
            _ => Self::Other,
        }
    }

    pub fn kitti_name(self) -> &'static str {
        match self {
            Self::Car => "Car",
            Self::Pedestrian => "Pedestrian",
            Self::Cyclist => "Cyclist",
            Self::Other => "Misc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection3D {
    pub class: ObjectClass,
    pub box3d: Box3D,
    pub box2d_hint: Option<Box2D>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection2D {
    pub class: ObjectClass,
    pub box2d: Box2D,
    pub score: f64,
}

/// All inputs for one emulated perception cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub sequence_id: String,
    pub frame_index: u32,
    pub lidar_detections: Vec<Detection3D>,
    pub camera_detections: Vec<Detection2D>,
    pub timestamp: f64,
}

/// One whitespace-separated row, kept exactly as read.
#[derive(Debug, Clone, PartialEq)]
pub struct KittiRecord {
    pub frame: u32,
    pub track_id: i64,
    pub type_name: String,
    pub truncated: f64,
    pub occluded: i32,
    pub alpha: f64,
    pub bbox: [f64; 4],
    /// Height, width, length.
    pub dims: [f64; 3],
    /// Bottom-center in rectified camera coordinates.
    pub location: [f64; 3],
    pub rotation_y: f64,
    pub score: Option<f64>,
}

impl KittiRecord {
    pub fn is_dont_care(&self) -> bool {
        self.type_name == "DontCare"
    }

    pub fn class(&self) -> ObjectClass {
        ObjectClass::from_kitti(&self.type_name)
    }

    pub fn has_3d(&self) -> bool {
        !(self.dims.iter().chain(&self.location).all(|&v| v == INVALID_3D)
            && self.rotation_y == INVALID_3D)
            && self.dims.iter().all(|&v| v > 0.0)
    }

    pub fn box2d(&self) -> Option<Box2D> {
        Box2D::new(self.bbox[0], self.bbox[1], self.bbox[2], self.bbox[3]).ok()
    }

    pub fn box3d(&self) -> Option<Box3D> {
        if !self.has_3d() {
            return None;
        }
        let [h, w, l] = self.dims;
        let [x, y, z] = self.location;
        Box3D::new(Vector3::new(x, y, z), Dims::new(h, w, l), self.rotation_y).ok()
    }
}

impl std::fmt::Display for KittiRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {}",
            self.frame, self.track_id, self.type_name, self.truncated, self.occluded, self.alpha
        )?;
        for v in self.bbox.iter().chain(&self.dims).chain(&self.location) {
            write!(f, " {v}")?;
        }
        write!(f, " {}", self.rotation_y)?;
        if let Some(score) = self.score {
            write!(f, " {score}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    /// Ground truth or tracker output: track id required, score optional.
    Label,
    /// Per-frame detections: id ignored, score required.
    Detection,
}

const FIELD_NAMES: [&str; 18] = [
    "frame", "id", "type", "truncated", "occluded", "alpha", "x1", "y1", "x2", "y2", "h", "w",
    "l", "x", "y", "z", "rot_y", "score",
];

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, field: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, FIELD_NAMES[field], format!("non-numeric token `{tok}`")))
}

/// Parses a label or detection stream. Rows come back sorted by frame
/// (stable within a frame); blank lines are skipped.
pub fn parse_label_file(reader: impl BufRead, kind: LabelKind) -> Result<Vec<KittiRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let row = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let expected = match kind {
            LabelKind::Label => 17..=18,
            LabelKind::Detection => 18..=18,
        };
        if !expected.contains(&toks.len()) {
            let key = if kind == LabelKind::Detection && toks.len() == 17 {
                "score"
            } else {
                "row"
            };
            return Err(Error::parse(
                row,
                key,
                format!("expected {expected:?} fields, found {}", toks.len()),
            ));
        }
        let f = |i: usize| parse_num::<f64>(toks[i], row, i);
        let track_id = match kind {
            LabelKind::Label => parse_num::<i64>(toks[1], row, 1)?,
            LabelKind::Detection => toks[1].parse::<i64>().unwrap_or(-1),
        };
        let score = if toks.len() == 18 { Some(f(17)?) } else { None };
        if let Some(s) = score {
            if !s.is_finite() {
                return Err(Error::parse(row, "score", "score must be finite"));
            }
        }
        out.push(KittiRecord {
            frame: parse_num(toks[0], row, 0)?,
            track_id,
            type_name: toks[2].to_string(),
            truncated: f(3)?,
            occluded: parse_num(toks[4], row, 4)?,
            alpha: f(5)?,
            bbox: [f(6)?, f(7)?, f(8)?, f(9)?],
            dims: [f(10)?, f(11)?, f(12)?],
            location: [f(13)?, f(14)?, f(15)?],
            rotation_y: f(16)?,
            score,
        });
    }
    out.sort_by_key(|r| r.frame);
    Ok(out)
}

pub fn write_records(records: &[KittiRecord], mut sink: impl Write) -> Result<()> {
    for r in records {
        writeln!(sink, "{r}")?;
    }
    sink.flush()?;
    Ok(())
}

/// Per-frame entry of a ground-truth track.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthEntry {
    pub frame: u32,
    pub class: ObjectClass,
    pub box2d: Option<Box2D>,
    pub box3d: Option<Box3D>,
    pub truncated: f64,
    pub occluded: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    pub track_id: i64,
    pub entries: Vec<GroundTruthEntry>,
}

/// Image regions excluded from scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct DontCareRegion {
    pub frame: u32,
    pub box2d: Box2D,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub tracks: Vec<GroundTruthTrack>,
    pub dont_care: Vec<DontCareRegion>,
}

impl GroundTruth {
    pub fn max_frame(&self) -> Option<u32> {
        let a = self.tracks.iter().flat_map(|t| t.entries.iter().map(|e| e.frame)).max();
        let b = self.dont_care.iter().map(|d| d.frame).max();
        a.max(b)
    }
}

/// Groups label rows into tracks ordered by id. Fails on a repeated
/// `(track_id, frame)` pair.
pub fn ground_truth_tracks(records: &[KittiRecord]) -> Result<GroundTruth> {
    let mut tracks: BTreeMap<i64, Vec<GroundTruthEntry>> = BTreeMap::new();
    let mut dont_care = Vec::new();
    for (i, r) in records.iter().enumerate() {
        if r.is_dont_care() {
            if let Some(b) = r.box2d() {
                dont_care.push(DontCareRegion { frame: r.frame, box2d: b });
            }
            continue;
        }
        let entries = tracks.entry(r.track_id).or_default();
        if entries.iter().any(|e| e.frame == r.frame) {
            return Err(Error::parse(
                i + 1,
                "id",
                format!("track {} appears twice in frame {}", r.track_id, r.frame),
            ));
        }
        entries.push(GroundTruthEntry {
            frame: r.frame,
            class: r.class(),
            box2d: r.box2d(),
            box3d: r.box3d(),
            truncated: r.truncated,
            occluded: r.occluded,
        });
    }
    Ok(GroundTruth {
        tracks: tracks
            .into_iter()
            .map(|(track_id, mut entries)| {
                entries.sort_by_key(|e| e.frame);
                GroundTruthTrack { track_id, entries }
            })
            .collect(),
        dont_care,
    })
}

/// Splits detection rows into per-frame lidar detections (rows with 3D
/// fields) over `frames` frames. Rows past the end are an error.
pub fn lidar_detections(records: &[KittiRecord], frames: usize) -> Result<Vec<Vec<Detection3D>>> {
    let mut out = vec![Vec::new(); frames];
    for r in records.iter().filter(|r| !r.is_dont_care()) {
        let Some(box3d) = r.box3d() else { continue };
        let slot = out.get_mut(r.frame as usize).ok_or_else(|| {
            Error::parse(0, "frame", format!("frame {} beyond sequence length {frames}", r.frame))
        })?;
        slot.push(Detection3D {
            class: r.class(),
            box3d,
            box2d_hint: r.box2d(),
            score: r.score.unwrap_or(1.0),
        });
    }
    Ok(out)
}

/// Per-frame camera detections from rows whose 3D fields are the sentinel.
pub fn camera_detections(records: &[KittiRecord], frames: usize) -> Result<Vec<Vec<Detection2D>>> {
    let mut out = vec![Vec::new(); frames];
    for r in records.iter().filter(|r| !r.is_dont_care() && !r.has_3d()) {
        let box2d = r.box2d().ok_or_else(|| {
            Error::parse(0, "bbox", format!("invalid camera box in frame {}", r.frame))
        })?;
        let score = r.score.unwrap_or(1.0);
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::parse(0, "score", format!("camera score {score} outside [0, 1]")));
        }
        let slot = out.get_mut(r.frame as usize).ok_or_else(|| {
            Error::parse(0, "frame", format!("frame {} beyond sequence length {frames}", r.frame))
        })?;
        slot.push(Detection2D {
            class: r.class(),
            box2d,
            score,
        });
    }
    Ok(out)
}

pub fn lidar_record(frame: u32, det: &Detection3D) -> KittiRecord {
    let b = &det.box3d;
    KittiRecord {
        frame,
        track_id: -1,
        type_name: det.class.kitti_name().to_string(),
        truncated: 0.0,
        occluded: 0,
        alpha: observation_angle(b),
        bbox: det
            .box2d_hint
            .map_or([-1.0; 4], |h| [h.x_min, h.y_min, h.x_max, h.y_max]),
        dims: [b.dims.height, b.dims.width, b.dims.length],
        location: [b.location.x, b.location.y, b.location.z],
        rotation_y: b.yaw,
        score: Some(det.score),
    }
}

pub fn camera_record(frame: u32, det: &Detection2D) -> KittiRecord {
    let b = &det.box2d;
    KittiRecord {
        frame,
        track_id: -1,
        type_name: det.class.kitti_name().to_string(),
        truncated: -1.0,
        occluded: -1,
        alpha: -10.0,
        bbox: [b.x_min, b.y_min, b.x_max, b.y_max],
        dims: [INVALID_3D; 3],
        location: [INVALID_3D; 3],
        rotation_y: INVALID_3D,
        score: Some(det.score),
    }
}

/// KITTI observation angle `alpha` for a box.
pub fn observation_angle(b: &Box3D) -> f64 {
    crate::geometry::normalize_angle(b.yaw - b.location.x.atan2(b.location.z))
}

/// A confirmed track as emitted for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub class: ObjectClass,
    pub box3d: Box3D,
    /// Projection into the image; `None` when not projectable.
    pub box2d: Option<Box2D>,
    pub score: f64,
}

impl TrackOutput {
    pub fn to_record(&self, frame: u32) -> KittiRecord {
        let b = &self.box3d;
        KittiRecord {
            frame,
            track_id: self.id as i64,
            type_name: self.class.kitti_name().to_string(),
            truncated: 0.0,
            occluded: 0,
            alpha: observation_angle(b),
            bbox: self
                .box2d
                .map_or([-1.0; 4], |h| [h.x_min, h.y_min, h.x_max, h.y_max]),
            dims: [b.dims.height, b.dims.width, b.dims.length],
            location: [b.location.x, b.location.y, b.location.z],
            rotation_y: b.yaw,
            score: Some(self.score),
        }
    }

    pub fn from_record(r: &KittiRecord) -> Option<Self> {
        Some(Self {
            id: u64::try_from(r.track_id).ok()?,
            class: r.class(),
            box3d: r.box3d()?,
            box2d: r.box2d(),
            score: r.score.unwrap_or(1.0),
        })
    }
}

/// Writes per-frame track outputs (index = frame) in the KITTI tracking
/// submission format.
pub fn write_tracking_output(frames: &[Vec<TrackOutput>], sink: impl Write) -> Result<()> {
    let records: Vec<KittiRecord> = frames
        .iter()
        .enumerate()
        .flat_map(|(f, outs)| outs.iter().map(move |o| o.to_record(f as u32)))
        .collect();
    write_records(&records, sink)
}

/// Reads tracker output back into per-frame lists spanning `frames` frames
/// (or up to the last frame present when `frames` is `None`).
pub fn read_tracking_output(reader: impl BufRead, frames: Option<usize>) -> Result<Vec<Vec<TrackOutput>>> {
    let records = parse_label_file(reader, LabelKind::Label)?;
    let n = frames.unwrap_or_else(|| records.last().map_or(0, |r| r.frame as usize + 1));
    let mut out = vec![Vec::new(); n];
    for r in &records {
        let o = TrackOutput::from_record(r)
            .ok_or_else(|| Error::parse(0, "row", format!("invalid track row in frame {}", r.frame)))?;
        out.get_mut(r.frame as usize)
            .ok_or_else(|| Error::parse(0, "frame", format!("frame {} out of range", r.frame)))?
            .push(o);
    }
    Ok(out)
}

/// Builds one bundle per frame in `0..frames`.
pub fn assemble_sequence(
    sequence_id: &str,
    lidar: Vec<Vec<Detection3D>>,
    camera: Vec<Vec<Detection2D>>,
    frames: usize,
    cycle_time: f64,
) -> Vec<FrameBundle> {
    let mut lidar = lidar.into_iter();
    let mut camera = camera.into_iter();
    (0..frames)
        .map(|f| FrameBundle {
            sequence_id: sequence_id.to_string(),
            frame_index: f as u32,
            lidar_detections: lidar.next().unwrap_or_default(),
            camera_detections: camera.next().unwrap_or_default(),
            timestamp: f as f64 * cycle_time,
        })
        .collect()
}

fn parse_matrix<const N: usize>(key: &str, line: usize, toks: &[&str]) -> Result<[f64; N]> {
    if toks.len() != N {
        return Err(Error::parse(
            line,
            key,
            format!("expected {N} values, found {}", toks.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(toks) {
        *o = t
            .parse()
            .map_err(|_| Error::parse(line, key, format!("non-numeric token `{t}`")))?;
    }
    Ok(out)
}

/// Parses a KITTI calibration file, returning the left color camera (P2).
pub fn parse_calibration(reader: impl BufRead) -> Result<Calibration> {
    let mut p2 = None;
    let mut rect = None;
    let mut velo = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let row = idx + 1;
        let mut toks = line.split_whitespace();
        let Some(key) = toks.next() else { continue };
        let key = key.trim_end_matches(':');
        let values: Vec<&str> = toks.collect();
        match key {
            "P2" => p2 = Some(parse_matrix::<12>(key, row, &values)?),
            "R0_rect" | "R_rect" => rect = Some(parse_matrix::<9>(key, row, &values)?),
            "Tr_velo_to_cam" | "Tr_velo_cam" => velo = Some(parse_matrix::<12>(key, row, &values)?),
            _ => {}
        }
    }
    let missing = |k: &str| Error::parse(0, k, format!("missing key {k}"));
    let p2 = p2.ok_or_else(|| missing("P2"))?;
    let rect = rect.ok_or_else(|| missing("R0_rect"))?;
    let velo = velo.ok_or_else(|| missing("Tr_velo_to_cam"))?;
    Calibration::new(
        Matrix3x4::from_row_slice(&p2),
        Matrix3::from_row_slice(&rect),
        Matrix3x4::from_row_slice(&velo),
    )
}

pub fn write_calibration(calib: &Calibration, mut sink: impl Write) -> Result<()> {
    fn row_major(values: impl Iterator<Item = f64>) -> String {
        let mut s = String::new();
        for v in values {
            let _ = write!(s, " {v}");
        }
        s
    }
    let p = row_major(calib.projection.transpose().iter().copied());
    for cam in 0..4 {
        writeln!(sink, "P{cam}:{p}")?;
    }
    writeln!(sink, "R0_rect:{}", row_major(calib.rectification.transpose().iter().copied()))?;
    writeln!(sink, "Tr_velo_to_cam:{}", row_major(calib.lidar_to_cam.transpose().iter().copied()))?;
    sink.flush()?;
    Ok(())
}

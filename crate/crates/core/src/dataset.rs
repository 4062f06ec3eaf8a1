//! On-disk dataset layout:
//!
//! ```text
//! <root>/seqmap.txt                  name empty 000000 <frames>
//! <root>/calib/<seq>.txt
//! <root>/label_02/<seq>.txt          ground truth (optional)
//! <root>/detections/lidar/<seq>.txt
//! <root>/detections/camera/<seq>.txt
//! ```

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::Calibration;
use crate::kitti::{
    camera_detections, camera_record, ground_truth_tracks, lidar_detections, lidar_record, parse_calibration,
    parse_label_file, write_calibration, write_records, Detection2D, Detection3D, FrameBundle, GroundTruth,
    KittiRecord, LabelKind,
};
use crate::scenario::Scenario;
use crate::CYCLE_TIME_S;

/// Everything needed to replay and score one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceData {
    pub name: String,
    pub frames: usize,
    pub calibration: Calibration,
    pub ground_truth: Option<GroundTruth>,
    pub lidar: Vec<Vec<Detection3D>>,
    pub camera: Vec<Vec<Detection2D>>,
}

impl SequenceData {
    pub fn bundles(&self) -> Vec<FrameBundle> {
        crate::kitti::assemble_sequence(&self.name, self.lidar.clone(), self.camera.clone(), self.frames, CYCLE_TIME_S)
    }
}

impl From<Scenario> for SequenceData {
    fn from(s: Scenario) -> Self {
        Self {
            name: s.name,
            frames: s.frames,
            calibration: s.calibration,
            ground_truth: Some(s.ground_truth),
            lidar: s.lidar,
            camera: s.camera,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse { line, key, reason } => Error::Parse {
            line,
            key,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

pub fn calib_path(root: &Path, seq: &str) -> PathBuf {
    root.join("calib").join(format!("{seq}.txt"))
}

pub fn label_path(root: &Path, seq: &str) -> PathBuf {
    root.join("label_02").join(format!("{seq}.txt"))
}

pub fn lidar_path(root: &Path, seq: &str) -> PathBuf {
    root.join("detections").join("lidar").join(format!("{seq}.txt"))
}

pub fn camera_path(root: &Path, seq: &str) -> PathBuf {
    root.join("detections").join("camera").join(format!("{seq}.txt"))
}

/// Sequence names with their frame counts, from `seqmap.txt` when present,
/// otherwise every `calib/*.txt` with lengths inferred from the data.
pub fn list_sequences(root: &Path) -> Result<Vec<(String, Option<usize>)>> {
    let seqmap = root.join("seqmap.txt");
    if seqmap.exists() {
        let text = fs::read_to_string(&seqmap).map_err(|e| Error::io(&seqmap, e))?;
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != 4 {
                return Err(Error::parse(i + 1, "seqmap", format!("expected 4 fields, found {}", toks.len())));
            }
            let frames = toks[3]
                .parse()
                .map_err(|_| Error::parse(i + 1, "seqmap", format!("bad frame count `{}`", toks[3])))?;
            out.push((toks[0].to_string(), Some(frames)));
        }
        return Ok(out);
    }
    let dir = root.join("calib");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let p = e.path();
            (p.extension()? == "txt").then(|| p.file_stem()?.to_str().map(str::to_string))?
        })
        .collect();
    names.sort();
    Ok(names.into_iter().map(|n| (n, None)).collect())
}

fn read_records(path: &Path, kind: LabelKind) -> Result<Vec<KittiRecord>> {
    with_path(path, parse_label_file(open(path)?, kind))
}

pub fn load_sequence(root: &Path, name: &str, frames: Option<usize>) -> Result<SequenceData> {
    let cp = calib_path(root, name);
    let calibration = with_path(&cp, parse_calibration(open(&cp)?))?;
    let lp = label_path(root, name);
    let labels = if lp.exists() {
        Some(read_records(&lp, LabelKind::Label)?)
    } else {
        None
    };
    let lidar_recs = read_records(&lidar_path(root, name), LabelKind::Detection)?;
    let camera_recs = read_records(&camera_path(root, name), LabelKind::Detection)?;
    let frames = frames.unwrap_or_else(|| {
        labels
            .iter()
            .flatten()
            .chain(&lidar_recs)
            .chain(&camera_recs)
            .map(|r| r.frame as usize + 1)
            .max()
            .unwrap_or(0)
    });
    let ground_truth = labels.map(|l| with_path(&lp, ground_truth_tracks(&l))).transpose()?;
    Ok(SequenceData {
        name: name.to_string(),
        frames,
        calibration,
        ground_truth,
        lidar: with_path(&lidar_path(root, name), lidar_detections(&lidar_recs, frames))?,
        camera: with_path(&camera_path(root, name), camera_detections(&camera_recs, frames))?,
    })
}

pub fn load_dataset(root: &Path) -> Result<Vec<SequenceData>> {
    list_sequences(root)?
        .into_iter()
        .map(|(name, frames)| load_sequence(root, &name, frames))
        .collect()
}

/// Writes one sequence's calibration and detection streams; labels are
/// written when given.
pub fn write_sequence(root: &Path, seq: &SequenceData, labels: Option<&[KittiRecord]>) -> Result<()> {
    let finish = |mut w: BufWriter<fs::File>, path: &Path| w.flush().map_err(|e| Error::io(path, e));
    let cp = calib_path(root, &seq.name);
    let mut w = create(&cp)?;
    write_calibration(&seq.calibration, &mut w)?;
    finish(w, &cp)?;

    if let Some(labels) = labels {
        let lp = label_path(root, &seq.name);
        let mut w = create(&lp)?;
        write_records(labels, &mut w)?;
        finish(w, &lp)?;
    }

    let lidar: Vec<KittiRecord> = seq
        .lidar
        .iter()
        .enumerate()
        .flat_map(|(f, d)| d.iter().map(move |d| lidar_record(f as u32, d)))
        .collect();
    let p = lidar_path(root, &seq.name);
    let mut w = create(&p)?;
    write_records(&lidar, &mut w)?;
    finish(w, &p)?;

    let camera: Vec<KittiRecord> = seq
        .camera
        .iter()
        .enumerate()
        .flat_map(|(f, d)| d.iter().map(move |d| camera_record(f as u32, d)))
        .collect();
    let p = camera_path(root, &seq.name);
    let mut w = create(&p)?;
    write_records(&camera, &mut w)?;
    finish(w, &p)
}

pub fn write_seqmap(root: &Path, sequences: &[(&str, usize)]) -> Result<()> {
    let path = root.join("seqmap.txt");
    let mut w = create(&path)?;
    for (name, frames) in sequences {
        writeln!(w, "{name} empty 000000 {frames:06}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Writes a generated scenario as a single-sequence dataset.
pub fn write_scenario(root: &Path, scenario: &Scenario) -> Result<()> {
    let seq = SequenceData::from(scenario.clone());
    write_sequence(root, &seq, Some(&scenario.labels))?;
    write_seqmap(root, &[(&scenario.name, scenario.frames)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate, urban_scenario, UrbanParams};

    #[test]
    fn scenario_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = UrbanParams::default();
        params.duration_frames = 120;
        let s = generate(&urban_scenario(&params)).unwrap();
        write_scenario(dir.path(), &s).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0], SequenceData::from(s));
    }

    #[test]
    fn infers_frames_without_seqmap() {
        let dir = tempfile::tempdir().unwrap();
        let s = generate(&crate::scenario::late_detection_scenario()).unwrap();
        write_scenario(dir.path(), &s).unwrap();
        fs::remove_file(dir.path().join("seqmap.txt")).unwrap();
        let seqs = list_sequences(dir.path()).unwrap();
        assert_eq!(seqs, vec![(s.name.clone(), None)]);
        let loaded = load_sequence(dir.path(), &s.name, None).unwrap();
        assert_eq!(loaded.ground_truth, Some(s.ground_truth));
    }

    #[test]
    fn missing_files_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_sequence(dir.path(), "0007", Some(3)).unwrap_err().to_string();
        assert!(err.contains("0007.txt"), "{err}");
    }
}

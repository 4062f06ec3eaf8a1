//! Tracking-quality evaluation: CLEAR (MOTA/MOTP/IDSW) and HOTA.
//!
//! Ground truth and tracker output are first reduced to [`EvalSequence`]s
//! following the KITTI convention: only the evaluated class is kept, ground
//! truth that is too occluded or truncated is dropped together with the
//! predictions it explains, and unmatched predictions that are too small or
//! mostly inside a DontCare region are discarded.

mod clear;
mod hota;

use serde::{Deserialize, Serialize};

pub use clear::{compute_clear, compute_clear_sequence, ClearResult};
pub use hota::{compute_hota, compute_hota_sequence, HotaAlpha, HotaResult};

use crate::assignment;
use crate::error::{Error, Result};
use crate::geometry::{bev_iou, iou_2d, Box2D, Box3D};
use crate::kitti::{GroundTruth, ObjectClass, TrackOutput};

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Similarity {
    #[serde(rename = "2d-iou")]
    Iou2d,
    #[serde(rename = "bev-iou")]
    BevIou,
}

/// Ground-truth difficulty filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GtFilter {
    pub max_occlusion: i32,
    pub max_truncation: f64,
    /// Unmatched predictions at or below this pixel height are discarded.
    pub min_height_px: f64,
}

impl Default for GtFilter {
    fn default() -> Self {
        Self {
            max_occlusion: 2,
            max_truncation: 0.0,
            min_height_px: 25.0,
        }
    }
}

impl GtFilter {
    /// Keeps every ground-truth object and every prediction.
    pub fn permissive() -> Self {
        Self {
            max_occlusion: i32::MAX,
            max_truncation: f64::INFINITY,
            min_height_px: f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingConfig {
    pub similarity: Similarity,
    pub clear_threshold: f64,
    pub hota_alphas: Vec<f64>,
    pub classes: Vec<ObjectClass>,
    pub gt_filter: GtFilter,
    /// Unmatched predictions covered beyond this fraction by a DontCare
    /// region are discarded.
    pub dont_care_overlap: f64,
}

pub fn default_alphas() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            similarity: Similarity::Iou2d,
            clear_threshold: 0.5,
            hota_alphas: default_alphas(),
            classes: vec![ObjectClass::Car],
            gt_filter: GtFilter::default(),
            dont_care_overlap: 0.5,
        }
    }
}

impl MatchingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clear_threshold > 0.0 && self.clear_threshold < 1.0) {
            return Err(Error::config("matching.clear_threshold", "must lie in (0, 1)"));
        }
        if self.hota_alphas.is_empty() {
            return Err(Error::config("matching.hota_alphas", "must not be empty"));
        }
        if self.hota_alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(Error::config("matching.hota_alphas", "alphas must lie in (0, 1)"));
        }
        if self.hota_alphas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("matching.hota_alphas", "alphas must be strictly increasing"));
        }
        if self.classes.is_empty() {
            return Err(Error::config("matching.classes", "must not be empty"));
        }
        Ok(())
    }
}

/// An object in one frame, ground truth or prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalObject {
    pub id: u64,
    pub box2d: Option<Box2D>,
    pub box3d: Option<Box3D>,
}

impl EvalObject {
    pub fn from_box2d(id: u64, b: Box2D) -> Self {
        Self {
            id,
            box2d: Some(b),
            box3d: None,
        }
    }
}

pub fn object_similarity(a: &EvalObject, b: &EvalObject, sim: Similarity) -> f64 {
    match sim {
        Similarity::Iou2d => match (&a.box2d, &b.box2d) {
            (Some(x), Some(y)) => iou_2d(x, y),
            _ => 0.0,
        },
        Similarity::BevIou => match (&a.box3d, &b.box3d) {
            (Some(x), Some(y)) => bev_iou(x, y),
            _ => 0.0,
        },
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalFrame {
    pub gt: Vec<EvalObject>,
    pub pred: Vec<EvalObject>,
}

impl EvalFrame {
    /// Rows are ground truth, columns predictions.
    pub fn similarity(&self, sim: Similarity) -> Vec<Vec<f64>> {
        self.gt
            .iter()
            .map(|g| self.pred.iter().map(|p| object_similarity(g, p, sim)).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalSequence {
    pub name: String,
    pub frames: Vec<EvalFrame>,
}

/// Optimal one-to-one matching with pairs below `threshold` removed.
pub fn match_frame(gt: &[EvalObject], pred: &[EvalObject], sim: Similarity, threshold: f64) -> Vec<(usize, usize)> {
    let mat: Vec<Vec<f64>> = gt
        .iter()
        .map(|g| pred.iter().map(|p| object_similarity(g, p, sim)).collect())
        .collect();
    assignment::maximize_gated(&mat, threshold - EPS)
}

fn intersection_over_area(det: &Box2D, region: &Box2D) -> f64 {
    let iw = (det.x_max.min(region.x_max) - det.x_min.max(region.x_min)).max(0.0);
    let ih = (det.y_max.min(region.y_max) - det.y_min.max(region.y_min)).max(0.0);
    let area = det.area();
    if area <= 0.0 {
        0.0
    } else {
        iw * ih / area
    }
}

/// Reduces one sequence to the objects scored for `class`.
pub fn prepare_sequence(
    name: &str,
    gt: &GroundTruth,
    predictions: &[Vec<TrackOutput>],
    frames: usize,
    class: ObjectClass,
    config: &MatchingConfig,
) -> EvalSequence {
    struct GtObj {
        obj: EvalObject,
        class: ObjectClass,
        occluded: i32,
        truncated: f64,
    }
    let mut gt_frames: Vec<Vec<GtObj>> = (0..frames).map(|_| Vec::new()).collect();
    for track in &gt.tracks {
        for e in &track.entries {
            let Some(slot) = gt_frames.get_mut(e.frame as usize) else { continue };
            if e.class != class && e.class != ObjectClass::Other {
                continue;
            }
            let obj = EvalObject {
                id: track.track_id as u64,
                box2d: e.box2d,
                box3d: e.box3d,
            };
            slot.push(GtObj {
                obj,
                class: e.class,
                occluded: e.occluded,
                truncated: e.truncated,
            });
        }
    }

    let filter = &config.gt_filter;
    let mut out = Vec::with_capacity(frames);
    for (f, gts) in gt_frames.into_iter().enumerate() {
        let preds: Vec<EvalObject> = predictions
            .get(f)
            .map(|p| {
                p.iter()
                    .filter(|o| o.class == class)
                    .map(|o| EvalObject {
                        id: o.id,
                        box2d: o.box2d,
                        box3d: Some(o.box3d),
                    })
                    .filter(|o| config.similarity != Similarity::Iou2d || o.box2d.is_some())
                    .collect()
            })
            .unwrap_or_default();

        let gt_objs: Vec<EvalObject> = gts.iter().map(|g| g.obj.clone()).collect();
        let matches = match_frame(&gt_objs, &preds, config.similarity, 0.5);
        let mut remove = vec![false; preds.len()];
        let mut matched = vec![false; preds.len()];
        for &(gi, pi) in &matches {
            matched[pi] = true;
            let g = &gts[gi];
            if g.class != class
                || g.occluded as f64 > filter.max_occlusion as f64 + EPS
                || g.truncated > filter.max_truncation + EPS
            {
                remove[pi] = true;
            }
        }
        for (pi, p) in preds.iter().enumerate() {
            if matched[pi] {
                continue;
            }
            if let Some(b) = p.box2d {
                let too_small = b.height() <= filter.min_height_px + EPS;
                let in_dont_care = gt
                    .dont_care
                    .iter()
                    .filter(|d| d.frame as usize == f)
                    .any(|d| intersection_over_area(&b, &d.box2d) > config.dont_care_overlap + EPS);
                remove[pi] = too_small || in_dont_care;
            }
        }
        let pred_kept = preds
            .into_iter()
            .zip(remove)
            .filter(|(_, r)| !r)
            .map(|(p, _)| p)
            .collect();
        let gt_kept = gts
            .into_iter()
            .filter(|g| {
                g.class == class && g.occluded <= filter.max_occlusion && g.truncated <= filter.max_truncation
            })
            .filter(|g| config.similarity != Similarity::Iou2d || g.obj.box2d.is_some())
            .map(|g| g.obj)
            .collect();
        out.push(EvalFrame {
            gt: gt_kept,
            pred: pred_kept,
        });
    }
    EvalSequence {
        name: name.to_string(),
        frames: out,
    }
}

/// Tracking quality for one class over a set of sequences. Percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingMetrics {
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    /// `None` when there is no ground truth.
    pub mota: Option<f64>,
    pub motp: f64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub idsw: u64,
    pub gt_count: u64,
    /// HOTA was defined vacuously (no ground truth and no predictions).
    pub hota_vacuous: bool,
}

pub fn evaluate(sequences: &[EvalSequence], config: &MatchingConfig) -> TrackingMetrics {
    let clear = compute_clear(sequences, config);
    let hota = compute_hota(sequences, config);
    TrackingMetrics {
        hota: hota.hota,
        det_a: hota.det_a,
        ass_a: hota.ass_a,
        mota: clear.mota,
        motp: clear.motp,
        fp: clear.fp,
        fn_: clear.fn_,
        idsw: clear.idsw,
        gt_count: clear.gt_count,
        hota_vacuous: hota.vacuous,
    }
}

//! CLEAR MOT: MOTA, MOTP and identity switches.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EvalSequence, MatchingConfig, EPS};
use crate::assignment;

/// Matches that continue the previous frame's pairing get this bonus so the
/// assignment prefers keeping identities over a marginally better overlap.
const CONTINUITY_BONUS: f64 = 1000.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClearResult {
    /// Percent; `None` when the sequences contain no ground truth.
    pub mota: Option<f64>,
    /// Mean similarity of matched pairs, percent. Zero without matches.
    pub motp: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub idsw: u64,
    pub gt_count: u64,
    pub similarity_sum: f64,
}

impl ClearResult {
    fn finish(mut self) -> Self {
        self.mota = (self.gt_count > 0).then(|| {
            100.0 * (self.tp as f64 - self.fp as f64 - self.idsw as f64) / self.gt_count as f64
        });
        self.motp = if self.tp > 0 {
            100.0 * self.similarity_sum / self.tp as f64
        } else {
            0.0
        };
        self
    }
}

pub fn compute_clear_sequence(seq: &EvalSequence, config: &MatchingConfig) -> ClearResult {
    let mut r = ClearResult::default();
    // Last tracker id each ground-truth id was matched to, at any time.
    let mut last_match: HashMap<u64, u64> = HashMap::new();
    // Pairing from the last frame that had both ground truth and predictions.
    let mut previous: HashMap<u64, u64> = HashMap::new();
    for frame in &seq.frames {
        r.gt_count += frame.gt.len() as u64;
        if frame.gt.is_empty() || frame.pred.is_empty() {
            r.fp += frame.pred.len() as u64;
            r.fn_ += frame.gt.len() as u64;
            continue;
        }
        let sim = frame.similarity(config.similarity);
        let score: Vec<Vec<f64>> = sim
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &s)| {
                        if s < config.clear_threshold - EPS {
                            0.0
                        } else {
                            let cont = previous.get(&frame.gt[i].id) == Some(&frame.pred[j].id);
                            s + if cont { CONTINUITY_BONUS } else { 0.0 }
                        }
                    })
                    .collect()
            })
            .collect();
        let matches = assignment::maximize_gated(&score, EPS);
        let mut current = HashMap::with_capacity(matches.len());
        for &(i, j) in &matches {
            let g = frame.gt[i].id;
            let p = frame.pred[j].id;
            if let Some(&prev) = last_match.get(&g) {
                if prev != p {
                    r.idsw += 1;
                }
            }
            last_match.insert(g, p);
            current.insert(g, p);
            r.similarity_sum += sim[i][j];
        }
        let m = matches.len() as u64;
        r.tp += m;
        r.fn_ += frame.gt.len() as u64 - m;
        r.fp += frame.pred.len() as u64 - m;
        previous = current;
    }
    r.finish()
}

/// CLEAR over several sequences; counts are summed.
pub fn compute_clear(sequences: &[EvalSequence], config: &MatchingConfig) -> ClearResult {
    let mut total = ClearResult::default();
    for seq in sequences {
        let r = compute_clear_sequence(seq, config);
        total.tp += r.tp;
        total.fp += r.fp;
        total.fn_ += r.fn_;
        total.idsw += r.idsw;
        total.gt_count += r.gt_count;
        total.similarity_sum += r.similarity_sum;
    }
    total.finish()
}

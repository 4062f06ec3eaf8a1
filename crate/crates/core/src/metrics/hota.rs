//! Higher Order Tracking Accuracy.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EvalSequence, MatchingConfig, EPS};
use crate::assignment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotaAlpha {
    pub alpha: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Fractions in [0, 1].
    pub det_a: f64,
    pub ass_a: f64,
    pub hota: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HotaResult {
    /// Averages over the alpha thresholds, in percent.
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub per_alpha: Vec<HotaAlpha>,
    /// No ground truth and no predictions: reported as 100 by convention.
    pub vacuous: bool,
}

fn dense_ids<'a>(ids: impl Iterator<Item = &'a u64>) -> HashMap<u64, usize> {
    let mut map = HashMap::new();
    for &id in ids {
        let n = map.len();
        map.entry(id).or_insert(n);
    }
    map
}

pub fn compute_hota_sequence(seq: &EvalSequence, config: &MatchingConfig) -> HotaResult {
    combine(&[seq_counts(seq, config)], &config.hota_alphas)
}

pub fn compute_hota(sequences: &[EvalSequence], config: &MatchingConfig) -> HotaResult {
    let counts: Vec<_> = sequences.iter().map(|s| seq_counts(s, config)).collect();
    combine(&counts, &config.hota_alphas)
}

/// Per-alpha TP/FN/FP and the TP-weighted association sum of one sequence.
struct SeqCounts {
    tp: Vec<u64>,
    fn_: Vec<u64>,
    fp: Vec<u64>,
    ass_sum: Vec<f64>,
}

fn seq_counts(seq: &EvalSequence, config: &MatchingConfig) -> SeqCounts {
    let alphas = &config.hota_alphas;
    let na = alphas.len();
    let gt_ids = dense_ids(seq.frames.iter().flat_map(|f| f.gt.iter().map(|o| &o.id)));
    let pr_ids = dense_ids(seq.frames.iter().flat_map(|f| f.pred.iter().map(|o| &o.id)));
    let (ng, np) = (gt_ids.len(), pr_ids.len());

    let sims: Vec<Vec<Vec<f64>>> = seq.frames.iter().map(|f| f.similarity(config.similarity)).collect();

    // Global alignment between every ground-truth and predicted id.
    let mut potential = vec![vec![0.0; np]; ng];
    let mut gt_count = vec![0.0; ng];
    let mut pr_count = vec![0.0; np];
    for (frame, sim) in seq.frames.iter().zip(&sims) {
        let row_sum: Vec<f64> = sim.iter().map(|r| r.iter().sum()).collect();
        let col_sum: Vec<f64> = (0..frame.pred.len()).map(|j| sim.iter().map(|r| r[j]).sum()).collect();
        for (i, g) in frame.gt.iter().enumerate() {
            let gi = gt_ids[&g.id];
            gt_count[gi] += 1.0;
            for (j, p) in frame.pred.iter().enumerate() {
                let denom = row_sum[i] + col_sum[j] - sim[i][j];
                if denom > EPS {
                    potential[gi][pr_ids[&p.id]] += sim[i][j] / denom;
                }
            }
        }
        for p in &frame.pred {
            pr_count[pr_ids[&p.id]] += 1.0;
        }
    }
    let alignment: Vec<Vec<f64>> = (0..ng)
        .map(|i| {
            (0..np)
                .map(|j| potential[i][j] / (gt_count[i] + pr_count[j] - potential[i][j]))
                .collect()
        })
        .collect();

    let mut c = SeqCounts {
        tp: vec![0; na],
        fn_: vec![0; na],
        fp: vec![0; na],
        ass_sum: vec![0.0; na],
    };
    let mut matches_count = vec![vec![vec![0.0; np]; ng]; na];
    for (frame, sim) in seq.frames.iter().zip(&sims) {
        let (n_gt, n_pr) = (frame.gt.len() as u64, frame.pred.len() as u64);
        if n_gt == 0 || n_pr == 0 {
            for a in 0..na {
                c.fn_[a] += n_gt;
                c.fp[a] += n_pr;
            }
            continue;
        }
        let gi: Vec<usize> = frame.gt.iter().map(|o| gt_ids[&o.id]).collect();
        let pj: Vec<usize> = frame.pred.iter().map(|o| pr_ids[&o.id]).collect();
        let score: Vec<Vec<f64>> = sim
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, &s)| alignment[gi[i]][pj[j]] * s).collect())
            .collect();
        let pairs = assignment::maximize(&score);
        for (a, &alpha) in alphas.iter().enumerate() {
            let mut m = 0;
            for &(i, j) in &pairs {
                if sim[i][j] >= alpha - EPS {
                    m += 1;
                    matches_count[a][gi[i]][pj[j]] += 1.0;
                }
            }
            c.tp[a] += m;
            c.fn_[a] += n_gt - m;
            c.fp[a] += n_pr - m;
        }
    }
    for a in 0..na {
        let mc = &matches_count[a];
        let mut sum = 0.0;
        for i in 0..ng {
            for j in 0..np {
                if mc[i][j] > 0.0 {
                    let ass = mc[i][j] / (gt_count[i] + pr_count[j] - mc[i][j]).max(1.0);
                    sum += mc[i][j] * ass;
                }
            }
        }
        c.ass_sum[a] = sum;
    }
    c
}

fn combine(counts: &[SeqCounts], alphas: &[f64]) -> HotaResult {
    let total_objects: u64 = counts.iter().map(|c| c.tp[0] + c.fn_[0] + c.fp[0]).sum();
    if total_objects == 0 {
        return HotaResult {
            hota: 100.0,
            det_a: 100.0,
            ass_a: 100.0,
            per_alpha: alphas
                .iter()
                .map(|&alpha| HotaAlpha {
                    alpha,
                    tp: 0,
                    fp: 0,
                    fn_: 0,
                    det_a: 1.0,
                    ass_a: 1.0,
                    hota: 1.0,
                })
                .collect(),
            vacuous: true,
        };
    }
    let per_alpha: Vec<HotaAlpha> = alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let tp: u64 = counts.iter().map(|c| c.tp[a]).sum();
            let fn_: u64 = counts.iter().map(|c| c.fn_[a]).sum();
            let fp: u64 = counts.iter().map(|c| c.fp[a]).sum();
            let ass_sum: f64 = counts.iter().map(|c| c.ass_sum[a]).sum();
            let det_a = tp as f64 / ((tp + fn_ + fp) as f64).max(1.0);
            let ass_a = ass_sum / (tp as f64).max(1.0);
            HotaAlpha {
                alpha,
                tp,
                fp,
                fn_,
                det_a,
                ass_a,
                hota: (det_a * ass_a).sqrt(),
            }
        })
        .collect();
    let mean = |f: fn(&HotaAlpha) -> f64| 100.0 * per_alpha.iter().map(f).sum::<f64>() / per_alpha.len() as f64;
    HotaResult {
        hota: mean(|h| h.hota),
        det_a: mean(|h| h.det_a),
        ass_a: mean(|h| h.ass_a),
        per_alpha,
        vacuous: false,
    }
}

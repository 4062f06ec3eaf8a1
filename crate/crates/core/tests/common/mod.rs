//! Shared test support: brute-force metric oracles and random instances.
//!
//! The oracles are written from the metric definitions directly — explicit
//! enumeration of matchings and hash-map bookkeeping — and share no code
//! with the library beyond the input types and the box IoU.

#![allow(dead_code)]

pub mod cases;

use std::collections::HashMap;

use framedrop::geometry::iou_2d;
use framedrop::metrics::{EvalFrame, EvalObject, EvalSequence};
use framedrop::Box2D;
use rand::Rng;

/// Every injective partial map from rows to columns, as `Vec<Option<col>>`.
pub fn all_matchings(rows: usize, cols: usize) -> Vec<Vec<Option<usize>>> {
    fn rec(r: usize, rows: usize, cols: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if r == rows {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        rec(r + 1, rows, cols, used, cur, out);
        cur.pop();
        for c in 0..cols {
            if !used[c] {
                used[c] = true;
                cur.push(Some(c));
                rec(r + 1, rows, cols, used, cur, out);
                cur.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, rows, cols, &mut vec![false; cols], &mut Vec::new(), &mut out);
    out
}

/// Best total over matchings of exactly `min(rows, cols)` pairs.
pub fn brute_force_full_max(score: &[Vec<f64>]) -> (f64, Vec<Option<usize>>) {
    let rows = score.len();
    let cols = score.first().map_or(0, Vec::len);
    let k = rows.min(cols);
    let mut best = (f64::NEG_INFINITY, vec![None; rows]);
    for m in all_matchings(rows, cols) {
        if m.iter().filter(|c| c.is_some()).count() != k {
            continue;
        }
        let total: f64 = m.iter().enumerate().filter_map(|(r, c)| c.map(|c| score[r][c])).sum();
        if total > best.0 {
            best = (total, m);
        }
    }
    best
}

fn sim_matrix(f: &EvalFrame) -> Vec<Vec<f64>> {
    f.gt.iter()
        .map(|g| f.pred.iter().map(|p| iou_2d(g.box2d.as_ref().unwrap(), p.box2d.as_ref().unwrap())).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleHota {
    pub hota: f64,
    pub det_a: f64,
    pub ass_a: f64,
    pub per_alpha_hota: Vec<f64>,
}

/// HOTA of one sequence, fractions in [0, 1] averaged over `alphas`.
pub fn oracle_hota(seq: &EvalSequence, alphas: &[f64]) -> OracleHota {
    let eps = f64::EPSILON;
    // Per-id frame counts and soft co-occurrence.
    let mut gt_n: HashMap<u64, f64> = HashMap::new();
    let mut pr_n: HashMap<u64, f64> = HashMap::new();
    let mut co: HashMap<(u64, u64), f64> = HashMap::new();
    for f in &seq.frames {
        let s = sim_matrix(f);
        for g in &f.gt {
            *gt_n.entry(g.id).or_default() += 1.0;
        }
        for p in &f.pred {
            *pr_n.entry(p.id).or_default() += 1.0;
        }
        for (i, g) in f.gt.iter().enumerate() {
            for (j, p) in f.pred.iter().enumerate() {
                let row: f64 = s[i].iter().sum();
                let col: f64 = s.iter().map(|r| r[j]).sum();
                let d = row + col - s[i][j];
                if d > eps {
                    *co.entry((g.id, p.id)).or_default() += s[i][j] / d;
                }
            }
        }
    }
    let align = |g: u64, p: u64| {
        let c = co.get(&(g, p)).copied().unwrap_or(0.0);
        c / (gt_n[&g] + pr_n[&p] - c)
    };

    let mut det = Vec::new();
    let mut ass = Vec::new();
    for &alpha in alphas {
        let (mut tp, mut fnn, mut fp) = (0.0, 0.0, 0.0);
        let mut pairs: HashMap<(u64, u64), f64> = HashMap::new();
        for f in &seq.frames {
            if f.gt.is_empty() || f.pred.is_empty() {
                fnn += f.gt.len() as f64;
                fp += f.pred.len() as f64;
                continue;
            }
            let s = sim_matrix(f);
            let score: Vec<Vec<f64>> = (0..f.gt.len())
                .map(|i| (0..f.pred.len()).map(|j| align(f.gt[i].id, f.pred[j].id) * s[i][j]).collect())
                .collect();
            let (_, m) = brute_force_full_max(&score);
            let mut hits = 0.0;
            for (i, c) in m.iter().enumerate() {
                if let Some(j) = *c {
                    if s[i][j] >= alpha - eps {
                        hits += 1.0;
                        *pairs.entry((f.gt[i].id, f.pred[j].id)).or_default() += 1.0;
                    }
                }
            }
            tp += hits;
            fnn += f.gt.len() as f64 - hits;
            fp += f.pred.len() as f64 - hits;
        }
        let mut ass_sum = 0.0;
        for (&(g, p), &n) in &pairs {
            ass_sum += n * n / (gt_n[&g] + pr_n[&p] - n);
        }
        det.push(if tp + fnn + fp > 0.0 { tp / (tp + fnn + fp) } else { 0.0 });
        ass.push(if tp > 0.0 { ass_sum / tp } else { 0.0 });
    }
    let per_alpha_hota: Vec<f64> = det.iter().zip(&ass).map(|(d, a)| (d * a).sqrt()).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    OracleHota {
        hota: mean(&per_alpha_hota),
        det_a: mean(&det),
        ass_a: mean(&ass),
        per_alpha_hota,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleClear {
    pub mota: Option<f64>,
    pub motp: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
}

/// CLEAR MOT with identity-continuity preference, fractions.
pub fn oracle_clear(seq: &EvalSequence, threshold: f64) -> OracleClear {
    let eps = f64::EPSILON;
    let mut last: HashMap<u64, u64> = HashMap::new();
    let mut prev: HashMap<u64, u64> = HashMap::new();
    let (mut tp, mut fp, mut fnn, mut idsw, mut gt_total) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut sim_sum = 0.0;
    for f in &seq.frames {
        gt_total += f.gt.len() as u64;
        let s = sim_matrix(f);
        let score = |i: usize, j: usize| {
            if s[i][j] < threshold - eps {
                0.0
            } else if prev.get(&f.gt[i].id) == Some(&f.pred[j].id) {
                1000.0 + s[i][j]
            } else {
                s[i][j]
            }
        };
        // Best partial matching over pairs with positive score.
        let mut best = (0.0, vec![None; f.gt.len()]);
        for m in all_matchings(f.gt.len(), f.pred.len()) {
            if m.iter().enumerate().any(|(i, c)| c.is_some_and(|j| score(i, j) <= 0.0)) {
                continue;
            }
            let total: f64 = m.iter().enumerate().filter_map(|(i, c)| c.map(|j| score(i, j))).sum();
            if total > best.0 {
                best = (total, m);
            }
        }
        let mut current = HashMap::new();
        let mut hits = 0;
        for (i, c) in best.1.iter().enumerate() {
            let Some(j) = *c else { continue };
            hits += 1;
            let (g, p) = (f.gt[i].id, f.pred[j].id);
            if last.get(&g).is_some_and(|&q| q != p) {
                idsw += 1;
            }
            last.insert(g, p);
            current.insert(g, p);
            sim_sum += s[i][j];
        }
        tp += hits;
        fnn += f.gt.len() as u64 - hits;
        fp += f.pred.len() as u64 - hits;
        if !(f.gt.is_empty() || f.pred.is_empty()) {
            prev = current;
        }
    }
    OracleClear {
        mota: (gt_total > 0).then(|| (tp as f64 - fp as f64 - idsw as f64) / gt_total as f64),
        motp: if tp > 0 { sim_sum / tp as f64 } else { 0.0 },
        tp,
        fp,
        fn_: fnn,
        idsw,
    }
}

fn jittered(b: &Box2D, rng: &mut impl Rng, scale: f64) -> Box2D {
    let x0 = b.x_min + rng.random_range(-scale..scale);
    let y0 = b.y_min + rng.random_range(-scale..scale);
    let x1 = (b.x_max + rng.random_range(-scale..scale)).max(x0 + 1.0);
    let y1 = (b.y_max + rng.random_range(-scale..scale)).max(y0 + 1.0);
    Box2D::new(x0, y0, x1, y1).unwrap()
}

/// A small random tracking instance: up to `max_tracks` ground-truth objects
/// over up to `max_frames` frames, with predictions that jitter, miss, swap
/// identities and hallucinate.
pub fn random_instance(rng: &mut impl Rng, max_tracks: usize, max_frames: usize) -> EvalSequence {
    let n_gt = rng.random_range(0..=max_tracks);
    let frames = rng.random_range(1..=max_frames);
    let starts: Vec<(f64, f64, f64, f64)> = (0..n_gt)
        .map(|_| {
            (
                rng.random_range(0.0..300.0),
                rng.random_range(0.0..100.0),
                rng.random_range(-8.0..8.0),
                rng.random_range(20.0..80.0),
            )
        })
        .collect();
    let lifetimes: Vec<(usize, usize)> = (0..n_gt)
        .map(|_| {
            let a = rng.random_range(0..frames);
            let b = rng.random_range(a..frames);
            (a, b)
        })
        .collect();
    // Tracker ids per gt; occasionally reassigned.
    let mut pred_id: Vec<u64> = (0..n_gt as u64).map(|i| 100 + i).collect();
    let mut next_id = 200;
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let mut gt = Vec::new();
        let mut pred = Vec::new();
        for k in 0..n_gt {
            if !(lifetimes[k].0..=lifetimes[k].1).contains(&t) {
                continue;
            }
            let (x, y, v, size) = starts[k];
            let x = x + v * t as f64;
            let b = Box2D::new(x, y, x + size, y + size * 0.8).unwrap();
            gt.push(EvalObject::from_box2d(k as u64, b));
            if rng.random::<f64>() < 0.1 {
                pred_id[k] = next_id;
                next_id += 1;
            }
            if rng.random::<f64>() < 0.1 && n_gt > 1 {
                let other = rng.random_range(0..n_gt);
                pred_id.swap(k, other);
            }
            if rng.random::<f64>() < 0.85 {
                let scale = rng.random_range(0.5..size * 0.4);
                pred.push(EvalObject::from_box2d(pred_id[k], jittered(&b, rng, scale)));
            }
        }
        // Identity swaps can duplicate an id within a frame; keep the first.
        let mut seen = std::collections::HashSet::new();
        pred.retain(|p| seen.insert(p.id));
        if rng.random::<f64>() < 0.3 {
            let x = rng.random_range(0.0..400.0);
            let b = Box2D::new(x, 50.0, x + 40.0, 90.0).unwrap();
            pred.push(EvalObject::from_box2d(900 + rng.random_range(0..3), b));
            let mut seen = std::collections::HashSet::new();
            pred.retain(|p| seen.insert(p.id));
        }
        out.push(EvalFrame { gt, pred });
    }
    EvalSequence {
        name: "random".into(),
        frames: out,
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
